"""Brute-force reference implementations, written independently of the package.

Plain Python loops over tuples; slow but obviously correct at 8³-16³ sizes.
"""

import math
from collections import Counter


def knn_oracle(query, reference, k):
    """Full sort on (squared distance, coordinate)."""
    ref = sorted({tuple(map(int, c)) for c in reference})
    keyed = sorted(ref, key=lambda c: (sum((a - b) ** 2 for a, b in zip(c, query)), c))
    return keyed[:k]


def aabb_oracle(coords):
    cs = [tuple(c) for c in coords]
    lo = tuple(min(c[i] for c in cs) for i in range(3))
    hi = tuple(max(c[i] for c in cs) for i in range(3))
    return lo, hi


def majority_vote_oracle(points, labels, resolution):
    """Dict coord -> label: per-voxel histogram, smallest id on ties."""
    buckets = {}
    for p, lab in zip(points, labels):
        v = tuple(min(int(math.floor(x * resolution)), resolution - 1) for x in p)
        v = tuple(max(0, c) for c in v)
        buckets.setdefault(v, Counter())[int(lab)] += 1
    out = {}
    for v, counts in buckets.items():
        best = max(counts.values())
        out[v] = min(l for l, c in counts.items() if c == best)
    return out


def downscale_oracle(members, resolution, factor, rho):
    """Set of coarse cells whose block membership fraction is >= rho."""
    counts = Counter(tuple(c // factor for c in m) for m in members)
    r1 = resolution // factor
    out = set()
    for x in range(r1):
        for y in range(r1):
            for z in range(r1):
                if counts.get((x, y, z), 0) / factor**3 >= rho:
                    out.add((x, y, z))
    return out


def chamfer_oracle(a, b):
    def one_way(p, q):
        return sum(min(math.dist(x, y) for y in q) for x in p) / len(p)

    return 0.5 * (one_way(a, b) + one_way(b, a))


def sphere_count_oracle(resolution, radius):
    c = resolution / 2.0
    n = 0
    for x in range(resolution):
        for y in range(resolution):
            for z in range(resolution):
                if (x + 0.5 - c) ** 2 + (y + 0.5 - c) ** 2 + (z + 0.5 - c) ** 2 <= radius**2:
                    n += 1
    return n


def random_region_instance(rng, resolution=8, min_size=20, max_size=200, max_parts=4):
    """Random asset on the cube with a random split into 2..max_parts labeled parts.

    Returns (labels dict coord -> part id, edit part ids).
    """
    n = int(rng.integers(min_size, max_size + 1))
    flat = rng.choice(resolution**3, size=n, replace=False)
    coords = [tuple(int(v) for v in divmod_3(f, resolution)) for f in flat]
    parts = int(rng.integers(2, max_parts + 1))
    labels = {c: int(rng.integers(parts)) for c in coords}
    present = sorted(set(labels.values()))
    k_edit = int(rng.integers(1, len(present) + 1))
    edit_ids = sorted(rng.choice(present, size=k_edit, replace=False).tolist())
    return labels, edit_ids


def divmod_3(flat, r):
    x, rest = divmod(int(flat), r * r)
    y, z = divmod(rest, r)
    return x, y, z


def split_instance(labels, edit_ids):
    """Oracle-side partition: asset list, p_edit set, preserved part id -> voxels."""
    asset = sorted(labels)
    p_edit = {c for c, l in labels.items() if l in edit_ids}
    pres = {}
    for c, l in sorted(labels.items()):
        if l not in edit_ids:
            pres.setdefault(l, []).append(c)
    return asset, p_edit, pres
