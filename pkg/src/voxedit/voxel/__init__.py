from .geometry import (
    KnnIndex,
    aabb_of,
    chamfer_distance,
    downscale_mask,
    knn,
    majority_vote_labels,
    point_to_voxel,
    voxel_centers,
)
from .grid import (
    STAGE1_RESOLUTION,
    STAGE2_RESOLUTION,
    Aabb,
    GridDims,
    LatentGrid,
    PartLabeling,
    SoftMask,
    VoxelCoord,
    VoxelMask,
    as_coord_array,
    sort_coords,
)
from .io import export_ply, load_grid, load_mask, read_ply_coords, save_grid, save_mask

__all__ = [
    "Aabb",
    "GridDims",
    "KnnIndex",
    "LatentGrid",
    "PartLabeling",
    "STAGE1_RESOLUTION",
    "STAGE2_RESOLUTION",
    "SoftMask",
    "VoxelCoord",
    "VoxelMask",
    "aabb_of",
    "as_coord_array",
    "chamfer_distance",
    "downscale_mask",
    "export_ply",
    "knn",
    "load_grid",
    "load_mask",
    "majority_vote_labels",
    "point_to_voxel",
    "read_ply_coords",
    "save_grid",
    "save_mask",
    "sort_coords",
    "voxel_centers",
]
