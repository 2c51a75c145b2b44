"""Global error of Euler and RF-Solver on the linear field dx/dt = x.

Integrates t: 0 -> 1 from x = 1 with N and 2N uniform steps and prints the
error ratio e(N) / e(2N); first-order methods give ~2, second-order ~4.
"""

import argparse

import numpy as np

from voxedit.flow import Condition, TimeSchedule, invert, make_linear_field


def endpoint_error(stepper: str, steps: int, rate: float = 1.0) -> float:
    field = make_linear_field(rate)
    # inversion runs t: 0 -> 1, so the noise end holds x(1)
    traj = invert(np.ones((1, 1)), field, Condition.unconditional(), TimeSchedule.uniform(steps), stepper)
    return abs(float(traj.noise[0, 0]) - float(field.exact(1.0, 1.0)))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, nargs="+", default=[25, 50, 100])
    args = ap.parse_args()
    print(f"{'N':>5} {'stepper':>10} {'e(N)':>12} {'e(2N)':>12} {'ratio':>8}")
    for n in args.steps:
        for name in ("euler", "rf_solver"):
            e1, e2 = endpoint_error(name, n), endpoint_error(name, 2 * n)
            print(f"{n:>5} {name:>10} {e1:>12.4e} {e2:>12.4e} {e1 / e2:>8.3f}")


if __name__ == "__main__":
    main()
