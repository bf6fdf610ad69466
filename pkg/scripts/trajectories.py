"""Write the case-study trajectory CSVs used for plotting.

    python scripts/trajectories.py [--out results/trajectories]

Produces one open-loop CSV per reference initial state of the 2-state system
and one closed-loop CSV of the 3-state system under uniform disturbance.
"""

import argparse
from pathlib import Path

import numpy as np

from converse_hji.cases import OPEN_LOOP_STATES, sys_a_spec, sys_b_spec
from converse_hji.design import synthesize
from converse_hji.sim import SimConfig, integrate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/trajectories")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    sys_a = synthesize(sys_a_spec())
    for i, x0 in enumerate(OPEN_LOOP_STATES, 1):
        rec = integrate(sys_a, SimConfig(x0=x0, T=2.0))
        with open(out / f"sysA_open_loop_{i}.csv", "w") as fh:
            rec.write_csv(fh)
        print(f"sysA x0={x0}: V(0)={rec.V[0]:.4g}  V(2)={rec.V[-1]:.3e}")

    sys_b = synthesize(sys_b_spec())
    cfg = SimConfig(x0=(5.0, 4.0, -1.0), T=10.0, control_mode="optimal",
                    disturbance_mode="uniform", lo=-5.0, hi=5.0, seed=args.seed)
    rec = integrate(sys_b, cfg)
    with open(out / "sysB_closed_loop.csv", "w") as fh:
        rec.write_csv(fh)
    # first time |x| drops below 1e-2
    small = np.flatnonzero(np.linalg.norm(rec.x, axis=1) < 1e-2)
    settle = rec.t[small[0]] if small.size else float("nan")
    print(f"sysB closed loop: |x(10)|={np.linalg.norm(rec.x[-1]):.3e}  settles below 1e-2 at t={settle:.2f}")


if __name__ == "__main__":
    main()
