"""Run the full verification pass and the cost identity on both case studies.

    python scripts/verify_cases.py [--samples 1000] [--seed 42]
"""

import argparse
import json

from converse_hji.analysis import verify_system
from converse_hji.cases import sys_a_spec, sys_b_spec
from converse_hji.design import synthesize
from converse_hji.sim import cost_identity_check

COST_STATES = {"sysA-2d": (1.0, 0.0), "sysB-3d": (0.5, 0.4, -0.1)}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--json", action="store_true", help="dump full reports")
    args = ap.parse_args()

    ok = True
    for name, factory in (("sysA-2d", sys_a_spec), ("sysB-3d", sys_b_spec)):
        system = synthesize(factory())
        rep = verify_system(system, samples=args.samples, seed=args.seed)
        cost = cost_identity_check(system, COST_STATES[name], 2.0)
        ok &= rep["passed"] and cost.holds
        print(f"{name}: k={system.k:.6g}  hji={rep['hji_residual']['worst']:.2e}  "
              f"oracle={rep['inf_sup_oracle']['worst']:.2e}  "
              f"max inf-sup={rep['rclf']['max_inf_sup']:.4g}  violations={rep['violation_count']}  "
              f"cost dev={cost.deviation:.2e}")
        if args.json:
            print(json.dumps(rep, indent=2, default=float))
    raise SystemExit(0 if ok else 1)


if __name__ == "__main__":
    main()
