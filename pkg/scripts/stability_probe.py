"""Empirical stability constant (||u||_{1,r} + ||p||_r) / data norm over random smooth data.

    python scripts/stability_probe.py --seeds 10 --h 0.2 0.1 0.05 --r 1.5 2 4
"""

import argparse
import os

from cascade_stokes import EllipseProfile, build_geometry
from cascade_stokes.output import write_csv_rows
from cascade_stokes.verify import stability_probe


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--h", type=float, nargs="+", default=[0.2, 0.1, 0.05])
    ap.add_argument("--r", type=float, nargs="+", default=[1.5, 2.0, 4.0])
    ap.add_argument("--no-blade", action="store_true")
    ap.add_argument("--out", default="out/stability")
    args = ap.parse_args()

    profile = None if args.no_blade else EllipseProfile((1.0, 0.5), (0.3, 0.1))
    geometry = build_geometry(1.0, 2.0, profile=profile)
    rows = stability_probe(geometry, args.h, range(args.seeds), args.r)
    os.makedirs(args.out, exist_ok=True)
    write_csv_rows(os.path.join(args.out, "stability.csv"), rows)
    for row in rows:
        print(f"level {row['level']}  h {row['h']:.4f}  r {row['r']:<4g} max ratio {row['max_ratio']:.5f}")
    last = max(r["level"] for r in rows)
    for r in args.r:
        c0 = next(x["max_ratio"] for x in rows if x["level"] == 0 and x["r"] == r)
        c1 = next(x["max_ratio"] for x in rows if x["level"] == last and x["r"] == r)
        print(f"r = {r:g}: finest / coarsest = {c1 / c0:.4f}")


if __name__ == "__main__":
    main()
