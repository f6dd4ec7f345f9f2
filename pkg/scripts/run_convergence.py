"""Manufactured-solution convergence study; prints the rate table and writes CSV/gnuplot files.

    python scripts/run_convergence.py --case sine --levels 6 12 24 48 --r 2 4 --out out/convergence
"""

import argparse
import os

from cascade_stokes import EllipseProfile, build_geometry, convergence_study, make_case


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--case", default="sine", choices=["uniform", "sine", "corner-compatible"])
    ap.add_argument("--levels", type=int, nargs="+", default=[6, 12, 24, 48], help="cells per unit length")
    ap.add_argument("--r", type=float, nargs="+", default=[2.0, 4.0])
    ap.add_argument("--nu", type=float, default=1.0)
    ap.add_argument("--blade", action="store_true", help="add the elliptic profile (unstructured meshes)")
    ap.add_argument("--out", default="out/convergence")
    args = ap.parse_args()

    if args.blade:
        geometry = build_geometry(1.0, 2.0, profile=EllipseProfile((1.0, 0.5), (0.3, 0.1)))
        band = (0.7 - geometry.delta_margin / 2, 1.3 + geometry.delta_margin / 2)
        case = make_case(args.case, nu=args.nu, band=band if args.case == "corner-compatible" else None)
    else:
        geometry = build_geometry(1.0, 2.0)
        case = make_case(args.case, nu=args.nu)
    study = convergence_study(case, geometry, [1.0 / n for n in args.levels], r_values=tuple(args.r))

    os.makedirs(args.out, exist_ok=True)
    study.write_csv(os.path.join(args.out, "rates.csv"))
    study.write_gnuplot(args.out)
    cols = [c for c in study.columns if c.startswith("err_")] + ["traction_residual"]
    print(f"{'h':>10} {'triangles':>9} " + " ".join(f"{c:>16}" for c in cols))
    for row in study.rows:
        print(f"{row['h']:10.5f} {row['n_triangles']:9d} " + " ".join(f"{row[c]:16.6e}" for c in cols))
    print("final rates: " + ", ".join(f"{c} {study.final_rate(c):.3f}" for c in cols))


if __name__ == "__main__":
    main()
