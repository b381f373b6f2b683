#!/usr/bin/env python3
"""Locking study (example 2): errors and rates at lam = 1 vs lam = 1e6.

The displacement has a 1/lam pressure component and a lam-independent body
force, so error constants that blow up with lam indicate volumetric
locking.  Covers the projection operator on rectangles (gamma=-1), the
identity operator on triangles (gamma=0), and the deteriorating
projection-on-triangles combination for contrast.
"""

import argparse
import pathlib
import sys
import time

from gwgfem.cli import RunConfig, run_convergence
from gwgfem.postproc import emit

# (label, mesh, interior, boundary, rb, gamma)
BLOCKS = [
    ("rect_p1_p0_qb", "rect", "p1", "p0", "qb", -1.0),
    ("rect_sin_p0_qb", "rect", "sin", "p0", "qb", -1.0),
    ("rect_cos_p0_qb_gamma0", "rect", "cos", "p0", "qb", 0.0),
    ("rect_sigmoid_p0_qb", "rect", "sigmoid", "p0", "qb", -1.0),
    ("rect_lrelu1_p0_qb", "rect", "lrelu:1.0", "p0", "qb", -1.0),
    ("rect_lrelu01_p0_qb_gamma0", "rect", "lrelu:0.1", "p0", "qb", 0.0),
    ("rect_relu_p0_qb", "rect", "relu", "p0", "qb", -1.0),
    ("rect_relu_p0_qb_gamma0", "rect", "relu", "p0", "qb", 0.0),
    ("tri_p1_p0_qb_gamma0", "tri", "p1", "p0", "qb", 0.0),
    ("tri_p1_p0_id_gamma0", "tri", "p1", "p0", "id", 0.0),
    ("tri_sin_p0_id_gamma0", "tri", "sin", "p0", "id", 0.0),
    ("tri_sigmoid_p0_id_gamma0", "tri", "sigmoid", "p0", "id", 0.0),
]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="results", help="CSV output directory")
    parser.add_argument("--levels", default="8,16,32,64")
    parser.add_argument("--lambdas", default="1,1e6")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--only", help="substring filter on block labels")
    args = parser.parse_args(argv)

    levels = tuple(int(tok) for tok in args.levels.split(","))
    lambdas = [float(tok) for tok in args.lambdas.split(",")]
    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    for label, mesh, interior, boundary, rb, gamma in BLOCKS:
        if args.only and args.only not in label:
            continue
        for lam in lambdas:
            cfg = RunConfig(mesh=mesh, levels=levels, interior=interior,
                            boundary=boundary, rb=rb, gamma=gamma,
                            mu=0.5, lam=lam, example=2, seed=args.seed)
            t0 = time.time()
            report = run_convergence(cfg)
            print(f"== {label}  lam={lam:g}  [{time.time() - t0:.1f}s]")
            print(emit(report, "table"))
            (outdir / f"{label}_lam{lam:g}.csv").write_text(emit(report, "csv"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
