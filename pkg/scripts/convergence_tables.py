#!/usr/bin/env python3
"""Convergence study matrix for the smooth displacement case (example 1).

Runs the deterministic polynomial blocks and the seeded activation-space
blocks on triangular and rectangular meshes, printing an aligned table
per block and writing one CSV per block into --outdir.

Full ladders take a few seconds per block; use --levels 8,16 for a quick
pass.
"""

import argparse
import pathlib
import sys
import time

from gwgfem.cli import RunConfig, run_convergence
from gwgfem.postproc import emit

# (label, mesh, interior, boundary, rb, gamma)
BLOCKS = [
    ("tri_p1_p1", "tri", "p1", "p1", "qb", -1.0),
    ("tri_p1_rm", "tri", "p1", "rm", "qb", -1.0),
    ("tri_p1_p0_divergent", "tri", "p1", "p0", "qb", -1.0),
    ("tri_sin_rm", "tri", "sin", "rm", "qb", -1.0),
    ("tri_sin_p0_divergent", "tri", "sin", "p0", "qb", -1.0),
    ("tri_sigmoid_rm", "tri", "sigmoid", "rm", "qb", -1.0),
    ("tri_sigmoid_p0_divergent", "tri", "sigmoid", "p0", "qb", -1.0),
    ("rect_p1_rm", "rect", "p1", "rm", "qb", -1.0),
    ("rect_p1_p0", "rect", "p1", "p0", "qb", -1.0),
    ("rect_sin_p0", "rect", "sin", "p0", "qb", -1.0),
    ("rect_cos_p0_gamma0", "rect", "cos", "p0", "qb", 0.0),
    ("rect_sigmoid_p0", "rect", "sigmoid", "p0", "qb", -1.0),
    ("rect_lrelu1_p0", "rect", "lrelu:1.0", "p0", "qb", -1.0),
    ("rect_lrelu01_p0_gamma0", "rect", "lrelu:0.1", "p0", "qb", 0.0),
    ("rect_relu_p0", "rect", "relu", "p0", "qb", -1.0),
    ("rect_relu_p0_gamma0", "rect", "relu", "p0", "qb", 0.0),
    ("rect_relu_p0_gamma-2", "rect", "relu", "p0", "qb", -2.0),
]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="results", help="CSV output directory")
    parser.add_argument("--levels", default="8,16,32,64")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--only", help="substring filter on block labels")
    args = parser.parse_args(argv)

    levels = tuple(int(tok) for tok in args.levels.split(","))
    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    for label, mesh, interior, boundary, rb, gamma in BLOCKS:
        if args.only and args.only not in label:
            continue
        cfg = RunConfig(mesh=mesh, levels=levels, interior=interior,
                        boundary=boundary, rb=rb, gamma=gamma,
                        mu=0.5, lam=1.0, example=1, seed=args.seed)
        t0 = time.time()
        report = run_convergence(cfg)
        print(f"== {label}  (mesh={mesh}, V0={interior}, Vb={boundary}, "
              f"Rb={rb}, gamma={gamma:g})  [{time.time() - t0:.1f}s]")
        print(emit(report, "table"))
        (outdir / f"{label}.csv").write_text(emit(report, "csv"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
