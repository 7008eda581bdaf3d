"""Benchmark: compiled (Cython) vs pure-numpy element kernels.

Runs stiffness/mass element computation and simplex measures on ball meshes
in both backends and prints a timing table.  The numpy fallback is selected
by re-importing the kernel package with CONVEXLAB_PURE_PYTHON=1 in a
subprocess, exactly as a user without the compiled extension would get it.

Usage: python3 benchmarks/bench_assembly.py [--refine N] [--repeat R]
"""
import argparse
import json
import os
import subprocess
import sys

_WORKER = r"""
import json, sys, time
import numpy as np
from convexlab import _kernels
from convexlab import mesh as M

refine, repeat = int(sys.argv[1]), int(sys.argv[2])
results = {"backend": _kernels.BACKEND}
for dim in (2, 3):
    m = M.unit_ball(dim, refine)
    for name, fn, args in [
        ("stiffness", _kernels.stiffness_entries, (m.vertices, m.cells)),
        ("mass", _kernels.mass_entries, (m.vertices, m.cells)),
        ("measures", _kernels.simplex_measures, (m.vertices, m.cells)),
    ]:
        fn(*args)  # warm up
        best = min(
            (lambda t0=time.perf_counter(): (fn(*args), time.perf_counter() - t0))()[1]
            for _ in range(repeat)
        )
        results[f"ball{dim}d/{name}"] = {"cells": len(m.cells), "seconds": best}
print(json.dumps(results))
"""


def run_backend(pure: bool, refine: int, repeat: int) -> dict:
    env = dict(os.environ)
    if pure:
        env["CONVEXLAB_PURE_PYTHON"] = "1"
    else:
        env.pop("CONVEXLAB_PURE_PYTHON", None)
    out = subprocess.run(
        [sys.executable, "-c", _WORKER, str(refine), str(repeat)],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--refine", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    compiled = run_backend(False, args.refine, args.repeat)
    pure = run_backend(True, args.refine, args.repeat)
    print(f"backends: {compiled.pop('backend')} vs {pure.pop('backend')}")
    print(f"{'kernel':<22} {'cells':>8} {'compiled':>12} {'numpy':>12} {'speedup':>8}")
    for key in compiled:
        c, p = compiled[key], pure[key]
        ratio = p["seconds"] / c["seconds"] if c["seconds"] > 0 else float("inf")
        print(f"{key:<22} {c['cells']:>8} {c['seconds']:>12.3e} "
              f"{p['seconds']:>12.3e} {ratio:>7.1f}x")


if __name__ == "__main__":
    main()
