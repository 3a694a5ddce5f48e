"""Time the compiled and pure-Python enumeration kernels on the same input.

    python benchmarks/bench_kernel.py [--manifold N2_hp] [--cutoff 3.0] [--repeat 3]

Both backends must return identical trees; the script checks that before timing.
"""

from __future__ import annotations

import argparse
import math
import time
from pathlib import Path

import numpy as np

from orthospec import kernel
from orthospec.cli import parse_manifold
from orthospec.dirichlet import auto_pairings, build_domain
from orthospec.spectrum import tiling_bound

DATA = Path(__file__).resolve().parents[1] / "src" / "orthospec" / "data"


def _inputs(name: str, cutoff: str):
    mf = parse_manifold(DATA / f"{name}.mfd")
    D = build_domain(auto_pairings(list(mf.centred_generators().values())))
    mats = np.array([g.to_numpy() for g in D.pairings])
    err = np.array([g.max_radius() * 4 + 1e-15 for g in D.pairings])
    bound = math.cosh(float(tiling_bound(D.spine_radius, cutoff).ball.upper()))
    return mats, err, bound


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--manifold", default="N2_hp")
    ap.add_argument("--cutoff", default="3.0")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    mats, err, bound = _inputs(args.manifold, args.cutoff)
    impls = kernel.backends()
    if "cython" not in impls:
        print("compiled kernel not built; timing the Python backend only")

    ref = None
    times = {}
    for name, fn in impls.items():
        best = math.inf
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            out = fn(mats, err, bound, 0.5)
            best = min(best, time.perf_counter() - t0)
        if ref is None:
            ref = out
        elif not (np.array_equal(out[2], ref[2]) and np.array_equal(out[3], ref[3])):
            raise SystemExit(f"{name} disagrees with the reference backend")
        times[name] = best
        print(f"{name:8s} {len(out[0]):8d} elements  {best * 1e3:10.1f} ms")
    if len(times) == 2:
        print(f"speedup  {times['python'] / times['cython']:.1f}x")


if __name__ == "__main__":
    main()
