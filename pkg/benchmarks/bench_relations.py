"""Time relation_matrix and first_witness on the numba and numpy paths.

Usage: python3 benchmarks/bench_relations.py [--sizes 8,64,512] [--repeat 20]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from vismc import geometry
from vismc.vm import VmConfig


def random_boxes(rng: np.random.Generator, n: int) -> np.ndarray:
    xy = rng.uniform(0.0, 0.8, size=(n, 2))
    wh = rng.uniform(0.02, 0.2, size=(n, 2))
    return np.hstack([xy, np.minimum(xy + wh, 1.0)])


def bench(sizes, repeat, seed=0):
    cfg = VmConfig()
    rng = np.random.default_rng(seed)
    rows = []
    for n in sizes:
        a, b = random_boxes(rng, n), random_boxes(rng, n)
        for backend in geometry.available_backends():
            # warm-up compiles the numba kernels outside the timed region
            geometry.relation_matrix("near", a, b, cfg, backend=backend)
            geometry.first_witness("inside", a, b, cfg, backend=backend)
            for rel in ("near", "on", "inside"):
                t = timeit.timeit(lambda: geometry.relation_matrix(rel, a, b, cfg, backend=backend), number=repeat)
                rows.append((n, backend, f"matrix:{rel}", t / repeat))
            t = timeit.timeit(lambda: geometry.first_witness("inside", a, b, cfg, backend=backend), number=repeat)
            rows.append((n, backend, "witness:inside", t / repeat))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="8,64,512")
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    rows = bench(sizes, args.repeat)
    print(f"{'n':>5}  {'backend':<7}  {'op':<16}  {'mean_us':>10}")
    for n, backend, op, secs in rows:
        print(f"{n:>5}  {backend:<7}  {op:<16}  {secs * 1e6:>10.1f}")


if __name__ == "__main__":
    main()
