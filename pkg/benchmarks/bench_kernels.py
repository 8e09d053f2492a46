"""Compare the numba and numpy backends of the batched kernels.

Usage::

    python3 benchmarks/bench_kernels.py --sizes 100 1000 10000 --repeat 5

Each timing is the best of ``--repeat`` runs of a full batch (Lyapunov
solve plus PPT symplectic eigenvalue) over random stable effective models;
the numba kernels are compiled before timing starts.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mechent import _kernels
from mechent.params import ReducedParams
from mechent.pipeline import broadcast_fields, evaluate_batch


def random_fields(n, seed=0):
    rng = np.random.default_rng(seed)
    base = ReducedParams.symmetric(cooperativity=62.5)
    return broadcast_fields(
        base,
        gain=rng.uniform(0.0, 0.49, n) * base.kappa,
        pump_phase=rng.uniform(0.0, 2 * np.pi, n),
        squeezing=rng.uniform(0.0, 2.0, n),
        n1=rng.uniform(0.0, 5.0, n),
        n2=rng.uniform(0.0, 5.0, n),
    )


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 1000, 10000])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = ["numpy"] + (["numba"] if _kernels.HAS_NUMBA else [])
    print(f"{'points':>8} " + " ".join(f"{b + ' [ms]':>13}" for b in backends) + "  speedup")
    for n in args.sizes:
        flds = random_fields(n)
        row = {}
        ref = None
        for b in backends:
            _kernels.set_backend(b)
            evaluate_batch(random_fields(4))  # warm-up / JIT
            row[b] = best_of(lambda: evaluate_batch(flds), args.repeat) * 1e3
            en = evaluate_batch(flds).log_negativity
            if ref is None:
                ref = en
            else:
                assert np.allclose(en, ref, rtol=1e-9, atol=1e-12, equal_nan=True)
        speed = row["numpy"] / row["numba"] if "numba" in row else float("nan")
        print(f"{n:>8} " + " ".join(f"{row[b]:>13.3f}" for b in backends) + f"  {speed:6.2f}x")


if __name__ == "__main__":
    main()
