"""Compare the numba kernels against the pure-numpy fallbacks.

    python3 benchmarks/bench_backends.py [--frames 50] [--csv out.csv]

Each row times one workload on both backends after a warm-up call and checks
that the two produce identical results.
"""

import argparse
import csv
import sys
import time

import numpy as np

from npdel import HAVE_NUMBA
from npdel.channels import sample_frames
from npdel.npd import NpdConfig, NpdKernel, init_params
from npdel.oracle import embedding_counts_numba, embedding_counts_numpy
from npdel.polar import PolarCodeSpec, sc_decode
from npdel.polar.transform import butterfly_numba, butterfly_numpy


def best_of(fn, repeats):
    fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def sc_workload(N, frames, backend):
    kernel = NpdKernel(init_params(NpdConfig(), np.random.default_rng(0)))
    spec = PolarCodeSpec.from_info_set(N, range(N // 2, N))
    batch = sample_frames(spec, 0.1, frames, seed=0)
    es = [kernel.embed_batch(batch.y_padded[j:j + 1]) for j in range(frames)]
    return lambda: np.concatenate([sc_decode(spec, kernel, e, backend=backend)[0] for e in es])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=50, help="frames per SC timing (default: 50)")
    ap.add_argument("--repeats", type=int, default=3, help="timings per cell (default: 3)")
    ap.add_argument("--csv", default=None, help="also write rows to this file")
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba not installed; nothing to compare", file=sys.stderr)
        return 1

    rng = np.random.default_rng(1)
    rows = []

    def record(name, size, f_numba, f_numpy):
        a, b = f_numba(), f_numpy()
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-9)
        tn, tp = best_of(f_numba, args.repeats), best_of(f_numpy, args.repeats)
        rows.append({"workload": name, "size": size, "numba_s": tn, "numpy_s": tp,
                     "speedup": tp / tn})
        print(f"{name:<18} {size:>6}  numba {tn * 1e3:9.2f} ms  numpy {tp * 1e3:9.2f} ms  "
              f"x{tp / tn:6.1f}", flush=True)

    for N in (32, 128, 512):
        record("sc_decode", N, sc_workload(N, args.frames, "numba"),
               sc_workload(N, args.frames, "numpy"))
    for N in (16, 64):
        X = rng.integers(0, 2, (4096, N), dtype=np.uint8)
        y = rng.integers(0, 2, int(0.9 * N), dtype=np.uint8)
        record("embedding_counts", N, lambda: embedding_counts_numba(X, y).astype(float),
               lambda: embedding_counts_numpy(X, y).astype(float))
    for N in (64, 1024):
        x = rng.integers(0, 2, (2048, N), dtype=np.uint8)
        record("butterfly", N, lambda: butterfly_numba(x), lambda: butterfly_numpy(x))

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
