"""Monte-Carlo frame-error-rate runs, decoder speed measurements and reports."""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .channels import sample_frames
from .npd import NpdKernel
from .polar import PolarCodeSpec, sc_decode, scl_decode

REPORT_COLUMNS = ["n", "N", "delta", "rate", "L", "frames", "errors", "fer",
                  "ci_low", "ci_high", "seconds", "blocks_per_sec"]
SPEED_COLUMNS = ["N", "backend", "frames", "seconds", "blocks_per_sec"]


@dataclass
class FerResult:
    n: int
    N: int
    delta: float
    rate: float
    L: int
    frames: int
    errors: int
    fer: float
    ci_low: float
    ci_high: float
    seconds: float
    blocks_per_sec: float

    def sigma(self):
        return math.sqrt(max(self.fer * (1.0 - self.fer), 0.0) / self.frames)


def wilson_interval(errors, frames, z=1.959963984540054):
    if frames == 0:
        return 0.0, 1.0
    p = errors / frames
    denom = 1.0 + z * z / frames
    center = (p + z * z / (2 * frames)) / denom
    half = z * math.sqrt(p * (1 - p) / frames + z * z / (4 * frames * frames)) / denom
    lo = 0.0 if errors == 0 else max(0.0, center - half)
    hi = 1.0 if errors == frames else min(1.0, center + half)
    return lo, hi


def pooled_sigma(a, b):
    """Standard error of FER(a) - FER(b) under the pooled-proportion model."""
    p = (a.errors + b.errors) / (a.frames + b.frames)
    return math.sqrt(p * (1 - p) * (1.0 / a.frames + 1.0 / b.frames))


def npd_decoder(kernel, L=1, backend="auto"):
    """Batch decoder ``(spec, batch) -> u_hat`` backed by an SC or SCL run."""

    def decode(spec, batch):
        e = kernel.embed_batch(batch.y_padded)
        if L == 1:
            return sc_decode(spec, kernel, e, backend=backend)[0]
        return scl_decode(spec, kernel, e, L)

    return decode


def _count_errors(spec, decoder, delta, seed, start, count):
    batch = sample_frames(spec, delta, count, seed, start=start)
    u_hat = decoder(spec, batch)
    info = spec.info_set
    return int(np.any(u_hat[:, info] != batch.u[:, info], axis=1).sum())


def run_fer(spec, params, delta, L, frames, seed, decoder=None, workers=1, chunk=500,
            backend="auto"):
    """Frame error rate over ``frames`` codewords; frame j is seeded by (seed, j).

    An error is any information-bit mismatch. ``decoder`` replaces the NPD, it
    is called as ``decoder(spec, batch)`` and must return the (B, N) estimates.
    """
    if frames < 1:
        raise ValueError("frames must be >= 1")
    if decoder is None:
        decoder = npd_decoder(NpdKernel(params), L, backend=backend)
    starts = list(range(0, frames, chunk))
    counts = [min(chunk, frames - s) for s in starts]
    t0 = time.monotonic()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            errs = list(pool.map(lambda a: _count_errors(spec, decoder, delta, seed, *a),
                                 zip(starts, counts)))
    else:
        errs = [_count_errors(spec, decoder, delta, seed, s, c) for s, c in zip(starts, counts)]
    seconds = time.monotonic() - t0
    errors = int(sum(errs))
    lo, hi = wilson_interval(errors, frames)
    return FerResult(n=spec.n, N=spec.N, delta=float(delta), rate=spec.rate, L=int(L),
                     frames=int(frames), errors=errors, fer=errors / frames, ci_low=lo,
                     ci_high=hi, seconds=seconds,
                     blocks_per_sec=frames / seconds if seconds > 0 else float("inf"))


def run_speed(params, sizes, frames, backend="auto", repeats=3, delta=0.1, seed=0):
    """Per-block decode throughput (embedding + SC), one frame at a time.

    Returns one dict per N with the median-of-``repeats`` wall time.
    """
    kernel = NpdKernel(params)
    rows = []
    for N in sizes:
        spec = PolarCodeSpec.from_info_set(N, range(N // 2, N))
        batch = sample_frames(spec, delta, frames, seed)
        ys = [batch.y_padded[j:j + 1] for j in range(frames)]

        def one_pass():
            for y in ys:
                sc_decode(spec, kernel, kernel.embed_batch(y), backend=backend)

        one_pass()  # warm-up, also triggers compilation
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            one_pass()
            times.append(time.perf_counter() - t0)
        sec = float(np.median(times))
        used = backend
        if backend == "auto":
            from ._accel import use_numba
            used = "numba" if use_numba() else "numpy"
        rows.append({"N": N, "backend": used, "frames": frames, "seconds": sec,
                     "blocks_per_sec": frames / sec})
    return rows


def write_report(results, path, fmt=None):
    """Write FerResults as CSV or JSON with the fixed column set."""
    results = list(results)
    if not results:
        raise ValueError("no results to write")
    fmt = fmt or ("json" if str(path).endswith(".json") else "csv")
    rows = [asdict(r) if isinstance(r, FerResult) else dict(r) for r in results]
    rows = [{c: row[c] for c in REPORT_COLUMNS} for row in rows]
    if fmt == "json":
        with open(path, "w") as fh:
            json.dump(rows, fh, indent=2)
    elif fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
            w.writeheader()
            w.writerows({k: repr(v) if isinstance(v, float) else v for k, v in row.items()}
                        for row in rows)
    else:
        raise ValueError(f"unknown report format {fmt!r}")


def read_report(path):
    if str(path).endswith(".json"):
        with open(path) as fh:
            rows = json.load(fh)
    else:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        out.append(FerResult(**{
            c: (int(row[c]) if c in ("n", "N", "L", "frames", "errors") else float(row[c]))
            for c in REPORT_COLUMNS}))
    return out


def write_speed_table(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SPEED_COLUMNS)
        w.writeheader()
        w.writerows(rows)
