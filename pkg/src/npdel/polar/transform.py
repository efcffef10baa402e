"""Bit-reversal permutation and the polar transform u = x B_N F^{(x)n} over GF(2)."""

import numpy as np

from .._accel import njit, use_numba


def log2_exact(N):
    n = int(N).bit_length() - 1
    if N < 1 or (1 << n) != N:
        raise ValueError(f"length {N} is not a power of two")
    return n


def bit_reversal_permutation(n):
    """Index array ``perm`` with ``(x B_N)[j] = x[perm[j]]``; self-inverse."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    N = 1 << n
    perm = np.zeros(N, dtype=np.int64)
    for b in range(n):
        perm |= ((np.arange(N) >> b) & 1) << (n - 1 - b)
    return perm


def butterfly_numpy(x):
    """x F^{(x)n} along the last axis, no bit reversal. Returns a new uint8 array."""
    x = np.array(x, dtype=np.uint8, copy=True)
    N = x.shape[-1]
    n = log2_exact(N)
    lead = x.shape[:-1]
    for s in range(n):
        half = N >> (s + 1)
        v = x.reshape(lead + (1 << s, 2, half))
        v[..., 0, :] ^= v[..., 1, :]
    return x


@njit
def _butterfly_rows(x):
    rows, N = x.shape
    out = x.copy()
    half = N // 2
    while half >= 1:
        for r in range(rows):
            for start in range(0, N, 2 * half):
                for j in range(start, start + half):
                    out[r, j] ^= out[r, j + half]
        half //= 2
    return out


def butterfly_numba(x):
    x = np.asarray(x, dtype=np.uint8)
    log2_exact(x.shape[-1])
    flat = np.ascontiguousarray(x.reshape(-1, x.shape[-1]))
    return _butterfly_rows(flat).reshape(x.shape)


def butterfly(x):
    if use_numba():
        return butterfly_numba(x)
    return butterfly_numpy(x)


def polar_transform(x):
    """u = x G_N with G_N = B_N F^{(x)n}. Works on (..., N) arrays; involutive."""
    x = np.asarray(x, dtype=np.uint8)
    n = log2_exact(x.shape[-1])
    return butterfly(x[..., bit_reversal_permutation(n)])
