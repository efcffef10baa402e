"""Exact reference quantities at small block length.

Deletion-channel likelihoods come from the subsequence-embedding count
P(y|x) = delta^(N-D) (1-delta)^D * #{index sets S : x_S = y}; synthetic-channel
posteriors and conditional entropies come from exhaustive marginalization over
the information word.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._accel import njit, use_numba
from .polar import polar_transform

# beyond this many deletions delta^(N-D) may underflow; switch to logs
LOG_DOMAIN_DELETIONS = 40


class UnreachableOutput(ValueError):
    """The received word has zero probability under every admissible input."""


@dataclass(frozen=True)
class PosteriorEstimate:
    i: int
    u_prefix: tuple
    y: tuple
    p0: float
    p1: float
    mass: float  # P(u^{i-1}, y) before normalization

    @property
    def llr(self):
        if self.p0 == 0.0:
            return math.inf
        if self.p1 == 0.0:
            return -math.inf
        return math.log(self.p1) - math.log(self.p0)


def count_embeddings(x, y):
    """Number of ways ``y`` occurs as a subsequence of ``x`` (exact integer)."""
    x = [int(b) for b in x]
    y = [int(b) for b in y]
    D = len(y)
    if D > len(x):
        return 0
    dp = [1] + [0] * D
    for i, xi in enumerate(x):
        for j in range(min(i + 1, D), 0, -1):
            if xi == y[j - 1]:
                dp[j] += dp[j - 1]
    return dp[D]


def deletion_likelihood(x, y, delta):
    N, D = len(x), len(y)
    if D > N:
        return 0.0
    c = count_embeddings(x, y)
    if c == 0:
        return 0.0
    if N - D >= LOG_DOMAIN_DELETIONS:
        if delta == 0.0:
            return 0.0
        return math.exp((N - D) * math.log(delta) + D * math.log1p(-delta) + math.log(c))
    return delta ** (N - D) * (1.0 - delta) ** D * c


# -- batched counts: numba kernel and numpy fallback ----------------------


@njit
def embedding_counts_numba(X, y):
    M, N = X.shape
    D = y.size
    out = np.zeros(M)
    dp = np.zeros(D + 1)
    for m in range(M):
        dp[:] = 0.0
        dp[0] = 1.0
        for i in range(N):
            xi = X[m, i]
            for j in range(min(i + 1, D), 0, -1):
                if xi == y[j - 1]:
                    dp[j] += dp[j - 1]
        out[m] = dp[D]
    return out


def embedding_counts_numpy(X, y):
    M, N = X.shape
    D = y.size
    dp = np.zeros((M, D + 1))
    dp[:, 0] = 1.0
    for i in range(N):
        match = X[:, i:i + 1] == y[None, :]
        dp[:, 1:] = dp[:, 1:] + match * dp[:, :-1]
    return dp[:, D]


def embedding_counts(X, y):
    """Row-wise subsequence counts as float64 (exact below 2**53)."""
    X = np.ascontiguousarray(X, dtype=np.uint8)
    y = np.ascontiguousarray(y, dtype=np.uint8)
    if y.size > X.shape[1]:
        return np.zeros(X.shape[0])
    if use_numba():
        return embedding_counts_numba(X, y)
    return embedding_counts_numpy(X, y)


def deletion_likelihoods(X, y, delta):
    X = np.atleast_2d(X)
    N, D = X.shape[1], len(y)
    counts = embedding_counts(X, y)
    if N - D >= LOG_DOMAIN_DELETIONS:
        with np.errstate(divide="ignore"):
            logw = (N - D) * np.log(delta) + D * np.log1p(-delta)
            return np.exp(logw + np.log(counts))
    return delta ** (N - D) * (1.0 - delta) ** D * counts


def bsc_likelihoods(X, y, p):
    X = np.atleast_2d(X)
    flips = (X != np.asarray(y, dtype=np.uint8)[None, :]).sum(axis=1)
    return p ** flips * (1.0 - p) ** (X.shape[1] - flips)


# -- exhaustive successive posteriors -------------------------------------


def all_words(n):
    """All 2**n binary words, first bit most significant, as (2**n, n) uint8."""
    idx = np.arange(1 << n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1)
    return ((idx[:, None] >> shifts) & 1).astype(np.uint8)


def _successive_posterior(likelihoods, N, y, u_prefix, i):
    u_prefix = tuple(int(b) for b in u_prefix)[:i]
    if len(u_prefix) != i or not 0 <= i < N:
        raise ValueError(f"need a prefix of length i={i} with 0 <= i < N={N}")
    tail = all_words(N - i)
    U = np.empty((tail.shape[0], N), dtype=np.uint8)
    U[:, :i] = u_prefix
    U[:, i:] = tail
    w = likelihoods(polar_transform(U)) * 2.0 ** (-N)
    half = tail.shape[0] // 2
    m0, m1 = float(w[:half].sum()), float(w[half:].sum())
    total = m0 + m1
    if total <= 0.0:
        raise UnreachableOutput(f"y={tuple(y)} is unreachable given prefix {u_prefix}")
    return PosteriorEstimate(i, u_prefix, tuple(int(b) for b in y), m0 / total, m1 / total, total)


def exact_posterior(N, delta, y, u_prefix, i):
    """W(u_i | u^{i-1}, y) for the deletion channel by marginalizing all completions."""
    if N > 16:
        raise ValueError("exhaustive posterior limited to N <= 16")
    y = np.asarray(y, dtype=np.uint8)
    return _successive_posterior(lambda X: deletion_likelihoods(X, y, delta), N, y, u_prefix, i)


def memoryless_posterior(y, p, u_prefix, i):
    """Same successive posterior for a BSC(p) with received word ``y``."""
    y = np.asarray(y, dtype=np.uint8)
    N = y.size
    if N > 16:
        raise ValueError("exhaustive posterior limited to N <= 16")
    return _successive_posterior(lambda X: bsc_likelihoods(X, y, p), N, y, u_prefix, i)


# -- exact conditional entropies ------------------------------------------


def _entropy_bits(p):
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def deletion_joint(N, delta):
    """Joint table P(u, y) with rows over u (first bit most significant) and
    columns over every output word of length 0..N; returns (table, outputs)."""
    U = all_words(N)
    X = polar_transform(U)
    outputs, cols = [], []
    for D in range(N + 1):
        for y in all_words(D):
            outputs.append(tuple(int(b) for b in y))
            cols.append(deletion_likelihoods(X, y, delta))
    return np.stack(cols, axis=1) * 2.0 ** (-N), outputs


def exact_entropies(N, delta):
    """H(U_i | U^{i-1}, Y) in bits for i = 0..N-1 under uniform inputs."""
    if N > 8:
        raise ValueError("exact entropies limited to N <= 8")
    P, _ = deletion_joint(N, delta)
    joint = []
    for i in range(N + 1):
        marg = P.reshape(1 << i, 1 << (N - i), -1).sum(axis=1)
        joint.append(_entropy_bits(marg.ravel()))
    return [joint[i + 1] - joint[i] for i in range(N)]


def bsc_entropies(N, p):
    """H(U_i | U^{i-1}, Y) for a BSC(p) by the same enumeration (Y ranges over 2**N words)."""
    if N > 8:
        raise ValueError("exact entropies limited to N <= 8")
    U = all_words(N)
    X = polar_transform(U)
    Y = all_words(N)
    P = np.stack([bsc_likelihoods(X, y, p) for y in Y], axis=1) * 2.0 ** (-N)
    joint = [_entropy_bits(P.reshape(1 << i, 1 << (N - i), -1).sum(axis=1).ravel())
             for i in range(N + 1)]
    return [joint[i + 1] - joint[i] for i in range(N)]
