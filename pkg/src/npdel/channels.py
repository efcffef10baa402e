"""Deletion and BSC channel simulators with counter-based per-sample seeding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polar import log2_exact, polar_transform

ERASURE = 2

# seed namespaces; a sample's stream is fixed by (seed, namespace, index)
NS_TRAIN = 0
NS_HELDOUT = 1
NS_FRAMES = 2
NS_INIT = 3


def sample_rng(seed, namespace, index):
    return np.random.default_rng((int(seed), int(namespace), int(index)))


@dataclass
class ChannelSample:
    x: np.ndarray
    u: np.ndarray
    y: np.ndarray
    mask: np.ndarray  # 1 = deleted

    @property
    def deleted(self):
        return np.flatnonzero(self.mask)

    @property
    def D(self):
        return self.y.size


@dataclass
class ChannelBatch:
    """M samples with outputs right-padded by the erasure symbol (id 2)."""

    x: np.ndarray        # (M, N) uint8
    u: np.ndarray        # (M, N) uint8
    mask: np.ndarray     # (M, N) bool
    y_padded: np.ndarray  # (M, N) int8
    lengths: np.ndarray  # (M,) int

    def __len__(self):
        return self.x.shape[0]

    def __getitem__(self, j):
        D = int(self.lengths[j])
        return ChannelSample(self.x[j], self.u[j], self.y_padded[j, :D].astype(np.uint8),
                             self.mask[j].astype(np.uint8))


def deletion_transmit(x, delta, rng=None, mask=None):
    """Drop each bit of ``x`` independently with probability ``delta``.

    Returns (y, mask). A given ``mask`` overrides the random draw.
    """
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"deletion probability must lie in [0, 1), got {delta}")
    x = np.asarray(x, dtype=np.uint8)
    if mask is None:
        mask = rng.random(x.size) < delta
    mask = np.asarray(mask, dtype=bool)
    return x[~mask], mask.astype(np.uint8)


def bsc_transmit(x, p, rng=None, flips=None):
    if not 0.0 <= p <= 0.5:
        raise ValueError(f"crossover probability must lie in [0, 1/2], got {p}")
    x = np.asarray(x, dtype=np.uint8)
    if flips is None:
        flips = rng.random(x.shape) < p
    return x ^ np.asarray(flips, dtype=np.uint8)


def pad_output(y, N):
    out = np.full(N, ERASURE, dtype=np.int8)
    out[:len(y)] = y
    return out


def _batch_from(x, u, mask):
    M, N = x.shape
    lengths = N - mask.sum(axis=1)
    y_padded = np.full((M, N), ERASURE, dtype=np.int8)
    keep = ~mask
    # position of each surviving bit inside its output word
    pos = np.cumsum(keep, axis=1) - 1
    r, c = np.nonzero(keep)
    y_padded[r, pos[r, c]] = x[r, c]
    return ChannelBatch(x, u, mask, y_padded, lengths)


def sample_batch(N, delta, M, seed, start=0, namespace=NS_TRAIN):
    """M samples with uniform i.i.d. inputs; sample j uses stream (seed, namespace, start+j)."""
    log2_exact(N)
    if M < 1:
        raise ValueError("M must be >= 1")
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"deletion probability must lie in [0, 1), got {delta}")
    x = np.empty((M, N), dtype=np.uint8)
    mask = np.empty((M, N), dtype=bool)
    for j in range(M):
        rng = sample_rng(seed, namespace, start + j)
        x[j] = rng.integers(0, 2, N, dtype=np.uint8)
        mask[j] = rng.random(N) < delta
    return _batch_from(x, polar_transform(x), mask)


def sample_frames(spec, delta, count, seed, start=0):
    """Codewords of ``spec``: frozen bits fixed, information bits uniform, x = u G_N."""
    N = spec.N
    u = np.empty((count, N), dtype=np.uint8)
    mask = np.empty((count, N), dtype=bool)
    for j in range(count):
        rng = sample_rng(seed, NS_FRAMES, start + j)
        u[j] = rng.integers(0, 2, N, dtype=np.uint8)
        mask[j] = rng.random(N) < delta
    u[:, spec.frozen] = spec.frozen_values[spec.frozen]
    return _batch_from(polar_transform(u), u, mask)
