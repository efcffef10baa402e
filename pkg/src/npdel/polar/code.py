from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .transform import log2_exact


@dataclass(frozen=True)
class PolarCodeSpec:
    """Block length N = 2**n, frozen mask and the bit value on each frozen index.

    ``frozen_values`` is zero on information indices.
    """

    frozen: np.ndarray
    frozen_values: np.ndarray

    def __post_init__(self):
        frozen = np.asarray(self.frozen, dtype=bool)
        values = np.asarray(self.frozen_values, dtype=np.uint8)
        log2_exact(frozen.size)
        if values.shape != frozen.shape:
            raise ValueError("frozen_values must have one entry per index")
        if np.any(values[~frozen]):
            raise ValueError("frozen_values set on an information index")
        if np.any(values > 1):
            raise ValueError("frozen_values must be bits")
        object.__setattr__(self, "frozen", frozen)
        object.__setattr__(self, "frozen_values", values)

    @classmethod
    def from_frozen_set(cls, N, frozen_set, frozen_values=None):
        mask = np.zeros(N, dtype=bool)
        idx = np.asarray(sorted(frozen_set), dtype=np.int64)
        if idx.size and (idx[0] < 0 or idx[-1] >= N):
            raise ValueError("frozen index out of range")
        mask[idx] = True
        vals = np.zeros(N, dtype=np.uint8)
        if frozen_values is not None:
            vals[idx] = np.asarray(frozen_values, dtype=np.uint8)
        return cls(mask, vals)

    @classmethod
    def from_info_set(cls, N, info_set):
        mask = np.ones(N, dtype=bool)
        mask[np.asarray(list(info_set), dtype=np.int64)] = False
        return cls(mask, np.zeros(N, dtype=np.uint8))

    @property
    def N(self):
        return self.frozen.size

    @property
    def n(self):
        return log2_exact(self.N)

    @property
    def info_set(self):
        return np.flatnonzero(~self.frozen)

    @property
    def frozen_set(self):
        return np.flatnonzero(self.frozen)

    @property
    def k(self):
        return int((~self.frozen).sum())

    @property
    def rate(self):
        return self.k / self.N

    def to_json(self):
        return {
            "N": self.N,
            "frozen_set": self.frozen_set.tolist(),
            "frozen_values": self.frozen_values[self.frozen].tolist(),
            "info_set": self.info_set.tolist(),
            "rate": self.rate,
        }

    @classmethod
    def from_json(cls, obj):
        return cls.from_frozen_set(obj["N"], obj["frozen_set"], obj.get("frozen_values"))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))
