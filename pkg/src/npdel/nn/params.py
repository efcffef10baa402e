"""Parameter collections, the Adam optimizer and the binary checkpoint format."""

from __future__ import annotations

import json
import struct
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor

MAGIC = b"NPD1"
FORMAT_VERSION = 1


class ParameterSet(OrderedDict):
    """Ordered name -> Tensor mapping. ``meta`` carries architecture fields."""

    def __init__(self, *args, meta=None, **kwargs):
        super().__init__(*args, **kwargs)
        self.meta = dict(meta or {})

    def __setitem__(self, name, tensor):
        if not isinstance(tensor, Tensor):
            tensor = Tensor(tensor, requires_grad=True)
        tensor.requires_grad = True
        super().__setitem__(name, tensor)

    def zero_grad(self):
        for t in self.values():
            t.grad = None

    def grads(self):
        return OrderedDict((k, np.zeros_like(t.data) if t.grad is None else t.grad)
                           for k, t in self.items())

    def copy(self):
        out = ParameterSet(meta=self.meta)
        for k, t in self.items():
            out[k] = Tensor(t.data.copy(), requires_grad=True)
        return out


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params, state):
    """One bias-corrected Adam update in place; gradients are cleared afterwards."""
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for name, p in params.items():
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.data -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        p.grad = None
    return params, state


# -- checkpoints ---------------------------------------------------------


class CheckpointError(ValueError):
    def __init__(self, msg, offset):
        super().__init__(f"{msg} (at byte offset {offset})")
        self.offset = offset


def checkpoint_bytes(params):
    header = dict(params.meta)
    header["format_version"] = FORMAT_VERSION
    header["tensors"] = [[name, list(t.shape)] for name, t in params.items()]
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    blobs = b"".join(np.ascontiguousarray(t.data, dtype="<f4").tobytes() for t in params.values())
    return MAGIC + struct.pack("<I", len(hbytes)) + hbytes + blobs


def checkpoint_save(params, path):
    """Write ``params`` as float32; the float64 values are rounded (lossy by design)."""
    with open(path, "wb") as fh:
        fh.write(checkpoint_bytes(params))


def checkpoint_from_bytes(raw):
    if len(raw) < 8:
        raise CheckpointError("truncated preamble", len(raw))
    if raw[:4] != MAGIC:
        raise CheckpointError(f"bad magic {raw[:4]!r}", 0)
    (hlen,) = struct.unpack("<I", raw[4:8])
    if 8 + hlen > len(raw):
        raise CheckpointError(f"header length {hlen} runs past end of file", 4)
    try:
        header = json.loads(raw[8:8 + hlen].decode("utf-8"))
        entries = header.pop("tensors")
    except (UnicodeDecodeError, ValueError, KeyError) as exc:
        raise CheckpointError(f"unreadable header: {exc}", 8) from None
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported format_version {header.get('format_version')}", 8)

    params = ParameterSet(meta={k: v for k, v in header.items() if k != "format_version"})
    offset = 8 + hlen
    for name, shape in entries:
        count = int(np.prod(shape, dtype=np.int64))
        end = offset + 4 * count
        if end > len(raw):
            raise CheckpointError(f"tensor {name!r} {shape} needs {4 * count} bytes, "
                                  f"{len(raw) - offset} left", offset)
        arr = np.frombuffer(raw, dtype="<f4", count=count, offset=offset).reshape(shape)
        params[name] = Tensor(arr.astype(np.float64), requires_grad=True)
        offset = end
    if offset != len(raw):
        raise CheckpointError(f"{len(raw) - offset} trailing bytes after last tensor", offset)
    return params


def checkpoint_load(path):
    with open(path, "rb") as fh:
        return checkpoint_from_bytes(fh.read())
