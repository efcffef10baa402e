"""Neural polar decoder kernels for the deletion channel, and the classic
memoryless kernel used as a reference.

The NPD embedding map pads the received word with erasures to length N, looks
each symbol up in a 3-row table, adds a sinusoidal positional encoding and runs
a small 1-D convolution stack. Check-node, bit-node and LLR maps are shallow
dense-ReLU-dense networks.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import nn
from ._accel import njit
from .channels import ERASURE, pad_output
from .nn import Tensor
from .polar import LLR_CLAMP, KernelFunctions, bit_reversal_permutation, log2_exact


@dataclass
class NpdConfig:
    d: int = 16
    h: int = 64
    conv_widths: list = field(default_factory=lambda: [3, 3])

    def to_meta(self, N=None):
        meta = asdict(self)
        meta["conv_channels"] = [self.d] * (len(self.conv_widths) + 1)
        if N is not None:
            meta["N"] = N
        return meta

    @classmethod
    def from_meta(cls, meta):
        return cls(d=meta["d"], h=meta["h"], conv_widths=list(meta["conv_widths"]))


def init_params(cfg, rng, N=None):
    d, h = cfg.d, cfg.h
    if d % 2:
        raise ValueError("embedding width d must be even (positional encoding pairs)")
    p = nn.ParameterSet(meta=cfg.to_meta(N))
    p["E.table"] = nn.layers.glorot_uniform(rng, (3, d), 3, d)
    for li, w in enumerate(cfg.conv_widths):
        p[f"E.conv{li}.kernel"] = nn.layers.glorot_uniform(rng, (w, d, d), w * d, w * d)
        p[f"E.conv{li}.bias"] = np.zeros(d)
    for name, n_in, n_out in (("F", 2 * d, d), ("G", 2 * d + 1, d), ("H", d, 1)):
        w1, b1 = nn.init_dense(rng, n_in, h)
        w2, b2 = nn.init_dense(rng, h, n_out)
        p[f"{name}.w1"], p[f"{name}.b1"], p[f"{name}.w2"], p[f"{name}.b2"] = w1, b1, w2, b2
    return p


def positional_encoding(N, d):
    """p[i, 2j] = sin(i / 10000^(2j/d)), p[i, 2j+1] = cos(same), positions from 0."""
    if d % 2:
        raise ValueError(f"positional encoding needs an even width, got {d}")
    pos = np.arange(N, dtype=np.float64)[:, None]
    freq = 10000.0 ** (2.0 * np.arange(d // 2) / d)
    out = np.empty((N, d))
    out[:, 0::2] = np.sin(pos / freq)
    out[:, 1::2] = np.cos(pos / freq)
    return out


def embed_outputs(params, y, N):
    """Differentiable embedding block. ``y`` is one received word (length D <= N)
    or an already padded (B, N) array of symbol ids; returns a Tensor (N, d) or
    (B, N, d)."""
    y = np.asarray(y)
    if y.ndim == 1:
        if y.size > N:
            raise ValueError(f"received length {y.size} exceeds block length {N}")
        symbols = pad_output(y, N)[None]
        single = True
    else:
        if y.shape[1] != N:
            raise ValueError(f"padded outputs must have N={N} columns")
        symbols, single = y, False
    d = params["E.table"].shape[1]
    e = nn.embedding_lookup(params["E.table"], symbols.astype(np.int64))
    e = e + positional_encoding(N, d)
    li = 0
    while f"E.conv{li}.kernel" in params:
        if li > 0:
            e = nn.relu(e)
        e = nn.conv1d_apply(params[f"E.conv{li}.kernel"], e, params[f"E.conv{li}.bias"])
        li += 1
    return e.reshape(N, d) if single else e


def _mlp(params, name, x, relu_out=False):
    if isinstance(x, Tensor):
        hid = nn.dense_apply(params[f"{name}.w1"], params[f"{name}.b1"], x, relu=True)
        return nn.dense_apply(params[f"{name}.w2"], params[f"{name}.b2"], hid)
    hid = x @ params[f"{name}.w1"].data.T + params[f"{name}.b1"].data
    np.maximum(hid, 0.0, out=hid)
    return hid @ params[f"{name}.w2"].data.T + params[f"{name}.b2"].data


def _check_width(params, e, d):
    width = e.shape[-1]
    if width != d:
        raise nn.ShapeError(f"embedding width {width} != model width {d}")


def npd_check_node(params, e1, e2):
    d = params["F.w2"].shape[0]
    _check_width(params, e1, d)
    _check_width(params, e2, d)
    if isinstance(e1, Tensor) or isinstance(e2, Tensor):
        return _mlp(params, "F", nn.concat([e1, e2], axis=-1))
    return _mlp(params, "F", np.concatenate([e1, e2], axis=-1))


def npd_bit_node(params, e1, e2, u):
    d = params["G.w2"].shape[0]
    _check_width(params, e1, d)
    _check_width(params, e2, d)
    s = 1.0 - 2.0 * np.asarray(u, dtype=np.float64)[..., None]
    if isinstance(e1, Tensor) or isinstance(e2, Tensor):
        return _mlp(params, "G", nn.concat([e1, e2, s], axis=-1))
    return _mlp(params, "G", np.concatenate([e1, e2, s], axis=-1))


def npd_llr(params, e):
    _check_width(params, e, params["H.w1"].shape[1])
    out = _mlp(params, "H", e)
    if isinstance(out, Tensor):
        return nn.clamp(out, -LLR_CLAMP, LLR_CLAMP).reshape(out.shape[:-1])
    return np.clip(out[..., 0], -LLR_CLAMP, LLR_CLAMP)


class NpdKernel(KernelFunctions):
    """KernelFunctions view of an NPD parameter set."""

    def __init__(self, params):
        self.params = params
        self.d = params["E.table"].shape[1]
        self.h = params["F.w1"].shape[0]

    def embed(self, y, N):
        return embed_outputs(self.params, y, N).data

    def embed_batch(self, y_padded):
        return embed_outputs(self.params, y_padded, y_padded.shape[1]).data

    def check(self, e1, e2):
        return npd_check_node(self.params, e1, e2)

    def bit(self, e1, e2, u):
        return npd_bit_node(self.params, e1, e2, u)

    def llr(self, e):
        return npd_llr(self.params, e)

    def sc_decode_compiled(self, spec, e):
        e = np.asarray(e, dtype=np.float64)
        single = e.ndim == 2
        if single:
            e = e[None]
        B, N, d = e.shape
        if d != self.d:
            raise ValueError(f"embedding width {d} != model width {self.d}")
        if N != spec.N:
            raise ValueError(f"embedding has {N} rows, code length is {spec.N}")
        n = log2_exact(N)
        p = {k: np.ascontiguousarray(t.data) for k, t in self.params.items()}
        u_hat, llrs = npd_sc_numba(
            np.ascontiguousarray(e[:, bit_reversal_permutation(n)]),
            spec.frozen, spec.frozen_values,
            p["F.w1"], p["F.b1"], p["F.w2"], p["F.b2"],
            p["G.w1"], p["G.b1"], p["G.w2"], p["G.b2"],
            p["H.w1"], p["H.b1"], p["H.w2"], p["H.b2"], LLR_CLAMP)
        if single:
            return u_hat[0], llrs[0]
        return u_hat, llrs


# -- compiled single-frame SC for the NPD ---------------------------------


@njit
def _mlp_rows(out, a, b, s, use_s, w1, b1, w2, b2, hid):
    # out[r] = w2 relu(w1 [a[r], b[r], s[r]] + b1) + b2
    rows, d = a.shape
    h = w1.shape[0]
    dout = w2.shape[0]
    for r in range(rows):
        for k in range(h):
            acc = b1[k]
            for j in range(d):
                acc += w1[k, j] * a[r, j] + w1[k, d + j] * b[r, j]
            if use_s:
                acc += w1[k, 2 * d] * s[r]
            hid[k] = acc if acc > 0.0 else 0.0
        for o in range(dout):
            acc = b2[o]
            for k in range(h):
                acc += w2[o, k] * hid[k]
            out[r, o] = acc


@njit
def npd_sc_numba(e_perm, frozen, frozen_vals, fw1, fb1, fw2, fb2, gw1, gb1, gw2, gb2,
                 hw1, hb1, hw2, hb2, clamp):
    B, N, d = e_perm.shape
    n = 0
    while (1 << n) < N:
        n += 1
    h = fw1.shape[0]
    off = np.zeros(n + 2, dtype=np.int64)
    for k in range(n + 1):
        off[k + 1] = off[k] + (N >> k)
    emb = np.zeros((off[n + 1], d))
    left_cw = np.zeros(off[n + 1], dtype=np.uint8)
    cbuf = np.zeros(N, dtype=np.uint8)
    tmp = np.zeros(N, dtype=np.uint8)
    svec = np.zeros(N)
    hid = np.zeros(h)
    u_hat = np.zeros((B, N), dtype=np.uint8)
    llrs = np.zeros((B, N))

    for bidx in range(B):
        emb[0:N] = e_perm[bidx]
        for i in range(N):
            if i == 0:
                start = 1
            else:
                t = 0
                while (i >> t) & 1 == 0:
                    t += 1
                start = n - t
            for k in range(start, n + 1):
                s = N >> k
                par = emb[off[k - 1]:off[k - 1] + 2 * s]
                dst = emb[off[k]:off[k] + s]
                if k == start and i > 0:
                    for r in range(s):
                        svec[r] = 1.0 - 2.0 * left_cw[off[k] + r]
                    _mlp_rows(dst, par[:s], par[s:], svec, True, gw1, gb1, gw2, gb2, hid)
                else:
                    _mlp_rows(dst, par[:s], par[s:], svec, False, fw1, fb1, fw2, fb2, hid)
            leaf = emb[off[n]:off[n] + 1]
            # H: d -> h -> 1, input only ``leaf``
            for kk in range(h):
                acc = hb1[kk]
                for j in range(d):
                    acc += hw1[kk, j] * leaf[0, j]
                hid[kk] = acc if acc > 0.0 else 0.0
            acc = hb2[0]
            for kk in range(h):
                acc += hw2[0, kk] * hid[kk]
            lam = min(max(acc, -clamp), clamp)
            llrs[bidx, i] = lam
            if frozen[i]:
                bit = frozen_vals[i]
            else:
                bit = 1 if lam > 0.0 else 0
            u_hat[bidx, i] = bit

            cbuf[0] = bit
            clen = 1
            for k in range(n, 0, -1):
                if (i >> (n - k)) & 1 == 0:
                    for r in range(clen):
                        left_cw[off[k] + r] = cbuf[r]
                    break
                for r in range(clen):
                    tmp[r] = left_cw[off[k] + r] ^ cbuf[r]
                    tmp[clen + r] = cbuf[r]
                clen *= 2
                for r in range(clen):
                    cbuf[r] = tmp[r]
    return u_hat, llrs


# -- classic memoryless kernel --------------------------------------------


def boxplus_neg(a, b):
    """-2 atanh(tanh(a/2) tanh(b/2)) via the overflow-free min-sum correction form."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        core = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
        corr = np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b)))
    return -(core + corr)


class MemorylessKernel(KernelFunctions):
    """E/F/G/H of the classic SC decoder; embedding space is the real line (d=1)."""

    d = 1

    def __init__(self, channel_law, prior=(0.5, 0.5)):
        # channel_law[y][x] = W(y|x) over a finite output alphabet
        self.channel_law = np.asarray(channel_law, dtype=np.float64)
        self.prior = np.asarray(prior, dtype=np.float64)
        with np.errstate(divide="ignore"):
            self.table = (np.log(self.channel_law[:, 1]) - np.log(self.channel_law[:, 0])
                          + np.log(self.prior[1]) - np.log(self.prior[0]))

    def embed(self, y, N=None):
        y = np.asarray(y, dtype=np.int64)
        return self.table[y][..., None]

    def check(self, e1, e2):
        return boxplus_neg(e1, e2)

    def bit(self, e1, e2, u):
        sign = 1.0 - 2.0 * np.asarray(u, dtype=np.float64).reshape(-1, *([1] * (np.ndim(e1) - 1)))
        return e2 + sign * e1

    def llr(self, e):
        return np.asarray(e)[..., 0]


def classic_memoryless_kernel(channel_law, prior=(0.5, 0.5)):
    return MemorylessKernel(channel_law, prior)


def bsc_kernel(p):
    return MemorylessKernel([[1.0 - p, p], [p, 1.0 - p]])
