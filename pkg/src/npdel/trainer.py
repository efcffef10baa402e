"""Cross-entropy training of the NPD, entropy/rate estimation and code construction."""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import nn
from .channels import NS_HELDOUT, NS_INIT, NS_TRAIN, sample_batch, sample_rng
from .npd import NpdConfig, NpdKernel, embed_outputs, init_params
from .polar import PolarCodeSpec, log2_exact, posteriors_teacher_forced

log = logging.getLogger(__name__)

LN2 = math.log(2.0)


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    N: int = 16
    delta: float = 0.1
    samples: int = 200_000      # distinct training samples M; reused cyclically
    batch_size: int = 128
    steps: int = 0              # 0 -> one pass over ``samples``
    lr: float = 1e-3
    lr_final: float = 1e-3      # linear decay target reached at the last step
    seed: int = 0
    d: int = 16
    h: int = 64
    conv_widths: list = field(default_factory=lambda: [3, 3])
    eval_samples: int = 10_000
    log_every: int = 100

    def __post_init__(self):
        log2_exact(self.N)
        if self.samples < self.batch_size:
            raise ValueError("sample budget must be at least one batch")

    @property
    def total_steps(self):
        return self.steps or max(1, self.samples // self.batch_size)

    @property
    def npd_config(self):
        return NpdConfig(d=self.d, h=self.h, conv_widths=list(self.conv_widths))


@dataclass
class TrainReport:
    config: dict
    loss_curve: list
    entropy: list
    entropy_se: list
    rate: float
    seconds: float

    def to_json(self):
        return asdict(self)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls(**json.load(fh))


def ce_loss(llrs, u_true):
    """Mean of softplus(-(2u-1) llr) / ln 2 in bits per bit; Tensor in, Tensor out."""
    sign = 1.0 - 2.0 * np.asarray(u_true, dtype=np.float64)
    if isinstance(llrs, nn.Tensor):
        return nn.softplus(llrs * sign).mean() * (1.0 / LN2)
    z = np.asarray(llrs, dtype=np.float64) * sign
    return float((np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))).mean() / LN2)


def per_index_ce(llrs, u_true):
    """(M, N) per-sample, per-index cross entropy in bits."""
    z = np.asarray(llrs) * (1.0 - 2.0 * np.asarray(u_true, dtype=np.float64))
    return (np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))) / LN2


def loss_on_batch(params, batch):
    kernel = NpdKernel(params)
    N = batch.x.shape[1]
    e = embed_outputs(params, batch.y_padded, N)
    lam = posteriors_teacher_forced(kernel, e, batch.u)
    return ce_loss(lam, batch.u)


def _stream_batch(cfg, step):
    start = (step * cfg.batch_size) % cfg.samples
    stop = start + cfg.batch_size
    if stop <= cfg.samples:
        return sample_batch(cfg.N, cfg.delta, cfg.batch_size, cfg.seed, start=start,
                            namespace=NS_TRAIN)
    first = sample_batch(cfg.N, cfg.delta, cfg.samples - start, cfg.seed, start=start)
    rest = sample_batch(cfg.N, cfg.delta, stop - cfg.samples, cfg.seed, start=0)
    return type(first)(*(np.concatenate([a, b]) for a, b in
                         zip((first.x, first.u, first.mask, first.y_padded, first.lengths),
                             (rest.x, rest.u, rest.mask, rest.y_padded, rest.lengths))))


def run_training(cfg, params=None, progress=None):
    """Adam on the teacher-forced cross entropy. Deterministic given ``cfg.seed``.

    Returns (params, TrainReport); the report's entropies come from
    ``cfg.eval_samples`` held-out samples.
    """
    t0 = time.monotonic()
    if params is None:
        params = init_params(cfg.npd_config, sample_rng(cfg.seed, NS_INIT, 0), N=cfg.N)
    state = nn.AdamState(lr=cfg.lr)
    steps = cfg.total_steps
    curve, window = [], []
    for step in range(steps):
        if steps > 1:
            state.lr = cfg.lr + (cfg.lr_final - cfg.lr) * step / (steps - 1)
        batch = _stream_batch(cfg, step)
        loss = loss_on_batch(params, batch)
        value = float(loss.data)
        if not math.isfinite(value):
            raise TrainingDiverged(f"loss became {value} at step {step} (N={cfg.N}, "
                                   f"delta={cfg.delta}, lr={state.lr:g})")
        loss.backward()
        nn.adam_step(params, state)
        window.append(value)
        if len(window) == cfg.log_every or step == steps - 1:
            curve.append(float(np.mean(window)))
            window = []
            log.debug("step %d/%d loss %.4f", step + 1, steps, curve[-1])
            if progress is not None:
                progress(step + 1, steps, curve[-1])

    H, se = estimate_entropies(params, cfg.N, cfg.delta, cfg.eval_samples, cfg.seed,
                               return_se=True)
    report = TrainReport(config=asdict(cfg), loss_curve=curve, entropy=list(map(float, H)),
                         entropy_se=list(map(float, se)), rate=estimate_rate(H),
                         seconds=time.monotonic() - t0)
    return params, report


def estimate_entropies(params, N, delta, M_eval, seed, chunk=2000, return_se=False,
                       kernel=None, namespace=NS_HELDOUT):
    """Per-index mean cross entropy (bits) on fresh held-out samples.

    Upper-biased estimate of H(U_i | U^{i-1}, Y). ``kernel`` overrides the NPD
    built from ``params`` (it must then provide ``embed_batch``).
    """
    if kernel is None:
        kernel = NpdKernel(params)
    s1 = np.zeros(N)
    s2 = np.zeros(N)
    done = 0
    while done < M_eval:
        m = min(chunk, M_eval - done)
        batch = sample_batch(N, delta, m, seed, start=done, namespace=namespace)
        e = kernel.embed_batch(batch.y_padded)
        lam = posteriors_teacher_forced(kernel, e, batch.u)
        ce = per_index_ce(lam, batch.u)
        s1 += ce.sum(axis=0)
        s2 += (ce ** 2).sum(axis=0)
        done += m
    mean = s1 / M_eval
    if not return_se:
        return mean
    var = np.maximum(s2 / M_eval - mean ** 2, 0.0)
    return mean, np.sqrt(var / max(M_eval - 1, 1))


def estimate_rate(H):
    """Achievable rate 1 - mean(H) for uniform inputs, clamped to [0, 1]."""
    return float(np.clip(1.0 - float(np.mean(H)), 0.0, 1.0))


def construct_code(H, k):
    """Information set = the k indices of smallest entropy (ties to the lower index)."""
    H = np.asarray(H, dtype=np.float64)
    if not 0 <= k <= H.size:
        raise ValueError(f"k={k} outside [0, {H.size}]")
    info = np.argsort(H, kind="stable")[:k]
    return PolarCodeSpec.from_info_set(H.size, info)
