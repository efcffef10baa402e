"""Session-wide trained models for the acceptance suite.

Training is deterministic, so setting ``NPDEL_MODEL_CACHE`` to a directory lets
repeated runs reuse checkpoints keyed by their full training config.
"""

import hashlib
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from npdel import nn  # noqa: E402
from npdel.trainer import TrainConfig, run_training  # noqa: E402

ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} -- {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def train_cached(cfg, init=None, tag=""):
    cache = os.environ.get("NPDEL_MODEL_CACHE")
    key = json.dumps({"cfg": asdict(cfg), "init": tag}, sort_keys=True)
    path = None
    if cache:
        digest = hashlib.sha256(key.encode()).hexdigest()[:16]
        path = Path(cache) / f"{digest}.npd"
        if path.is_file():
            return nn.checkpoint_load(path)
    params = init.copy() if init is not None else None
    params, _ = run_training(cfg, params=params)
    # float32 round trip, so cached and fresh runs evaluate the same weights
    params = nn.checkpoint_from_bytes(nn.checkpoint_bytes(params))
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        nn.checkpoint_save(params, path)
    return params


N8_CFG = TrainConfig(N=8, delta=0.1, samples=3000 * 128, batch_size=128, steps=3000,
                     lr=1e-3, lr_final=1e-4, eval_samples=1000, seed=0)
N32_POL_CFG = TrainConfig(N=32, delta=0.1, samples=2000 * 128, batch_size=128, steps=2000,
                          lr=1e-3, lr_final=1e-4, eval_samples=1000, seed=0)
N128_POL_CFG = TrainConfig(N=128, delta=0.1, samples=800 * 128, batch_size=128, steps=800,
                           lr=5e-4, lr_final=1e-4, eval_samples=1000, seed=0)
N32_FER_CFG = TrainConfig(N=32, delta=0.01, samples=4000 * 128, batch_size=128, steps=4000,
                          lr=1e-3, lr_final=1e-4, eval_samples=20_000, seed=0)


@pytest.fixture(scope="session")
def model_n8():
    return train_cached(N8_CFG)


@pytest.fixture(scope="session")
def models_polarization():
    p32 = train_cached(N32_POL_CFG)
    # parameters are block-length agnostic: the N=128 run continues from the N=32 weights
    p128 = train_cached(N128_POL_CFG, init=p32, tag="from-N32")
    return p32, p128


@pytest.fixture(scope="session")
def model_n32_fer():
    return train_cached(N32_FER_CFG)
