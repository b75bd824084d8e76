import hashlib
import json
from dataclasses import asdict
from pathlib import Path

import pytest

from rewardnets.poolgen import generate_pool
from rewardnets.training import (
    CurvePoint,
    TrainConfig,
    load_checkpoint,
    save_checkpoint,
    train,
)

CACHE = Path(__file__).parent / "_cache"

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_pool():
    nets, _ = generate_pool(50, 7, "small")
    return nets


@pytest.fixture(scope="session")
def train_pool():
    nets, _ = generate_pool(1000, 101, "training")
    return nets


@pytest.fixture(scope="session")
def eval_pool():
    nets, _ = generate_pool(1000, 202, "validation")
    return nets


@pytest.fixture(scope="session")
def experiment_pool():
    nets, _ = generate_pool(1000, 303, "experiment")
    return nets


def _train_or_load(cfg: TrainConfig, train_pool, eval_pool):
    """Full training is expensive; cache checkpoints and curves on disk keyed
    by the training config so reruns of the suite skip straight to asserts."""
    CACHE.mkdir(exist_ok=True)
    key = hashlib.sha256(json.dumps(asdict(cfg), sort_keys=True).encode()).hexdigest()[:16]
    ckpt = CACHE / f"policy-{key}.npz"
    curve_path = CACHE / f"curve-{key}.json"
    if ckpt.exists() and curve_path.exists():
        qnet, _ = load_checkpoint(ckpt)
        curve = [CurvePoint(**p) for p in json.loads(curve_path.read_text())]
        return qnet, curve
    qnet, curve = train(cfg, train_pool, eval_pool)
    save_checkpoint(ckpt, qnet, cfg)
    curve_path.write_text(json.dumps([p.to_dict() for p in curve]))
    return qnet, curve


@pytest.fixture(scope="session")
def trained_policies(train_pool, eval_pool):
    """Three fully trained policies (seeds 0..2) with their learning curves."""
    out = []
    for seed in range(3):
        out.append(_train_or_load(TrainConfig(seed=seed), train_pool, eval_pool))
    return out
