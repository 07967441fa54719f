import hashlib
import math

import numpy as np
import pytest

from lapo import envs
from lapo.config import TrainConfig
from lapo.dataset import Batch, generate
from lapo.errors import ConfigError, DivergenceError
from lapo.trainer import (METRIC_COLUMNS, read_metrics, run_ablation, train, train_awac, train_bc,
                          train_lapo, train_plas, write_metrics)

SMALL = dict(steps=60, batch_size=32, hidden=(16, 16), eval_interval=0)


@pytest.fixture(scope="module")
def data():
    env = envs.ObstacleNav2D()
    return generate(env, [("left", 0.5), ("right", 0.5)], 10, np.random.default_rng(0)).offline()


def digest(ckpt):
    return hashlib.sha256(ckpt.to_bytes()).hexdigest()


@pytest.mark.parametrize("method", ["lapo", "plas", "bc", "awac", "awac-gmm"])
def test_fixed_seed_runs_are_bitwise_identical(data, method):
    c = TrainConfig(method=method, seed=3, **SMALL)
    a, b = train(c, data), train(c, data)
    assert a.checkpoint.equals(b.checkpoint)
    assert not train(c.with_(seed=4), data).checkpoint.equals(a.checkpoint)


@pytest.mark.parametrize("method", ["lapo", "awac"])
def test_resume_continues_bitwise(data, method, tmp_path):
    c = TrainConfig(method=method, seed=1, **SMALL)
    full = train(c, data).checkpoint
    half = train(c.with_(steps=25), data).checkpoint
    half.save(tmp_path / "half.ckpt")
    from lapo.checkpoint import Checkpoint
    resumed = train(c, data, resume=Checkpoint.load(tmp_path / "half.ckpt")).checkpoint
    assert resumed.equals(full)


def test_resume_rejects_other_config(data):
    half = train(TrainConfig(seed=1, **{**SMALL, "steps": 5}), data).checkpoint
    with pytest.raises(ConfigError):
        train(TrainConfig(seed=2, **SMALL), data, resume=half)


def _trajectory(config, data):
    hashes = []

    def cb(step, agent, last):
        h = hashlib.sha256()
        for k, n in sorted(agent.nets().items()):
            h.update(n.params.tobytes())
        hashes.append(h.hexdigest())

    train(config, data, callback=cb)
    return hashes


def test_unit_weights_degenerate_to_plas(data):
    c = TrainConfig(seed=2, **{**SMALL, "steps": 40})
    plas = _trajectory(c.with_(method="plas"), data)
    forced = _trajectory(c.with_(lam=math.inf), data)
    assert forced == plas
    assert _trajectory(c, data)[-1] != plas[-1]


def test_training_never_steps_an_env(data, monkeypatch):
    def boom(*a, **k):
        raise AssertionError("environment stepped during training")

    monkeypatch.setattr(envs.Env, "step", boom)
    monkeypatch.setattr(envs.Env, "dynamics", boom)
    for m in ("lapo", "bc", "awac"):
        train(TrainConfig(method=m, **{**SMALL, "steps": 5}), data)


def test_trainers_require_label_free_data():
    ds = generate(envs.ObstacleNav2D(), [("left", 1.0)], 2, np.random.default_rng(0))
    with pytest.raises(TypeError):
        train(TrainConfig(**SMALL), ds)


def test_method_specific_entry_points(data):
    cfg = TrainConfig(**{**SMALL, "steps": 2})
    train_lapo(cfg, data)
    train_plas(cfg.with_(method="plas"), data)
    train_bc(cfg.with_(method="bc"), data)
    train_awac(cfg.with_(method="awac-gmm"), data)
    run_ablation(cfg.with_(unbounded_z=True), data)
    with pytest.raises(ConfigError):
        train_bc(cfg, data)
    with pytest.raises(ConfigError):
        run_ablation(cfg, data)


def test_metrics_rows_and_csv(data, tmp_path):
    res = train(TrainConfig(**{**SMALL, "eval_interval": 20, "eval_episodes": 2}), data)
    assert [r["step"] for r in res.metrics] == [20, 40, 60]
    assert set(res.metrics[0]) == set(METRIC_COLUMNS)
    path = tmp_path / "m.csv"
    write_metrics(res.metrics, path)
    back = read_metrics(path)
    assert back == res.metrics
    assert path.read_text().splitlines()[0] == ",".join(METRIC_COLUMNS)


def test_divergence_is_reported(data, monkeypatch):
    import lapo.trainer as T
    monkeypatch.setattr(T.C, "td_update", lambda *a, **k: float("nan"))
    with pytest.raises(DivergenceError, match="critic_loss.*step 0"):
        train(TrainConfig(**SMALL), data)


@pytest.mark.parametrize("method", ["lapo", "bc", "awac"])
def test_zero_steps_returns_initialization(data, method):
    from lapo.agents import build_agent
    cfg = TrainConfig(method=method, seed=5, **{**SMALL, "steps": 0})
    ck = train(cfg, data).checkpoint
    fresh = build_agent(cfg, envs.ObstacleNav2D().spec, np.random.default_rng(5))
    assert ck.step == 0
    for k, net in fresh.nets().items():
        np.testing.assert_array_equal(ck.params[k], net.params)


def test_bc_fits_a_constant_action():
    from lapo.dataset import OfflineData
    n, a0 = 64, np.array([0.04, -0.07])
    rng = np.random.default_rng(0)
    s = rng.normal(size=(n, 2))
    data = OfflineData("obstacle-nav", s, np.tile(a0, (n, 1)), np.zeros(n), s, np.zeros(n, bool))
    res = train(TrainConfig(method="bc", steps=1500, batch_size=32, hidden=(16, 16), eval_interval=0,
                            lr_actor=3e-3), data)
    pred = res.agent.act(res.checkpoint.stats.apply(s))
    assert np.abs(pred - a0).max() < 5e-3


def test_awac_with_infinite_temperature_is_bc():
    from lapo.baselines import GaussianPolicy, update_policy
    from lapo.critic import CriticPair, advantage_weights
    rng = np.random.default_rng(1)
    b = Batch(rng.normal(size=(16, 2)), rng.uniform(-0.1, 0.1, (16, 2)), np.zeros(16), rng.normal(size=(16, 2)),
              np.zeros(16))
    critic = CriticPair(2, 2, 0.1, rng, hidden=(8, 8))
    awac = GaussianPolicy(2, 2, 0.1, np.random.default_rng(2), hidden=(8, 8))
    bc = GaussianPolicy(2, 2, 0.1, np.random.default_rng(2), hidden=(8, 8))
    for _ in range(5):
        w = advantage_weights(critic, b, awac.sample, math.inf, 20.0, rng)
        np.testing.assert_array_equal(w.values, 1.0)
        update_policy(awac, b, w.values)
        update_policy(bc, b, np.ones(16))
    np.testing.assert_array_equal(awac.net.params, bc.net.params)
