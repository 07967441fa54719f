"""Offline training loops for LAPO, PLAS, BC, AWAC and the LAPO ablations.

Every loop draws all randomness from one seeded generator whose state is
stored in the checkpoint, so a run resumed from any checkpoint continues
bit-for-bit.  Trainers only receive label-free :class:`OfflineData` and never
step an environment; periodic evaluation goes through :mod:`lapo.evaluation`.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import critic as C
from .agents import LapoAgent, build_agent, load_agent
from .baselines import update_policy
from .checkpoint import Checkpoint
from .cvae import update_cvae
from .dataset import Batch, OfflineData, compute_stats
from .envs import make_env
from .errors import ConfigError, DivergenceError
from .latent import soft_update_latent, update_latent_policy

log = logging.getLogger(__name__)

METRIC_COLUMNS = ("step", "eval_return", "eval_success", "critic_loss", "recon_loss", "kl_loss", "latent_obj")


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    metrics: list = field(default_factory=list)
    agent: object = None


def eval_rng(seed, step):
    """Evaluation stream independent of the training stream (resume-safe)."""
    return np.random.default_rng([seed, step, 0x5EED])


def _prepare(config, data):
    if not isinstance(data, OfflineData):
        raise TypeError("trainers take OfflineData; call TransitionDataset.offline() first")
    env = make_env(data.env_id)
    if data.states.shape[1] != env.spec.state_dim or data.actions.shape[1] != env.spec.action_dim:
        raise ConfigError(f"dataset dimensions do not match env {data.env_id}")
    stats = data.stats
    states, next_states = data.states, data.next_states
    if config.normalize_states and stats is None:
        stats = compute_stats(states)
        states, next_states = stats.apply(states), stats.apply(next_states)
    return env, stats, (states, data.actions, data.rewards, next_states, data.terminals.astype(np.float64))


def _take(cols, idx):
    s, a, r, s2, d = cols
    return Batch(s[idx], a[idx], r[idx], s2[idx], d[idx])


def _check(step, name, value):
    if not math.isfinite(value):
        raise DivergenceError(step, name, value)
    return value


def _snapshot(config, env_id, step, agent, stats, rng, pending_idx, pending_w):
    return Checkpoint(
        config, env_id, step,
        {k: n.params.copy() for k, n in agent.nets().items()},
        {k: o.copy() for k, o in agent.optims().items()},
        stats, rng.bit_generator.state,
        None if pending_idx is None else np.array(pending_idx, dtype=np.int64),
        None if pending_w is None else np.array(pending_w, dtype=np.float64))


def train(config, data, rng=None, resume=None, callback=None):
    """Run ``config.steps`` iterations (continuing from ``resume`` if given)."""
    env, stats, cols = _prepare(config, data)
    n = len(cols[2])
    if resume is not None:
        if resume.config.with_(steps=config.steps) != config.with_(steps=config.steps):
            raise ConfigError("resume checkpoint was produced by a different config")
        agent = load_agent(resume, env.spec)
        rng = rng or np.random.default_rng()
        rng.bit_generator.state = resume.rng_state
        start = resume.step
        pending_idx, pending_w = resume.pending_indices, resume.pending_weights
        stats = resume.stats
        if stats is not None and data.stats is None and config.normalize_states:
            s, a, r, s2, d = cols
            cols = (stats.apply(data.states), a, r, stats.apply(data.next_states), d)
    else:
        rng = np.random.default_rng(config.seed) if rng is None else rng
        agent = build_agent(config, env.spec, rng)
        start = 0
        pending_idx = rng.integers(0, n, size=config.batch_size)
        pending_w = np.ones(config.batch_size)
    metrics = []
    last = dict(critic_loss=math.nan, recon_loss=math.nan, kl_loss=math.nan, latent_obj=math.nan)
    step_fn = _lapo_step if isinstance(agent, LapoAgent) else _actor_step
    from .evaluation import evaluate_agent

    for step in range(start, config.steps):
        batch = _take(cols, pending_idx)
        pending_idx, pending_w = step_fn(config, agent, batch, pending_w, cols, n, rng, step, last)
        done = step + 1
        if callback is not None:
            callback(done, agent, last)
        if config.eval_interval and (done % config.eval_interval == 0 or done == config.steps):
            report = evaluate_agent(agent, env, stats, config.eval_episodes, eval_rng(config.seed, done))
            row = dict(step=done, eval_return=report.mean_return, eval_success=report.success_rate, **last)
            metrics.append(row)
            log.info("step %d return %.3f success %.2f critic %.4g", done, report.mean_return,
                     report.success_rate, last["critic_loss"])
    ckpt = _snapshot(config, data.env_id, max(start, config.steps), agent, stats, rng, pending_idx, pending_w)
    return TrainResult(ckpt, metrics, agent)


def _lapo_step(config, agent, batch, weights, cols, n, rng, step, last):
    """Weighted CVAE step, critic TD step, next-batch weights, then the latent policy."""
    c = config
    recon, kl = update_cvae(agent.cvae, batch, weights, rng)
    last["recon_loss"] = _check(step, "recon_loss", recon)
    last["kl_loss"] = _check(step, "kl_loss", kl)
    closs = C.td_update(agent.critic, batch, agent.td_policy, c.gamma, rng, c.n_samples)
    last["critic_loss"] = _check(step, "critic_loss", closs)
    # weights for the batch the next iteration's CVAE update will consume
    next_idx = rng.integers(0, n, size=c.batch_size)
    w = C.advantage_weights(agent.critic, _take(cols, next_idx), agent.value_policy, c.lam, c.omega_max,
                            rng, c.n_samples)
    next_w = np.ones(c.batch_size) if c.method == "plas" else w.values
    if not np.all(np.isfinite(next_w)):
        raise DivergenceError(step, "advantage_weights", float("nan"))
    if agent.uses_latent_policy:
        obj = update_latent_policy(agent.latent, agent.cvae, agent.critic, batch.states, rng,
                                   use_min=c.latent_critic == "min")
        last["latent_obj"] = _check(step, "latent_obj", obj)
        soft_update_latent(agent.latent)
    C.soft_update(agent.critic)
    return next_idx, next_w


def _actor_step(config, agent, batch, weights, cols, n, rng, step, last):
    c = config
    if agent.critic is not None:
        closs = C.td_update(agent.critic, batch, agent.sample, c.gamma, rng, c.n_samples)
        last["critic_loss"] = _check(step, "critic_loss", closs)
        w = C.advantage_weights(agent.critic, batch, agent.sample, c.lam, c.omega_max, rng, c.n_samples)
        weights = w.values
    else:
        weights = np.ones(len(batch.states))
    loss = update_policy(agent.policy, batch, weights)
    last["recon_loss"] = _check(step, "policy_loss", loss)
    if agent.critic is not None:
        C.soft_update(agent.critic)
    return rng.integers(0, n, size=c.batch_size), np.ones(c.batch_size)


def _require(config, methods):
    if config.method not in methods:
        raise ConfigError(f"expected method in {methods}, got {config.method!r}")


def train_lapo(config, data, rng=None, **kw):
    _require(config, ("lapo",))
    return train(config, data, rng, **kw)


def train_plas(config, data, rng=None, **kw):
    _require(config, ("plas",))
    return train(config, data, rng, **kw)


def train_bc(config, data, rng=None, **kw):
    _require(config, ("bc",))
    return train(config, data, rng, **kw)


def train_awac(config, data, rng=None, **kw):
    _require(config, ("awac", "awac-gmm"))
    return train(config, data, rng, **kw)


def run_ablation(config, data, rng=None, **kw):
    if config.ablation is None:
        raise ConfigError("run_ablation needs exactly one ablation flag set")
    return train_lapo(config, data, rng, **kw)


def write_metrics(rows, path, append=False):
    with open(path, "a" if append else "w") as f:
        if not append:
            f.write(",".join(METRIC_COLUMNS) + "\n")
        for row in rows:
            f.write(",".join(_fmt(row[c]) for c in METRIC_COLUMNS) + "\n")


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def read_metrics(path):
    with open(path) as f:
        header = f.readline().strip().split(",")
        rows = []
        for line in f:
            vals = line.strip().split(",")
            rows.append({k: (int(v) if k == "step" else float(v)) for k, v in zip(header, vals)})
    return rows
