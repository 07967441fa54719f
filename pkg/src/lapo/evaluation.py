"""Policy evaluation, normalized scores, action histograms and support overlap."""

import json
from dataclasses import asdict, dataclass
from importlib import resources
from typing import Optional

import numpy as np

from .agents import ActorAgent, load_agent
from .checkpoint import Checkpoint
from .cvae import decode, sample_prior
from .dataset import TransitionDataset
from .envs import make_env
from .errors import ConfigError, ContractError

HISTOGRAM_RADIUS = 0.01
DEFAULT_BINS = 50
DEFAULT_SAMPLES = 10_000


@dataclass
class EvalReport:
    mean_return: float
    return_std: float
    success_rate: float
    n_episodes: int
    env: str
    method: str
    seed: Optional[int] = None
    normalized_score: Optional[float] = None

    def __post_init__(self):
        if self.n_episodes < 1:
            raise ContractError("an evaluation needs at least one episode")
        if not 0.0 <= self.success_rate <= 1.0:
            raise ContractError("success rate outside [0, 1]")

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)


@dataclass(frozen=True)
class ScoreAnchors:
    random_return: float
    expert_return: float

    def __post_init__(self):
        if not self.expert_return > self.random_return:
            raise ConfigError(f"degenerate anchors: expert {self.expert_return} <= random {self.random_return}")


def normalized_score(ret, anchors):
    """0 for the random policy, 100 for the expert."""
    return 100.0 * (ret - anchors.random_return) / (anchors.expert_return - anchors.random_return)


def load_anchors(path=None):
    if path is None:
        text = resources.files("lapo").joinpath("data/anchors.json").read_text()
    else:
        with open(path) as f:
            text = f.read()
    return {k: ScoreAnchors(v["random_return"], v["expert_return"]) for k, v in json.loads(text).items()}


def anchors_for(env_id, table=None):
    table = load_anchors() if table is None else table
    return table.get(env_id)


def compute_anchors(env_ids, n_episodes=1000, seed=0):
    """Mean return of the uniform random policy and the scripted expert per env."""
    out = {}
    for env_id in env_ids:
        env = make_env(env_id)
        rng = np.random.default_rng(seed)
        b = env.spec.action_bound
        rand = [run_episode(env, lambda s: rng.uniform(-b, b, env.spec.action_dim))[0] for _ in range(n_episodes)]
        expert = [run_episode(env, lambda s: env.expert_action(env.expert_mode, s, rng))[0]
                  for _ in range(n_episodes)]
        out[env_id] = {"random_return": float(np.mean(rand)), "expert_return": float(np.mean(expert))}
    return out


def run_episode(env, act):
    s = env.reset()
    ret = 0.0
    for t in range(env.spec.horizon):
        s, r, done = env.step(s, act(s), t)
        ret += r
        if done:
            break
    return ret, t + 1


def _episode_rngs(rng, n):
    return [np.random.default_rng(s) for s in rng.integers(0, 2 ** 63, size=n)]


def evaluate_agent(agent, env, stats, n_episodes, rng, method=None, seed=None):
    """Roll out the agent's deterministic policy (prior z under the no-latent ablation)."""
    if n_episodes < 1:
        raise ContractError("n_episodes must be >= 1")
    norm = (lambda s: s) if stats is None else stats.apply
    returns, successes = [], []
    # one independent stream per episode; results kept in episode order
    for erng in _episode_rngs(rng, n_episodes):
        ret, _ = run_episode(env, lambda s: agent.act(norm(s)[None, :], erng)[0])
        returns.append(ret)
        successes.append(env.success(ret))
    returns = np.array(returns)
    anchors = anchors_for(env.env_id)
    return EvalReport(
        float(returns.mean()), float(returns.std()), float(np.mean(successes)), n_episodes, env.env_id,
        method or agent.config.method, seed,
        None if anchors is None else normalized_score(float(returns.mean()), anchors))


def evaluate(checkpoint, env, n_episodes, rng):
    """Evaluate a checkpoint without modifying it."""
    if checkpoint.env_id != env.env_id:
        raise ConfigError(f"checkpoint was trained on {checkpoint.env_id}, not {env.env_id}")
    agent = load_agent(checkpoint, env.spec)
    method = checkpoint.config.method
    if checkpoint.config.ablation:
        method += f"+{checkpoint.config.ablation}"
    return evaluate_agent(agent, env, checkpoint.stats, n_episodes, rng, method, checkpoint.config.seed)


# ----------------------------------------------------------------------------
# histograms


@dataclass
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    dim: int = 0

    @property
    def total(self):
        return int(self.counts.sum())

    def to_csv(self, path):
        with open(path, "w") as f:
            f.write("bin_left,bin_right,count\n")
            for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts):
                f.write(f"{float(lo)!r},{float(hi)!r},{int(c)}\n")

    @classmethod
    def from_csv(cls, path):
        arr = np.genfromtxt(path, delimiter=",", skip_header=1, ndmin=2)
        edges = np.append(arr[:, 0], arr[-1, 1])
        return cls(edges, arr[:, 2].astype(np.int64))


def bin_edges(bound, bins):
    return np.linspace(-bound, bound, bins + 1)


def histogram_of(actions, bound, bins, dim=0):
    edges = bin_edges(bound, bins)
    x = np.clip(np.asarray(actions)[:, dim], -bound, bound)
    counts, _ = np.histogram(x, bins=edges)
    return Histogram(edges, counts.astype(np.int64), dim)


def dataset_actions_at(ds, state, radius=HISTOGRAM_RADIUS):
    d = np.linalg.norm(ds.states - np.asarray(state, dtype=np.float64), axis=1)
    return ds.actions[d <= radius]


def policy_actions_at(checkpoint, state, n, rng, view="cvae", spec=None):
    """Sample ``n`` actions at ``state`` from a checkpoint.

    ``view``: ``cvae`` decodes prior samples; ``overall`` decodes the latent
    policy output perturbed by prior samples; action-space policies are
    sampled directly whatever the view.
    """
    spec = spec or make_env(checkpoint.env_id).spec
    agent = load_agent(checkpoint, spec)
    s = np.asarray(state, dtype=np.float64)[None, :]
    if checkpoint.stats is not None:
        s = checkpoint.stats.apply(s)
    states = np.repeat(s, n, axis=0)
    if isinstance(agent, ActorAgent):
        return agent.sample(states, rng)
    z = sample_prior(agent.cvae.latent_dim, rng, n)
    if view == "overall":
        z = agent.latent.forward(states) + z
    elif view != "cvae":
        raise ConfigError(f"unknown histogram view {view!r}")
    return decode(agent.cvae, states, z)


def action_histogram(source, state, n=DEFAULT_SAMPLES, bins=DEFAULT_BINS, rng=None, view="cvae", dim=0,
                     radius=HISTOGRAM_RADIUS):
    """Histogram of one action component at ``state`` for a dataset or a checkpoint."""
    if n < 1 or bins < 1:
        raise ConfigError("n and bins must be >= 1")
    if isinstance(source, TransitionDataset):
        bound = make_env(source.env_id).spec.action_bound
        return histogram_of(dataset_actions_at(source, state, radius).reshape(-1, source.actions.shape[1]),
                            bound, bins, dim)
    if isinstance(source, Checkpoint):
        spec = make_env(source.env_id).spec
        rng = rng if rng is not None else np.random.default_rng(0)
        return histogram_of(policy_actions_at(source, state, n, rng, view, spec), spec.action_bound, bins, dim)
    raise ContractError(f"histogram source must be a dataset or checkpoint, got {type(source).__name__}")


def support_overlap(policy_hist, data_hist):
    """Fraction of policy samples landing in bins where the data histogram is nonzero."""
    if policy_hist.edges.shape != data_hist.edges.shape or not np.array_equal(policy_hist.edges, data_hist.edges):
        raise ContractError("histograms use different binning")
    total = policy_hist.counts.sum()
    if total == 0:
        return 0.0
    return float(policy_hist.counts[data_hist.counts > 0].sum() / total)


def initial_state(env_id):
    return make_env(env_id).reset()
