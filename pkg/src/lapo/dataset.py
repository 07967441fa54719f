"""Offline transition datasets: generation, relabeling, mixing, sampling, I/O.

Datasets are stored column-wise.  :class:`TransitionDataset` carries
provenance tags (which scripted mode produced each transition) for analysis
only; training code receives :class:`OfflineData`, which has no such field.
"""

import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .envs import make_env, split_env_id
from .errors import ConfigError, ContractError, FormatError

MAGIC = b"LAPD"
VERSION = 1
STD_FLOOR = 1e-6


class Transition(NamedTuple):
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    terminal: bool


class Batch(NamedTuple):
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray


@dataclass(frozen=True)
class NormStats:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, states):
        return (np.asarray(states, dtype=np.float64) - self.mean) / self.std

    @classmethod
    def identity(cls, dim):
        return cls(np.zeros(dim), np.ones(dim))


@dataclass(frozen=True, eq=False)
class OfflineData:
    """Label-free view of a dataset; the only form trainers accept."""

    env_id: str
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray
    stats: Optional[NormStats] = None

    def __len__(self):
        return len(self.rewards)


@dataclass(frozen=True, eq=False)
class TransitionDataset:
    env_id: str
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray
    episode_starts: np.ndarray
    provenance: np.ndarray
    tags: tuple = ()
    stats: Optional[NormStats] = None

    def __post_init__(self):
        n = len(self.rewards)
        if n == 0:
            raise ContractError("a dataset must contain at least one transition")
        for name in ("states", "actions", "next_states", "terminals", "episode_starts", "provenance"):
            if len(getattr(self, name)) != n:
                raise ContractError(f"column {name} has {len(getattr(self, name))} rows, expected {n}")

    def __len__(self):
        return len(self.rewards)

    @property
    def size(self):
        return len(self)

    def __getitem__(self, i):
        return Transition(self.states[i], self.actions[i], float(self.rewards[i]),
                          self.next_states[i], bool(self.terminals[i]))

    @property
    def env_name(self):
        return split_env_id(self.env_id)[0]

    @property
    def task(self):
        return split_env_id(self.env_id)[1]

    def labels(self):
        """Provenance tag name per transition."""
        return [self.tags[i] for i in self.provenance]

    def offline(self):
        return OfflineData(self.env_id, self.states, self.actions, self.rewards,
                           self.next_states, self.terminals, self.stats)

    def equals(self, other):
        """Structural, bit-exact equality."""
        if not isinstance(other, TransitionDataset):
            return False
        if self.env_id != other.env_id or tuple(self.tags) != tuple(other.tags):
            return False
        cols = ("states", "actions", "rewards", "next_states", "terminals", "episode_starts", "provenance")
        for c in cols:
            a, b = getattr(self, c), getattr(other, c)
            if a.shape != b.shape or a.tobytes() != b.tobytes():
                return False
        if (self.stats is None) != (other.stats is None):
            return False
        if self.stats is not None:
            return (self.stats.mean.tobytes() == other.stats.mean.tobytes()
                    and self.stats.std.tobytes() == other.stats.std.tobytes())
        return True


def _episode_counts(mix, n_episodes):
    fracs = np.array([f for _, f in mix], dtype=np.float64)
    raw = fracs * n_episodes
    counts = np.floor(raw).astype(int)
    # largest remainder keeps every count within one of fraction * n
    for i in np.argsort(-(raw - counts), kind="stable")[: n_episodes - counts.sum()]:
        counts[i] += 1
    return counts


def generate(env, mode_mix, n_episodes, rng):
    """Roll out scripted experts; ``mode_mix`` is a list of ``(mode, fraction)``."""
    if not mode_mix:
        raise ConfigError("mode mix is empty")
    if n_episodes < 1:
        raise ConfigError("n_episodes must be >= 1")
    fracs = [float(f) for _, f in mode_mix]
    if any(f < 0 for f in fracs) or abs(sum(fracs) - 1.0) > 1e-9:
        raise ConfigError(f"mode fractions must be nonnegative and sum to 1, got {fracs}")
    modes = [m for m, _ in mode_mix]
    for m in modes:
        env._check_mode(m)
    tags = tuple(dict.fromkeys(modes))
    cols = {k: [] for k in ("s", "a", "r", "s2", "d", "start", "tag")}
    horizon = env.spec.horizon
    for mode, count in zip(modes, _episode_counts(mode_mix, n_episodes)):
        tag = tags.index(mode)
        for _ in range(count):
            s = env.reset(rng)
            for t in range(horizon):
                a = env.expert_action(mode, s, rng)
                s2, r, terminal = env.dynamics(s, a)
                cols["s"].append(s)
                cols["a"].append(env.clip_action(a))
                cols["r"].append(r)
                cols["s2"].append(s2)
                # horizon truncation is stored as non-terminal
                cols["d"].append(terminal)
                cols["start"].append(t == 0)
                cols["tag"].append(tag)
                s = s2
                if terminal:
                    break
    return TransitionDataset(
        env.env_id,
        np.array(cols["s"], dtype=np.float64),
        np.array(cols["a"], dtype=np.float64).reshape(-1, env.spec.action_dim),
        np.array(cols["r"], dtype=np.float64),
        np.array(cols["s2"], dtype=np.float64),
        np.array(cols["d"], dtype=bool),
        np.array(cols["start"], dtype=bool),
        np.array(cols["tag"], dtype=np.uint8),
        tags,
    )


def relabel(ds, reward_name):
    """Recompute every reward with the named task's reward function."""
    env = make_env(ds.env_name)
    if reward_name not in env.tasks:
        raise ConfigError(f"unknown reward function {reward_name!r} for {ds.env_name}")
    rewards = np.array([env.reward(s, a, s2, task=reward_name)
                        for s, a, s2 in zip(ds.states, ds.actions, ds.next_states)], dtype=np.float64)
    return replace(ds, env_id=f"{ds.env_name}:{reward_name}", rewards=rewards)


def mix(datasets):
    """Concatenate datasets of the same environment; tag tables are merged."""
    datasets = list(datasets)
    if not datasets:
        raise ConfigError("nothing to mix")
    if len(datasets) == 1:
        return datasets[0]
    names = {d.env_name for d in datasets}
    if len(names) != 1:
        raise ConfigError(f"cannot mix datasets from different envs: {sorted(names)}")
    dims = {(d.states.shape[1], d.actions.shape[1]) for d in datasets}
    if len(dims) != 1:
        raise ConfigError("cannot mix datasets with different dimensions")
    tasks = {d.task for d in datasets}
    name = names.pop()
    env_id = f"{name}:{tasks.pop()}" if len(tasks) == 1 and None not in tasks else (
        name if tasks == {None} else f"{name}:mixed")
    tags = tuple(dict.fromkeys(t for d in datasets for t in d.tags))
    prov = [np.array([tags.index(d.tags[i]) for i in range(len(d.tags))], dtype=np.uint8)[d.provenance]
            for d in datasets]
    cat = lambda c: np.concatenate([getattr(d, c) for d in datasets])
    return TransitionDataset(env_id, cat("states"), cat("actions"), cat("rewards"), cat("next_states"),
                             cat("terminals"), cat("episode_starts"), np.concatenate(prov), tags)


def sample_batch(ds, batch_size, rng):
    """Uniform minibatch with replacement."""
    if batch_size < 1:
        raise ConfigError("batch_size must be >= 1")
    idx = rng.integers(0, len(ds), size=batch_size)
    return Batch(ds.states[idx], ds.actions[idx], ds.rewards[idx], ds.next_states[idx],
                 ds.terminals[idx].astype(np.float64))


def compute_stats(states):
    states = np.asarray(states, dtype=np.float64)
    mean = states.mean(axis=0)
    std = np.maximum(states.std(axis=0), STD_FLOOR)
    return NormStats(mean, std)


def normalize_states(ds):
    """Standardize states and next states with statistics of ``ds.states``."""
    stats = compute_stats(ds.states)
    out = replace(ds, states=stats.apply(ds.states), next_states=stats.apply(ds.next_states), stats=stats)
    return out, stats


# ----------------------------------------------------------------------------
# binary format (little endian):
#   magic "LAPD" | u32 version | u32 len + env id utf8 | u32 n | u32 state_dim
#   | u32 action_dim | u32 n_tags, tags as (u32 len + utf8)
#   | f64 states | f64 actions | f64 rewards | f64 next_states
#   | u8 terminals | u8 episode_starts | u8 provenance
#   | u8 has_stats [f64 mean, f64 std]


def _put_str(out, s):
    b = s.encode("utf-8")
    out += struct.pack("<I", len(b)) + b


class _Reader:
    def __init__(self, buf, path):
        self.buf, self.pos, self.path = buf, 0, path

    def take(self, n):
        if self.pos + n > len(self.buf):
            raise FormatError(f"{self.path}: truncated file (needed {n} bytes at offset {self.pos})")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self):
        return struct.unpack("<I", self.take(4))[0]

    def u8(self):
        return self.take(1)[0]

    def string(self):
        return self.take(self.u32()).decode("utf-8")

    def f64(self, count, shape=None):
        arr = np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64)
        return arr.reshape(shape) if shape is not None else arr

    def u8s(self, count):
        return np.frombuffer(self.take(count), dtype=np.uint8).copy()


def to_bytes(ds):
    n, sd = ds.states.shape
    ad = ds.actions.shape[1]
    out = bytearray(MAGIC)
    out += struct.pack("<I", VERSION)
    _put_str(out, ds.env_id)
    out += struct.pack("<IIII", n, sd, ad, len(ds.tags))
    for t in ds.tags:
        _put_str(out, t)
    for arr in (ds.states, ds.actions, ds.rewards, ds.next_states):
        out += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    for arr in (ds.terminals, ds.episode_starts):
        out += np.asarray(arr, dtype=np.uint8).tobytes()
    out += np.asarray(ds.provenance, dtype=np.uint8).tobytes()
    out += struct.pack("<B", ds.stats is not None)
    if ds.stats is not None:
        out += np.asarray(ds.stats.mean, dtype="<f8").tobytes() + np.asarray(ds.stats.std, dtype="<f8").tobytes()
    return bytes(out)


def from_bytes(buf, path="<bytes>"):
    r = _Reader(buf, path)
    magic = r.take(4)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    version = r.u32()
    if version != VERSION:
        raise FormatError(f"{path}: dataset format version {version}, this reader supports version {VERSION}")
    env_id = r.string()
    n, sd, ad, n_tags = (r.u32() for _ in range(4))
    tags = tuple(r.string() for _ in range(n_tags))
    states = r.f64(n * sd, (n, sd))
    actions = r.f64(n * ad, (n, ad))
    rewards = r.f64(n)
    next_states = r.f64(n * sd, (n, sd))
    terminals = r.u8s(n).astype(bool)
    starts = r.u8s(n).astype(bool)
    prov = r.u8s(n)
    stats = None
    if r.u8():
        stats = NormStats(r.f64(sd), r.f64(sd))
    if r.pos != len(buf):
        raise FormatError(f"{path}: {len(buf) - r.pos} trailing bytes")
    if n_tags and prov.size and prov.max() >= n_tags:
        raise FormatError(f"{path}: provenance tag out of range")
    return TransitionDataset(env_id, states, actions, rewards, next_states, terminals, starts, prov, tags, stats)


def save(ds, path):
    Path(path).write_bytes(to_bytes(ds))


def load(path):
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as e:
        raise FormatError(f"{path}: cannot read dataset ({e.strerror})") from e
    return from_bytes(buf, str(path))
