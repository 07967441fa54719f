"""Gaussian and Gaussian-mixture action-space policies for BC and AWAC.

Distributions live in bound-normalized action units ``u = a / action_bound``;
sampled actions are clipped to the box before use.
"""

import numpy as np

from . import nn
from .errors import ConfigError, ContractError
from .nn import autodiff as ad
from .nn.dists import LOG_2PI
from .nn.net import LOG_STD_MAX, LOG_STD_MIN


class GaussianPolicy:
    kind = "gaussian"

    def __init__(self, state_dim, action_dim, action_bound, rng, hidden=(64, 64),
                 activation="relu", lr=3e-4, params=None):
        self.action_dim = action_dim
        self.action_bound = float(action_bound)
        self.net = nn.Net([state_dim, *hidden, 2 * action_dim], activation, head="gaussian",
                          rng=rng, params=params)
        self.opt = nn.AdamState(self.net.params.size, lr=lr)

    def nets(self):
        return {"actor": self.net}

    def optims(self):
        return {"actor": self.opt}

    def log_prob(self, states, actions, leaves=None):
        mean, log_std = self.net(states, leaves)
        return nn.gaussian_log_prob(nn.GaussianParams(mean, log_std), actions / self.action_bound)

    def mode(self, states):
        return np.clip(self.net.forward(np.atleast_2d(states)), -1, 1) * self.action_bound

    def sample(self, states, rng):
        mean, log_std = self.net.forward_gaussian(np.atleast_2d(states))
        u = mean + np.exp(log_std) * rng.standard_normal(mean.shape)
        return np.clip(u, -1, 1) * self.action_bound


class GmmPolicy:
    """K-component diagonal mixture; raw output = [logits K | means K·d | log-stds K·d]."""

    kind = "gmm"

    def __init__(self, state_dim, action_dim, action_bound, rng, n_components=5, hidden=(64, 64),
                 activation="relu", lr=3e-4, params=None):
        if n_components < 1:
            raise ConfigError("a GMM needs at least one component")
        self.k = int(n_components)
        self.action_dim = action_dim
        self.action_bound = float(action_bound)
        self.net = nn.Net([state_dim, *hidden, self.k * (1 + 2 * action_dim)], activation,
                          rng=rng, params=params)
        self.opt = nn.AdamState(self.net.params.size, lr=lr)

    def nets(self):
        return {"actor": self.net}

    def optims(self):
        return {"actor": self.opt}

    def _split(self, out):
        k, d = self.k, self.action_dim
        return out[:, :k], out[:, k:k + k * d], out[:, k + k * d:]

    def log_prob(self, states, actions, leaves=None):
        out = self.net(states, leaves)
        k, d = self.k, self.action_dim
        logits, means, log_stds = self._split(out)
        log_stds = ad.clip(log_stds, LOG_STD_MIN, LOG_STD_MAX)
        log_mix = logits - ad.logsumexp(logits, axis=1)[:, None] if k > 1 else logits - logits
        u = np.tile(actions / self.action_bound, (1, k))
        z2 = ad.square((ad.Tensor(u) - means) * ad.exp(-log_stds))
        # per-component sums over the d action dims via a block indicator
        block = np.kron(np.eye(k), np.ones((d, 1)))
        comp = (z2 @ block) * -0.5 - log_stds @ block - 0.5 * d * LOG_2PI
        return ad.logsumexp(log_mix + comp, axis=1)

    def _params(self, states):
        out = self.net.forward(np.atleast_2d(states))
        k, d = self.k, self.action_dim
        logits, means, log_stds = self._split(out)
        return logits, means.reshape(-1, k, d), np.clip(log_stds, LOG_STD_MIN, LOG_STD_MAX).reshape(-1, k, d)

    def mode(self, states):
        logits, means, _ = self._params(states)
        best = np.argmax(logits, axis=1)
        return np.clip(means[np.arange(len(best)), best], -1, 1) * self.action_bound

    def sample(self, states, rng):
        logits, means, log_stds = self._params(states)
        p = np.exp(logits - logits.max(axis=1, keepdims=True))
        p /= p.sum(axis=1, keepdims=True)
        c = (p.cumsum(axis=1) > rng.random((len(p), 1))).argmax(axis=1)
        idx = np.arange(len(c))
        u = means[idx, c] + np.exp(log_stds[idx, c]) * rng.standard_normal(means[idx, c].shape)
        return np.clip(u, -1, 1) * self.action_bound


def weighted_nll(policy, batch, weights, leaves=None):
    """-mean_i ω_i log π(a_i|s_i); ω ≡ 1 is plain behavior cloning."""
    w = np.asarray(getattr(weights, "values", weights), dtype=np.float64)
    if w.shape != (len(batch.states),):
        raise ContractError("weights do not align with the batch")
    return -ad.mean(policy.log_prob(batch.states, batch.actions, leaves) * w)


def update_policy(policy, batch, weights):
    leaves = policy.net.leaves()
    loss = weighted_nll(policy, batch, weights, leaves)
    loss.backward()
    policy.net.params = nn.adam_step(policy.net.params, nn.flat_grad(leaves), policy.opt)
    return loss.item()
