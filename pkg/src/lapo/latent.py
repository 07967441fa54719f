"""Latent policy s -> z, the composed overall policy, and its DPG update."""

import numpy as np

from . import nn
from .critic import polyak
from .cvae import decode
from .errors import ConfigError
from .nn import autodiff as ad


class LatentPolicy:
    """Deterministic (default) or clamped-Gaussian policy over the CVAE latent.

    ``bounded=False`` swaps the ``z_max * tanh`` head for a linear one.
    """

    def __init__(self, state_dim, latent_dim, rng, z_max=2.0, bounded=True, stochastic=False,
                 hidden=(64, 64), activation="relu", lr=1e-4, tau=0.005):
        if z_max <= 0:
            raise ConfigError("z_max must be positive")
        self.latent_dim = latent_dim
        self.z_max = float(z_max)
        self.bounded = bool(bounded)
        self.stochastic = bool(stochastic)
        self.tau = float(tau)
        if stochastic:
            self.net = nn.Net([state_dim, *hidden, 2 * latent_dim], activation, head="gaussian", rng=rng)
        elif bounded:
            self.net = nn.Net([state_dim, *hidden, latent_dim], activation, head="tanh", scale=z_max, rng=rng)
        else:
            self.net = nn.Net([state_dim, *hidden, latent_dim], activation, rng=rng)
        self.target = self.net.copy()
        self.opt = nn.AdamState(self.net.params.size, lr=lr)

    def nets(self):
        return {"latent": self.net, "latent_target": self.target}

    def optims(self):
        return {"latent": self.opt}

    def _squash(self, mean):
        return self.z_max * np.tanh(mean) if self.bounded else mean

    def forward(self, states, target=False):
        net = self.target if target else self.net
        if self.stochastic:
            return self._squash(net.forward_gaussian(states)[0])
        return net.forward(states)

    def graph(self, states, leaves, rng=None):
        """Differentiable z; stochastic policies reparameterize and clamp."""
        if not self.stochastic:
            return self.net(states, leaves)
        mean, log_std = self.net(states, leaves)
        if self.bounded:
            mean = ad.tanh(mean) * self.z_max
        z = mean + ad.exp(log_std) * rng.standard_normal(mean.shape)
        return ad.clip(z, -self.z_max, self.z_max) if self.bounded else z

    def clamp(self, z):
        return np.clip(z, -self.z_max, self.z_max) if self.bounded else z


def act_latent(lp, states):
    return lp.forward(np.atleast_2d(states))


def overall_act(lp, cvae, states):
    states = np.atleast_2d(states)
    return decode(cvae, states, act_latent(lp, states))


def latent_objective(lp, cvae, critic, states, leaves=None, rng=None, use_min=False):
    """Graph of mean Q(s, decode(s, π(s))) with the decoder and critic frozen."""
    z = lp.graph(states, leaves, rng)
    # frozen nets: constant parameters, gradient flows only through their inputs
    a = cvae.decoder(ad.concat([ad.Tensor(states), z]))
    x = ad.concat([ad.Tensor(states), a * (1.0 / critic.action_bound)])
    q = critic.q1(x)
    if use_min:
        q2 = critic.q2(x)
        pick = (q.data <= q2.data).astype(np.float64)
        q = q * pick + q2 * (1.0 - pick)
    return ad.mean(q)


def update_latent_policy(lp, cvae, critic, states, rng=None, use_min=False):
    """One ascent step on the latent objective; returns its value before the step."""
    leaves = lp.net.leaves()
    objective = latent_objective(lp, cvae, critic, states, leaves, rng, use_min)
    (-objective).backward()
    lp.net.params = nn.adam_step(lp.net.params, nn.flat_grad(leaves), lp.opt)
    return objective.item()


def soft_update_latent(lp, tau=None):
    polyak(lp.target, lp.net, lp.tau if tau is None else tau)
