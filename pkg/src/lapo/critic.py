"""Twin Q-functions, TD policy evaluation and exponential advantage weights.

Critics see ``state ⊕ action / action_bound``.  A *policy* here is any
callable ``policy(states, rng) -> actions`` returning env-unit actions
without gradient; the trainers build them from the latent/action policies.
"""

from dataclasses import dataclass

import numpy as np

from . import nn
from .errors import ConfigError
from .nn import autodiff as ad

# exp() stays strictly positive above this exponent
_MIN_LOG_WEIGHT = -700.0


class CriticPair:
    def __init__(self, state_dim, action_dim, action_bound, rng, hidden=(64, 64),
                 activation="relu", lr=3e-4, tau=0.005):
        if not 0.0 < tau <= 1.0:
            raise ConfigError(f"tau must lie in (0, 1], got {tau}")
        self.action_bound = float(action_bound)
        self.tau = float(tau)
        sizes = [state_dim + action_dim, *hidden, 1]
        self.q1 = nn.Net(sizes, activation, rng=rng)
        self.q2 = nn.Net(sizes, activation, rng=rng)
        self.q1_target = self.q1.copy()
        self.q2_target = self.q2.copy()
        self.opt1 = nn.AdamState(self.q1.params.size, lr=lr)
        self.opt2 = nn.AdamState(self.q2.params.size, lr=lr)

    def inputs(self, states, actions):
        return np.concatenate([states, np.asarray(actions) / self.action_bound], axis=1)

    def q(self, states, actions):
        x = self.inputs(states, actions)
        return self.q1.forward(x)[:, 0], self.q2.forward(x)[:, 0]

    def q_min(self, states, actions):
        return np.minimum(*self.q(states, actions))

    def q_target_min(self, states, actions):
        x = self.inputs(states, actions)
        return np.minimum(self.q1_target.forward(x)[:, 0], self.q2_target.forward(x)[:, 0])

    def nets(self):
        return {"q1": self.q1, "q2": self.q2, "q1_target": self.q1_target, "q2_target": self.q2_target}

    def optims(self):
        return {"q1": self.opt1, "q2": self.opt2}


@dataclass
class AdvantageWeights:
    values: np.ndarray
    lam: float
    omega_max: float
    advantages: np.ndarray = None

    def __len__(self):
        return len(self.values)

    @classmethod
    def ones(cls, n, lam=1.0, omega_max=1.0):
        return cls(np.ones(n), lam, omega_max, np.zeros(n))


def estimate_value(critic, states, policy, n_samples, rng):
    """Monte-Carlo V(s): mean over policy samples of the min target Q."""
    if n_samples < 1:
        raise ConfigError("n_samples must be >= 1")
    v = np.zeros(len(states))
    for _ in range(n_samples):
        v += critic.q_target_min(states, policy(states, rng))
    return v / n_samples


def td_targets(critic, batch, policy, gamma, rng, n_samples=1):
    v_next = estimate_value(critic, batch.next_states, policy, n_samples, rng)
    return batch.rewards + gamma * (1.0 - batch.terminals) * v_next


def td_loss(net, x, y, leaves=None):
    """Mean squared TD error of one critic against fixed targets ``y`` (n, 1)."""
    return ad.mean(ad.square(net(x, leaves) - y))


def td_update(critic, batch, policy, gamma, rng, n_samples=1):
    """One Adam step on both online critics toward r + γ(1-d)V(s'); returns the mean MSE."""
    if not 0.0 <= gamma <= 1.0:
        raise ConfigError("gamma must lie in [0, 1]")
    y = td_targets(critic, batch, policy, gamma, rng, n_samples)[:, None]
    x = critic.inputs(batch.states, batch.actions)
    losses = []
    for net, opt in ((critic.q1, critic.opt1), (critic.q2, critic.opt2)):
        leaves = net.leaves()
        loss = td_loss(net, x, y, leaves)
        loss.backward()
        net.params = nn.adam_step(net.params, nn.flat_grad(leaves), opt)
        losses.append(loss.item())
    return 0.5 * (losses[0] + losses[1])


def advantage_weights(critic, batch, policy, lam, omega_max, rng, n_samples=1):
    """ω = min(exp((min-online-Q(s,a) - V(s)) / λ), ω_max)."""
    if lam <= 0:
        raise ConfigError(f"temperature lambda must be positive, got {lam}")
    if omega_max <= 0:
        raise ConfigError("omega_max must be positive")
    q = critic.q_min(batch.states, batch.actions)
    v = estimate_value(critic, batch.states, policy, n_samples, rng)
    adv = q - v
    top = np.log(omega_max)
    logw = np.clip(adv / lam, _MIN_LOG_WEIGHT, top)
    # exp(log(x)) can round below x, so saturated weights are set exactly
    w = np.where(logw >= top, omega_max, np.minimum(np.exp(logw), omega_max))
    return AdvantageWeights(w, lam, omega_max, adv)


def polyak(target, online, tau):
    """target <- τ·online + (1-τ)·target, exact copy at τ = 1 and exact fixed point when equal."""
    if not 0.0 < tau <= 1.0:
        raise ConfigError(f"tau must lie in (0, 1], got {tau}")
    if tau == 1.0:
        target.params = online.params.copy()
    else:
        target.params = target.params + tau * (online.params - target.params)


def soft_update(critic, tau=None):
    tau = critic.tau if tau is None else tau
    polyak(critic.q1_target, critic.q1, tau)
    polyak(critic.q2_target, critic.q2, tau)
