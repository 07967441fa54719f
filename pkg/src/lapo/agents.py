"""Per-method bundles of networks, built from a config and an env spec.

An agent exposes ``nets()``/``optims()`` (flat name -> Net / AdamState maps
used by checkpoints) and ``act(states, rng)`` for evaluation on normalized
states.
"""

import numpy as np

from .baselines import GaussianPolicy, GmmPolicy
from .critic import CriticPair
from .cvae import CvaePolicy, decode, sample_prior
from .errors import ConfigError
from .latent import LatentPolicy, overall_act


class LapoAgent:
    """Critic + CVAE + latent policy; also runs PLAS and the two ablations."""

    def __init__(self, config, spec, rng):
        sd, ad, b = spec.state_dim, spec.action_dim, spec.action_bound
        hid, act = config.hidden, config.activation
        self.config = config
        self.critic = CriticPair(sd, ad, b, rng, hid, act, config.lr_critic, config.tau)
        self.cvae = CvaePolicy(sd, ad, b, rng, config.latent_dim or None, config.beta,
                               config.decoder_std, hid, act, config.lr_cvae)
        self.latent = LatentPolicy(sd, self.cvae.latent_dim, rng, config.z_max, not config.unbounded_z,
                                   config.stochastic_latent, hid, act, config.lr_latent, config.tau)

    @property
    def uses_latent_policy(self):
        return not self.config.no_latent_policy

    def nets(self):
        out = {f"critic.{k}": v for k, v in self.critic.nets().items()}
        out.update({f"cvae.{k}": v for k, v in self.cvae.nets().items()})
        out.update({f"latent.{k}": v for k, v in self.latent.nets().items()})
        return out

    def optims(self):
        out = {f"critic.{k}": v for k, v in self.critic.optims().items()}
        out.update({f"cvae.{k}": v for k, v in self.cvae.optims().items()})
        out.update({f"latent.{k}": v for k, v in self.latent.optims().items()})
        return out

    def prior_action(self, states, rng):
        return decode(self.cvae, states, sample_prior(self.cvae.latent_dim, rng, len(states)))

    def td_policy(self, states, rng):
        """Smoothed target latent policy through the decoder (prior z under the ablation)."""
        if not self.uses_latent_policy:
            return self.prior_action(states, rng)
        c = self.config
        z = self.latent.forward(states, target=True)
        noise = np.clip(rng.normal(0.0, c.target_noise, z.shape), -c.target_noise_clip, c.target_noise_clip)
        return decode(self.cvae, states, self.latent.clamp(z + noise))

    def value_policy(self, states, rng):
        if not self.uses_latent_policy:
            return self.prior_action(states, rng)
        return overall_act(self.latent, self.cvae, states)

    def act(self, states, rng=None):
        states = np.atleast_2d(states)
        if not self.uses_latent_policy:
            return self.prior_action(states, rng)
        return overall_act(self.latent, self.cvae, states)


class ActorAgent:
    """Action-space policy for BC (no critic) and AWAC (Gaussian or GMM)."""

    def __init__(self, config, spec, rng):
        sd, ad, b = spec.state_dim, spec.action_dim, spec.action_bound
        hid, act = config.hidden, config.activation
        self.config = config
        self.critic = None
        if config.method in ("awac", "awac-gmm"):
            self.critic = CriticPair(sd, ad, b, rng, hid, act, config.lr_critic, config.tau)
        if config.method == "awac-gmm":
            self.policy = GmmPolicy(sd, ad, b, rng, config.gmm_components, hid, act, config.lr_actor)
        else:
            self.policy = GaussianPolicy(sd, ad, b, rng, hid, act, config.lr_actor)

    def nets(self):
        out = {f"policy.{k}": v for k, v in self.policy.nets().items()}
        if self.critic is not None:
            out.update({f"critic.{k}": v for k, v in self.critic.nets().items()})
        return out

    def optims(self):
        out = {f"policy.{k}": v for k, v in self.policy.optims().items()}
        if self.critic is not None:
            out.update({f"critic.{k}": v for k, v in self.critic.optims().items()})
        return out

    def act(self, states, rng=None):
        return self.policy.mode(np.atleast_2d(states))

    def sample(self, states, rng):
        return self.policy.sample(states, rng)


def build_agent(config, spec, rng):
    if config.method in ("lapo", "plas"):
        return LapoAgent(config, spec, rng)
    if config.method in ("bc", "awac", "awac-gmm"):
        return ActorAgent(config, spec, rng)
    raise ConfigError(f"unknown method {config.method!r}")


def load_agent(checkpoint, spec):
    """Rebuild an agent and copy the checkpoint's parameters and optimizer states into it."""
    agent = build_agent(checkpoint.config, spec, np.random.default_rng(0))
    nets, optims = agent.nets(), agent.optims()
    if set(nets) != set(checkpoint.params):
        raise ConfigError(f"checkpoint nets {sorted(checkpoint.params)} do not match {sorted(nets)}")
    for name, net in nets.items():
        net.params = checkpoint.params[name].copy()
    for name, st in optims.items():
        if name in checkpoint.optims:
            src = checkpoint.optims[name]
            st.m, st.v, st.t = src.m.copy(), src.v.copy(), src.t
            st.lr, st.beta1, st.beta2, st.eps = src.lr, src.beta1, src.beta2, src.eps
    return agent
