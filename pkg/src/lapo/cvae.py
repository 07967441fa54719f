"""Conditional VAE action policy trained on the advantage-weighted ELBO."""

import numpy as np

from . import nn
from .errors import ConfigError, ContractError
from .nn import autodiff as ad


class CvaePolicy:
    """Encoder q(z|s,a) and tanh-bounded decoder π(a|s,z) with a N(0, I) prior.

    The encoder sees ``a / action_bound``; reconstruction error is measured in
    the same bound-normalized units with a fixed decoder std ``decoder_std``.
    """

    def __init__(self, state_dim, action_dim, action_bound, rng, latent_dim=None, beta=0.5,
                 decoder_std=0.2, hidden=(64, 64), activation="relu", lr=3e-4):
        if beta < 0:
            raise ConfigError("beta must be >= 0")
        if decoder_std <= 0:
            raise ConfigError("decoder_std must be positive")
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.latent_dim = int(latent_dim or 2 * action_dim)
        self.action_bound = float(action_bound)
        self.beta = float(beta)
        self.decoder_std = float(decoder_std)
        self.encoder = nn.Net([state_dim + action_dim, *hidden, 2 * self.latent_dim], activation,
                              head="gaussian", rng=rng)
        self.decoder = nn.Net([state_dim + self.latent_dim, *hidden, action_dim], activation,
                              head="tanh", scale=action_bound, rng=rng)
        self.enc_opt = nn.AdamState(self.encoder.params.size, lr=lr)
        self.dec_opt = nn.AdamState(self.decoder.params.size, lr=lr)

    def nets(self):
        return {"encoder": self.encoder, "decoder": self.decoder}

    def optims(self):
        return {"encoder": self.enc_opt, "decoder": self.dec_opt}


def decode(policy, states, z):
    """Deterministic decoder mean in env action units."""
    states = np.atleast_2d(states)
    return policy.decoder.forward(np.concatenate([states, np.atleast_2d(z)], axis=1))


def sample_prior(d_z, rng, n=None):
    if d_z < 1:
        raise ConfigError("latent dimension must be >= 1")
    return rng.standard_normal(d_z if n is None else (n, d_z))


def elbo_terms(policy, states, actions, noise, enc_leaves=None, dec_leaves=None):
    """Per-row (reconstruction, KL) graph tensors for a batch."""
    b = policy.action_bound
    mean, log_std = policy.encoder(np.concatenate([states, actions / b], axis=1), enc_leaves)
    gp = nn.GaussianParams(mean, log_std)
    z = nn.reparam_sample(gp, noise)
    recon_a = policy.decoder(ad.concat([ad.Tensor(states), z]), dec_leaves)
    err = (recon_a - actions) * (1.0 / b)
    recon = ad.tsum(ad.square(err), axis=1) * (0.5 / policy.decoder_std ** 2)
    return recon, nn.kl_std_normal(gp)


def weighted_elbo_loss(policy, batch, weights, rng, enc_leaves=None, dec_leaves=None):
    """mean_i ω_i (recon_i + β KL_i) with z reparameterized from the encoder.

    Returns ``(loss, recon_rows, kl_rows)``; ``weights`` may be an
    :class:`AdvantageWeights` or a plain array.
    """
    w = np.asarray(getattr(weights, "values", weights), dtype=np.float64)
    n = len(batch.states)
    if w.shape != (n,):
        raise ContractError(f"{w.shape[0] if w.ndim else 0} weights for a batch of {n}")
    noise = rng.standard_normal((n, policy.latent_dim))
    recon, kl = elbo_terms(policy, batch.states, batch.actions, noise, enc_leaves, dec_leaves)
    loss = ad.mean((recon + kl * policy.beta) * w)
    return loss, recon.data, kl.data


def update_cvae(policy, batch, weights, rng):
    """One joint Adam step on encoder and decoder; returns (recon, kl) batch means."""
    enc, dec = policy.encoder.leaves(), policy.decoder.leaves()
    loss, recon, kl = weighted_elbo_loss(policy, batch, weights, rng, enc, dec)
    loss.backward()
    policy.encoder.params = nn.adam_step(policy.encoder.params, nn.flat_grad(enc), policy.enc_opt)
    policy.decoder.params = nn.adam_step(policy.decoder.params, nn.flat_grad(dec), policy.dec_opt)
    return float(recon.mean()), float(kl.mean())
