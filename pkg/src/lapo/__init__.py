"""Offline RL with latent-variable advantage-weighted policies on small analytic tasks."""

__version__ = "0.1.0"
