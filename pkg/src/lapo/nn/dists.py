"""Diagonal Gaussian utilities that work on arrays and on graph tensors alike.

Results are :class:`Tensor` objects; call ``.data`` for plain values.  For a
batch of rows, log-probabilities and KLs are returned per row.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import NumericError, ShapeError
from . import autodiff as ad
from .net import LOG_STD_MAX, LOG_STD_MIN

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class GaussianParams:
    mean: object
    log_std: object

    def __post_init__(self):
        if isinstance(self.log_std, ad.Tensor):
            self.log_std = ad.clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX)
        else:
            self.log_std = np.clip(np.asarray(self.log_std, dtype=np.float64), LOG_STD_MIN, LOG_STD_MAX)
        if not isinstance(self.mean, ad.Tensor):
            self.mean = np.asarray(self.mean, dtype=np.float64)
        if np.shape(_data(self.mean)) != np.shape(_data(self.log_std)):
            raise ShapeError("mean and log_std shapes differ")

    @property
    def std(self):
        return np.exp(_data(self.log_std))


def _data(x):
    return x.data if isinstance(x, ad.Tensor) else np.asarray(x)


def _finite(*xs):
    for x in xs:
        if not np.all(np.isfinite(_data(x))):
            raise NumericError("non-finite input to a Gaussian op")


def gaussian_log_prob(gp, x):
    """log N(x; mean, exp(log_std)^2), summed over the last axis."""
    _finite(gp.mean, gp.log_std, x)
    if np.shape(_data(x)) != np.shape(_data(gp.mean)):
        raise ShapeError(f"x shape {np.shape(_data(x))} != mean shape {np.shape(_data(gp.mean))}")
    mean, log_std = ad.as_tensor(gp.mean), ad.as_tensor(gp.log_std)
    z = (ad.as_tensor(x) - mean) * ad.exp(-log_std)
    d = z.data.shape[-1]
    return ad.tsum(ad.square(z), axis=-1) * -0.5 - ad.tsum(log_std, axis=-1) - 0.5 * d * LOG_2PI


def kl_std_normal(gp):
    """KL(N(mean, std^2) || N(0, I)), summed over the last axis."""
    _finite(gp.mean, gp.log_std)
    mean, log_std = ad.as_tensor(gp.mean), ad.as_tensor(gp.log_std)
    terms = ad.square(mean) + ad.exp(log_std * 2.0) - log_std * 2.0 - 1.0
    return ad.tsum(terms, axis=-1) * 0.5


def reparam_sample(gp, noise):
    """mean + exp(log_std) * noise; differentiable in both parameters."""
    if np.shape(_data(noise)) != np.shape(_data(gp.mean)):
        raise ShapeError("noise shape does not match the distribution")
    return ad.as_tensor(gp.mean) + ad.exp(ad.as_tensor(gp.log_std)) * noise
