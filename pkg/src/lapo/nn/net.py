"""Dense feed-forward networks stored as one flat float64 parameter vector."""

import numpy as np

from ..errors import ConfigError, ShapeError
from . import autodiff as ad

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
# tanh(15) < 1 in float64, so the clamp keeps scaled outputs strictly inside the bound
TANH_PREACT_LIMIT = 15.0

HEADS = ("linear", "gaussian", "tanh")
ACTIVATIONS = ("relu", "tanh")


def param_count(sizes):
    return sum(n_in * n_out + n_out for n_in, n_out in zip(sizes[:-1], sizes[1:]))


class Net:
    """MLP with a configurable output head.

    ``sizes`` lists every layer width including input and output.  For the
    ``gaussian`` head the last width is ``2 * d``: the first half is the mean,
    the second half the log-std (clamped to ``[LOG_STD_MIN, LOG_STD_MAX]``).
    The ``tanh`` head returns ``scale * tanh(h)``.
    """

    def __init__(self, sizes, activation="relu", head="linear", scale=1.0, rng=None, params=None):
        sizes = [int(s) for s in sizes]
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ConfigError(f"invalid layer sizes {sizes}")
        if activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {activation!r}")
        if head not in HEADS:
            raise ConfigError(f"unknown head {head!r}")
        if head == "gaussian" and sizes[-1] % 2:
            raise ConfigError("gaussian head needs an even output width")
        self.sizes = sizes
        self.activation = activation
        self.head = head
        self.scale = float(scale)
        n = param_count(sizes)
        if params is not None:
            params = np.array(params, dtype=np.float64)
            if params.shape != (n,):
                raise ShapeError(f"expected {n} parameters, got {params.shape}")
            self.params = params
        else:
            if rng is None:
                raise ConfigError("Net needs an rng or explicit params")
            self.params = np.empty(n)
            self._init(rng)

    def _init(self, rng):
        # fan-in uniform init, as torch.nn.Linear
        for w, b in self.layers():
            bound = 1.0 / np.sqrt(w.shape[0])
            w[...] = rng.uniform(-bound, bound, size=w.shape)
            b[...] = rng.uniform(-bound, bound, size=b.shape)

    @property
    def in_dim(self):
        return self.sizes[0]

    @property
    def out_dim(self):
        """Width of the returned output (half the raw width for gaussian heads)."""
        return self.sizes[-1] // 2 if self.head == "gaussian" else self.sizes[-1]

    def layers(self, vec=None):
        """(weight, bias) views into ``vec`` (default: the net's own parameters)."""
        vec = self.params if vec is None else vec
        out, i = [], 0
        for n_in, n_out in zip(self.sizes[:-1], self.sizes[1:]):
            w = vec[i:i + n_in * n_out].reshape(n_in, n_out)
            i += n_in * n_out
            b = vec[i:i + n_out]
            i += n_out
            out.append((w, b))
        return out

    def copy(self):
        return Net(self.sizes, self.activation, self.head, self.scale, params=self.params.copy())

    def _check(self, x):
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(f"net expects input of shape (B, {self.in_dim}), got {x.shape}")

    def forward(self, x):
        """Plain numpy evaluation; returns the mean for gaussian heads."""
        x = np.asarray(x, dtype=np.float64)
        self._check(x)
        h = x
        layers = self.layers()
        act = np.tanh if self.activation == "tanh" else (lambda v: np.maximum(v, 0.0))
        for w, b in layers[:-1]:
            h = act(h @ w + b)
        w, b = layers[-1]
        h = h @ w + b
        if self.head == "tanh":
            return self.scale * np.tanh(np.clip(h, -TANH_PREACT_LIMIT, TANH_PREACT_LIMIT))
        if self.head == "gaussian":
            return h[:, :self.out_dim]
        return h

    def forward_gaussian(self, x):
        """Numpy (mean, log_std) for gaussian heads."""
        x = np.asarray(x, dtype=np.float64)
        self._check(x)
        if self.head != "gaussian":
            raise ConfigError("forward_gaussian needs a gaussian head")
        h = x
        layers = self.layers()
        act = np.tanh if self.activation == "tanh" else (lambda v: np.maximum(v, 0.0))
        for w, b in layers[:-1]:
            h = act(h @ w + b)
        w, b = layers[-1]
        h = h @ w + b
        d = self.out_dim
        return h[:, :d], np.clip(h[:, d:], LOG_STD_MIN, LOG_STD_MAX)

    def leaves(self):
        """Fresh gradient-tracking leaves over views of the parameters, layer order."""
        return [ad.param(a) for wb in self.layers() for a in wb]

    def __call__(self, x, leaves=None):
        """Graph-building forward.

        Without ``leaves`` the parameters are constants, so gradients still
        flow into ``x`` (e.g. through a frozen decoder) but not into the net.
        Gaussian heads return ``(mean, log_std)``.
        """
        x = ad.as_tensor(x)
        self._check(x.data)
        if leaves is None:
            leaves = [ad.Tensor(a) for wb in self.layers() for a in wb]
        act = ad.tanh if self.activation == "tanh" else ad.relu
        n_layers = len(self.sizes) - 1
        h = x
        for k in range(n_layers):
            h = ad.linear(h, leaves[2 * k], leaves[2 * k + 1])
            if k < n_layers - 1:
                h = act(h)
        if self.head == "tanh":
            return ad.tanh(ad.clip(h, -TANH_PREACT_LIMIT, TANH_PREACT_LIMIT)) * self.scale
        if self.head == "gaussian":
            d = self.out_dim
            return h[:, :d], ad.clip(h[:, d:], LOG_STD_MIN, LOG_STD_MAX)
        return h


def flat_grad(leaves):
    """Concatenate leaf gradients (zeros where no gradient reached) in order."""
    return np.concatenate([
        (t.grad if t.grad is not None else np.zeros_like(t.data)).ravel() for t in leaves
    ])


def forward(net, batch):
    return net.forward(batch)


def mlp(n_in, n_out, hidden=(64, 64), **kw):
    return Net([n_in, *hidden, n_out], **kw)
