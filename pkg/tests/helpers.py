"""Shared test utilities: a finite-difference oracle and small fixtures."""

import numpy as np

FD_STEP = 1e-5


def central_fd(f, x, h=FD_STEP):
    """Central-difference gradient of scalar ``f`` at flat vector ``x``."""
    x = np.array(x, dtype=np.float64)
    g = np.empty_like(x)
    for i in range(x.size):
        old = x[i]
        x[i] = old + h
        fp = f(x)
        x[i] = old - h
        fm = f(x)
        x[i] = old
        g[i] = (fp - fm) / (2 * h)
    return g


def max_rel_error(analytic, numeric, floor=1e-6):
    """Largest |a - n| / max(|a|, |n|, floor) over components."""
    a, n = np.asarray(analytic), np.asarray(numeric)
    return float(np.max(np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)))


def net_fd(net, loss_of_params):
    """FD gradient with respect to ``net.params``; restores them afterwards."""
    saved = net.params.copy()

    def f(p):
        net.params = p.copy()
        return loss_of_params()

    try:
        return central_fd(f, saved)
    finally:
        net.params = saved
