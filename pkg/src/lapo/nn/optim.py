from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError


@dataclass
class AdamState:
    n: int
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: np.ndarray = field(default=None)
    v: np.ndarray = field(default=None)
    t: int = 0

    def __post_init__(self):
        if self.m is None:
            self.m = np.zeros(self.n)
        if self.v is None:
            self.v = np.zeros(self.n)

    def copy(self):
        return AdamState(self.n, self.lr, self.beta1, self.beta2, self.eps,
                         self.m.copy(), self.v.copy(), self.t)


def adam_step(params, grads, state):
    """Return ``params`` after one bias-corrected Adam update; mutates ``state``.

    An identically zero gradient leaves parameters and moments untouched
    (only the step counter advances), so frozen nets stay bitwise frozen.
    """
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or params.shape != (state.n,):
        raise ContractError(
            f"adam_step length mismatch: params {params.shape}, grads {grads.shape}, state {state.n}")
    state.t += 1
    if not grads.any():
        return params.copy()
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    return params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
