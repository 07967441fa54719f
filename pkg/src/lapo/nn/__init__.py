from .autodiff import Tensor, backward
from .dists import GaussianParams, gaussian_log_prob, kl_std_normal, reparam_sample
from .net import Net, flat_grad, forward, mlp, param_count
from .optim import AdamState, adam_step

__all__ = [
    "Tensor", "backward", "GaussianParams", "gaussian_log_prob", "kl_std_normal",
    "reparam_sample", "Net", "flat_grad", "forward", "mlp", "param_count",
    "AdamState", "adam_step",
]
