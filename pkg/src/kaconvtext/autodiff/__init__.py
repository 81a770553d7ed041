from . import functional
from .gradcheck import check_gradients, numerical_grad, relative_error
from .optim import Adam, AdamState, adam_step
from .tensor import Tensor, as_tensor, backward, is_grad_enabled, no_grad

__all__ = [
    "Adam",
    "AdamState",
    "Tensor",
    "adam_step",
    "as_tensor",
    "backward",
    "check_gradients",
    "functional",
    "is_grad_enabled",
    "no_grad",
    "numerical_grad",
    "relative_error",
]
