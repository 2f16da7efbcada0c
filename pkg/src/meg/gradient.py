"""Gradient of the log-likelihood and its finite-difference oracle.

The gradient vector follows the canonical block layout of
``model.BLOCK_ORDER`` restricted to the blocks the spec requires, matrices
flattened row-major. The finite-difference companion perturbs each
parameter multiplicatively (a central difference in log space) so positivity
is preserved, and exists purely to cross-check the analytic path.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .events import EventIndex
from .likelihood import log_likelihood, log_likelihood_and_gradient
from .model import ModelSpec, Params, TauMatrix, pack_params, unpack_params

__all__ = [
    "grad_log_likelihood",
    "finite_difference_gradient",
    "central_log_difference",
    "pack_params",
    "unpack_params",
]


def grad_log_likelihood(params: Params, index: EventIndex, tau: TauMatrix,
                        spec: ModelSpec, T: float) -> np.ndarray:
    """Exact gradient of the log-likelihood at ``params``."""
    _, grad = log_likelihood_and_gradient(params, index, tau, spec, T)
    return grad


def central_log_difference(fun, x: np.ndarray, step: float) -> np.ndarray:
    """Central differences of ``fun`` with multiplicative perturbations.

    Each coordinate is moved to x * exp(+-step), so strictly positive inputs
    stay positive; the returned vector is d fun / d x by the chain rule
    through log x. Exact for functions linear in log x, whatever the step.
    """
    if step <= 0:
        raise ValidationError("finite-difference step must be positive")
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for idx in range(len(x)):
        hi = x.copy()
        lo = x.copy()
        hi[idx] = x[idx] * np.exp(step)
        lo[idx] = x[idx] * np.exp(-step)
        grad[idx] = (fun(hi) - fun(lo)) / (2.0 * step * x[idx])
    return grad


def finite_difference_gradient(params: Params, index: EventIndex, tau: TauMatrix,
                               spec: ModelSpec, T: float,
                               step: float = 1e-6) -> np.ndarray:
    """Central differences of the log-likelihood, one parameter at a time."""
    shape = index.shape

    def fun(x):
        return log_likelihood(unpack_params(x, shape, spec), index, tau, spec, T)

    return central_log_difference(fun, pack_params(params, spec), step)
