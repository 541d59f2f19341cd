"""Marginal likelihood (evidence) estimators.

Two estimators live here.  :func:`is_evidence` is the generic importance
sampler: draw from a proposal, weight by target-over-proposal, average.  It
estimates the normalizing constant of an unnormalized target density, which
is the model evidence when the target is prior-times-likelihood.
:func:`gaussian_evidence` is the closed form for the linear-Gaussian case,
where the evidence of an observation is just a Gaussian density under the
predicted observation distribution.

Both work in the log domain internally.  If the linear-domain result
underflows to zero the functions return 0.0 and emit a ``RuntimeWarning``
instead of raising: downstream weight updates take log evidences anyway, so
an underflowed linear value is a reporting artifact, not a failure.

The callables inside :class:`UnnormalizedTarget` and :class:`Proposal` are
vectorized over a leading batch axis: ``sample(rng, n)`` returns an (n, d)
array and ``log_density`` maps (n, d) -> (n,).  That keeps million-sample
estimates at numpy speed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import logsumexp

from .errors import NonFiniteWeightError, SingularInnovationCovError

__all__ = [
    "UnnormalizedTarget",
    "Proposal",
    "is_evidence",
    "gaussian_evidence",
    "gaussian_log_evidence",
    "effective_sample_size",
]

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class UnnormalizedTarget:
    """An unnormalized density known only through its log value.

    ``log_density`` maps an (n, d) batch of points to an (n,) vector of log
    densities; ``-inf`` marks points outside the support.
    """

    log_density: Callable


@dataclass(frozen=True)
class Proposal:
    """A distribution we can sample from and evaluate.

    ``sample(rng, n)`` draws an (n, d) batch; ``log_density`` matches the
    convention of :class:`UnnormalizedTarget`.  The proposal must cover the
    target: wherever the target density is positive, so is the proposal's.
    """

    sample: Callable
    log_density: Callable


def is_evidence(target: UnnormalizedTarget, proposal: Proposal, n: int,
                rng: np.random.Generator):
    """Importance-sampling estimate of a normalizing constant.

    Draws ``n`` points from ``proposal``, forms log weights
    ``target.log_density(x) - proposal.log_density(x)`` and averages them
    through a log-sum-exp, so enormous dynamic ranges in the weights do not
    break the estimate.  When the target equals the proposal's own
    normalized density every weight is exactly one and the estimate is
    exactly 1.0 for any ``n``.

    Returns
    -------
    estimate : float
        Linear-domain estimate of the normalizing constant.  0.0 (with a
        ``RuntimeWarning``) if every weight underflowed.
    importance_weights : ndarray, shape (n,)
        Linear-domain weights, for diagnostics such as
        :func:`effective_sample_size`.  Individual entries may underflow to
        zero; that is harmless.

    Raises
    ------
    NonFiniteWeightError
        If any log weight comes out NaN or +inf, which means the proposal
        does not actually cover the target.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    x = proposal.sample(rng, n)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim == 1:
        x = x[:, None]
    log_w = (np.asarray(target.log_density(x), dtype=float)
             - np.asarray(proposal.log_density(x), dtype=float))
    if log_w.shape != (n,):
        raise ValueError("log densities must return one value per sample")
    if np.any(np.isnan(log_w)) or np.any(log_w == np.inf):
        raise NonFiniteWeightError(
            "importance weight is NaN or +inf; proposal does not cover target")
    if float(np.max(log_w)) == -np.inf:
        warnings.warn("all importance weights underflowed; returning 0",
                      RuntimeWarning, stacklevel=2)
        return 0.0, np.zeros(n)
    estimate = float(np.exp(logsumexp(log_w) - np.log(n)))
    if estimate == 0.0:
        warnings.warn("evidence underflowed in the linear domain; returning 0",
                      RuntimeWarning, stacklevel=2)
    return estimate, np.exp(log_w)


def effective_sample_size(weights) -> float:
    """ESS diagnostic ``1 / sum(wbar_i^2)`` on normalized weights.

    Ranges from 1 (one weight carries everything) to ``n`` (flat weights).
    Diagnostic only; nothing in the package branches on it.
    """
    w = np.atleast_1d(np.asarray(weights, dtype=float))
    s = float(w.sum())
    if s <= 0.0:
        return 0.0
    wbar = w / s
    return float(1.0 / np.sum(wbar * wbar))


def _innovation_chol(predictive, B, R):
    """Cholesky of the innovation covariance S = B P B^T + R."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    s = B @ predictive.cov @ B.T + R
    s = 0.5 * (s + s.T)
    try:
        return cho_factor(s, lower=True), s
    except np.linalg.LinAlgError as exc:
        raise SingularInnovationCovError(
            "innovation covariance is not positive definite") from exc


def gaussian_log_evidence(y, predictive, B, R) -> float:
    """Log density of ``y`` under the predicted observation distribution.

    For a Gaussian state belief pushed through a linear observation map
    ``y = B x + noise`` with noise covariance ``R``, the observation is
    Gaussian with mean ``B mean`` and covariance ``S = B cov B^T + R``.

    Raises
    ------
    SingularInnovationCovError
        If ``S`` cannot be Cholesky-factorized.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    (c, lower), s = _innovation_chol(predictive, B, R)
    resid = y - B @ predictive.mean
    if resid.shape != (s.shape[0],):
        raise ValueError("observation dimension does not match B")
    alpha = cho_solve((c, lower), resid)
    logdet = 2.0 * float(np.sum(np.log(np.diag(c))))
    return float(-0.5 * (y.size * LOG_2PI + logdet + resid @ alpha))


def gaussian_evidence(y, predictive, B, R) -> float:
    """Linear-domain version of :func:`gaussian_log_evidence`.

    Returns 0.0 with a ``RuntimeWarning`` if the density underflows.
    """
    log_ev = gaussian_log_evidence(y, predictive, B, R)
    ev = float(np.exp(log_ev))
    if ev == 0.0 and log_ev > -np.inf:
        warnings.warn("evidence underflowed in the linear domain; returning 0",
                      RuntimeWarning, stacklevel=2)
    return ev
