"""Core value types and weight arithmetic for dynamic model ensembles.

The objects here are the common currency of every engine in the package:

* :class:`WeightVector` -- a point on the probability simplex, one weight per
  candidate model.
* :class:`WeightHistory` -- the trajectory of posterior weight vectors over
  time, plus running column sums (cheap fuel for urn-style operators).
* :class:`GaussianBelief` -- mean and covariance of a Gaussian state belief.
* :class:`PointEstimate` -- a bare point estimate of the latent state.

Operations are pure functions: state in, state out, nothing mutated.  All
weight updates run in the log domain with a log-sum-exp normalization so that
tiny evidences (common under sharply peaked likelihoods) do not underflow the
update itself.

Numerical conventions used throughout the package:

* weight vectors must sum to 1 within ``SIMPLEX_ATOL`` (1e-12),
* covariance matrices are re-symmetrized as ``(A + A.T) / 2`` after every
  step and must have eigenvalues >= -``PSD_ATOL`` (1e-10),
* an all-zero evidence vector raises :class:`~bdemm.errors.AllZeroError`;
  engines catch it and carry the predictive weights forward unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import (
    AllZeroError,
    DimensionMismatchError,
    NegativeEntryError,
)

SIMPLEX_ATOL = 1e-12
SYM_ATOL = 1e-10
PSD_ATOL = 1e-10

__all__ = [
    "WeightVector",
    "WeightHistory",
    "GaussianBelief",
    "PointEstimate",
    "normalize_weights",
    "update_model_weights",
    "update_model_weights_log",
    "apply_weight_floor",
    "bma_point_estimate",
    "collapse_mixture",
    "SIMPLEX_ATOL",
    "SYM_ATOL",
    "PSD_ATOL",
]


def _frozen(a):
    """Return a read-only float copy of ``a``."""
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class WeightVector:
    """Probability weights over K candidate models.

    Parameters
    ----------
    w : array_like, shape (K,)
        Nonnegative entries summing to 1 within ``SIMPLEX_ATOL``.  The stored
        array is a read-only copy, so instances are safe to share.
    """

    w: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.w, dtype=float))
        if w.ndim != 1 or w.size < 1:
            raise DimensionMismatchError("weights must be a non-empty 1-d vector")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < 0.0):
            raise NegativeEntryError("weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > SIMPLEX_ATOL:
            raise ValueError("weights must sum to 1 within %g (got %r)"
                             % (SIMPLEX_ATOL, float(w.sum())))
        object.__setattr__(self, "w", _frozen(w))

    def __len__(self) -> int:
        return self.w.size

    @classmethod
    def uniform(cls, k: int) -> "WeightVector":
        """Uniform weights over ``k`` models."""
        if k < 1:
            raise DimensionMismatchError("need at least one model")
        return cls(np.full(k, 1.0 / k))


@dataclass(frozen=True)
class WeightHistory:
    """Ordered record of weight vectors plus running column sums.

    The first row is the initial weight assignment (time 0); each completed
    step appends its posterior weights, so ``len(history)`` is the number of
    completed steps plus one.  ``cumulative[k]`` tracks the column sum
    ``sum_rows w_k`` incrementally, which is what urn-style transition
    operators consume without replaying the whole record.
    """

    rows: tuple
    cumulative: np.ndarray

    def __post_init__(self):
        if not self.rows:
            raise ValueError("a weight history must hold at least one row")
        k = len(self.rows[0])
        for row in self.rows:
            if not isinstance(row, WeightVector):
                raise TypeError("history rows must be WeightVector instances")
            if len(row) != k:
                raise DimensionMismatchError("history rows differ in length")
        cum = np.asarray(self.cumulative, dtype=float)
        if cum.shape != (k,):
            raise DimensionMismatchError("cumulative sums must be one per model")
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "cumulative", _frozen(cum))

    @classmethod
    def start(cls, initial: WeightVector) -> "WeightHistory":
        """History holding only the initial weight assignment."""
        return cls((initial,), initial.w.copy())

    def append(self, weights: WeightVector) -> "WeightHistory":
        """New history with ``weights`` as the latest row (self unchanged)."""
        if len(weights) != self.width:
            raise DimensionMismatchError("appended row has wrong length")
        return WeightHistory(self.rows + (weights,), self.cumulative + weights.w)

    @property
    def last(self) -> WeightVector:
        return self.rows[-1]

    @property
    def width(self) -> int:
        return len(self.rows[0])

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class GaussianBelief:
    """Gaussian state belief N(mean, cov).

    The covariance is re-symmetrized on construction and must be symmetric
    positive semidefinite up to ``PSD_ATOL`` (scaled by the matrix magnitude
    so large, perfectly healthy covariances are not rejected for roundoff).
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if mean.ndim != 1:
            raise DimensionMismatchError("mean must be a vector")
        d = mean.size
        if cov.shape != (d, d):
            raise DimensionMismatchError(
                "cov must be (%d, %d), got %r" % (d, d, cov.shape))
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("belief must be finite")
        scale = max(1.0, float(np.abs(cov).max()))
        if float(np.abs(cov - cov.T).max()) > SYM_ATOL * scale:
            raise ValueError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        if float(np.linalg.eigvalsh(cov).min()) < -PSD_ATOL * scale:
            raise ValueError("covariance is not positive semidefinite")
        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "cov", _frozen(cov))

    @property
    def dim(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class PointEstimate:
    """A bare point estimate of the latent state."""

    x_hat: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x_hat, dtype=float))
        if x.ndim != 1 or x.size < 1:
            raise DimensionMismatchError("point estimate must be a vector")
        if not np.all(np.isfinite(x)):
            raise ValueError("point estimate must be finite")
        object.__setattr__(self, "x_hat", _frozen(x))

    @property
    def dim(self) -> int:
        return self.x_hat.size


def normalize_weights(raw) -> WeightVector:
    """Project a nonnegative vector onto the simplex by dividing by its sum.

    If the input already sums to 1 within ``SIMPLEX_ATOL`` the entries are
    passed through untouched, which makes the function exactly idempotent.

    Raises
    ------
    NegativeEntryError
        If any entry is negative.
    AllZeroError
        If every entry is zero.
    """
    raw = np.atleast_1d(np.asarray(raw, dtype=float))
    if raw.ndim != 1 or raw.size < 1:
        raise DimensionMismatchError("weights must be a non-empty 1-d vector")
    if not np.all(np.isfinite(raw)):
        raise ValueError("weights must be finite")
    if np.any(raw < 0.0):
        raise NegativeEntryError("cannot normalize a vector with negative entries")
    s = float(raw.sum())
    if s == 0.0:
        raise AllZeroError("cannot normalize an all-zero vector")
    if abs(s - 1.0) <= SIMPLEX_ATOL:
        return WeightVector(raw)
    return WeightVector(raw / s)


def update_model_weights_log(prior: WeightVector, log_evidences,
                             floor: float = 0.0) -> WeightVector:
    """Bayes update of model weights from log evidences.

    Computes ``w_k ∝ prior_k * exp(log_evidences[k])`` entirely in the log
    domain, so the result is invariant (to roundoff) under a common scaling
    of the evidences.  ``-inf`` entries are legal and zero out the model;
    ``+inf`` or NaN are rejected.

    Parameters
    ----------
    prior : WeightVector
        Predictive weights, one per model.
    log_evidences : array_like, shape (K,)
        Log marginal likelihood of the new observation under each model.
    floor : float, optional
        If positive, posterior weights are clamped to at least ``floor`` and
        renormalized.  Off by default.

    Raises
    ------
    AllZeroError
        If every product ``prior_k * evidence_k`` is zero.
    """
    log_ev = np.atleast_1d(np.asarray(log_evidences, dtype=float))
    if log_ev.shape != prior.w.shape:
        raise DimensionMismatchError("one evidence per model required")
    if np.any(np.isnan(log_ev)) or np.any(log_ev == np.inf):
        raise ValueError("log evidences must be < +inf and not NaN")
    with np.errstate(divide="ignore"):
        lw = np.log(prior.w) + log_ev
    m = float(np.max(lw))
    if m == -np.inf:
        raise AllZeroError("all prior-times-evidence products are zero")
    w = np.exp(lw - logsumexp(lw))
    w = w / w.sum()
    if floor > 0.0:
        w = apply_weight_floor(w, floor).w
    return WeightVector(w)


def update_model_weights(prior: WeightVector, evidences,
                         floor: float = 0.0) -> WeightVector:
    """Bayes update of model weights from linear-domain evidences.

    Thin wrapper over :func:`update_model_weights_log`; see there for the
    contract.  Evidences must be nonnegative and finite.
    """
    ev = np.atleast_1d(np.asarray(evidences, dtype=float))
    if np.any(ev < 0.0):
        raise NegativeEntryError("evidences must be nonnegative")
    if not np.all(np.isfinite(ev)):
        raise ValueError("evidences must be finite")
    with np.errstate(divide="ignore"):
        log_ev = np.log(ev)
    return update_model_weights_log(prior, log_ev, floor=floor)


def apply_weight_floor(w, floor: float) -> WeightVector:
    """Clamp weights to at least ``floor`` and renormalize."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if not 0.0 < floor < 1.0 / w.size:
        raise ValueError("floor must sit in (0, 1/K)")
    clamped = np.maximum(w, floor)
    return WeightVector(clamped / clamped.sum())


def _stack_means(estimates):
    """Stack per-model mean vectors into a (K, d) matrix, checking shapes."""
    means = []
    d = None
    for est in estimates:
        x = est.x_hat if isinstance(est, PointEstimate) else np.atleast_1d(
            np.asarray(est, dtype=float))
        if d is None:
            d = x.size
        elif x.size != d:
            raise DimensionMismatchError("estimates differ in dimension")
        means.append(x)
    if not means:
        raise DimensionMismatchError("need at least one estimate")
    return np.vstack(means)


def bma_point_estimate(estimates, weights: WeightVector) -> PointEstimate:
    """Weight-averaged point estimate over per-model estimates.

    Parameters
    ----------
    estimates : sequence of PointEstimate or array_like
        K per-model point estimates, all of the same dimension.
    weights : WeightVector
        Current model weights; length must equal K.
    """
    means = _stack_means(estimates)
    if means.shape[0] != len(weights):
        raise DimensionMismatchError("one estimate per weight required")
    return PointEstimate(weights.w @ means)


def collapse_mixture(components, weights: WeightVector) -> GaussianBelief:
    """Moment-match a Gaussian mixture down to a single Gaussian.

    The collapsed mean is the weighted mean of the component means (computed
    with the same expression as :func:`bma_point_estimate`, so the two agree
    exactly); the collapsed covariance adds the spread of the means:

        cov = sum_k w_k (cov_k + mu_k mu_k^T) - mu mu^T

    re-symmetrized before return.
    """
    comps = list(components)
    if len(comps) != len(weights):
        raise DimensionMismatchError("one component per weight required")
    d = comps[0].dim
    for c in comps:
        if c.dim != d:
            raise DimensionMismatchError("components differ in dimension")
    means = np.vstack([c.mean for c in comps])
    mean = weights.w @ means
    cov = np.zeros((d, d))
    for wk, c in zip(weights.w, comps):
        cov += wk * (c.cov + np.outer(c.mean, c.mean))
    cov -= np.outer(mean, mean)
    cov = 0.5 * (cov + cov.T)
    return GaussianBelief(mean, cov)
