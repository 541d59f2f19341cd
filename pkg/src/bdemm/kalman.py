"""Kalman-filter ensemble: exact Bayesian inference over linear models.

Each candidate model is a linear-Gaussian state-space pair

    x_t = A x_{t-1} + process noise,   process noise ~ N(0, Q)
    y_t = B x_t     + obs noise,       obs noise     ~ N(0, R)

so per-model prediction and update are the textbook Kalman recursions and
the per-model evidence is available in closed form as a Gaussian density.
The ensemble layer mixes the K per-model posteriors: model weights move
through a weight-transition operator, get a Bayes update from the closed
form evidences, and the posterior mixture is moment-matched back down to a
single Gaussian that seeds all K models at the next step.  That collapse is
what keeps the state representation from branching into K^t components.

All evidences travel to the weight update in the log domain.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .core import (
    GaussianBelief,
    PointEstimate,
    WeightHistory,
    WeightVector,
    bma_point_estimate,
    collapse_mixture,
    update_model_weights_log,
)
from .errors import (
    AllZeroError,
    DimensionMismatchError,
    SingularInnovationCovError,
)
from .evidence import LOG_2PI
from .wtt import WTTConfig, apply_wtt

logger = logging.getLogger(__name__)

__all__ = [
    "LinearGaussianModel",
    "KfEnsembleState",
    "KfModelResult",
    "kf_predict",
    "kf_update",
    "kf_bdemm_step",
]


def _check_cov(m, name, scale_tol=1e-10):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatchError("%s must be square" % name)
    scale = max(1.0, float(np.abs(m).max()))
    if float(np.abs(m - m.T).max()) > scale_tol * scale:
        raise ValueError("%s must be symmetric" % name)
    m = 0.5 * (m + m.T)
    if float(np.linalg.eigvalsh(m).min()) < -scale_tol * scale:
        raise ValueError("%s must be positive semidefinite" % name)
    return m


@dataclass(frozen=True)
class LinearGaussianModel:
    """One linear-Gaussian candidate: transition A, Q; observation B, R."""

    A: np.ndarray
    Q: np.ndarray
    B: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_2d(np.asarray(self.B, dtype=float))
        q = _check_cov(self.Q, "Q")
        r = _check_cov(self.R, "R")
        d = a.shape[0]
        if a.shape != (d, d):
            raise DimensionMismatchError("A must be square")
        if q.shape != (d, d):
            raise DimensionMismatchError("Q must match A")
        m = b.shape[0]
        if b.shape != (m, d):
            raise DimensionMismatchError("B must be (obs_dim, state_dim)")
        if r.shape != (m, m):
            raise DimensionMismatchError("R must match B")
        for name, arr in (("A", a), ("Q", q), ("B", b), ("R", r)):
            arr = np.array(arr)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def obs_dim(self) -> int:
        return self.B.shape[0]


@dataclass(frozen=True)
class KfEnsembleState:
    """Collapsed belief + model weights + weight history after t steps."""

    belief: GaussianBelief
    weights: WeightVector
    history: WeightHistory

    def __post_init__(self):
        if len(self.weights) != self.history.width:
            raise DimensionMismatchError("weights and history disagree on K")

    @classmethod
    def initial(cls, belief: GaussianBelief, k: int = None,
                weights: WeightVector = None) -> "KfEnsembleState":
        """Fresh state: uniform weights over ``k`` models unless given."""
        if weights is None:
            if k is None:
                raise DimensionMismatchError("give either k or weights")
            weights = WeightVector.uniform(k)
        return cls(belief, weights, WeightHistory.start(weights))


@dataclass(frozen=True)
class KfModelResult:
    """Per-model output of one ensemble step."""

    posterior: GaussianBelief
    evidence: float
    log_evidence: float


def kf_predict(model: LinearGaussianModel, belief: GaussianBelief) -> GaussianBelief:
    """One-step-ahead prediction: mean -> A mean, cov -> A cov A^T + Q."""
    if belief.dim != model.state_dim:
        raise DimensionMismatchError("belief dimension does not match model")
    mean = model.A @ belief.mean
    cov = model.A @ belief.cov @ model.A.T + model.Q
    return GaussianBelief(mean, 0.5 * (cov + cov.T))


def _kf_update_log(model, predicted, y):
    """Measurement update plus log evidence, sharing one factorization.

    Returns (posterior, log_evidence).  The evidence is the Gaussian density
    of ``y`` under N(B mean, S) with S = B P B^T + R.
    """
    if predicted.dim != model.state_dim:
        raise DimensionMismatchError("belief dimension does not match model")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (model.obs_dim,):
        raise DimensionMismatchError("observation dimension does not match model")
    p = predicted.cov
    s = model.B @ p @ model.B.T + model.R
    s = 0.5 * (s + s.T)
    try:
        chol = cho_factor(s, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularInnovationCovError(
            "innovation covariance is not positive definite") from exc
    resid = y - model.B @ predicted.mean
    # gain G = P B^T S^{-1}, computed as solve(S, B P)^T since P is symmetric
    gain = cho_solve(chol, model.B @ p).T
    mean = predicted.mean + gain @ resid
    cov = p - gain @ model.B @ p
    posterior = GaussianBelief(mean, 0.5 * (cov + cov.T))
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol[0]))))
    alpha = cho_solve(chol, resid)
    log_ev = float(-0.5 * (y.size * LOG_2PI + logdet + resid @ alpha))
    return posterior, log_ev


def kf_update(model: LinearGaussianModel, predicted: GaussianBelief, y):
    """Kalman measurement update.

    Returns
    -------
    posterior : GaussianBelief
    evidence : float
        Density of ``y`` under the predicted observation distribution
        N(B mean, B cov B^T + R); may underflow to 0.0 in the linear domain.
    """
    posterior, log_ev = _kf_update_log(model, predicted, y)
    return posterior, float(np.exp(log_ev))


def kf_bdemm_step(state: KfEnsembleState, pool, y, wtt_config: WTTConfig,
                  weight_floor: float = 0.0):
    """One observation's worth of ensemble filtering over K linear models.

    Every model predicts from the shared collapsed belief, updates on ``y``
    and reports its evidence; the weight-transition operator proposes
    predictive weights, Bayes' rule updates them with the evidences, and the
    weighted posteriors are averaged (point estimate) and moment-matched
    (next shared belief).  If every evidence underflows to zero the step is
    treated as uninformative: the predictive weights carry forward unchanged
    and the measurement update is skipped, so the per-model results report
    the predicted beliefs instead of posteriors conditioned on an
    observation no candidate can represent.

    Returns
    -------
    state : KfEnsembleState
    estimate : PointEstimate
        Weight-averaged posterior mean (equals the collapsed mean exactly).
    per_model : list of KfModelResult
    """
    pool = list(pool)
    if len(pool) != len(state.weights):
        raise DimensionMismatchError("pool size does not match weight vector")
    predictions = []
    posteriors = []
    log_evs = np.empty(len(pool))
    for k, model in enumerate(pool):
        predicted = kf_predict(model, state.belief)
        posterior, log_ev = _kf_update_log(model, predicted, y)
        predictions.append(predicted)
        posteriors.append(posterior)
        log_evs[k] = log_ev

    predictive = apply_wtt(wtt_config, state.history)
    try:
        weights = update_model_weights_log(predictive, log_evs, floor=weight_floor)
    except AllZeroError:
        # Every evidence underflowed even in the log domain, which takes a
        # residual so extreme the quadratic form overflows.  Conditioning on
        # such an observation would push the posterior means out to where
        # the mixture collapse itself overflows, so the step extracts
        # nothing from it: predictive weights, predicted beliefs.
        weights = predictive
        posteriors = predictions

    estimate = bma_point_estimate([PointEstimate(p.mean) for p in posteriors],
                                  weights)
    belief = collapse_mixture(posteriors, weights)
    logger.debug("kf step: max model weight %.3g", float(weights.w.max()))

    new_state = KfEnsembleState(belief, weights, state.history.append(weights))
    per_model = [KfModelResult(p, float(np.exp(le)), float(le))
                 for p, le in zip(posteriors, log_evs)]
    return new_state, estimate, per_model
