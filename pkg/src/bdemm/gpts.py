"""Gaussian-process ensemble for online time-series prediction.

Each candidate model is a Gaussian-process regressor over a sliding window
of the most recent observations: squared-exponential kernel, constant mean,
additive observation noise.  At every step each model issues a one-step
ahead predictive Gaussian; when the observation arrives, its density under
that prediction is the model's evidence, weights move transition-then-Bayes
as everywhere else in the package, and the per-model predictions for the
*next* point are fused into one Gaussian by a weighted product of experts:

    precision  = sum_k weight_k / var_k
    mean       = sum_k (weight_k * mean_k / var_k) / precision

The fusion exponents are the predictive (transition-applied) weights, so a
model's influence on the next forecast reflects where the weights are
headed, not where they were.

Candidate pools typically come from :func:`perturb_pool`: take a nominal
model and scale its noise variance by a few factors (say 1x and 100x), so
the ensemble hedges between trusting and discounting fresh observations.
Hyperparameters are fixed at construction; nothing is re-estimated online.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .core import (
    WeightHistory,
    WeightVector,
    update_model_weights_log,
)
from .errors import (
    AllZeroError,
    DimensionMismatchError,
    FactorizationFailureError,
    ZeroPrecisionError,
)
from .evidence import LOG_2PI
from .wtt import WTTConfig, apply_wtt

# jitter ladder, as multiples of the signal variance
JITTER_START = 1e-10
JITTER_MAX = 1e-4

__all__ = [
    "GPTSModel",
    "PredictiveGaussian",
    "IntelState",
    "gp_predict_next",
    "poe_combine",
    "intel_step",
    "perturb_pool",
    "window_predict",
]


@dataclass(frozen=True)
class GPTSModel:
    """Gaussian-process time-series model over a sliding window.

    Parameters
    ----------
    mean_const : float
        Constant prior mean of the series.
    signal_variance : float
        Kernel amplitude (variance of the latent function).
    lengthscale : float
        Kernel lengthscale in time-stamp units.
    noise_var : float
        Observation noise variance (>= 0; zero means noise-free).
    window : int
        Number of most recent observations the model conditions on.
    """

    mean_const: float
    signal_variance: float
    lengthscale: float
    noise_var: float
    window: int

    def __post_init__(self):
        if self.signal_variance <= 0.0:
            raise ValueError("signal variance must be positive")
        if self.lengthscale <= 0.0:
            raise ValueError("lengthscale must be positive")
        if self.noise_var < 0.0:
            raise ValueError("noise variance must be nonnegative")
        if int(self.window) < 1:
            raise ValueError("window must hold at least one observation")
        object.__setattr__(self, "window", int(self.window))


@dataclass(frozen=True)
class PredictiveGaussian:
    """A scalar Gaussian forecast N(mean, var), var > 0."""

    mean: float
    var: float

    def __post_init__(self):
        if not (np.isfinite(self.mean) and np.isfinite(self.var)):
            raise ValueError("forecast must be finite")
        if self.var <= 0.0:
            raise ValueError("forecast variance must be positive")
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "var", float(self.var))

    def logpdf(self, y: float) -> float:
        return float(-0.5 * (LOG_2PI + np.log(self.var)
                             + (y - self.mean) ** 2 / self.var))


@dataclass(frozen=True)
class IntelState:
    """Observation buffer + model weights + weight history."""

    buffer: tuple
    model_weights: WeightVector
    history: WeightHistory

    def __post_init__(self):
        if len(self.model_weights) != self.history.width:
            raise DimensionMismatchError("weights and history disagree on K")
        buf = tuple((float(t), float(v)) for t, v in self.buffer)
        times = [t for t, _ in buf]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("buffer timestamps must be strictly increasing")
        object.__setattr__(self, "buffer", buf)

    @classmethod
    def initial(cls, k: int = None, weights: WeightVector = None) -> "IntelState":
        if weights is None:
            if k is None:
                raise DimensionMismatchError("give either k or weights")
            weights = WeightVector.uniform(k)
        return cls((), weights, WeightHistory.start(weights))


def _sqexp(model: GPTSModel, a, b):
    """Squared-exponential kernel matrix between time vectors a and b."""
    a = np.asarray(a, dtype=float)[:, None]
    b = np.asarray(b, dtype=float)[None, :]
    z = (a - b) / model.lengthscale
    return model.signal_variance * np.exp(-0.5 * z * z)


def gp_predict_next(model: GPTSModel, times, values, t_next: float) -> PredictiveGaussian:
    """One-step-ahead GP forecast from an observation window.

    Conditions on ``(times, values)`` (strictly increasing times, at most a
    caller-enforced window of them) and returns the predictive Gaussian at
    ``t_next``:

        mean = mu + k*^T (K + noise I)^{-1} (v - mu)
        var  = k(t*, t*) + noise - k*^T (K + noise I)^{-1} k*

    The solve is a Cholesky factorization with an escalating jitter: starting
    at ``1e-10 * signal_variance`` and growing tenfold up to
    ``1e-4 * signal_variance`` before giving up.

    Raises
    ------
    FactorizationFailureError
        If the Gram matrix cannot be factorized even at maximum jitter.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if times.ndim != 1 or times.shape != values.shape or times.size < 1:
        raise DimensionMismatchError("times and values must be matching vectors")
    if np.any(np.diff(times) <= 0.0):
        raise ValueError("times must be strictly increasing")

    gram = _sqexp(model, times, times)
    gram[np.diag_indices_from(gram)] += model.noise_var
    eye = np.eye(times.size)
    jitter = JITTER_START
    chol = None
    while jitter <= JITTER_MAX * (1.0 + 1e-12):
        try:
            chol = cho_factor(gram + jitter * model.signal_variance * eye,
                              lower=True)
            break
        except np.linalg.LinAlgError:
            jitter *= 10.0
    if chol is None:
        raise FactorizationFailureError(
            "Gram matrix failed Cholesky at jitter %g * signal variance" % JITTER_MAX)

    k_star = _sqexp(model, times, [t_next])[:, 0]
    resid = values - model.mean_const
    mean = model.mean_const + k_star @ cho_solve(chol, resid)
    var = (model.signal_variance + model.noise_var
           - k_star @ cho_solve(chol, k_star))
    # cancellation can push a near-zero variance a hair negative
    var = max(float(var), 1e-300)
    return PredictiveGaussian(float(mean), var)


def window_predict(model: GPTSModel, buffer, t_next: float) -> PredictiveGaussian:
    """Model's forecast at ``t_next`` from the shared buffer (prior if empty)."""
    if not buffer:
        return PredictiveGaussian(model.mean_const,
                                  model.signal_variance + model.noise_var)
    tail = buffer[-model.window:]
    times = [t for t, _ in tail]
    values = [v for _, v in tail]
    return gp_predict_next(model, times, values, t_next)


def poe_combine(predictives, weights: WeightVector) -> PredictiveGaussian:
    """Weighted product-of-experts fusion of scalar Gaussian forecasts.

    Each expert enters with exponent ``weights[k]``; the product of the
    powered Gaussians renormalizes to

        var  = 1 / sum_k w_k / var_k
        mean = var * sum_k w_k mean_k / var_k

    Raises
    ------
    ZeroPrecisionError
        If the total precision is zero (all mass on infinite-variance
        experts, or every exponent zero).
    """
    preds = list(predictives)
    if len(preds) != len(weights):
        raise DimensionMismatchError("one forecast per weight required")
    lam = 0.0
    num = 0.0
    for wk, p in zip(weights.w, preds):
        lam += wk / p.var
        num += wk * p.mean / p.var
    if lam <= 0.0:
        raise ZeroPrecisionError("fused forecast has zero precision")
    return PredictiveGaussian(num / lam, 1.0 / lam)


def intel_step(state: IntelState, pool, y_t: float, t: float,
               wtt_config: WTTConfig, weight_floor: float = 0.0):
    """One observation's worth of GP-ensemble prediction.

    The arriving ``y_t`` is scored under each model's standing forecast for
    time ``t`` (recomputed from the buffer; on the very first step that is
    the prior N(mean, signal_variance + noise_var)).  Weights update from
    those evidences, the buffer absorbs ``(t, y_t)``, every model forecasts
    ``t + 1``, and the forecasts fuse by product of experts with the
    *next-step predictive* weights as exponents.

    Returns
    -------
    state : IntelState
    fused : PredictiveGaussian
        Ensemble forecast for time ``t + 1``.
    per_model : list of PredictiveGaussian
        Each model's own forecast for time ``t + 1``.
    """
    pool = list(pool)
    if len(pool) != len(state.model_weights):
        raise DimensionMismatchError("pool size does not match weight vector")
    if state.buffer and t <= state.buffer[-1][0]:
        raise ValueError("time stamps must arrive strictly increasing")
    y_t = float(y_t)

    current = [window_predict(m, state.buffer, t) for m in pool]
    log_evs = np.array([p.logpdf(y_t) for p in current])

    predictive = apply_wtt(wtt_config, state.history)
    try:
        weights = update_model_weights_log(predictive, log_evs, floor=weight_floor)
    except AllZeroError:
        weights = predictive
    history = state.history.append(weights)

    max_window = max(m.window for m in pool)
    buffer = (state.buffer + ((t, y_t),))[-max_window:]

    per_model = [window_predict(m, buffer, t + 1.0) for m in pool]
    fusion_weights = apply_wtt(wtt_config, history)
    fused = poe_combine(per_model, fusion_weights)

    new_state = IntelState(buffer, weights, history)
    return new_state, fused, per_model


def perturb_pool(nominal: GPTSModel, noise_factors) -> list:
    """Candidate pool built by scaling the nominal noise variance.

    ``noise_factors`` are positive multipliers, one model each; a zero-noise
    nominal cannot be perturbed this way.
    """
    factors = [float(f) for f in noise_factors]
    if not factors:
        raise ValueError("need at least one factor")
    if any(f <= 0.0 for f in factors):
        raise ValueError("factors must be positive")
    if nominal.noise_var == 0.0 and any(f != 1.0 for f in factors):
        raise ValueError("cannot scale a zero noise variance")
    return [GPTSModel(nominal.mean_const, nominal.signal_variance,
                      nominal.lengthscale, nominal.noise_var * f,
                      nominal.window)
            for f in factors]
