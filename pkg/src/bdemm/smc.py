"""Sequential Monte Carlo ensemble for nonlinear / non-Gaussian models.

Each candidate model k supplies a transition sampler and a log likelihood;
nothing else is assumed about it.  A single particle cloud is shared by the
whole pool.  Per step and per model the cloud is propagated through the
model's transition, reweighted by its likelihood, and the model evidence is
estimated as the likelihood average under the incoming particle weights.
Model weights then get the usual transition-then-Bayes treatment, and the
clouds are merged back into one: every (model, particle) pair enters an
augmented set with weight ``model_weight * particle_weight``, from which N
particles are resampled.  Resampling runs every step; the effective sample
size is logged as a diagnostic but never acted on.

Vectorization convention
------------------------
``sample_transition(x, t, rng)`` and ``log_likelihood(y, x, t)`` act on the
whole cloud at once: ``x`` is an (N, d) array, the transition returns
(N, d) with row i drawn from the model's transition density at particle i,
and the likelihood returns (N,) log values.  Semantically these are still
per-particle maps; the batch axis only buys numpy speed.

Randomness protocol
-------------------
:func:`smc_bdemm_step` draws exactly two integers from the caller's
generator per step, in this order::

    seeds = rng.integers(2**63, size=2)   # [propagation, resampling]

Transition sampling runs on ``default_rng(seeds[0])`` -- a *fresh* generator
per model, all seeded identically -- and the resampler on
``default_rng(seeds[1])``.  Two consequences: results are reproducible from
the master seed alone, and models that share a transition see identical
draws, so propagating once (``shared_transition=True``) is bit-identical to
the generic path whenever all transitions coincide.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .core import (
    PointEstimate,
    WeightHistory,
    WeightVector,
    bma_point_estimate,
    update_model_weights_log,
)
from .errors import AllZeroError, DimensionMismatchError
from .evidence import effective_sample_size
from .wtt import WTTConfig, apply_wtt

logger = logging.getLogger(__name__)

RESAMPLING_SCHEMES = ("multinomial", "systematic")

# Log of the smallest positive double (subnormal).  A log weight below this
# is exactly 0.0 after exponentiation, i.e. a genuine linear-domain underflow.
UNDERFLOW_LOG = float(np.log(np.nextafter(0.0, 1.0)))

__all__ = [
    "GenericStateSpaceModel",
    "ParticleEnsemble",
    "SmcEnsembleState",
    "SmcModelResult",
    "propagate",
    "reweight",
    "mc_evidence",
    "mc_log_evidence",
    "resample",
    "smc_bdemm_step",
    "linear_gaussian_ssm",
    "additive_noise_ssm",
    "gaussian_noise",
    "uniform_noise",
    "student_t_noise",
    "RESAMPLING_SCHEMES",
]


@dataclass(frozen=True)
class GenericStateSpaceModel:
    """A model known only through sampling and likelihood evaluation.

    sample_transition : callable (x, t, rng) -> ndarray
        Draws x_t given the (N, d) cloud x_{t-1}; row i conditions on row i.
    log_likelihood : callable (y, x, t) -> ndarray
        Log p(y_t | x_t) for each row of the (N, d) cloud, as an (N,) array.
    """

    sample_transition: Callable
    log_likelihood: Callable


@dataclass(frozen=True)
class ParticleEnsemble:
    """N weighted particles over a d-dimensional state."""

    particles: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.particles, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        if p.ndim != 2 or p.shape[0] < 1:
            raise DimensionMismatchError("particles must be an (N, d) array")
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if w.shape != (p.shape[0],):
            raise DimensionMismatchError("one weight per particle required")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(w))):
            raise ValueError("particles and weights must be finite")
        if np.any(w < 0.0):
            raise ValueError("particle weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError("particle weights must sum to 1")
        p = np.array(p)
        p.flags.writeable = False
        w = np.array(w)
        w.flags.writeable = False
        object.__setattr__(self, "particles", p)
        object.__setattr__(self, "weights", w)

    @classmethod
    def equal_weighted(cls, particles) -> "ParticleEnsemble":
        particles = np.asarray(particles, dtype=float)
        n = particles.shape[0]
        return cls(particles, np.full(n, 1.0 / n))

    @property
    def n(self) -> int:
        return self.particles.shape[0]

    @property
    def dim(self) -> int:
        return self.particles.shape[1]


@dataclass(frozen=True)
class SmcEnsembleState:
    """Shared particle cloud + model weights + weight history."""

    ensemble: ParticleEnsemble
    model_weights: WeightVector
    history: WeightHistory
    shared_transition: bool = False

    def __post_init__(self):
        if len(self.model_weights) != self.history.width:
            raise DimensionMismatchError("weights and history disagree on K")

    @classmethod
    def initial(cls, particles, k: int = None, weights: WeightVector = None,
                shared_transition: bool = False) -> "SmcEnsembleState":
        """Fresh state from an initial cloud; uniform model weights by default."""
        if weights is None:
            if k is None:
                raise DimensionMismatchError("give either k or weights")
            weights = WeightVector.uniform(k)
        ens = ParticleEnsemble.equal_weighted(particles)
        return cls(ens, weights, WeightHistory.start(weights), shared_transition)


@dataclass(frozen=True)
class SmcModelResult:
    """Per-model output of one ensemble step."""

    point_estimate: PointEstimate
    evidence: float
    log_evidence: float


def propagate(model: GenericStateSpaceModel, ensemble: ParticleEnsemble,
              t: int, rng: np.random.Generator) -> ParticleEnsemble:
    """Push every particle through the model's transition; weights carry over."""
    moved = np.asarray(model.sample_transition(ensemble.particles, t, rng),
                       dtype=float)
    if moved.ndim == 1:
        moved = moved[:, None]
    if moved.shape != ensemble.particles.shape:
        raise DimensionMismatchError("transition changed the cloud's shape")
    return ParticleEnsemble(moved, ensemble.weights)


def _checked_loglik(model, y, particles, t):
    ll = np.asarray(model.log_likelihood(y, particles, t), dtype=float)
    if ll.shape != (particles.shape[0],):
        raise DimensionMismatchError("log likelihood must return one value per particle")
    if np.any(np.isnan(ll)) or np.any(ll == np.inf):
        raise ValueError("log likelihoods must be < +inf and not NaN")
    return ll


def reweight(model: GenericStateSpaceModel, propagated: ParticleEnsemble,
             y, t: int):
    """Fold the observation into the particle weights.

    New weights are ``u_i ∝ u_prev_i * p(y | x_i)``, normalized in the log
    domain.  Also returns the raw per-particle log likelihoods, which the
    evidence estimate reuses.

    Raises
    ------
    AllZeroError
        If every product underflows (no particle explains the observation).
    """
    ll = _checked_loglik(model, y, propagated.particles, t)
    with np.errstate(divide="ignore"):
        lw = np.log(propagated.weights) + ll
    # Underflow is judged in the linear domain: if even the largest product
    # u_i * p(y|x_i) rounds to exactly zero as a double, the observation is
    # unrepresentable under this model and carries no usable information.
    # Normalizing such weights anyway would amount to inventing a posterior
    # from pure rounding noise, so the caller gets to decide the fallback.
    if float(np.max(lw)) < UNDERFLOW_LOG:
        raise AllZeroError("all particle weights underflowed")
    w = np.exp(lw - logsumexp(lw))
    w = w / w.sum()
    return w, ll


def mc_log_evidence(incoming_weights, log_likelihoods) -> float:
    """Log of ``sum_i u_i p(y | x_i)``; ``-inf`` when it underflows entirely."""
    u = np.atleast_1d(np.asarray(incoming_weights, dtype=float))
    ll = np.atleast_1d(np.asarray(log_likelihoods, dtype=float))
    if u.shape != ll.shape:
        raise DimensionMismatchError("weights and likelihoods must align")
    with np.errstate(divide="ignore"):
        lw = np.log(u) + ll
    if float(np.max(lw)) == -np.inf:
        return -np.inf
    return float(logsumexp(lw))


def mc_evidence(incoming_weights, likelihoods) -> float:
    """Monte Carlo evidence ``sum_i u_i p(y | x_i)`` (linear domain).

    Accumulates in the log domain; with uniform incoming weights this is the
    plain average of the likelihood values.
    """
    lik = np.atleast_1d(np.asarray(likelihoods, dtype=float))
    if np.any(lik < 0.0) or not np.all(np.isfinite(lik)):
        raise ValueError("likelihoods must be finite and nonnegative")
    with np.errstate(divide="ignore"):
        ll = np.log(lik)
    log_ev = mc_log_evidence(incoming_weights, ll)
    return float(np.exp(log_ev))


def resample(particles, weights, n_out: int, rng: np.random.Generator,
             scheme: str = "multinomial") -> ParticleEnsemble:
    """Draw ``n_out`` particles (with replacement) from a weighted set.

    ``multinomial`` inverts the weight CDF at iid uniforms: draw v ~ U(0,1)
    and pick the first index whose cumulative weight exceeds v.
    ``systematic`` uses one uniform offset and a stratified comb
    ``(i + v) / n_out`` instead.  Output weights are uniform ``1/n_out``.
    """
    if scheme not in RESAMPLING_SCHEMES:
        raise ValueError("unknown resampling scheme %r" % (scheme,))
    particles = np.asarray(particles, dtype=float)
    if particles.ndim == 1:
        particles = particles[:, None]
    w = np.atleast_1d(np.asarray(weights, dtype=float))
    if w.shape != (particles.shape[0],):
        raise DimensionMismatchError("one weight per particle required")
    if n_out < 1:
        raise ValueError("need at least one output particle")
    cdf = np.cumsum(w)
    if cdf[-1] <= 0.0:
        raise AllZeroError("cannot resample from an all-zero weight set")
    cdf = cdf / cdf[-1]
    cdf[-1] = 1.0  # guard the top edge against roundoff
    if scheme == "multinomial":
        draws = rng.random(n_out)
    else:
        draws = (np.arange(n_out) + rng.random()) / n_out
    idx = np.searchsorted(cdf, draws, side="right")
    idx = np.minimum(idx, particles.shape[0] - 1)
    return ParticleEnsemble.equal_weighted(particles[idx])


def smc_bdemm_step(state: SmcEnsembleState, pool, y, t: int,
                   wtt_config: WTTConfig, rng: np.random.Generator,
                   weight_floor: float = 0.0, resampling: str = "multinomial"):
    """One observation's worth of ensemble particle filtering.

    See the module docstring for the randomness protocol.  Per-model point
    estimates are posterior weighted means (minimum mean squared error
    estimates); the ensemble estimate mixes them with the updated model
    weights.  If *every* model's likelihood underflows on all particles, the
    step keeps the predictive model weights, scores each model with its
    incoming particle weights and resamples from that predictive mixture --
    the last mixture with finite weights.

    Returns
    -------
    state : SmcEnsembleState
        Ensemble resampled back to N uniform-weight particles.
    estimate : PointEstimate
    per_model : list of SmcModelResult
    """
    pool = list(pool)
    k_models = len(pool)
    if k_models != len(state.model_weights):
        raise DimensionMismatchError("pool size does not match weight vector")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    ens = state.ensemble
    seeds = rng.integers(2 ** 63, size=2)

    predictive = apply_wtt(wtt_config, state.history)

    if state.shared_transition:
        moved = propagate(pool[0], ens, t, np.random.default_rng(seeds[0]))
        clouds = [moved] * k_models
    else:
        clouds = [propagate(m, ens, t, np.random.default_rng(seeds[0]))
                  for m in pool]

    log_evs = np.empty(k_models)
    per_weights = []
    estimates = []
    for k, model in enumerate(pool):
        try:
            u, ll = reweight(model, clouds[k], y, t)
            log_evs[k] = mc_log_evidence(ens.weights, ll)
        except AllZeroError:
            # model explains nothing this step: dead weight, prior estimate
            u = clouds[k].weights
            log_evs[k] = -np.inf
        per_weights.append(u)
        estimates.append(PointEstimate(u @ clouds[k].particles))

    try:
        weights = update_model_weights_log(predictive, log_evs, floor=weight_floor)
    except AllZeroError:
        weights = predictive

    estimate = bma_point_estimate(estimates, weights)

    aug_particles = np.vstack([c.particles for c in clouds])
    aug_weights = np.concatenate([wk * u for wk, u in zip(weights.w, per_weights)])
    if logger.isEnabledFor(logging.DEBUG):
        logger.debug("smc step %d: ess %.1f of %d", t,
                     effective_sample_size(aug_weights), aug_weights.size)
    new_ens = resample(aug_particles, aug_weights, ens.n,
                       np.random.default_rng(seeds[1]), scheme=resampling)

    new_state = SmcEnsembleState(new_ens, weights,
                                 state.history.append(weights),
                                 state.shared_transition)
    per_model = [SmcModelResult(est, float(np.exp(le)), float(le))
                 for est, le in zip(estimates, log_evs)]
    return new_state, estimate, per_model


# ---------------------------------------------------------------------------
# model constructors


def linear_gaussian_ssm(A, Q, B, R) -> GenericStateSpaceModel:
    """Wrap a linear-Gaussian model for the particle engine.

    Useful for validating the particle path against the exact Kalman answer.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    d = A.shape[0]
    m = B.shape[0]
    q_chol = np.linalg.cholesky(Q + 1e-300 * np.eye(d))
    r_chol = np.linalg.cholesky(R + 1e-300 * np.eye(m))
    r_logdet = 2.0 * float(np.sum(np.log(np.diag(r_chol))))
    const = -0.5 * (m * np.log(2.0 * np.pi) + r_logdet)

    def sample_transition(x, t, rng):
        noise = rng.standard_normal((x.shape[0], d)) @ q_chol.T
        return x @ A.T + noise

    def log_likelihood(y, x, t):
        resid = y[None, :] - x @ B.T
        z = np.linalg.solve(r_chol, resid.T)
        return const - 0.5 * np.sum(z * z, axis=0)

    return GenericStateSpaceModel(sample_transition, log_likelihood)


def additive_noise_ssm(transition, observation, noise_logpdf) -> GenericStateSpaceModel:
    """Model with observation ``y = observation(x, t) + noise``.

    ``transition(x, t, rng)`` samples the next cloud, ``observation(x, t)``
    maps an (N, d) cloud to (N,) predicted observations (scalar y only), and
    ``noise_logpdf(resid)`` scores the residuals elementwise.  This is the
    shape shared by the robust-filtering candidate models, which differ only
    in their noise assumption.
    """
    def log_likelihood(y, x, t):
        resid = float(y[0] if np.ndim(y) else y) - observation(x, t)
        return noise_logpdf(np.asarray(resid, dtype=float))

    return GenericStateSpaceModel(transition, log_likelihood)


def gaussian_noise(var: float):
    """Elementwise log N(0, var) density."""
    if var <= 0.0:
        raise ValueError("variance must be positive")
    const = -0.5 * float(np.log(2.0 * np.pi * var))

    def logpdf(resid):
        return const - 0.5 * resid * resid / var

    return logpdf


def uniform_noise(low: float, high: float):
    """Elementwise log density of U(low, high): flat inside, -inf outside."""
    if not high > low:
        raise ValueError("need high > low")
    level = -float(np.log(high - low))

    def logpdf(resid):
        return np.where((resid >= low) & (resid <= high), level, -np.inf)

    return logpdf


def student_t_noise(df: float, scale: float = 1.0):
    """Elementwise log density of a scaled Student's t (heavy tails)."""
    if df <= 0.0 or scale <= 0.0:
        raise ValueError("df and scale must be positive")
    from scipy.special import gammaln
    const = float(gammaln((df + 1.0) / 2.0) - gammaln(df / 2.0)
                  - 0.5 * np.log(df * np.pi) - np.log(scale))

    def logpdf(resid):
        z = resid / scale
        return const - 0.5 * (df + 1.0) * np.log1p(z * z / df)

    return logpdf
