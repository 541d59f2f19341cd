"""File-driven filtering: flat key-value configs in, per-step CSV out.

The config grammar is deliberately tiny.  One ``key = value`` pair per
line, ``#`` starts a comment, keys are dotted paths, values are scalars
(int, float, bare word) or bracketed numeric lists like ``[1.0, 0.5]``.
Matrices are row-major lists; square shapes are inferred from the length.
Unknown keys are rejected, so typos fail loudly instead of silently running
a default.

Example::

    engine = kf
    wtt.kind = forgetting
    wtt.alpha = 0.95
    kf.models = 2
    kf.model.1.A = [1.0]
    kf.model.1.Q = [0.1]
    kf.model.1.B = [1.0]
    kf.model.1.R = [1.0]
    kf.model.2.A = [1.0]
    kf.model.2.Q = [0.1]
    kf.model.2.B = [1.0]
    kf.model.2.R = [100.0]
    kf.init.mean = [0.0]
    kf.init.cov = [1.0]

The observation file is a headerless CSV of numbers, one observation vector
per row.  The output carries one row per input row: step index, state
estimate, model weights, per-model evidences.  An input with no data rows
produces an empty output file.
"""

from __future__ import annotations

import csv
import math

import numpy as np

from .core import GaussianBelief, WeightVector
from .errors import ConfigError, ParseError
from .gpts import GPTSModel, IntelState, intel_step, perturb_pool, window_predict
from .kalman import KfEnsembleState, LinearGaussianModel, kf_bdemm_step
from .smc import (
    SmcEnsembleState,
    additive_noise_ssm,
    gaussian_noise,
    linear_gaussian_ssm,
    smc_bdemm_step,
    student_t_noise,
    uniform_noise,
)
from .toy import ToyConfig, toy_observation, toy_transition
from .wtt import WTTConfig

__all__ = ["parse_config", "build_engine", "run_stream"]


def parse_config(path) -> dict:
    """Parse a flat key-value config file into a dict.

    Values come back as int, float, str or list[float].  Raises
    :class:`~bdemm.errors.ParseError` with the offending 1-based line number
    on any syntax problem, including duplicate keys.
    """
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError("expected 'key = value'", line=lineno)
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if not key or not value:
                raise ParseError("empty key or value", line=lineno)
            if key in out:
                raise ParseError("duplicate key %r" % key, line=lineno)
            out[key] = _parse_value(value, lineno)
    return out


def _parse_value(value: str, lineno: int):
    if value.startswith("["):
        if not value.endswith("]"):
            raise ParseError("unterminated list", line=lineno)
        body = value[1:-1].replace(",", " ").split()
        try:
            return [float(tok) for tok in body]
        except ValueError:
            raise ParseError("lists may hold numbers only", line=lineno)
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        pass
    return value


class _Config:
    """Config dict wrapper that tracks key usage and typing."""

    def __init__(self, raw: dict):
        self.raw = raw
        self.used = set()

    def get(self, key, default=None, required=False):
        if key in self.raw:
            self.used.add(key)
            return self.raw[key]
        if required:
            raise ConfigError("missing required key %r" % key)
        return default

    def get_list(self, key, default=None, required=False):
        val = self.get(key, default=default, required=required)
        if val is None:
            return None
        if not isinstance(val, list):
            raise ConfigError("key %r must be a bracketed list" % key)
        return val

    def get_number(self, key, default=None, required=False):
        val = self.get(key, default=default, required=required)
        if val is None:
            return None
        if not isinstance(val, (int, float)):
            raise ConfigError("key %r must be a number" % key)
        return val

    def check_exhausted(self):
        extra = sorted(set(self.raw) - self.used)
        if extra:
            raise ConfigError("unknown key %r" % extra[0])


def _square(values, key):
    n = len(values)
    d = int(round(math.sqrt(n)))
    if d * d != n:
        raise ConfigError("key %r must hold a square matrix (row-major)" % key)
    return np.asarray(values, dtype=float).reshape(d, d)


def _wtt_from_config(cfg: _Config, k: int) -> WTTConfig:
    kind = cfg.get("wtt.kind", default="identity")
    try:
        if kind == "identity":
            return WTTConfig.identity()
        if kind == "constant":
            vec = cfg.get_list("wtt.constants", required=True)
            return WTTConfig.constant(vec)
        if kind == "markov":
            mat = cfg.get_list("wtt.matrix", required=True)
            return WTTConfig.markov(_square(mat, "wtt.matrix"))
        if kind == "forgetting":
            return WTTConfig.forgetting(cfg.get_number("wtt.alpha", required=True))
        if kind == "polya_urn":
            return WTTConfig.polya_urn(cfg.get_list("wtt.beta", required=True))
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError("bad weight-transition config: %s" % exc)
    raise ConfigError("unknown key 'wtt.kind' value %r" % kind)


class _KfEngine:
    def __init__(self, cfg: _Config):
        k = cfg.get("kf.models", required=True)
        if not isinstance(k, int) or k < 1:
            raise ConfigError("key 'kf.models' must be a positive integer")
        self.pool = []
        for i in range(1, k + 1):
            base = "kf.model.%d." % i
            a = _square(cfg.get_list(base + "A", required=True), base + "A")
            q = _square(cfg.get_list(base + "Q", required=True), base + "Q")
            r = _square(cfg.get_list(base + "R", required=True), base + "R")
            b_flat = cfg.get_list(base + "B", required=True)
            m = r.shape[0]
            if len(b_flat) % m:
                raise ConfigError("key %r length does not fit the obs dim"
                                  % (base + "B",))
            b = np.asarray(b_flat, dtype=float).reshape(m, -1)
            try:
                model = LinearGaussianModel(A=a, Q=q, B=b, R=r)
            except Exception as exc:
                raise ConfigError("bad model under %r: %s" % (base, exc))
            self.pool.append(model)
        d = self.pool[0].state_dim
        mean = cfg.get_list("kf.init.mean", required=True)
        cov = _square(cfg.get_list("kf.init.cov", required=True), "kf.init.cov")
        init_w = cfg.get_list("kf.init.weights")
        try:
            weights = (WeightVector(np.asarray(init_w, dtype=float))
                       if init_w else WeightVector.uniform(k))
            belief = GaussianBelief(np.asarray(mean, dtype=float), cov)
        except Exception as exc:
            raise ConfigError("bad kf.init.*: %s" % exc)
        if belief.dim != d:
            raise ConfigError("key 'kf.init.mean' does not match the state dim")
        self.state = KfEnsembleState.initial(belief, weights=weights)
        self.wtt = _wtt_from_config(cfg, k)
        self.floor = float(cfg.get_number("weight_floor", default=0.0))
        self.obs_dim = self.pool[0].obs_dim
        self.est_dim = d

    def step(self, y, t):
        self.state, est, per = kf_bdemm_step(self.state, self.pool, y,
                                             self.wtt, weight_floor=self.floor)
        return (est.x_hat, self.state.weights.w,
                np.array([r.evidence for r in per]))


def _smc_model(cfg: _Config, base: str, toy: ToyConfig):
    kind = cfg.get(base + "kind", required=True)
    if kind == "linear_gaussian":
        return linear_gaussian_ssm(
            A=_square(cfg.get_list(base + "A", required=True), base + "A"),
            Q=_square(cfg.get_list(base + "Q", required=True), base + "Q"),
            B=np.asarray(cfg.get_list(base + "B", required=True),
                         dtype=float).reshape(1, -1),
            R=_square(cfg.get_list(base + "R", required=True), base + "R"),
        ), False

    transition = toy_transition(toy)

    def observation(x, t):
        return toy_observation(x[:, 0], t, toy)

    if kind == "toy_gaussian":
        var = cfg.get_number(base + "var", default=toy.gauss_noise_var)
        return additive_noise_ssm(transition, observation,
                                  gaussian_noise(var)), True
    if kind == "toy_uniform":
        low = cfg.get_number(base + "low", default=toy.robust_low)
        high = cfg.get_number(base + "high", default=toy.robust_high)
        return additive_noise_ssm(transition, observation,
                                  uniform_noise(low, high)), True
    if kind == "toy_student_t":
        df = cfg.get_number(base + "df", default=3.0)
        scale = cfg.get_number(base + "scale", default=1.0)
        return additive_noise_ssm(transition, observation,
                                  student_t_noise(df, scale)), True
    raise ConfigError("unknown key %r value %r" % (base + "kind", kind))


class _SmcEngine:
    def __init__(self, cfg: _Config):
        k = cfg.get("smc.models", required=True)
        if not isinstance(k, int) or k < 1:
            raise ConfigError("key 'smc.models' must be a positive integer")
        n = cfg.get("smc.particles", default=200)
        seed = cfg.get("smc.seed", default=0)
        self.resampling = cfg.get("smc.resampling", default="multinomial")
        toy = ToyConfig(
            gamma_shape=cfg.get_number("smc.gamma_shape", default=3.0),
            gamma_scale=cfg.get_number("smc.gamma_scale", default=2.0),
        )
        self.pool = []
        all_toy = True
        for i in range(1, k + 1):
            model, is_toy = _smc_model(cfg, "smc.model.%d." % i, toy)
            all_toy = all_toy and is_toy
            self.pool.append(model)
        shared = bool(cfg.get("smc.shared_transition",
                              default=1 if all_toy else 0))
        self.rng = np.random.default_rng(seed)
        point = cfg.get_list("smc.init.point")
        if point is not None:
            particles = np.tile(np.asarray(point, dtype=float), (n, 1))
        else:
            mean = np.asarray(cfg.get_list("smc.init.mean", required=True),
                              dtype=float)
            cov = _square(cfg.get_list("smc.init.cov", required=True),
                          "smc.init.cov")
            try:
                chol = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                raise ConfigError("key 'smc.init.cov' must be positive definite")
            particles = mean + self.rng.standard_normal(
                (n, mean.size)) @ chol.T
        self.state = SmcEnsembleState.initial(particles, k=k,
                                              shared_transition=shared)
        self.wtt = _wtt_from_config(cfg, k)
        self.floor = float(cfg.get_number("weight_floor", default=0.0))
        self.obs_dim = 1
        self.est_dim = particles.shape[1]

    def step(self, y, t):
        self.state, est, per = smc_bdemm_step(
            self.state, self.pool, y, t, self.wtt, self.rng,
            weight_floor=self.floor, resampling=self.resampling)
        return (est.x_hat, self.state.model_weights.w,
                np.array([r.evidence for r in per]))


class _IntelEngine:
    def __init__(self, cfg: _Config):
        nominal = GPTSModel(
            mean_const=cfg.get_number("intel.mean", default=0.0),
            signal_variance=cfg.get_number("intel.signal_variance", default=1.0),
            lengthscale=cfg.get_number("intel.lengthscale", default=1.0),
            noise_var=cfg.get_number("intel.noise_variance", default=0.01),
            window=cfg.get("intel.window", default=10),
        )
        factors = cfg.get_list("intel.noise_factors", default=[1.0, 100.0])
        try:
            self.pool = perturb_pool(nominal, factors)
        except Exception as exc:
            raise ConfigError("bad intel.noise_factors: %s" % exc)
        k = len(self.pool)
        self.state = IntelState.initial(k=k)
        self.wtt = _wtt_from_config(cfg, k)
        self.floor = float(cfg.get_number("weight_floor", default=0.0))
        self.obs_dim = 1
        self.est_dim = 1

    def step(self, y, t):
        y = float(np.atleast_1d(y)[0])
        evidences = np.array([
            np.exp(window_predict(m, self.state.buffer, t).logpdf(y))
            for m in self.pool])
        self.state, fused, _ = intel_step(self.state, self.pool, y, t,
                                          self.wtt, weight_floor=self.floor)
        return (np.array([fused.mean]), self.state.model_weights.w, evidences)


def build_engine(config: dict):
    """Assemble a filtering engine from a parsed config dict."""
    cfg = _Config(config)
    engine_kind = cfg.get("engine", required=True)
    if engine_kind == "kf":
        engine = _KfEngine(cfg)
    elif engine_kind == "smc":
        engine = _SmcEngine(cfg)
    elif engine_kind == "intel":
        engine = _IntelEngine(cfg)
    else:
        raise ConfigError("unknown key 'engine' value %r" % engine_kind)
    cfg.check_exhausted()
    return engine


def _read_observations(path, obs_dim):
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                raise ParseError("row does not parse as numbers", line=lineno)
            if not all(np.isfinite(values)):
                raise ParseError("row holds a non-finite value", line=lineno)
            if len(values) != obs_dim:
                raise ParseError(
                    "expected %d column(s), got %d" % (obs_dim, len(values)),
                    line=lineno)
            rows.append(values)
    return np.asarray(rows, dtype=float)


def run_stream(config_path, input_path, output_path) -> int:
    """Filter a CSV of observations through a configured engine.

    Returns the number of data rows written.  An input with no data rows
    yields an empty output file and returns 0.
    """
    engine = build_engine(parse_config(config_path))
    observations = _read_observations(input_path, engine.obs_dim)
    with open(output_path, "w", newline="") as fh:
        if observations.size == 0:
            return 0
        k = len(engine.pool)
        header = (["step"]
                  + ["est_%d" % (j + 1) for j in range(engine.est_dim)]
                  + ["w_%d" % (j + 1) for j in range(k)]
                  + ["ev_%d" % (j + 1) for j in range(k)])
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, y in enumerate(observations):
            est, weights, evidences = engine.step(y, i + 1)
            writer.writerow([i + 1] + [repr(float(v)) for v in est]
                            + [repr(float(v)) for v in weights]
                            + [repr(float(v)) for v in evidences])
    return observations.shape[0]
