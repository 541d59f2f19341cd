"""Weight arithmetic, belief types, and mixture collapse."""

import numpy as np
import pytest

from bdemm import (
    AllZeroError,
    DimensionMismatchError,
    GaussianBelief,
    NegativeEntryError,
    PointEstimate,
    WeightHistory,
    WeightVector,
    apply_weight_floor,
    bma_point_estimate,
    collapse_mixture,
    normalize_weights,
    update_model_weights,
    update_model_weights_log,
)


# ---------------------------------------------------------------------------
# WeightVector


def test_weight_vector_accepts_simplex_point():
    wv = WeightVector([0.25, 0.75])
    assert len(wv) == 2
    assert wv.w.tolist() == [0.25, 0.75]


def test_weight_vector_is_read_only():
    wv = WeightVector([0.5, 0.5])
    with pytest.raises(ValueError):
        wv.w[0] = 0.9


def test_weight_vector_scalar_promotes_to_length_one():
    assert len(WeightVector(1.0)) == 1


def test_weight_vector_rejects_bad_input():
    with pytest.raises(NegativeEntryError):
        WeightVector([-0.1, 1.1])
    with pytest.raises(ValueError):
        WeightVector([0.3, 0.3])  # sums to 0.6
    with pytest.raises(ValueError):
        WeightVector([np.nan, 1.0])
    with pytest.raises(DimensionMismatchError):
        WeightVector([])
    with pytest.raises(DimensionMismatchError):
        WeightVector([[0.5, 0.5]])


def test_uniform_constructor():
    wv = WeightVector.uniform(4)
    assert np.array_equal(wv.w, np.full(4, 0.25))
    with pytest.raises(DimensionMismatchError):
        WeightVector.uniform(0)


# ---------------------------------------------------------------------------
# WeightHistory


def test_history_start_and_append():
    w0 = WeightVector([0.5, 0.5])
    h0 = WeightHistory.start(w0)
    assert len(h0) == 1
    assert h0.width == 2
    assert h0.last is w0

    w1 = WeightVector([0.9, 0.1])
    h1 = h0.append(w1)
    assert len(h1) == 2
    assert h1.last is w1
    assert np.allclose(h1.cumulative, [1.4, 0.6])
    # the original is untouched
    assert len(h0) == 1
    assert np.allclose(h0.cumulative, [0.5, 0.5])


def test_history_rejects_mismatched_rows():
    h = WeightHistory.start(WeightVector([0.5, 0.5]))
    with pytest.raises(DimensionMismatchError):
        h.append(WeightVector([1.0]))
    with pytest.raises(TypeError):
        WeightHistory((np.array([0.5, 0.5]),), np.array([0.5, 0.5]))


def test_history_cumulative_matches_column_sums():
    rng = np.random.default_rng(3)
    h = WeightHistory.start(WeightVector.uniform(3))
    rows = [h.last.w]
    for _ in range(50):
        raw = rng.random(3)
        wv = WeightVector(raw / raw.sum())
        h = h.append(wv)
        rows.append(wv.w)
    assert np.allclose(h.cumulative, np.sum(rows, axis=0), atol=1e-12)


# ---------------------------------------------------------------------------
# GaussianBelief / PointEstimate


def test_belief_symmetrizes_and_validates():
    b = GaussianBelief([0.0, 0.0], [[1.0, 0.2 + 1e-14], [0.2, 1.0]])
    assert np.array_equal(b.cov, b.cov.T)
    assert b.dim == 2

    with pytest.raises(ValueError):
        GaussianBelief([0.0, 0.0], [[1.0, 0.5], [-0.5, 1.0]])
    with pytest.raises(ValueError):
        GaussianBelief([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]])  # eigenvalue -1
    with pytest.raises(DimensionMismatchError):
        GaussianBelief([0.0, 0.0], [[1.0]])


def test_belief_scale_relative_tolerance():
    # a large healthy covariance with proportional roundoff asymmetry passes
    c = 1e8 * np.array([[2.0, 0.5], [0.5, 1.0]])
    c[0, 1] += 1e-4  # far above the absolute tol, tiny relative to scale
    GaussianBelief([0.0, 0.0], c)


def test_belief_accepts_scalar_arguments():
    b = GaussianBelief(1.0, 2.0)
    assert b.dim == 1
    assert b.cov[0, 0] == 2.0


def test_point_estimate_validation():
    assert PointEstimate(3.0).dim == 1
    with pytest.raises(ValueError):
        PointEstimate([np.inf])


# ---------------------------------------------------------------------------
# normalize_weights


def test_normalize_divides_by_sum():
    wv = normalize_weights([2.0, 6.0])
    assert wv.w.tolist() == [0.25, 0.75]


def test_normalize_is_exactly_idempotent():
    rng = np.random.default_rng(11)
    for _ in range(200):
        raw = rng.random(rng.integers(1, 8))
        once = normalize_weights(raw)
        twice = normalize_weights(once.w)
        assert np.array_equal(once.w, twice.w)


def test_normalize_error_cases():
    with pytest.raises(NegativeEntryError):
        normalize_weights([1.0, -1.0])
    with pytest.raises(AllZeroError):
        normalize_weights([0.0, 0.0])
    with pytest.raises(ValueError):
        normalize_weights([1.0, np.inf])


# ---------------------------------------------------------------------------
# Bayes weight updates


def test_bayes_update_hand_case():
    # prior (1/2, 1/2), evidences (0.2, 0.6): posterior (1/4, 3/4)
    post = update_model_weights(WeightVector([0.5, 0.5]), [0.2, 0.6])
    assert np.allclose(post.w, [0.25, 0.75], atol=1e-12)


def test_log_and_linear_updates_agree():
    rng = np.random.default_rng(5)
    for _ in range(200):
        k = int(rng.integers(1, 6))
        raw = rng.random(k) + 1e-3
        prior = WeightVector(raw / raw.sum())
        ev = rng.random(k) * 10.0
        a = update_model_weights(prior, ev)
        b = update_model_weights_log(prior, np.log(ev))
        assert np.allclose(a.w, b.w, atol=1e-13)


def test_update_invariant_to_common_evidence_scale():
    prior = WeightVector([0.3, 0.7])
    base = update_model_weights_log(prior, np.array([-2.0, -5.0]))
    shifted = update_model_weights_log(prior, np.array([-2.0, -5.0]) - 500.0)
    assert np.allclose(base.w, shifted.w, atol=1e-13)


def test_neg_inf_evidence_kills_a_model():
    post = update_model_weights_log(WeightVector([0.5, 0.5]), [0.0, -np.inf])
    assert np.array_equal(post.w, [1.0, 0.0])


def test_all_zero_products_raise():
    with pytest.raises(AllZeroError):
        update_model_weights_log(WeightVector([0.5, 0.5]),
                                 [-np.inf, -np.inf])
    # a dead prior times the only live evidence is also all-zero
    with pytest.raises(AllZeroError):
        update_model_weights_log(WeightVector([0.0, 1.0]), [5.0, -np.inf])


def test_update_rejects_nan_and_plus_inf():
    prior = WeightVector([0.5, 0.5])
    with pytest.raises(ValueError):
        update_model_weights_log(prior, [0.0, np.nan])
    with pytest.raises(ValueError):
        update_model_weights_log(prior, [0.0, np.inf])
    with pytest.raises(NegativeEntryError):
        update_model_weights(prior, [0.5, -0.5])
    with pytest.raises(DimensionMismatchError):
        update_model_weights_log(prior, [0.0])


def test_update_handles_extreme_evidence_spread():
    # one evidence 600 nats above the other: no overflow, no NaN
    post = update_model_weights_log(WeightVector([0.5, 0.5]), [0.0, -600.0])
    assert post.w[0] > 0.999
    assert np.all(np.isfinite(post.w))


# ---------------------------------------------------------------------------
# weight floor


def test_floor_clamps_then_renormalizes():
    out = apply_weight_floor([0.99, 0.01], 0.1)
    assert np.allclose(out.w, [0.99 / 1.09, 0.1 / 1.09], atol=1e-15)


def test_floor_domain():
    with pytest.raises(ValueError):
        apply_weight_floor([0.5, 0.5], 0.0)
    with pytest.raises(ValueError):
        apply_weight_floor([0.5, 0.5], 0.5)  # 1/K exactly


def test_floor_through_update():
    post = update_model_weights_log(WeightVector([0.5, 0.5]),
                                    [0.0, -600.0], floor=0.02)
    # clamp to floor then renormalize: min entry sits near the floor
    assert post.w[1] >= 0.02 / (1.0 + 2 * 0.02)
    assert abs(post.w.sum() - 1.0) <= 1e-12


# ---------------------------------------------------------------------------
# point estimates and mixture collapse


def test_bma_hand_case():
    est = bma_point_estimate([PointEstimate([0.0]), PointEstimate([2.0])],
                             WeightVector([0.5, 0.5]))
    assert est.x_hat.tolist() == [1.0]


def test_bma_accepts_raw_arrays():
    est = bma_point_estimate([[1.0, 0.0], [0.0, 1.0]], WeightVector([0.25, 0.75]))
    assert np.allclose(est.x_hat, [0.25, 0.75])
    with pytest.raises(DimensionMismatchError):
        bma_point_estimate([[1.0]], WeightVector([0.5, 0.5]))
    with pytest.raises(DimensionMismatchError):
        bma_point_estimate([[1.0], [1.0, 2.0]], WeightVector([0.5, 0.5]))


def test_collapse_hand_case():
    # equal mix of N(0,1) and N(2,1): mean 1, variance 1 + 1 = 2
    out = collapse_mixture([GaussianBelief(0.0, 1.0), GaussianBelief(2.0, 1.0)],
                           WeightVector([0.5, 0.5]))
    assert np.allclose(out.mean, [1.0], atol=1e-15)
    assert np.allclose(out.cov, [[2.0]], atol=1e-15)


def test_collapse_mean_equals_bma_exactly():
    rng = np.random.default_rng(17)
    for _ in range(100):
        k = int(rng.integers(1, 5))
        d = int(rng.integers(1, 4))
        comps = []
        for _ in range(k):
            a = rng.standard_normal((d, d))
            comps.append(GaussianBelief(rng.standard_normal(d), a @ a.T + np.eye(d)))
        raw = rng.random(k) + 1e-3
        w = WeightVector(raw / raw.sum())
        collapsed = collapse_mixture(comps, w)
        est = bma_point_estimate([PointEstimate(c.mean) for c in comps], w)
        # same expression, so the two agree to the bit
        assert np.array_equal(collapsed.mean, est.x_hat)


def test_collapse_matches_direct_moment_formula():
    rng = np.random.default_rng(23)
    for _ in range(100):
        k = int(rng.integers(2, 5))
        d = int(rng.integers(1, 4))
        means = rng.standard_normal((k, d)) * 3.0
        covs = []
        for _ in range(k):
            a = rng.standard_normal((d, d))
            covs.append(a @ a.T + 0.5 * np.eye(d))
        raw = rng.random(k) + 1e-3
        w = raw / raw.sum()
        out = collapse_mixture(
            [GaussianBelief(m, c) for m, c in zip(means, covs)],
            WeightVector(w))
        mu = w @ means
        second = sum(wk * (c + np.outer(m, m))
                     for wk, m, c in zip(w, means, covs))
        assert np.allclose(out.mean, mu, atol=1e-12)
        assert np.allclose(out.cov, second - np.outer(mu, mu), atol=1e-10)
        assert float(np.linalg.eigvalsh(out.cov).min()) >= -1e-10


def test_collapse_single_component_is_identity():
    b = GaussianBelief([1.0, -1.0], [[2.0, 0.3], [0.3, 1.0]])
    out = collapse_mixture([b], WeightVector([1.0]))
    assert np.allclose(out.mean, b.mean, atol=1e-15)
    assert np.allclose(out.cov, b.cov, atol=1e-15)


def test_collapse_rejects_mismatches():
    b1 = GaussianBelief(0.0, 1.0)
    b2 = GaussianBelief([0.0, 0.0], np.eye(2))
    with pytest.raises(DimensionMismatchError):
        collapse_mixture([b1, b2], WeightVector([0.5, 0.5]))
    with pytest.raises(DimensionMismatchError):
        collapse_mixture([b1], WeightVector([0.5, 0.5]))
