"""Expected-value posteriors, grouped posteriors, compression, phone scores."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plfkit.phonology import validate_spec
from plfkit.plfnet.scoring import (
    LOG_FLOOR,
    PhoneScorer,
    compress,
    grouped_posterior,
    phone_scores,
    plf_posterior,
)

finite_floats = st.floats(-30, 30, allow_nan=False)


def test_plf_posterior_at_zero_logit():
    for m in (-1.0, -0.3, 0.0, 0.7, 1.0):
        assert plf_posterior(0.0, m) == pytest.approx(0.5)


def test_plf_posterior_negative_entry():
    assert plf_posterior(2.0, -1.0) == pytest.approx(0.11920292202211755, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(finite_floats, st.floats(0.01, 1.0))
def test_plf_posterior_sign_symmetry(x, m):
    assert plf_posterior(x, m) == plf_posterior(-x, -m)


def test_grouped_posterior_degenerate_single_member():
    v = np.array([1.3])
    assert grouped_posterior(v, [1.0]) == pytest.approx(float(plf_posterior(1.3, 1.0)))


def test_grouped_posterior_symmetric_half():
    v = np.array([np.log(0.2 / 0.8), np.log(0.8 / 0.2)])  # posteriors 0.2, 0.8
    assert grouped_posterior(v, [0.5, 0.5]) == pytest.approx(0.5, abs=1e-12)


def test_grouped_posterior_weighted_mean():
    v = np.array([np.log(0.8 / 0.2), np.log(0.4 / 0.6)])  # posteriors 0.8, 0.4
    assert grouped_posterior(v, [0.75, 0.25]) == pytest.approx(0.7, abs=1e-12)
    # unnormalized weights give the same convex combination
    assert grouped_posterior(v, [3.0, 1.0]) == pytest.approx(0.7, abs=1e-12)


def test_grouped_posterior_rejects_bad_weights():
    with pytest.raises(ValueError):
        grouped_posterior(np.array([0.0]), [-0.5])
    with pytest.raises(ValueError):
        grouped_posterior(np.array([0.0, 0.0]), [0.0, 0.0])


def test_compress_fixed_points():
    assert compress(0.0, 4.0) == 0.0
    assert compress(0.0, 1e6) == 0.0
    assert compress(-1000.0, 4.0) == pytest.approx(-4.0, abs=1e-12)
    assert compress(-0.01, 1e6) == pytest.approx(-0.01, abs=1e-8)


@settings(max_examples=200, deadline=None)
@given(st.floats(-100, 10), st.floats(-100, 10), st.floats(0.5, 100))
def test_compress_monotone_and_bounded_below(x1, x2, e):
    lo, hi = sorted((x1, x2))
    assert compress(lo, e) <= compress(hi, e)
    assert compress(lo, e) >= -e
    # strict versions hold wherever exp(x/e) is resolvable in float64
    if hi / e > -35 and lo != hi:
        assert compress(lo, e) < compress(hi, e)
    if lo / e > -35:
        assert compress(lo, e) > -e


@settings(max_examples=200, deadline=None)
@given(st.floats(-1, 1), st.floats(100, 1e6))
def test_compress_near_identity_bound(x, e):
    bound = x * x / (2 * e) * np.exp(abs(x) / e)
    assert abs(compress(x, e) - x) <= bound + 1e-15


def _score_all_zero_logits(spec, e=4.0):
    return phone_scores(np.zeros(spec.n_features), spec, e)


def test_phone_scores_closed_form_consonants(demo_spec):
    # consonant rows: 4 non-grouped entries of +-1, groups inactive
    s = _score_all_zero_logits(demo_spec)
    want = 4 * compress(np.log(0.5), 4.0)
    for p in range(6):
        assert s[p] == pytest.approx(want, abs=1e-12)


def test_phone_scores_closed_form_vowels(demo_spec):
    # vowel rows: 4 non-grouped entries plus two active groups of weight 1
    s = _score_all_zero_logits(demo_spec)
    want = 6 * compress(np.log(0.5), 4.0)
    for p in range(6, 10):
        assert s[p] == pytest.approx(want, abs=1e-12)


def test_phone_scores_grouped_only_row():
    spec = validate_spec(
        ["A", "G1", "G2"],
        {"horizontal": ["G1", "G2"], "vertical": []},
        ["only"],
        [[0.0, 0.6, 0.4]],
    )
    v = np.array([0.3, 1.0, -0.5])
    mix = 0.6 * plf_posterior(1.0, 1.0) + 0.4 * plf_posterior(-0.5, 1.0)
    want = compress(np.log(mix), 4.0)
    assert phone_scores(v, spec, 4.0)[0] == pytest.approx(float(want), abs=1e-12)


def test_zero_weight_entries_have_exactly_zero_gradient(demo_spec, rng):
    scorer = PhoneScorer(demo_spec, 4.0)
    v = rng.normal(0, 2, (demo_spec.n_features, 3))
    _, cache = scorer.forward(v)
    m = demo_spec.matrix
    for p in range(demo_spec.n_phones):
        d_scores = np.zeros((demo_spec.n_phones, 3))
        d_scores[p] = 1.0
        d_v, _, _, _ = scorer.backward(cache, d_scores)
        for f in range(demo_spec.n_features):
            if m[p, f] == 0.0:
                # zero weight: the feature cannot influence this phone's score
                assert np.all(d_v[f] == 0.0)


def test_zero_weight_group_member_has_zero_gradient(demo_spec, rng):
    # phone i has Back weight 0 inside the active horizontal group
    scorer = PhoneScorer(demo_spec, 4.0)
    v = rng.normal(0, 1, (demo_spec.n_features, 2))
    _, cache = scorer.forward(v)
    d_scores = np.zeros((demo_spec.n_phones, 2))
    d_scores[demo_spec.phone_index("i")] = 1.0
    d_v, _, _, _ = scorer.backward(cache, d_scores)
    back = demo_spec.inventory.index("Back")
    assert np.all(d_v[back] == 0.0)


def test_calibration_identity(demo_spec, rng):
    scorer = PhoneScorer(demo_spec, 4.0)
    v = rng.normal(0, 2, (demo_spec.n_features, 7))
    s1, _ = scorer.forward(v)
    p, f = demo_spec.n_phones, demo_spec.n_features
    s2, _ = scorer.forward(v, np.zeros((p, f)), (np.ones(p), np.zeros(p)))
    np.testing.assert_allclose(s2, s1, atol=1e-12)


def test_scaling_changes_only_magnitude(demo_spec, rng):
    scorer = PhoneScorer(demo_spec, 4.0)
    v = rng.normal(0, 1, (demo_spec.n_features, 4))
    raw = rng.normal(0, 0.5, (demo_spec.n_phones, demo_spec.n_features))
    s2, _ = scorer.forward(v, raw, (np.ones(demo_spec.n_phones), np.zeros(demo_spec.n_phones)))
    assert np.all(np.isfinite(s2))


def test_extreme_logits_hit_log_floor_without_blowup(demo_spec):
    scorer = PhoneScorer(demo_spec, 4.0)
    v = np.full((demo_spec.n_features, 2), 50.0)
    s, cache = scorer.forward(v)
    assert np.all(np.isfinite(s))
    assert np.all(cache.lneg == LOG_FLOOR)
    # clamped region: gradient through the clamped branch is exactly zero
    d_scores = np.ones((demo_spec.n_phones, 2))
    d_v, _, _, _ = scorer.backward(cache, d_scores)
    assert np.all(np.isfinite(d_v))


def test_argmax_shift_invariance(demo_spec, rng):
    v = rng.normal(0, 2, (demo_spec.n_features, 9))
    s = phone_scores(v, demo_spec, 4.0)
    shifted = s + 17.3
    np.testing.assert_array_equal(np.argmax(s, axis=0), np.argmax(shifted, axis=0))
