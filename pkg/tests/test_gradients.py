"""Analytic gradients vs central finite differences (small trial budget here;
the acceptance suite runs the full 100-trial version)."""

import numpy as np

from plfkit.plfnet.gradcheck import (
    assign_params,
    check_gradients,
    flatten_arrays,
    random_small_spec,
)
from plfkit.plfnet.model import TrainConfig, init_params, loss_and_grads
from plfkit.plfnet.frontend import FrontEndConfig


def test_gradcheck_small_budget():
    report = check_gradients(n_trials=10, seed=7)
    assert report.passed, f"max rel error {report.max_rel_error}"
    assert report.max_rel_error < 1e-6  # double precision leaves lots of headroom


def test_random_small_spec_is_valid(rng):
    for _ in range(25):
        spec = random_small_spec(rng, int(rng.integers(2, 7)), int(rng.integers(3, 9)))
        assert spec.n_phones >= 2
        assert np.all(np.abs(spec.matrix) <= 1.0)


def test_flatten_assign_roundtrip(rng):
    spec = random_small_spec(rng, 3, 5)
    cfg = TrainConfig(frontend=FrontEndConfig(n_mels=6, channels=(2, 2), time_strides=(1, 1), embed_dim=8))
    params = init_params(spec, cfg, rng)
    vec = flatten_arrays(params.named_arrays())
    vec2 = vec + 0.5
    assign_params(params, vec2)
    np.testing.assert_array_equal(flatten_arrays(params.named_arrays()), vec2)


def test_path_isolation_matches_ablation(rng):
    # lambda2 = lambda3 = 0 must equal a pure path-1 loss
    spec = random_small_spec(rng, 4, 6)
    fe = FrontEndConfig(n_mels=6, channels=(2, 2), time_strides=(1, 1), embed_dim=8)
    cfg_all = TrainConfig(frontend=fe, lambda2=0.0, lambda3=0.0)
    cfg_only1 = TrainConfig(frontend=fe, enable_path2=False, enable_path3=False)
    params = init_params(spec, cfg_all, np.random.default_rng(3))
    frames = rng.normal(0, 1, (6, 6))
    labels = rng.integers(0, 4, 6)
    loss_a, _, _ = loss_and_grads(params, frames, labels, cfg_all)
    loss_b, _, _ = loss_and_grads(params, frames, labels, cfg_only1)
    assert loss_a == loss_b


def test_single_phone_loss_is_zero(rng):
    spec = random_small_spec(rng, 1, 4)
    fe = FrontEndConfig(n_mels=6, channels=(2, 2), time_strides=(1, 1), embed_dim=8)
    cfg = TrainConfig(frontend=fe)
    params = init_params(spec, cfg, rng)
    frames = rng.normal(0, 1, (5, 6))
    labels = np.zeros(5, dtype=int)
    loss, grads, _ = loss_and_grads(params, frames, labels, cfg)
    assert loss == 0.0
