"""Kernel contracts: alignment DP vs an independent oracle, conv parity."""

import numpy as np
import pytest

from plfkit.kernels import available_backends, backend_name, reference


def oracle_edit_distance(a, b):
    """Independent row-rolling DP; distance only, no backtrace."""
    n, m = len(a), len(b)
    prev = list(range(m + 1))
    for i in range(1, n + 1):
        cur = [i] + [0] * m
        for j in range(1, m + 1):
            cur[j] = min(
                prev[j - 1] + (0 if a[i - 1] == b[j - 1] else 1),
                prev[j] + 1,
                cur[j - 1] + 1,
            )
        prev = cur
    return prev[m]


BACKENDS = sorted(available_backends().items())


@pytest.mark.parametrize("name,mod", BACKENDS)
def test_edit_counts_against_oracle(name, mod, rng):
    for _ in range(200):
        a = rng.integers(0, 10, rng.integers(1, 31)).astype(np.int32)
        b = rng.integers(0, 10, rng.integers(0, 31)).astype(np.int32)
        ins, dels, subs = mod.edit_counts(a, b)
        assert ins + dels + subs == oracle_edit_distance(list(a), list(b))
        assert min(ins, dels, subs) >= 0


@pytest.mark.parametrize("name,mod", BACKENDS)
def test_edit_counts_basics(name, mod):
    assert tuple(mod.edit_counts(np.array([1, 2, 3], np.int32), np.array([1, 2, 3], np.int32))) == (0, 0, 0)
    assert tuple(mod.edit_counts(np.array([1, 2, 3], np.int32), np.array([], np.int32))) == (0, 3, 0)
    assert tuple(mod.edit_counts(np.array([1], np.int32), np.array([2, 2], np.int32))) == (1, 0, 1)


def test_edit_counts_backend_parity(rng):
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend not built")
    mods = dict(BACKENDS)
    for _ in range(100):
        a = rng.integers(0, 6, rng.integers(0, 25)).astype(np.int32)
        b = rng.integers(0, 6, rng.integers(0, 25)).astype(np.int32)
        if a.size == 0 and b.size == 0:
            continue
        assert tuple(mods["native"].edit_counts(a, b)) == tuple(mods["pure"].edit_counts(a, b))


@pytest.mark.parametrize("name,mod", BACKENDS)
@pytest.mark.parametrize("stride", [(1, 1), (2, 1), (3, 2)])
def test_conv2d_matches_direct_sum(name, mod, stride, rng):
    sh, sw = stride
    x = rng.normal(size=(3, 11, 9))
    w = rng.normal(size=(4, 3, 3, 3))
    b = rng.normal(size=4)
    out = mod.conv2d_forward(x, w, b, sh, sw)
    ho = (11 - 3) // sh + 1
    wo = (9 - 3) // sw + 1
    assert out.shape == (4, ho, wo)
    # direct-sum oracle at a few positions
    for co in (0, 3):
        for i in (0, ho - 1):
            for j in (0, wo - 1):
                want = b[co] + np.sum(x[:, i * sh : i * sh + 3, j * sw : j * sw + 3] * w[co])
                assert out[co, i, j] == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("name,mod", BACKENDS)
def test_conv2d_backward_finite_differences(name, mod, rng):
    x = rng.normal(size=(2, 7, 6))
    w = rng.normal(size=(3, 2, 3, 3))
    b = rng.normal(size=3)
    dout = rng.normal(size=mod.conv2d_forward(x, w, b, 2, 1).shape)
    dx, dw, db = mod.conv2d_backward(x, w, 2, 1, dout)
    eps = 1e-6

    def loss(xx, ww, bb):
        return float(np.sum(mod.conv2d_forward(xx, ww, bb, 2, 1) * dout))

    for arr, grad in ((x, dx), (w, dw), (b, db)):
        flat = arr.ravel()
        for idx in rng.choice(flat.size, size=min(10, flat.size), replace=False):
            orig = flat[idx]
            flat[idx] = orig + eps
            up = loss(x, w, b)
            flat[idx] = orig - eps
            down = loss(x, w, b)
            flat[idx] = orig
            fd = (up - down) / (2 * eps)
            assert grad.ravel()[idx] == pytest.approx(fd, rel=1e-5, abs=1e-7)


def test_conv2d_backend_parity(rng):
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend not built")
    mods = dict(BACKENDS)
    x = rng.normal(size=(4, 10, 8))
    w = rng.normal(size=(5, 4, 3, 3))
    b = rng.normal(size=5)
    f_pure = mods["pure"].conv2d_forward(x, w, b, 2, 1)
    f_nat = mods["native"].conv2d_forward(x, w, b, 2, 1)
    np.testing.assert_allclose(f_nat, f_pure, rtol=1e-12, atol=1e-12)
    dout = rng.normal(size=f_pure.shape)
    for g_nat, g_pure in zip(
        mods["native"].conv2d_backward(x, w, 2, 1, dout),
        mods["pure"].conv2d_backward(x, w, 2, 1, dout),
    ):
        np.testing.assert_allclose(g_nat, g_pure, rtol=1e-11, atol=1e-12)


def test_backend_name_is_consistent():
    assert backend_name() in ("native", "pure")
    assert "pure" in dict(BACKENDS)
    assert reference.edit_counts([1], [1]) == (0, 0, 0)
