import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from mpgi.hadamard import (SizeLimitError, fwht_2d, hadamard_matrix, hadamard_row, pattern_2d,
                           upsample_replicate)


def brute_fwht(img):
    n = img.shape[0]
    tier = n.bit_length() - 1
    out = np.zeros((n, n))
    for u in range(n):
        for v in range(n):
            out[u, v] = np.sum(pattern_2d(tier, u, v).values * img)
    return out


def test_order_one_is_displayed_matrix():
    assert hadamard_matrix(1).tolist() == [[1, 1], [1, -1]]


def test_order_two_hand_expanded():
    expected = [[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]]
    assert hadamard_matrix(2).tolist() == expected
    assert np.all(hadamard_matrix(2)[0] == 1)


@pytest.mark.parametrize("k", range(1, 7))
def test_orthogonal_exact(k):
    h = hadamard_matrix(k).astype(np.int64)
    assert np.array_equal(h @ h.T, (1 << k) * np.eye(1 << k, dtype=np.int64))
    assert np.all(h[0] == 1) and np.all(h[:, 0] == 1)


@pytest.mark.parametrize("k", range(2, 8))
def test_even_rows_replicate_lower_order(k):
    h, lo = hadamard_matrix(k), hadamard_matrix(k - 1)
    x = np.arange(1 << k)
    assert np.array_equal(h[0::2], lo[:, x // 2])


@pytest.mark.parametrize("k", range(1, 8))
def test_both_kronecker_orders_coincide(k):
    h = hadamard_matrix(k)
    if k == 1:
        return
    lo = hadamard_matrix(k - 1)
    assert np.array_equal(h, np.kron(lo, hadamard_matrix(1)))
    assert np.array_equal(h, np.kron(hadamard_matrix(1), lo))


def test_matches_scipy_sylvester():
    scipy_linalg = pytest.importorskip("scipy.linalg")
    assert np.array_equal(hadamard_matrix(6), scipy_linalg.hadamard(64))


def test_size_cap():
    with pytest.raises(SizeLimitError, match="K_max"):
        hadamard_matrix(15)
    with pytest.raises(SizeLimitError):
        hadamard_matrix(0)
    with pytest.raises(SizeLimitError, match="3"):
        hadamard_matrix(4, k_max=3)


def test_hadamard_row_matches_matrix():
    for k in range(1, 6):
        h = hadamard_matrix(k)
        for u in range(1 << k):
            assert np.array_equal(hadamard_row(k, u), h[u])
    assert hadamard_row(0, 0).tolist() == [1]


def test_pattern_examples():
    assert np.all(pattern_2d(1, 0, 0).values == 1)
    assert pattern_2d(1, 1, 1).values.tolist() == [[1, -1], [-1, 1]]
    assert np.array_equal(pattern_2d(2, 0, 1).values, hadamard_matrix(4)[1].reshape(4, 4))


@pytest.mark.parametrize("tier", range(0, 5))
def test_reshape_consistency(tier):
    n = 1 << tier
    if tier == 0:
        assert pattern_2d(0, 0, 0).values.tolist() == [[1]]
        return
    h = hadamard_matrix(2 * tier)
    for m in range(4 ** tier):
        assert np.array_equal(h[m].reshape(n, n), pattern_2d(tier, m // n, m % n).values)


@pytest.mark.parametrize("tier", range(0, 5))
def test_pattern_sums(tier):
    n = 1 << tier
    for u in range(n):
        for v in range(n):
            total = pattern_2d(tier, u, v).values.sum()
            assert total == (4 ** tier if u == v == 0 else 0)


def test_pattern_index_errors():
    with pytest.raises(IndexError):
        pattern_2d(2, 4, 0)
    with pytest.raises(IndexError):
        pattern_2d(2, 0, -1)


def test_upsample_examples():
    p = pattern_2d(2, 1, 3)
    assert np.array_equal(upsample_replicate(p, 1), p.values)
    assert np.array_equal(upsample_replicate(pattern_2d(1, 0, 0), 2), np.ones((4, 4)))
    assert np.array_equal(upsample_replicate(pattern_2d(1, 1, 0), 2), pattern_2d(2, 2, 0).values)
    with pytest.raises(ValueError):
        upsample_replicate(p, 3)
    with pytest.raises(ValueError):
        upsample_replicate(p, 0)


@pytest.mark.parametrize("tier", range(1, 6))
def test_embedding_invariant(tier):
    n = 1 << (tier - 1)
    for u in range(n):
        for v in range(n):
            up = upsample_replicate(pattern_2d(tier - 1, u, v), 2)
            assert np.array_equal(up, pattern_2d(tier, 2 * u, 2 * v).values)


def test_fwht_constant():
    out = fwht_2d(np.full((2, 2), 3.5))
    assert out[0, 0] == 14.0
    assert np.count_nonzero(out) == 1


def test_fwht_matches_brute_force():
    rng = np.random.default_rng(7)
    img = rng.normal(size=(8, 8))
    np.testing.assert_allclose(fwht_2d(img), brute_fwht(img), rtol=0, atol=1e-12)


def test_fwht_involution_side_four():
    img = np.arange(16.0).reshape(4, 4)
    assert np.array_equal(fwht_2d(fwht_2d(img)), 16 * img)


@pytest.mark.parametrize("tier", range(0, 5))
def test_fwht_of_basis_pattern_is_single_spike(tier):
    n = 1 << tier
    for u in range(n):
        for v in range(n):
            out = fwht_2d(pattern_2d(tier, u, v).values)
            expected = np.zeros((n, n))
            expected[u, v] = 4 ** tier
            assert np.array_equal(out, expected)


def test_fwht_rejects_bad_shapes():
    with pytest.raises(ValueError):
        fwht_2d(np.zeros((4, 8)))
    with pytest.raises(ValueError):
        fwht_2d(np.zeros((6, 6)))
    with pytest.raises(ValueError):
        fwht_2d(np.zeros(4))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 4).flatmap(
    lambda t: arrays(np.int64, (1 << t, 1 << t), elements=st.integers(-1000, 1000))))
def test_fwht_integer_inputs_exact(img):
    n = img.shape[0]
    twice = fwht_2d(fwht_2d(img))
    assert np.array_equal(twice, n * n * img.astype(np.float64))
