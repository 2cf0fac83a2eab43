import numpy as np
import pytest
from hypothesis import given, strategies as st

from gbsdense.errors import GuardError
from gbsdense.hafnian import hafnian, hafnian_reference, reduce_pattern

# (2k-1)!! values: hafnian of the all-ones matrix counts perfect matchings.
DOUBLE_FACTORIAL = {2: 1, 4: 3, 6: 15, 8: 105, 10: 945, 12: 10395}


def random_symmetric(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return a + a.T


def test_empty_matrix_is_one():
    assert hafnian(np.zeros((0, 0))) == 1 + 0j
    assert hafnian_reference(np.zeros((0, 0))) == 1 + 0j


@pytest.mark.parametrize("n", [1, 3, 5])
def test_odd_dimension_is_zero(n):
    a = random_symmetric(np.random.default_rng(n), n)
    assert hafnian(a) == 0j
    assert hafnian_reference(a) == 0j


def test_two_by_two_is_off_diagonal():
    a = np.array([[0.3, 2.0 - 1.0j], [2.0 - 1.0j, -0.7]])
    assert hafnian(a) == pytest.approx(2.0 - 1.0j, abs=1e-12)


def test_four_by_four_hand_value():
    # haf = a01 a23 + a02 a13 + a03 a12
    #     = (1+2j)(4-1j) + 3*0.5 + (-1j)*2 = 7.5 + 5j
    a = np.zeros((4, 4), dtype=complex)
    a[0, 1] = 1 + 2j
    a[0, 2] = 3.0
    a[0, 3] = -1j
    a[1, 2] = 2.0
    a[1, 3] = 0.5
    a[2, 3] = 4 - 1j
    a = a + a.T
    assert hafnian(a) == pytest.approx(7.5 + 5j, abs=1e-12)
    assert hafnian_reference(a) == pytest.approx(7.5 + 5j, abs=1e-12)


@pytest.mark.parametrize("n,expected", sorted(DOUBLE_FACTORIAL.items()))
def test_all_ones_counts_matchings(n, expected):
    assert hafnian(np.ones((n, n))) == pytest.approx(expected, rel=1e-12)


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 4, 6, 8, 10]))
def test_matches_reference(seed, n):
    a = random_symmetric(np.random.default_rng(seed), n)
    fast = hafnian(a)
    ref = hafnian_reference(a)
    assert abs(fast - ref) <= 1e-11 * max(1.0, abs(ref))


@given(st.integers(0, 2**32 - 1))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    a = random_symmetric(rng, 8)
    perm = rng.permutation(8)
    assert hafnian(a[np.ix_(perm, perm)]) == pytest.approx(hafnian(a), rel=1e-10)


@given(st.integers(0, 2**32 - 1))
def test_scaling(seed):
    rng = np.random.default_rng(seed)
    a = random_symmetric(rng, 6)
    c = complex(rng.normal(), rng.normal())
    assert hafnian(c * a) == pytest.approx(c**3 * hafnian(a), rel=1e-10)


@given(st.integers(0, 2**32 - 1))
def test_block_diagonal_factorizes(seed):
    rng = np.random.default_rng(seed)
    a = random_symmetric(rng, 4)
    b = random_symmetric(rng, 4)
    block = np.zeros((8, 8), dtype=complex)
    block[:4, :4] = a
    block[4:, 4:] = b
    assert hafnian(block) == pytest.approx(hafnian(a) * hafnian(b), rel=1e-10)


@given(st.integers(0, 2**32 - 1))
def test_diagonal_entries_are_ignored(seed):
    rng = np.random.default_rng(seed)
    a = random_symmetric(rng, 6)
    b = a.copy()
    np.fill_diagonal(b, rng.normal(size=6) + 1j * rng.normal(size=6))
    assert hafnian(b) == pytest.approx(hafnian(a), rel=1e-10)


def test_rejects_asymmetric():
    a = np.arange(16.0).reshape(4, 4)
    with pytest.raises(ValueError, match="symmetric"):
        hafnian(a)
    with pytest.raises(ValueError, match="symmetric"):
        hafnian_reference(a)


def test_rejects_non_square_and_non_finite():
    with pytest.raises(ValueError, match="square"):
        hafnian(np.ones((2, 3)))
    bad = np.ones((2, 2))
    bad[0, 1] = bad[1, 0] = np.nan
    with pytest.raises(ValueError, match="finite"):
        hafnian(bad)


def test_size_guards():
    with pytest.raises(GuardError):
        hafnian(np.ones((32, 32)))
    with pytest.raises(GuardError):
        hafnian_reference(np.ones((16, 16)))


def test_reduce_pattern_mode_matrix():
    a = np.arange(9.0).reshape(3, 3)
    out = reduce_pattern(a, [2, 0, 1])
    idx = [0, 0, 2]
    assert np.array_equal(out, a[np.ix_(idx, idx)])


def test_reduce_pattern_doubled_layout_keeps_blocks():
    m = 3
    rng = np.random.default_rng(7)
    b = random_symmetric(rng, m)
    c = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    c = c + c.conj().T
    kernel = np.block([[b, c], [c.conj().T, b.conj()]])
    out = reduce_pattern(kernel, [0, 2, 1])
    half = [1, 1, 2]
    expect = np.block(
        [
            [b[np.ix_(half, half)], c[np.ix_(half, half)]],
            [c.conj().T[np.ix_(half, half)], b.conj()[np.ix_(half, half)]],
        ]
    )
    assert np.array_equal(out, expect)


def test_reduce_pattern_all_zeros_gives_empty():
    out = reduce_pattern(np.ones((4, 4)), [0, 0])
    assert out.shape == (0, 0)
    assert hafnian(out) == 1 + 0j


def test_reduce_pattern_rejects_bad_input():
    a = np.ones((4, 4))
    with pytest.raises(ValueError, match="non-negative"):
        reduce_pattern(a, [1, -1])
    with pytest.raises(ValueError, match="integers"):
        reduce_pattern(a, [1.0, 1.0])
    with pytest.raises(ValueError, match="does not match"):
        reduce_pattern(a, [1, 1, 1])
