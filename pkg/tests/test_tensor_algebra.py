import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from roughsig import tensor_algebra as ta
from roughsig.errors import DimensionMismatch, InputError, LevelCapError
from roughsig.tensor_algebra import TruncatedTensor as T


def rand_tensor(rng, d, N, scalar=0.0, scale=1.0):
    levels = [np.array([scalar])] + [rng.standard_normal(d**k) * scale for k in range(1, N + 1)]
    return T(d, N, tuple(levels))


def rand_group(rng, d, N, scale=0.5, factors=4):
    """Product of exponentials of random vectors, hence grouplike."""
    g = T.unit(d, N)
    for _ in range(factors):
        g = g * ta.tensor_exp(T.from_vector(rng.standard_normal(d) * scale, N))
    return g


seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 3)
levels = st.integers(1, 4)


def brute_shuffle(u, v):
    """All interleavings, by choosing the positions of u's letters."""
    out = {}
    n = len(u) + len(v)
    for pos in itertools.combinations(range(n), len(u)):
        word, iu, iv = [], 0, 0
        for k in range(n):
            if k in pos:
                word.append(u[iu])
                iu += 1
            else:
                word.append(v[iv])
                iv += 1
        out[tuple(word)] = out.get(tuple(word), 0) + 1
    return out


def test_mul_identity_and_levels():
    e = T.unit(3, 2)
    assert (e * e).allclose(e)
    x, y = np.array([1.0, 2.0]), np.array([-0.5, 3.0])
    a = T(2, 2, (np.ones(1), x, np.zeros(4)))
    b = T(2, 2, (np.ones(1), y, np.zeros(4)))
    prod = ta.tensor_mul(a, b)
    assert np.allclose(prod.levels[1], x + y)
    assert np.allclose(prod.levels[2], np.outer(x, y).ravel())


def test_exp_e1_exp_e2():
    g = ta.tensor_exp(T.from_vector([1.0, 0.0], 2)) * ta.tensor_exp(T.from_vector([0.0, 1.0], 2))
    assert np.allclose(g.levels[1], [1, 1])
    assert np.allclose(g.levels[2], [0.5, 1.0, 0.0, 0.5])


def test_exp_examples():
    assert ta.tensor_exp(T.zero(2, 3)).allclose(T.unit(2, 3))
    v = np.array([0.3, -1.2])
    g = ta.tensor_exp(T.from_vector(v, 3))
    assert np.allclose(g.levels[2], np.outer(v, v).ravel() / 2)
    assert np.allclose(g.levels[3], np.einsum("i,j,k->ijk", v, v, v).ravel() / 6)
    A = np.array([[0.0, 1.0], [-2.0, 0.5]])
    h = ta.tensor_exp(T(2, 5, (np.zeros(1), np.zeros(2), A.ravel(), np.zeros(8), np.zeros(16), np.zeros(32))))
    assert np.allclose(h.levels[2], A.ravel())
    assert np.allclose(h.levels[3], 0)
    assert np.allclose(h.levels[4], np.kron(A.ravel(), A.ravel()) / 2)
    with pytest.raises(InputError):
        ta.tensor_exp(T.unit(2, 2))


def test_log_examples():
    assert ta.tensor_log(T.unit(2, 3)).allclose(T.zero(2, 3))
    v = np.array([0.7, 0.1, -0.4])
    assert ta.tensor_log(ta.tensor_exp(_vec(v, 4))).allclose(_vec(v, 4), atol=1e-14)
    a, b = np.array([1.0, 0.5]), np.array([-0.3, 2.0])
    g = ta.tensor_exp(T.from_vector(a, 2)) * ta.tensor_exp(T.from_vector(b, 2))
    log = ta.tensor_log(g)
    assert np.allclose(log.levels[2], 0.5 * (np.outer(a, b) - np.outer(b, a)).ravel())
    with pytest.raises(InputError):
        ta.tensor_log(T.zero(2, 2))


def _vec(v, N):
    """Lie element with only a level-1 part (scalar part 0)."""
    d = len(v)
    return T(d, N, (np.zeros(1), np.asarray(v, float)) + tuple(np.zeros(d**k) for k in range(2, N + 1)))


def test_shuffle_examples():
    assert dict(ta.shuffle((1, 2), (3,))) == {(1, 2, 3): 1, (1, 3, 2): 1, (3, 1, 2): 1}
    assert dict(ta.shuffle((2, 1), ())) == {(2, 1): 1}
    assert dict(ta.shuffle((1,), (1,))) == {(1, 1): 2}


@given(st.lists(st.integers(1, 3), max_size=3), st.lists(st.integers(1, 3), max_size=3))
def test_shuffle_matches_brute_force(u, v):
    assert dict(ta.shuffle(u, v)) == brute_shuffle(tuple(u), tuple(v))


@given(st.lists(st.integers(1, 2), max_size=2), st.lists(st.integers(1, 2), max_size=2), st.lists(st.integers(1, 2), max_size=2))
def test_shuffle_commutative_associative(u, v, w):
    assert dict(ta.shuffle(u, v)) == dict(ta.shuffle(v, u))
    left, right = {}, {}
    for x, c in ta.shuffle(u, v).items():
        for y, e in ta.shuffle(x, w).items():
            left[y] = left.get(y, 0) + c * e
    for x, c in ta.shuffle(v, w).items():
        for y, e in ta.shuffle(u, x).items():
            right[y] = right.get(y, 0) + c * e
    assert left == right
    assert all(isinstance(c, int) for c in left.values())


def test_pairing_examples():
    assert ta.pairing(T.unit(2, 2), ()) == 1.0
    assert ta.pairing(ta.tensor_exp(T.from_vector([1.0, 0.0], 3)), (1, 1)) == pytest.approx(0.5)
    with pytest.raises(InputError):
        ta.pairing(T.unit(2, 2), (1, 1, 1))


@given(seeds, dims, levels)
def test_pairing_of_product_is_deconcatenation(seed, d, N):
    rng = np.random.default_rng(seed)
    a, b = rand_tensor(rng, d, N, 1.0), rand_tensor(rng, d, N, 0.7)
    prod = a * b
    for k in range(N + 1):
        for w in ta.words(d, k):
            split = sum(ta.pairing(a, w[:i]) * ta.pairing(b, w[i:]) for i in range(k + 1))
            assert ta.pairing(prod, w) == pytest.approx(split, abs=1e-12)


@given(seeds, st.integers(1, 4), st.integers(1, 5))
def test_associativity(seed, d, N):
    if d**N > 300:
        N = 2
    rng = np.random.default_rng(seed)
    a, b, c = (rand_tensor(rng, d, N, 1.0, 0.5) for _ in range(3))
    assert ((a * b) * c).distance(a * (b * c)) <= 1e-12


@given(seeds, dims, levels)
def test_exp_log_inverse(seed, d, N):
    rng = np.random.default_rng(seed)
    x = rand_tensor(rng, d, N, 0.0, 0.5)
    back = ta.tensor_log(ta.tensor_exp(x))
    assert back.distance(x) <= 1e-12 * max(1.0, float(np.max(np.abs(x.flat()))))


@given(seeds, dims, levels)
def test_grouplike_closure(seed, d, N):
    rng = np.random.default_rng(seed)
    g, h = rand_group(rng, d, N), rand_group(rng, d, N)
    assert ta.is_grouplike(g * h, 1e-10)[0]
    inv = ta.group_inverse(g)
    assert ta.is_grouplike(inv, 1e-10)[0]
    assert (g * inv).distance(T.unit(d, N)) <= 1e-12


@given(seeds, dims, levels)
def test_pairing_linear(seed, d, N):
    rng = np.random.default_rng(seed)
    a, b = rand_tensor(rng, d, N), rand_tensor(rng, d, N)
    w = tuple(rng.integers(1, d + 1, size=N))
    assert ta.pairing(2.5 * a + b, w) == pytest.approx(2.5 * ta.pairing(a, w) + ta.pairing(b, w))


def test_grouplike_examples():
    assert ta.is_grouplike(T.unit(2, 3)) == (True, 0.0)
    ok, defect = ta.is_grouplike(ta.tensor_exp(T.from_vector([0.4, -1.0], 4)))
    assert ok and defect <= 1e-12
    bad = T(2, 2, (np.ones(1), np.zeros(2), np.array([0.0, 1.0, 0.0, 0.0])))
    assert not ta.is_grouplike(bad)[0]


def test_inverse_examples():
    assert ta.group_inverse(T.unit(2, 3)).allclose(T.unit(2, 3))
    v = np.array([0.3, 0.9])
    assert ta.group_inverse(ta.tensor_exp(T.from_vector(v, 4))).allclose(ta.tensor_exp(T.from_vector(-v, 4)), atol=1e-14)
    with pytest.raises(InputError):
        ta.group_inverse(T.zero(2, 2))


def test_errors_and_encoding():
    with pytest.raises(DimensionMismatch):
        T.unit(2, 2) * T.unit(3, 2)
    with pytest.raises(LevelCapError):
        ta.check_level(2, 11)
    assert ta.parse_word("1,12,3") == (1, 12, 3)
    assert ta.format_word((10, 2)) == "10,2"
    assert ta.parse_word("") == ()
    with pytest.raises(InputError):
        ta.parse_word("1;2")
    assert ta.word_index((2, 1), 3) == 3


def test_exp_series_coefficient():
    v = [0.5, 2.0]
    g = ta.tensor_exp(T.from_vector(v, 3))
    assert ta.exp_series_coefficient(v, (1, 2, 2)) == pytest.approx(ta.pairing(g, (1, 2, 2)))
    assert ta.exp_series_coefficient(v, (2, 2)) == pytest.approx(4.0 / math.factorial(2))
