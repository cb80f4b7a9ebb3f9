from collections import defaultdict

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from roughsig import tensor_algebra as ta
from roughsig.errors import InputError, LevelCapError
from roughsig.path_gen import GenSpec, ensemble
from roughsig.pvar_sewing import PathSamples
from roughsig.signature import signature
from roughsig.tensor_algebra import TruncatedTensor as T
from roughsig.branched_hopf import (
    UNIT,
    Character,
    ForestSum,
    admissible_cuts,
    branched_chen_defect,
    branched_lift_bv,
    branched_pvar,
    ck_coproduct,
    embed_tensor_to_gl,
    encode_forest,
    encode_tree,
    enumerate_forests,
    enumerate_trees,
    forest_table,
    gl_inverse,
    gl_product,
    ito_branched_bm,
    ladder,
    leaf,
    linear_extensions,
    make_forest,
    make_tree,
    parse_forest,
    parse_tree,
    tree_size,
)


def random_bv(rng, n, d):
    return PathSamples.uniform(np.vstack([np.zeros(d), rng.standard_normal((n, d)).cumsum(0) * 0.4]))


def random_functional(rng, d, N):
    data = rng.standard_normal(len(forest_table(d, N).forests)) * 0.5
    data[0] = 1.0
    return Character(d, N, data)


def test_tree_counts():
    assert [sum(1 for t in enumerate_trees(1, 5) if tree_size(t) == k) for k in range(1, 6)] == [1, 1, 2, 4, 9]
    assert sum(1 for t in enumerate_trees(3, 2) if tree_size(t) == 2) == 9
    sizes = [sum(1 for f in enumerate_forests(1, 4) if sum(tree_size(t) for t in f) == k) for k in range(5)]
    assert sizes == [1, 1, 2, 4, 9]
    assert enumerate_forests(2, 3)[0] == UNIT
    with pytest.raises(LevelCapError):
        enumerate_trees(2, 7)


def test_encoding_round_trip():
    for t in enumerate_trees(2, 5):
        assert parse_tree(encode_tree(t)) == t
    f = make_forest([leaf(2), ladder(1, 2), leaf(1)])
    assert parse_forest(encode_forest(f)) == f
    assert encode_tree(make_tree(1, [leaf(3), make_tree(2, [leaf(1)])])) == "1(2(1),3)"
    assert parse_forest("") == UNIT
    for bad in ("1(", "(1)", "1(2,)", "1)2", "a"):
        with pytest.raises(InputError):
            parse_tree(bad)


def test_coproduct_examples():
    one = leaf(1)
    assert ck_coproduct(one) == ForestSum({((one,), UNIT): 1, (UNIT, (one,)): 1})
    t = ladder(1, 2)
    assert ck_coproduct(t) == ForestSum({((t,), UNIT): 1, (UNIT, (t,)): 1, ((one,), (leaf(2),)): 1})
    cherry = make_tree(3, [leaf(1), leaf(2)])
    cp = ck_coproduct(cherry)
    assert cp[((leaf(1), leaf(2)), (leaf(3),))] == 1
    assert cp[((leaf(1),), (ladder(2, 3),))] == 1
    assert len(cp) == 5
    assert ck_coproduct(UNIT) == ForestSum({(UNIT, UNIT): 1})


def test_coproduct_matches_cut_enumeration():
    for t in enumerate_trees(2, 5):
        assert ck_coproduct(t) == admissible_cuts(t)


def test_counit_and_coassociativity():
    for t in enumerate_trees(2, 4):
        cp = ck_coproduct(t)
        assert {k: v for k, v in cp.items() if k[0] == UNIT} == {(UNIT, (t,)): 1}
        assert {k: v for k, v in cp.items() if k[1] == UNIT} == {((t,), UNIT): 1}
        left, right = defaultdict(int), defaultdict(int)
        for (a, b), c in cp.items():
            for (a1, a2), e in ck_coproduct(a).items():
                left[(a1, a2, b)] += c * e
            for (b1, b2), e in ck_coproduct(b).items():
                right[(a, b1, b2)] += c * e
        assert dict(left) == dict(right)


def test_coproduct_is_multiplicative():
    f = make_forest([ladder(1, 2), leaf(1)])
    prod = defaultdict(int)
    for (a, b), c in ck_coproduct(ladder(1, 2)).items():
        for (u, v), e in ck_coproduct(leaf(1)).items():
            prod[(make_forest(a + u), make_forest(b + v))] += c * e
    assert ck_coproduct(f) == ForestSum(dict(prod))


def test_gl_product_on_single_vertices_adds():
    rng = np.random.default_rng(0)
    a, b = random_functional(rng, 2, 3), random_functional(rng, 2, 3)
    ab = gl_product(a, b)
    for i in (1, 2):
        assert ab[leaf(i)] == pytest.approx(a[leaf(i)] + b[leaf(i)])
    t = ladder(1, 2)
    assert ab[t] == pytest.approx(a[t] + b[t] + a[leaf(1)] * b[leaf(2)])
    e = Character.unit(2, 3)
    assert gl_product(a, e).distance(a) == 0.0 and gl_product(e, a).distance(a) == 0.0


@given(st.integers(0, 2**32 - 1), st.integers(1, 2), st.integers(1, 4))
def test_gl_associative_and_inverse(seed, d, N):
    rng = np.random.default_rng(seed)
    a, b, c = (random_functional(rng, d, N) for _ in range(3))
    assert gl_product(gl_product(a, b), c).distance(gl_product(a, gl_product(b, c))) <= 1e-10
    inv = gl_inverse(a)
    assert gl_product(a, inv).distance(Character.unit(d, N)) <= 1e-10
    assert gl_product(inv, a).distance(Character.unit(d, N)) <= 1e-10


@given(st.integers(0, 2**32 - 1))
def test_characters_closed_under_product_and_inverse(seed):
    rng = np.random.default_rng(seed)
    table = forest_table(2, 4)
    vals = lambda: {t: rng.standard_normal() for t in table.trees}
    a, b = Character.from_tree_values(2, 4, vals()), Character.from_tree_values(2, 4, vals())
    assert a.is_character() and b.is_character()
    assert gl_product(a, b).is_character(1e-9)
    assert gl_inverse(a).is_character(1e-9)
    assert not random_functional(rng, 2, 4).is_character()


def test_gl_inverse_requires_unit_value():
    data = np.zeros(len(forest_table(1, 2).forests))
    with pytest.raises(InputError):
        gl_inverse(Character(1, 2, data))


def test_linear_extensions_examples():
    assert dict(linear_extensions((ladder(1, 2),))) == {(1, 2): 1}
    assert dict(linear_extensions((leaf(1), leaf(2)))) == {(1, 2): 1, (2, 1): 1}
    assert dict(linear_extensions((leaf(1), leaf(1)))) == {(1, 1): 2}
    cherry = make_tree(3, [leaf(1), leaf(2)])
    assert dict(linear_extensions((cherry,))) == {(1, 2, 3): 1, (2, 1, 3): 1}


def test_embedding_examples_and_homomorphism():
    rng = np.random.default_rng(2)
    g = ta.tensor_exp(T.from_vector(rng.standard_normal(2), 4)) * ta.tensor_exp(T.from_vector(rng.standard_normal(2), 4))
    h = ta.tensor_exp(T.from_vector(rng.standard_normal(2), 4))
    Eg = embed_tensor_to_gl(g)
    assert Eg[ladder(1, 2)] == pytest.approx(g[(1, 2)])
    assert Eg[make_tree(2, [leaf(1), leaf(1)])] == pytest.approx(2 * g[(1, 1, 2)])
    assert Eg.is_character(1e-10)
    assert gl_product(Eg, embed_tensor_to_gl(h)).distance(embed_tensor_to_gl(g * h)) <= 1e-10
    with pytest.raises(InputError):
        embed_tensor_to_gl(g, 5)


def test_branched_lift_of_smooth_path_matches_embedded_signature():
    """For a fine piecewise-linear path the branched lift tends to the embedded signature."""
    t = np.linspace(0, 1, 4001)
    x = PathSamples(t, np.column_stack([np.sin(2 * t), t**2]))
    emb = embed_tensor_to_gl(signature(x, 3).tensor)
    assert branched_lift_bv(x, 3).endpoint.distance(emb) < 2e-3


def test_branched_lift_ladder_is_left_point_integral():
    rng = np.random.default_rng(5)
    x = random_bv(rng, 30, 2)
    X = branched_lift_bv(x, 3)
    dx = np.diff(x.values, axis=0)
    for i in (1, 2):
        for j in (1, 2):
            left = np.concatenate([[0.0], np.cumsum((x.values[:-1, i - 1] - x.values[0, i - 1]) * dx[:, j - 1])])
            assert np.allclose(X[ladder(i, j)], left)
    assert np.allclose(X[leaf(1)], x.values[:, 0] - x.values[0, 0])
    assert X.endpoint.is_character(1e-10)
    with pytest.raises(LevelCapError):
        branched_lift_bv(x, 6)


def test_branched_chen_and_concatenation():
    rng = np.random.default_rng(6)
    x, y = random_bv(rng, 12, 2), random_bv(rng, 9, 2)
    X = branched_lift_bv(x.concat(y), 4)
    assert branched_chen_defect(X) <= 1e-10
    split = gl_product(branched_lift_bv(x, 4).endpoint, branched_lift_bv(y, 4).endpoint)
    assert split.distance(X.endpoint) <= 1e-10


def test_branched_pvar_single_vertex_is_total_variation():
    rng = np.random.default_rng(7)
    x = random_bv(rng, 20, 2)
    out = branched_pvar(branched_lift_bv(x, 2), 1.0)
    assert set(out) == {"1", "2"}
    for i in (1, 2):
        assert out[str(i)] == pytest.approx(np.sum(np.abs(np.diff(x.values[:, i - 1]))))
    assert set(branched_pvar(branched_lift_bv(x, 2), 2.2)) == {encode_tree(t) for t in enumerate_trees(2, 2)}
    with pytest.raises(InputError):
        branched_pvar(branched_lift_bv(x, 2), 0.5)


def test_ito_branched_defect_is_quadratic_covariation():
    paths = ensemble(GenSpec(d=2, n=200, T=1.0, seed=77), 1500)
    rep = ito_branched_bm(paths)
    assert rep.t == pytest.approx(1.0)
    mean, se = rep.mean(), rep.stderr()
    assert np.all(np.abs(mean - np.eye(2)) <= 4 * se)
    # pathwise it is exactly the sum of squared increments
    w = paths[0]
    dx = np.diff(w.values, axis=0)
    assert np.allclose(ito_branched_bm(w).defect, dx.T @ dx)
    half = ito_branched_bm(w, 0.5)
    assert half.t == pytest.approx(0.5)
