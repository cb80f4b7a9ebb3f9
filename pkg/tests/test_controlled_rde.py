import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from roughsig.errors import DimensionMismatch, InputError
from roughsig.path_gen import GenSpec, ensemble
from roughsig.pvar_sewing import PathSamples, p_variation
from roughsig.rough_path import brownian_lift, lift_piecewise_linear
from roughsig.controlled_rde import (
    CallableField,
    ControlledPath,
    LinearField,
    PolynomialField,
    RDEBlowUp,
    controlled_norm,
    controlled_norm_blocked,
    field_from_json,
    ito_correction,
    ito_stratonovich_experiment,
    rough_integral,
    solve_rde_euler,
    solve_rde_picard,
    zero_field,
)

J = np.array([[0.0, -1.0], [1.0, 0.0]])


def quadratic_field():
    """f_1(y) = (y2^2, y1), f_2(y) = (y1 y2, 1)."""
    M = lambda rows: np.array(rows, dtype=float)
    return PolynomialField([
        ([0, 2], M([[1, 0], [0, 0]])),
        ([1, 0], M([[0, 0], [1, 0]])),
        ([1, 1], M([[0, 1], [0, 0]])),
        ([0, 0], M([[0, 0], [0, 1]])),
    ])


def quadratic_func(y):
    return np.array([[y[1] ** 2, y[0] * y[1]], [y[0], 1.0]])


def fd_directional(g, y, v, h=1e-5):
    return (g(y + h * v) - g(y - h * v)) / (2 * h)


def smooth_driver(n, T=1.0, d=2):
    t = np.linspace(0, T, n + 1)
    cols = [np.sin(2 * t), np.cos(3 * t) - 1, t**2][:d]
    return PathSamples(t, np.column_stack(cols))


def test_polynomial_jets_match_finite_differences():
    f = quadratic_field()
    y = np.array([0.7, -0.4])
    G = f.euler_coefficients(y, 3)
    fi = lambda z, i: quadratic_func(z)[:, i]
    assert np.allclose(G[1], quadratic_func(y).T)
    for i in range(2):
        for j in range(2):
            g2 = fd_directional(lambda z: fi(z, j), y, fi(y, i))
            assert np.allclose(G[2][2 * i + j], g2, atol=1e-8)
            for k in range(2):
                gjk = lambda z: fd_directional(lambda u: fi(u, k), z, fi(z, j), h=1e-4)
                g3 = fd_directional(gjk, y, fi(y, i), h=1e-4)
                assert np.allclose(G[3][4 * i + 2 * j + k], g3, atol=1e-5)


def test_callable_field_agrees_with_polynomial():
    f, c = quadratic_field(), CallableField(quadratic_func, 2, 2)
    y = np.array([[0.3, 1.1], [-0.5, 0.2]])
    for a, b in zip(f.euler_coefficients(y, 2), c.euler_coefficients(y, 2)):
        assert np.allclose(a, b, atol=1e-6)
    with pytest.raises(InputError):
        c.derivatives(y[0], 3)


def test_linear_field_matches_polynomial_form():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((2, 3, 3))
    lin = LinearField(A)
    terms = [(np.eye(3, dtype=int)[k], A[:, :, k].T) for k in range(3)]
    poly = PolynomialField(terms)
    y = rng.standard_normal((4, 3))
    for a, b in zip(lin.euler_coefficients(y, 4), poly.euler_coefficients(y, 4)):
        assert np.allclose(a, b, atol=1e-12)
    # word matrices compose right to left: g_(i,j) = A_j A_i y
    M = lin.word_matrices(2)
    assert np.allclose(M[2][1 * 2 + 0], A[0] @ A[1])


def test_field_from_json():
    lin = field_from_json({"kind": "linear", "matrices": [J.tolist()]})
    assert isinstance(lin, LinearField) and lin.e == 2 and lin.d == 1
    poly = field_from_json({"kind": "polynomial", "coeffs": [{"powers": [2], "matrix": [[1.0]]}]})
    assert poly(np.array([3.0]))[0, 0] == pytest.approx(9.0)
    for bad in ({"kind": "tanh"}, {"kind": "linear"}, {"kind": "polynomial", "coeffs": [{"powers": [-1], "matrix": [[1.0]]}]}):
        with pytest.raises(InputError):
            field_from_json(bad)


def test_zero_field_gives_constant_solution():
    X = lift_piecewise_linear(smooth_driver(50), 3)
    y0 = np.array([1.5, -2.0, 0.25])
    sol = solve_rde_euler(zero_field(3, 2), X, y0)
    assert np.all(sol.values == y0)
    pic = solve_rde_picard(zero_field(3, 2), X, y0)
    assert np.allclose(pic.values, y0)


def test_linear_rde_along_straight_line_is_matrix_exponential():
    A = np.array([[0.1, -1.0], [0.8, -0.2]])
    y0 = np.array([1.0, 0.5])
    T = 2.0
    exact = expm(A * T) @ y0
    errs = []
    for n in (20, 40, 80):
        t = np.linspace(0, T, n + 1)
        X = lift_piecewise_linear(PathSamples(t, t[:, None]), 3)
        errs.append(np.linalg.norm(solve_rde_euler(LinearField([A]), X, y0).terminal - exact))
    assert errs[-1] < 1e-4
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(rates - 3) < 0.2)


def test_euler_order_on_smooth_nonlinear_driver():
    f = quadratic_field()
    y0 = np.array([0.2, 0.1])
    ref = solve_rde_euler(f, lift_piecewise_linear(smooth_driver(4096, 0.5), 2), y0).terminal
    errs = []
    for n in (64, 128, 256):
        X = lift_piecewise_linear(smooth_driver(n, 0.5), 2)
        errs.append(np.linalg.norm(solve_rde_euler(f, X, y0).terminal - ref))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.8)


def test_picard_matches_euler_on_fine_grid():
    f = quadratic_field()
    y0 = np.array([0.2, 0.1])
    X = lift_piecewise_linear(smooth_driver(200, 0.5), 2)
    pic = solve_rde_picard(f, X, y0)
    eul = solve_rde_euler(f, X, y0)
    assert pic.distances[-1] <= 1e-10
    assert pic.iterations == len(pic.distances)
    assert np.max(np.abs(pic.values - eul.values)) < 1e-3


def test_solver_input_checks():
    X = lift_piecewise_linear(smooth_driver(10), 2)
    f = quadratic_field()
    with pytest.raises(InputError):
        solve_rde_euler(f, X, [0.0, 0.0], 3)
    with pytest.raises(InputError):
        solve_rde_euler(CallableField(quadratic_func, 2, 2, order=1), X, [0.0, 0.0], 2)
    with pytest.raises(DimensionMismatch):
        solve_rde_euler(f, X, [0.0, 0.0, 0.0])
    with pytest.raises(DimensionMismatch):
        solve_rde_euler(LinearField([J]), X, [1.0, 0.0])


def test_blow_up_reports_partial_solution():
    f = PolynomialField([([2], np.array([[1.0]]))])
    t = np.linspace(0, 2.0, 201)
    X = lift_piecewise_linear(PathSamples(t, t[:, None]), 1)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(RDEBlowUp) as info:
            solve_rde_euler(f, X, [1.0], 1)
    err = info.value
    assert 100 <= err.step < 200
    assert np.all(np.isfinite(err.partial.values))
    assert err.partial.values.shape[0] == err.step + 1


# ---------------------------------------------------------------------------
# controlled paths and their norms


def random_controlled(rng, n, d, N, E=2):
    X = lift_piecewise_linear(PathSamples.uniform(rng.standard_normal((n, d)).cumsum(0) * 0.3), N)
    comps = tuple(rng.standard_normal((n, E, d**l)) for l in range(N))
    return ControlledPath(X.times, comps, X)


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.sampled_from([1.0, 2.0, 2.5, 3.5]))
def test_lowrank_norm_matches_blocked(seed, N, p):
    rng = np.random.default_rng(seed)
    Y = random_controlled(rng, 9, 2, N)
    assert controlled_norm(Y, p) == pytest.approx(controlled_norm_blocked(Y, p), rel=1e-10)


def test_controlled_norm_examples():
    rng = np.random.default_rng(3)
    Y = random_controlled(rng, 12, 2, 2)
    zero = Y - Y
    assert controlled_norm(zero, 2.5) == 0.0
    # one component: |Y_0| + p-variation of the path itself
    vals = rng.standard_normal((12, 3))
    one = ControlledPath(Y.times, (vals[:, :, None],), Y.X)
    expected = np.linalg.norm(vals[0]) + p_variation(PathSamples(Y.times, vals), 1.7)
    assert controlled_norm(one, 1.7) == pytest.approx(expected)
    with pytest.raises(InputError):
        controlled_norm(Y, 0.9)


def test_rough_path_levels_have_zero_remainders():
    rng = np.random.default_rng(8)
    X = lift_piecewise_linear(PathSamples.uniform(rng.standard_normal((15, 2)).cumsum(0)), 3)
    for n in (1, 2):
        Y = ControlledPath.from_rough_path_level(X, n)
        start = sum(np.linalg.norm(c[0]) for c in Y.components)
        assert controlled_norm(Y, 3.0) == pytest.approx(start, abs=1e-9)


def test_rough_integral_examples():
    rng = np.random.default_rng(9)
    X = lift_piecewise_linear(PathSamples.uniform(rng.standard_normal((20, 2)).cumsum(0)), 2)
    n, d = X.n_points, 2
    ident = [np.broadcast_to(np.eye(d), (n, d, d)).copy(), np.zeros((n, d, d * d))]
    I = rough_integral(ident, X)
    assert np.allclose(I.value, X.levels[1] - X.levels[1][0])
    assert np.array_equal(I.components[1], ident[0])
    # int X^i dX^j with Gubinelli derivative delta: reproduces level 2 exactly
    Z0 = np.einsum("ti,jk->tijk", X.levels[1], np.eye(d)).reshape(n, d * d, d)
    Z1 = np.einsum("ia,jk->ijak", np.eye(d), np.eye(d)).reshape(d * d, d * d)
    I2 = rough_integral([Z0, np.broadcast_to(Z1, (n, d * d, d * d)).copy()], X)
    assert np.allclose(I2.value, X.levels[2], atol=1e-12)
    with pytest.raises(DimensionMismatch):
        rough_integral([np.zeros((n, 1, 3))], X)


# ---------------------------------------------------------------------------
# geometric structure and Ito/Stratonovich


def test_rotation_conserves_norm_only_for_geometric_lift():
    f = LinearField([J, 2 * J])
    y0 = np.array([1.0, 0.0])
    X = lift_piecewise_linear(smooth_driver(4000, 1.0), 3)
    sol = solve_rde_euler(f, X, y0)
    assert np.max(np.abs(np.linalg.norm(sol.values, axis=1) - 1.0)) <= 1e-8
    w = ensemble(GenSpec(d=2, n=1000, seed=4), 1)[0]
    ito = solve_rde_euler(f, brownian_lift(w, "ito"), y0, 2)
    assert abs(np.linalg.norm(ito.terminal) - 1.0) > 0.1


def test_ito_correction_formula():
    f = quadratic_field()
    y = np.array([0.4, -1.2])
    G2 = f.euler_coefficients(y, 2)[2]
    assert np.allclose(ito_correction(f, y), 0.5 * (G2[0] + G2[3]))
    assert np.allclose(ito_correction(zero_field(2, 2), y), 0.0)


def test_ito_strat_additive_noise_agree():
    f = PolynomialField([([0, 0], np.array([[1.0, 0.5], [0.0, 2.0]]))])
    paths = ensemble(GenSpec(d=2, n=100, seed=12), 5)
    rep = ito_stratonovich_experiment(f, paths, [0.0, 1.0])
    assert np.allclose(rep.difference, 0.0, atol=1e-12)
    assert np.allclose(rep.accumulated_correction, 0.0)


def test_ito_strat_geometric_brownian_motion():
    f = LinearField([np.array([[1.0]])])
    paths = ensemble(GenSpec(d=1, n=2000, T=1.0, seed=21), 20)
    rep = ito_stratonovich_experiment(f, paths, [1.0])
    logdiff = np.log(rep.strat_terminal[:, 0]) - np.log(rep.ito_terminal[:, 0])
    assert np.allclose(logdiff, 0.5, atol=0.08)
    W = np.array([w.values[-1, 0] for w in paths])
    assert np.allclose(rep.strat_terminal[:, 0], np.exp(W), rtol=5e-3)


def test_ito_plus_drift_approaches_stratonovich():
    """The gap is driven by sum(dW^2 - dt), so it shrinks like n^(-1/2)."""
    f = LinearField([np.array([[1.0]])])
    rel = []
    for n in (250, 4000):
        rep = ito_stratonovich_experiment(f, ensemble(GenSpec(d=1, n=n, seed=22), 30), [1.0])
        rel.append(np.mean(rep.corrected_gap / np.abs(rep.strat_terminal[:, 0])))
    assert rel[1] < rel[0] / 2.5
