import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from asymp.games import (InvalidInputError, MatrixGame, as_simplex_point, best_response_value_x,
                         best_response_value_y, nash_conv, perturbed_landscape, project_simplex,
                         spectral_norm, uniform)
from asymp.perturbation import exact_minimax

from conftest import simplex_grid

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def vectors(k):
    return arrays(np.float64, k, elements=finite)


# -- projection ----------------------------------------------------------------

@pytest.mark.parametrize("v, expected", [
    ((0.2, 0.3, 0.5), (0.2, 0.3, 0.5)),
    ((2, 0, 0), (1, 0, 0)),
    ((0.5, 0.5, 0.5), (1 / 3, 1 / 3, 1 / 3)),
])
def test_projection_examples(v, expected):
    np.testing.assert_allclose(project_simplex(v), expected, atol=1e-15)


def test_projection_against_grid():
    v = np.array([0.34, 0.1, -0.2])
    grid = simplex_grid(3, 1e-3)
    best = grid[np.argmin(np.linalg.norm(grid - v, axis=1))]
    p = project_simplex(v)
    assert np.linalg.norm(p - v) <= np.linalg.norm(best - v) + 1e-12
    np.testing.assert_allclose(p, best, atol=2e-3)
    # hand KKT: all three coordinates stay positive, shift by (0.24 - 1) / 3
    np.testing.assert_allclose(p, [0.34 + 0.76 / 3, 0.1 + 0.76 / 3, -0.2 + 0.76 / 3], atol=1e-15)


@pytest.mark.parametrize("bad", [[np.nan, 0.0], [np.inf, 1.0], [0.0, -np.inf]])
def test_projection_rejects_non_finite(bad):
    with pytest.raises(InvalidInputError):
        project_simplex(bad)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8).flatmap(vectors))
def test_projection_is_feasible_and_idempotent(v):
    p = project_simplex(v)
    assert np.all(p >= 0)
    assert abs(p.sum() - 1) <= 1e-9
    np.testing.assert_array_equal(project_simplex(p), p)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8).flatmap(lambda k: st.tuples(vectors(k), vectors(k))))
def test_projection_is_nonexpansive(uv):
    u, v = uv
    assert np.linalg.norm(project_simplex(u) - project_simplex(v)) <= np.linalg.norm(u - v) + 1e-12


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6).flatmap(vectors), st.integers(0, 2 ** 32 - 1))
def test_projection_variational_inequality(v, seed):
    # p is the projection iff <v - p, q - p> <= 0 for every feasible q
    p = project_simplex(v)
    q = np.random.default_rng(seed).dirichlet(np.ones(len(v)), size=50)
    assert np.all((q - p) @ (v - p) <= 1e-9)


def test_as_simplex_point_validation():
    as_simplex_point([0.5, 0.5])
    with pytest.raises(InvalidInputError):
        as_simplex_point([0.6, 0.6])
    with pytest.raises(InvalidInputError):
        as_simplex_point([1.1, -0.1])
    p = as_simplex_point([0.25, 0.75])
    with pytest.raises(ValueError):
        p[0] = 1.0


# -- matrix games and norms ---------------------------------------------------------

def test_matrix_game_validation():
    with pytest.raises(InvalidInputError):
        MatrixGame(np.zeros((0, 2)))
    with pytest.raises(InvalidInputError):
        MatrixGame(np.array([[1.0, np.nan]]))
    g = MatrixGame(np.array([[1.0, 2.0, 3.0]]))
    assert g.shape == (1, 3) and g.diameter == 2.0


@pytest.mark.parametrize("A, expected", [
    (np.eye(2), 1.0),
    (np.array([[0.0, 1.0], [-1.0, 0.0]]), 1.0),
    (np.zeros((3, 2)), 0.0),
    # all-ones start is orthogonal to the top singular vector here
    (np.array([[1.0, -1.0], [-1.0, 1.0]]), 2.0),
])
def test_spectral_norm_examples(A, expected):
    assert spectral_norm(A) == pytest.approx(expected, rel=1e-10, abs=0)


def test_spectral_norm_brps_characteristic_polynomial(brps):
    # characteristic polynomial of the integer matrix A^T A in exact arithmetic:
    # lambda^3 - c1 lambda^2 + c2 lambda - c3
    M = [[sum(brps.exact[k][i] * brps.exact[k][j] for k in range(3)) for j in range(3)]
         for i in range(3)]
    c1 = sum(M[i][i] for i in range(3))
    c2 = sum(M[i][i] * M[j][j] - M[i][j] * M[j][i] for i in range(3) for j in range(i + 1, 3))
    c3 = round(np.linalg.det(np.array(M, dtype=float)))
    assert c3 == 0  # A is antisymmetric and singular, so one root is zero
    # remaining roots solve lambda^2 - c1 lambda + c2 = 0
    lam = (c1 + np.sqrt(float(c1 * c1 - 4 * c2))) / 2
    assert brps.spectral_norm == pytest.approx(np.sqrt(lam), rel=1e-10)
    assert lam == 11


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2 ** 32 - 1),
       st.floats(-50, 50).filter(lambda c: abs(c) > 1e-3))
def test_spectral_norm_matches_svd_and_scales(m, n, seed, c):
    A = np.random.default_rng(seed).normal(size=(m, n))
    s = spectral_norm(A)
    assert s == pytest.approx(np.linalg.svd(A, compute_uv=False)[0], rel=1e-10)
    assert spectral_norm(c * A) == pytest.approx(abs(c) * s, rel=1e-10)


# -- NashConv and best responses ---------------------------------------------------

def test_nash_conv_examples(bmp, brps):
    assert nash_conv(bmp, [5 / 8, 3 / 8], [5 / 8, 3 / 8]) == pytest.approx(0.0, abs=1e-15)
    assert nash_conv(brps, uniform(3), uniform(3)) == pytest.approx(4 / 3, abs=1e-15)
    # direct arithmetic: x^T A at uniform is (2/3, 0, -2/3), A y is (-2/3, 0, 2/3)
    assert best_response_value_x(brps, uniform(3)) == (pytest.approx(2 / 3), 0)
    assert best_response_value_y(brps, uniform(3)) == (pytest.approx(-2 / 3), 0)


def test_nash_conv_dimension_mismatch(brps):
    with pytest.raises(InvalidInputError):
        nash_conv(brps, [0.5, 0.5], uniform(3))


def test_nash_conv_zero_at_exact_minimax(bmp, brps, mne):
    for g in (bmp, brps, mne):
        eq = exact_minimax(g)
        assert nash_conv(g, eq.x_star, eq.y_star) <= 1e-9


def test_best_response_examples(bmp, brps):
    v, j = best_response_value_x(brps, [0.2, 0.6, 0.2])
    assert v == pytest.approx(0.0, abs=1e-15)
    assert j == 0  # all columns tie; lowest index wins
    assert best_response_value_x(brps, [1, 0, 0]) == (1.0, 1)
    assert best_response_value_x(bmp, [5 / 8, 3 / 8])[0] == pytest.approx(-1 / 24, abs=1e-15)


def test_perturbed_landscape_examples(bmp):
    x = [5 / 8, 3 / 8]
    assert perturbed_landscape(bmp, x, 0.0) == best_response_value_x(bmp, x)[0]
    assert perturbed_landscape(bmp, x, 2.0) == pytest.approx(-1 / 24 + 17 / 32, abs=1e-15)
    with pytest.raises(InvalidInputError):
        perturbed_landscape(bmp, x, -1.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_perturbed_landscape_linear_in_mu(seed):
    g = MatrixGame(np.random.default_rng(seed).normal(size=(3, 4)))
    x = np.random.default_rng(seed + 1).dirichlet(np.ones(3))
    diff = perturbed_landscape(g, x, 2.0) - perturbed_landscape(g, x, 1.0)
    assert diff == pytest.approx(0.5 * x @ x, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2 ** 32 - 1))
def test_nash_conv_nonnegative(m, n, seed):
    rng = np.random.default_rng(seed)
    g = MatrixGame(rng.normal(size=(m, n)))
    assert nash_conv(g, rng.dirichlet(np.ones(m)), rng.dirichlet(np.ones(n))) >= 0.0


def test_nash_conv_zero_iff_equilibrium(bmp, brps):
    # on games with a unique equilibrium every other grid profile has a positive gap
    for g in (bmp, brps):
        eq = exact_minimax(g)
        pts = simplex_grid(g.m, 0.05)
        for x in pts:
            for y in pts[::7]:
                gap = nash_conv(g, x, y)
                near = np.allclose(x, eq.x_star, atol=1e-9) and np.allclose(y, eq.y_star, atol=1e-9)
                assert (gap <= 1e-12) == near
