"""Equilibria of original and quadratically perturbed matrix games.

The perturbed game is::

    min_x max_y  x^T A y + (mu_x / 2) ||x||^2 - (mu_y / 2) ||y||^2

with the five modes of :class:`Mode` fixing which strengths are non-zero.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import _kernels
from .games import InvalidInputError, MatrixGame, best_response_value_x, nash_conv, uniform

MAX_ENUMERATION_DIM = 12
INTERIOR_ATOL = 1e-8
FORMULA_ATOL = 1e-12
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITERS = 100_000_000


class UnsupportedSizeError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    """Iteration cap reached; carries the last iterate and its residual."""

    def __init__(self, message, x, y, residual, iterations):
        super().__init__(message)
        self.x = x
        self.y = y
        self.residual = residual
        self.iterations = iterations


class Mode(enum.Enum):
    NONE = "none"
    SYMMETRIC = "symmetric"
    ASYMMETRIC_X = "asymmetric-x"
    ASYMMETRIC_Y = "asymmetric-y"
    INDEPENDENT = "independent"


@dataclass(frozen=True)
class PerturbationConfig:
    mode: Mode = Mode.NONE
    mu_x: float = 0.0
    mu_y: float = 0.0

    def __post_init__(self):
        if self.mu_x < 0 or self.mu_y < 0:
            raise InvalidInputError("perturbation strengths must be non-negative")
        ok = {
            Mode.NONE: self.mu_x == 0 and self.mu_y == 0,
            Mode.SYMMETRIC: self.mu_x == self.mu_y,
            Mode.ASYMMETRIC_X: self.mu_y == 0,
            Mode.ASYMMETRIC_Y: self.mu_x == 0,
            Mode.INDEPENDENT: True,
        }[self.mode]
        if not ok:
            raise InvalidInputError(
                f"strengths mu_x={self.mu_x}, mu_y={self.mu_y} inconsistent with mode {self.mode.value}")

    @classmethod
    def of(cls, mode: Mode | str, mu: float = 0.0, mu_y: float | None = None) -> "PerturbationConfig":
        """Build a config from a single strength, e.g. ``of("symmetric", 1.0)``."""
        mode = Mode(mode)
        if mode is Mode.NONE:
            return cls(mode)
        if mode is Mode.SYMMETRIC:
            return cls(mode, mu, mu)
        if mode is Mode.ASYMMETRIC_X:
            return cls(mode, mu, 0.0)
        if mode is Mode.ASYMMETRIC_Y:
            return cls(mode, 0.0, mu)
        return cls(mode, mu, mu if mu_y is None else mu_y)


@dataclass(frozen=True)
class EquilibriumResult:
    x_star: np.ndarray
    y_star: np.ndarray
    game_value: float
    x_support: tuple[int, ...]
    y_support: tuple[int, ...]
    residual: float = 0.0
    iterations: int = 0

    @property
    def is_interior(self) -> bool:
        return bool(np.all(self.x_star >= INTERIOR_ATOL) and np.all(self.y_star >= INTERIOR_ATOL))


@dataclass(frozen=True)
class RationalEquilibrium:
    x_star: tuple[Fraction, ...]
    y_star: tuple[Fraction, ...]
    game_value: Fraction


def _support(p, atol=INTERIOR_ATOL):
    return tuple(int(i) for i in np.flatnonzero(p >= atol))


def _bordered(M):
    """Matrix of ``[M^T p = v 1, 1^T p = 1]`` in unknowns ``(p, v)``."""
    k = M.shape[0]
    B = np.zeros((k + 1, k + 1))
    B[:k, :k] = M.T
    B[:k, k] = -1.0
    B[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    return B, rhs


def exact_minimax(game: MatrixGame, atol: float = 1e-9) -> EquilibriumResult:
    """One Nash equilibrium of the unperturbed game by support enumeration.

    Only square supports are tried: every matrix game has an optimal pair
    supported on a square submatrix whose bordered system is nonsingular.
    """
    m, n = game.shape
    if min(m, n) > MAX_ENUMERATION_DIM:
        raise UnsupportedSizeError(
            f"support enumeration limited to min(m, n) <= {MAX_ENUMERATION_DIM}, got {game.shape}")
    A = game.A
    for k in range(1, min(m, n) + 1):
        for rows in itertools.combinations(range(m), k):
            for cols in itertools.combinations(range(n), k):
                sub = A[np.ix_(rows, cols)]
                try:
                    Bx, rhs = _bordered(sub)
                    sx = np.linalg.solve(Bx, rhs)
                    By, _ = _bordered(sub.T)
                    sy = np.linalg.solve(By, rhs)
                except np.linalg.LinAlgError:
                    continue
                if not (np.all(np.isfinite(sx)) and np.all(np.isfinite(sy))):
                    continue
                if np.any(sx[:k] < -atol) or np.any(sy[:k] < -atol):
                    continue
                x = np.zeros(m)
                y = np.zeros(n)
                x[list(rows)] = np.clip(sx[:k], 0.0, None)
                y[list(cols)] = np.clip(sy[:k], 0.0, None)
                x /= x.sum()
                y /= y.sum()
                if nash_conv(game, x, y) <= atol:
                    value = float(x @ A @ y)
                    return EquilibriumResult(x, y, value, _support(x), _support(y))
    raise RuntimeError("support enumeration found no equilibrium")  # unreachable for valid games


def _solve_fractions(M, b):
    """Gauss-Jordan elimination over the rationals; ``None`` if singular."""
    k = len(M)
    aug = [list(M[i]) + [b[i]] for i in range(k)]
    for col in range(k):
        pivot = next((r for r in range(col, k) if aug[r][col] != 0), None)
        if pivot is None:
            return None
        aug[col], aug[pivot] = aug[pivot], aug[col]
        p = aug[col][col]
        aug[col] = [v / p for v in aug[col]]
        for r in range(k):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * c for a, c in zip(aug[r], aug[col])]
    return [aug[i][k] for i in range(k)]


def exact_minimax_rational(game: MatrixGame) -> RationalEquilibrium:
    """Rational equilibrium on the support found by :func:`exact_minimax`.

    The float solve locates the support; the bordered systems are then
    re-solved exactly over ``game.exact``.
    """
    if game.exact is None:
        raise PreconditionError("rational evaluation needs a game built from exact fractions")
    eq = exact_minimax(game)
    rows, cols = eq.x_support, eq.y_support
    if len(rows) != len(cols):
        raise PreconditionError("rational mode needs a square equilibrium support")
    k = len(rows)
    E = game.exact
    one, zero = Fraction(1), Fraction(0)
    # x-system: sum_i x_i E[i][j] - v = 0 for j in cols, sum_i x_i = 1
    Mx = [[E[i][j] for i in rows] + [-one] for j in cols] + [[one] * k + [zero]]
    My = [[E[i][j] for j in cols] + [-one] for i in rows] + [[one] * k + [zero]]
    rhs = [zero] * k + [one]
    sx = _solve_fractions(Mx, rhs)
    sy = _solve_fractions(My, rhs)
    if sx is None or sy is None:
        raise PreconditionError("equilibrium support system is singular in exact arithmetic")
    x = [zero] * game.m
    y = [zero] * game.n
    for idx, i in enumerate(rows):
        x[i] = sx[idx]
    for idx, j in enumerate(cols):
        y[j] = sy[idx]
    return RationalEquilibrium(tuple(x), tuple(y), sx[k])


def default_oracle_step(game: MatrixGame, cfg: PerturbationConfig) -> float:
    mu = max(cfg.mu_x, cfg.mu_y)
    return 0.9 * mu / (2.0 * (mu * mu + game.spectral_norm ** 2))


def solve_perturbed(game: MatrixGame, cfg: PerturbationConfig, tol: float = DEFAULT_TOL,
                    eta: float | None = None, max_iters: int = DEFAULT_MAX_ITERS,
                    x0=None, y0=None) -> EquilibriumResult:
    """Equilibrium of the perturbed game by alternating projected gradient steps.

    Iterates until ``||z^{t+1} - z^t|| / eta <= tol``. ``game_value`` is the
    perturbed objective at the returned profile.
    """
    if cfg.mu_x + cfg.mu_y <= 0:
        raise InvalidInputError("solve_perturbed needs mu_x + mu_y > 0")
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    eta = default_oracle_step(game, cfg) if eta is None else eta
    x0 = uniform(game.m) if x0 is None else np.asarray(x0, dtype=np.float64)
    y0 = uniform(game.n) if y0 is None else np.asarray(y0, dtype=np.float64)
    x, y, residual, iters = _kernels.fixed_point(
        game.A, x0, y0, eta, float(cfg.mu_x), float(cfg.mu_y), tol, max_iters)
    if residual > tol:
        raise ConvergenceError(
            f"no fixed point within {max_iters} iterations (residual {residual:.3e})",
            x, y, residual, iters)
    value = float(x @ game.A @ y + 0.5 * cfg.mu_x * x @ x - 0.5 * cfg.mu_y * y @ y)
    return EquilibriumResult(x, y, value, _support(x), _support(y), residual, int(iters))


def _uniform_value(game: MatrixGame) -> float:
    return float(uniform(game.m) @ game.A @ uniform(game.n))


def _require_interior(eq: EquilibriumResult):
    if not eq.is_interior:
        raise PreconditionError("critical-mu formula requires an interior equilibrium")


def _ratio(num, den):
    if abs(den) <= FORMULA_ATOL:
        raise PreconditionError("equilibrium strategy is uniform; the critical-mu formula is undefined")
    if abs(num) <= FORMULA_ATOL:
        return None
    mu = num / den
    return mu if mu > 0 else None


def critical_mu_x(game: MatrixGame, eq: EquilibriumResult) -> Optional[float]:
    """The only symmetric strength at which ``x^mu`` can equal ``x*``, if positive."""
    _require_interior(eq)
    num = _uniform_value(game) - eq.game_value
    den = float(eq.x_star @ eq.x_star) - 1.0 / game.m
    return _ratio(num, den)


def critical_mu_y(game: MatrixGame, eq: EquilibriumResult) -> Optional[float]:
    """Column-player counterpart of :func:`critical_mu_x`."""
    _require_interior(eq)
    num = eq.game_value - _uniform_value(game)
    den = float(eq.y_star @ eq.y_star) - 1.0 / game.n
    return _ratio(num, den)


def critical_mu_exact(game: MatrixGame) -> tuple[Optional[Fraction], Optional[Fraction]]:
    """Both critical strengths in rational arithmetic (``None`` when absent)."""
    req = exact_minimax_rational(game)
    if any(p == 0 for p in req.x_star + req.y_star):
        raise PreconditionError("critical-mu formula requires an interior equilibrium")
    m, n = game.m, game.n
    u = sum(sum(row) for row in game.exact) / (m * n)

    def ratio(num, den):
        if den == 0:
            raise PreconditionError("equilibrium strategy is uniform; the critical-mu formula is undefined")
        if num == 0:
            return None
        mu = num / den
        return mu if mu > 0 else None

    mx = ratio(u - req.game_value, sum(p * p for p in req.x_star) - Fraction(1, m))
    my = ratio(req.game_value - u, sum(p * p for p in req.y_star) - Fraction(1, n))
    return mx, my


@dataclass(frozen=True)
class SweepEntry:
    mu: float
    exploitability: float
    converged: bool
    residual: float


def mu_sweep(game: MatrixGame, mode: Mode | str, mu_values, tol: float = DEFAULT_TOL,
             max_iters: int = DEFAULT_MAX_ITERS) -> list[SweepEntry]:
    """Exploitability ``g(x^mu) - v*`` of the perturbed minimax strategy per strength.

    Entries whose oracle hits the iteration cap are reported with
    ``converged=False`` and the exploitability of the last iterate.
    """
    mus = [float(mu) for mu in mu_values]
    if any(mu <= 0 for mu in mus):
        raise InvalidInputError("mu values must be positive")
    if mus != sorted(mus):
        raise InvalidInputError("mu values must be sorted")
    v_star = exact_minimax(game).game_value
    out = []
    for mu in mus:
        cfg = PerturbationConfig.of(mode, mu)
        try:
            res = solve_perturbed(game, cfg, tol=tol, max_iters=max_iters)
            x, residual, ok = res.x_star, res.residual, True
        except ConvergenceError as err:
            x, residual, ok = err.x, err.residual, False
        g, _ = best_response_value_x(game, x)
        out.append(SweepEntry(mu, g - v_star, ok, residual))
    return out


def invariance_threshold(game: MatrixGame, lo: float, hi: float, tol: float = DEFAULT_TOL,
                         eps: float = 1e-6, steps: int = 30) -> float:
    """Largest asymmetric strength (to bisection precision) keeping ``x^mu`` minimax.

    Membership in the minimax set is judged by ``g(x^mu) - v* <= eps``.
    ``lo`` must satisfy the test and ``hi`` must violate it.
    """
    def inside(mu):
        entry = mu_sweep(game, Mode.ASYMMETRIC_X, [mu], tol=tol)[0]
        return entry.exploitability <= eps

    if not inside(lo) or inside(hi):
        raise PreconditionError("bisection bracket does not straddle the threshold")
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if inside(mid):
            lo = mid
        else:
            hi = mid
    return lo
