"""Matrix games, simplex strategies and equilibrium-gap measures.

Conventions follow the bilinear saddle-point form ``min_x max_y x^T A y``:
the row player ``x`` pays ``x^T A y`` and the column player ``y`` receives it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels

SIMPLEX_ATOL = 1e-9
NASHCONV_SLACK = 1e-12
FEASIBLE_ATOL = 1e-12


class InvalidInputError(ValueError):
    """Raised for malformed vectors, matrices or strategy profiles."""


def as_simplex_point(p, atol: float = SIMPLEX_ATOL) -> np.ndarray:
    """Validate ``p`` as a probability vector and return a read-only copy."""
    arr = np.array(p, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError(f"simplex point must be a non-empty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("simplex point has non-finite entries")
    if np.any(arr < 0.0):
        raise InvalidInputError(f"simplex point has negative entries: {arr}")
    if abs(arr.sum() - 1.0) > atol:
        raise InvalidInputError(f"simplex point sums to {arr.sum()!r}, not 1")
    arr.setflags(write=False)
    return arr


def uniform(k: int) -> np.ndarray:
    return np.full(k, 1.0 / k)


class StrategyProfile(NamedTuple):
    x: np.ndarray
    y: np.ndarray


@dataclass(frozen=True)
class MatrixGame:
    """Payoff matrix ``A`` (cost to ``x``, reward to ``y``) with cached norms.

    ``exact`` optionally keeps the entries as :class:`fractions.Fraction` so
    that equality claims (e.g. a critical perturbation strength) can be
    checked in rational arithmetic.
    """

    A: np.ndarray
    name: str = "inline"
    exact: tuple[tuple[Fraction, ...], ...] | None = field(default=None, compare=False)
    spectral_norm: float = field(init=False, compare=False)
    diameter: float = field(init=False, compare=False)

    def __post_init__(self):
        A = np.array(self.A, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise InvalidInputError(f"payoff matrix must be 2-D and non-empty, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise InvalidInputError("payoff matrix has non-finite entries")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)
        if self.exact is not None:
            exact = tuple(tuple(Fraction(v) for v in row) for row in self.exact)
            if len(exact) != A.shape[0] or any(len(r) != A.shape[1] for r in exact):
                raise InvalidInputError("exact entries do not match the float matrix shape")
            object.__setattr__(self, "exact", exact)
        object.__setattr__(self, "spectral_norm", spectral_norm(A))
        # max ||z - z'|| over a product of two simplices: two opposite vertices in each
        object.__setattr__(self, "diameter", float(np.sqrt(2.0 + 2.0)))

    @classmethod
    def from_fractions(cls, rows: Sequence[Sequence], name: str = "inline") -> "MatrixGame":
        exact = tuple(tuple(Fraction(v) for v in row) for row in rows)
        return cls(np.array([[float(v) for v in row] for row in exact]), name=name, exact=exact)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    def scaled(self, c: float) -> "MatrixGame":
        exact = None
        if self.exact is not None and isinstance(c, (int, Fraction)):
            exact = tuple(tuple(c * v for v in row) for row in self.exact)
        return MatrixGame(c * self.A, name=f"{c}*{self.name}", exact=exact)

    def role_swapped(self) -> "MatrixGame":
        """The game seen from the column player: ``-A^T``."""
        exact = None
        if self.exact is not None:
            exact = tuple(tuple(-self.exact[i][j] for i in range(self.m)) for j in range(self.n))
        return MatrixGame(-self.A.T, name=f"swap({self.name})", exact=exact)

    def check_profile(self, x, y) -> StrategyProfile:
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if x.shape != (self.m,) or y.shape != (self.n,):
            raise InvalidInputError(
                f"profile dimensions {x.shape}, {y.shape} do not match game {self.shape}")
        return StrategyProfile(x, y)


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-then-threshold)."""
    arr = np.array(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError(f"expected a non-empty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("cannot project a vector with non-finite entries")
    # already feasible up to rounding: return unchanged so projection is idempotent
    if arr.min() >= 0.0 and abs(arr.sum() - 1.0) <= FEASIBLE_ATOL:
        return arr
    return _kernels.project(arr)


def spectral_norm(A, rtol: float = 1e-15, max_iters: int = 100_000) -> float:
    """Largest singular value of ``A`` by power iteration on ``A^T A``.

    Starts from the normalized all-ones vector. A second pass from a fixed
    pseudo-random start guards against the all-ones vector being orthogonal
    to the dominant singular subspace; the larger estimate wins.
    """
    A = np.asarray(A, dtype=np.float64)
    if not np.any(A):
        return 0.0
    n = A.shape[1]
    starts = [np.ones(n), np.random.default_rng(0x5EED).standard_normal(n)]
    best = 0.0
    for v in starts:
        best = max(best, _power_iteration(A, v / np.linalg.norm(v), rtol, max_iters))
    return best


def _power_iteration(A, v, rtol, max_iters):
    lam = 0.0
    for _ in range(max_iters):
        w = A.T @ (A @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        new = float(v @ (A.T @ (A @ v)))
        if abs(new - lam) <= rtol * new:
            lam = new
            break
        lam = new
    return float(np.sqrt(max(lam, 0.0)))


def _clamp_gap(gap: float) -> float:
    if -NASHCONV_SLACK <= gap < 0.0:
        return 0.0
    return gap


def nash_conv(game: MatrixGame, x, y) -> float:
    """``max_j (x^T A)_j - min_i (A y)_i``; zero exactly at equilibria."""
    x, y = game.check_profile(x, y)
    gap = float(np.max(x @ game.A) - np.min(game.A @ y))
    return _clamp_gap(gap)


def best_response_value_x(game: MatrixGame, x) -> tuple[float, int]:
    """Value of the best column against ``x`` and its index (lowest on ties)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (game.m,):
        raise InvalidInputError(f"x has shape {x.shape}, expected ({game.m},)")
    payoffs = x @ game.A
    j = int(np.argmax(payoffs))
    return float(payoffs[j]), j


def best_response_value_y(game: MatrixGame, y) -> tuple[float, int]:
    """Value of the best row against ``y`` (the minimum of ``A y``) and its index."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (game.n,):
        raise InvalidInputError(f"y has shape {y.shape}, expected ({game.n},)")
    costs = game.A @ y
    i = int(np.argmin(costs))
    return float(costs[i]), i


def perturbed_landscape(game: MatrixGame, x, mu: float) -> float:
    """Row player's objective ``max_y x^T A y + (mu/2)||x||^2``."""
    if mu < 0:
        raise InvalidInputError(f"mu must be non-negative, got {mu}")
    x = np.asarray(x, dtype=np.float64)
    value, _ = best_response_value_x(game, x)
    return value + 0.5 * mu * float(x @ x)
