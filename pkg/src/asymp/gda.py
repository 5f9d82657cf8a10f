"""Projected gradient descent-ascent dynamics on matrix games.

All variants use alternating updates: the column player's step sees the
row player's freshly updated strategy.
"""

from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from . import _kernels
from .games import InvalidInputError, MatrixGame, StrategyProfile, as_simplex_point
from .perturbation import EquilibriumResult, Mode, PerturbationConfig

logger = logging.getLogger(__name__)

DEFAULT_ETA = 0.01
DEFAULT_MU = 1.0
ADA_DEFAULT_MU = 5.0
ADA_DEFAULT_TSIGMA = 10_000


class Algorithm(enum.Enum):
    GDA = "gda"
    SYMP_GDA = "symp-gda"
    ASYMP_GDA = "asymp-gda"
    OGDA = "ogda"
    ADA_ASYMP_GDA = "ada-asymp-gda"
    ADA_SYMP_GDA = "ada-symp-gda"

    @property
    def anchored(self) -> bool:
        return self in (Algorithm.ADA_ASYMP_GDA, Algorithm.ADA_SYMP_GDA)


_ALLOWED_MODES = {
    Algorithm.GDA: {Mode.NONE},
    Algorithm.OGDA: {Mode.NONE},
    Algorithm.ASYMP_GDA: {Mode.ASYMMETRIC_X, Mode.ASYMMETRIC_Y},
    Algorithm.ADA_ASYMP_GDA: {Mode.ASYMMETRIC_X, Mode.ASYMMETRIC_Y},
    Algorithm.SYMP_GDA: {Mode.SYMMETRIC, Mode.INDEPENDENT},
    Algorithm.ADA_SYMP_GDA: {Mode.SYMMETRIC, Mode.INDEPENDENT},
}


class NumericalError(RuntimeError):
    def __init__(self, message, trajectory):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True)
class SolverConfig:
    algorithm: Algorithm = Algorithm.ASYMP_GDA
    eta: float = DEFAULT_ETA
    perturbation: PerturbationConfig = field(
        default_factory=lambda: PerturbationConfig.of(Mode.ASYMMETRIC_X, DEFAULT_MU))
    t_sigma: int = ADA_DEFAULT_TSIGMA
    max_iters: int = 1000
    record_every: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.eta <= 0:
            raise InvalidInputError(f"eta must be positive, got {self.eta}")
        if self.max_iters < 1 or self.record_every < 1:
            raise InvalidInputError("max_iters and record_every must be positive")
        if self.perturbation.mode not in _ALLOWED_MODES[self.algorithm]:
            raise InvalidInputError(
                f"{self.algorithm.value} cannot run with perturbation mode {self.perturbation.mode.value}")
        if self.algorithm.anchored and not 1 <= self.t_sigma <= self.max_iters:
            raise InvalidInputError("anchored algorithms need 1 <= t_sigma <= max_iters")

    @classmethod
    def make(cls, algorithm: Algorithm | str, mu: float | None = None, **kwargs) -> "SolverConfig":
        """Config with the perturbation mode implied by ``algorithm``."""
        algorithm = Algorithm(algorithm)
        if algorithm in (Algorithm.GDA, Algorithm.OGDA):
            pert = PerturbationConfig()
        elif algorithm in (Algorithm.ASYMP_GDA, Algorithm.ADA_ASYMP_GDA):
            default = ADA_DEFAULT_MU if algorithm.anchored else DEFAULT_MU
            pert = PerturbationConfig.of(Mode.ASYMMETRIC_X, default if mu is None else mu)
        else:
            default = ADA_DEFAULT_MU if algorithm.anchored else DEFAULT_MU
            pert = PerturbationConfig.of(Mode.SYMMETRIC, default if mu is None else mu)
        return cls(algorithm=algorithm, perturbation=pert, **kwargs)


@dataclass(frozen=True)
class Trajectory:
    """Recorded iterates; ``t`` counts completed updates (0 is the initial profile)."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    nash_conv: np.ndarray
    dist_x_star: Optional[np.ndarray] = None
    dist_perturbed: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.t)

    def rows(self) -> Iterator[tuple]:
        for i in range(len(self.t)):
            yield (
                int(self.t[i]), self.x[i], self.y[i], float(self.nash_conv[i]),
                None if self.dist_x_star is None else float(self.dist_x_star[i]),
                None if self.dist_perturbed is None else float(self.dist_perturbed[i]),
            )

    @property
    def final(self) -> StrategyProfile:
        return StrategyProfile(self.x[-1], self.y[-1])


def _vec(v):
    return np.ascontiguousarray(v, dtype=np.float64)


def gda_step(game: MatrixGame, x, y, eta: float):
    return _kernels.perturbed_step(game.A, _vec(x), _vec(y), eta, 0.0, 0.0,
                                   np.zeros(game.m), np.zeros(game.n))


def asymp_gda_step(game: MatrixGame, x, y, eta: float, mu: float):
    """``x' = P(x - eta (A y + mu x))``, then ``y' = P(y + eta A^T x')``."""
    return _kernels.perturbed_step(game.A, _vec(x), _vec(y), eta, float(mu), 0.0,
                                   np.zeros(game.m), np.zeros(game.n))


def symp_gda_step(game: MatrixGame, x, y, eta: float, mu: float, mu_y: float | None = None):
    """Both gradients perturbed; ``mu_y`` defaults to ``mu``."""
    mu_y = mu if mu_y is None else mu_y
    return _kernels.perturbed_step(game.A, _vec(x), _vec(y), eta, float(mu), float(mu_y),
                                   np.zeros(game.m), np.zeros(game.n))


def ada_asymp_gda_step(game: MatrixGame, x, y, anchor, eta: float, mu: float):
    """Asymmetric step with the quadratic centred at ``anchor`` instead of the origin."""
    return _kernels.perturbed_step(game.A, _vec(x), _vec(y), eta, float(mu), 0.0,
                                   _vec(anchor), np.zeros(game.n))


def ada_symp_gda_step(game: MatrixGame, x, y, anchor_x, anchor_y, eta: float, mu: float):
    return _kernels.perturbed_step(game.A, _vec(x), _vec(y), eta, float(mu), float(mu),
                                   _vec(anchor_x), _vec(anchor_y))


@dataclass
class OptimisticState:
    x: np.ndarray
    y: np.ndarray
    gx_prev: np.ndarray
    gy_prev: np.ndarray

    @classmethod
    def start(cls, x, y) -> "OptimisticState":
        x, y = _vec(x), _vec(y)
        return cls(x, y, np.zeros_like(x), np.zeros_like(y))


def ogda_step(game: MatrixGame, state: OptimisticState, eta: float) -> OptimisticState:
    """Past-gradient optimistic step ``P(z -+ eta (2 g_t - g_{t-1}))``, alternating."""
    x, y, gx, gy = _kernels.optimistic_step(game.A, state.x, state.y, eta, 0.0, 0.0,
                                            state.gx_prev, state.gy_prev)
    return OptimisticState(x, y, gx, gy)


def anchor_index(t: int, t_sigma: int) -> int:
    """Anchor generation used at update ``t`` (1-based): ``floor((t-1)/t_sigma) + 1``.

    Generation ``k`` is the iterate before update ``t_sigma * (k - 1) + 1``.
    """
    if t < 1 or t_sigma < 1:
        raise InvalidInputError("t and t_sigma must be positive")
    return (t - 1) // t_sigma + 1


def check_step_size(game: MatrixGame, mu: float, eta: float) -> tuple[bool, float]:
    """Compare ``eta`` with the computable bound ``mu / (2 (mu^2 + ||A||^2))``."""
    if mu <= 0:
        raise InvalidInputError("check_step_size needs mu > 0")
    bound = mu / (2.0 * (mu * mu + game.spectral_norm ** 2))
    return eta < bound, bound


def random_profile(game: MatrixGame, seed: int) -> StrategyProfile:
    """Uniform draw from the product of simplices via normalized exponentials."""
    rng = np.random.default_rng(seed)
    ex = rng.exponential(size=game.m)
    ey = rng.exponential(size=game.n)
    return StrategyProfile(ex / ex.sum(), ey / ey.sum())


def _record_count(n_iters, every):
    return 1 + n_iters // every + (0 if n_iters % every == 0 else 1)


def _as_pair(eq):
    if isinstance(eq, EquilibriumResult):
        return _vec(eq.x_star), _vec(eq.y_star)
    return _vec(eq[0]), _vec(eq[1])


def _distances(points, ref):
    return np.linalg.norm(points - ref[None, :], axis=1)


def run_solver(game: MatrixGame, cfg: SolverConfig, initial: StrategyProfile | None = None,
               x_star=None, perturbed_eq: EquilibriumResult | StrategyProfile | None = None) -> Trajectory:
    """Run ``cfg.max_iters`` updates and record every ``cfg.record_every``-th.

    ``initial=None`` draws a random profile from ``cfg.seed``. When reference
    points are given, distances ``||x^t - x*||`` and ``||z^t - z^mu||`` are
    recorded alongside NashConv.
    """
    if initial is None:
        initial = random_profile(game, cfg.seed)
    x0 = _vec(as_simplex_point(initial[0]))
    y0 = _vec(as_simplex_point(initial[1]))
    game.check_profile(x0, y0)
    pert = cfg.perturbation
    if cfg.algorithm in (Algorithm.ASYMP_GDA, Algorithm.ADA_ASYMP_GDA, Algorithm.SYMP_GDA):
        mu = max(pert.mu_x, pert.mu_y)
        # the bound only exists for positive strengths; mu = 0 is the plain GDA reduction
        ok, bound = check_step_size(game, mu, cfg.eta) if mu > 0 else (True, None)
        if not ok:
            warnings.warn(f"eta={cfg.eta} exceeds the step bound {bound:.4g}; convergence is not guaranteed",
                          stacklevel=2)

    kind = {
        Algorithm.OGDA: _kernels.OPTIMISTIC,
        Algorithm.ADA_ASYMP_GDA: _kernels.ANCHORED,
        Algorithm.ADA_SYMP_GDA: _kernels.ANCHORED,
    }.get(cfg.algorithm, _kernels.PERTURBED)
    n_rows = _record_count(cfg.max_iters, cfg.record_every)
    xs = np.zeros((n_rows, game.m))
    ys = np.zeros((n_rows, game.n))
    done = _kernels.run(game.A, x0, y0, float(cfg.eta), float(pert.mu_x), float(pert.mu_y),
                        kind, int(cfg.t_sigma), int(cfg.max_iters), int(cfg.record_every), xs, ys)
    ts = np.arange(0, cfg.max_iters + 1, cfg.record_every)
    if ts[-1] != cfg.max_iters:
        ts = np.append(ts, cfg.max_iters)
    failed = done < cfg.max_iters
    if failed:
        keep = int(np.searchsorted(ts, done, side="right"))
        ts, xs, ys = ts[:keep], xs[:keep], ys[:keep]

    gaps = np.max(xs @ game.A, axis=1) - np.min(ys @ game.A.T, axis=1)
    gaps = np.where((gaps < 0) & (gaps >= -1e-12), 0.0, gaps)
    dx = None if x_star is None else _distances(xs, _vec(x_star))
    dz = None
    if perturbed_eq is not None:
        px, py = _as_pair(perturbed_eq)
        dz = np.sqrt(_distances(xs, px) ** 2 + _distances(ys, py) ** 2)
    traj = Trajectory(ts, xs, ys, gaps, dx, dz)
    if failed:
        raise NumericalError(f"non-finite iterate after {done} updates", traj)
    logger.debug("%s on %s: %d updates, final NashConv %.3e",
                 cfg.algorithm.value, game.name, done, gaps[-1])
    return traj
