"""Game registry, experiment specs and CSV emission."""

from __future__ import annotations

import csv
import enum
import logging
import re
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional, Union

import numpy as np
import yaml

from .cfr import CfrConfig, Variant, run_cfr
from .efg import ExtensiveGame, build_kuhn_poker
from .games import InvalidInputError, MatrixGame
from .gda import Algorithm, NumericalError, SolverConfig, random_profile, run_solver
from .perturbation import (ConvergenceError, Mode, PreconditionError, critical_mu_exact,
                           critical_mu_x, critical_mu_y, exact_minimax, mu_sweep, solve_perturbed)

logger = logging.getLogger(__name__)

F = Fraction
MATRIX_REGISTRY = {
    "bmp": ((F(1, 3), F(-2, 3)),
            (F(-2, 3), F(1))),
    "brps": ((0, 1, -3),
             (-1, 0, 1),
             (3, -1, 0)),
    "mne": ((0, -1, 1, 0, 0),
            (1, 0, -1, 0, 0),
            (-1, 1, 0, 0, 0),
            (-1, 1, 0, 2, -1),
            (-1, 1, 0, -1, 2)),
}
EFG_REGISTRY = {"kuhn": build_kuhn_poker}
DEFAULT_SEEDS = tuple(range(100))
DEFAULT_MU_GRID = tuple(round(0.1 * k, 10) for k in range(1, 51))

MATRIX_RUN_HEADER = ["t", "seed", "nashconv", "dist_x_star", "dist_perturbed"]
MU_SWEEP_HEADER = ["mu", "exploitability", "converged"]
EFG_RUN_HEADER = ["t", "nashconv_last", "nashconv_avg"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3


class ConfigError(ValueError):
    pass


class ExperimentFailure(RuntimeError):
    """A solver failed to converge; partial output has been written."""


class Experiment(enum.Enum):
    MU_SWEEP = "mu-sweep"
    MATRIX_RUN = "matrix-run"
    MATRIX_TRAJECTORY = "matrix-trajectory"
    EFG_RUN = "efg-run"
    CRITICAL_MU = "critical-mu"


# -- registry and inline matrices ------------------------------------------

_ENTRY = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?(/\d+)?$")


def parse_matrix(text: str, name: str = "inline") -> MatrixGame:
    """Parse ``"a,b,c;d,e,f"`` (rows split by ``;``) with integer, decimal or ``p/q`` entries."""
    rows = [r.strip() for r in text.strip().split(";") if r.strip()]
    if not rows:
        raise InvalidInputError("empty matrix")
    parsed = []
    for r in rows:
        entries = [e.strip() for e in r.split(",")]
        for e in entries:
            if not _ENTRY.match(e):
                raise InvalidInputError(f"bad matrix entry {e!r}")
        parsed.append([Fraction(e) for e in entries])
    if len({len(r) for r in parsed}) != 1:
        raise InvalidInputError("matrix rows have different lengths")
    return MatrixGame.from_fractions(parsed, name=name)


def format_matrix(game: MatrixGame) -> str:
    if game.exact is not None:
        return ";".join(",".join(str(v) for v in row) for row in game.exact)
    return ";".join(",".join(repr(float(v)) for v in row) for row in game.A)


def registry_lookup(name: str) -> Union[MatrixGame, ExtensiveGame]:
    key = name.strip().lower()
    if key in MATRIX_REGISTRY:
        return MatrixGame.from_fractions(MATRIX_REGISTRY[key], name=key)
    if key in EFG_REGISTRY:
        return EFG_REGISTRY[key]()
    raise KeyError(f"unknown game {name!r}; known: {sorted(MATRIX_REGISTRY) + sorted(EFG_REGISTRY)}")


def resolve_game(name_or_matrix: str) -> Union[MatrixGame, ExtensiveGame]:
    try:
        return registry_lookup(name_or_matrix)
    except KeyError:
        if ";" in name_or_matrix or "," in name_or_matrix:
            return parse_matrix(name_or_matrix)
        raise


def parse_seeds(text) -> tuple[int, ...]:
    """``"0-99"``, ``"1,4,7"`` or a mix like ``"0-3,10"``; lists pass through."""
    if isinstance(text, int):
        return (text,)
    if isinstance(text, (list, tuple)):
        return tuple(int(s) for s in text)
    seeds = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    return tuple(seeds)


def parse_grid(text) -> tuple[float, ...]:
    """``"start:stop:step"`` (inclusive) or a comma list."""
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    text = str(text)
    if ":" in text:
        start, stop, step = (Fraction(v) for v in text.split(":"))
        if step <= 0:
            raise ConfigError("grid step must be positive")
        out, k = [], 0
        while start + k * step <= stop:
            out.append(float(start + k * step))
            k += 1
        return tuple(out)
    return tuple(float(v) for v in text.split(",") if v.strip())


# -- specs -------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentSpec:
    experiment: Experiment
    game: str
    algo: Optional[str] = None
    mu: Optional[float] = None
    eta: float = 0.01
    iters: int = 10_000
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    tsigma: Optional[int] = None
    eval_every: int = 10
    record_every: int = 100
    mode: str = Mode.ASYMMETRIC_X.value
    mu_grid: tuple[float, ...] = DEFAULT_MU_GRID
    tol: float = 1e-10
    rational: bool = False
    out: Optional[str] = None

    def validate(self):
        try:
            game = resolve_game(self.game)
        except (KeyError, InvalidInputError) as err:
            raise ConfigError(str(err)) from err
        wants_efg = self.experiment is Experiment.EFG_RUN
        if wants_efg != isinstance(game, ExtensiveGame):
            kind = "an extensive-form" if wants_efg else "a matrix"
            raise ConfigError(f"{self.experiment.value} needs {kind} game, got {self.game!r}")
        if self.experiment in (Experiment.MATRIX_RUN, Experiment.MATRIX_TRAJECTORY) and not self.seeds:
            raise ConfigError("randomized experiments need at least one seed")
        if self.iters < 1 or self.eval_every < 1 or self.record_every < 1 or self.eta <= 0:
            raise ConfigError("iters, eval_every, record_every and eta must be positive")
        if self.algo is not None:
            valid = [a.value for a in (Variant if wants_efg else Algorithm)]
            if self.algo not in valid:
                raise ConfigError(f"unknown algorithm {self.algo!r}; choose from {valid}")
        try:
            Mode(self.mode)
        except ValueError as err:
            raise ConfigError(f"unknown perturbation mode {self.mode!r}") from err
        return game


_ALIASES = {"eval-every": "eval_every", "record-every": "record_every", "t_sigma": "tsigma",
            "mu-grid": "mu_grid", "output": "out", "output_path": "out"}


def _flatten(d, out=None):
    out = {} if out is None else out
    for k, v in d.items():
        if isinstance(v, dict):
            _flatten(v, out)
        else:
            out[_ALIASES.get(k, k).replace("-", "_")] = v
    return out


def spec_from_mapping(data: dict, overrides: dict | None = None) -> ExperimentSpec:
    """Build a spec from nested key/value data (sections are flattened) plus overrides."""
    flat = _flatten(data or {})
    flat.update({k: v for k, v in (overrides or {}).items() if v is not None})
    known = {f.name for f in fields(ExperimentSpec)}
    unknown = set(flat) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "experiment" not in flat or "game" not in flat:
        raise ConfigError("config needs 'experiment' and 'game'")
    try:
        flat["experiment"] = Experiment(flat["experiment"])
        if "seeds" in flat:
            flat["seeds"] = parse_seeds(flat["seeds"])
        if "mu_grid" in flat:
            flat["mu_grid"] = parse_grid(flat["mu_grid"])
        for k in ("mu", "eta", "tol"):
            if k in flat:
                flat[k] = float(flat[k])
        for k in ("iters", "tsigma", "eval_every", "record_every"):
            if k in flat:
                flat[k] = int(flat[k])
        flat["game"] = str(flat["game"])
    except (ValueError, TypeError) as err:
        raise ConfigError(str(err)) from err
    return ExperimentSpec(**flat)


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return data


# -- CSV helpers ------------------------------------------------------------

def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def summary_path(path: Path) -> Path:
    return path.with_name(path.stem + "_summary" + path.suffix)


def mean_stderr(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column-wise mean and standard error over the seed axis (axis 0)."""
    n = values.shape[0]
    mean = values.mean(axis=0)
    if n < 2:
        return mean, np.zeros_like(mean)
    return mean, values.std(axis=0, ddof=1) / np.sqrt(n)


# -- runners ------------------------------------------------------------------

@dataclass
class ExperimentResult:
    paths: list[Path] = field(default_factory=list)
    lines: list[str] = field(default_factory=list)
    failed: bool = False


def _default_out(spec: ExperimentSpec) -> Path:
    tag = spec.algo or spec.mode
    return Path(f"{spec.experiment.value}_{spec.game}_{tag}.csv".replace("/", "_"))


def _matrix_solver_config(spec: ExperimentSpec, seed: int) -> SolverConfig:
    algo = Algorithm(spec.algo or Algorithm.ASYMP_GDA.value)
    kwargs = dict(eta=spec.eta, max_iters=spec.iters, record_every=spec.record_every, seed=seed)
    if algo.anchored:
        kwargs["t_sigma"] = spec.tsigma if spec.tsigma is not None else min(10_000, spec.iters)
    try:
        return SolverConfig.make(algo, mu=spec.mu, **kwargs)
    except InvalidInputError as err:
        raise ConfigError(str(err)) from err


def _run_mu_sweep(spec, game, out):
    entries = mu_sweep(game, spec.mode, spec.mu_grid, tol=spec.tol)
    _write_csv(out, MU_SWEEP_HEADER, [(e.mu, e.exploitability, e.converged) for e in entries])
    failed = not all(e.converged for e in entries)
    return ExperimentResult([out], failed=failed)


def _run_matrix(spec, game, out, trajectory: bool):
    x_star = exact_minimax(game).x_star
    base = _matrix_solver_config(spec, spec.seeds[0])
    pert = base.perturbation
    ref = None
    if pert.mode is not Mode.NONE and not base.algorithm.anchored:
        ref = solve_perturbed(game, pert, tol=spec.tol)
    rows, status, per_seed = [], [], []
    failed = False
    for seed in spec.seeds:
        cfg = replace(base, seed=seed)
        ok = "ok"
        try:
            traj = run_solver(game, cfg, random_profile(game, seed), x_star=x_star, perturbed_eq=ref)
        except NumericalError as err:
            traj, failed, ok = err.trajectory, True, "diverged"
        if trajectory:
            for i in range(len(traj)):
                rows.append((int(traj.t[i]), seed, *traj.x[i], *traj.y[i], traj.nash_conv[i]))
        else:
            for t, _, _, nc, dx, dz in traj.rows():
                rows.append((t, seed, nc, dx, dz))
        status.extend([ok] * len(traj))
        per_seed.append(traj)
    if trajectory:
        header = (["t", "seed"] + [f"x{i + 1}" for i in range(game.m)]
                  + [f"y{j + 1}" for j in range(game.n)] + ["nashconv"])
    else:
        header = list(MATRIX_RUN_HEADER)
    if failed:
        # partial output carries a per-row status flag
        header.append("status")
        rows = [r + (s,) for r, s in zip(rows, status)]
    _write_csv(out, header, rows)
    if trajectory or failed:
        return ExperimentResult([out], failed=failed)
    paths = [out]
    if not failed:
        paths.append(_write_summary(out, per_seed))
    return ExperimentResult(paths, failed=failed)


def _write_summary(out: Path, trajs) -> Path:
    ts = trajs[0].t
    cols = {"nashconv": np.stack([tr.nash_conv for tr in trajs])}
    if trajs[0].dist_x_star is not None:
        cols["dist_x_star"] = np.stack([tr.dist_x_star for tr in trajs])
    if trajs[0].dist_perturbed is not None:
        cols["dist_perturbed"] = np.stack([tr.dist_perturbed for tr in trajs])
    header = ["t", "n_seeds"]
    stats = []
    for name, arr in cols.items():
        header += [f"{name}_mean", f"{name}_stderr"]
        stats.extend(mean_stderr(arr))
    rows = [(int(t), len(trajs), *(s[i] for s in stats)) for i, t in enumerate(ts)]
    path = summary_path(out)
    _write_csv(path, header, rows)
    return path


def _run_efg(spec, game, out):
    variant = Variant(spec.algo or Variant.ASYMP_CFR_PLUS.value)
    kwargs = dict(iterations=spec.iters, eval_every=spec.eval_every)
    if spec.tsigma is not None:
        kwargs["t_sigma"] = spec.tsigma
    try:
        cfg = CfrConfig.make(variant, mu=spec.mu, **kwargs)
    except ValueError as err:
        raise ConfigError(str(err)) from err
    records = run_cfr(game, cfg)
    _write_csv(out, EFG_RUN_HEADER, [(r.t, r.nashconv_last, r.nashconv_avg) for r in records])
    return ExperimentResult([out])


def _run_critical_mu(spec, game, out):
    lines, rows = [], []
    try:
        if spec.rational:
            mx, my = critical_mu_exact(game)
            vals = {"mu_x": mx, "mu_y": my}
            for k, v in vals.items():
                lines.append(f"{k}\t{'absent' if v is None else v}")
                rows.append((k, None if v is None else float(v), "" if v is None else str(v)))
        else:
            eq = exact_minimax(game)
            vals = {"mu_x": critical_mu_x(game, eq), "mu_y": critical_mu_y(game, eq)}
            for k, v in vals.items():
                lines.append(f"{k}\t{'absent' if v is None else fmt(v)}")
                rows.append((k, v, ""))
    except PreconditionError as err:
        raise ConfigError(str(err)) from err
    paths = []
    if spec.out is not None:
        _write_csv(out, ["player", "critical_mu", "rational"], rows)
        paths.append(out)
    return ExperimentResult(paths, lines=lines)


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run one experiment and write its CSV output(s).

    Raises :class:`ConfigError` for invalid specs and :class:`ExperimentFailure`
    (after writing partial output) when a solver does not converge.
    """
    game = spec.validate()
    out = Path(spec.out) if spec.out else _default_out(spec)
    logger.info("running %s on %s -> %s", spec.experiment.value, spec.game, out)
    exp = spec.experiment
    try:
        if exp is Experiment.MU_SWEEP:
            result = _run_mu_sweep(spec, game, out)
        elif exp is Experiment.MATRIX_RUN:
            result = _run_matrix(spec, game, out, trajectory=False)
        elif exp is Experiment.MATRIX_TRAJECTORY:
            result = _run_matrix(spec, game, out, trajectory=True)
        elif exp is Experiment.EFG_RUN:
            result = _run_efg(spec, game, out)
        else:
            result = _run_critical_mu(spec, game, out)
    except ConvergenceError as err:
        raise ExperimentFailure(str(err)) from err
    if result.failed:
        raise ExperimentFailure(f"{exp.value}: solver did not converge; partial output in {out}")
    return result
