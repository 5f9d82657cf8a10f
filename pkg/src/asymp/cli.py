"""``asymp`` command-line entry point."""

from __future__ import annotations

import argparse
import logging
import sys

from .experiments import (EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_OK, ConfigError, Experiment,
                          ExperimentFailure, load_config, run_experiment, spec_from_mapping)

logger = logging.getLogger("asymp")


def _add_common(p: argparse.ArgumentParser, positional_game: bool = True):
    if positional_game:
        p.add_argument("game_pos", nargs="?", metavar="GAME",
                       help="registry name (bmp, brps, mne, kuhn) or inline matrix 'a,b;c,d'")
    p.add_argument("--config", help="YAML config; flags override its values")
    p.add_argument("--game")
    p.add_argument("--algo")
    p.add_argument("--mu", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--iters", type=int)
    p.add_argument("--seeds", help="e.g. '0-99' or '0,3,7'")
    p.add_argument("--tsigma", type=int)
    p.add_argument("--eval-every", type=int, dest="eval_every")
    p.add_argument("--record-every", type=int, dest="record_every")
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asymp", description="Perturbed gradient and regret dynamics for zero-sum games.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("critical-mu", help="largest perturbation strengths keeping the equilibrium")
    _add_common(p)
    p.add_argument("--rational", action="store_true", help="exact rational arithmetic")

    p = sub.add_parser("mu-sweep", help="exploitability of the perturbed equilibrium over a mu grid")
    _add_common(p)
    p.add_argument("--mode", help="none, symmetric, asymmetric-x, asymmetric-y, independent")
    p.add_argument("--mu-grid", dest="mu_grid", help="'start:stop:step' or comma list")
    p.add_argument("--tol", type=float)

    for name, text in (("matrix-run", "multi-seed NashConv and distance series"),
                       ("matrix-trajectory", "strategy trajectories per seed"),
                       ("efg-run", "CFR-family run on an extensive-form game")):
        p = sub.add_parser(name, help=text)
        _add_common(p)

    p = sub.add_parser("run", help="run the experiment described by a config file")
    p.add_argument("config_pos", metavar="CONFIG")
    _add_common(p, positional_game=False)
    return parser


_OVERRIDES = ("game", "algo", "mu", "eta", "iters", "seeds", "tsigma", "eval_every",
              "record_every", "out", "mode", "mu_grid", "tol")


def _spec_from_args(args):
    config_path = getattr(args, "config_pos", None) or args.config
    data = load_config(config_path) if config_path else {}
    overrides = {k: getattr(args, k, None) for k in _OVERRIDES}
    if getattr(args, "game_pos", None):
        overrides["game"] = args.game_pos
    if getattr(args, "rational", False):
        overrides["rational"] = True
    if args.command != "run":
        overrides["experiment"] = Experiment(args.command).value
    return spec_from_mapping(data, overrides)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        spec = _spec_from_args(args)
        result = run_experiment(spec)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ExperimentFailure as err:
        print(f"convergence failure: {err}", file=sys.stderr)
        return EXIT_CONVERGENCE
    for line in result.lines:
        print(line)
    for path in result.paths:
        logger.info("wrote %s", path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
