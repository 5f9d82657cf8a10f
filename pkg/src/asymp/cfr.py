"""Counterfactual regret minimization with optional payoff perturbation.

Updates alternate: the ``X`` block (strategy, regrets) runs before the
``Y`` block, and ``Y``'s counterfactual values are computed against ``X``'s
freshly updated strategy. Perturbation is applied per information set to
that infoset's current strategy vector.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .efg import X, Y, BehavioralStrategy, ExtensiveGame, NodeKind, expected_value, nash_conv_efg

DEFAULT_MU = 0.01
ADA_DEFAULT_MU = 0.05
ADA_DEFAULT_TSIGMA = 2500


class Variant(enum.Enum):
    CFR = "cfr"
    CFR_PLUS = "cfr+"
    SYMP_CFR_PLUS = "symp-cfr+"
    ASYMP_CFR_PLUS = "asymp-cfr+"
    ADA_ASYMP_CFR_PLUS = "ada-asymp-cfr+"
    ADA_SYMP_CFR_PLUS = "ada-symp-cfr+"

    @property
    def perturbed(self) -> bool:
        return self not in (Variant.CFR, Variant.CFR_PLUS)

    @property
    def symmetric(self) -> bool:
        return self in (Variant.SYMP_CFR_PLUS, Variant.ADA_SYMP_CFR_PLUS)

    @property
    def anchored(self) -> bool:
        return self in (Variant.ADA_ASYMP_CFR_PLUS, Variant.ADA_SYMP_CFR_PLUS)


@dataclass(frozen=True)
class CfrConfig:
    variant: Variant = Variant.ASYMP_CFR_PLUS
    mu: float = DEFAULT_MU
    t_sigma: int = ADA_DEFAULT_TSIGMA
    iterations: int = 1000
    eval_every: int = 10
    perturbed_player: int = X
    # ``mu == 0`` is allowed for perturbed variants so reductions can be tested
    allow_zero_mu: bool = False

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be non-negative")
        if self.variant.perturbed and self.mu == 0 and not self.allow_zero_mu:
            raise ValueError(f"{self.variant.value} needs mu > 0")
        if self.variant.anchored and self.t_sigma < 1:
            raise ValueError("anchored variants need t_sigma >= 1")
        if self.iterations < 0 or self.eval_every < 1:
            raise ValueError("iterations must be >= 0 and eval_every >= 1")
        if self.perturbed_player not in (X, Y):
            raise ValueError("perturbed_player must be X (0) or Y (1)")

    @classmethod
    def make(cls, variant: Variant | str, mu: float | None = None, **kwargs) -> "CfrConfig":
        variant = Variant(variant)
        if mu is None:
            mu = ADA_DEFAULT_MU if variant.anchored else DEFAULT_MU if variant.perturbed else 0.0
        return cls(variant=variant, mu=mu, **kwargs)

    @property
    def clips(self) -> bool:
        return self.variant is not Variant.CFR

    def perturbs(self, player: int) -> bool:
        if not self.variant.perturbed:
            return False
        return self.variant.symmetric or player == self.perturbed_player


@dataclass
class RegretState:
    regrets: dict[str, np.ndarray]
    strategy_sum: dict[str, np.ndarray]
    anchor: Optional[dict[str, np.ndarray]] = None

    @classmethod
    def zeros(cls, game: ExtensiveGame, player: int) -> "RegretState":
        infosets = game.player_infosets(player)
        return cls({I: np.zeros(len(game.actions(I))) for I in infosets},
                   {I: np.zeros(len(game.actions(I))) for I in infosets})

    def current(self) -> BehavioralStrategy:
        return {I: regret_matching_plus(R) for I, R in self.regrets.items()}

    def average(self) -> BehavioralStrategy:
        out = {}
        for I, S in self.strategy_sum.items():
            total = S.sum()
            out[I] = S / total if total > 0 else np.full(len(S), 1.0 / len(S))
        return out

    def min_regret(self) -> float:
        return min((float(R.min()) for R in self.regrets.values()), default=0.0)


@dataclass
class CfrState:
    players: tuple[RegretState, RegretState]
    t: int = 0
    k: int = 0

    @classmethod
    def initial(cls, game: ExtensiveGame) -> "CfrState":
        return cls((RegretState.zeros(game, X), RegretState.zeros(game, Y)))

    def current(self) -> tuple[BehavioralStrategy, BehavioralStrategy]:
        return self.players[X].current(), self.players[Y].current()

    def average(self) -> tuple[BehavioralStrategy, BehavioralStrategy]:
        return self.players[X].average(), self.players[Y].average()


def regret_matching_plus(R) -> np.ndarray:
    """``[R]^+ / ||[R]^+||_1``, uniform when no entry is positive."""
    R = np.asarray(R, dtype=np.float64)
    pos = np.maximum(R, 0.0)
    total = pos.sum()
    if total <= 0.0:
        return np.full(len(R), 1.0 / len(R))
    return pos / total


def _counterfactual_pass(game: ExtensiveGame, player: int, sx: BehavioralStrategy,
                         sy: BehavioralStrategy):
    """Counterfactual action values and own reach for every infoset of ``player``."""
    nodes = game.nodes
    sign = 1.0 if player == Y else -1.0
    cfv = {I: np.zeros(len(game.actions(I))) for I in game.player_infosets(player)}
    own_reach: dict[str, float] = {}

    def walk(nid, reach_own, reach_others):
        nd = nodes[nid]
        if nd.kind is NodeKind.TERMINAL:
            return sign * nd.utility_y
        if nd.kind is NodeKind.CHANCE:
            return sum(p * walk(c, reach_own, reach_others * p)
                       for p, c in zip(nd.chance_probs, nd.children))
        if nd.player == player:
            sigma = (sx if player == X else sy)[nd.infoset]
            vals = np.array([walk(c, reach_own * p, reach_others)
                             for p, c in zip(sigma, nd.children)])
            cfv[nd.infoset] += reach_others * vals
            own_reach[nd.infoset] = reach_own
            return float(sigma @ vals)
        sigma = (sy if player == X else sx)[nd.infoset]
        return sum(p * walk(c, reach_own, reach_others * p) for p, c in zip(sigma, nd.children))

    walk(0, 1.0, 1.0)
    return cfv, own_reach


def immediate_counterfactual_regret(game: ExtensiveGame, sx: BehavioralStrategy,
                                    sy: BehavioralStrategy, player: int) -> dict[str, np.ndarray]:
    """``r(I, a) = v(I, a) - v(I)`` with values weighted by chance-and-opponent reach."""
    own = sx if player == X else sy
    cfv, _ = _counterfactual_pass(game, player, sx, sy)
    return {I: v - float(own[I] @ v) for I, v in cfv.items()}


def _update_player(game, state: CfrState, cfg: CfrConfig, player: int, t: int):
    rs = state.players[player]
    sx, sy = state.current()
    own = sx if player == X else sy
    cfv, own_reach = _counterfactual_pass(game, player, sx, sy)
    mu = cfg.mu if cfg.perturbs(player) else 0.0
    for I, v in cfv.items():
        sigma = own[I]
        r = v - float(sigma @ v)
        if cfg.variant.anchored:
            dev = sigma - rs.anchor[I]
        else:
            dev = sigma
        R = rs.regrets[I] + r - mu * dev
        rs.regrets[I] = np.maximum(R, 0.0) if cfg.clips else R
        rs.strategy_sum[I] = rs.strategy_sum[I] + t * own_reach.get(I, 0.0) * sigma


def cfr_iteration(game: ExtensiveGame, state: CfrState, cfg: CfrConfig) -> CfrState:
    """One full iteration (``X`` block, then ``Y`` block); mutates and returns ``state``."""
    t = state.t + 1
    if cfg.variant.anchored and (t - 1) % cfg.t_sigma == 0:
        for rs in state.players:
            rs.anchor = rs.current()
        state.k += 1
    _update_player(game, state, cfg, X, t)
    _update_player(game, state, cfg, Y, t)
    state.t = t
    return state


@dataclass(frozen=True)
class CfrRecord:
    t: int
    nashconv_last: float
    nashconv_avg: float


def run_cfr(game: ExtensiveGame, cfg: CfrConfig, state: CfrState | None = None,
            callback=None) -> list[CfrRecord]:
    """Iterate ``cfg.iterations`` times, evaluating both NashConvs every ``eval_every``.

    Row ``t = 0`` holds the initial (uniform) profile; the final iteration is
    always evaluated. ``callback(state)`` runs after every iteration.
    """
    state = CfrState.initial(game) if state is None else state
    records = []

    def evaluate():
        last = nash_conv_efg(game, *state.current())
        avg = nash_conv_efg(game, *state.average()) if state.t > 0 else last
        if not (np.isfinite(last) and np.isfinite(avg)):
            raise FloatingPointError(f"non-finite NashConv at t={state.t}")
        records.append(CfrRecord(state.t, last, avg))

    evaluate()
    for i in range(1, cfg.iterations + 1):
        cfr_iteration(game, state, cfg)
        if callback is not None:
            callback(state)
        if state.t % cfg.eval_every == 0 or i == cfg.iterations:
            evaluate()
    return records


def game_value_x(game: ExtensiveGame, sx: BehavioralStrategy, sy: BehavioralStrategy) -> float:
    """Expected payoff of the first mover ``X`` (the negation of ``Y``'s utility)."""
    return -expected_value(game, sx, sy)
