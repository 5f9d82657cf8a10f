"""Two-player zero-sum extensive-form games with perfect recall.

Terminal nodes store the utility of player ``Y``; player ``X`` receives its
negation, mirroring the matrix convention where ``x`` minimizes ``x^T A y``.
Values returned by :func:`expected_value` and :func:`best_response` are
always expressed as ``Y``'s utility.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Dict, Iterable, Optional

import numpy as np

X = 0
Y = 1
PLAYER_NAMES = {X: "X", Y: "Y"}
PROB_ATOL = 1e-12

BehavioralStrategy = Dict[str, np.ndarray]


class GameDefinitionError(ValueError):
    pass


class MissingInfosetError(KeyError):
    pass


class NodeKind(enum.Enum):
    CHANCE = "chance"
    DECISION = "decision"
    TERMINAL = "terminal"


@dataclass(frozen=True)
class GameNode:
    id: int
    kind: NodeKind
    player: Optional[int] = None
    infoset: Optional[str] = None
    actions: tuple[str, ...] = ()
    chance_probs: tuple[float, ...] = ()
    utility_y: Optional[float] = None
    children: tuple[int, ...] = ()


class ExtensiveGame:
    """Immutable game tree rooted at node 0, validated on construction."""

    def __init__(self, nodes: Iterable[GameNode], name: str = "efg"):
        self.name = name
        self.nodes: tuple[GameNode, ...] = tuple(sorted(nodes, key=lambda nd: nd.id))
        if [nd.id for nd in self.nodes] != list(range(len(self.nodes))):
            raise GameDefinitionError("node ids must be 0..N-1")
        self._validate_nodes()
        self.infosets: dict[str, tuple[int, tuple[str, ...]]] = {}
        self.infoset_nodes: dict[str, list[int]] = {}
        for nd in self.nodes:
            if nd.kind is NodeKind.DECISION:
                prev = self.infosets.setdefault(nd.infoset, (nd.player, nd.actions))
                if prev != (nd.player, nd.actions):
                    raise GameDefinitionError(
                        f"infoset {nd.infoset!r} mixes owners or action lists")
                self.infoset_nodes.setdefault(nd.infoset, []).append(nd.id)
        self._check_perfect_recall()

    def _validate_nodes(self):
        seen_parent: dict[int, int] = {}
        for nd in self.nodes:
            if nd.kind is NodeKind.TERMINAL:
                if nd.children or nd.utility_y is None or not np.isfinite(nd.utility_y):
                    raise GameDefinitionError(f"terminal {nd.id} needs a finite utility and no children")
                continue
            if not nd.actions or len(nd.actions) != len(nd.children):
                raise GameDefinitionError(f"node {nd.id} needs one child per action")
            if nd.kind is NodeKind.CHANCE:
                probs = np.asarray(nd.chance_probs, dtype=float)
                if probs.shape != (len(nd.actions),) or np.any(probs < 0) or abs(probs.sum() - 1) > PROB_ATOL:
                    raise GameDefinitionError(f"chance node {nd.id} has invalid probabilities")
            elif nd.player not in (X, Y) or nd.infoset is None:
                raise GameDefinitionError(f"decision node {nd.id} needs a player and an infoset")
            for c in nd.children:
                # children after parents rules out cycles; one parent each makes it a tree
                if c <= nd.id or c >= len(self.nodes) or c in seen_parent:
                    raise GameDefinitionError(f"node {nd.id} has an invalid child {c}")
                seen_parent[c] = nd.id
        if len(seen_parent) != len(self.nodes) - 1:
            raise GameDefinitionError("tree is not connected")

    def _check_perfect_recall(self):
        # each player's own (infoset, action) sequence must agree across an infoset
        own: dict[str, tuple] = {}
        stack = [(0, ((), ()))]
        while stack:
            nid, seqs = stack.pop()
            nd = self.nodes[nid]
            if nd.kind is NodeKind.DECISION:
                mine = seqs[nd.player]
                if own.setdefault(nd.infoset, mine) != mine:
                    raise GameDefinitionError(f"perfect recall violated at infoset {nd.infoset!r}")
            for a, c in zip(nd.actions, nd.children):
                if nd.kind is NodeKind.DECISION:
                    nxt = list(seqs)
                    nxt[nd.player] = seqs[nd.player] + ((nd.infoset, a),)
                    stack.append((c, tuple(nxt)))
                else:
                    stack.append((c, seqs))

    def player_infosets(self, player: int) -> list[str]:
        return [k for k, (p, _) in self.infosets.items() if p == player]

    def actions(self, infoset: str) -> tuple[str, ...]:
        return self.infosets[infoset][1]

    @property
    def root(self) -> GameNode:
        return self.nodes[0]

    def terminals(self) -> list[GameNode]:
        return [nd for nd in self.nodes if nd.kind is NodeKind.TERMINAL]

    def uniform_strategy(self, player: int) -> BehavioralStrategy:
        return {I: np.full(len(self.actions(I)), 1.0 / len(self.actions(I)))
                for I in self.player_infosets(player)}

    def check_strategy(self, strategy: BehavioralStrategy, player: int):
        for I in self.player_infosets(player):
            if I not in strategy:
                raise MissingInfosetError(f"strategy for {PLAYER_NAMES[player]} lacks infoset {I!r}")
            p = strategy[I]
            if len(p) != len(self.actions(I)) or np.any(np.asarray(p) < 0) or abs(np.sum(p) - 1) > 1e-9:
                raise GameDefinitionError(f"strategy at {I!r} is not a distribution over its actions")

    # -- serialization -------------------------------------------------

    def dumps(self) -> str:
        """One node per line: ``id kind player infoset actions probs children utility``."""
        lines = [f"# efg {self.name}"]
        for nd in self.nodes:
            fields = [
                str(nd.id),
                nd.kind.value,
                "-" if nd.player is None else PLAYER_NAMES[nd.player],
                "-" if nd.infoset is None else nd.infoset,
                ",".join(nd.actions) or "-",
                ",".join(repr(float(p)) for p in nd.chance_probs) or "-",
                ",".join(str(c) for c in nd.children) or "-",
                "-" if nd.utility_y is None else repr(float(nd.utility_y)),
            ]
            lines.append("\t".join(fields))
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ExtensiveGame":
        name = "efg"
        nodes = []
        players = {v: k for k, v in PLAYER_NAMES.items()}
        for line in text.splitlines():
            if not line.strip():
                continue
            if line.startswith("#"):
                parts = line[1:].split(None, 1)
                if len(parts) == 2 and parts[0] == "efg":
                    name = parts[1]
                continue
            f = line.split("\t")
            if len(f) != 8:
                raise GameDefinitionError(f"malformed node line: {line!r}")

            def opt(s, conv):
                return None if s == "-" else conv(s)

            def seq(s, conv):
                return () if s == "-" else tuple(conv(v) for v in s.split(","))

            nodes.append(GameNode(
                id=int(f[0]), kind=NodeKind(f[1]), player=opt(f[2], players.__getitem__),
                infoset=opt(f[3], str), actions=seq(f[4], str), chance_probs=seq(f[5], float),
                children=seq(f[6], int), utility_y=opt(f[7], float)))
        return cls(nodes, name=name)

    def __eq__(self, other):
        return isinstance(other, ExtensiveGame) and self.nodes == other.nodes and self.name == other.name

    def __hash__(self):
        return hash((self.name, self.nodes))


class TreeBuilder:
    """Incremental construction helper; nodes get ids in creation order."""

    def __init__(self):
        self._nodes: list[dict] = []

    def _add(self, **kw) -> int:
        nid = len(self._nodes)
        kw.setdefault("children", [])
        self._nodes.append(dict(id=nid, **kw))
        return nid

    def chance(self, outcomes, probs) -> int:
        return self._add(kind=NodeKind.CHANCE, actions=tuple(outcomes), chance_probs=tuple(probs))

    def decision(self, player: int, infoset: str, actions) -> int:
        return self._add(kind=NodeKind.DECISION, player=player, infoset=infoset, actions=tuple(actions))

    def terminal(self, utility_y: float) -> int:
        return self._add(kind=NodeKind.TERMINAL, utility_y=float(utility_y))

    def link(self, parent: int, child: int):
        self._nodes[parent]["children"].append(child)

    def build(self, name: str) -> ExtensiveGame:
        return ExtensiveGame(
            [GameNode(**{**d, "children": tuple(d["children"])}) for d in self._nodes], name=name)


KUHN_CARDS = "JQK"


def build_kuhn_poker() -> ExtensiveGame:
    """Three-card Kuhn poker; ``X`` acts first, ``p`` = check/fold, ``b`` = bet/call.

    Ante 1, bet 1. Infosets are keyed by private card plus the betting history,
    e.g. ``"Kpb"`` is ``X`` holding the king facing a bet after checking.
    """
    tb = TreeBuilder()
    deals = list(itertools.permutations(KUHN_CARDS, 2))
    root = tb.chance(["".join(d) for d in deals], [1.0 / len(deals)] * len(deals))

    def showdown(cx, cy, stake):
        return stake if KUHN_CARDS.index(cy) > KUHN_CARDS.index(cx) else -stake

    for cx, cy in deals:
        x0 = tb.decision(X, cx, "pb")
        tb.link(root, x0)
        # X checks
        y_p = tb.decision(Y, cy + "p", "pb")
        tb.link(x0, y_p)
        tb.link(y_p, tb.terminal(showdown(cx, cy, 1)))
        x1 = tb.decision(X, cx + "pb", "pb")
        tb.link(y_p, x1)
        tb.link(x1, tb.terminal(1.0))  # X folds to the bet
        tb.link(x1, tb.terminal(showdown(cx, cy, 2)))
        # X bets
        y_b = tb.decision(Y, cy + "b", "pb")
        tb.link(x0, y_b)
        tb.link(y_b, tb.terminal(-1.0))  # Y folds
        tb.link(y_b, tb.terminal(showdown(cx, cy, 2)))
    return tb.build("kuhn")


# -- traversals ---------------------------------------------------------


def _strategy_at(nd: GameNode, sx: BehavioralStrategy, sy: BehavioralStrategy):
    strat = sx if nd.player == X else sy
    try:
        return strat[nd.infoset]
    except KeyError:
        raise MissingInfosetError(
            f"strategy for {PLAYER_NAMES[nd.player]} lacks infoset {nd.infoset!r}") from None


def expected_value(game: ExtensiveGame, sx: BehavioralStrategy, sy: BehavioralStrategy) -> float:
    """Exact expected utility of ``Y`` under the behavioral profile."""
    nodes = game.nodes

    def walk(nid):
        nd = nodes[nid]
        if nd.kind is NodeKind.TERMINAL:
            return nd.utility_y
        probs = nd.chance_probs if nd.kind is NodeKind.CHANCE else _strategy_at(nd, sx, sy)
        return sum(float(p) * walk(c) for p, c in zip(probs, nd.children) if p != 0.0)

    return float(walk(0))


def reach_probabilities(game: ExtensiveGame, sx: BehavioralStrategy, sy: BehavioralStrategy) -> np.ndarray:
    """Probability of reaching every node under the profile (chance included)."""
    reach = np.zeros(len(game.nodes))
    reach[0] = 1.0
    for nd in game.nodes:  # ids are topologically ordered
        if nd.kind is NodeKind.TERMINAL:
            continue
        probs = nd.chance_probs if nd.kind is NodeKind.CHANCE else _strategy_at(nd, sx, sy)
        for p, c in zip(probs, nd.children):
            reach[c] = reach[nd.id] * p
    return reach


def node_depths(game: ExtensiveGame) -> np.ndarray:
    depth = np.zeros(len(game.nodes), dtype=int)
    for nd in game.nodes:
        for c in nd.children:
            depth[c] = depth[nd.id] + 1
    return depth


def best_response(game: ExtensiveGame, opponent: BehavioralStrategy, responder: int
                  ) -> tuple[BehavioralStrategy, float]:
    """Pure best response of ``responder`` and the resulting value (``Y``'s utility).

    Action values at an infoset sum the responder's utility over its nodes,
    weighted by chance-and-opponent reach; the argmax (lowest index on ties)
    is taken with deeper responder infosets already resolved.
    """
    nodes = game.nodes
    sign = 1.0 if responder == Y else -1.0
    opp = X if responder == Y else Y
    game.check_strategy(opponent, opp)

    # reach of each node due to chance and the opponent only
    weight = np.zeros(len(nodes))
    weight[0] = 1.0
    for nd in nodes:
        if nd.kind is NodeKind.TERMINAL:
            continue
        if nd.kind is NodeKind.CHANCE:
            probs = nd.chance_probs
        elif nd.player == opp:
            probs = opponent[nd.infoset]
        else:
            probs = np.ones(len(nd.children))
        for p, c in zip(probs, nd.children):
            weight[c] = weight[nd.id] * p

    choice: dict[str, int] = {}
    memo: dict[int, float] = {}

    def value(nid):
        # responder's utility of the subtree under the (partial) best response
        if nid in memo:
            return memo[nid]
        nd = nodes[nid]
        if nd.kind is NodeKind.TERMINAL:
            v = sign * nd.utility_y
        elif nd.kind is NodeKind.CHANCE:
            v = sum(p * value(c) for p, c in zip(nd.chance_probs, nd.children))
        elif nd.player == opp:
            v = sum(float(p) * value(c) for p, c in zip(opponent[nd.infoset], nd.children))
        else:
            v = value(nd.children[decide(nd.infoset)])
        memo[nid] = v
        return v

    def decide(I):
        if I not in choice:
            k = len(game.actions(I))
            totals = np.zeros(k)
            for h in game.infoset_nodes[I]:
                w = weight[h]
                for a in range(k):
                    totals[a] += w * value(nodes[h].children[a])
            choice[I] = int(np.argmax(totals))
        return choice[I]

    v = value(0)
    strategy = {}
    for I in game.player_infosets(responder):
        a = decide(I)
        vec = np.zeros(len(game.actions(I)))
        vec[a] = 1.0
        strategy[I] = vec
    return strategy, float(sign * v)


def nash_conv_efg(game: ExtensiveGame, sx: BehavioralStrategy, sy: BehavioralStrategy) -> float:
    """``max_y' u_Y(x, y') - min_x' u_Y(x', y)``, clamped at zero for rounding."""
    _, best_y = best_response(game, sx, Y)
    _, best_x = best_response(game, sy, X)
    gap = best_y - best_x
    if -1e-12 <= gap < 0.0:
        gap = 0.0
    return float(gap)


def pure_strategies(game: ExtensiveGame, player: int):
    """Every pure behavioral strategy of ``player`` (exponential; small games only)."""
    infosets = game.player_infosets(player)
    sizes = [len(game.actions(I)) for I in infosets]
    for choice in itertools.product(*(range(k) for k in sizes)):
        strat = {}
        for I, a, k in zip(infosets, choice, sizes):
            vec = np.zeros(k)
            vec[a] = 1.0
            strat[I] = vec
        yield strat
