"""Strong equilibria, improving-deviation graphs, closed cycles and dominance.

Two independent routes find equilibria: ``find_equilibria_scan`` runs the
candidate-elimination loop directly on the payoff table, while
``recurrent_structure`` reads them off as singleton sink components of the
deviation graph.  ``equilibria_consistency_check`` compares the two.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import networkx as nx

from .deviation import ImprovementMode, structure_for
from .game import Coalition, Game, coalition_label, enumerate_coalitions

EQUILIBRIUM = "EQUILIBRIUM"
CLOSED_CYCLE = "CLOSED_CYCLE"


# -- Algorithm-1 style scan ---------------------------------------------------

def _beats(old: Sequence[Fraction], new: Sequence[Fraction], members, strict: bool) -> bool:
    if strict:
        for i in members:
            if not new[i] > old[i]:
                return False
        return True
    if any(new[i] < old[i] for i in members):
        return False
    return any(new[i] > old[i] for i in members)


def find_equilibria_scan(game: Game, mode=ImprovementMode.STRICT, *,
                         early_exit: bool = False) -> list[int]:
    """Return the indices of all SNE (STRICT) or SSNE (WEAK) profiles.

    Each candidate profile is eliminated as soon as one coalition finds one
    improving joint action; a candidate that survives every coalition is an
    equilibrium.  With ``early_exit`` the first survivor is returned alone.
    """
    game.check_caps()
    strict = ImprovementMode.parse(mode) is ImprovementMode.STRICT
    coalitions = enumerate_coalitions(game.num_players)
    strides = game.strides
    pay = game.payoffs
    found = []
    for a in range(game.num_profiles):
        prof = game.profile_at(a)
        base = pay[a]
        eliminated = False
        for s in coalitions:
            fixed = a - sum(prof[i] * strides[i] for i in s)
            for choice in itertools.product(*(range(game.action_counts[i]) for i in s)):
                target = fixed + sum(x * strides[i] for x, i in zip(choice, s))
                if _beats(base, pay[target], s, strict):
                    eliminated = True
                    break
            if eliminated:
                break
        if not eliminated:
            found.append(a)
            if early_exit:
                break
    return found


# -- deviation graph ----------------------------------------------------------

@dataclass
class DeviationGraph:
    labels: tuple[str, ...]
    mode: ImprovementMode
    edges: dict[tuple[int, int], tuple[Coalition, ...]]
    successors: list[list[int]] = field(repr=False, default_factory=list)

    @property
    def num_nodes(self) -> int:
        return len(self.labels)

    def out_degree(self, node: int) -> int:
        return len(self.successors[node])


def build_deviation_graph(obj, mode=None) -> DeviationGraph:
    """Edge a -> a' labelled by every coalition S with a' in I(S, a)."""
    dev = structure_for(obj, mode)
    edges: dict[tuple[int, int], list[Coalition]] = {}
    for a in range(dev.num_states):
        for s in dev.coalitions:
            for b in dev.improving(s, a):
                edges.setdefault((a, b), []).append(s)
    successors: list[list[int]] = [[] for _ in range(dev.num_states)]
    for a, b in sorted(edges):
        successors[a].append(b)
    labels = tuple(dev.label(k) for k in range(dev.num_states))
    return DeviationGraph(labels, dev.mode, {e: tuple(c) for e, c in sorted(edges.items())}, successors)


def sink_components(num_nodes: int, successors: Sequence[Iterable[int]]) -> list[tuple[int, ...]]:
    """Sink strongly connected components, each sorted, ordered by smallest member."""
    g = nx.DiGraph()
    g.add_nodes_from(range(num_nodes))
    g.add_edges_from((a, b) for a in range(num_nodes) for b in successors[a] if a != b)
    cond = nx.condensation(g)
    sinks = [tuple(sorted(cond.nodes[c]["members"])) for c in cond.nodes if cond.out_degree(c) == 0]
    return sorted(sinks)


@dataclass(frozen=True)
class RecurrentClass:
    kind: str
    members: tuple[int, ...]

    def __len__(self):
        return len(self.members)


@dataclass(frozen=True)
class RecurrentStructure:
    classes: tuple[RecurrentClass, ...]
    transient: tuple[int, ...]

    @property
    def equilibria(self) -> list[int]:
        return [c.members[0] for c in self.classes if c.kind == EQUILIBRIUM]

    @property
    def cycles(self) -> list[tuple[int, ...]]:
        return [c.members for c in self.classes if c.kind == CLOSED_CYCLE]

    @property
    def recurrent_states(self) -> frozenset[int]:
        return frozenset(k for c in self.classes for k in c.members)

    @property
    def num_classes(self) -> int:
        return len(self.classes)


def classify_sinks(num_nodes: int, sinks: Sequence[tuple[int, ...]]) -> RecurrentStructure:
    classes = tuple(RecurrentClass(EQUILIBRIUM if len(m) == 1 else CLOSED_CYCLE, tuple(m)) for m in sinks)
    inside = {k for m in sinks for k in m}
    return RecurrentStructure(classes, tuple(k for k in range(num_nodes) if k not in inside))


def recurrent_structure(graph: DeviationGraph) -> RecurrentStructure:
    return classify_sinks(graph.num_nodes, sink_components(graph.num_nodes, graph.successors))


def improving_path(graph: DeviationGraph, start: int, goal: int) -> list | None:
    """Shortest improving path ``[a0, S0, a1, S1, ..., ak]`` or None.

    Ties are broken by canonical node order; each step names the first
    coalition (in canonical order) that can make the move.
    """
    if start == goal:
        return [start]
    parent = {start: None}
    queue = deque([start])
    while queue:
        a = queue.popleft()
        for b in graph.successors[a]:
            if b in parent:
                continue
            parent[b] = a
            if b == goal:
                path = [b]
                while parent[path[0]] is not None:
                    prev = parent[path[0]]
                    path[:0] = [prev, graph.edges[(prev, path[0])][0]]
                return path
            queue.append(b)
    return None


@dataclass(frozen=True)
class ConsistencyReport:
    passed: bool
    scan: tuple[int, ...]
    graph: tuple[int, ...]
    only_in_scan: tuple[int, ...]
    only_in_graph: tuple[int, ...]


def equilibria_consistency_check(game: Game, mode=ImprovementMode.STRICT) -> ConsistencyReport:
    mode = ImprovementMode.parse(mode)
    scan = set(find_equilibria_scan(game, mode))
    graph = set(recurrent_structure(build_deviation_graph(game, mode)).equilibria)
    return ConsistencyReport(scan == graph, tuple(sorted(scan)), tuple(sorted(graph)),
                             tuple(sorted(scan - graph)), tuple(sorted(graph - scan)))


def to_dot(graph: DeviationGraph, name: str = "deviations") -> str:
    lines = [f"digraph {name} {{"]
    for k, label in enumerate(graph.labels):
        lines.append(f'  n{k} [label="{label}"];')
    for (a, b), coalitions in graph.edges.items():
        label = ",".join(coalition_label(s) for s in coalitions)
        lines.append(f'  n{a} -> n{b} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- payoff and risk dominance -----------------------------------------------

@dataclass(frozen=True)
class DominanceReport:
    payoff_dominant: int | None
    risk_dominant: int | None
    r1: Fraction | None = None
    r2: Fraction | None = None


def _coordination_cells(game: Game, k: int, l: int):
    """Payoffs ``(a, b)`` of the 2x2 subgame on actions {k, l}, or None."""
    u = lambda i, j: game.payoffs[game.index_of((i, j))]
    a = {(x, y): u(p, q)[0] for x, p in ((1, k), (2, l)) for y, q in ((1, k), (2, l))}
    b = {(x, y): u(p, q)[1] for x, p in ((1, k), (2, l)) for y, q in ((1, k), (2, l))}
    if a[1, 1] > a[2, 1] and b[1, 1] > b[1, 2] and a[2, 2] > a[1, 2] and b[2, 2] > b[2, 1]:
        return a, b
    return None


def _risk_ratios(a, b) -> tuple[Fraction, Fraction]:
    da = a[1, 1] - a[1, 2] - a[2, 1] + a[2, 2]
    db = b[1, 1] - b[1, 2] - b[2, 1] + b[2, 2]
    r1 = min((a[1, 1] - a[2, 1]) / da, (b[1, 1] - b[1, 2]) / db)
    r2 = min((a[2, 2] - a[1, 2]) / da, (b[2, 2] - b[2, 1]) / db)
    return r1, r2


def dominance_2x2(game: Game) -> DominanceReport:
    if game.action_counts != (2, 2):
        raise ValueError("not a 2x2 coordination game")
    cells = _coordination_cells(game, 0, 1)
    if cells is None:
        raise ValueError("not a 2x2 coordination game")
    a, b = cells
    r1, r2 = _risk_ratios(a, b)
    s11, s22 = game.index_of((0, 0)), game.index_of((1, 1))
    payoff = None
    if a[1, 1] > a[2, 2] and b[1, 1] > b[2, 2]:
        payoff = s11
    elif a[1, 1] < a[2, 2] and b[1, 1] < b[2, 2]:
        payoff = s22
    risk = s11 if r1 > r2 else s22 if r2 > r1 else None
    return DominanceReport(payoff, risk, r1, r2)


def dominance(game: Game) -> DominanceReport:
    """Payoff and risk dominance for square two-player coordination games.

    Every diagonal profile must be a strict Nash equilibrium.  Beyond 2x2, a
    diagonal equilibrium is risk dominant when it wins the 2x2 risk
    comparison against every other diagonal equilibrium; it is absent when
    any of its pairwise contests is inconclusive.
    """
    if game.action_counts == (2, 2):
        return dominance_2x2(game)
    if game.num_players != 2 or game.action_counts[0] != game.action_counts[1]:
        raise ValueError("not a square two-player coordination game")
    m = game.action_counts[0]
    if not all(_is_strict_nash(game, (k, k)) for k in range(m)):
        raise ValueError("not a coordination game: some diagonal profile is not a strict equilibrium")
    u = lambda k: game.payoffs[game.index_of((k, k))]
    payoff = None
    for k in range(m):
        if all(u(k)[0] > u(l)[0] and u(k)[1] > u(l)[1] for l in range(m) if l != k):
            payoff = game.index_of((k, k))
    risk = None
    for k in range(m):
        wins = True
        for l in range(m):
            if l == k:
                continue
            cells = _coordination_cells(game, min(k, l), max(k, l))
            r_low, r_high = _risk_ratios(*cells)
            mine, theirs = (r_low, r_high) if k < l else (r_high, r_low)
            if not mine > theirs:
                wins = False
                break
        if wins:
            risk = game.index_of((k, k))
    return DominanceReport(payoff, risk)


def _is_strict_nash(game: Game, profile) -> bool:
    k = game.index_of(profile)
    return all(game.payoffs[b][i] < game.payoffs[k][i]
               for i in range(game.num_players) for b in _unilateral(game, i, k) if b != k)


def _unilateral(game: Game, player: int, k: int) -> list[int]:
    prof = list(game.profile_at(k))
    out = []
    for x in range(game.action_counts[player]):
        prof[player] = x
        out.append(game.index_of(tuple(prof)))
    return out
