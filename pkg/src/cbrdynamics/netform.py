"""Network formation games under coalitional deviations.

A network on ``n`` nodes is identified with a bitmask over the canonical edge
order (pairs ``(i, j)``, ``i < j``, lexicographic).  Links are added only by
coalitions containing both endpoints and may be cut by any coalition
containing at least one endpoint.  The default improvement notion is WEAK
(no member loses, some member gains); STRICT is available as an extension.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .chain import DynamicsConfig, TransitionMatrix, build_perturbed, build_unperturbed
from .deviation import ImprovementMode, improves
from .equilibrium import RecurrentStructure, build_deviation_graph, recurrent_structure
from .errors import CapExceededError, GameValidationError
from .game import Coalition, enumerate_coalitions, to_rational

MAX_NODES_STABILITY = 6
MAX_NODES_CHAIN = 5


def canonical_edges(n: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(n), 2))


@dataclass(frozen=True)
class Network:
    num_nodes: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        clean = set()
        for e in self.edges:
            i, j = e
            if i == j:
                raise ValueError(f"self-loop at node {i + 1}")
            if not (0 <= i < self.num_nodes and 0 <= j < self.num_nodes):
                raise ValueError(f"edge {e} has a node out of range")
            clean.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(clean))

    @classmethod
    def from_mask(cls, n: int, mask: int) -> "Network":
        return cls(n, frozenset(e for k, e in enumerate(canonical_edges(n)) if mask >> k & 1))

    @property
    def mask(self) -> int:
        index = {e: k for k, e in enumerate(canonical_edges(self.num_nodes))}
        return sum(1 << index[e] for e in self.edges)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def degree(self, node: int) -> int:
        return sum(node in e for e in self.edges)

    def label(self) -> str:
        sep = "" if self.num_nodes < 10 else "-"
        return "{" + ",".join(f"{i + 1}{sep}{j + 1}" for i, j in self.sorted_edges()) + "}"

    def edge_list(self) -> str:
        return "".join(f"{i + 1} {j + 1}\n" for i, j in self.sorted_edges())

    def adjacency_matrix(self) -> list[list[int]]:
        adj = [[0] * self.num_nodes for _ in range(self.num_nodes)]
        for i, j in self.edges:
            adj[i][j] = adj[j][i] = 1
        return adj


def _as_network(n: int, g) -> Network:
    if isinstance(g, Network):
        if g.num_nodes != n:
            raise ValueError(f"network has {g.num_nodes} nodes, expected {n}")
        return g
    if isinstance(g, int):
        return Network.from_mask(n, g)
    return Network(n, frozenset(tuple(e) for e in g))


def obtainable(g: Network, h: Network, coalition: Iterable[int]) -> bool:
    """True iff ``h`` is obtainable from ``g`` by a deviation of ``coalition``."""
    if g.num_nodes != h.num_nodes:
        raise ValueError(f"node count mismatch: {g.num_nodes} vs {h.num_nodes}")
    s = set(coalition)
    added_ok = all(i in s and j in s for i, j in h.edges - g.edges)
    deleted_ok = all(i in s or j in s for i, j in g.edges - h.edges)
    return added_ok and deleted_ok


def _submasks(mask: int):
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


@dataclass(frozen=True)
class NetworkGame:
    """Values ``values[mask][i]`` for every network and every player."""

    num_nodes: int
    values: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        n = self.num_nodes
        if n < 1:
            raise GameValidationError(["network game needs at least one node"])
        if n > MAX_NODES_STABILITY:
            raise CapExceededError(f"network games are capped at {MAX_NODES_STABILITY} nodes, got {n}")
        expected = 1 << (n * (n - 1) // 2)
        defects = []
        if len(self.values) != expected:
            defects.append(f"value table has {len(self.values)} networks, expected {expected}")
        for k, row in enumerate(self.values):
            if len(row) != n or not all(isinstance(v, Fraction) for v in row):
                defects.append(f"value row for network {Network.from_mask(n, k).label()} "
                               f"must hold {n} rationals")
        if defects:
            raise GameValidationError(defects)

    @property
    def num_networks(self) -> int:
        return len(self.values)

    @property
    def num_edges(self) -> int:
        return self.num_nodes * (self.num_nodes - 1) // 2

    def network(self, mask: int) -> Network:
        return Network.from_mask(self.num_nodes, mask)

    def value(self, player: int, g) -> Fraction:
        return self.values[_as_network(self.num_nodes, g).mask][player]

    def deviation_structure(self, mode=None) -> "NetworkDeviations":
        return NetworkDeviations(self, ImprovementMode.WEAK if mode is None else mode)

    @classmethod
    def from_function(cls, n: int, value: Callable[[Network], Sequence]) -> "NetworkGame":
        if n > MAX_NODES_STABILITY:
            raise CapExceededError(f"network games are capped at {MAX_NODES_STABILITY} nodes, got {n}")
        m = n * (n - 1) // 2
        rows = tuple(tuple(to_rational(v) for v in value(Network.from_mask(n, k))) for k in range(1 << m))
        return cls(n, rows)


class NetworkDeviations:
    """Deviation structure over networks, states being edge bitmasks."""

    def __init__(self, game: NetworkGame, mode=ImprovementMode.WEAK):
        self.game = game
        self.mode = ImprovementMode.parse(mode)
        self.coalitions = enumerate_coalitions(game.num_nodes)
        edges = canonical_edges(game.num_nodes)
        self._inside = {}
        self._touching = {}
        for s in self.coalitions:
            members = set(s)
            self._inside[s] = sum(1 << k for k, (i, j) in enumerate(edges) if i in members and j in members)
            self._touching[s] = sum(1 << k for k, (i, j) in enumerate(edges) if i in members or j in members)
        self._reach: dict = {}
        self._better: dict = {}

    @property
    def num_states(self) -> int:
        return self.game.num_networks

    def reachable(self, coalition: Coalition, state: int) -> tuple[int, ...]:
        key = (coalition, state)
        out = self._reach.get(key)
        if out is None:
            addable = self._inside[coalition] & ~state
            cuttable = self._touching[coalition] & state
            out = tuple(sorted((state & ~cut) | add for cut in _submasks(cuttable) for add in _submasks(addable)))
            self._reach[key] = out
        return out

    def improving(self, coalition: Coalition, state: int) -> tuple[int, ...]:
        key = (coalition, state)
        out = self._better.get(key)
        if out is None:
            vals = self.game.values
            out = tuple(h for h in self.reachable(coalition, state)
                        if improves(vals[state], vals[h], coalition, self.mode))
            self._better[key] = out
        return out

    def label(self, state: int) -> str:
        return self.game.network(state).label()

    def check_chain_caps(self) -> None:
        _check_chain_cap(self.game)


def _coalition(game: NetworkGame, coalition) -> Coalition:
    s = tuple(sorted(set(coalition)))
    if not s or s[0] < 0 or s[-1] >= game.num_nodes:
        raise ValueError(f"invalid coalition {coalition!r}")
    return s


def network_reachable(game: NetworkGame, coalition, g) -> frozenset[int]:
    dev = NetworkDeviations(game)
    return frozenset(dev.reachable(_coalition(game, coalition), _as_network(game.num_nodes, g).mask))


def network_improving_set(game: NetworkGame, coalition, g, mode=ImprovementMode.WEAK) -> frozenset[int]:
    dev = NetworkDeviations(game, mode)
    return frozenset(dev.improving(_coalition(game, coalition), _as_network(game.num_nodes, g).mask))


def network_erroneous_set(game: NetworkGame, coalition, g, mode=ImprovementMode.WEAK) -> frozenset[int]:
    return network_reachable(game, coalition, g) - network_improving_set(game, coalition, g, mode)


def find_strongly_stable(game: NetworkGame, mode=ImprovementMode.WEAK) -> list[int]:
    """Networks from which no coalition has an improving obtainable deviation."""
    dev = NetworkDeviations(game, mode)
    return [g for g in range(game.num_networks)
            if not any(dev.improving(s, g) for s in dev.coalitions)]


def _check_chain_cap(game: NetworkGame) -> None:
    if game.num_nodes > MAX_NODES_CHAIN:
        raise CapExceededError(f"network chain analysis is capped at {MAX_NODES_CHAIN} nodes, "
                               f"got {game.num_nodes}")


def network_recurrent_structure(game: NetworkGame, mode=ImprovementMode.WEAK) -> RecurrentStructure:
    return recurrent_structure(build_deviation_graph(game.deviation_structure(mode)))


def netgame_as_chain(game: NetworkGame, config: DynamicsConfig | None = None, epsilon=0) -> TransitionMatrix:
    _check_chain_cap(game)
    if to_rational(epsilon) == 0:
        return build_unperturbed(game, config)
    return build_perturbed(game, config, epsilon)


def validate_network_game(raw) -> NetworkGame:
    """Build a NetworkGame from a decoded document.

    Keys: ``nodes`` (int) and ``values``, a list of records
    ``[[[i, j], ...], u1, ..., un]`` with 1-based node numbers, one record per
    network.
    """
    n = raw.get("nodes")
    records = raw.get("values")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise GameValidationError([f"'nodes' must be a positive integer, got {n!r}"])
    if n > MAX_NODES_STABILITY:
        raise CapExceededError(f"network games are capped at {MAX_NODES_STABILITY} nodes, got {n}")
    if not isinstance(records, list):
        raise GameValidationError(["'values' must be a list of records"])
    defects = []
    table: dict[int, tuple[Fraction, ...]] = {}
    for r, rec in enumerate(records, start=1):
        if not isinstance(rec, list) or len(rec) != n + 1 or not isinstance(rec[0], list):
            defects.append(f"value record {r}: expected [[edge, ...], then {n} values]")
            continue
        edges = set()
        bad = None
        for e in rec[0]:
            if (not isinstance(e, list) or len(e) != 2
                    or not all(isinstance(x, int) and not isinstance(x, bool) for x in e)):
                bad = f"malformed edge {e!r}"
            elif e[0] == e[1]:
                bad = f"self-loop {e!r}"
            elif not all(1 <= x <= n for x in e):
                bad = f"edge {e!r} names a node outside 1..{n}"
            elif (min(e) - 1, max(e) - 1) in edges:
                bad = f"edge {e!r} listed twice"
            else:
                edges.add((min(e) - 1, max(e) - 1))
                continue
            break
        if bad:
            defects.append(f"value record {r}: {bad}")
            continue
        g = Network(n, frozenset(edges))
        try:
            values = tuple(to_rational(v) for v in rec[1:])
        except ValueError as exc:
            defects.append(f"value record {r}: {exc}")
            continue
        if g.mask in table:
            defects.append(f"duplicate value record for network {g.label()}")
            continue
        table[g.mask] = values
    total = 1 << (n * (n - 1) // 2)
    for k in range(total):
        if k not in table:
            defects.append(f"missing values for network {Network.from_mask(n, k).label()}")
    if defects:
        raise GameValidationError(defects)
    return NetworkGame(n, tuple(table[k] for k in range(total)))
