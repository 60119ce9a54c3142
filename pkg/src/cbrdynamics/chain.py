"""Markov chains of coalitional better-response dynamics.

``build_unperturbed`` and ``build_perturbed`` produce exact rational transition
matrices over the states of a game (profiles) or network game (networks).
Stationary distributions are solved exactly by Gaussian elimination over
Fractions up to ``EXACT_SOLVE_LIMIT`` states.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .deviation import DeviationStructure, ImprovementMode, structure_for
from .equilibrium import RecurrentStructure, classify_sinks, sink_components
from .errors import CapExceededError, ConfigError, EpsilonRangeError
from .game import Coalition, coalition_label, to_rational

log = logging.getLogger(__name__)

ChoiceRule = Callable[[Coalition, int, Sequence[int]], Mapping[int, Fraction]]

DEFAULT_SWEEP = tuple(Fraction(1, 10**k) for k in range(1, 7))
STABLE_THRESHOLD = 1e-3
EXACT_SOLVE_LIMIT = 512
MAX_TREE_CLASSES = 8


def uniform_choice(coalition: Coalition, state: int, support: Sequence[int]) -> dict[int, Fraction]:
    q = Fraction(1, len(support))
    return {t: q for t in support}


@dataclass
class DynamicsConfig:
    """Free parameters of the dynamics.

    ``coalition_dist`` maps each active coalition to p_S > 0 (default: uniform
    over all coalitions).  ``improvement_choice`` and ``error_choice`` return a
    distribution over the support they are handed; ``error_choice`` is used
    both for the erroneous set and for the erroneous set minus the current
    state.  ``mutation_scale`` is f(S, a), either a constant or a callable.
    ``mode=None`` uses the natural mode of the object analysed.
    """

    mode: ImprovementMode | str | None = None
    coalition_dist: Mapping[Coalition, Fraction] | None = None
    improvement_choice: ChoiceRule = uniform_choice
    error_choice: ChoiceRule = uniform_choice
    mutation_scale: Callable[[Coalition, int], Fraction] | Fraction | int = 1

    def scale(self, coalition: Coalition, state: int) -> Fraction:
        f = self.mutation_scale
        value = to_rational(f(coalition, state) if callable(f) else f)
        if value <= 0:
            raise ConfigError(f"mutation scale must be positive, got {value} at "
                              f"coalition {coalition_label(coalition)}, state {state}")
        return value


@dataclass
class _Move:
    p: Fraction
    f: Fraction
    improving: dict[int, Fraction]
    erroneous: dict[int, Fraction]
    stray: dict[int, Fraction]  # erroneous minus the current state


def _checked(rule: ChoiceRule, coalition, state, support, what) -> dict[int, Fraction]:
    if not support:
        return {}
    dist = {t: to_rational(q) for t, q in rule(coalition, state, support).items()}
    if set(dist) != set(support) or any(q <= 0 for q in dist.values()) or sum(dist.values()) != 1:
        raise ConfigError(f"config support mismatch: {what} rule at coalition "
                          f"{coalition_label(coalition)}, state {state} is not a positive "
                          f"distribution over its {len(support)}-element support")
    return dist


class Dynamics:
    """Per-state, per-coalition move distributions for one object and config."""

    def __init__(self, obj, config: DynamicsConfig | None = None):
        config = config or DynamicsConfig()
        self.config = config
        self.dev: DeviationStructure = structure_for(obj, config.mode)
        check = getattr(self.dev, "check_chain_caps", None)
        if check is not None:
            check()
        coalitions = self.dev.coalitions
        if config.coalition_dist is None:
            dist = {s: Fraction(1, len(coalitions)) for s in coalitions}
        else:
            dist = {tuple(sorted(s)): to_rational(p) for s, p in config.coalition_dist.items()}
            unknown = set(dist) - set(coalitions)
            if unknown:
                raise ConfigError(f"unknown coalitions in coalition_dist: {sorted(unknown)}")
            if any(p <= 0 for p in dist.values()) or sum(dist.values()) != 1:
                raise ConfigError("coalition_dist must be positive and sum to 1")
        self.coalitions = [s for s in coalitions if s in dist]
        self.coalition_probs = [dist[s] for s in self.coalitions]
        self.moves: list[list[_Move]] = []
        for a in range(self.dev.num_states):
            row = []
            for s, p in zip(self.coalitions, self.coalition_probs):
                better = self.dev.improving(s, a)
                better_set = set(better)
                worse = [t for t in self.dev.reachable(s, a) if t not in better_set]
                stray = [t for t in worse if t != a]
                row.append(_Move(
                    p, config.scale(s, a),
                    _checked(config.improvement_choice, s, a, better, "improvement"),
                    _checked(config.error_choice, s, a, worse, "error"),
                    _checked(config.error_choice, s, a, stray, "error"),
                ))
            self.moves.append(row)
        self.max_scale = max(m.f for row in self.moves for m in row)

    @property
    def num_states(self) -> int:
        return self.dev.num_states

    def labels(self) -> tuple[str, ...]:
        return tuple(self.dev.label(k) for k in range(self.num_states))

    def check_epsilon(self, epsilon, allow_zero: bool = False) -> Fraction:
        eps = to_rational(epsilon)
        low_ok = eps >= 0 if allow_zero else eps > 0
        if not low_ok or eps * self.max_scale >= 1:
            bound = Fraction(1) / self.max_scale
            raise EpsilonRangeError(f"epsilon {eps} outside {'[0' if allow_zero else '(0'}, {bound})")
        return eps


@dataclass
class TransitionMatrix:
    labels: tuple[str, ...]
    rows: list[dict[int, Fraction]]
    epsilon: Fraction

    @property
    def size(self) -> int:
        return len(self.rows)

    def __getitem__(self, key: tuple[int, int]) -> Fraction:
        a, b = key
        return self.rows[a].get(b, Fraction(0))

    def dense(self) -> list[list[Fraction]]:
        n = self.size
        return [[row.get(b, Fraction(0)) for b in range(n)] for row in self.rows]

    def to_numpy(self) -> np.ndarray:
        out = np.zeros((self.size, self.size))
        for a, row in enumerate(self.rows):
            for b, q in row.items():
                out[a, b] = float(q)
        return out

    def row_sums(self) -> list[Fraction]:
        return [sum(row.values(), Fraction(0)) for row in self.rows]

    def successors(self) -> list[list[int]]:
        return [sorted(b for b, q in row.items() if q and b != a) for a, row in enumerate(self.rows)]


def _add(row: dict[int, Fraction], state: int, q: Fraction) -> None:
    if q:
        row[state] = row.get(state, Fraction(0)) + q


def _as_dynamics(obj, config) -> Dynamics:
    return obj if isinstance(obj, Dynamics) else Dynamics(obj, config)


def build_unperturbed(obj, config: DynamicsConfig | None = None) -> TransitionMatrix:
    dyn = _as_dynamics(obj, config)
    rows = []
    for a, moves in enumerate(dyn.moves):
        row: dict[int, Fraction] = {}
        for m in moves:
            if m.improving:
                for t, q in m.improving.items():
                    _add(row, t, m.p * q)
            else:
                _add(row, a, m.p)
        rows.append(row)
    return TransitionMatrix(dyn.labels(), rows, Fraction(0))


def build_perturbed(obj, config: DynamicsConfig | None = None, epsilon=Fraction(1, 100)) -> TransitionMatrix:
    """Transition law with mutations at rate ``f(S, a) * epsilon``.

    When the erroneous set minus the current state is empty (a coalition
    whose members have a single action each) the mutation mass stays put.
    """
    dyn = _as_dynamics(obj, config)
    eps = dyn.check_epsilon(epsilon, allow_zero=True)
    rows = []
    for a, moves in enumerate(dyn.moves):
        row: dict[int, Fraction] = {}
        for m in moves:
            err = m.f * eps
            if m.improving:
                for t, q in m.improving.items():
                    _add(row, t, m.p * (1 - err) * q)
                for t, q in m.erroneous.items():
                    _add(row, t, m.p * err * q)
            else:
                _add(row, a, m.p * (1 - err))
                if m.stray:
                    for t, q in m.stray.items():
                        _add(row, t, m.p * err * q)
                else:
                    _add(row, a, m.p * err)
        rows.append(row)
    return TransitionMatrix(dyn.labels(), rows, eps)


# -- stationary distributions --------------------------------------------------

@dataclass(frozen=True)
class StationaryDistribution:
    probabilities: tuple
    epsilon: Fraction
    exact: bool
    residual: float = 0.0

    def __getitem__(self, state: int):
        return self.probabilities[state]

    def as_floats(self) -> np.ndarray:
        return np.array([float(p) for p in self.probabilities])


def _solve_exact(dense: list[list[Fraction]]) -> list[Fraction]:
    """Solve mu P = mu, sum(mu) = 1 exactly.

    Fraction-free (Bareiss) Gaussian elimination: every equation is scaled to
    integers first, so all intermediate divisions are exact.
    """
    n = len(dense)
    # rows of (P^T - I), last equation replaced by the normalisation
    rows = [[dense[j][i] - (1 if i == j else 0) for j in range(n)] + [Fraction(0)] for i in range(n)]
    rows[-1] = [Fraction(1)] * (n + 1)
    a = []
    for r in rows:
        scale = math.lcm(*(q.denominator for q in r))
        a.append([q.numerator * (scale // q.denominator) for q in r])
    prev = 1
    for k in range(n):
        pivot = next((r for r in range(k, n) if a[r][k]), None)
        if pivot is None:
            raise ArithmeticError("singular stationary system: chain has no unique stationary distribution")
        a[k], a[pivot] = a[pivot], a[k]
        rk = a[k]
        akk = rk[k]
        for i in range(k + 1, n):
            ri = a[i]
            aik = ri[k]
            for j in range(k + 1, n + 1):
                ri[j] = (ri[j] * akk - aik * rk[j]) // prev
            ri[k] = 0
        prev = akk
    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        acc = Fraction(a[i][n]) - sum((a[i][j] * x[j] for j in range(i + 1, n)), Fraction(0))
        x[i] = acc / a[i][i]
    return x


def _solve_float(matrix: TransitionMatrix, tol: float = 1e-12, max_iter: int = 100_000) -> tuple[np.ndarray, float]:
    from scipy import sparse
    from scipy.sparse.linalg import spsolve

    n = matrix.size
    r, c, v = [], [], []
    for a, row in enumerate(matrix.rows):
        for b, q in row.items():
            r.append(a)
            c.append(b)
            v.append(float(q))
    p = sparse.csr_matrix((v, (r, c)), shape=(n, n))
    system = (p.T - sparse.identity(n)).tolil()
    system[n - 1, :] = np.ones(n)
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    mu = spsolve(system.tocsc(), rhs)
    mu = np.clip(mu, 0.0, None)
    mu /= mu.sum()
    residual = float(np.abs(p.T @ mu - mu).max())
    for _ in range(max_iter):
        if residual <= tol:
            break
        mu = p.T @ mu
        mu /= mu.sum()
        residual = float(np.abs(p.T @ mu - mu).max())
    if residual > tol:
        log.warning("stationary solve residual %.3g above tolerance %.1g", residual, tol)
    return mu, residual


def stationary(matrix: TransitionMatrix, recurrent_class: Sequence[int] | None = None) -> StationaryDistribution:
    """Unique stationary distribution of ``matrix``.

    At epsilon = 0 the chain may have several recurrent classes; pass the one
    to solve on as ``recurrent_class`` (it must be closed).
    """
    n = matrix.size
    states = list(range(n))
    if recurrent_class is not None:
        states = sorted(recurrent_class)
        inside = set(states)
        for a in states:
            if any(q and b not in inside for b, q in matrix.rows[a].items()):
                raise ValueError(f"state {a} leaves the designated class; the class is not closed")
    elif matrix.epsilon == 0:
        classes = sink_components(n, matrix.successors())
        if len(classes) != 1:
            raise ValueError(f"unperturbed chain has {len(classes)} recurrent classes; designate one")
        states = list(classes[0])
    pos = {s: k for k, s in enumerate(states)}
    sub = TransitionMatrix(tuple(matrix.labels[s] for s in states),
                           [{pos[b]: q for b, q in matrix.rows[s].items() if b in pos} for s in states],
                           matrix.epsilon)
    if len(states) <= EXACT_SOLVE_LIMIT:
        mu = _solve_exact(sub.dense())
        full = [Fraction(0)] * n
        for s, q in zip(states, mu):
            full[s] = q
        return StationaryDistribution(tuple(full), matrix.epsilon, True, 0.0)
    mu, residual = _solve_float(sub)
    full = np.zeros(n)
    full[states] = mu
    return StationaryDistribution(tuple(float(x) for x in full), matrix.epsilon, False, residual)


def matrix_recurrent_structure(matrix: TransitionMatrix) -> RecurrentStructure:
    """Recurrent classes read off the support of an (unperturbed) matrix."""
    return classify_sinks(matrix.size, sink_components(matrix.size, matrix.successors()))


# -- stochastic stability ------------------------------------------------------

@dataclass
class StableSetReport:
    sweep: tuple[Fraction, ...]
    distributions: list[StationaryDistribution]
    numeric: frozenset[int]
    structural: frozenset[int]
    structure: RecurrentStructure
    labels: tuple[str, ...]
    threshold: float = STABLE_THRESHOLD

    @property
    def agree(self) -> bool:
        return self.numeric == self.structural

    @property
    def stable(self) -> frozenset[int]:
        return self.structural

    @property
    def diagnostic(self) -> str:
        if self.agree:
            return ""
        extra = sorted(self.numeric - self.structural)
        missing = sorted(self.structural - self.numeric)
        return (f"sweep disagreement: numerically stable but not recurrent {[self.labels[k] for k in extra]}; "
                f"recurrent but numerically vanishing {[self.labels[k] for k in missing]}")

    def mass(self, states, index: int = -1) -> float:
        dist = self.distributions[index]
        return float(sum(dist.probabilities[k] for k in states))


def _vanishing(masses: Sequence[float], sweep: Sequence[Fraction], threshold: float) -> bool:
    # both signals must agree: small mass at the smallest epsilon and an O(eps) trend
    last = masses[-1]
    if last >= threshold:
        return False
    if len(masses) < 2:
        return True
    prev = masses[-2]
    # log-log slope of mass against epsilon: ~0 for O(1) mass, >=1 for O(eps) mass
    slope = math.log(prev / last) / math.log(float(sweep[-2]) / float(sweep[-1]))
    return slope >= 0.5


def check_sweep(dyn: Dynamics, sweep) -> tuple[Fraction, ...]:
    eps = tuple(dyn.check_epsilon(e) for e in sweep)
    if not eps:
        raise ValueError("epsilon sweep is empty")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilon sweep must be strictly decreasing")
    return eps


def stochastically_stable_set(obj, config: DynamicsConfig | None = None, sweep=DEFAULT_SWEEP,
                              threshold: float = STABLE_THRESHOLD) -> StableSetReport:
    """Certify the stochastically stable states two ways.

    Numerically, a state is vanishing when its stationary mass at the
    smallest epsilon is below ``threshold`` and also shrinks roughly in
    proportion to epsilon over the last step of the sweep; every other state
    is stable.  Structurally, the stable set is the union of recurrent classes
    of the unperturbed chain.  ``report.agree`` tells whether they match.
    """
    dyn = _as_dynamics(obj, config)
    eps = check_sweep(dyn, sweep)
    p0 = build_unperturbed(dyn)
    structure = matrix_recurrent_structure(p0)
    dists = [stationary(build_perturbed(dyn, epsilon=e)) for e in eps]
    numeric = frozenset(
        k for k in range(dyn.num_states)
        if not _vanishing([float(d.probabilities[k]) for d in dists], eps, threshold))
    report = StableSetReport(eps, dists, numeric, structure.recurrent_states, structure,
                             dyn.labels(), threshold)
    if not report.agree:
        log.warning(report.diagnostic)
    return report


# -- resistance and stochastic potential ---------------------------------------

@dataclass
class ResistanceAnalysis:
    labels: tuple[str, ...]
    resistance: list[list[int | None]]
    structure: RecurrentStructure
    class_resistance: list[list[int | None]]
    stochastic_potential: list[int | None]
    discrepancies: list[str] = field(default_factory=list)

    @property
    def num_classes(self) -> int:
        return self.structure.num_classes


def one_step_resistance(dyn: Dynamics) -> list[list[int | None]]:
    """0 for moves possible without mistakes, 1 for moves needing one, else None."""
    n = dyn.num_states
    out: list[list[int | None]] = [[None] * n for _ in range(n)]
    for a, moves in enumerate(dyn.moves):
        out[a][a] = 0
        for m in moves:
            mutated = m.erroneous if m.improving else m.stray
            for t in mutated:
                if out[a][t] is None:
                    out[a][t] = 1
        for m in moves:
            for t in m.improving:
                out[a][t] = 0
    return out


def _path_resistance(resistance, sources: Sequence[int], targets: set[int]) -> int | None:
    # 0-1 shortest path, multi-source
    n = len(resistance)
    dist = [math.inf] * n
    dq = deque()
    for s in sources:
        dist[s] = 0
        dq.append(s)
    while dq:
        a = dq.popleft()
        if a in targets:
            return int(dist[a])
        for b, w in enumerate(resistance[a]):
            if w is None or b == a:
                continue
            if dist[a] + w < dist[b]:
                dist[b] = dist[a] + w
                (dq.appendleft if w == 0 else dq.append)(b)
    return None


def min_rooted_tree(weights: Sequence[Sequence[int | None]], root: int) -> int | None:
    """Least total weight of a spanning tree with every node's path ending at ``root``.

    Exhaustive over parent assignments with branch-and-bound; ``None`` weights
    mean the edge is absent.  Returns None when no such tree exists.
    """
    j = len(weights)
    others = [v for v in range(j) if v != root]
    options = {v: sorted((weights[v][u], u) for u in range(j) if u != v and weights[v][u] is not None)
               for v in others}
    if any(not options[v] for v in others):
        return None
    floor = {v: options[v][0][0] for v in others}
    parent: dict[int, int] = {}
    best = [math.inf]

    def creates_cycle(v: int, u: int) -> bool:
        while u in parent:
            if u == v:
                return True
            u = parent[u]
        return u == v

    def search(k: int, total: int) -> None:
        if k == len(others):
            # acyclic with a parent for every non-root node: a rooted tree
            best[0] = min(best[0], total)
            return
        if total + sum(floor[v] for v in others[k:]) >= best[0]:
            return
        v = others[k]
        for w, u in options[v]:
            if creates_cycle(v, u):
                continue
            parent[v] = u
            search(k + 1, total + w)
            del parent[v]

    search(0, 0)
    return None if best[0] is math.inf else int(best[0])


def resistance_analysis(obj, config: DynamicsConfig | None = None) -> ResistanceAnalysis:
    dyn = _as_dynamics(obj, config)
    resistance = one_step_resistance(dyn)
    structure = matrix_recurrent_structure(build_unperturbed(dyn))
    classes = [c.members for c in structure.classes]
    j = len(classes)
    if j > MAX_TREE_CLASSES:
        raise CapExceededError(f"tree enumeration is capped at {MAX_TREE_CLASSES} recurrent classes, got {j}")
    reduced: list[list[int | None]] = [[None] * j for _ in range(j)]
    for i in range(j):
        for k in range(j):
            if i != k:
                reduced[i][k] = _path_resistance(resistance, classes[i], set(classes[k]))
    potentials = [min_rooted_tree(reduced, i) for i in range(j)]
    problems = []
    for i in range(j):
        for k in range(j):
            if i != k and reduced[i][k] != 1:
                problems.append(f"resistance from class {i} to class {k} is {reduced[i][k]}, not 1")
    for i, pot in enumerate(potentials):
        if pot != j - 1:
            problems.append(f"stochastic potential of class {i} is {pot}, not J-1 = {j - 1}")
    return ResistanceAnalysis(dyn.labels(), resistance, structure, reduced, potentials, problems)


# -- simulation -------------------------------------------------------------------

@dataclass
class SimulationResult:
    labels: tuple[str, ...]
    counts: np.ndarray
    start: int
    final: int
    coalitions: list[Coalition]
    trajectory: dict[str, np.ndarray] | None = None

    @property
    def horizon(self) -> int:
        return int(self.counts.sum())

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.counts.sum()


def _sampler(dist: dict[int, Fraction]):
    if not dist:
        return None
    targets = np.array(sorted(dist), dtype=np.int64)
    cum = np.cumsum([float(dist[t]) for t in targets])
    cum[-1] = 1.0
    return targets, cum


def simulate(obj, config: DynamicsConfig | None = None, epsilon=0, horizon: int = 1000,
             seed: int | np.random.SeedSequence | None = 0, start: int = 0,
             record: bool = False) -> SimulationResult:
    """Sample one path X_1..X_T of the dynamics and count visits.

    Each step draws a coalition from p_S, then with probability f(S, a)*eps
    makes an erroneous move, otherwise an improving one (or stays put).
    ``record=True`` keeps the per-step coalition index, mutation flag and state.
    """
    dyn = _as_dynamics(obj, config)
    eps = float(dyn.check_epsilon(epsilon, allow_zero=True))
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if not 0 <= start < dyn.num_states:
        raise ValueError(f"start state {start} out of range")
    rng = np.random.default_rng(seed)
    coal_cum = np.cumsum([float(p) for p in dyn.coalition_probs])
    coal_cum[-1] = 1.0
    table = [[(m.f * eps if eps else 0.0, _sampler(m.improving),
               _sampler(m.erroneous if m.improving else m.stray)) for m in row] for row in dyn.moves]
    counts = np.zeros(dyn.num_states, dtype=np.int64)
    if record:
        trail_s = np.empty(horizon, dtype=np.int64)
        trail_m = np.empty(horizon, dtype=bool)
        trail_x = np.empty(horizon, dtype=np.int64)
    state = start
    chunk = 65536
    done = 0
    while done < horizon:
        size = min(chunk, horizon - done)
        draws = rng.random((size, 3))
        picks = np.searchsorted(coal_cum, draws[:, 0], side="right")
        for k in range(size):
            s = int(picks[k])
            rate, better, worse = table[state][s]
            mutated = draws[k, 1] < rate
            pool = worse if mutated else better
            if pool is not None:
                targets, cum = pool
                state = int(targets[np.searchsorted(cum, draws[k, 2], side="right")])
            counts[state] += 1
            if record:
                trail_s[done + k] = s
                trail_m[done + k] = mutated
                trail_x[done + k] = state
        done += size
    trajectory = None
    if record:
        trajectory = {"coalition": trail_s, "mutated": trail_m, "state": trail_x}
    return SimulationResult(dyn.labels(), counts, start, state, list(dyn.coalitions), trajectory)


def simulate_replicas(obj, config: DynamicsConfig | None = None, epsilon=0, horizon: int = 1000,
                      seed: int = 0, replicas: int = 4, start: int = 0) -> np.ndarray:
    """Merged visit counts of independent replicas with spawned seed streams."""
    dyn = _as_dynamics(obj, config)
    streams = np.random.SeedSequence(seed).spawn(replicas)
    total = np.zeros(dyn.num_states, dtype=np.int64)
    for ss in streams:
        total += simulate(dyn, epsilon=epsilon, horizon=horizon, seed=ss, start=start).counts
    return total


def total_variation(p: Sequence[float], q: Sequence[float]) -> float:
    return 0.5 * float(np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float)).sum())
