"""Coalitional deviation sets: reachable, improving and erroneous moves."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Protocol, Sequence

from .game import Coalition, Game, ProfileLike, enumerate_coalitions


class ImprovementMode(enum.Enum):
    """STRICT: every coalition member gains.  WEAK: nobody loses, somebody gains."""

    STRICT = "strict"
    WEAK = "weak"

    @classmethod
    def parse(cls, value) -> "ImprovementMode":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


def improves(old: Sequence[Fraction], new: Sequence[Fraction],
             members: Sequence[int], mode: ImprovementMode) -> bool:
    if mode is ImprovementMode.STRICT:
        return all(new[i] > old[i] for i in members)
    gained = False
    for i in members:
        if new[i] < old[i]:
            return False
        if new[i] > old[i]:
            gained = True
    return gained


@dataclass(frozen=True)
class DeviationSet:
    base: int
    coalition: Coalition
    mode: ImprovementMode | None
    kind: str
    members: frozenset[int]

    def __contains__(self, profile) -> bool:
        return profile in self.members

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[int]:
        return iter(sorted(self.members))


def _check_coalition(game: Game, coalition) -> Coalition:
    s = tuple(sorted(set(coalition)))
    if not s or s[0] < 0 or s[-1] >= game.num_players:
        raise ValueError(f"invalid coalition {coalition!r} for a {game.num_players}-player game")
    return s


def reachable_indices(game: Game, coalition: Coalition, base: int) -> list[int]:
    """Indices of A(S, a) in ascending order."""
    strides = game.strides
    prof = game.profile_at(base)
    fixed = base - sum(prof[i] * strides[i] for i in coalition)
    return [fixed + sum(x * strides[i] for x, i in zip(choice, coalition))
            for choice in itertools.product(*(range(game.action_counts[i]) for i in coalition))]


def reachable_profiles(game: Game, coalition, profile: ProfileLike) -> DeviationSet:
    s = _check_coalition(game, coalition)
    a = game.index_of(profile)
    return DeviationSet(a, s, None, "reachable", frozenset(reachable_indices(game, s, a)))


def improving_set(game: Game, coalition, profile: ProfileLike,
                  mode: ImprovementMode = ImprovementMode.STRICT) -> DeviationSet:
    s = _check_coalition(game, coalition)
    a = game.index_of(profile)
    mode = ImprovementMode.parse(mode)
    base = game.payoffs[a]
    members = frozenset(k for k in reachable_indices(game, s, a)
                        if improves(base, game.payoffs[k], s, mode))
    return DeviationSet(a, s, mode, "improving", members)


def erroneous_set(game: Game, coalition, profile: ProfileLike,
                  mode: ImprovementMode = ImprovementMode.STRICT) -> DeviationSet:
    reach = reachable_profiles(game, coalition, profile)
    better = improving_set(game, coalition, profile, mode)
    return DeviationSet(reach.base, reach.coalition, better.mode, "erroneous",
                        reach.members - better.members)


class DeviationStructure(Protocol):
    """What the graph and chain machinery needs from a game-like object.

    States are integers ``0..num_states-1``.  ``reachable`` and ``improving``
    return ascending tuples of states.
    """

    mode: ImprovementMode
    coalitions: list[Coalition]

    @property
    def num_states(self) -> int: ...

    def reachable(self, coalition: Coalition, state: int) -> tuple[int, ...]: ...

    def improving(self, coalition: Coalition, state: int) -> tuple[int, ...]: ...

    def label(self, state: int) -> str: ...


class GameDeviations:
    """Memoised profile-level deviation sets for one game and one mode."""

    def __init__(self, game: Game, mode: ImprovementMode = ImprovementMode.STRICT):
        game.check_caps()
        self.game = game
        self.mode = ImprovementMode.parse(mode)
        self.coalitions = enumerate_coalitions(game.num_players)
        self._reach: dict[tuple[Coalition, int], tuple[int, ...]] = {}
        self._better: dict[tuple[Coalition, int], tuple[int, ...]] = {}

    @property
    def num_states(self) -> int:
        return self.game.num_profiles

    def reachable(self, coalition: Coalition, state: int) -> tuple[int, ...]:
        key = (coalition, state)
        out = self._reach.get(key)
        if out is None:
            out = self._reach[key] = tuple(reachable_indices(self.game, coalition, state))
        return out

    def improving(self, coalition: Coalition, state: int) -> tuple[int, ...]:
        key = (coalition, state)
        out = self._better.get(key)
        if out is None:
            base = self.game.payoffs[state]
            pay = self.game.payoffs
            out = tuple(k for k in self.reachable(coalition, state)
                        if improves(base, pay[k], coalition, self.mode))
            self._better[key] = out
        return out

    def label(self, state: int) -> str:
        return self.game.profile_label(state)


def structure_for(obj, mode=None) -> DeviationStructure:
    """Wrap a Game or NetworkGame; pass an existing structure through.

    ``mode=None`` picks the object's natural notion: STRICT for games, WEAK
    for network games.
    """
    if isinstance(obj, Game):
        return GameDeviations(obj, ImprovementMode.STRICT if mode is None else mode)
    if hasattr(obj, "deviation_structure"):
        return obj.deviation_structure(mode)
    if hasattr(obj, "improving") and hasattr(obj, "coalitions"):
        if mode is not None and ImprovementMode.parse(mode) is not obj.mode:
            raise ValueError("deviation structure was built for a different mode")
        return obj
    raise TypeError(f"cannot derive deviation sets from {type(obj).__name__}")
