"""Finite strategic games with exact rational payoffs.

Profiles are tuples of 0-based action indices, ordered lexicographically with
player 0 as the most significant digit.  Internally most of the package works
with the integer position of a profile in that order (its *index*).
Coalitions are sorted tuples of 0-based player indices.
"""

from __future__ import annotations

import itertools
import math
import string
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence, Union

from .errors import CapExceededError, GameValidationError

Profile = tuple[int, ...]
Coalition = tuple[int, ...]
ProfileLike = Union[int, Sequence[int]]

MAX_PROFILES = 2**16
MAX_PLAYERS = 16


def to_rational(value) -> Fraction:
    """Convert an integer, Fraction or ``"p/q"`` / decimal string to a Fraction.

    Binary floats are refused: their value is rarely the one that was meant.
    """
    if isinstance(value, bool):
        raise ValueError(f"not a rational literal: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"not a rational literal: {value!r}") from None
    raise ValueError(f"not a rational literal: {value!r} (write it as an integer or 'p/q')")


def default_action_names(num_players: int, action_counts: Sequence[int]) -> tuple[tuple[str, ...], ...]:
    letters = string.ascii_lowercase
    names = []
    for i, m in enumerate(action_counts):
        prefix = letters[i] if num_players <= len(letters) else f"p{i + 1}_"
        names.append(tuple(f"{prefix}{k + 1}" for k in range(m)))
    return tuple(names)


def coalition_label(coalition: Iterable[int]) -> str:
    return "{" + ",".join(str(i + 1) for i in coalition) + "}"


def enumerate_coalitions(n: int) -> list[Coalition]:
    """All 2**n - 1 nonempty player subsets, by size and then lexicographically."""
    if n < 1:
        raise ValueError("a game needs at least one player")
    if n > MAX_PLAYERS:
        raise CapExceededError(f"coalition enumeration is capped at {MAX_PLAYERS} players, got {n}")
    players = range(n)
    return [c for k in range(1, n + 1) for c in itertools.combinations(players, k)]


@dataclass(frozen=True)
class Game:
    """An n-player finite game.

    ``payoffs[k][i]`` is player ``i``'s payoff at the profile with index ``k``.
    """

    action_counts: tuple[int, ...]
    payoffs: tuple[tuple[Fraction, ...], ...]
    action_names: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self):
        defects = _structural_defects(self.action_counts, self.payoffs)
        if defects:
            raise GameValidationError(defects)
        if not self.action_names:
            object.__setattr__(self, "action_names",
                               default_action_names(len(self.action_counts), self.action_counts))
        elif [len(a) for a in self.action_names] != list(self.action_counts):
            raise GameValidationError(["action name lists do not match action counts"])

    @property
    def num_players(self) -> int:
        return len(self.action_counts)

    @property
    def num_profiles(self) -> int:
        return len(self.payoffs)

    @property
    def strides(self) -> tuple[int, ...]:
        out = []
        stride = 1
        for m in reversed(self.action_counts):
            out.append(stride)
            stride *= m
        return tuple(reversed(out))

    def profile_at(self, index: int) -> Profile:
        if not 0 <= index < self.num_profiles:
            raise IndexError(f"profile index {index} out of range")
        out = []
        for m in reversed(self.action_counts):
            index, r = divmod(index, m)
            out.append(r)
        return tuple(reversed(out))

    def index_of(self, profile: ProfileLike) -> int:
        if isinstance(profile, int):
            if not 0 <= profile < self.num_profiles:
                raise IndexError(f"profile index {profile} out of range")
            return profile
        if len(profile) != self.num_players:
            raise ValueError(f"profile {tuple(profile)} has wrong length")
        k = 0
        for a, m in zip(profile, self.action_counts):
            if not 0 <= a < m:
                raise ValueError(f"profile {tuple(profile)} has an action out of range")
            k = k * m + a
        return k

    def payoff(self, player: int, profile: ProfileLike) -> Fraction:
        return self.payoffs[self.index_of(profile)][player]

    def payoff_vector(self, profile: ProfileLike) -> tuple[Fraction, ...]:
        return self.payoffs[self.index_of(profile)]

    def profile_label(self, profile: ProfileLike) -> str:
        p = self.profile_at(self.index_of(profile))
        return "(" + ",".join(self.action_names[i][a] for i, a in enumerate(p)) + ")"

    def profile_by_names(self, names: Sequence[str]) -> int:
        if len(names) != self.num_players:
            raise ValueError(f"profile {list(names)} has wrong length")
        return self.index_of(tuple(self.action_names[i].index(n) for i, n in enumerate(names)))

    def check_caps(self) -> None:
        if self.num_players > MAX_PLAYERS:
            raise CapExceededError(f"at most {MAX_PLAYERS} players supported, got {self.num_players}")
        if self.num_profiles > MAX_PROFILES:
            raise CapExceededError(f"at most {MAX_PROFILES} profiles supported, got {self.num_profiles}")

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_function(cls, action_counts: Sequence[int],
                      payoff: Callable[[Profile], Sequence], action_names=()) -> "Game":
        counts = tuple(action_counts)
        if math.prod(counts) > MAX_PROFILES:
            raise CapExceededError(f"at most {MAX_PROFILES} profiles supported")
        rows = tuple(tuple(to_rational(v) for v in payoff(p))
                     for p in itertools.product(*(range(m) for m in counts)))
        return cls(counts, rows, tuple(tuple(a) for a in action_names))

    @classmethod
    def from_bimatrix(cls, cells: Sequence[Sequence[Sequence]], action_names=()) -> "Game":
        """Two-player game from a row-major matrix of ``(u1, u2)`` cells."""
        counts = (len(cells), len(cells[0]))
        if any(len(row) != counts[1] for row in cells):
            raise GameValidationError(["bimatrix rows have different lengths"])
        return cls.from_function(counts, lambda p: cells[p[0]][p[1]], action_names)


def _structural_defects(action_counts, payoffs) -> list[str]:
    defects = []
    if len(action_counts) == 0:
        defects.append("game has zero players")
    for i, m in enumerate(action_counts):
        if not isinstance(m, int) or m < 1:
            defects.append(f"player {i + 1} has no actions")
    if defects:
        return defects
    expected = math.prod(action_counts)
    if len(payoffs) != expected:
        defects.append(f"payoff table has {len(payoffs)} rows, expected {expected}")
    for k, row in enumerate(payoffs):
        if len(row) != len(action_counts):
            defects.append(f"payoff row {k} has {len(row)} entries, expected {len(action_counts)}")
        elif not all(isinstance(v, Fraction) for v in row):
            defects.append(f"payoff row {k} contains non-rational values")
    return defects


def enumerate_profiles(game: Game) -> list[Profile]:
    return [game.profile_at(k) for k in range(game.num_profiles)]


def validate_game(raw: Mapping) -> Game:
    """Build a Game from a decoded game document.

    The document has keys ``players`` (int), ``actions`` (one list of action
    names per player) and ``payoffs`` (records ``[[name, ...], u1, ..., un]``).
    All defects found are reported together in one GameValidationError.
    """
    defects: list[str] = []
    n = raw.get("players")
    actions = raw.get("actions")
    records = raw.get("payoffs")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise GameValidationError([f"'players' must be a positive integer, got {n!r}"])
    if n > MAX_PLAYERS:
        raise CapExceededError(f"at most {MAX_PLAYERS} players supported, got {n}")
    if not isinstance(actions, list) or len(actions) != n:
        raise GameValidationError([f"'actions' must list action names for each of the {n} players"])
    names = []
    for i, acts in enumerate(actions):
        if not isinstance(acts, list) or not acts:
            defects.append(f"player {i + 1} has zero actions")
            continue
        acts = [str(a) for a in acts]
        if len(set(acts)) != len(acts):
            defects.append(f"player {i + 1} has duplicate action names")
        names.append(tuple(acts))
    if defects:
        raise GameValidationError(defects)
    counts = tuple(len(a) for a in names)
    total = math.prod(counts)
    if total > MAX_PROFILES:
        raise CapExceededError(f"at most {MAX_PROFILES} profiles supported, got {total}")
    if not isinstance(records, list):
        raise GameValidationError(["'payoffs' must be a list of records"])

    lookup = [{a: k for k, a in enumerate(acts)} for acts in names]
    table: dict[int, tuple[Fraction, ...]] = {}
    for r, rec in enumerate(records, start=1):
        if not isinstance(rec, list) or not rec or not isinstance(rec[0], list) or len(rec) > n + 1:
            defects.append(f"payoff record {r}: expected [[action per player], then {n} payoffs]")
            continue
        prof_names = [str(a) for a in rec[0]]
        if len(prof_names) != n:
            defects.append(f"payoff record {r}: profile {prof_names} does not name one action per player")
            continue
        try:
            prof = tuple(lookup[i][a] for i, a in enumerate(prof_names))
        except KeyError as exc:
            defects.append(f"payoff record {r}: unknown action {exc.args[0]!r}")
            continue
        label = "(" + ",".join(prof_names) + ")"
        values = []
        for i, v in enumerate(rec[1:]):
            try:
                values.append(to_rational(v))
            except ValueError as exc:
                defects.append(f"payoff record {r}, player {i + 1}: {exc}")
        for i in range(len(rec) - 1, n):
            defects.append(f"missing payoff (player {i + 1}, profile {label})")
        if len(values) != n:
            continue
        k = 0
        for a, m in zip(prof, counts):
            k = k * m + a
        if k in table:
            defects.append(f"duplicate payoff record for profile {label}")
            continue
        table[k] = tuple(values)

    placeholder = tuple(Fraction(0) for _ in range(n))
    for k, prof in enumerate(itertools.product(*(range(m) for m in counts))):
        if k not in table:
            label = "(" + ",".join(names[i][a] for i, a in enumerate(prof)) + ")"
            # one defect per player so the message says exactly what is absent
            for i in range(n):
                defects.append(f"missing payoff (player {i + 1}, profile {label})")
            table[k] = placeholder
    if defects:
        raise GameValidationError(defects)
    return Game(counts, tuple(table[k] for k in range(total)), tuple(names))
