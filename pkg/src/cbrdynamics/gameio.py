"""Reading game files and rendering reports and CSV tables.

Game files are YAML (JSON is accepted too, being a subset).  A strategic
game document has the keys ``players``, ``actions`` and ``payoffs``; a
network game document has ``nodes`` and ``values``.  See README.md for the
full grammar.
"""

from __future__ import annotations

import csv
import io
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import yaml

from .errors import GrammarError
from .game import Game, validate_game
from .netform import NetworkGame, validate_network_game


def parse_game_file(text: str) -> Game | NetworkGame:
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise GrammarError(exc.problem or str(exc),
                           mark.line + 1 if mark else None,
                           mark.column + 1 if mark else None) from None
    except yaml.YAMLError as exc:
        raise GrammarError(str(exc)) from None
    if not isinstance(doc, dict):
        raise GrammarError("document must be a mapping with a 'players' or 'nodes' key", 1, 1)
    if "players" in doc and "nodes" in doc:
        raise GrammarError("document has both 'players' and 'nodes' keys")
    if "players" in doc:
        unknown = set(doc) - {"players", "actions", "payoffs", "title"}
        if unknown:
            raise GrammarError(f"unknown keys {sorted(unknown)} in game document")
        return validate_game(doc)
    if "nodes" in doc:
        unknown = set(doc) - {"nodes", "values", "title"}
        if unknown:
            raise GrammarError(f"unknown keys {sorted(unknown)} in network game document")
        return validate_network_game(doc)
    raise GrammarError("document needs a 'players' (strategic game) or 'nodes' (network game) key")


def load_game(path: str | Path) -> Game | NetworkGame:
    return parse_game_file(Path(path).read_text())


def fmt_rational(q) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def fmt_decimal(q, digits: int = 12) -> str:
    """Fixed-point rendering for display only."""
    if isinstance(q, float):
        return f"{q:.{digits}f}"
    q = Fraction(q)
    with localcontext() as ctx:
        ctx.prec = digits + 30
        value = Decimal(q.numerator) / Decimal(q.denominator)
        return format(value.quantize(Decimal(1).scaleb(-digits)), "f")


def fmt_epsilon(eps) -> str:
    eps = Fraction(eps)
    if eps.numerator == 1 and eps.denominator > 1:
        k = len(str(eps.denominator)) - 1
        if 10**k == eps.denominator:
            return f"1e-{k}"
    return fmt_rational(eps)


def csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()
