"""Command-line front end.

Exit codes: 0 success, 1 usage, 2 parse, 3 validation, 4 cap exceeded.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from . import chain, equilibrium
from .deviation import ImprovementMode
from .errors import CBRError, EpsilonRangeError, GrammarError
from .game import Game, coalition_label
from .gameio import csv_text, fmt_decimal, fmt_epsilon, fmt_rational, parse_game_file
from .netform import NetworkGame, find_strongly_stable

COMMANDS = ("equilibria", "graph", "chain", "stable", "simulate", "netform")


class UsageError(CBRError):
    exit_code = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def parse_eps_list(text: str) -> list[Fraction]:
    """``1e-1,1e-3`` or the decade range ``1e-1..1e-6``."""
    try:
        if ".." in text:
            lo, hi = (Fraction(part.strip()) for part in text.split(".."))
            if lo <= 0 or hi <= 0:
                raise ValueError
            out = [lo]
            while out[-1] > hi:
                out.append(out[-1] / 10)
            if out[-1] != hi:
                raise EpsilonRangeError(f"range {text} is not a sequence of decades")
            return out
        return [Fraction(part.strip()) for part in text.split(",") if part.strip()]
    except (ValueError, ZeroDivisionError):
        raise EpsilonRangeError(f"cannot read epsilon list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cbrdynamics", description="Coalitional better-response dynamics analysis.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, fmts, helptext in (
            ("equilibria", ("report",), "strong equilibria and closed cycles"),
            ("graph", ("dot", "report", "csv"), "improving-deviation graph"),
            ("chain", ("report", "csv"), "transition matrix or resistance matrix"),
            ("stable", ("report", "csv"), "stochastically stable set from an epsilon sweep"),
            ("simulate", ("report", "csv"), "seeded sample path of the dynamics"),
            ("netform", ("report",), "network formation analysis")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("input", help="game or network game file (YAML/JSON)")
        sp.add_argument("--mode", choices=("strict", "weak"), default=None,
                        help="improvement notion (default: strict for games, weak for networks)")
        sp.add_argument("--format", choices=fmts, default=fmts[0])
        sp.add_argument("--output", "-o", help="write the artifact here instead of stdout")
        if name in ("chain", "simulate"):
            sp.add_argument("--eps", default="0", help="mutation rate (default 0)")
        if name in ("stable", "netform"):
            sp.add_argument("--eps", default="1e-1..1e-6", help="decreasing sweep, list or decade range")
        if name == "chain":
            sp.add_argument("--resistance", action="store_true", help="emit the one-step resistance matrix")
        if name == "simulate":
            sp.add_argument("--horizon", type=int, required=True)
            sp.add_argument("--seed", type=int, required=True)
            sp.add_argument("--start", default=None, help="start state label (default: first state)")
    return p


# -- report helpers --------------------------------------------------------------

def _mode(args, obj) -> ImprovementMode:
    if args.mode:
        return ImprovementMode(args.mode)
    return ImprovementMode.WEAK if isinstance(obj, NetworkGame) else ImprovementMode.STRICT


def _noun(obj, count: int) -> str:
    word = "network" if isinstance(obj, NetworkGame) else "profile"
    return f"{count} {word}{'' if count == 1 else 's'}"


def _eq_name(obj, mode) -> str:
    if isinstance(obj, NetworkGame):
        return "STRONGLY STABLE"
    return "SNE" if mode is ImprovementMode.STRICT else "SSNE"


def _describe(obj) -> str:
    if isinstance(obj, NetworkGame):
        return f"network game: {obj.num_nodes} nodes, {obj.num_networks} networks"
    players = "1 player" if obj.num_players == 1 else f"{obj.num_players} players"
    return (f"game: {players}, actions "
            f"{'x'.join(map(str, obj.action_counts))}, {_noun(obj, obj.num_profiles)}")


def _class_summary(structure, members) -> str:
    eqs = sum(1 for c in structure.classes if c.kind == equilibrium.EQUILIBRIUM and set(c.members) <= members)
    cyc = sum(1 for c in structure.classes if c.kind == equilibrium.CLOSED_CYCLE and set(c.members) <= members)
    if eqs and cyc:
        return (f"{eqs} equilibri{'um' if eqs == 1 else 'a'}, "
                f"{cyc} closed cycle{'' if cyc == 1 else 's'}")
    if eqs:
        return "equilibrium" if eqs == 1 else f"{eqs} equilibria"
    if cyc:
        return "closed cycle" if cyc == 1 else f"{cyc} closed cycles"
    return "none"


def _structure_lines(obj, structure, labels, mode) -> list[str]:
    lines = [f"{_eq_name(obj, mode)}: {len(structure.equilibria)}"]
    lines += [f"  {labels[k]}" for k in structure.equilibria]
    lines.append(f"CLOSED CYCLES: {len(structure.cycles)}")
    lines += ["  {" + ", ".join(labels[k] for k in c) + "}" for c in structure.cycles]
    lines.append(f"TRANSIENT: {_noun(obj, len(structure.transient))}")
    return lines


def _state_of(labels, text: str) -> int:
    key = text.replace(" ", "")
    for k, label in enumerate(labels):
        if label.replace(" ", "") == key:
            return k
    raise UsageError(f"unknown state {text!r}")


# -- commands --------------------------------------------------------------------

def cmd_equilibria(obj, args) -> str:
    mode = _mode(args, obj)
    graph = equilibrium.build_deviation_graph(obj, mode)
    structure = equilibrium.recurrent_structure(graph)
    lines = [_describe(obj), f"mode: {mode.value}"]
    lines += _structure_lines(obj, structure, graph.labels, mode)
    if isinstance(obj, Game):
        check = equilibrium.equilibria_consistency_check(obj, mode)
        lines.append(f"elimination scan agrees with deviation graph: {'yes' if check.passed else 'NO'}")
        try:
            dom = equilibrium.dominance(obj)
        except ValueError:
            dom = None
        if dom is not None:
            name = lambda k: "none" if k is None else graph.labels[k]
            lines.append(f"payoff dominant: {name(dom.payoff_dominant)}")
            lines.append(f"risk dominant: {name(dom.risk_dominant)}")
            if dom.r1 is not None:
                lines.append(f"R1 = {fmt_rational(dom.r1)}, R2 = {fmt_rational(dom.r2)}")
    else:
        lines.append(f"direct scan agrees with deviation graph: "
                     f"{'yes' if find_strongly_stable(obj, mode) == structure.equilibria else 'NO'}")
    return "\n".join(lines) + "\n"


def cmd_graph(obj, args) -> str:
    graph = equilibrium.build_deviation_graph(obj, _mode(args, obj))
    if args.format == "dot":
        return equilibrium.to_dot(graph)
    rows = [(graph.labels[a], graph.labels[b], " ".join(coalition_label(s) for s in cs))
            for (a, b), cs in graph.edges.items()]
    if args.format == "csv":
        return csv_text(("from", "to", "coalitions"), rows)
    lines = [f"nodes: {graph.num_nodes}", f"edges: {len(graph.edges)}"]
    lines += [f"  {a} -> {b}  {cs}" for a, b, cs in rows]
    return "\n".join(lines) + "\n"


def cmd_chain(obj, args) -> str:
    config = chain.DynamicsConfig(mode=_mode(args, obj))
    dyn = chain.Dynamics(obj, config)
    labels = dyn.labels()
    if args.resistance:
        res = chain.one_step_resistance(dyn)
        cell = lambda r: "inf" if r is None else str(r)
        if args.format == "csv":
            return csv_text(("from",) + labels, [(labels[a],) + tuple(cell(r) for r in row)
                                                  for a, row in enumerate(res)])
        analysis = chain.resistance_analysis(dyn)
        lines = [f"recurrent classes: J = {analysis.num_classes}",
                 "class resistance: " + str(analysis.class_resistance),
                 "stochastic potentials: " + ", ".join(map(str, analysis.stochastic_potential))]
        lines += [f"DISCREPANCY: {d}" for d in analysis.discrepancies]
        return "\n".join(lines) + "\n"
    eps = parse_eps_list(args.eps)
    if len(eps) != 1:
        raise UsageError("chain takes a single --eps value")
    matrix = chain.build_perturbed(dyn, epsilon=eps[0])
    if args.format == "csv":
        return csv_text(("from",) + labels, [(labels[a],) + tuple(fmt_rational(q) for q in row)
                                              for a, row in enumerate(matrix.dense())])
    lines = [f"transition matrix at epsilon = {fmt_rational(matrix.epsilon)} ({matrix.size} states)"]
    for a, row in enumerate(matrix.rows):
        cells = ", ".join(f"{labels[b]}: {fmt_rational(q)}" for b, q in sorted(row.items()))
        lines.append(f"  {labels[a]} -> {cells}")
    return "\n".join(lines) + "\n"


def _stable_report(obj, report) -> list[str]:
    stable = report.stable
    lines = [f"STABLE SET: {_noun(obj, len(stable))} ({_class_summary(report.structure, stable)})"]
    lines += [f"  {report.labels[k]}" for k in sorted(stable)]
    transient = [k for k in range(len(report.labels)) if k not in stable]
    mass = report.mass(transient) if transient else 0.0
    lines.append(f"transient mass at epsilon = {fmt_epsilon(report.sweep[-1])}: "
                 f"{fmt_decimal(mass)} (display rounding)")
    lines.append(f"numeric sweep agrees with recurrent classes: {'yes' if report.agree else 'NO'}")
    if not report.agree:
        lines.append(report.diagnostic)
    return lines


def _stable_csv(obj, report) -> str:
    header = ("network" if isinstance(obj, NetworkGame) else "profile",) + tuple(f"eps={fmt_epsilon(e)}" for e in report.sweep) + ("stable",)
    rows = [(label,) + tuple(fmt_decimal(d.probabilities[k]) for d in report.distributions)
            + ("yes" if k in report.stable else "no",) for k, label in enumerate(report.labels)]
    return csv_text(header, rows)


def cmd_stable(obj, args) -> str:
    config = chain.DynamicsConfig(mode=_mode(args, obj))
    report = chain.stochastically_stable_set(obj, config, parse_eps_list(args.eps))
    args.summary = _stable_report(obj, report)[0]
    if args.format == "csv":
        return _stable_csv(obj, report)
    lines = [_describe(obj), f"mode: {config.mode.value}",
             "sweep: " + ", ".join(fmt_epsilon(e) for e in report.sweep)]
    lines += _stable_report(obj, report)
    lines.append("stationary mass (display rounding):")
    for k, label in enumerate(report.labels):
        lines.append(f"  {label}: " + "  ".join(fmt_decimal(d.probabilities[k]) for d in report.distributions))
    return "\n".join(lines) + "\n"


def cmd_simulate(obj, args) -> str:
    config = chain.DynamicsConfig(mode=_mode(args, obj))
    dyn = chain.Dynamics(obj, config)
    eps = parse_eps_list(args.eps)
    if len(eps) != 1:
        raise UsageError("simulate takes a single --eps value")
    start = 0 if args.start is None else _state_of(dyn.labels(), args.start)
    result = chain.simulate(dyn, epsilon=eps[0], horizon=args.horizon, seed=args.seed,
                            start=start, record=args.format == "csv")
    labels = result.labels
    if args.format == "csv":
        tr = result.trajectory
        rows = ((t + 1, coalition_label(result.coalitions[s]), int(m), labels[x])
                for t, (s, m, x) in enumerate(zip(tr["coalition"], tr["mutated"], tr["state"])))
        return csv_text(("step", "coalition", "mutated", "profile"), list(rows))
    lines = [f"horizon: {args.horizon}, seed: {args.seed}, epsilon: {fmt_rational(eps[0])}, "
             f"start: {labels[start]}, final: {labels[result.final]}",
             "occupation frequencies:"]
    lines += [f"  {labels[k]}: {fmt_decimal(float(f))}" for k, f in enumerate(result.frequencies)]
    if eps[0] > 0 and dyn.num_states <= chain.EXACT_SOLVE_LIMIT:
        mu = chain.stationary(chain.build_perturbed(dyn, epsilon=eps[0]))
        tv = chain.total_variation(result.frequencies, mu.as_floats())
        lines.append(f"total variation to exact stationary distribution: {fmt_decimal(tv)}")
    return "\n".join(lines) + "\n"


def cmd_netform(obj, args) -> str:
    if not isinstance(obj, NetworkGame):
        raise UsageError("netform needs a network game file (with a 'nodes' key)")
    mode = _mode(args, obj)
    graph = equilibrium.build_deviation_graph(obj, mode)
    structure = equilibrium.recurrent_structure(graph)
    lines = [_describe(obj), f"mode: {mode.value}"]
    lines += _structure_lines(obj, structure, graph.labels, mode)
    report = chain.stochastically_stable_set(obj, chain.DynamicsConfig(mode=mode), parse_eps_list(args.eps))
    lines += _stable_report(obj, report)
    return "\n".join(lines) + "\n"


HANDLERS = {"equilibria": cmd_equilibria, "graph": cmd_graph, "chain": cmd_chain,
            "stable": cmd_stable, "simulate": cmd_simulate, "netform": cmd_netform}


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        try:
            text = Path(args.input).read_text()
        except OSError as exc:
            raise GrammarError(f"cannot read {args.input}: {exc.strerror}") from None
        obj = parse_game_file(text)
        out = HANDLERS[args.command](obj, args)
        if args.output:
            Path(args.output).write_text(out)
            if getattr(args, "summary", None):
                stdout.write(args.summary + "\n")
        else:
            stdout.write(out)
    except CBRError as exc:
        stderr.write(f"error: {exc}\n")
        return exc.exit_code
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
