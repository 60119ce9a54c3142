from fractions import Fraction

import pytest
from hypothesis import given, settings

from cbrdynamics import (
    CLOSED_CYCLE,
    EQUILIBRIUM,
    Game,
    ImprovementMode,
    build_deviation_graph,
    dominance,
    dominance_2x2,
    equilibria_consistency_check,
    find_equilibria_scan,
    improving_path,
    recurrent_structure,
    to_dot,
)
from cbrdynamics.equilibrium import sink_components

import oracles

STRICT, WEAK = ImprovementMode.STRICT, ImprovementMode.WEAK


def profiles(game, indices):
    return {game.profile_at(k) for k in indices}


def test_pd_graph_and_cycle(pd):
    graph = build_deviation_graph(pd)
    labelled = {(pd.profile_label(pd.profile_at(a)), pd.profile_label(pd.profile_at(b))): coals
                for (a, b), coals in graph.edges.items()}
    assert labelled == {
        ("(a1,b1)", "(a1,b2)"): ((1,),),
        ("(a1,b1)", "(a2,b1)"): ((0,),),
        ("(a1,b2)", "(a2,b2)"): ((0,),),
        ("(a2,b1)", "(a2,b2)"): ((1,),),
        ("(a2,b2)", "(a1,b1)"): ((0, 1),),
    }
    rs = recurrent_structure(graph)
    assert rs.equilibria == [] and len(rs.cycles) == 1
    assert set(rs.cycles[0]) == set(range(4))
    assert find_equilibria_scan(pd) == [] and find_equilibria_scan(pd, WEAK) == []


def test_sne_cycle_structure(sne_cycle):
    rs = recurrent_structure(build_deviation_graph(sne_cycle))
    assert profiles(sne_cycle, rs.equilibria) == {(0, 0)}
    assert [profiles(sne_cycle, c) for c in rs.cycles] == [{(1, 1), (1, 2), (2, 2), (2, 1)}]
    assert profiles(sne_cycle, find_equilibria_scan(sne_cycle)) == {(0, 0)}
    assert find_equilibria_scan(sne_cycle, WEAK) == []


def test_sne_cycle_alpha_weak(sne_cycle_weak):
    assert profiles(sne_cycle_weak, find_equilibria_scan(sne_cycle_weak, WEAK)) == {(0, 0)}
    rs = recurrent_structure(build_deviation_graph(sne_cycle_weak, WEAK))
    kinds = sorted(c.kind for c in rs.classes)
    assert kinds == [CLOSED_CYCLE, EQUILIBRIUM]


def test_early_exit_returns_first(sne_cycle):
    assert find_equilibria_scan(sne_cycle, early_exit=True) == [0]


def test_improving_path_pd(pd):
    graph = build_deviation_graph(pd)
    path = improving_path(graph, 0, 3)
    assert path[0] == 0 and path[-1] == 3 and len(path) == 5
    for k in range(0, len(path) - 2, 2):
        assert path[k + 1] in graph.edges[(path[k], path[k + 2])]
    ex_graph = build_deviation_graph(Game.from_bimatrix([[(1, 1), (0, 0)], [(0, 0), (1, 1)]]))
    assert improving_path(ex_graph, 0, 3) is None


def test_dot_output(pd):
    dot = to_dot(build_deviation_graph(pd))
    assert dot.startswith("digraph")
    assert 'n3 -> n0 [label="{1,2}"];' in dot
    assert dot.count("->") == 5


def test_sink_components_simple():
    assert sink_components(4, [[1], [0], [3], []]) == [(0, 1), (3,)]


@settings(max_examples=80, deadline=None)
@given(oracles.game_strategy())
def test_recurrent_classes_match_closure_oracle(game):
    for mode, weak in ((STRICT, False), (WEAK, True)):
        rs = recurrent_structure(build_deviation_graph(game, mode))
        got = {frozenset(game.profile_at(k) for k in c.members) for c in rs.classes}
        assert got == oracles.game_recurrent_classes(game, weak)
        assert profiles(game, find_equilibria_scan(game, mode)) == oracles.equilibria(game, weak)
        for c in rs.classes:
            assert (c.kind == EQUILIBRIUM) == (len(c.members) == 1)


@settings(max_examples=80, deadline=None)
@given(oracles.game_strategy())
def test_ssne_subset_of_sne_and_pareto(game):
    sne = profiles(game, find_equilibria_scan(game, STRICT))
    ssne = profiles(game, find_equilibria_scan(game, WEAK))
    assert ssne <= sne
    # grand coalition blocks: SNE is weakly Pareto optimal, SSNE Pareto optimal
    assert all(oracles.weakly_pareto_optimal(game, a) for a in sne)
    assert all(oracles.pareto_optimal(game, a) for a in ssne)
    assert equilibria_consistency_check(game, STRICT).passed
    assert equilibria_consistency_check(game, WEAK).passed


@settings(max_examples=40, deadline=None)
@given(oracles.game_strategy(max_players=2))
def test_weak_graph_has_every_strict_edge(game):
    strict = build_deviation_graph(game, STRICT).edges
    weak = build_deviation_graph(game, WEAK).edges
    assert set(strict) <= set(weak)
    assert all(a != b for a, b in weak)


def test_coordination_3x3_dominance(coord3):
    rep = dominance(coord3)
    s33 = coord3.index_of((2, 2))
    assert rep.payoff_dominant == s33 and rep.risk_dominant == s33
    assert profiles(coord3, find_equilibria_scan(coord3)) == {(2, 2)}


def test_stag_hunt_ratios(stag):
    rep = dominance_2x2(stag)
    assert rep.payoff_dominant == stag.index_of((0, 0))
    assert rep.risk_dominant == stag.index_of((1, 1))
    assert (rep.r1, rep.r2) == (Fraction(1, 4), Fraction(3, 4))


def test_dominance_requires_coordination(pd, sne_cycle):
    with pytest.raises(ValueError):
        dominance_2x2(pd)
    with pytest.raises(ValueError):
        dominance(sne_cycle)
