from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbrdynamics import (
    ConfigError,
    DynamicsConfig,
    EpsilonRangeError,
    Game,
    ImprovementMode,
    build_deviation_graph,
    build_perturbed,
    build_unperturbed,
    recurrent_structure,
    resistance_analysis,
    simulate,
    stationary,
    stochastically_stable_set,
)
from cbrdynamics.chain import Dynamics, min_rooted_tree, one_step_resistance, simulate_replicas, total_variation

import oracles

STRICT, WEAK = ImprovementMode.STRICT, ImprovementMode.WEAK
F = Fraction


def row_by_profile(game, matrix, a):
    k = game.index_of(a)
    return {game.profile_at(b): q for b, q in matrix.rows[k].items() if q}


def test_pd_unperturbed_row(pd):
    p0 = build_unperturbed(pd)
    dd = pd.index_of((1, 1))
    assert p0[dd, pd.index_of((0, 0))] == F(1, 3)
    assert p0[dd, dd] == F(2, 3)


def test_pd_perturbed_row(pd):
    p = build_perturbed(pd, epsilon=F(1, 10))
    got = row_by_profile(pd, p, (1, 1))
    assert got == {(0, 0): F(3, 10), (0, 1): F(2, 45), (1, 0): F(2, 45), (1, 1): F(11, 18)}


def test_sne_row_is_unit(sne_cycle):
    p0 = build_unperturbed(sne_cycle)
    assert p0.rows[0] == {0: 1}


@settings(max_examples=40, deadline=None)
@given(oracles.game_strategy(), st.sampled_from([F(1, 3), F(1, 10), F(2, 7)]), st.booleans())
def test_rows_match_term_by_term_evaluation(game, eps, weak):
    config = DynamicsConfig(mode=WEAK if weak else STRICT)
    p0 = build_unperturbed(game, config)
    pe = build_perturbed(game, config, eps)
    for a in oracles.all_profiles(game):
        assert row_by_profile(game, p0, a) == {b: q for b, q in oracles.perturbed_row(game, a, 0, weak).items() if q}
        assert row_by_profile(game, pe, a) == {b: q for b, q in oracles.perturbed_row(game, a, eps, weak).items() if q}
    assert all(s == 1 for s in p0.row_sums()) and all(s == 1 for s in pe.row_sums())


@settings(max_examples=40, deadline=None)
@given(oracles.game_strategy())
def test_affine_in_epsilon(game):
    p0 = build_unperturbed(game).dense()
    e1, e2, e3 = F(1, 10), F(1, 100), F(3, 7)
    p1 = build_perturbed(game, epsilon=e1).dense()
    p2 = build_perturbed(game, epsilon=e2).dense()
    p3 = build_perturbed(game, epsilon=e3).dense()
    n = game.num_profiles
    for a in range(n):
        for b in range(n):
            d = (p1[a][b] - p2[a][b]) / (e1 - e2)
            assert p1[a][b] - e1 * d == p0[a][b]
            assert p3[a][b] == p0[a][b] + e3 * d


@settings(max_examples=30, deadline=None)
@given(oracles.game_strategy(max_players=2))
def test_order_epsilon_bound(game):
    dyn = Dynamics(game)
    r = one_step_resistance(dyn)
    n = game.num_profiles
    ratios = {}
    for eps in (F(1, 10**k) for k in range(1, 7)):
        p = build_perturbed(dyn, epsilon=eps)
        for a in range(n):
            for b in range(n):
                if a != b and r[a][b] == 1:
                    ratios.setdefault((a, b), []).append(p[a, b] / eps)
    for values in ratios.values():
        assert min(values) > 0
        # P = eps * D exactly when the move needs a mutation, so the ratio is constant
        assert max(values) == min(values)


@settings(max_examples=30, deadline=None)
@given(oracles.game_strategy())
def test_resistance_zero_iff_edge(game):
    dyn = Dynamics(game)
    r = one_step_resistance(dyn)
    edges = build_deviation_graph(game).edges
    for a in range(game.num_profiles):
        for b in range(game.num_profiles):
            if a != b:
                assert (r[a][b] == 0) == ((a, b) in edges)


@settings(max_examples=30, deadline=None)
@given(oracles.game_strategy(), st.booleans())
def test_matrix_classes_match_graph(game, weak):
    mode = WEAK if weak else STRICT
    rep = stochastically_stable_set(game, DynamicsConfig(mode=mode), sweep=[F(1, 10), F(1, 1000)])
    graph_rs = recurrent_structure(build_deviation_graph(game, mode))
    assert {c.members for c in rep.structure.classes} == {c.members for c in graph_rs.classes}
    for dist in rep.distributions:
        assert all(q > 0 for q in dist.probabilities)
        assert sum(dist.probabilities) == 1


def test_stationary_exact_pd(pd):
    p = build_perturbed(pd, epsilon=F(1, 100))
    mu = stationary(p)
    assert mu.exact and sum(mu.probabilities) == 1
    dense = p.dense()
    for b in range(4):
        assert sum(mu.probabilities[a] * dense[a][b] for a in range(4)) == mu.probabilities[b]


def test_stationary_two_state_symmetric():
    from cbrdynamics import TransitionMatrix
    m = TransitionMatrix(("x", "y"), [{0: F(2, 3), 1: F(1, 3)}, {0: F(1, 3), 1: F(2, 3)}], F(1, 10))
    assert stationary(m).probabilities == (F(1, 2), F(1, 2))


def test_stationary_designated_class(sne_cycle):
    p0 = build_unperturbed(sne_cycle)
    with pytest.raises(ValueError):
        stationary(p0)
    assert stationary(p0, [0]).probabilities[0] == 1
    cycle = [sne_cycle.index_of(x) for x in ((1, 1), (1, 2), (2, 1), (2, 2))]
    mu = stationary(p0, cycle)
    assert sum(mu.probabilities[k] for k in cycle) == 1
    with pytest.raises(ValueError):
        stationary(p0, [sne_cycle.index_of((1, 0))])


def test_float_fallback_agrees(monkeypatch, sne_cycle):
    from cbrdynamics import chain
    p = build_perturbed(sne_cycle, epsilon=F(1, 100))
    exact = stationary(p).as_floats()
    monkeypatch.setattr(chain, "EXACT_SOLVE_LIMIT", 2)
    approx = stationary(p)
    assert not approx.exact and approx.residual <= 1e-12
    assert np.allclose(approx.as_floats(), exact, atol=1e-10)


def test_stable_sets_on_examples(pd, sne_cycle, coord3):
    assert stochastically_stable_set(pd).stable == frozenset(range(4))
    rep = stochastically_stable_set(sne_cycle)
    assert rep.agree
    assert {sne_cycle.profile_at(k) for k in rep.stable} == {(0, 0), (1, 1), (1, 2), (2, 1), (2, 2)}
    rep = stochastically_stable_set(coord3)
    assert rep.agree and rep.stable == {coord3.index_of((2, 2))}


@pytest.mark.parametrize("scale", [2, F(1, 2), lambda s, a: len(s) + a % 3])
def test_f_invariance(sne_cycle, scale):
    base = stochastically_stable_set(sne_cycle).stable
    sweep = [F(1, 10 ** k) for k in range(2, 8)]
    rep = stochastically_stable_set(sne_cycle, DynamicsConfig(mutation_scale=scale), sweep)
    assert rep.agree and rep.stable == base


def test_weak_mode_stable_set_is_weak_recurrent(sne_cycle_weak):
    rep = stochastically_stable_set(sne_cycle_weak, DynamicsConfig(mode=WEAK))
    rs = recurrent_structure(build_deviation_graph(sne_cycle_weak, WEAK))
    assert rep.agree and rep.stable == rs.recurrent_states


def test_epsilon_range(pd):
    with pytest.raises(EpsilonRangeError):
        build_perturbed(pd, epsilon=1)
    with pytest.raises(EpsilonRangeError):
        build_perturbed(pd, DynamicsConfig(mutation_scale=4), F(1, 4))
    with pytest.raises(EpsilonRangeError):
        stochastically_stable_set(pd, sweep=[F(-1, 10)])
    with pytest.raises(ValueError):
        stochastically_stable_set(pd, sweep=[F(1, 100), F(1, 10)])


def test_config_errors(pd):
    with pytest.raises(ConfigError):
        Dynamics(pd, DynamicsConfig(coalition_dist={(0,): F(1, 2), (1,): F(1, 4)}))
    with pytest.raises(ConfigError):
        Dynamics(pd, DynamicsConfig(coalition_dist={(0, 2): 1}))
    with pytest.raises(ConfigError):
        Dynamics(pd, DynamicsConfig(mutation_scale=0))
    half = lambda s, a, support: {support[0]: F(1, 2)}
    with pytest.raises(ConfigError):
        Dynamics(pd, DynamicsConfig(error_choice=half))


def test_resistance_examples(pd, sne_cycle):
    ra = resistance_analysis(pd)
    assert ra.num_classes == 1 and ra.stochastic_potential == [0] and not ra.discrepancies
    ra = resistance_analysis(sne_cycle)
    assert ra.num_classes == 2 and ra.stochastic_potential == [1, 1] and not ra.discrepancies


def test_restricted_config_reports_discrepancy():
    # only player 1 ever moves: the other coordination point is unreachable by one mutation
    g = Game.from_bimatrix([[(2, 2), (0, 0)], [(0, 0), (1, 1)]])
    ra = resistance_analysis(g, DynamicsConfig(coalition_dist={(0,): 1}))
    assert ra.discrepancies


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.randoms(use_true_random=False))
def test_min_tree_matches_enumeration(j, rnd):
    weights = [[None if a == b or rnd.random() < 0.2 else rnd.randint(0, 3) for b in range(j)] for a in range(j)]
    for root in range(j):
        assert min_rooted_tree(weights, root) == oracles.min_tree_bruteforce(weights, root)


def test_simulation_reproducible(pd):
    a = simulate(pd, epsilon=F(1, 10), horizon=2000, seed=5, record=True)
    b = simulate(pd, epsilon=F(1, 10), horizon=2000, seed=5, record=True)
    assert np.array_equal(a.counts, b.counts)
    assert np.array_equal(a.trajectory["state"], b.trajectory["state"])
    assert a.horizon == 2000


def test_simulation_absorbs_at_sne():
    g = Game.from_bimatrix([[(3, 3), (1, 0)], [(0, 1), (0, 0)]])
    res = simulate(g, horizon=200, seed=1, start=3, record=True)
    assert res.final == 0
    first = int(np.argmax(res.trajectory["state"] == 0))
    assert (res.trajectory["state"][first:] == 0).all()


def test_simulation_stays_in_cycle(sne_cycle):
    cycle = {sne_cycle.index_of(x) for x in ((1, 1), (1, 2), (2, 1), (2, 2))}
    res = simulate(sne_cycle, horizon=500, seed=3, start=sne_cycle.index_of((1, 1)), record=True)
    assert set(res.trajectory["state"].tolist()) <= cycle


def test_replicas_close_to_exact(pd):
    eps = F(1, 10)
    counts = simulate_replicas(pd, epsilon=eps, horizon=20000, seed=11, replicas=4)
    mu = stationary(build_perturbed(pd, epsilon=eps)).as_floats()
    assert total_variation(counts / counts.sum(), mu) < 0.02


def test_small_but_persistent_mass_counts_as_stable():
    # one profile of this 17-profile closed cycle keeps only ~1.1e-4 of the mass as eps -> 0
    table = [(0, 4, 2), (1, 2, 4), (2, 2, 2), (3, 3, 2), (3, 2, 1), (0, 4, 3), (2, 0, 1), (2, 4, 0), (0, 0, 1),
             (0, 4, 2), (0, 3, 0), (1, 1, 0), (0, 2, 1), (1, 1, 0), (4, 1, 0), (2, 3, 0), (0, 2, 4), (1, 3, 1)]
    game = Game.from_function((2, 3, 3), lambda p, it=iter(table): next(it))
    rep = stochastically_stable_set(game)
    quiet = game.index_of((0, 1, 1))
    assert rep.mass([quiet]) < rep.threshold
    assert quiet in rep.numeric and rep.agree
    assert len(rep.stable) == 17
