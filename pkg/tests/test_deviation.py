import pytest
from hypothesis import given, settings

from cbrdynamics import ImprovementMode, erroneous_set, improving_set, reachable_profiles
from cbrdynamics.deviation import GameDeviations, structure_for

import oracles

STRICT, WEAK = ImprovementMode.STRICT, ImprovementMode.WEAK


def test_pd_improving_sets(pd):
    # from mutual defection only the grand coalition gains, moving to mutual cooperation
    dd = (1, 1)
    assert set(improving_set(pd, (0, 1), dd)) == {pd.index_of((0, 0))}
    assert len(improving_set(pd, (0,), dd)) == 0
    assert len(improving_set(pd, (1,), dd)) == 0


def test_reachable_keeps_outsiders_fixed(sne_cycle):
    reach = reachable_profiles(sne_cycle, (1,), (2, 0))
    assert {sne_cycle.profile_at(k) for k in reach} == {(2, 0), (2, 1), (2, 2)}


def test_invalid_coalition(pd):
    with pytest.raises(ValueError):
        improving_set(pd, (2,), (0, 0))
    with pytest.raises(ValueError):
        improving_set(pd, (), (0, 0))


@settings(max_examples=60, deadline=None)
@given(oracles.game_strategy())
def test_sets_match_bruteforce(game):
    for a in oracles.all_profiles(game):
        for s in oracles.all_coalitions(game.num_players):
            reach = {game.profile_at(k) for k in reachable_profiles(game, s, a)}
            assert reach == oracles.reachable(game, s, a)
            for mode, weak in ((STRICT, False), (WEAK, True)):
                imp = {game.profile_at(k) for k in improving_set(game, s, a, mode)}
                err = {game.profile_at(k) for k in erroneous_set(game, s, a, mode)}
                assert imp == oracles.improving(game, s, a, weak)
                assert err == reach - imp
                # base never improves on itself and is always erroneous
                assert a not in imp and a in err


@settings(max_examples=40, deadline=None)
@given(oracles.game_strategy())
def test_strict_improvements_are_weak_improvements(game):
    for a in range(game.num_profiles):
        for s in oracles.all_coalitions(game.num_players):
            assert set(improving_set(game, s, a, STRICT)) <= set(improving_set(game, s, a, WEAK))


def test_structure_for_defaults_and_mode_check(pd):
    dev = structure_for(pd)
    assert dev.mode is STRICT
    assert structure_for(dev) is dev
    weak = GameDeviations(pd, WEAK)
    with pytest.raises(ValueError):
        structure_for(weak, STRICT)


def test_mode_parse():
    assert ImprovementMode.parse("weak") is WEAK
    assert ImprovementMode.parse("STRICT") is STRICT
    with pytest.raises(ValueError):
        ImprovementMode.parse("sometimes")
