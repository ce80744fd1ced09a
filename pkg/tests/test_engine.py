import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ctgames.catalog import (
    aqua_catalog,
    bard_catalog,
    build_strategy,
    mixed_from_json,
    responder_names,
    strategy_from_json,
)
from ctgames.engine import (
    AQUA,
    BARD,
    AnticipationWitness,
    DelayStrategy,
    Grid,
    MixedStrategy,
    apply_strategy,
    check_nonanticipativity,
    construct_play,
    construct_play_seeded,
    control_distance,
    default_truncation,
    expected_payoff,
    merge_grids,
    mp_payoff,
    random_control,
    truncated_mp_payoffs,
)
from ctgames.errors import ConfigError, ProtocolError, SpecParseError, UsageError
from ctgames.stepfn import StepFunction

import oracles

F = Fraction


class TestGrid:
    def test_points_continue_arithmetically(self):
        g = Grid((F(0), F(1, 3)), F(1, 2))
        assert [g.point(i) for i in range(4)] == [F(0), F(1, 3), F(5, 6), F(4, 3)]

    def test_round_of(self):
        g = Grid((F(0), F(1, 3), F(1, 2)), F(1, 4))
        assert g.round_of(F(2, 5)) == 1
        assert g.round_of(F(1, 2)) == 2
        assert g.round_of(F(9, 8)) == 4

    def test_rejects_nonzero_start(self):
        with pytest.raises(UsageError):
            Grid((F(1, 2),), F(1))

    def test_rejects_zero_step(self):
        with pytest.raises(UsageError):
            Grid((F(0),), F(0))

    def test_json_round_trip(self):
        g = Grid((F(0), F(2, 7)), F(3, 5))
        assert Grid.from_json(g.to_json()) == g


class TestMergeGrids:
    def test_identical_grids(self):
        g = Grid((F(0),), F(1))
        assert merge_grids(g, g, horizon=3) == [F(0), F(1), F(2)]

    def test_interleaved(self):
        ga = Grid((F(0),), F(1))
        gb = Grid((F(0), F(1, 2)), F(1))
        assert merge_grids(ga, gb, horizon=2) == [F(0), F(1, 2), F(1), F(3, 2)]

    def test_trivial_grid_adds_nothing_interior(self):
        ga = Grid((F(0),), F(1, 4))
        gb = Grid((F(0),), F(100))
        assert merge_grids(ga, gb, horizon=1) == ga.points_below(F(1))


class TestMpPayoff:
    def test_match_pays_bard(self):
        assert mp_payoff("a", "a", BARD) == 1
        assert mp_payoff("a", "a", AQUA) == 0

    def test_miss_pays_aqua(self):
        assert mp_payoff("a", "b", BARD) == 0
        assert mp_payoff("a", "b", AQUA) == 1

    @given(st.sampled_from("ab"), st.sampled_from("ab"))
    def test_constant_sum(self, x, y):
        assert mp_payoff(x, y, AQUA) + mp_payoff(x, y, BARD) == 1


class TestControlDistance:
    def test_zero_for_equal(self):
        u = StepFunction.constant("a", 1, tail="a")
        assert control_distance(u, u, 1.0) == 0.0

    def test_total_mass_for_disjoint(self):
        u = StepFunction.constant("a", 1, tail="a")
        v = StepFunction.constant("b", 1, tail="b")
        assert control_distance(u, v, 2.0) == pytest.approx(1.0, abs=1e-12)

    def test_half_mass_front_segment(self):
        r = 1.3
        cut = F(math.log(2)).limit_denominator(10**12) / F(r).limit_denominator(10**12)
        u = StepFunction.from_pieces([(0, "a"), (cut, "b")], cut * 2, tail="b")
        v = StepFunction.constant("b", cut * 2, tail="b")
        assert control_distance(u, v, r) == pytest.approx(0.5, abs=1e-9)


class TestConstructPlay:
    def test_constant_fixed_point(self):
        aq = build_strategy("constant", Grid(), {"symbol": "a"})
        bd = build_strategy("constant", Grid(), {"symbol": "a"})
        play = construct_play(aq, bd, 5)
        assert play.aqua.values == ("a",)
        assert play.bard.values == ("a",)

    def test_copy_last_recursion(self):
        # spec walk-through: copier locks onto a after its first round
        aq = build_strategy("constant", Grid(), {"symbol": "a"})
        bd = build_strategy("copy-last", Grid(), {"initial": "b"})
        play = construct_play(aq, bd, 3)
        assert play.bard.breakpoints == (F(0), F(1))
        assert play.bard.values == ("b", "a")

    def test_fixed_point_property(self):
        # re-invoking each responder on the final opponent control reproduces
        # the play exactly, cell by cell
        sa = build_strategy("grid-switcher", Grid((F(0),), F(1, 3)))
        sb = build_strategy("delayed-copier", Grid((F(0),), F(1, 2)))
        horizon = F(4)
        play = construct_play(sa, sb, horizon)
        assert apply_strategy(sa, play.bard, horizon) == play.aqua
        assert apply_strategy(sb, play.aqua, horizon) == play.bard

    def test_seed_independence_hundred_seeds(self):
        sa = build_strategy("alternating-segment", Grid((F(0),), F(2, 3)))
        sb = build_strategy("copy-last", Grid((F(0), F(1, 2)), F(1, 2)))
        horizon = F(3)
        reference = construct_play(sa, sb, horizon)
        for seed in range(100):
            rng = random.Random(seed)
            seed_a = random_control(rng, horizon)
            seed_b = random_control(rng, horizon)
            play = construct_play_seeded(sa, sb, horizon, seed_a, seed_b)
            assert play.aqua == reference.aqua
            assert play.bard == reference.bard

    def test_wrong_segment_length_is_protocol_error(self):
        bad = DelayStrategy(
            Grid(), lambda n, s, e, o: StepFunction.constant("a", F(1, 7)), "bad")
        aq = build_strategy("constant", Grid(), {"symbol": "a"})
        with pytest.raises(ProtocolError):
            construct_play(aq, bad, 2)


class TestPayoffs:
    def test_pure_match(self):
        ma = MixedStrategy.pure(AQUA, build_strategy("constant", Grid(), {"symbol": "a"}))
        mb = MixedStrategy.pure(BARD, build_strategy("constant", Grid(), {"symbol": "a"}))
        s = expected_payoff(ma, mb, 1.0)
        assert s.gamma_bard == pytest.approx(1.0, abs=2e-9)
        assert s.gamma_aqua == 0.0

    def test_pure_miss(self):
        ma = MixedStrategy.pure(AQUA, build_strategy("constant", Grid(), {"symbol": "a"}))
        mb = MixedStrategy.pure(BARD, build_strategy("constant", Grid(), {"symbol": "b"}))
        s = expected_payoff(ma, mb, 1.0)
        assert s.gamma_bard == 0.0

    def test_mixture_splits_mass(self):
        ma = MixedStrategy(AQUA, (
            (F(1, 2), build_strategy("constant", Grid(), {"symbol": "a"})),
            (F(1, 2), build_strategy("constant", Grid(), {"symbol": "b"})),
        ))
        mb = MixedStrategy.pure(BARD, build_strategy("constant", Grid(), {"symbol": "a"}))
        s = expected_payoff(ma, mb, 0.7)
        assert s.gamma_bard == pytest.approx(0.5, abs=1e-9)

    def test_constant_sum_within_tail(self):
        for name_a, ma in aqua_catalog().items():
            mb = MixedStrategy.pure(
                BARD, build_strategy("copy-last", Grid((F(0),), F(2, 5))))
            s = expected_payoff(ma, mb, 0.5)
            assert s.constant_sum_defect <= s.tail_bound + 1e-12, name_a
            assert s.tail_bound <= 1e-9

    def test_truncation_consistency(self):
        ma = MixedStrategy.pure(AQUA, build_strategy("grid-switcher", Grid((F(0),), F(1, 3))))
        mb = MixedStrategy.pure(BARD, build_strategy("copy-last", Grid()))
        r = 1.0
        t1 = default_truncation(r)
        s1 = expected_payoff(ma, mb, r, t_trunc=t1)
        s2 = expected_payoff(ma, mb, r, t_trunc=2 * t1)
        assert abs(s1.gamma_bard - s2.gamma_bard) <= s1.tail_bound + 1e-12
        assert abs(s1.gamma_aqua - s2.gamma_aqua) <= s1.tail_bound + 1e-12

    def test_payoff_matches_quadrature_oracle(self):
        sa = build_strategy("alternating-segment", Grid((F(0),), F(1, 2)))
        sb = build_strategy("copy-last", Grid((F(0),), F(1, 3)))
        r = 1.0
        t_trunc = default_truncation(r)
        play = construct_play(sa, sb, t_trunc)
        _, g_bard = truncated_mp_payoffs(play, r, t_trunc)
        want = oracles.quad_discounted(play.aqua, play.bard, r,
                                       horizon=float(t_trunc))
        assert g_bard == pytest.approx(want, abs=1e-9)

    def test_rejects_bad_rate(self):
        ma = MixedStrategy.pure(AQUA, build_strategy("constant", Grid()))
        mb = MixedStrategy.pure(BARD, build_strategy("constant", Grid()))
        with pytest.raises(UsageError):
            expected_payoff(ma, mb, 0.0)


class TestNonAnticipativity:
    @pytest.mark.parametrize("name,params", [
        ("constant", {"symbol": "a"}),
        ("copy-last", {}),
        ("grid-switcher", {}),
        ("alternating-segment", {}),
        ("delayed-copier", {}),
    ])
    def test_catalog_strategies_pass(self, name, params):
        strat = build_strategy(name, Grid((F(0), F(1, 3)), F(5, 7)), params)
        ok, witness = check_nonanticipativity(strat, samples=300, seed=7)
        assert ok and witness is None

    def test_peek_ahead_fails_with_witness(self):
        strat = build_strategy("peek-ahead", Grid())
        ok, witness = check_nonanticipativity(strat, samples=300, seed=7)
        assert not ok
        assert isinstance(witness, AnticipationWitness)
        # witness really is a prefix-equal pair
        assert witness.opponent_a.prefix(witness.t_n) == \
            witness.opponent_b.prefix(witness.t_n)


class TestCatalogSerialization:
    def test_strategy_from_json(self):
        obj = {"grid": {"points": ["0", "1/3"], "tail_step": "1/2"},
               "responder": {"name": "constant", "params": {"symbol": "b"}}}
        strat = strategy_from_json(obj)
        out = apply_strategy(strat, StepFunction.constant("a", 1, tail="a"), 2)
        assert out.values == ("b",)

    def test_unknown_responder_is_config_error(self):
        obj = {"grid": {"points": ["0"], "tail_step": "1"},
               "responder": {"name": "nope"}}
        with pytest.raises(ConfigError):
            strategy_from_json(obj)

    def test_malformed_mixed_spec(self):
        with pytest.raises(SpecParseError):
            mixed_from_json({"player": AQUA, "atoms": [{"p": "1/2"}]})

    def test_mixed_from_json(self):
        obj = {"player": "aqua", "atoms": [
            {"p": "1/2", "grid": {"points": ["0"], "tail_step": "1"},
             "responder": {"name": "constant", "params": {"symbol": "a"}}},
            {"p": "1/2", "grid": {"points": ["0"], "tail_step": "1"},
             "responder": {"name": "grid-switcher"}},
        ]}
        m = mixed_from_json(obj)
        assert len(m.atoms) == 2
        assert m.player == AQUA

    def test_catalogs_cover_acceptance_names(self):
        names = set(aqua_catalog())
        assert names == {"pure-constant", "two-constant-mixture",
                         "four-grid-switchers", "delayed-copier",
                         "alternating-segment"}
        assert all(m.player == BARD for m in bard_catalog().values())
        assert {"constant", "copy-last", "grid-switcher",
                "alternating-segment"} <= set(responder_names())
