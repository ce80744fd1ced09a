import math
from fractions import Fraction

import pytest

from ctgames.bestresponse import (
    build_best_response,
    conditional_restrictions,
    discount_horizon,
    find_refinement_level,
    good_cell_flags,
    internal_epsilon,
    rational_horizon,
    spoiled_cell_mass,
    verify_guarantee,
)
from ctgames.catalog import aqua_catalog, bard_catalog, build_strategy
from ctgames.engine import (
    AQUA,
    BARD,
    Grid,
    MixedStrategy,
    check_nonanticipativity,
    construct_play,
)
from ctgames.errors import InconsistencyError, UsageError
from ctgames.stepfn import StepFunction

F = Fraction


def constant_mix(player=AQUA):
    return MixedStrategy(player, (
        (F(1, 2), build_strategy("constant", Grid(), {"symbol": "a"})),
        (F(1, 2), build_strategy("constant", Grid(), {"symbol": "b"})),
    ), label="half-half")


class TestHorizon:
    def test_log_identity(self):
        eps = F(math.exp(-1)).limit_denominator(10**12)
        assert discount_horizon(eps, 1.0) == pytest.approx(1.0, abs=1e-9)

    def test_slow_discounting(self):
        assert discount_horizon(F(1, 20), 0.1) == pytest.approx(29.9573, abs=1e-4)

    def test_degenerate_eps_rejected(self):
        with pytest.raises(UsageError):
            discount_horizon(1, 1.0)
        with pytest.raises(UsageError):
            discount_horizon(F(1, 2), 0.0)

    def test_rational_round_up_preserves_tail_bound(self):
        eps, r = F(1, 7), 0.75
        T = rational_horizon(eps, r)
        assert float(T) >= discount_horizon(eps, r)
        assert math.exp(-r * float(T)) <= float(eps)

    def test_internal_epsilon_split(self):
        # loss budget tail + spoiled + guessing = (2 + r) shares
        assert internal_epsilon(F(1, 5), 0.5) == F(2, 25)
        assert internal_epsilon(F(1, 10), 1.0) == F(1, 30)


class TestGoodCells:
    def test_trivial_grid_all_good(self):
        flags = good_cell_flags(Grid(), 3, F(1))
        assert flags == [True] * 8

    def test_midpoint_is_an_edge_at_level_one(self):
        g = Grid((F(0), F(1, 2)), F(1))
        assert good_cell_flags(g, 1, F(1)) == [True, True]

    def test_third_spoils_first_half_only(self):
        g = Grid((F(0), F(1, 3)), F(1))
        assert good_cell_flags(g, 1, F(1)) == [False, True]

    def test_monotone_refinement(self):
        # once a cell is good, both halves stay good one level down
        g = Grid((F(0), F(1, 3), F(9, 16)), F(2, 5))
        T = F(3, 2)
        for n in range(1, 7):
            coarse = good_cell_flags(g, n, T)
            fine = good_cell_flags(g, n + 1, T)
            for k, ok in enumerate(coarse):
                if ok:
                    assert fine[2 * k] and fine[2 * k + 1]

    def test_spoiled_mass_matches_direct_sum(self):
        g = Grid((F(0), F(1, 3)), F(1, 3))
        m = MixedStrategy.pure(AQUA, build_strategy("grid-switcher", g))
        T, r, n = F(2), 1.0, 3
        flags = good_cell_flags(g, n, T)
        width = float(T) / 2**n
        direct = sum(math.exp(-r * k * width) - math.exp(-r * (k + 1) * width)
                     for k, ok in enumerate(flags) if not ok)
        assert spoiled_cell_mass(m, n, T, r) == pytest.approx(direct, abs=1e-15)

    def test_find_level_is_minimal(self):
        m = MixedStrategy.pure(
            AQUA, build_strategy("grid-switcher", Grid((F(0),), F(1, 3))))
        eps, r = F(1, 20), 1.0
        T = rational_horizon(eps, r)
        n = find_refinement_level(m, eps, r, T)
        assert spoiled_cell_mass(m, n, T, r) <= float(eps)
        if n > 1:
            assert spoiled_cell_mass(m, n - 1, T, r) > float(eps)


class TestConditioning:
    def test_single_atom_always_retained(self):
        m = aqua_catalog()["pure-constant"]
        retained, weights, preds = conditional_restrictions(
            m, StepFunction.empty(), StepFunction.empty(), F(0), F(1, 2))
        assert retained == (0,)
        assert weights == (F(1),)
        assert preds[0] == StepFunction.constant("a", F(1, 2))

    def test_equal_likelihood_retention(self):
        # both constants are consistent with an empty prefix
        m = constant_mix()
        retained, weights, preds = conditional_restrictions(
            m, StepFunction.empty(), StepFunction.empty(), F(0), F(1))
        assert retained == (0, 1)
        assert weights == (F(1, 2), F(1, 2))
        assert preds[0].values == ("a",) and preds[1].values == ("b",)

    def test_bayes_elimination(self):
        m = constant_mix()
        seen = StepFunction.constant("a", F(1, 4))
        own = StepFunction.constant("b", F(1, 4))
        retained, weights, preds = conditional_restrictions(
            m, seen, own, F(1, 4), F(1, 2))
        assert retained == (0,)
        assert weights == (F(1),)
        assert preds[0] == StepFunction.constant("a", F(1, 4))

    def test_impossible_observation_is_inconsistency(self):
        m = aqua_catalog()["pure-constant"]
        seen = StepFunction.constant("b", F(1, 4))
        with pytest.raises(InconsistencyError):
            conditional_restrictions(m, seen, seen, F(1, 4), F(1, 2))

    def test_atom_with_interior_grid_point_not_predicted(self):
        strat = build_strategy("grid-switcher", Grid((F(0),), F(1, 3)))
        m = MixedStrategy.pure(AQUA, strat)
        retained, weights, preds = conditional_restrictions(
            m, StepFunction.empty(), StepFunction.empty(), F(0), F(1, 2))
        assert retained == (0,)
        assert preds == {}


class TestBuiltStrategy:
    def test_plan_dump_shape(self):
        _, plan = build_best_response(constant_mix(), F(1, 5), 1.0)
        dump = plan.to_json()
        assert set(dump) == {"eps_target", "eps_internal", "T", "n_hat", "cells"}
        assert dump["eps_target"] == "1/5"
        assert dump["eps_internal"] == "1/15"
        assert dump["n_hat"] == plan.level
        assert len(dump["cells"]) == 2**plan.level
        assert all(set(c) == {"k", "good_atoms", "n_star"} for c in dump["cells"])

    def test_grid_covers_cell_edges(self):
        strat, plan = build_best_response(constant_mix(), F(1, 5), 1.0)
        width = plan.horizon / plan.cell_count
        for k in range(plan.cell_count):
            assert k * width in strat.grid.prefix
        assert strat.grid.tail_step == F(1)

    def test_same_seat_rejected(self):
        with pytest.raises(UsageError):
            build_best_response(constant_mix(), F(1, 5), 1.0, seat=AQUA)

    def test_build_is_deterministic(self):
        a, plan_a = build_best_response(constant_mix(), F(1, 5), 1.0)
        b, plan_b = build_best_response(constant_mix(), F(1, 5), 1.0)
        assert a.grid == b.grid
        assert plan_a.to_json() == plan_b.to_json()

    def test_nonanticipative(self):
        strat, _ = build_best_response(constant_mix(), F(1, 4), 1.0)
        ok, witness = check_nonanticipativity(strat, samples=150, seed=5)
        assert ok, witness

    def test_predictions_match_realized_play(self):
        # on each atom's good cells the conditional prediction is exact
        m = aqua_catalog()["two-constant-mixture"]
        strat, plan = build_best_response(m, F(1, 5), 1.0)
        for idx, (_, atom) in enumerate(m.atoms):
            play = construct_play(atom, strat, plan.horizon)
            for cell in plan.cells:
                if idx not in cell.good_atoms:
                    continue
                retained, _, preds = conditional_restrictions(
                    m, play.aqua.prefix(cell.start), play.bard.prefix(cell.start),
                    cell.start, cell.end)
                assert idx in retained
                realized = play.aqua.restrict(cell.start, cell.end)
                assert preds[idx] == realized


class TestGuarantee:
    @pytest.mark.parametrize("name", ["pure-constant", "two-constant-mixture"])
    def test_easy_cases_pass(self, name):
        rep = verify_guarantee(aqua_catalog()[name], F(1, 5), 1.0)
        assert rep.seat == BARD
        assert rep.passed and rep.gamma > 0.8

    def test_loss_accounting_is_exhaustive(self):
        rep = verify_guarantee(aqua_catalog()["pure-constant"], F(1, 5), 1.0)
        L = rep.losses
        total_loss = (L.realized_spoiled + L.realized_guessing
                      + L.realized_beyond_horizon)
        assert 1.0 - rep.gamma == pytest.approx(total_loss, abs=1e-9)
        assert total_loss <= float(rep.eps_target)
        assert L.budget_total == pytest.approx(float(rep.eps_target), abs=1e-12)

    def test_tail_and_truncation_within_bounds(self):
        rep = verify_guarantee(aqua_catalog()["pure-constant"], F(1, 5), 1.0)
        assert rep.losses.realized_tail <= float(rep.plan.eps_internal)
        assert rep.losses.truncation_bound <= 1e-9
        assert rep.margin == pytest.approx(rep.gamma - 0.8, abs=1e-15)

    def test_role_swap_guards_aqua(self):
        rep = verify_guarantee(bard_catalog()["two-constant-mixture"], F(1, 5), 1.0)
        assert rep.seat == AQUA
        assert rep.passed

    def test_report_json_includes_per_atom_rows(self):
        rep = verify_guarantee(constant_mix(), F(1, 5), 1.0)
        obj = rep.to_json()
        assert obj["passed"] is True
        assert [row["atom"] for row in obj["per_atom"]] == [0, 1]
        assert obj["losses"]["budget"]["guessing"] == pytest.approx(
            1.0 * float(rep.plan.eps_internal))
        assert obj["plan"]["n_hat"] == rep.plan.level
