"""Guaranteeing response against a known mixed strategy.

Construction outline: pick a horizon T whose discounted tail is below an
internal epsilon, chop [0, T) into dyadic cells fine enough that the cells
touched by the opponent's commitment grid carry almost no discounted mass,
and inside every cell play the observe-then-majority guesser against the
opponent's *conditional* play distribution: atoms are filtered by Bayes
elimination on the observed prefix, their in-cell restrictions predicted by
simulation, and the cell's sub-round schedule sized by the predicted
sections' dyadic regularity (after a time change to the unit interval).

The builder forward-simulates every opponent atom to collect all sub-round
boundaries any reachable history needs; the declared grid is their union, so
each committed segment is a function of the opponent's control strictly
before its start, which is the delay property.

The seat-swapped construction (the mismatcher's side) is identical except
that committed majority symbols are flipped.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from itertools import count
from typing import Sequence

from .errors import InconsistencyError, UsageError
from .rational import FractionLike, ceil_to_grid, frac_str, to_frac
from .engine import (
    AQUA,
    BARD,
    DelayStrategy,
    Grid,
    MixedStrategy,
    PayoffSummary,
    Play,
    default_truncation,
    expected_payoff,
)
from .guessing import GuessSchedule, build_schedule
from .randomfn import RandomFunctionModel, n_star
from .stepfn import (
    DEFAULT_ALPHABET,
    StepFunction,
    Symbol,
    majority_value,
    merged_pieces,
    splice,
    time_change,
)


def discount_horizon(eps: FractionLike, r: float) -> float:
    """T with e^{-rT} = eps: the discounted mass after T is exactly eps."""
    eps = to_frac(eps)
    if not 0 < eps < 1:
        raise UsageError(f"eps must lie in (0, 1), got {eps}")
    if r <= 0:
        raise UsageError(f"discount rate must be positive, got {r}")
    return -math.log(float(eps)) / r


def rational_horizon(eps: FractionLike, r: float) -> Fraction:
    """discount_horizon rounded up onto a fixed rational lattice.

    Rounding up only shrinks the tail (e^{-rT} <= eps still holds) while
    keeping every dyadic cell edge exactly representable.
    """
    return ceil_to_grid(discount_horizon(eps, r))


def internal_epsilon(eps_target: FractionLike, r: float) -> Fraction:
    """Split the target loss across tail + spoiled cells + in-cell guessing.

    The construction loses at most eps (tail beyond T) + eps (cells meeting
    the opponent's grid) + r*eps (guessing inside clean cells), so running
    the machinery at eps_target/(2+r) brings the total in under the target.
    """
    eps_target = to_frac(eps_target)
    if not 0 < eps_target < 1:
        raise UsageError(f"eps_target must lie in (0, 1), got {eps_target}")
    if r <= 0:
        raise UsageError(f"discount rate must be positive, got {r}")
    return eps_target / (2 + Fraction(r))


def _interior_cells(grid: Grid, level: int, T: Fraction) -> set[int]:
    """Indices of dyadic cells of [0, T) whose open interior meets the grid."""
    cells = 1 << level
    spoiled: set[int] = set()
    for g in grid.points_below(T):
        if g == 0:
            continue
        scaled = Fraction(g * cells, T)
        if scaled.denominator == 1:
            continue  # exactly on a cell edge; open interiors miss it
        spoiled.add(int(scaled))
    return spoiled


def good_cell_flags(grid: Grid, level: int, T: FractionLike) -> list[bool]:
    """Per cell [kT/2^level, (k+1)T/2^level]: open interior misses the grid?"""
    T = to_frac(T)
    cells = 1 << level
    spoiled = _interior_cells(grid, level, T)
    return [k not in spoiled for k in range(cells)]


def spoiled_cell_mass(m_opp: MixedStrategy, level: int, T: Fraction,
                      r: float) -> float:
    """Expected discounted mass of the cells meeting each atom's grid."""
    cells = 1 << level
    width = float(T) / cells
    total = 0.0
    for p, strat in m_opp.atoms:
        mass = sum(math.exp(-r * k * width) - math.exp(-r * (k + 1) * width)
                   for k in _interior_cells(strat.grid, level, T))
        total += float(p) * mass
    return total


MAX_REFINEMENT = 24


def find_refinement_level(m_opp: MixedStrategy, eps_internal: FractionLike,
                          r: float, T: Fraction) -> int:
    """Smallest dyadic level (>= 1) whose spoiled-cell mass fits the budget.

    Exists because every grid point spoils at most one cell per level and
    cell mass shrinks geometrically; capped defensively against degenerate
    inputs.
    """
    budget = float(to_frac(eps_internal))
    for level in range(1, MAX_REFINEMENT + 1):
        if spoiled_cell_mass(m_opp, level, T, r) <= budget:
            return level
    raise UsageError(
        f"no refinement level up to {MAX_REFINEMENT} meets the loss budget; "
        "opponent grids are too dense below the horizon")


# -- conditioning ------------------------------------------------------------------


def _own_total(own_prefix: StepFunction,
               fallback: Symbol = DEFAULT_ALPHABET[1]) -> StepFunction:
    """Extend own committed play to a total control for atom simulation.

    Honest opponent responders never read at or past their round start, so
    the extension value is immaterial; it is pinned for determinism.
    """
    if own_prefix.is_empty():
        return StepFunction.constant(fallback, 1, tail=fallback)
    return own_prefix.with_tail(own_prefix.values[-1])


def _simulate_committed(strategy: DelayStrategy, opponent_total: StepFunction,
                        upto: Fraction) -> StepFunction:
    """Committed segments of every round starting below upto, concatenated.

    Unlike apply_strategy, the final segment is kept whole (rounds may end
    past upto), so restrictions within the last round stay available.
    """
    segs = []
    for n in count():
        if strategy.grid.point(n) >= upto:
            break
        segs.append(strategy.segment(n, opponent_total))
    return splice(segs)


def _grid_misses(grid: Grid, start: Fraction, end: Fraction) -> bool:
    return all(not (start < g < end) for g in grid.points_below(end))


def conditional_restrictions(m_opp: MixedStrategy, observed_prefix: StepFunction,
                             own_prefix: StepFunction, start: Fraction,
                             end: Fraction,
                             ) -> tuple[tuple[int, ...], tuple[Fraction, ...],
                                        dict[int, StepFunction]]:
    """Bayes filtering plus per-atom prediction on one interval.

    Retains the atoms whose play against the committed own prefix reproduces
    the observed opponent control a.e. on [0, start); renormalizes their
    weights. For retained atoms whose grid misses the open interval, returns
    the fully determined restriction to [start, end); atoms whose grid meets
    it stay retained but unpredicted (their payoff contributes at worst
    zero to the guarantee).
    """
    own_total = _own_total(own_prefix)
    retained: list[int] = []
    weights: list[Fraction] = []
    predictions: dict[int, StepFunction] = {}
    for i, (p, strat) in enumerate(m_opp.atoms):
        if start > 0:
            sim = _simulate_committed(strat, own_total, start)
            if sim.prefix(start) != observed_prefix:
                continue
        retained.append(i)
        weights.append(p)
        if _grid_misses(strat.grid, start, end):
            full = _simulate_committed(strat, own_total, end)
            predictions[i] = full.restrict(start, end)
    if not retained:
        raise InconsistencyError(
            "no atom is consistent with the observed play; the observed "
            "control cannot have come from this mixed strategy")
    total = sum(weights, Fraction(0))
    return tuple(retained), tuple(w / total for w in weights), predictions


# -- plan ------------------------------------------------------------------------


@dataclass(frozen=True)
class CellPlan:
    index: int
    start: Fraction
    end: Fraction
    good_atoms: tuple[int, ...]  # atoms whose grid misses this open cell
    level: int                   # finest in-cell schedule any history needs


@dataclass(frozen=True)
class ResponsePlan:
    eps_target: Fraction
    eps_internal: Fraction
    r: float
    horizon: Fraction
    horizon_float: float
    level: int
    cells: tuple[CellPlan, ...] = ()

    @property
    def cell_count(self) -> int:
        return 1 << self.level

    def cell_bounds(self, k: int) -> tuple[Fraction, Fraction]:
        width = Fraction(self.horizon, self.cell_count)
        return k * width, (k + 1) * width

    def cell_of(self, t: Fraction) -> int:
        return int(Fraction(t * self.cell_count, self.horizon))

    def to_json(self) -> dict:
        return {
            "eps_target": frac_str(self.eps_target),
            "eps_internal": frac_str(self.eps_internal),
            "T": self.horizon_float,
            "n_hat": self.level,
            "cells": [{"k": c.index,
                       "good_atoms": list(c.good_atoms),
                       "n_star": c.level} for c in self.cells],
        }


# -- the strategy ------------------------------------------------------------------


class _CellState:
    """Snapshot of one history at a cell boundary.

    Everything in here is a pure function of the observed opponent prefix up
    to the cell start, which is what makes memoizing by that prefix sound.
    """

    __slots__ = ("retained", "weights", "sims", "own_play", "schedule",
                 "determined")

    def __init__(self, retained, weights, sims, own_play):
        self.retained = retained    # tuple[int]; may be empty off-support
        self.weights = weights      # dict[int, Fraction], renormalized
        self.sims = sims            # dict[int, (committed segments, next round)]
        self.own_play = own_play    # own control on [0, cell start)
        self.schedule = None        # unit-interval GuessSchedule, set on finish
        self.determined = None      # cell-offset prediction when it is certain


class GuaranteeingResponder:
    """Runtime half of the construction: a pure function of observed prefixes."""

    def __init__(self, m_opp: MixedStrategy, plan: ResponsePlan, seat: str,
                 alphabet: Sequence[Symbol] = DEFAULT_ALPHABET):
        if len(alphabet) != 2:
            raise UsageError("the guessing core needs a two-symbol alphabet")
        if seat not in (AQUA, BARD):
            raise UsageError(f"unknown seat {seat!r}")
        self.m_opp = m_opp
        self.plan = plan
        self.seat = seat
        self.preferred, self.fallback = alphabet
        # the matcher commits the majority symbol; the mismatcher its flip
        self.flip = seat == AQUA
        self._memo: dict[tuple[int, StepFunction], _CellState] = {}

    # DelayStrategy responder signature
    def __call__(self, n: int, start: Fraction, end: Fraction,
                 opponent: StepFunction) -> StepFunction:
        if start >= self.plan.horizon:
            return StepFunction.constant(self.fallback, end - start)
        k = self.plan.cell_of(start)
        state = self._state_at(k, opponent)
        cell_start, cell_end = self.plan.cell_bounds(k)
        if state.determined is not None:
            value = self._commit(state.determined.value_at(start - cell_start))
            return StepFunction.constant(value, end - start)
        width = cell_end - cell_start
        j = self._subround(state.schedule, Fraction(start - cell_start, width))
        value = self._window_value(state.schedule, j, cell_start, width, opponent)
        return StepFunction.constant(value, end - start)

    def _commit(self, value: Symbol) -> Symbol:
        """Symbol actually played when aiming at value: flipped for the mismatcher."""
        if self.flip:
            return self.preferred if value == self.fallback else self.fallback
        return value

    @staticmethod
    def _subround(schedule: GuessSchedule, tau: Fraction) -> int:
        return bisect_right(schedule.points, tau) - 1

    def _window_value(self, schedule: GuessSchedule, j: int, cell_start: Fraction,
                      width: Fraction, source: StepFunction) -> Symbol:
        """Value committed on sub-round j of a cell, given observable data.

        Even sub-rounds observe (play the fallback); odd ones commit the
        strict-majority symbol of the opponent's play on the preceding
        observation window, read from `source`, flipped for the mismatcher.
        """
        if j % 2 == 0:
            return self.fallback
        win_a = cell_start + schedule.points[j - 1] * width
        win_b = cell_start + schedule.points[j] * width
        observed = source.restrict(win_a, win_b)
        threshold = width * schedule.eps / (1 << (schedule.n_star + 1))
        return self._commit(
            majority_value(observed, threshold, self.preferred, self.fallback))

    # -- state chain -------------------------------------------------------

    def _state_at(self, k: int, opponent: StepFunction) -> _CellState:
        """State on entry to cell k, memoized by the observed prefix."""
        keys = []
        for j in range(k, -1, -1):
            cell_start, _ = self.plan.cell_bounds(j)
            key = (j, opponent.prefix(cell_start))
            if key in self._memo:
                state = self._memo[key]
                break
            keys.append(key)
        else:
            state = self._initial_state()
            self._memo[keys.pop()] = state
        while keys:
            key = keys.pop()
            state = self._advance(state, key[0] - 1, opponent)
            self._memo[key] = state
        return state

    def _initial_state(self) -> _CellState:
        retained = tuple(range(len(self.m_opp.atoms)))
        weights = {i: p for i, (p, _) in enumerate(self.m_opp.atoms)}
        sims = {i: (StepFunction.empty(), 0) for i in retained}
        state = _CellState(retained, weights, sims, StepFunction.empty())
        self._finish_state(state, 0)
        return state

    def _finish_state(self, state: _CellState, k: int) -> None:
        """Predict good atoms across cell k and size the cell's schedule.

        When every retained atom is predictable and all predictions agree
        the cell needs no observation at all: the predicted section is
        committed directly (state.determined), which both tightens the
        guarantee and keeps the sub-round grids from compounding when an
        opponent feeds our own play back at us.
        """
        start, end = self.plan.cell_bounds(k)
        own_total = _own_total(state.own_play, self.fallback)
        raw = []
        sections = []
        weights = []
        for i in state.retained:
            strat = self.m_opp.atoms[i][1]
            if not _grid_misses(strat.grid, start, end):
                continue
            state.sims[i] = _extend_sim(strat, state.sims[i], own_total, end)
            prediction = state.sims[i][0].restrict(start, end)
            raw.append(prediction)
            sections.append(time_change(prediction, start, end, "inverse"))
            weights.append(state.weights[i])
        if raw and len(raw) == len(state.retained) and all(
                p == raw[0] for p in raw[1:]):
            state.determined = raw[0]
            return
        level = 0
        if sections:
            total = sum(weights, Fraction(0))
            model = RandomFunctionModel(
                tuple((w / total, s) for w, s in zip(weights, sections)))
            level = n_star(model, self.plan.eps_internal)
        state.schedule = build_schedule(level, self.plan.eps_internal)

    def _advance(self, prev: _CellState, k: int,
                 opponent: StepFunction) -> _CellState:
        """Cross cell k: extend own play, re-filter atoms, size the next cell."""
        start, end = self.plan.cell_bounds(k)
        own_cell = self._own_cell_play(prev, start, end, opponent)
        own_play = own_cell if prev.own_play.is_empty() else splice(
            [prev.own_play, own_cell])
        observed_cell = opponent.restrict(start, end)
        own_total = _own_total(own_play, self.fallback)
        retained = []
        weights = {}
        sims = {}
        for i in prev.retained:
            strat = self.m_opp.atoms[i][1]
            sim = _extend_sim(strat, prev.sims[i], own_total, end)
            if sim[0].restrict(start, end) != observed_cell:
                continue
            retained.append(i)
            weights[i] = prev.weights[i]
            sims[i] = sim
        total = sum(weights.values(), Fraction(0))
        if total > 0:
            weights = {i: w / total for i, w in weights.items()}
        state = _CellState(tuple(retained), weights, sims, own_play)
        self._finish_state(state, k + 1)
        return state

    def _own_cell_play(self, state: _CellState, start: Fraction, end: Fraction,
                       opponent: StepFunction) -> StepFunction:
        """Own committed values across one whole completed cell."""
        if state.determined is not None:
            det = state.determined
            return StepFunction(det.domain_end, det.breakpoints,
                                tuple(self._commit(v) for v in det.values))
        width = end - start
        sched = state.schedule
        segs = []
        for j in range(sched.rounds):
            a = start + sched.points[j] * width
            b = start + sched.points[j + 1] * width
            value = self._window_value(sched, j, start, width, opponent)
            segs.append(StepFunction.constant(value, b - a))
        return splice(segs)


def _extend_sim(strategy: DelayStrategy, sim: tuple[StepFunction, int],
                opponent_total: StepFunction,
                upto: Fraction) -> tuple[StepFunction, int]:
    """Extend an atom's committed-play simulation through rounds below upto."""
    committed, nxt = sim
    segs = []
    while strategy.grid.point(nxt) < upto:
        segs.append(strategy.segment(nxt, opponent_total))
        nxt += 1
    if segs:
        tail = splice(segs)
        committed = tail if committed.is_empty() else splice([committed, tail])
    return committed, nxt


# -- builder ---------------------------------------------------------------------


def build_best_response(m_opp: MixedStrategy, eps_target: FractionLike,
                        r: float, seat: str | None = None,
                        ) -> tuple[DelayStrategy, ResponsePlan]:
    """Construct the guaranteeing strategy and its plan against m_opp.

    seat defaults to the opposite of m_opp's player tag. The returned
    strategy's grid is the union of the dyadic cell edges and every
    sub-round boundary reachable against m_opp's atoms, continued past the
    horizon with unit steps; its responder reads only observed prefixes.
    """
    eps_target = to_frac(eps_target)
    if seat is None:
        seat = BARD if m_opp.player == AQUA else AQUA
    if seat == m_opp.player:
        raise UsageError("response seat must equal the opposing player")
    eps_int = internal_epsilon(eps_target, r)
    T = rational_horizon(eps_int, r)
    level = find_refinement_level(m_opp, eps_int, r, T)
    plan = ResponsePlan(eps_target, eps_int, r, T,
                        discount_horizon(eps_int, r), level)
    responder = GuaranteeingResponder(m_opp, plan, seat)
    points, cells = _collect_grid(m_opp, responder, plan)
    grid = Grid(tuple(points), Fraction(1))
    plan = ResponsePlan(eps_target, eps_int, r, T, plan.horizon_float,
                        level, tuple(cells))
    name = f"guarantee-{seat}-eps{frac_str(eps_target)}-r{r}"
    return DelayStrategy(grid, responder, name), plan


def _collect_grid(m_opp: MixedStrategy, responder: GuaranteeingResponder,
                  plan: ResponsePlan) -> tuple[list[Fraction], list[CellPlan]]:
    """Forward-simulate each atom to gather all reachable sub-round points.

    The responder's memo keeps shared-prefix work linear; each simulated
    play is exactly what the engine reconstructs later, so the union of the
    visited schedules' points is the full reachable set.
    """
    T = plan.horizon
    points: set[Fraction] = {T}
    cell_levels = [0] * plan.cell_count
    for _, strat in m_opp.atoms:
        opponent = _simulate_atom_play(strat, responder, plan)
        for k in range(plan.cell_count):
            state = responder._state_at(k, opponent)
            start, end = plan.cell_bounds(k)
            if state.determined is not None:
                points.update(start + q for q in state.determined.breakpoints)
                continue
            width = end - start
            points.update(start + q * width for q in state.schedule.points[:-1])
            cell_levels[k] = max(cell_levels[k], state.schedule.n_star)
    cell_plans = []
    for k in range(plan.cell_count):
        start, end = plan.cell_bounds(k)
        good = tuple(i for i, (_, s) in enumerate(m_opp.atoms)
                     if _grid_misses(s.grid, start, end))
        cell_plans.append(CellPlan(k, start, end, good, cell_levels[k]))
    return sorted(points), cell_plans


def _simulate_atom_play(atom: DelayStrategy, responder: GuaranteeingResponder,
                        plan: ResponsePlan) -> StepFunction:
    """Lockstep build-time play of one opponent atom against the responder.

    Used before the declared grid exists: walks each cell's sub-windows
    merged with the atom's own grid points, committing both sides in time
    order. Returns the atom's realized control on [0, T), totalized.
    """
    opp_segments: list[StepFunction] = []
    own_segments: list[StepFunction] = []
    sim: tuple[StepFunction, int] = (StepFunction.empty(), 0)
    for k in range(plan.cell_count):
        start, end = plan.cell_bounds(k)
        width = end - start
        opp_prefix = splice(opp_segments) if opp_segments else StepFunction.empty()
        state = responder._state_at(k, _own_total(opp_prefix, responder.fallback))
        if state.determined is not None:
            own_points = {start + q for q in state.determined.breakpoints}
        else:
            own_points = {start + q * width for q in state.schedule.points}
        boundaries = sorted(own_points | {end}
                            | {g for g in atom.grid.points_below(end) if g > start})
        for idx in range(len(boundaries) - 1):
            a, b = boundaries[idx], boundaries[idx + 1]
            own_before = splice(own_segments) if own_segments else StepFunction.empty()
            sim = _extend_sim(atom, sim, _own_total(own_before, responder.fallback), b)
            if state.determined is not None:
                value = responder._commit(state.determined.value_at(a - start))
            else:
                sched = state.schedule
                j = responder._subround(sched, Fraction(a - start, width))
                value = responder._window_value(sched, j, start, width, sim[0])
            own_segments.append(StepFunction.constant(value, b - a))
            opp_segments.append(sim[0].restrict(a, b))
    control = splice(opp_segments)
    return control.with_tail(control.values[-1])


# -- verification -------------------------------------------------------------------


@dataclass(frozen=True)
class LossBreakdown:
    """Where the guarantee's slack went, in discounted mass.

    Budgets are the construction's a-priori allowances; realized values are
    measured on the actual plays. The horizon tail is an allowance (nothing
    past T is simulated), so its realized column is the exact tail mass.
    """

    budget_tail: float
    budget_spoiled: float
    budget_guessing: float
    realized_tail: float
    realized_spoiled: float
    realized_guessing: float
    realized_beyond_horizon: float
    truncation_bound: float

    @property
    def budget_total(self) -> float:
        return self.budget_tail + self.budget_spoiled + self.budget_guessing

    def to_json(self) -> dict:
        return {
            "budget": {"tail": self.budget_tail, "spoiled_cells": self.budget_spoiled,
                       "guessing": self.budget_guessing, "total": self.budget_total},
            "realized": {"tail": self.realized_tail,
                         "spoiled_cells": self.realized_spoiled,
                         "guessing": self.realized_guessing,
                         "beyond_horizon": self.realized_beyond_horizon},
            "truncation_bound": self.truncation_bound,
        }


@dataclass(frozen=True)
class GuaranteeReport:
    seat: str
    eps_target: Fraction
    r: float
    gamma: float
    bound: float
    passed: bool
    margin: float
    plan: ResponsePlan
    losses: LossBreakdown
    per_atom: tuple[tuple[int, Fraction, float], ...]  # (atom, prob, payoff)
    summary: PayoffSummary
    strategy: DelayStrategy  # the built response, for reuse by callers

    def to_json(self) -> dict:
        return {
            "seat": self.seat,
            "eps_target": frac_str(self.eps_target),
            "r": self.r,
            "gamma": self.gamma,
            "bound": self.bound,
            "passed": self.passed,
            "margin": self.margin,
            "per_atom": [{"atom": i, "p": frac_str(p), "payoff": g}
                         for i, p, g in self.per_atom],
            "losses": self.losses.to_json(),
            "plan": self.plan.to_json(),
        }


def _loss_masses(play: Play, r: float, plan: ResponsePlan, spoiled: set[int],
                 losing_on_match: bool, t_trunc: Fraction) -> tuple[float, float, float]:
    """Discounted loss mass split into (spoiled cells, clean cells, past T)."""
    T = plan.horizon
    width = Fraction(T, plan.cell_count)
    lost_spoiled = lost_clean = lost_beyond = 0.0
    for s, e, av, bv in merged_pieces(play.aqua, play.bard, end=t_trunc):
        lost = (av == bv) if losing_on_match else (av != bv)
        if not lost:
            continue
        cur = s
        while cur < e:
            if cur >= T:
                lost_beyond += math.exp(-r * float(cur)) - math.exp(-r * float(e))
                break
            k = plan.cell_of(cur)
            stop = min(e, (k + 1) * width)
            mass = math.exp(-r * float(cur)) - math.exp(-r * float(stop))
            if k in spoiled:
                lost_spoiled += mass
            else:
                lost_clean += mass
            cur = stop
    return lost_spoiled, lost_clean, lost_beyond


def verify_guarantee(m_opp: MixedStrategy, eps_target: FractionLike, r: float,
                     seat: str | None = None) -> GuaranteeReport:
    """Build the response, enumerate all atom pairs, and grade the bound.

    The payoff is computed by exact play enumeration truncated where the
    discounted tail is below 1e-9; that tail is part of the reported margin,
    so a pass is a pass for the untruncated game too.
    """
    eps_target = to_frac(eps_target)
    strategy, plan = build_best_response(m_opp, eps_target, r, seat)
    seat = strategy.responder.seat
    t_trunc = max(default_truncation(r), plan.horizon + 1)
    mine = MixedStrategy.pure(seat, strategy)
    if seat == BARD:
        summary = expected_payoff(m_opp, mine, r, t_trunc=t_trunc)
        gamma = summary.gamma_bard
    else:
        summary = expected_payoff(mine, m_opp, r, t_trunc=t_trunc)
        gamma = summary.gamma_aqua
    bound = 1.0 - float(eps_target)
    losing_on_match = seat == AQUA
    tail_budget = float(plan.eps_internal)
    spoiled_budget = tail_budget
    guessing_budget = r * tail_budget
    realized_tail = math.exp(-r * float(plan.horizon))
    lost_spoiled = lost_clean = lost_beyond = 0.0
    per_atom = []
    for out in summary.outcomes:
        atom_idx = out.atom_aqua if seat == BARD else out.atom_bard
        own_payoff = out.payoff_bard if seat == BARD else out.payoff_aqua
        per_atom.append((atom_idx, out.prob, own_payoff))
        spoiled = _interior_cells(m_opp.atoms[atom_idx][1].grid, plan.level,
                                  plan.horizon)
        a, c, b = _loss_masses(out.play, r, plan, spoiled, losing_on_match,
                               t_trunc)
        w = float(out.prob)
        lost_spoiled += w * a
        lost_clean += w * c
        lost_beyond += w * b
    losses = LossBreakdown(
        budget_tail=tail_budget, budget_spoiled=spoiled_budget,
        budget_guessing=guessing_budget, realized_tail=realized_tail,
        realized_spoiled=lost_spoiled, realized_guessing=lost_clean,
        realized_beyond_horizon=lost_beyond,
        truncation_bound=summary.tail_bound)
    return GuaranteeReport(
        seat=seat, eps_target=eps_target, r=r, gamma=gamma, bound=bound,
        passed=gamma > bound, margin=gamma - bound, plan=plan, losses=losses,
        per_atom=tuple(per_atom), summary=summary, strategy=strategy)
