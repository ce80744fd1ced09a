"""Continuous-time Matching Pennies engine.

Players act through delay strategies: a grid of commitment times plus a
responder that, at each grid point, commits the next segment of play as a
function of the opponent's control. Responders formally receive the whole
opponent control; the delay property (equal opponent prefixes up to t_n give
equal own play up to t_{n+1}) is what check_nonanticipativity samples for.

Plays are built by recursion over the merged grid, payoffs by closed-form
discounted integrals truncated at a horizon whose tail mass is reported, never
simulated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import count
import random
from typing import Callable, Iterator, Sequence

from .errors import ProtocolError, UsageError
from .rational import FractionLike, ceil_to_grid, frac_str, to_frac
from .stepfn import (
    DEFAULT_ALPHABET,
    StepFunction,
    Symbol,
    discounted_integral,
    merged_pieces,
    splice,
)

AQUA = "aqua"
BARD = "bard"


@dataclass(frozen=True)
class Grid:
    """Unbounded commitment grid: explicit points, then a fixed positive step.

    point(0)=0 is always the first entry; past the explicit prefix the grid
    continues arithmetically, so it diverges and Definition-style strategies
    are finitely representable.
    """

    prefix: tuple[Fraction, ...] = (Fraction(0),)
    tail_step: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        prefix = tuple(to_frac(p) for p in self.prefix)
        step = to_frac(self.tail_step)
        if not prefix or prefix[0] != 0:
            raise UsageError("grid must start at 0")
        if any(b <= a for a, b in zip(prefix, prefix[1:])):
            raise UsageError("grid prefix must be strictly increasing")
        if step <= 0:
            raise UsageError("grid tail step must be positive")
        object.__setattr__(self, "prefix", prefix)
        object.__setattr__(self, "tail_step", step)

    def point(self, n: int) -> Fraction:
        if n < len(self.prefix):
            return self.prefix[n]
        return self.prefix[-1] + (n - len(self.prefix) + 1) * self.tail_step

    def points_below(self, horizon: Fraction) -> list[Fraction]:
        out = []
        for n in count():
            t = self.point(n)
            if t >= horizon:
                break
            out.append(t)
        return out

    def round_of(self, t: Fraction) -> int:
        """Index n with point(n) <= t < point(n+1)."""
        if t < 0:
            raise UsageError("negative time")
        last = self.prefix[-1]
        if t >= last:
            return len(self.prefix) - 1 + int((t - last) / self.tail_step)
        lo, hi = 0, len(self.prefix) - 1
        while lo + 1 < hi:
            mid = (lo + hi) // 2
            if self.prefix[mid] <= t:
                lo = mid
            else:
                hi = mid
        return lo if t < self.prefix[hi] else hi

    def to_json(self) -> dict:
        return {"points": [frac_str(p) for p in self.prefix],
                "tail_step": frac_str(self.tail_step)}

    @staticmethod
    def from_json(obj: dict) -> "Grid":
        return Grid(tuple(to_frac(p) for p in obj["points"]),
                    to_frac(obj["tail_step"]))


# responder(round n, t_start, t_end, opponent control) -> segment on [0, t_end - t_start)
Responder = Callable[[int, Fraction, Fraction, StepFunction], StepFunction]


@dataclass(frozen=True)
class DelayStrategy:
    grid: Grid
    responder: Responder
    name: str = ""

    def segment(self, n: int, opponent: StepFunction) -> StepFunction:
        start, end = self.grid.point(n), self.grid.point(n + 1)
        seg = self.responder(n, start, end, opponent)
        if seg.domain_end != end - start:
            raise ProtocolError(
                f"{self.name or 'strategy'} round {n}: segment length "
                f"{seg.domain_end}, round length {end - start}")
        return seg


@dataclass(frozen=True)
class MixedStrategy:
    player: str
    atoms: tuple[tuple[Fraction, DelayStrategy], ...]
    label: str = ""

    def __post_init__(self) -> None:
        atoms = tuple((to_frac(p), s) for p, s in self.atoms)
        if not atoms:
            raise UsageError("mixed strategy needs at least one atom")
        if any(p <= 0 for p, _ in atoms):
            raise UsageError("atom probabilities must be positive")
        if sum(p for p, _ in atoms) != 1:
            raise UsageError("atom probabilities must sum exactly to 1")
        if self.player not in (AQUA, BARD):
            raise UsageError(f"unknown player tag {self.player!r}")
        object.__setattr__(self, "atoms", atoms)

    @staticmethod
    def pure(player: str, strategy: DelayStrategy, label: str = "") -> "MixedStrategy":
        return MixedStrategy(player, ((Fraction(1), strategy),),
                             label or strategy.name)


def apply_strategy(strategy: DelayStrategy, opponent: StepFunction,
                   horizon: FractionLike) -> StepFunction:
    """The control the strategy emits against a fixed opponent control."""
    horizon = to_frac(horizon)
    if horizon <= 0:
        raise UsageError("horizon must be positive")
    if opponent.tail_value is None and opponent.domain_end < horizon:
        raise UsageError("opponent control must be total up to the horizon")
    segs = []
    for n in count():
        start, end = strategy.grid.point(n), strategy.grid.point(n + 1)
        if start >= horizon:
            break
        seg = strategy.segment(n, opponent)
        if end > horizon:
            seg = seg.prefix(horizon - start)
        segs.append(seg)
    out = splice(segs)
    return out.with_tail(out.values[-1])


def merge_grids(*grids: Grid, horizon: FractionLike) -> list[Fraction]:
    """Sorted deduplicated union of grid points strictly below the horizon."""
    horizon = to_frac(horizon)
    pts: set[Fraction] = set()
    for g in grids:
        pts.update(g.points_below(horizon))
    return sorted(pts)


def _as_total(built: list[StepFunction], fallback: Symbol) -> StepFunction:
    """Extend the built prefix to a total control for responder consumption.

    The extension value is immaterial for honest (delay) responders, which
    only read strictly below the current time; it is pinned for determinism.
    """
    if not built:
        return StepFunction.constant(fallback, 1, tail=fallback)
    control = splice(built)
    return control.with_tail(control.values[-1])


@dataclass(frozen=True)
class Play:
    """A constructed play: both controls, total via their final values."""

    aqua: StepFunction
    bard: StepFunction
    horizon: Fraction


def construct_play(s_aqua: DelayStrategy, s_bard: DelayStrategy,
                   horizon: FractionLike,
                   default_symbol: Symbol = DEFAULT_ALPHABET[1]) -> Play:
    """Fixed-point play on [0, horizon) by merged-grid recursion.

    At each merged grid point the players whose own grid fires commit their
    next segment, seeing the opponent's already-built play strictly below the
    point; the cell is then filled from both pending segments. Honest
    strategies make the outcome independent of the pinned default extension.
    """
    horizon = to_frac(horizon)
    if horizon <= 0:
        raise UsageError("horizon must be positive")
    points = merge_grids(s_aqua.grid, s_bard.grid, horizon=horizon)
    built: dict[str, list[StepFunction]] = {AQUA: [], BARD: []}
    pending: dict[str, StepFunction] = {}
    round_start: dict[str, Fraction] = {}
    next_round = {AQUA: 0, BARD: 0}
    strategies = {AQUA: s_aqua, BARD: s_bard}
    others = {AQUA: BARD, BARD: AQUA}

    for i, t in enumerate(points):
        for who in (AQUA, BARD):
            strat = strategies[who]
            if strat.grid.point(next_round[who]) == t:
                opponent = _as_total(built[others[who]], default_symbol)
                pending[who] = strat.segment(next_round[who], opponent)
                round_start[who] = t
                next_round[who] += 1
        cell_end = points[i + 1] if i + 1 < len(points) else horizon
        for who in (AQUA, BARD):
            seg = pending[who].restrict(t - round_start[who],
                                        cell_end - round_start[who])
            built[who].append(seg)

    u_aqua = splice(built[AQUA])
    u_bard = splice(built[BARD])
    return Play(u_aqua.with_tail(u_aqua.values[-1]),
                u_bard.with_tail(u_bard.values[-1]), horizon)


def construct_play_seeded(s_aqua: DelayStrategy, s_bard: DelayStrategy,
                          horizon: FractionLike,
                          seed_aqua: StepFunction,
                          seed_bard: StepFunction) -> Play:
    """Reference fixed-point iteration from arbitrary seed controls.

    Each sweep re-applies both strategies to the previous approximation; the
    delay property fixes one more merged-grid cell per sweep, so after
    (number of cells + 1) sweeps the pair is the play, whatever the seeds.
    """
    horizon = to_frac(horizon)
    sweeps = len(merge_grids(s_aqua.grid, s_bard.grid, horizon=horizon)) + 1
    u_aqua, u_bard = seed_aqua, seed_bard
    for _ in range(sweeps):
        u_aqua, u_bard = (apply_strategy(s_aqua, u_bard, horizon),
                          apply_strategy(s_bard, u_aqua, horizon))
    return Play(u_aqua, u_bard, horizon)


# -- payoffs -------------------------------------------------------------------

def mp_payoff(a_aqua: Symbol, a_bard: Symbol, player: str) -> int:
    """Matching Pennies stage payoff: Bard scores on a match, Aqua on a miss."""
    match = a_aqua == a_bard
    if player == BARD:
        return 1 if match else 0
    if player == AQUA:
        return 0 if match else 1
    raise UsageError(f"unknown player tag {player!r}")


def control_distance(u: StepFunction, v: StepFunction, r: float) -> float:
    """d(u, v) = integral of r e^{-rt} over the set where the controls differ."""
    return discounted_integral(u, r, lambda x, y: x != y, g=v)


def default_truncation(r: float, floor: float = 1e-9) -> Fraction:
    """Rational horizon whose discounted tail mass is certainly below floor."""
    if r <= 0:
        raise UsageError(f"discount rate must be positive, got {r}")
    return ceil_to_grid(-math.log(floor) / r)


def truncated_mp_payoffs(play: Play, r: float,
                         t_trunc: Fraction) -> tuple[float, float]:
    """Discounted Matching Pennies payoffs over [0, t_trunc), closed form.

    The omitted tail carries mass e^{-r t_trunc}, reported by callers. Only
    the match side is accumulated; the mismatch side is the complement of
    the truncated total, so the pair sums to 1 - e^{-r t_trunc} exactly and
    the constant-sum defect is the tail alone, free of summation error.
    """
    g_bard = 0.0
    for start, stop, av, bv in merged_pieces(play.aqua, play.bard, end=t_trunc):
        if av == bv:
            g_bard += math.exp(-r * float(start)) - math.exp(-r * float(stop))
    g_aqua = (1.0 - math.exp(-r * float(t_trunc))) - g_bard
    return g_aqua, g_bard


@dataclass(frozen=True)
class PlayOutcome:
    atom_aqua: int
    atom_bard: int
    prob: Fraction
    play: Play
    payoff_aqua: float
    payoff_bard: float


@dataclass(frozen=True)
class PayoffSummary:
    gamma_aqua: float
    gamma_bard: float
    tail_bound: float
    t_trunc: Fraction
    r: float
    outcomes: tuple[PlayOutcome, ...]

    @property
    def constant_sum_defect(self) -> float:
        return abs(self.gamma_aqua + self.gamma_bard - 1.0)


def expected_payoff(m_aqua: MixedStrategy, m_bard: MixedStrategy, r: float,
                    t_trunc: Fraction | None = None) -> PayoffSummary:
    """Exact enumeration over the product of atom sets.

    Every atom pair is played out to t_trunc; expectations weight the
    truncated payoffs by the exact product probabilities. The ignored tail is
    bounded by e^{-r t_trunc} and reported, never estimated.
    """
    if r <= 0:
        raise UsageError(f"discount rate must be positive, got {r}")
    if m_aqua.player != AQUA or m_bard.player != BARD:
        raise UsageError("expected_payoff needs an aqua and a bard strategy")
    if t_trunc is None:
        t_trunc = default_truncation(r)
    outcomes = []
    g_aqua = 0.0
    g_bard = 0.0
    for ia, (pa, sa) in enumerate(m_aqua.atoms):
        for ib, (pb, sb) in enumerate(m_bard.atoms):
            play = construct_play(sa, sb, t_trunc)
            pay_a, pay_b = truncated_mp_payoffs(play, r, t_trunc)
            prob = pa * pb
            w = float(prob)
            g_aqua += w * pay_a
            g_bard += w * pay_b
            outcomes.append(PlayOutcome(ia, ib, prob, play, pay_a, pay_b))
    tail = math.exp(-r * float(t_trunc))
    return PayoffSummary(g_aqua, g_bard, tail, t_trunc, r, tuple(outcomes))


# -- non-anticipativity sampling -------------------------------------------------

@dataclass(frozen=True)
class AnticipationWitness:
    round: int
    t_n: Fraction
    t_next: Fraction
    opponent_a: StepFunction
    opponent_b: StepFunction


def random_control(rng: random.Random, horizon: Fraction,
                   alphabet: Sequence[Symbol] = DEFAULT_ALPHABET,
                   max_pieces: int = 6) -> StepFunction:
    cuts = {Fraction(0)}
    for _ in range(rng.randint(0, max_pieces - 1)):
        q = rng.randint(2, 32)
        cuts.add(horizon * Fraction(rng.randint(1, q - 1), q))
    pieces = [(c, rng.choice(list(alphabet))) for c in sorted(cuts)]
    f = StepFunction.from_pieces(pieces, horizon)
    return f.with_tail(f.values[-1])


def check_nonanticipativity(strategy: DelayStrategy, samples: int = 1000,
                            seed: int = 0,
                            alphabet: Sequence[Symbol] = DEFAULT_ALPHABET,
                            max_round: int = 6) -> tuple[bool, AnticipationWitness | None]:
    """Sample opponent-control pairs equal before t_n, differing after.

    The strategy's outputs must agree on [0, t_{n+1}) for every such pair;
    the first violating pair is returned as the witness.
    """
    rng = random.Random(seed)
    flip = {a: b for a, b in zip(alphabet, list(alphabet[1:]) + [alphabet[0]])}
    for _ in range(samples):
        n = rng.randint(0, max_round)
        t_n = strategy.grid.point(n)
        t_next = strategy.grid.point(n + 1)
        horizon = strategy.grid.point(n + 2)
        u = random_control(rng, horizon, alphabet)
        # same prefix, guaranteed-different continuation
        cont = random_control(rng, horizon - t_n, alphabet)
        if cont.restrict(0, horizon - t_n) == u.restrict(t_n, horizon):
            cont = StepFunction.constant(flip[u.value_at(t_n)],
                                         horizon - t_n)
        v = splice([u.prefix(t_n), cont]) if t_n > 0 else cont
        v = v.with_tail(flip[u.tail_value])
        out_u = apply_strategy(strategy, u, horizon).prefix(t_next)
        out_v = apply_strategy(strategy, v, horizon).prefix(t_next)
        if out_u != out_v:
            return False, AnticipationWitness(n, t_n, t_next, u, v)
    return True, None
