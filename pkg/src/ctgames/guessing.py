"""Bard's side of the function-guessing game.

The schedule alternates short observation intervals with long majority
intervals inside each level-n_star dyadic cell.  The responder commits its
next segment before the engine reveals the hidden section's restriction, so
information flow is enforced by construction and testable from the outside.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Protocol, Sequence

from .errors import ProtocolError, UsageError
from .rational import FractionLike, frac_str, to_frac
from .randomfn import RandomFunctionModel, n_star
from .stepfn import StepFunction, agreement_measure, majority_value, splice


@dataclass(frozen=True)
class GuessSchedule:
    """Round boundaries 0 = t_0 < ... < t_K = 1 with K = 2^(n_star+1).

    Even-indexed rounds [t_2k, t_2k+1) are observation windows of length
    eps/2^n_star; odd rounds carry the majority guess on the cell remainder.
    """

    points: tuple[Fraction, ...]
    n_star: int
    eps: Fraction

    @property
    def rounds(self) -> int:
        return len(self.points) - 1

    def interval(self, k: int) -> tuple[Fraction, Fraction]:
        return self.points[k], self.points[k + 1]

    def observation_length(self) -> Fraction:
        """Total measure of the observation windows; equals eps."""
        return sum((self.points[k + 1] - self.points[k]
                    for k in range(0, self.rounds, 2)), Fraction(0))


def build_schedule(level: int, eps: FractionLike) -> GuessSchedule:
    """t_2k = k/2^level, t_2k+1 = (k+eps)/2^level, up to t_K = 1."""
    eps = to_frac(eps)
    if not 0 < eps < 1:
        raise UsageError(f"eps must lie in (0, 1), got {eps}")
    cells = 1 << level
    points: list[Fraction] = []
    for k in range(cells):
        points.append(Fraction(k, cells))
        points.append(Fraction(k, cells) + Fraction(eps, cells))
    points.append(Fraction(1))
    return GuessSchedule(tuple(points), level, eps)


@dataclass(frozen=True)
class RoundTranscript:
    round: int
    committed: StepFunction  # re-based to [0, t_{k+1} - t_k)
    revealed: StepFunction


class Responder(Protocol):
    def respond(self, k: int, history: Sequence[RoundTranscript]) -> StepFunction:
        """Committed segment for round k, re-based to [0, interval length)."""


class ConstantResponder:
    """Plays one fixed symbol in every round."""

    def __init__(self, schedule: GuessSchedule, symbol: str):
        self.schedule = schedule
        self.symbol = symbol

    def respond(self, k: int, history: Sequence[RoundTranscript]) -> StepFunction:
        s, t = self.schedule.interval(k)
        return StepFunction.constant(self.symbol, t - s)


class AlphaEpsilonResponder:
    """Observe-then-majority guesser.

    Even rounds commit the fallback symbol (the "arbitrary" choice, pinned for
    determinism).  Odd rounds commit the strict-majority symbol of the section
    revealed on the preceding observation window, threshold eps/2^(n_star+1),
    ties to the fallback.
    """

    def __init__(self, schedule: GuessSchedule,
                 alphabet: Sequence[str] = ("a", "b")):
        if len(alphabet) != 2:
            raise UsageError("majority guessing needs a two-symbol alphabet")
        self.schedule = schedule
        self.preferred, self.fallback = alphabet
        self.threshold = Fraction(schedule.eps, 1 << (schedule.n_star + 1))

    def respond(self, k: int, history: Sequence[RoundTranscript]) -> StepFunction:
        if len(history) != k:
            raise ProtocolError(f"round {k} responded with {len(history)} prior rounds")
        s, t = self.schedule.interval(k)
        if k % 2 == 0:
            return StepFunction.constant(self.fallback, t - s)
        observed = history[k - 1].revealed
        symbol = majority_value(observed, self.threshold, self.preferred, self.fallback)
        return StepFunction.constant(symbol, t - s)


class CheatingResponder:
    """Test fixture: reads the hidden section's future and copies it.

    Information-flow checks must flag this; it is never used on a real path.
    """

    def __init__(self, schedule: GuessSchedule, section: StepFunction):
        self.schedule = schedule
        self.section = section

    def respond(self, k: int, history: Sequence[RoundTranscript]) -> StepFunction:
        s, t = self.schedule.interval(k)
        return self.section.restrict(s, t)


ResponderFactory = Callable[[GuessSchedule, StepFunction], Responder]


def alpha_epsilon_factory(schedule: GuessSchedule, section: StepFunction) -> Responder:
    # honest: ignores the section argument entirely
    return AlphaEpsilonResponder(schedule)


def cheating_factory(schedule: GuessSchedule, section: StepFunction) -> Responder:
    return CheatingResponder(schedule, section)


def play_transcript(section: StepFunction, schedule: GuessSchedule,
                    responder: Responder) -> tuple[list[RoundTranscript], StepFunction]:
    """Run all rounds; commit strictly before reveal; return transcript and g."""
    history: list[RoundTranscript] = []
    for k in range(schedule.rounds):
        s, t = schedule.interval(k)
        committed = responder.respond(k, tuple(history))
        if committed.domain_end != t - s:
            raise ProtocolError(
                f"round {k}: committed segment has length {committed.domain_end}, "
                f"interval has length {t - s}")
        revealed = section.restrict(s, t)
        history.append(RoundTranscript(k, committed, revealed))
    guess = splice([h.committed for h in history])
    return history, guess


def apply_alpha_epsilon(section: StepFunction, schedule: GuessSchedule) -> StepFunction:
    """The guess g produced against one section (the deterministic map alpha)."""
    _, guess = play_transcript(section, schedule, AlphaEpsilonResponder(schedule))
    return guess


@dataclass(frozen=True)
class GuessReport:
    """Exact per-atom agreements and the two graded probability bounds."""

    eps: Fraction
    n_star: int
    atoms: tuple[tuple[Fraction, Fraction], ...]  # (prob, agreement)
    prob_good: Fraction        # P(agreement >= 1 - 2*eps)
    expected_payoff: Fraction  # sum p * agreement
    label: str = ""

    @property
    def agreement_bound_holds(self) -> bool:
        return self.prob_good >= 1 - self.eps

    @property
    def payoff_bound_holds(self) -> bool:
        return self.expected_payoff >= 1 - 3 * self.eps

    def to_json(self) -> dict:
        return {
            "eps": frac_str(self.eps),
            "n_star": self.n_star,
            "atoms": [{"p": frac_str(p), "agreement": frac_str(a)}
                      for p, a in self.atoms],
            "prob_good": frac_str(self.prob_good),
            "expected_payoff": frac_str(self.expected_payoff),
            "bounds": {
                "prob_good_1_minus_eps": self.agreement_bound_holds,
                "payoff_1_minus_3eps": self.payoff_bound_holds,
            },
        }


def run_guessing_game(model: RandomFunctionModel, eps: FractionLike) -> GuessReport:
    """Play every atom against the majority guesser; aggregate exactly."""
    eps = to_frac(eps)
    level = n_star(model, eps)
    schedule = build_schedule(level, eps)
    rows = []
    for p, section in model.atoms:
        guess = apply_alpha_epsilon(section, schedule)
        rows.append((p, agreement_measure(section, guess)))
    floor = 1 - 2 * eps
    prob_good = sum((p for p, agr in rows if agr >= floor), Fraction(0))
    expected = sum((p * agr for p, agr in rows), Fraction(0))
    return GuessReport(eps, level, tuple(rows), prob_good, expected, model.label)


def enforce_information_flow(make_responder: ResponderFactory,
                             model: RandomFunctionModel,
                             eps: FractionLike,
                             max_pairs: int | None = None) -> tuple[bool, dict | None]:
    """Check that commitments depend only on previously revealed rounds.

    For atom pairs whose sections first differ at round k, the two responders'
    commitments must coincide on every round <= k.  Returns (True, None) or
    (False, counterexample dict).
    """
    eps = to_frac(eps)
    schedule = build_schedule(n_star(model, eps), eps)
    sections = [s for _, s in model.atoms]
    transcripts = []
    for section in sections:
        responder = make_responder(schedule, section)
        history, _ = play_transcript(section, schedule, responder)
        transcripts.append(history)
    checked = 0
    for i in range(len(sections)):
        for j in range(i + 1, len(sections)):
            if max_pairs is not None and checked >= max_pairs:
                return True, None
            first_diff = None
            for k in range(schedule.rounds):
                if transcripts[i][k].revealed != transcripts[j][k].revealed:
                    first_diff = k
                    break
            if first_diff is None:
                continue  # sections agree a.e.; nothing to distinguish
            checked += 1
            for k in range(first_diff + 1):
                if transcripts[i][k].committed != transcripts[j][k].committed:
                    return False, {
                        "atoms": (i, j),
                        "round": k,
                        "first_revealed_difference": first_diff,
                    }
    return True, None
