"""Exact arithmetic for piecewise-constant functions on half-open intervals.

A :class:`StepFunction` is finitely piecewise constant on ``[0, domain_end)``
with exact rational breakpoints, optionally extended to ``[domain_end, inf)``
by a constant ``tail_value``.  All pieces are half-open ``[s, t)``.
Construction normalizes to canonical form (adjacent equal values merged), so
structural equality coincides with almost-everywhere equality.

Values are opaque symbols (any hashable, in practice short strings from a
finite alphabet).  Time points and measures are `fractions.Fraction`; floats
enter only through the exponentials of discounted integrals.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

from .errors import DomainError, UsageError
from .rational import FractionLike, to_frac

Symbol = str

DEFAULT_ALPHABET: tuple[Symbol, Symbol] = ("a", "b")


@dataclass(frozen=True)
class StepFunction:
    """Piecewise-constant function on [0, domain_end), canonical form.

    ``breakpoints[i]`` starts piece i, which carries ``values[i]`` and ends at
    ``breakpoints[i+1]`` (or ``domain_end`` for the last piece).  An empty
    function (``domain_end == 0``) has no pieces.  With ``tail_value`` set the
    function is total on [0, inf).
    """

    domain_end: Fraction
    breakpoints: tuple[Fraction, ...]
    values: tuple[Symbol, ...]
    tail_value: Symbol | None = None

    def __post_init__(self) -> None:
        end = to_frac(self.domain_end)
        breaks = tuple(to_frac(b) for b in self.breakpoints)
        vals = tuple(self.values)
        if end < 0:
            raise UsageError("domain_end must be non-negative")
        if len(breaks) != len(vals):
            raise UsageError("one value per breakpoint required")
        if end == 0:
            if breaks:
                raise UsageError("empty domain admits no pieces")
        else:
            if not breaks or breaks[0] != 0:
                raise UsageError("first breakpoint must be 0")
            for prev, cur in zip(breaks, breaks[1:]):
                if cur <= prev:
                    raise UsageError("breakpoints must be strictly increasing")
            if breaks[-1] >= end:
                raise UsageError("breakpoints must lie strictly below domain_end")
        nb, nv = _normalize(breaks, vals)
        object.__setattr__(self, "domain_end", end)
        object.__setattr__(self, "breakpoints", nb)
        object.__setattr__(self, "values", nv)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def constant(value: Symbol, end: FractionLike = 1,
                 tail: Symbol | None = None) -> "StepFunction":
        end = to_frac(end)
        if end == 0:
            return StepFunction(end, (), (), tail)
        return StepFunction(end, (Fraction(0),), (value,), tail)

    @staticmethod
    def from_pieces(pieces: Sequence[tuple[FractionLike, Symbol]],
                    end: FractionLike,
                    tail: Symbol | None = None) -> "StepFunction":
        """Build from (start, value) pairs; starts must begin at 0."""
        breaks = tuple(to_frac(s) for s, _ in pieces)
        vals = tuple(v for _, v in pieces)
        return StepFunction(to_frac(end), breaks, vals, tail)

    @staticmethod
    def empty() -> "StepFunction":
        return StepFunction(Fraction(0), (), (), None)

    # -- basic queries -----------------------------------------------------

    @property
    def length(self) -> Fraction:
        return self.domain_end

    def is_empty(self) -> bool:
        return self.domain_end == 0

    def value_at(self, t: FractionLike) -> Symbol:
        """Value of the piece whose half-open interval contains t."""
        t = to_frac(t)
        if t < 0:
            raise DomainError(f"t = {t} is negative")
        if t >= self.domain_end:
            if self.tail_value is not None:
                return self.tail_value
            raise DomainError(f"t = {t} outside domain [0, {self.domain_end})")
        idx = bisect_right(self.breakpoints, t) - 1
        return self.values[idx]

    def pieces(self) -> Iterator[tuple[Fraction, Fraction, Symbol]]:
        """Yield (start, end, value) for the finite part."""
        for i, start in enumerate(self.breakpoints):
            end = self.breakpoints[i + 1] if i + 1 < len(self.breakpoints) else self.domain_end
            yield start, end, self.values[i]

    def measure_where(self, predicate: Callable[[Symbol], bool]) -> Fraction:
        """Lebesgue measure of {t in [0, domain_end) : predicate(f(t))}."""
        total = Fraction(0)
        for start, end, val in self.pieces():
            if predicate(val):
                total += end - start
        return total

    def measure_of(self, symbol: Symbol) -> Fraction:
        return self.measure_where(lambda v: v == symbol)

    # -- structural operations ---------------------------------------------

    def restrict(self, s: FractionLike, t: FractionLike) -> "StepFunction":
        """Restriction to [s, t), re-based to domain [0, t-s).

        t may exceed domain_end only when a tail value is present.
        """
        s, t = to_frac(s), to_frac(t)
        if s >= t:
            raise UsageError(f"empty restriction interval [{s}, {t})")
        if s < 0:
            raise DomainError("restriction start is negative")
        if t > self.domain_end and self.tail_value is None:
            raise DomainError(f"restriction end {t} beyond domain [0, {self.domain_end})")
        breaks: list[Fraction] = [Fraction(0)]
        vals: list[Symbol] = [self.value_at(s)]
        for b in self.breakpoints:
            if s < b < t:
                breaks.append(b - s)
                vals.append(self.value_at(b))
        if s < self.domain_end < t:
            breaks.append(self.domain_end - s)
            vals.append(self.tail_value)  # type: ignore[arg-type]
        return StepFunction(t - s, tuple(breaks), tuple(vals), None)

    def prefix(self, t: FractionLike) -> "StepFunction":
        """Restriction to [0, t); the empty function when t == 0."""
        t = to_frac(t)
        if t == 0:
            return StepFunction.empty()
        return self.restrict(0, t)

    def with_tail(self, tail: Symbol | None) -> "StepFunction":
        return StepFunction(self.domain_end, self.breakpoints, self.values, tail)

    def to_json(self) -> dict:
        from .rational import frac_str
        return {
            "end": frac_str(self.domain_end),
            "breaks": [frac_str(b) for b in self.breakpoints],
            "vals": list(self.values),
            "tail": self.tail_value,
        }

    @staticmethod
    def from_json(obj: dict) -> "StepFunction":
        from .errors import SpecParseError
        try:
            return StepFunction(
                to_frac(obj["end"]),
                tuple(to_frac(b) for b in obj["breaks"]),
                tuple(obj["vals"]),
                obj.get("tail"),
            )
        except (KeyError, TypeError, UsageError) as exc:
            raise SpecParseError(f"bad step function object: {exc}") from exc


def _normalize(breaks: tuple[Fraction, ...],
               vals: tuple[Symbol, ...]) -> tuple[tuple[Fraction, ...], tuple[Symbol, ...]]:
    # merge adjacent pieces with equal values
    nb: list[Fraction] = []
    nv: list[Symbol] = []
    for b, v in zip(breaks, vals):
        if nv and nv[-1] == v:
            continue
        nb.append(b)
        nv.append(v)
    return tuple(nb), tuple(nv)


# -- binary merge sweep ------------------------------------------------------

def merged_pieces(f: StepFunction, g: StepFunction,
                  end: Fraction | None = None) -> Iterator[tuple[Fraction, Fraction, Symbol, Symbol]]:
    """Sweep the union of breakpoints, yielding (start, end, f value, g value).

    Extends past either function's domain_end through its tail value; the
    caller must ensure tails exist where the sweep needs them.
    """
    if end is None:
        end = max(f.domain_end, g.domain_end)
    cuts = sorted({b for b in f.breakpoints if b < end}
                  | {b for b in g.breakpoints if b < end}
                  | ({f.domain_end} if f.domain_end < end else set())
                  | ({g.domain_end} if g.domain_end < end else set())
                  | {Fraction(0)})
    for i, start in enumerate(cuts):
        stop = cuts[i + 1] if i + 1 < len(cuts) else end
        if stop <= start:
            continue
        yield start, stop, f.value_at(start), g.value_at(start)


def agreement_measure(f: StepFunction, g: StepFunction) -> Fraction:
    """Exact Lebesgue measure of {t : f(t) = g(t)} over the common domain."""
    if f.domain_end != g.domain_end:
        raise UsageError(
            f"domain mismatch: [0,{f.domain_end}) vs [0,{g.domain_end})")
    total = Fraction(0)
    for start, stop, fv, gv in merged_pieces(f, g, end=f.domain_end):
        if fv == gv:
            total += stop - start
    return total


def disagreement_measure(f: StepFunction, g: StepFunction) -> Fraction:
    return f.domain_end - agreement_measure(f, g)


def splice(segments: Sequence[StepFunction],
           tail: Symbol | None = None) -> StepFunction:
    """Concatenate segments end to end; the result is normalized."""
    if not segments:
        raise UsageError("splice of an empty segment list")
    breaks: list[Fraction] = []
    vals: list[Symbol] = []
    offset = Fraction(0)
    for seg in segments:
        if seg.is_empty():
            raise UsageError("splice segment has empty domain")
        for b, v in zip(seg.breakpoints, seg.values):
            breaks.append(offset + b)
            vals.append(v)
        offset += seg.domain_end
    return StepFunction(offset, tuple(breaks), tuple(vals), tail)


def time_change(f: StepFunction, s: FractionLike, t: FractionLike,
                direction: str = "forward") -> StepFunction:
    """Affine bijection between the unit domain [0,1) and a re-based [0, t-s).

    forward: f on [0,1) is stretched onto [0, t-s); inverse: f on [0, t-s)
    is shrunk back onto [0,1).  Values and tail are preserved; exact rational
    arithmetic throughout.
    """
    s, t = to_frac(s), to_frac(t)
    if s >= t:
        raise UsageError(f"degenerate time change: [{s}, {t})")
    scale = t - s
    if direction == "forward":
        if f.domain_end != 1:
            raise UsageError("forward time change expects the unit domain")
        factor = scale
    elif direction == "inverse":
        if f.domain_end != scale:
            raise UsageError(
                f"inverse time change expects domain [0, {scale}), got [0, {f.domain_end})")
        factor = Fraction(1) / scale
    else:
        raise UsageError(f"unknown direction {direction!r}")
    return StepFunction(
        f.domain_end * factor,
        tuple(b * factor for b in f.breakpoints),
        f.values,
        f.tail_value,
    )


def majority_value(f: StepFunction, threshold: FractionLike,
                   preferred: Symbol, fallback: Symbol) -> Symbol:
    """preferred if Leb({f = preferred}) strictly exceeds threshold, else fallback.

    Ties go to fallback (strict inequality).
    """
    return preferred if f.measure_of(preferred) > to_frac(threshold) else fallback


# -- discounted integrals ----------------------------------------------------

def discounted_mass(r: float, start: Fraction, end: Fraction | None) -> float:
    """Closed form of the integral of r*exp(-r t) over [start, end)."""
    hi = math.exp(-r * float(start))
    lo = 0.0 if end is None else math.exp(-r * float(end))
    return hi - lo


def discounted_integral(f: StepFunction, r: float,
                        predicate: Callable[..., bool],
                        g: StepFunction | None = None) -> float:
    """Integral of r*exp(-r t) over {t : predicate holds}, in closed form.

    With ``g`` given the predicate takes the pair (f(t), g(t)); otherwise it
    takes f(t) alone.  Integrates over [0, inf) when tail values are present
    on every argument, else over the (equal) finite domains.  No quadrature:
    one exponential difference per merged piece.
    """
    if r <= 0:
        raise UsageError(f"discount rate must be positive, got {r}")
    if g is None:
        funcs = (f,)
        holds = lambda fv, gv: predicate(fv)  # noqa: E731
        g = f
    else:
        funcs = (f, g)
        holds = predicate
    infinite = all(h.tail_value is not None for h in funcs)
    if not infinite:
        ends = {h.domain_end for h in funcs if h.tail_value is None}
        if len(ends) > 1 or any(h.domain_end > min(ends) for h in funcs):
            raise UsageError("finite-domain integral requires equal domains")
    end = max(f.domain_end, g.domain_end)
    total = 0.0
    for start, stop, fv, gv in merged_pieces(f, g, end=end):
        if holds(fv, gv):
            total += discounted_mass(r, start, stop)
    if infinite and holds(f.value_at(end), g.value_at(end)):
        total += discounted_mass(r, end, None)
    return total
