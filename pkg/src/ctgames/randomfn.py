"""Finite-support random functions on [0,1) and their dyadic regularity levels.

A model is a finite probability space whose atoms each carry a step-function
section.  The regularity quantities measure how much of [0,1) is covered by
level-n dyadic intervals on which a section is constant; they drive the
guessing schedule.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .errors import SpecParseError, UsageError
from .rational import FractionLike, frac_str, to_frac
from .stepfn import DEFAULT_ALPHABET, StepFunction, Symbol

UNIT = Fraction(1)


@dataclass(frozen=True)
class RandomFunctionModel:
    """Atoms (prob, section), probs exactly summing to 1, sections on [0,1)."""

    atoms: tuple[tuple[Fraction, StepFunction], ...]
    label: str = ""
    alphabet: tuple[Symbol, ...] = DEFAULT_ALPHABET

    def __post_init__(self) -> None:
        atoms = tuple((to_frac(p), s) for p, s in self.atoms)
        if not atoms:
            raise UsageError("model needs at least one atom")
        total = sum(p for p, _ in atoms)
        if total != 1:
            raise UsageError(f"atom probabilities sum to {total}, not 1")
        symbols = set(self.alphabet)
        for p, section in atoms:
            if p <= 0:
                raise UsageError("atom probabilities must be positive")
            if section.domain_end != UNIT:
                raise UsageError("sections must live on [0, 1)")
            if not set(section.values) <= symbols:
                raise UsageError("section uses symbols outside the alphabet")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "alphabet", tuple(self.alphabet))

    def __len__(self) -> int:
        return len(self.atoms)

    def prob_where(self, predicate: Callable[[StepFunction], bool]) -> Fraction:
        return sum((p for p, s in self.atoms if predicate(s)), Fraction(0))

    def expectation(self, fn: Callable[[StepFunction], Fraction]) -> Fraction:
        return sum((p * fn(s) for p, s in self.atoms), Fraction(0))

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "atoms": [{"p": frac_str(p), "section": s.to_json()}
                      for p, s in self.atoms],
        }

    @staticmethod
    def from_json(obj: dict) -> "RandomFunctionModel":
        try:
            atoms = tuple((to_frac(a["p"]), StepFunction.from_json(a["section"]))
                          for a in obj["atoms"])
            label = obj.get("label", "")
        except (KeyError, TypeError) as exc:
            raise SpecParseError(f"bad model object: {exc}") from exc
        try:
            return RandomFunctionModel(atoms, label)
        except UsageError as exc:
            raise SpecParseError(str(exc)) from exc


# -- dyadic regularity --------------------------------------------------------

def good_fraction(section: StepFunction, n: int) -> Fraction:
    """Fraction of level-n dyadic intervals with no breakpoint strictly inside."""
    if section.domain_end != UNIT:
        raise UsageError("good_fraction expects a section on [0, 1)")
    cells = 1 << n
    # a cell is spoiled iff some breakpoint falls strictly inside it;
    # breakpoints landing exactly on cell edges are harmless
    interior_hits = set()
    for b in section.breakpoints:
        if b == 0:
            continue
        scaled = b * cells
        if scaled.denominator == 1:
            continue
        interior_hits.add(int(scaled))
    return Fraction(cells - len(interior_hits), cells)


def n_omega(section: StepFunction, eps: FractionLike) -> int:
    """Smallest dyadic level whose good fraction exceeds 1 - 2*eps."""
    eps = to_frac(eps)
    if not 0 < eps < 1:
        raise UsageError(f"eps must lie in (0, 1), got {eps}")
    threshold = 1 - 2 * eps
    n = 0
    while good_fraction(section, n) <= threshold:
        n += 1
    return n


def n_star(model: RandomFunctionModel, eps: FractionLike) -> int:
    """Smallest n with P(n_omega <= n) strictly above 1 - eps."""
    eps = to_frac(eps)
    if not 0 < eps < 1:
        raise UsageError(f"eps must lie in (0, 1), got {eps}")
    weighted = sorted((n_omega(s, eps), p) for p, s in model.atoms)
    threshold = 1 - eps
    mass = Fraction(0)
    for level, p in weighted:
        mass += p
        if mass > threshold:
            return level
    return weighted[-1][0]  # unreachable: mass hits 1 > 1 - eps


# -- generators ----------------------------------------------------------------

FULL_ENUMERATION_LIMIT = 12  # enumerate all 2^(2^n) sections while 2^n <= this


def _dyadic_section(bits: int, n: int, alphabet: Sequence[Symbol]) -> StepFunction:
    cells = 1 << n
    pieces = [(Fraction(k, cells), alphabet[(bits >> k) & 1]) for k in range(cells)]
    return StepFunction.from_pieces(pieces, 1)


def generate_dyadic_uniform(n: int, seed: int = 0, subsample: int = 256,
                            alphabet: Sequence[Symbol] = DEFAULT_ALPHABET) -> RandomFunctionModel:
    """Uniform model over level-n dyadic sections.

    Full enumeration of all 2^(2^n) sections while 2^n <= 12; beyond that a
    seeded subsample of `subsample` distinct sections, each weighted equally.
    """
    cells = 1 << n
    if cells <= FULL_ENUMERATION_LIMIT:
        codes: Iterable[int] = range(1 << cells)
        count = 1 << cells
        label = f"dyadic-uniform-n{n}"
    else:
        rng = random.Random(seed)
        chosen: set[int] = set()
        while len(chosen) < subsample:
            chosen.add(rng.getrandbits(cells))
        codes = sorted(chosen)
        count = subsample
        label = f"dyadic-uniform-n{n}-sub{subsample}-seed{seed}"
    p = Fraction(1, count)
    atoms = tuple((p, _dyadic_section(c, n, alphabet)) for c in codes)
    return RandomFunctionModel(atoms, label, tuple(alphabet))


LATTICE_MAX_DENOMINATOR = 1000


def generate_piecewise(max_pieces: int, atom_count: int, seed: int = 0,
                       alphabet: Sequence[Symbol] = DEFAULT_ALPHABET) -> RandomFunctionModel:
    """Seeded model with non-dyadic rational breakpoints, uniform atoms.

    Breakpoints live on the lattice {p/q : q <= 1000}; equal seeds give
    identical models.
    """
    if max_pieces < 1 or atom_count < 1:
        raise UsageError("max_pieces and atom_count must be at least 1")
    rng = random.Random(seed)
    atoms = []
    p = Fraction(1, atom_count)
    for _ in range(atom_count):
        n_pieces = rng.randint(1, max_pieces)
        cuts = {Fraction(0)}
        while len(cuts) < n_pieces:
            q = rng.randint(2, LATTICE_MAX_DENOMINATOR)
            cuts.add(Fraction(rng.randint(1, q - 1), q))
        pieces = [(c, rng.choice(list(alphabet))) for c in sorted(cuts)]
        atoms.append((p, StepFunction.from_pieces(pieces, 1)))
    label = f"piecewise-m{max_pieces}-k{atom_count}-seed{seed}"
    return RandomFunctionModel(tuple(atoms), label, tuple(alphabet))


def generate_constant_sections(alphabet: Sequence[Symbol] = DEFAULT_ALPHABET) -> RandomFunctionModel:
    """Every constant section, equiprobable; same as dyadic-uniform at n = 0."""
    p = Fraction(1, len(alphabet))
    atoms = tuple((p, StepFunction.constant(v)) for v in alphabet)
    return RandomFunctionModel(atoms, "constant-sections", tuple(alphabet))
