from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from ctgames.errors import SpecParseError, UsageError
from ctgames.randomfn import (
    RandomFunctionModel,
    generate_constant_sections,
    generate_dyadic_uniform,
    generate_piecewise,
    good_fraction,
    n_omega,
    n_star,
)
from ctgames.stepfn import StepFunction

F = Fraction


def section(*pieces, end=1):
    return StepFunction.from_pieces(list(pieces), end)


class TestModel:
    def test_probabilities_must_sum_to_one(self):
        with pytest.raises(UsageError):
            RandomFunctionModel(((F(1, 2), StepFunction.constant("a")),))

    def test_sections_must_be_unit_domain(self):
        with pytest.raises(UsageError):
            RandomFunctionModel(((F(1), StepFunction.constant("a", 2)),))

    def test_json_round_trip(self):
        m = generate_piecewise(3, 4, seed=7)
        again = RandomFunctionModel.from_json(m.to_json())
        assert again.atoms == m.atoms

    def test_bad_json_raises_parse_error(self):
        with pytest.raises(SpecParseError):
            RandomFunctionModel.from_json({"atoms": [{"p": "1/2"}]})
        with pytest.raises(SpecParseError):
            RandomFunctionModel.from_json(
                {"atoms": [{"p": "1/2",
                            "section": StepFunction.constant("a").to_json()}]})


class TestGoodFraction:
    def test_constant_is_everywhere_good(self):
        for n in range(5):
            assert good_fraction(StepFunction.constant("a"), n) == 1

    def test_single_midpoint_break(self):
        f = section((0, "a"), (F(1, 2), "b"))
        assert good_fraction(f, 0) == 0
        assert good_fraction(f, 1) == 1

    def test_thirds(self):
        # quarters [1/4,1/2) and [1/2,3/4) contain 1/3 and 2/3
        f = section((0, "a"), (F(1, 3), "b"), (F(2, 3), "a"))
        assert good_fraction(f, 2) == F(1, 2)

    @given(st.integers(0, 6), st.integers(0, 6))
    def test_monotone_in_level(self, n, m):
        f = section((0, "a"), (F(1, 3), "b"), (F(5, 7), "a"), (F(9, 11), "b"))
        lo, hi = sorted((n, m))
        assert good_fraction(f, lo) <= good_fraction(f, hi)

    def test_reaches_one_below_min_gap(self):
        f = section((0, "a"), (F(1, 4), "b"), (F(1, 2), "a"))
        # min piece length 1/4; level 2 cells have length 1/4 and edges align
        assert good_fraction(f, 2) == 1


class TestLevels:
    def test_constant_needs_level_zero(self):
        assert n_omega(StepFunction.constant("a"), F(1, 10)) == 0

    def test_midpoint_break(self):
        # level 0 fraction 0 <= 0.4; level 1 fraction 1 > 0.4
        f = section((0, "a"), (F(1, 2), "b"))
        assert n_omega(f, F(3, 10)) == 1

    def test_eighths_need_level_three(self):
        pieces = [(F(k, 8), "a" if k % 2 == 0 else "b") for k in range(8)]
        f = section(*pieces)
        assert n_omega(f, F(1, 4)) == 3
        assert good_fraction(f, 2) == 0

    @given(st.sampled_from([F(1, 10), F(1, 5), F(3, 10), F(2, 5), F(49, 100)]),
           st.sampled_from([F(1, 10), F(1, 5), F(3, 10), F(2, 5), F(49, 100)]))
    def test_n_omega_antitone_in_eps(self, e1, e2):
        f = section((0, "a"), (F(1, 3), "b"), (F(5, 7), "a"))
        lo, hi = sorted((e1, e2))
        assert n_omega(f, lo) >= n_omega(f, hi)

    def test_n_star_all_constant(self):
        assert n_star(generate_constant_sections(), F(1, 5)) == 0

    def test_n_star_two_atom_example(self):
        half = section((0, "a"), (F(1, 2), "b"))  # n_omega = 1 at eps = 2/5
        eighths = section(*[(F(k, 8), "ab"[k % 2]) for k in range(8)])  # n_omega = 3
        m = RandomFunctionModel(((F(1, 2), half), (F(1, 2), eighths)))
        assert n_omega(half, F(2, 5)) == 1
        assert n_omega(eighths, F(2, 5)) == 3
        # P(n_omega <= 1) = 1/2 <= 3/5, so both atoms are needed
        assert n_star(m, F(2, 5)) == 3
        # a heavier first atom crosses the mass threshold on its own
        heavy = RandomFunctionModel(((F(7, 10), half), (F(3, 10), eighths)))
        assert n_star(heavy, F(2, 5)) == 1

    @given(st.sampled_from([F(1, 10), F(1, 5), F(3, 10), F(2, 5)]),
           st.integers(0, 2**10))
    def test_n_star_bound_holds_by_construction(self, eps, seed):
        m = generate_piecewise(4, 6, seed=seed)
        ns = n_star(m, eps)
        covered = m.prob_where(lambda s: n_omega(s, eps) <= ns)
        assert covered > 1 - eps


class TestGenerators:
    def test_dyadic_level_zero(self):
        m = generate_dyadic_uniform(0)
        assert len(m) == 2
        assert {s.values for _, s in m.atoms} == {("a",), ("b",)}
        assert all(p == F(1, 2) for p, _ in m.atoms)

    def test_dyadic_level_one(self):
        m = generate_dyadic_uniform(1)
        assert len(m) == 4
        assert all(p == F(1, 4) for p, _ in m.atoms)

    def test_dyadic_level_three(self):
        m = generate_dyadic_uniform(3)
        assert len(m) == 256
        assert all(p == F(1, 256) for p, _ in m.atoms)
        # sections are distinct
        assert len({(s.breakpoints, s.values) for _, s in m.atoms}) == 256

    def test_dyadic_subsample_is_seeded(self):
        a = generate_dyadic_uniform(4, seed=5, subsample=32)
        b = generate_dyadic_uniform(4, seed=5, subsample=32)
        c = generate_dyadic_uniform(4, seed=6, subsample=32)
        assert a.atoms == b.atoms
        assert len(a) == 32
        assert a.atoms != c.atoms

    def test_piecewise_max_one_piece_is_constant(self):
        m = generate_piecewise(1, 10, seed=3)
        assert all(len(s.values) == 1 for _, s in m.atoms)

    def test_piecewise_deterministic_in_seed(self):
        assert generate_piecewise(4, 20, seed=11).atoms == \
            generate_piecewise(4, 20, seed=11).atoms

    def test_piecewise_uniform_probs(self):
        m = generate_piecewise(3, 5, seed=0)
        assert all(p == F(1, 5) for p, _ in m.atoms)

    def test_piecewise_lattice_denominators(self):
        m = generate_piecewise(4, 20, seed=2)
        for _, s in m.atoms:
            assert all(b.denominator <= 1000 for b in s.breakpoints)
