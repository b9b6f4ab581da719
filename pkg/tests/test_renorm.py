from __future__ import annotations

from fractions import Fraction

import pytest

from convqft.hopf import DOT, ONE, Forest, all_forests, coproduct, parse_forest, parse_tree, trees_of_size
from convqft.laurent import LaurentSeries, Poly, exp_eps_log, pole_part
from convqft.renorm import (
    ToyModelParams,
    check_convolution_identity,
    counterterm,
    counterterm_character,
    prepare,
    renormalize,
    renormalized_character,
    toy_amplitude,
    toy_character,
    z_ren,
)

L = Poly.L()
t2 = parse_tree("(())")


@pytest.fixture(scope="module")
def F():
    return toy_character(ToyModelParams.for_size(6))


def test_amplitude_of_dot(F):
    v = F(DOT)
    assert v.coeff(-1) == 1 and v.coeff(0) == L and v.coeff(1) == L * L * Fraction(1, 2)


def test_amplitude_of_chain(F):
    expect = exp_eps_log(L * 2, 14) * LaurentSeries.monomial(-2, Fraction(1, 2))
    assert F(t2).agrees(expect)


def test_amplitude_multiplicative(F):
    assert F(parse_forest("()()")) == F(DOT) * F(DOT)


def test_amplitude_order_too_small():
    with pytest.raises(ValueError, match="window overflow"):
        toy_amplitude(parse_tree("((()))"), ToyModelParams(order=2))


def test_prepare(F):
    assert prepare(DOT, F) == F(DOT)
    p = prepare(t2, F)
    assert p.agrees(F(t2) + counterterm(DOT, F) * F(DOT))
    assert p.coeff(-2) == Fraction(-1, 2)
    assert p.coeff(-1) == 0
    assert p.coeff(0) == L * L * Fraction(1, 2)


def test_counterterms(F):
    assert counterterm(DOT, F) == LaurentSeries.monomial(-1, -1)
    assert counterterm(t2, F) == LaurentSeries.monomial(-2, Fraction(1, 2))
    assert counterterm(ONE, F) == LaurentSeries.one()


def test_renormalized_low_trees(F):
    r1 = renormalize(DOT, F)
    assert r1.coeff(-1) == 0 and r1.coeff(0) == L
    r2 = renormalize(t2, F)
    assert r2.is_finite() and r2.coeff(0) == L * L * Fraction(1, 2)


@pytest.mark.parametrize("t", [t for n in range(1, 5) for t in trees_of_size(n)], ids=str)
def test_renormalized_is_finite(F, t):
    r = renormalize(t, F)
    assert r.is_finite()
    for k in range(r.low, 0):
        assert r.coeff(k).is_zero()


@pytest.mark.parametrize("f", [f for f in all_forests(4) if not f.is_unit()], ids=lambda f: f.code)
def test_convolution_identity(F, f):
    x = f.trees[0] if len(f) == 1 else f
    assert check_convolution_identity(x, F)


def _forest_counterterm(f: Forest, F, memo: dict) -> LaurentSeries:
    """Bogoliubov recursion run on a whole forest, without multiplicativity."""
    if f.is_unit():
        return LaurentSeries.one()
    if f in memo:
        return memo[f]
    p = F(f)
    for (a, b), c in coproduct(f).items():
        if not a.is_unit() and not b.is_unit():
            p = p + _forest_counterterm(a, F, memo) * F(b) * c
    memo[f] = -pole_part(p)
    return memo[f]


def test_counterterm_is_a_character(F):
    memo: dict = {}
    C = counterterm_character(F)
    for f in all_forests(4):
        if len(f) > 1:
            assert _forest_counterterm(f, F, memo) == C(f), f.code


def test_minimal_subtraction_at_reference_scale():
    F0 = toy_character(ToyModelParams(scale_log=0, order=8))
    for n in range(1, 4):
        for t in trees_of_size(n):
            r = renormalize(t, F0)
            assert r.low >= 1, (t, r)


def test_finite_part_of_dot_is_scale_log():
    F3 = toy_character(ToyModelParams(scale_log=Fraction(3, 7), order=4))
    assert renormalize(DOT, F3).finite_part() == Fraction(3, 7)


class TestZRen:
    def test_empty(self, F):
        assert z_ren(Fraction(1, 3), 0, F).series == LaurentSeries.one()

    def test_single_dot(self, F):
        rep = z_ren(Fraction(1, 3), 1, F)
        assert rep.series.coeff(0) == 1 + L * Fraction(1, 3)
        assert rep.pole_free

    @pytest.mark.parametrize("n", range(5))
    def test_pole_free(self, F, n):
        assert z_ren(Fraction(1, 10), n, F).pole_free

    def test_normalization_report(self):
        F1 = toy_character(ToyModelParams.for_size(3, scale_log=1))
        rep = z_ren(Fraction(1, 2), 3, F1)
        assert rep.normalization * rep.finite_part.constant() == 1
        assert rep.to_json()["normalization"] == str(rep.normalization)

    def test_symbolic_has_no_normalization(self, F):
        assert z_ren(Fraction(1, 2), 2, F).normalization is None

    def test_range(self, F):
        with pytest.raises(ValueError):
            z_ren(1, 7, F)


def test_renormalized_character_on_forest(F):
    R = renormalized_character(F)
    f = parse_forest("()(())")
    assert R(f) == renormalize(DOT, F) * renormalize(t2, F)
