from __future__ import annotations

import random
from fractions import Fraction

import pytest

from convqft.hopf import (
    DOT,
    ONE,
    Forest,
    LinComb,
    TensorLinComb,
    all_forests,
    antipode,
    check_axioms,
    convolve,
    coproduct,
    coproduct_by_edge_cuts,
    counit,
    forests_of_size,
    parse_forest,
    parse_tree,
    symmetry_factor,
    trees_of_size,
)

t2 = parse_tree("(())")
cherry = parse_tree("(()())")


def F(code: str) -> Forest:
    return parse_forest(code)


def test_parse_canonical():
    assert parse_tree("(()(()))") == parse_tree("((())())")
    assert parse_forest("1") is ONE
    with pytest.raises(ValueError):
        parse_forest("(()")
    with pytest.raises(ValueError):
        parse_tree("()()")


def test_forest_product():
    assert ONE * t2 == Forest.of(t2)
    assert F("()") * DOT == F("()()")
    assert (F("()(())") * DOT) == F("()()(())")


def test_tree_factorial_and_symmetry():
    assert cherry.factorial() == 3
    assert parse_tree("((()))").factorial() == 6
    assert symmetry_factor(cherry) == 2
    assert symmetry_factor(F("()()")) == 2
    assert symmetry_factor(parse_tree("((())(()))")) == 2


def test_enumeration_counts():
    # rooted trees: 1, 1, 2, 4, 9, 20 ; forests: 1, 1, 2, 4, 9, 20, 48
    assert [len(trees_of_size(n)) for n in range(1, 7)] == [1, 1, 2, 4, 9, 20]
    assert [len(forests_of_size(n)) for n in range(7)] == [1, 1, 2, 4, 9, 20, 48]


class TestCoproduct:
    def test_unit(self):
        assert coproduct(ONE) == TensorLinComb({(ONE, ONE): 1})

    def test_primitive(self):
        assert coproduct(DOT) == TensorLinComb({(F("()"), ONE): 1, (ONE, F("()")): 1})

    def test_chain(self):
        expect = TensorLinComb({(F("(())"), ONE): 1, (ONE, F("(())")): 1, (F("()"), F("()")): 1})
        assert coproduct(t2) == expect

    def test_cherry(self):
        expect = TensorLinComb(
            {(F("(()())"), ONE): 1, (ONE, F("(()())")): 1, (F("()"), F("(())")): 2, (F("()()"), F("()")): 1}
        )
        assert coproduct(cherry) == expect

    @pytest.mark.parametrize("f", all_forests(6), ids=lambda f: f.code or "1")
    def test_agrees_with_edge_subset_enumeration(self, f):
        assert coproduct(f) == coproduct_by_edge_cuts(f)

    @pytest.mark.parametrize("f", all_forests(5), ids=lambda f: f.code or "1")
    def test_grading(self, f):
        for (a, b), _ in coproduct(f).items():
            assert a.size + b.size == f.size


class TestCounitAntipode:
    def test_counit(self):
        assert counit(ONE) == 1
        assert counit(DOT) == 0
        assert counit(LinComb({ONE: 3, F("(())"): 2})) == 3

    def test_antipode_examples(self):
        assert antipode(ONE) == LinComb({ONE: 1})
        assert antipode(DOT) == LinComb({F("()"): -1})
        assert antipode(t2) == LinComb({F("(())"): -1, F("()()"): 1})
        assert antipode(cherry) == LinComb({F("(()())"): -1, F("()(())"): 2, F("()()()"): -1})

    def test_antipode_is_involution_on_commutative_algebra(self):
        from convqft.hopf import antipode_lin

        for f in all_forests(4):
            assert antipode_lin(antipode(f)) == LinComb.basis(f)


def test_axioms_up_to_five_nodes():
    rep = check_axioms(5)
    assert rep.ok, rep
    assert rep["forests"] == 37


def _random_character(seed: int):
    rng = random.Random(seed)
    values: dict = {}

    def ch(f):
        out = Fraction(1)
        for t in Forest.of(f).trees:
            if t not in values:
                values[t] = Fraction(rng.randint(-9, 9), rng.randint(1, 9))
            out *= values[t]
        return out

    return ch


@pytest.mark.parametrize("seed", range(3))
def test_convolution_associative(seed):
    f, g, h = (_random_character(seed * 3 + k) for k in range(3))

    def fg(x):
        return convolve(f, g, x)

    def gh(x):
        return convolve(g, h, x)

    for x in all_forests(4):
        assert convolve(fg, h, x) == convolve(f, gh, x)


def test_convolution_unit_and_antipode():
    g = _random_character(11)

    def eps(x):
        return counit(x)

    def S(x):
        return antipode(x)

    def ident(x):
        return LinComb.basis(x)

    for x in all_forests(4):
        assert convolve(eps, g, x) == g(x)
        assert convolve(S, ident, x) == LinComb({ONE: counit(x)})


def test_convolution_expansion_on_chain():
    c = _random_character(1)
    f = _random_character(2)
    assert convolve(c, f, t2) == c(t2) + f(t2) + c(DOT) * f(DOT)
