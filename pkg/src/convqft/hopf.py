"""Connes-Kreimer Hopf algebra of rooted forests with exact coefficients.

Trees are canonical: children are sorted by their nested-parenthesis
encoding, so ``"(()(()))"`` and ``"((())())"`` denote the same tree.
A forest is a sorted tuple of trees; the empty forest is the unit.
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, combinations_with_replacement, product
from math import factorial
from typing import Callable, Iterable, Iterator, Mapping

__all__ = [
    "Tree",
    "Forest",
    "LinComb",
    "TensorLinComb",
    "parse_tree",
    "parse_forest",
    "forest_mul",
    "coproduct",
    "counit",
    "antipode",
    "convolve",
    "trees_of_size",
    "forests_of_size",
    "all_forests",
    "symmetry_factor",
    "coproduct_by_edge_cuts",
    "AxiomReport",
    "check_axioms",
    "ONE",
    "DOT",
]


class Tree:
    """Unlabelled rooted tree in canonical form."""

    __slots__ = ("children", "code", "size")

    def __init__(self, children: Iterable[Tree] = ()):
        kids = tuple(sorted(children, key=lambda t: t.code))
        object.__setattr__(self, "children", kids)
        object.__setattr__(self, "code", "(" + "".join(c.code for c in kids) + ")")
        object.__setattr__(self, "size", 1 + sum(c.size for c in kids))

    def __setattr__(self, name, value):
        raise AttributeError("Tree is immutable")

    def __eq__(self, other):
        return isinstance(other, Tree) and self.code == other.code

    def __hash__(self):
        return hash(self.code)

    def __lt__(self, other: Tree):
        return self.code < other.code

    def __repr__(self):
        return f"Tree({self.code!r})"

    def __str__(self):
        return self.code

    def subtree_sizes(self) -> list[int]:
        """Sizes of the subtrees rooted at each vertex (preorder)."""
        out = [self.size]
        for c in self.children:
            out.extend(c.subtree_sizes())
        return out

    def factorial(self) -> int:
        """Tree factorial: product over vertices of subtree sizes."""
        out = 1
        for s in self.subtree_sizes():
            out *= s
        return out


class Forest:
    """Commutative monomial in trees."""

    __slots__ = ("trees", "size")

    def __init__(self, trees: Iterable[Tree] = ()):
        ts = tuple(sorted(trees, key=lambda t: t.code))
        object.__setattr__(self, "trees", ts)
        object.__setattr__(self, "size", sum(t.size for t in ts))

    def __setattr__(self, name, value):
        raise AttributeError("Forest is immutable")

    @classmethod
    def of(cls, x: Tree | Forest) -> Forest:
        return x if isinstance(x, Forest) else cls((x,))

    def __mul__(self, other: Forest | Tree) -> Forest:
        return forest_mul(self, Forest.of(other))

    def __eq__(self, other):
        if isinstance(other, Tree):
            other = Forest((other,))
        return isinstance(other, Forest) and self.trees == other.trees

    def __hash__(self):
        return hash(self.trees)

    def __lt__(self, other: Forest):
        return self.code < other.code

    def __len__(self):
        return len(self.trees)

    def __iter__(self):
        return iter(self.trees)

    @property
    def code(self) -> str:
        return "".join(t.code for t in self.trees)

    def is_unit(self) -> bool:
        return not self.trees

    def __repr__(self):
        return f"Forest({self.code!r})"

    def __str__(self):
        return self.code or "1"


ONE = Forest()
DOT = Tree()


def parse_forest(text: str) -> Forest:
    """Parse a concatenation of parenthesised trees; ``""`` or ``"1"`` is the unit."""
    s = "".join(text.split())
    if s in ("", "1"):
        return ONE
    stack: list[list[Tree]] = [[]]
    for ch in s:
        if ch == "(":
            stack.append([])
        elif ch == ")":
            if len(stack) < 2:
                raise ValueError(f"unbalanced tree encoding: {text!r}")
            kids = stack.pop()
            stack[-1].append(Tree(kids))
        else:
            raise ValueError(f"invalid character {ch!r} in tree encoding {text!r}")
    if len(stack) != 1:
        raise ValueError(f"unbalanced tree encoding: {text!r}")
    return Forest(stack[0])


def parse_tree(text: str) -> Tree:
    f = parse_forest(text)
    if len(f) != 1:
        raise ValueError(f"{text!r} does not encode a single tree")
    return f.trees[0]


def forest_mul(a: Forest, b: Forest) -> Forest:
    return Forest(a.trees + b.trees)


# --------------------------------------------------------------------------
# linear combinations


class LinComb(dict):
    """Finite rational combination of forests; zero coefficients are dropped."""

    def __init__(self, data: Mapping | Iterable = ()):
        super().__init__()
        items = data.items() if isinstance(data, Mapping) else data
        for k, v in items:
            self.add(k, v)

    def add(self, key, coeff) -> None:
        if isinstance(key, Tree):
            key = Forest((key,))
        c = self.get(key, Fraction(0)) + Fraction(coeff)
        if c:
            self[key] = c
        else:
            self.pop(key, None)

    @classmethod
    def basis(cls, x: Forest | Tree) -> LinComb:
        return cls({Forest.of(x): 1})

    def __add__(self, other: LinComb) -> LinComb:
        out = type(self)(self)
        for k, v in other.items():
            out.add(k, v)
        return out

    def __neg__(self):
        return type(self)((k, -v) for k, v in self.items())

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> LinComb:
        return type(self)((k, v * Fraction(c)) for k, v in self.items())

    def __mul__(self, other: LinComb) -> LinComb:
        if not isinstance(other, LinComb):
            return self.scale(other)
        out = LinComb()
        for a, x in self.items():
            for b, y in other.items():
                out.add(a * b, x * y)
        return out

    def __str__(self):
        if not self:
            return "0"
        return " + ".join(f"{v}*{k}" for k, v in sorted(self.items(), key=lambda kv: kv[0].code))


class TensorLinComb(dict):
    """Finite rational combination of pairs of forests."""

    def __init__(self, data: Mapping | Iterable = ()):
        super().__init__()
        items = data.items() if isinstance(data, Mapping) else data
        for k, v in items:
            self.add(k, v)

    def add(self, key: tuple, coeff) -> None:
        c = self.get(key, Fraction(0)) + Fraction(coeff)
        if c:
            self[key] = c
        else:
            self.pop(key, None)

    def __mul__(self, other: TensorLinComb) -> TensorLinComb:
        out = TensorLinComb()
        for (a1, a2), x in self.items():
            for (b1, b2), y in other.items():
                out.add((a1 * b1, a2 * b2), x * y)
        return out

    def __str__(self):
        if not self:
            return "0"
        terms = sorted(self.items(), key=lambda kv: (kv[0][0].code, kv[0][1].code))
        return " + ".join(f"{v}*{a}(x){b}" for (a, b), v in terms)


# --------------------------------------------------------------------------
# coproduct


def _rooted_cuts(t: Tree) -> Iterator[tuple[Forest, Tree]]:
    """Admissible cuts that keep the root: yields (pruned forest, trunk)."""
    options = []
    for child in t.children:
        opts = [(Forest((child,)), None)]  # the edge above `child` is cut
        opts.extend(_rooted_cuts(child))
        options.append(opts)

    def rec(i: int, pruned: tuple[Tree, ...], trunk_kids: tuple[Tree, ...]):
        if i == len(options):
            yield Forest(pruned), Tree(trunk_kids)
            return
        for pf, tr in options[i]:
            yield from rec(
                i + 1,
                pruned + pf.trees,
                trunk_kids if tr is None else trunk_kids + (tr,),
            )

    yield from rec(0, (), ())


@lru_cache(maxsize=None)
def _tree_coproduct(t: Tree) -> tuple[tuple[tuple[Forest, Forest], Fraction], ...]:
    out = TensorLinComb()
    out.add((Forest((t,)), ONE), 1)
    for pruned, trunk in _rooted_cuts(t):
        out.add((pruned, Forest((trunk,))), 1)
    return tuple(out.items())


def proper_cuts(t: Tree) -> Iterator[tuple[Forest, Forest, Fraction]]:
    """Terms gamma (x) Gamma/gamma of the coproduct with both sides nonempty."""
    for (a, b), c in _tree_coproduct(t):
        if not a.is_unit() and not b.is_unit():
            yield a, b, c


def coproduct(f: Forest | Tree) -> TensorLinComb:
    """Connes-Kreimer coproduct, multiplicative over the trees of a forest."""
    f = Forest.of(f)
    out = TensorLinComb({(ONE, ONE): 1})
    for t in f.trees:
        out = out * TensorLinComb(_tree_coproduct(t))
    return out


def coproduct_lin(x: LinComb) -> TensorLinComb:
    out = TensorLinComb()
    for f, c in x.items():
        for k, v in coproduct(f).items():
            out.add(k, c * v)
    return out


def counit(x: LinComb | Forest | Tree) -> Fraction:
    if not isinstance(x, LinComb):
        return Fraction(1) if Forest.of(x).is_unit() else Fraction(0)
    return x.get(ONE, Fraction(0))


@lru_cache(maxsize=None)
def _tree_antipode(t: Tree) -> tuple:
    out = LinComb({Forest((t,)): -1})
    for gamma, rest, c in proper_cuts(t):
        term = antipode(gamma) * LinComb.basis(rest)
        out = out - term.scale(c)
    return tuple(out.items())


def antipode(f: Forest | Tree) -> LinComb:
    """Antipode, via S(G) = -G - sum S(gamma) G/gamma on trees, multiplicative on forests."""
    f = Forest.of(f)
    out = LinComb({ONE: 1})
    for t in f.trees:
        out = out * LinComb(_tree_antipode(t))
    return out


def antipode_lin(x: LinComb) -> LinComb:
    out = LinComb()
    for f, c in x.items():
        out = out + antipode(f).scale(c)
    return out


def convolve(f: Callable, g: Callable, x: Forest | Tree | LinComb):
    """(f * g)(x) = m o (f (x) g) o Delta (x), for maps into a commutative algebra.

    ``f`` and ``g`` are called on forests; the result type is whatever their
    products and sums produce.
    """
    if isinstance(x, LinComb):
        acc = None
        for fo, c in x.items():
            term = convolve(f, g, fo) * c
            acc = term if acc is None else acc + term
        return 0 if acc is None else acc
    acc = None
    for (a, b), c in sorted(coproduct(x).items(), key=lambda kv: (kv[0][0].code, kv[0][1].code)):
        term = f(a) * g(b)
        if c != 1:
            term = term * c
        acc = term if acc is None else acc + term
    return acc


def lin_map(fn: Callable[[Forest], LinComb]) -> Callable[[LinComb], LinComb]:
    def apply(x: LinComb) -> LinComb:
        out = LinComb()
        for f, c in x.items():
            out = out + fn(f).scale(c)
        return out

    return apply


# --------------------------------------------------------------------------
# enumeration and symmetry


@lru_cache(maxsize=None)
def forests_of_size(n: int) -> tuple[Forest, ...]:
    """All canonical forests with exactly n nodes, sorted by encoding."""
    if n == 0:
        return (ONE,)
    out: set[Forest] = set()
    # choose a multiset of tree sizes (a partition of n), then trees of each size
    for parts in _partitions(n):
        pools = Counter(parts)
        choices = [list(combinations_with_replacement(trees_of_size(s), k)) for s, k in pools.items()]
        for combo in product(*choices):
            out.add(Forest(t for group in combo for t in group))
    return tuple(sorted(out, key=lambda f: f.code))


@lru_cache(maxsize=None)
def trees_of_size(n: int) -> tuple[Tree, ...]:
    if n < 1:
        return ()
    return tuple(sorted((Tree(f.trees) for f in forests_of_size(n - 1)), key=lambda t: t.code))


def all_forests(max_nodes: int) -> list[Forest]:
    return [f for n in range(max_nodes + 1) for f in forests_of_size(n)]


def _partitions(n: int, largest: int | None = None) -> Iterator[tuple[int, ...]]:
    largest = n if largest is None else largest
    if n == 0:
        yield ()
        return
    for k in range(min(n, largest), 0, -1):
        for rest in _partitions(n - k, k):
            yield (k,) + rest


def symmetry_factor(x: Tree | Forest) -> int:
    """Order of the automorphism group of a rooted tree or forest."""
    if isinstance(x, Tree):
        out = 1
        for child, mult in Counter(x.children).items():
            out *= factorial(mult) * symmetry_factor(child) ** mult
        return out
    out = 1
    for t, mult in Counter(x.trees).items():
        out *= factorial(mult) * symmetry_factor(t) ** mult
    return out


# --------------------------------------------------------------------------
# axiom checks


def _coassoc_sides(f: Forest) -> tuple[dict, dict]:
    left: dict = {}
    right: dict = {}

    def put(d, key, c):
        v = d.get(key, Fraction(0)) + c
        if v:
            d[key] = v
        else:
            d.pop(key, None)

    for (a, b), c in coproduct(f).items():
        for (a1, a2), c1 in coproduct(a).items():
            put(left, (a1, a2, b), c * c1)
        for (b1, b2), c2 in coproduct(b).items():
            put(right, (a, b1, b2), c * c2)
    return left, right


def _antipode_sides(f: Forest) -> tuple[LinComb, LinComb]:
    """m(S (x) id) Delta f and m(id (x) S) Delta f."""
    left, right = LinComb(), LinComb()
    for (a, b), c in coproduct(f).items():
        left = left + (antipode(a) * LinComb.basis(b)).scale(c)
        right = right + (LinComb.basis(a) * antipode(b)).scale(c)
    return left, right


def _flatten(f: Forest) -> tuple[list[int], list[int]]:
    """Parent array (-1 for roots) and the list of all vertices."""
    parent: list[int] = []

    def walk(t: Tree, par: int):
        me = len(parent)
        parent.append(par)
        for c in t.children:
            walk(c, me)

    for t in f.trees:
        walk(t, -1)
    return parent, list(range(len(parent)))


def _build(parent: list[int], keep_edge, vertices) -> Forest:
    kids: dict[int, list[int]] = {v: [] for v in vertices}
    roots = []
    for v in vertices:
        if parent[v] >= 0 and keep_edge(v):
            kids[parent[v]].append(v)
        else:
            roots.append(v)

    def tree(v: int) -> Tree:
        return Tree(tree(c) for c in kids[v])

    return Forest(tree(r) for r in roots)


def coproduct_by_edge_cuts(f: Forest | Tree) -> TensorLinComb:
    """Coproduct from all admissible edge subsets of the whole forest.

    Every vertex carries an edge above it, roots included; cutting above a
    root moves its whole tree to the pruned side.  Independent of the
    tree-by-tree recursion and used as a cross-check.
    """
    f = Forest.of(f)
    parent, edges = _flatten(f)
    n = len(parent)
    out = TensorLinComb()
    for k in range(len(edges) + 1):
        for cut in combinations(edges, k):
            cs = set(cut)
            # admissible: no cut vertex has a cut ancestor
            ok = True
            for v in cut:
                u = parent[v]
                while u >= 0:
                    if u in cs:
                        ok = False
                        break
                    u = parent[u]
                if not ok:
                    break
            if not ok:
                continue
            below = set()
            for v in range(n):
                u = v
                while u >= 0 and u not in cs:
                    u = parent[u]
                if u >= 0:
                    below.add(v)
            trunk_vs = [v for v in range(n) if v not in below]
            pruned = _build(parent, lambda v: v not in cs, sorted(below))
            trunk = _build(parent, lambda v: True, trunk_vs)
            out.add((pruned, trunk), 1)
    return out


class AxiomReport(dict):
    """Failing forests per axiom; empty lists mean the axiom holds."""

    @property
    def ok(self) -> bool:
        return not any(self[k] for k in ("coassociativity", "multiplicativity", "antipode", "counit"))

    def summary(self) -> str:
        return ", ".join(f"{k} {'OK' if not self[k] else 'FAILED'}" for k in
                         ("coassociativity", "multiplicativity", "counit", "antipode"))


def check_axioms(max_nodes: int) -> AxiomReport:
    """Exact bialgebra and antipode identities on every forest up to ``max_nodes``."""
    forests = all_forests(max_nodes)
    rep = AxiomReport(coassociativity=[], multiplicativity=[], antipode=[], counit=[], forests=len(forests))
    for f in forests:
        left, right = _coassoc_sides(f)
        if left != right:
            rep["coassociativity"].append(f.code)
        eps = LinComb({ONE: counit(f)})
        s_left, s_right = _antipode_sides(f)
        if s_left != eps or s_right != eps:
            rep["antipode"].append(f.code)
        # (eps (x) id) Delta = id = (id (x) eps) Delta
        lc = LinComb((b, c) for (a, b), c in coproduct(f).items() if a.is_unit())
        rc = LinComb((a, c) for (a, b), c in coproduct(f).items() if b.is_unit())
        if lc != LinComb.basis(f) or rc != LinComb.basis(f):
            rep["counit"].append(f.code)
    trees = [t for n in range(1, max_nodes + 1) for t in trees_of_size(n)]
    for x in trees:
        for y in trees:
            if x.size + y.size <= max_nodes and x.code <= y.code:
                if coproduct_by_edge_cuts(Forest((x, y))) != coproduct(x) * coproduct(y):
                    rep["multiplicativity"].append(f"{x.code}{y.code}")
    return rep
