"""BPHZ renormalization of a toy Feynman-rules character on rooted trees.

The toy rules assign each vertex v the factor a^eps / (|v| eps), where |v| is
the size of the subtree rooted at v and ln a = L.  Counterterms come from the
Bogoliubov recursion with minimal subtraction; the renormalized character is
checked against the convolution C * F.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .hopf import ONE, Forest, LinComb, Tree, all_forests, convolve, proper_cuts, symmetry_factor
from .laurent import LaurentSeries, Poly, as_fraction, exp_eps_log, pole_part

__all__ = [
    "ToyModelParams",
    "Character",
    "toy_character",
    "toy_amplitude",
    "prepare",
    "counterterm",
    "counterterm_character",
    "renormalize",
    "renormalized_character",
    "check_convolution_identity",
    "ZRenReport",
    "z_ren",
]


@dataclass(frozen=True)
class ToyModelParams:
    """Scale logarithm L = ln a and the expansion order of a^(n eps).

    ``scale_log=None`` keeps L symbolic.  A tree with n nodes is known through
    eps^(order - n), so ``order`` must be at least the largest tree size.
    """

    scale_log: Fraction | None = None
    order: int = 6

    def __post_init__(self):
        if self.scale_log is not None:
            object.__setattr__(self, "scale_log", as_fraction(self.scale_log))

    @property
    def log(self) -> Poly:
        return Poly.L() if self.scale_log is None else Poly.const(self.scale_log)

    @classmethod
    def for_size(cls, max_nodes: int, scale_log=None) -> ToyModelParams:
        # window -(n+2)..+(n+2) on the amplitudes of size <= n
        return cls(scale_log=scale_log, order=2 * max_nodes + 2)


class Character:
    """Multiplicative map from forests to Laurent series, memoized per tree."""

    def __init__(self, rule: Callable[[Tree], LaurentSeries], name: str = "", unit_high: int | None = None):
        self._rule = rule
        self._cache: dict[Tree, LaurentSeries] = {}
        self.name = name
        self.unit_high = unit_high

    def tree(self, t: Tree) -> LaurentSeries:
        v = self._cache.get(t)
        if v is None:
            v = self._rule(t)
            self._cache[t] = v
        return v

    def __call__(self, x):
        if isinstance(x, Tree):
            return self.tree(x)
        if isinstance(x, LinComb):
            acc = LaurentSeries.zero(self.unit_high)
            for f, c in x.items():
                acc = acc + self(f) * c
            return acc
        acc = LaurentSeries.one(self.unit_high)
        for t in Forest.of(x).trees:
            acc = acc * self.tree(t)
        return acc

    def __repr__(self):
        return f"Character({self.name or self._rule!r})"


def toy_amplitude(t: Tree, params: ToyModelParams) -> LaurentSeries:
    """F(t) = a^(n eps) / (t! eps^n) for a tree with n nodes."""
    n = t.size
    if params.order < n:
        raise ValueError(
            f"window overflow: expansion order {params.order} cannot reach the finite part of a {n}-node tree"
        )
    scale = exp_eps_log(params.log * n, params.order)
    return LaurentSeries(-n, scale.coeffs, params.order - n) * Fraction(1, t.factorial())


def toy_character(params: ToyModelParams) -> Character:
    return Character(lambda t: toy_amplitude(t, params), name="toy", unit_high=None)


# --------------------------------------------------------------------------
# Bogoliubov recursion


class _BPHZ:
    """Shared memo of prepared values and counterterms for one character F."""

    def __init__(self, F: Character):
        self.F = F
        self.prepared: dict[Tree, LaurentSeries] = {}
        self.C = Character(self._counterterm_tree, name=f"C[{F.name}]")

    @classmethod
    def of(cls, F: Character) -> _BPHZ:
        b = getattr(F, "_bphz", None)
        if b is None:
            b = cls(F)
            F._bphz = b
        return b

    def prepare(self, t: Tree) -> LaurentSeries:
        v = self.prepared.get(t)
        if v is None:
            v = self.F(t)
            for gamma, quotient, c in proper_cuts(t):
                v = v + self.C(gamma) * self.F(quotient) * c
            self.prepared[t] = v
        return v

    def _counterterm_tree(self, t: Tree) -> LaurentSeries:
        return -pole_part(self.prepare(t))


def prepare(t: Tree, F: Character) -> LaurentSeries:
    """Bogoliubov-prepared value P(t) = F(t) + sum C(gamma) F(t/gamma)."""
    return _BPHZ.of(F).prepare(t)


def counterterm_character(F: Character) -> Character:
    return _BPHZ.of(F).C


def counterterm(x, F: Character) -> LaurentSeries:
    """C = -T(P), extended multiplicatively to forests."""
    return counterterm_character(F)(x)


def renormalize(t: Tree, F: Character) -> LaurentSeries:
    """R(t) = P(t) + C(t)."""
    return prepare(t, F) + counterterm(t, F)


def renormalized_character(F: Character) -> Character:
    return Character(lambda t: renormalize(t, F), name=f"R[{F.name}]")


def check_convolution_identity(x, F: Character) -> bool:
    """True iff (C * F)(x) equals the renormalized value R(x) exactly.

    R on a forest is the product of R over its trees.  A product of finite
    series is known to higher order than the convolution sum, so the two are
    compared coefficient by coefficient on their common window, which must
    reach at least the finite part.
    """
    C = counterterm_character(F)
    lhs = convolve(C, F, Forest.of(x) if isinstance(x, Tree) else x)
    rhs = renormalized_character(F)(x)
    highs = [h for h in (lhs.high, rhs.high) if h is not None]
    if highs and min(highs) < 0:
        return False
    return lhs.agrees(rhs)


# --------------------------------------------------------------------------
# renormalized partition sum


@dataclass
class ZRenReport:
    coupling: Fraction
    max_nodes: int
    series: LaurentSeries
    terms: list[tuple[str, Fraction]] = field(default_factory=list)

    @property
    def finite_part(self) -> Poly:
        return self.series.finite_part()

    @property
    def pole_free(self) -> bool:
        return self.series.is_finite()

    @property
    def normalization(self) -> Fraction | None:
        """Multiplicative constant that brings the finite part to 1.

        Only defined when the finite part is a nonzero rational (L fixed).
        """
        fp = self.finite_part
        if not fp.is_constant() or fp.constant() == 0:
            return None
        return 1 / fp.constant()

    def to_json(self) -> dict:
        norm = self.normalization
        return {
            "coupling": str(self.coupling),
            "max_nodes": self.max_nodes,
            "series": self.series.to_json(),
            "finite_part": self.finite_part.to_json(),
            "pole_free": self.pole_free,
            "normalization": None if norm is None else str(norm),
            "terms": [{"forest": f or "1", "weight": str(w)} for f, w in self.terms],
        }


def z_ren(g, max_nodes: int, F: Character) -> ZRenReport:
    """Truncated sum over forests of g^size / |Aut| * (C * F)(forest)."""
    if not 0 <= max_nodes <= 6:
        raise ValueError("max_nodes must be in 0..6")
    g = as_fraction(g)
    C = counterterm_character(F)
    total = LaurentSeries.one()
    terms = [("", Fraction(1))]
    for f in all_forests(max_nodes):
        if f is ONE or f.is_unit():
            continue
        w = g**f.size / symmetry_factor(f)
        total = total + convolve(C, F, f) * w
        terms.append((f.code, w))
    return ZRenReport(coupling=g, max_nodes=max_nodes, series=total, terms=terms)
