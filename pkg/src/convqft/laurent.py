"""Truncated Laurent series in the regulator eps with exact coefficients.

Coefficients are polynomials in a formal scale logarithm ``L`` with rational
coefficients (:class:`Poly`).  A plain rational is a constant polynomial, so
purely numeric series are a special case.

Every series carries the highest exponent through which it is known
(``high``); ``high=None`` marks an exact Laurent polynomial.  Binary operations
intersect validity windows pessimistically.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial
from numbers import Rational
from typing import Iterable, Mapping, Union

__all__ = [
    "Poly",
    "LaurentSeries",
    "WindowUnderflowError",
    "l_add",
    "l_mul",
    "l_scale",
    "exp_eps_log",
    "pole_part",
    "as_fraction",
]


class WindowUnderflowError(ArithmeticError):
    """Raised when an operation leaves no valid coefficient at all."""


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        # only exactly representable floats are accepted
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


class Poly:
    """Polynomial in L with rational coefficients, immutable."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [as_fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, name, value):
        raise AttributeError("Poly is immutable")

    @classmethod
    def const(cls, c) -> Poly:
        return cls((c,))

    @classmethod
    def L(cls) -> Poly:
        return cls((0, 1))

    @classmethod
    def coerce(cls, x) -> Poly:
        return x if isinstance(x, Poly) else cls.const(x)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_constant(self) -> bool:
        return len(self.coeffs) <= 1

    def constant(self) -> Fraction:
        return self.coeffs[0] if self.coeffs else Fraction(0)

    def __add__(self, other):
        other = Poly.coerce(other)
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (Fraction(0),) * (n - len(self.coeffs))
        b = other.coeffs + (Fraction(0),) * (n - len(other.coeffs))
        return Poly(x + y for x, y in zip(a, b))

    __radd__ = __add__

    def __neg__(self):
        return Poly(-c for c in self.coeffs)

    def __sub__(self, other):
        return self + (-Poly.coerce(other))

    def __rsub__(self, other):
        return Poly.coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            c = as_fraction(other)
            return Poly(c * x for x in self.coeffs)
        if self.is_zero() or other.is_zero():
            return Poly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, x in enumerate(self.coeffs):
            if x:
                for j, y in enumerate(other.coeffs):
                    out[i + j] += x * y
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Poly.const(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.coeffs == other.coeffs
        try:
            return self.coeffs == Poly.const(other).coeffs
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def __call__(self, value) -> Fraction:
        v = as_fraction(value)
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * v + c
        return acc

    def substitute(self, value) -> Poly:
        return Poly.const(self(value))

    def __repr__(self):
        return f"Poly({self})"

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            if k == 0:
                parts.append(str(c))
            else:
                mono = "L" if k == 1 else f"L^{k}"
                if c == 1:
                    parts.append(mono)
                elif c == -1:
                    parts.append(f"-{mono}")
                else:
                    parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    def to_json(self) -> dict[str, str]:
        return {str(k): _frac_str(c) for k, c in enumerate(self.coeffs) if c}


def _frac_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _min_high(a: int | None, b: int | None) -> int | None:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


Coeff = Union[Poly, Fraction, int]


class LaurentSeries:
    """Laurent series sum_k c_k eps^k, known through eps^high.

    Stored normalized: ``coeffs[0]`` is the coefficient at ``low`` and is
    nonzero, unless the series is zero (then ``coeffs`` is empty).
    """

    __slots__ = ("low", "coeffs", "high")

    def __init__(self, low: int, coeffs: Iterable[Coeff], high: int | None = None):
        cs = [Poly.coerce(c) for c in coeffs]
        if high is not None:
            cs = cs[: max(0, high - low + 1)]
        while cs and cs[0].is_zero():
            cs.pop(0)
            low += 1
        while cs and cs[-1].is_zero():
            cs.pop()
        if not cs:
            low = 0 if high is None else high + 1
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "coeffs", tuple(cs))
        object.__setattr__(self, "high", high)

    def __setattr__(self, name, value):
        raise AttributeError("LaurentSeries is immutable")

    # constructors -----------------------------------------------------
    @classmethod
    def from_terms(cls, terms: Mapping[int, Coeff], high: int | None = None) -> LaurentSeries:
        if not terms:
            return cls.zero(high)
        lo, hi = min(terms), max(terms)
        return cls(lo, [terms.get(k, 0) for k in range(lo, hi + 1)], high)

    @classmethod
    def zero(cls, high: int | None = None) -> LaurentSeries:
        return cls(0, (), high)

    @classmethod
    def one(cls, high: int | None = None) -> LaurentSeries:
        return cls(0, (1,), high)

    @classmethod
    def monomial(cls, exponent: int, coeff: Coeff = 1, high: int | None = None) -> LaurentSeries:
        return cls(exponent, (coeff,), high)

    # access -----------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def exact(self) -> bool:
        return self.high is None

    @property
    def top(self) -> int:
        """Highest exponent with a stored (nonzero) coefficient."""
        return self.low + len(self.coeffs) - 1

    def coeff(self, k: int) -> Poly:
        if self.high is not None and k > self.high:
            raise WindowUnderflowError(f"coefficient eps^{k} lies beyond truncation order {self.high}")
        i = k - self.low
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return Poly()

    def terms(self) -> dict[int, Poly]:
        return {self.low + i: c for i, c in enumerate(self.coeffs) if not c.is_zero()}

    def finite_part(self) -> Poly:
        return self.coeff(0)

    def is_finite(self) -> bool:
        """True when every negative-power coefficient is exactly zero."""
        return self.is_zero() or self.low >= 0

    def truncate(self, high: int) -> LaurentSeries:
        return LaurentSeries(self.low, self.coeffs, _min_high(self.high, high))

    def substitute(self, value) -> LaurentSeries:
        """Evaluate the L-polynomials at a rational value."""
        return LaurentSeries(self.low, [c.substitute(value) for c in self.coeffs], self.high)

    # arithmetic -------------------------------------------------------
    def __add__(self, other):
        return l_add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return LaurentSeries(self.low, [-c for c in self.coeffs], self.high)

    def __sub__(self, other):
        return l_add(self, -_coerce(other))

    def __rsub__(self, other):
        return l_add(_coerce(other), -self)

    def __mul__(self, other):
        if isinstance(other, LaurentSeries):
            return l_mul(self, other)
        return l_scale(self, other)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = LaurentSeries.one()
        for _ in range(k):
            out = out * self
        return out

    # comparison -------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, LaurentSeries):
            try:
                other = _coerce(other)
            except TypeError:
                return NotImplemented
        return (self.low, self.coeffs, self.high) == (other.low, other.coeffs, other.high)

    def __hash__(self):
        return hash((self.low, self.coeffs, self.high))

    def agrees(self, other: LaurentSeries) -> bool:
        """Equality on the common validity window."""
        h = _min_high(self.high, other.high)
        a = self if h is None else self.truncate(h)
        b = other if h is None else other.truncate(h)
        return (a.low, a.coeffs) == (b.low, b.coeffs)

    # rendering --------------------------------------------------------
    def __repr__(self):
        return f"LaurentSeries({self})"

    def __str__(self):
        parts = []
        for k, c in self.terms().items():
            cs = str(c)
            if k == 0:
                parts.append(cs if c.is_constant() else f"({cs})")
                continue
            mono = "eps" if k == 1 else f"eps^{k}"
            if c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append(f"-{mono}")
            elif c.is_constant():
                parts.append(f"{cs}*{mono}")
            else:
                parts.append(f"({cs})*{mono}")
        body = " + ".join(parts).replace("+ -", "- ") if parts else "0"
        if self.high is not None:
            body += f" + O(eps^{self.high + 1})"
        return body

    def to_json(self) -> dict:
        return {
            "terms": {str(k): c.to_json() for k, c in self.terms().items()},
            "truncation": self.high,
        }


def _coerce(x) -> LaurentSeries:
    if isinstance(x, LaurentSeries):
        return x
    if isinstance(x, Poly):
        return LaurentSeries(0, (x,))
    return LaurentSeries(0, (as_fraction(x),))


def l_add(x, y) -> LaurentSeries:
    x, y = _coerce(x), _coerce(y)
    high = _min_high(x.high, y.high)
    if not x.is_zero() and not y.is_zero() and high is not None:
        if high < min(x.low, y.low):
            raise WindowUnderflowError("sum has an empty validity window")
    terms: dict[int, Poly] = {}
    for s in (x, y):
        for k, c in s.terms().items():
            terms[k] = terms.get(k, Poly()) + c
    return LaurentSeries.from_terms(terms, high)


def l_mul(x, y) -> LaurentSeries:
    x, y = _coerce(x), _coerce(y)
    # coefficient k of the product needs x up to k - y.low and y up to k - x.low
    cands = []
    if x.high is not None:
        cands.append(x.high + y.low)
    if y.high is not None:
        cands.append(y.high + x.low)
    high = min(cands) if cands else None
    if x.is_zero() or y.is_zero():
        return LaurentSeries.zero(high)
    low = x.low + y.low
    if high is not None and high < low:
        raise WindowUnderflowError(
            f"product window empty: lowest exponent {low} exceeds truncation {high}"
        )
    n = len(x.coeffs) + len(y.coeffs) - 1
    out = [Poly()] * n
    for i, a in enumerate(x.coeffs):
        if a.is_zero():
            continue
        for j, b in enumerate(y.coeffs):
            out[i + j] = out[i + j] + a * b
    return LaurentSeries(low, out, high)


def l_scale(x: LaurentSeries, c) -> LaurentSeries:
    if isinstance(c, LaurentSeries):
        return l_mul(x, c)
    c = c if isinstance(c, Poly) else as_fraction(c)
    return LaurentSeries(x.low, [a * c for a in x.coeffs], x.high)


def exp_eps_log(c, order: int) -> LaurentSeries:
    """Series of a^eps = exp(c*eps) through eps^order, with c = ln a.

    ``c`` may be a rational or a :class:`Poly` in L.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    c = Poly.coerce(c)
    coeffs = [c**k * Fraction(1, factorial(k)) for k in range(order + 1)]
    return LaurentSeries(0, coeffs, order)


def pole_part(x: LaurentSeries) -> LaurentSeries:
    """Minimal-subtraction projector: keep the strictly negative exponents.

    The result is exact whenever every pole coefficient of ``x`` is known.
    """
    terms = {k: c for k, c in x.terms().items() if k < 0}
    high = None if (x.high is None or x.high >= -1) else x.high
    return LaurentSeries.from_terms(terms, high)
