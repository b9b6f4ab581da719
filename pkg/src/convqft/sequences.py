"""Interacting-sequence laws on the natural numbers.

A :class:`DiscreteLaw` is a finitely supported probability on {0, 1, ...}.
Masses are exact fractions by default; float mode is used for large-n
Poisson comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy import special, stats

__all__ = [
    "DiscreteLaw",
    "InteractionError",
    "conv_nat",
    "delta",
    "bernoulli",
    "binomial_free",
    "binomial_closed_form",
    "pointwise_interaction",
    "pointwise_terms",
    "validate_pointwise",
    "PoissonCheck",
    "poisson_limit_check",
    "conv_interaction",
    "order",
    "conf",
    "range_",
    "xi_representation",
    "SampledDensity",
    "density_conv",
    "uniform_density",
]


class InteractionError(ValueError):
    """An interaction term violates a condition required of it."""


@dataclass(frozen=True)
class DiscreteLaw:
    """Masses p(0), p(1), ..., p(top); trailing zeros are stripped."""

    masses: tuple

    def __init__(self, masses: Iterable, check: bool = True):
        ms = list(masses)
        exact = all(isinstance(m, (int, Fraction)) for m in ms)
        ms = [Fraction(m) if exact else float(m) for m in ms]
        while ms and ms[-1] == 0:
            ms.pop()
        object.__setattr__(self, "masses", tuple(ms))
        if check:
            self.validate()

    @property
    def exact(self) -> bool:
        return all(isinstance(m, Fraction) for m in self.masses)

    def total(self):
        return sum(self.masses, Fraction(0) if self.exact else 0.0)

    def validate(self) -> None:
        if not self.masses:
            raise ValueError("empty law")
        if any(m < 0 or m > 1 for m in self.masses):
            raise ValueError("masses must lie in [0, 1]")
        s = self.total()
        if self.exact:
            if s != 1:
                raise ValueError(f"masses sum to {s}, not 1")
        elif abs(s - 1) >= 1e-12:
            raise ValueError(f"masses sum to {s!r}, not 1 within 1e-12")

    def __getitem__(self, k: int):
        if 0 <= k < len(self.masses):
            return self.masses[k]
        return Fraction(0) if self.exact else 0.0

    def __len__(self):
        return len(self.masses)

    def to_float(self) -> DiscreteLaw:
        return DiscreteLaw([float(m) for m in self.masses], check=False)

    def as_dict(self) -> dict[int, object]:
        return {k: m for k, m in enumerate(self.masses) if m != 0}

    def to_rows(self) -> list[dict]:
        return [{"k": k, "p": _fmt(m)} for k, m in enumerate(self.masses)]

    def mean(self):
        return sum((k * m for k, m in enumerate(self.masses)), Fraction(0) if self.exact else 0.0)


def _fmt(m) -> str:
    if isinstance(m, Fraction):
        return str(m.numerator) if m.denominator == 1 else f"{m.numerator}/{m.denominator}"
    return repr(float(m))


def conv_nat(f: DiscreteLaw, g: DiscreteLaw) -> DiscreteLaw:
    """(f * g)(k) = sum_{a + b = k} f(a) g(b)."""
    exact = f.exact and g.exact
    zero = Fraction(0) if exact else 0.0
    out = [zero] * (len(f) + len(g) - 1)
    for a, x in enumerate(f.masses):
        if x == 0:
            continue
        for b, y in enumerate(g.masses):
            out[a + b] += x * y
    return DiscreteLaw(out, check=False)


def delta(k: int = 0) -> DiscreteLaw:
    return DiscreteLaw([0] * k + [1])


def bernoulli(p) -> DiscreteLaw:
    p = Fraction(p) if not isinstance(p, float) else p
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    return DiscreteLaw([1 - p, p])


def binomial_free(n: int, p) -> DiscreteLaw:
    """n-fold convolution of Bernoulli(p)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    out = delta(0) if not isinstance(p, float) else DiscreteLaw([1.0])
    be = bernoulli(p)
    for _ in range(n):
        out = conv_nat(out, be)
    return out


def binomial_closed_form(n: int, p) -> DiscreteLaw:
    p = Fraction(p) if not isinstance(p, float) else p
    return DiscreteLaw([math.comb(n, k) * p**k * (1 - p) ** (n - k) for k in range(n + 1)], check=False)


def pointwise_terms(n: int, p, a, b) -> list:
    """Interaction weights a^k b^(n-k) (a p + b (1-p))^-n, k = 0..n."""
    p, a, b = (Fraction(x) if not isinstance(x, float) else x for x in (p, a, b))
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    z = (a * p + b * (1 - p)) ** n
    return [a**k * b ** (n - k) / z for k in range(n + 1)]


def validate_pointwise(p_free: DiscreteLaw, weights: Sequence) -> DiscreteLaw:
    """Check pointwise weights against a free law and return the product law."""
    if len(weights) < len(p_free):
        raise InteractionError("weights do not cover the free configuration space")
    if any(w < 0 for w in weights):
        raise InteractionError("interaction weight is negative")
    masses = [p_free[k] * weights[k] for k in range(len(weights))]
    if any(m > 1 for m in masses):
        raise InteractionError("product p_free(k) w(k) exceeds 1")
    law = DiscreteLaw(masses, check=False)
    total = law.total()
    ok = total == 1 if law.exact else abs(total - 1) < 1e-12
    if not ok:
        raise InteractionError(f"sum of p_free(k) w(k) is {_fmt(total)}, not 1")
    return law


def pointwise_interaction(n: int, p, a, b) -> DiscreteLaw:
    """Free binomial law multiplied pointwise by the interaction weights.

    Gives k -> C(n,k) (a p)^k (b (1-p))^(n-k) / (a p + b (1-p))^n.
    """
    return validate_pointwise(binomial_closed_form(n, p), pointwise_terms(n, p, a, b))


@dataclass
class PoissonCheck:
    n: int
    lam: float
    tv: float
    tail_bound: float
    le_cam_bound: float
    p: float
    a: float
    b: float

    @property
    def within_le_cam(self) -> bool:
        return self.tv <= self.le_cam_bound

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "lambda": self.lam,
            "tv": self.tv,
            "tail_bound": self.tail_bound,
            "le_cam_bound": self.le_cam_bound,
            "within_le_cam": self.within_le_cam,
            "p": self.p,
            "a": self.a,
            "b": self.b,
        }


def poisson_limit_check(n: int, lam: float, p: float = 0.5) -> PoissonCheck:
    """TV distance between the rescaled interacting law and Poisson(lam).

    a_n = lam / (n p) and b_n = (1 - a_n p) / (1 - p), so a_n p + b_n (1 - p) = 1
    and the interacting law is Bin(n, lam / n).
    """
    if not 0 < lam <= n:
        raise ValueError("need 0 < lambda <= n")
    if not 0 < p < 1:
        raise ValueError("need 0 < p < 1")
    a = lam / (n * p)
    b = (1 - a * p) / (1 - p)
    k = np.arange(n + 1)
    # log of C(n,k) (a p)^k (b (1-p))^(n-k) / (a p + b (1-p))^n
    logz = n * math.log(a * p + b * (1 - p))
    logc = np.array([math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1) for i in k])
    law = np.exp(logc + k * math.log(a * p) + special.xlogy(n - k, b * (1 - p)) - logz)
    # Poisson support cut where the omitted tail mass is below 1e-12
    kmax = int(stats.poisson.isf(1e-12, lam)) + 1
    tail = float(stats.poisson.sf(kmax, lam))
    top = max(kmax, n)
    pois = stats.poisson.pmf(np.arange(top + 1), lam)
    ours = np.zeros(top + 1)
    ours[: n + 1] = law
    tv = 0.5 * (float(np.abs(ours - pois).sum()) + tail)
    return PoissonCheck(n, lam, tv, tail, lam**2 / n, p, a, b)


def conv_interaction(p_free: DiscreteLaw, p_hat_int: Sequence | DiscreteLaw) -> DiscreteLaw:
    """p_free * p_hat_int, after checking the interaction term is a probability law.

    Since the total mass of a convolution is the product of the totals, a
    nonnegative term keeps the result normalized exactly when its own total
    is 1.
    """
    masses = list(p_hat_int.masses) if isinstance(p_hat_int, DiscreteLaw) else list(p_hat_int)
    if not masses:
        raise InteractionError("interaction term is empty")
    if any(m < 0 for m in masses):
        raise InteractionError("interaction term has a negative mass")
    term = DiscreteLaw(masses, check=False)
    total = term.total()
    ok = total == 1 if term.exact else abs(total - 1) < 1e-12
    if not ok:
        raise InteractionError(
            f"interaction term has total mass {_fmt(total)}; the convolved law would have total "
            f"{_fmt(p_free.total() * total)} instead of 1"
        )
    out = conv_nat(p_free, term)
    out.validate()
    return out


def order(p: DiscreteLaw) -> int:
    if not p.masses:
        raise ValueError("empty law has no order")
    return len(p.masses) - 1


def conf(p: DiscreteLaw) -> range:
    return range(order(p) + 1)


def range_(p: DiscreteLaw) -> int:
    return order(p) + 1


def xi_representation(k: int, n: int, r: int) -> tuple[int, ...]:
    """(r+1)-tuple of free states contributing to interacting state k.

    The entries are k-r, ..., k clamped to the free configuration space
    {0..n}: an interior state a+r gives (a, ..., a+r), a low state r-a pads
    with a leading zeros and a high state n+b repeats n b times.
    """
    if r < 0 or n < 0:
        raise ValueError("n and r must be nonnegative")
    if r > n:
        raise ValueError("interaction order may not exceed the free order")
    if not 0 <= k <= n + r:
        raise ValueError(f"state {k} outside the interacting configuration space 0..{n + r}")
    return tuple(min(max(k - r + i, 0), n) for i in range(r + 1))


# --------------------------------------------------------------------------
# densities on a grid


@dataclass(frozen=True)
class SampledDensity:
    """Values on the grid start + i * step, i = 0..len-1."""

    start: float
    step: float
    values: np.ndarray

    @property
    def points(self) -> np.ndarray:
        return self.start + self.step * np.arange(len(self.values))

    def support(self) -> tuple[float, float]:
        nz = np.nonzero(self.values)[0]
        if len(nz) == 0:
            raise ValueError("density vanishes identically")
        return self.start + self.step * nz[0], self.start + self.step * nz[-1]

    def mass(self) -> float:
        return float(self.values.sum() * self.step)


def uniform_density(lo: float, hi: float, step: float) -> SampledDensity:
    n = int(round((hi - lo) / step))
    # midpoint samples of the indicator of [lo, hi]
    return SampledDensity(lo + step / 2, step, np.full(n, 1.0 / (hi - lo)))


@dataclass
class DensityConvolution:
    density: SampledDensity
    neighbours: np.ndarray | None

    def to_rows(self) -> list[dict]:
        rows = []
        for i, (x, v) in enumerate(zip(self.density.points, self.density.values)):
            row = {"x": float(x), "density": float(v)}
            if self.neighbours is not None:
                row["neighbour_lo"], row["neighbour_hi"] = map(float, self.neighbours[i])
            rows.append(row)
        return rows


def density_conv(dens_free: SampledDensity, dens_int: SampledDensity | None) -> DensityConvolution:
    """Grid convolution; ``None`` stands for the Dirac delta at 0.

    Also reports, per output point x, the interval x - K of interacting
    neighbours, where K is the support of the interaction density.
    """
    if dens_int is None:
        return DensityConvolution(dens_free, None)
    if not math.isclose(dens_free.step, dens_int.step, rel_tol=1e-12):
        raise ValueError("densities must share the grid step")
    h = dens_free.step
    vals = np.convolve(dens_free.values, dens_int.values) * h
    out = SampledDensity(dens_free.start + dens_int.start, h, vals)
    klo, khi = dens_int.support()
    x = out.points
    return DensityConvolution(out, np.stack([x - khi, x - klo], axis=-1))
