"""Discretized hierarchy of state spaces over a finite base.

Level 0 is a set X of n points.  Level i >= 1 is a barycentric grid of
probability weights over the level-(i-1) grid points, at resolution m:
all weight vectors with entries in {0, 1/m, ..., 1}.  The vertices of each
grid are the point masses, so the embedding delta is exact on grids.

Functions on a level are vectors indexed by its grid points.  In exact mode
weights are Fractions held in object arrays.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Hierarchy",
    "simplex_grid",
    "grid_size",
    "gelfand_transform",
    "delta_embed",
    "pullback",
    "pullback_identity_check",
    "LiftedIdempotent",
    "lift_idempotent",
    "ObservableFamily",
    "observable_from_base",
    "check_observable",
    "probe_projectors",
    "HierarchyReport",
    "run_checks",
]

MAX_STATES = 250_000


def grid_size(vertices: int, m: int) -> int:
    """Number of simplex grid points, C(m + vertices - 1, vertices - 1)."""
    return math.comb(m + vertices - 1, vertices - 1)


def simplex_grid(vertices: int, m: int, exact: bool = False) -> np.ndarray:
    """Rows are weight vectors k/m with sum(k) = m, in lexicographic order of k."""
    if vertices < 1 or m < 1:
        raise ValueError("need at least one vertex and resolution >= 1")
    size = grid_size(vertices, m)
    if size > MAX_STATES:
        raise ValueError(f"grid of {size} states exceeds the limit of {MAX_STATES}")
    rows = []
    # stars and bars: bar positions among m + vertices - 1 slots
    for bars in itertools.combinations(range(m + vertices - 1), vertices - 1):
        edges = (-1, *bars, m + vertices - 1)
        rows.append([edges[i + 1] - edges[i] - 1 for i in range(vertices)])
    counts = np.array(rows, dtype=np.int64)[::-1]
    if exact:
        out = np.empty(counts.shape, dtype=object)
        for idx, c in np.ndenumerate(counts):
            out[idx] = Fraction(int(c), m)
        return out
    return counts / m


@dataclass
class Hierarchy:
    """Grids for levels 0..levels over an n-point base."""

    base_points: int
    resolution: int | Sequence[int]
    levels: int
    exact: bool = False
    states: list[np.ndarray] = field(init=False, repr=False)
    vertex_index: list[np.ndarray] = field(init=False, repr=False)

    def __post_init__(self):
        if not 1 <= self.levels <= 3:
            raise ValueError("levels must be in 1..3")
        if self.base_points < 1:
            raise ValueError("base must have at least one point")
        res = self.resolution
        res = [res] * self.levels if isinstance(res, int) else list(res)
        if len(res) != self.levels:
            raise ValueError("one resolution per level expected")
        self.resolution = tuple(res)
        # states[i] has shape (|level i+1|, |level i|); states[0] is unused padding
        self.states = [None]
        self.vertex_index = [None]
        below = self.base_points
        for m in res:
            s = simplex_grid(below, m, self.exact)
            self.states.append(s)
            self.vertex_index.append(_vertex_rows(s))
            below = len(s)

    def size(self, level: int) -> int:
        return self.base_points if level == 0 else len(self.states[level])

    def sizes(self) -> list[int]:
        return [self.size(i) for i in range(self.levels + 1)]

    def zero(self, level: int) -> np.ndarray:
        return _zeros(self.size(level), self.exact)

    def to_json(self) -> dict:
        return {
            "base_points": self.base_points,
            "resolution": list(self.resolution),
            "levels": self.levels,
            "exact": self.exact,
            "sizes": self.sizes(),
        }


def _zeros(n: int, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(n, dtype=object)
        out[:] = Fraction(0)
        return out
    return np.zeros(n)


def _vertex_rows(states: np.ndarray) -> np.ndarray:
    """Row index of the point mass at each vertex."""
    idx = np.full(states.shape[1], -1, dtype=np.int64)
    for r, row in enumerate(states):
        nz = [k for k, v in enumerate(row) if v != 0]
        if len(nz) == 1 and row[nz[0]] == 1:
            idx[nz[0]] = r
    assert np.all(idx >= 0), "simplex grid lacks a vertex"
    return idx


def gelfand_transform(h: Hierarchy, f: np.ndarray, level: int) -> np.ndarray:
    """tg_level(f)(mu) = mu(f) for f on level-1 grid points, at every level state."""
    if not 1 <= level <= h.levels:
        raise ValueError(f"level must be in 1..{h.levels}")
    f = np.asarray(f, dtype=object if h.exact else float)
    if f.shape[0] != h.size(level - 1):
        raise ValueError(f"function must have {h.size(level - 1)} values, got {f.shape[0]}")
    return h.states[level].dot(f)


def delta_embed(h: Hierarchy, w, level: int) -> int:
    """Grid index of the point mass delta_w at ``level`` + 1.

    ``w`` is a level grid index, or (for level >= 1) a weight vector that must
    coincide with a grid point.
    """
    if not 0 <= level < h.levels:
        raise ValueError(f"level must be in 0..{h.levels - 1}")
    n = h.size(level)
    if isinstance(w, (int, np.integer)):
        if not 0 <= w < n:
            raise ValueError(f"point {w} is not on the level-{level} grid")
        return int(h.vertex_index[level + 1][w])
    if level == 0:
        raise ValueError("base points are given by index")
    v = np.asarray(w, dtype=object if h.exact else float)
    grid = h.states[level]
    hits = [r for r in range(n) if v.shape == grid[r].shape and all(grid[r] == v)]
    if not hits:
        raise ValueError("state is not a grid point; snapping to the grid is not allowed")
    return int(h.vertex_index[level + 1][hits[0]])


def pullback(h: Hierarchy, g: np.ndarray, level: int) -> np.ndarray:
    """C(delta)(g) = g o delta, from level + 1 functions to level functions."""
    return np.asarray(g)[h.vertex_index[level + 1]]


def pullback_identity_check(h: Hierarchy, f: np.ndarray, level: int) -> float:
    """max_w |tg(f)(delta_w) - f(w)| with tg into ``level`` + 1."""
    back = pullback(h, gelfand_transform(h, f, level + 1), level)
    diff = [abs(a - b) for a, b in zip(back, np.asarray(f))]
    return max(diff) if diff else 0


# --------------------------------------------------------------------------
# idempotents


def _check_projector_field(p: np.ndarray, tol: float) -> float:
    dev = float(np.max(np.abs(np.einsum("wab,wbc->wac", p, p) - p)))
    if dev > tol:
        raise ValueError(f"input is not idempotent: max |p(w)^2 - p(w)| = {dev:.3e}")
    return dev


@dataclass
class LiftedIdempotent:
    """L(G)(mu) = sum_w mu_w p(w) G(delta_w) on functions at ``level`` + 1.

    Only the columns at point masses are nonzero, so the operator is stored as
    A[mu, a, w, b] = mu_w p(w)_ab.
    """

    hierarchy: Hierarchy
    level: int
    p: np.ndarray
    kernel: np.ndarray

    @property
    def rank(self) -> int:
        return self.p.shape[1]

    def __call__(self, G: np.ndarray) -> np.ndarray:
        G = np.asarray(G, dtype=float)
        return np.einsum("uawb,wb->ua", self.kernel, G[self.hierarchy.vertex_index[self.level + 1]])

    def at(self, mu_index: int) -> np.ndarray:
        """Matrix sum_w mu_w p(w) at one grid state."""
        mu = self.hierarchy.states[self.level + 1][mu_index].astype(float)
        return np.einsum("w,wab->ab", mu, self.p)

    def matrix(self) -> np.ndarray:
        """Dense operator on R^(states x rank)."""
        h = self.hierarchy
        nu, r = h.size(self.level + 1), self.rank
        out = np.zeros((nu, r, nu, r))
        out[:, :, h.vertex_index[self.level + 1], :] = self.kernel
        return out.reshape(nu * r, nu * r)

    def idempotency_deviation(self) -> float:
        vi = self.hierarchy.vertex_index[self.level + 1]
        at_vertices = self.kernel[vi]
        square = np.einsum("uavc,vcwb->uawb", self.kernel, at_vertices)
        return float(np.max(np.abs(square - self.kernel)))

    def rank_at_vertices(self) -> tuple[list[int], list[int]]:
        vi = self.hierarchy.vertex_index[self.level + 1]
        lifted = [int(np.linalg.matrix_rank(self.at(int(r)))) for r in vi]
        base = [int(np.linalg.matrix_rank(m)) for m in self.p]
        return lifted, base


def lift_idempotent(h: Hierarchy, p: np.ndarray, level: int, tol: float = 1e-10) -> LiftedIdempotent:
    """tg o p o C(delta) for a projector field p of shape (|level|, r, r)."""
    if not 0 <= level < h.levels:
        raise ValueError(f"level must be in 0..{h.levels - 1}")
    p = np.asarray(p, dtype=float)
    if p.ndim != 3 or p.shape[0] != h.size(level) or p.shape[1] != p.shape[2]:
        raise ValueError(f"expected shape ({h.size(level)}, r, r), got {p.shape}")
    _check_projector_field(p, tol)
    mu = h.states[level + 1].astype(float)
    kernel = np.einsum("uw,wab->uawb", mu, p)
    return LiftedIdempotent(h, level, p, kernel)


def _level_coordinate(h: Hierarchy, level: int) -> np.ndarray:
    """A scalar in [0, 1] per grid point, varying across the level."""
    if level == 0:
        n = h.base_points
        return np.arange(n) / max(n - 1, 1)
    return h.states[level].astype(float).dot(_level_coordinate(h, level - 1))


def probe_projectors(h: Hierarchy, level: int) -> dict[str, np.ndarray]:
    """Identity, a constant rank-1 projector, and a rotating rank-1 projector."""
    n = h.size(level)
    ident = np.broadcast_to(np.eye(2), (n, 2, 2)).copy()
    const = np.broadcast_to(np.full((2, 2), 0.5), (n, 2, 2)).copy()
    theta = 0.5 + 1.3 * np.pi * _level_coordinate(h, level)
    u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    rot = np.einsum("wa,wb->wab", u, u)
    return {"identity": ident, "constant-rank1": const, "rotating-rank1": rot}


# --------------------------------------------------------------------------
# observables


@dataclass
class ObservableFamily:
    """Functions F_0, ..., F_k, one per level."""

    functions: list[np.ndarray]

    @property
    def levels(self) -> int:
        return len(self.functions) - 1


def observable_from_base(h: Hierarchy, f0: np.ndarray) -> ObservableFamily:
    fs = [np.asarray(f0, dtype=object if h.exact else float)]
    for i in range(1, h.levels + 1):
        fs.append(gelfand_transform(h, fs[-1], i))
    return ObservableFamily(fs)


def _restrict(h: Hierarchy, g: np.ndarray, src: int, dst: int) -> np.ndarray:
    for lv in range(src - 1, dst - 1, -1):
        g = pullback(h, g, lv)
    return g


def check_observable(h: Hierarchy, F: ObservableFamily, tol: float = 1e-10) -> bool:
    """F_i restricted to level k along delta equals F_j restricted, for all i, j >= k."""
    if F.levels > h.levels:
        raise ValueError("family has more levels than the hierarchy")
    for i in range(F.levels + 1):
        if len(F.functions[i]) != h.size(i):
            raise ValueError(f"F_{i} has {len(F.functions[i])} values, expected {h.size(i)}")
    for k in range(F.levels + 1):
        ref = F.functions[k]
        for i in range(k + 1, F.levels + 1):
            r = _restrict(h, F.functions[i], i, k)
            if max(abs(a - b) for a, b in zip(r, ref)) > tol:
                return False
    return True


# --------------------------------------------------------------------------
# report


@dataclass
class HierarchyReport:
    config: dict
    pullback_deviation: float
    pullback_exact_zero: bool
    idempotency: dict[str, float]
    rank_preserved: bool
    observable_ok: bool
    perturbed_rejected: bool
    point_trivial: bool
    sizes_ok: bool
    tol: float = 1e-12

    @property
    def ok(self) -> bool:
        return (
            self.pullback_deviation < 1e-14
            and self.pullback_exact_zero
            and all(v < self.tol for v in self.idempotency.values())
            and self.rank_preserved
            and self.observable_ok
            and self.perturbed_rejected
            and self.point_trivial
            and self.sizes_ok
        )

    def failures(self) -> list[str]:
        out = []
        if not self.pullback_deviation < 1e-14:
            out.append("pullback identity (float)")
        if not self.pullback_exact_zero:
            out.append("pullback identity (exact)")
        out += [f"idempotency ({k})" for k, v in self.idempotency.items() if not v < self.tol]
        for name in ("rank_preserved", "observable_ok", "perturbed_rejected", "point_trivial", "sizes_ok"):
            if not getattr(self, name):
                out.append(name.replace("_", " "))
        return out

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "pullback_max_deviation": self.pullback_deviation,
            "pullback_exact_zero": self.pullback_exact_zero,
            "idempotency_max_deviation": self.idempotency,
            "rank_preserved_at_point_masses": self.rank_preserved,
            "observable_compatible": self.observable_ok,
            "perturbed_observable_rejected": self.perturbed_rejected,
            "point_base_trivial": self.point_trivial,
            "level_sizes_match_formula": self.sizes_ok,
            "ok": self.ok,
            "failures": self.failures(),
        }


def _point_base_trivial(resolution: int, levels: int) -> bool:
    h = Hierarchy(1, resolution, levels, exact=True)
    if h.sizes() != [1] * (levels + 1):
        return False
    fam = observable_from_base(h, [Fraction(7, 3)])
    return check_observable(h, fam, tol=0) and all(f[0] == Fraction(7, 3) for f in fam.functions)


def run_checks(
    base_points: int = 3,
    resolution: int = 2,
    levels: int = 2,
    seed: int = 0,
    tol: float = 1e-12,
    on_level: Callable[[int], None] | None = None,
) -> HierarchyReport:
    """All hierarchy invariants on one configuration."""
    rng = np.random.default_rng(seed)
    hf = Hierarchy(base_points, resolution, levels)
    he = Hierarchy(base_points, resolution, levels, exact=True)

    sizes_ok = all(
        hf.size(i) == grid_size(hf.size(i - 1), hf.resolution[i - 1]) for i in range(1, levels + 1)
    )

    dev = 0.0
    exact_zero = True
    for lv in range(levels):
        f = rng.normal(size=hf.size(lv))
        dev = max(dev, float(pullback_identity_check(hf, f, lv)))
        fe = np.array([Fraction(int(k), 7) for k in rng.integers(-50, 50, he.size(lv))], dtype=object)
        exact_zero &= pullback_identity_check(he, fe, lv) == 0
        if on_level:
            on_level(lv)

    idem: dict[str, float] = {}
    rank_ok = True
    for lv in range(levels):
        for name, p in probe_projectors(hf, lv).items():
            lift = lift_idempotent(hf, p, lv)
            key = f"{name}@{lv}->{lv + 1}"
            idem[key] = lift.idempotency_deviation()
            lifted, base = lift.rank_at_vertices()
            rank_ok &= lifted == base

    fam = observable_from_base(hf, rng.normal(size=base_points))
    observable_ok = check_observable(hf, fam)
    bad = ObservableFamily([f.copy() for f in fam.functions])
    bad.functions[1][hf.vertex_index[1][0]] += 1e-3
    perturbed_rejected = not check_observable(hf, bad)

    config = hf.to_json() | {"seed": seed}
    return HierarchyReport(
        config=config,
        pullback_deviation=dev,
        pullback_exact_zero=bool(exact_zero),
        idempotency=idem,
        rank_preserved=bool(rank_ok),
        observable_ok=observable_ok,
        perturbed_rejected=perturbed_rejected,
        point_trivial=_point_base_trivial(hf.resolution[0], levels),
        sizes_ok=sizes_ok,
        tol=tol,
    )
