"""Wilson effective action by integrating out shell modes, and the Legendre
effective action as the convex conjugate of the cumulant generator.

Fields are handled in real coordinates (see :func:`convqft.fields.real_modes`):
the low band carries coordinates u_L, the shell band u_S, and the position
field is phi = B_L u_L + B_S u_S.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

from .fields import FieldVector, MomentumGrid, RealModes, RegularizedPropagator, real_modes

__all__ = [
    "InteractionSpec",
    "UnboundedActionError",
    "WilsonSetup",
    "EffectiveAction",
    "wilson_effective",
    "source_coords",
    "check_weq",
    "MeasureSpec",
    "CumulantGenerator",
    "cumulant_generator",
    "LegendreResult",
    "legendre_transform",
    "RateFunction",
    "rate_function",
    "MeanLaw",
    "sample_measure",
    "empirical_mean_law",
    "star_l",
    "nonassociativity_demo",
]


class UnboundedActionError(ValueError):
    pass


# --------------------------------------------------------------------------
# interactions


@dataclass(frozen=True)
class InteractionSpec:
    """S_int(phi) = sum_m g_m / m! * sum_x phi(x)^m."""

    couplings: tuple[tuple[int, float], ...] = ()

    @classmethod
    def of(cls, **kw: float) -> InteractionSpec:
        """``InteractionSpec.of(g4=0.1)`` style constructor."""
        return cls(tuple(sorted((int(k[1:]), float(v)) for k, v in kw.items() if v)))

    @property
    def degree(self) -> int:
        return max((m for m, g in self.couplings if g), default=0)

    def coupling(self, m: int) -> float:
        return dict(self.couplings).get(m, 0.0)

    def __call__(self, phi: np.ndarray) -> np.ndarray:
        """Evaluate on position-space values, shape (..., N)."""
        phi = np.asarray(phi, dtype=float)
        out = np.zeros(phi.shape[:-1])
        for m, g in self.couplings:
            out = out + g / math.factorial(m) * np.sum(phi**m, axis=-1)
        return out

    def quadratic_form(self, basis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(Q, h) with S_int(B u) = 1/2 u^T Q u + h^T u for degree <= 2."""
        if self.degree > 2:
            raise ValueError("closed form needs an interaction of degree <= 2")
        q = self.coupling(2) * basis.T @ basis
        h = self.coupling(1) * basis.sum(axis=0)
        return q, h

    def bounded_below(self) -> bool:
        d = self.degree
        return d <= 2 or (d % 2 == 0 and self.coupling(d) > 0)

    def to_json(self) -> dict:
        return {f"g{m}": g for m, g in self.couplings}


# --------------------------------------------------------------------------
# Wilson effective action


@dataclass(frozen=True)
class WilsonSetup:
    """Sharp low band [0, cutoff) and shell [cutoff, bare_cutoff) on a grid."""

    grid: MomentumGrid
    cutoff: float
    bare_cutoff: float

    def __post_init__(self):
        if self.cutoff > self.bare_cutoff:
            raise ValueError("need cutoff <= bare cutoff")

    @property
    def low(self) -> RegularizedPropagator:
        return RegularizedPropagator.sharp(self.grid, 0.0, self.cutoff)

    @property
    def shell(self) -> RegularizedPropagator:
        return RegularizedPropagator.sharp(self.grid, self.cutoff, self.bare_cutoff)

    @property
    def bare(self) -> RegularizedPropagator:
        return RegularizedPropagator.sharp(self.grid, 0.0, self.bare_cutoff)

    def coords(self) -> tuple[RealModes, RealModes]:
        return real_modes(self.low), real_modes(self.shell)

    def to_json(self) -> dict:
        return {"grid": self.grid.to_json(), "cutoff": self.cutoff, "bare_cutoff": self.bare_cutoff}


@dataclass
class EffectiveAction:
    """S_eff on low-band coordinates, with S_eff(u) = shape(u) + constant."""

    setup: WilsonSetup
    method: str
    fn: Callable[[np.ndarray], np.ndarray]
    constant: float
    quadratic: tuple[np.ndarray, np.ndarray] | None = None
    stderr_fn: Callable[[np.ndarray], np.ndarray] | None = None
    meta: dict = field(default_factory=dict)

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return self.fn(np.asarray(u, dtype=float))

    def stderr(self, u: np.ndarray) -> np.ndarray:
        if self.stderr_fn is None:
            return np.zeros(np.shape(u)[:-1])
        return self.stderr_fn(np.asarray(u, dtype=float))

    def tabulate(self, points: np.ndarray) -> list[dict]:
        vals = self(points)
        errs = self.stderr(points)
        return [
            {"u": [float(x) for x in np.atleast_1d(p)], "s_eff": float(v), "stderr": float(e)}
            for p, v, e in zip(points, vals, errs)
        ]


def _gh_nodes(variance: np.ndarray, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss-Hermite rule for the centred normal with given variances."""
    d = len(variance)
    x, w = np.polynomial.hermite.hermgauss(nodes)
    grids = np.meshgrid(*([x] * d), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1) * np.sqrt(2 * variance)
    wgrids = np.meshgrid(*([w] * d), indexing="ij")
    wts = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1) / math.pi ** (d / 2)
    return pts, wts


def _check_box(s_int: InteractionSpec, basis: np.ndarray, var: np.ndarray, u_fixed: np.ndarray) -> None:
    """Integrand on the 8-sigma box boundary must stay below its value at the centre."""
    d = len(var)
    centre = -s_int(u_fixed)
    edges = []
    for i in range(d):
        for sgn in (-1, 1):
            e = np.zeros(d)
            e[i] = sgn * 8 * math.sqrt(var[i])
            edges.append(e)
    for corner in np.array(np.meshgrid(*([[-1.0, 1.0]] * d), indexing="ij")).reshape(d, -1).T:
        edges.append(corner * 8 * np.sqrt(var))
    for e in edges:
        val = -0.5 * np.sum(e**2 / var) - s_int(u_fixed + basis @ e)
        if val >= centre:
            raise UnboundedActionError("integrand is unbounded below on the quadrature box")


def wilson_effective(
    s_int: InteractionSpec,
    setup: WilsonSetup,
    method: str = "quadrature",
    *,
    nodes: int = 40,
    samples: int = 20000,
    seed: int = 0,
) -> EffectiveAction:
    """exp(-S_eff(phi)) = E_shell[exp(-S_int(phi + eta))].

    Methods: ``exact-quadratic`` (closed form, degree <= 2), ``quadrature``
    (tensor Gauss-Hermite, at most 3 shell coordinates) and ``monte-carlo``.
    """
    if not s_int.bounded_below():
        raise UnboundedActionError("leading coupling does not bound the action from below")
    low, shell = setup.coords()
    bl, bs, var = low.basis, shell.basis, shell.variance
    meta = {"method": method, "setup": setup.to_json(), "interaction": s_int.to_json()}

    if shell.dim == 0 or not s_int.couplings:
        return EffectiveAction(setup, method, lambda u: s_int(u @ bl.T), 0.0, meta=meta)

    if method == "exact-quadratic":
        q, h = s_int.quadratic_form(np.hstack([bl, bs]))
        nl = low.dim
        qll, qls, qss = q[:nl, :nl], q[:nl, nl:], q[nl:, nl:]
        hl, hs = h[:nl], h[nl:]
        a = np.eye(shell.dim) + var[:, None] * qss
        sign, logdet = np.linalg.slogdet(a)
        if sign <= 0 or np.any(np.linalg.eigvals(a).real <= 0):
            raise UnboundedActionError("shell Gaussian integral diverges for this quadratic interaction")
        m_inv = np.linalg.inv(np.diag(1 / var) + qss)
        const = 0.5 * logdet - 0.5 * hs @ m_inv @ hs
        q_eff = qll - qls @ m_inv @ qls.T
        h_eff = hl - qls @ m_inv @ hs

        def fn(u):
            return 0.5 * np.einsum("...i,ij,...j->...", u, q_eff, u) + u @ h_eff + const

        meta["constant"] = float(const)
        return EffectiveAction(setup, method, fn, float(const), quadratic=(q_eff, h_eff), meta=meta)

    if method == "quadrature":
        if shell.dim > 3:
            raise ValueError("quadrature method supports at most 3 shell coordinates")
        pts, wts = _gh_nodes(var, nodes)
        shell_vals = pts @ bs.T

        def fn(u):
            u = np.atleast_1d(u)
            flat = u.reshape(-1, low.dim)
            out = np.empty(len(flat))
            for k, ul in enumerate(flat):
                _check_box(s_int, bs, var, ul @ bl.T)
                expo = -s_int(ul @ bl.T + shell_vals)
                top = expo.max()
                out[k] = -(top + math.log(np.dot(wts, np.exp(expo - top))))
            return out.reshape(u.shape[:-1])

        meta["nodes"] = nodes
        return EffectiveAction(setup, method, fn, float(fn(np.zeros(low.dim))), meta=meta)

    if method == "monte-carlo":
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 1])))
        eta = rng.standard_normal((samples, shell.dim)) * np.sqrt(var)
        shell_vals = eta @ bs.T

        def stats(u):
            u = np.atleast_1d(u)
            flat = u.reshape(-1, low.dim)
            vals, errs = np.empty(len(flat)), np.empty(len(flat))
            for k, ul in enumerate(flat):
                expo = -s_int(ul @ bl.T + shell_vals)
                top = expo.max()
                e = np.exp(expo - top)
                mean = e.mean()
                vals[k] = -(top + math.log(mean))
                errs[k] = e.std(ddof=1) / math.sqrt(samples) / mean
            return vals.reshape(u.shape[:-1]), errs.reshape(u.shape[:-1])

        meta.update(samples=samples, seed=seed)
        return EffectiveAction(
            setup,
            method,
            lambda u: stats(u)[0],
            float(stats(np.zeros(low.dim))[0]),
            stderr_fn=lambda u: stats(u)[1],
            meta=meta,
        )

    raise ValueError(f"unknown method {method!r}")


def source_coords(J: FieldVector, prop: RegularizedPropagator) -> np.ndarray:
    """Coordinates j with <J, phi> = j . u for phi in the band of ``prop``."""
    grid = prop.grid
    if np.any(J.support() & ~prop.support):
        raise ValueError("source must be low-band")
    out = []
    selfc = grid.self_conjugate()
    for pos, jdx in enumerate(grid.indices):
        if prop.weights[pos] == 0:
            continue
        v = J.values[pos]
        if selfc[pos]:
            out.append(v.real)
        elif jdx > 0:
            out.extend([2 * v.real, 2 * v.imag])
    return np.array(out, dtype=float)


def _gauss_closed(var: np.ndarray, q: np.ndarray, c: np.ndarray) -> float:
    """log E_N(0,var)[exp(-1/2 u^T q u + c^T u)]."""
    a = np.eye(len(var)) + var[:, None] * q
    _, logdet = np.linalg.slogdet(a)
    m_inv = np.linalg.inv(np.diag(1 / var) + q)
    return -0.5 * logdet + 0.5 * c @ m_inv @ c


@dataclass
class WeqCheck:
    lhs: float
    rhs: float
    deviation: float
    method: str

    def to_json(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "relative_deviation": self.deviation, "method": self.method}


def check_weq(s_int: InteractionSpec, s_eff: EffectiveAction, J: FieldVector, *, nodes: int = 60) -> WeqCheck:
    """|Z(cutoff, J) - Z_bare(J)| / |Z_bare(J)|.

    Z(cutoff, J) integrates exp(-S_eff + <J, phi>) against the low-band
    measure; Z_bare(J) integrates exp(-S_int + <J, phi>) against the bare
    measure directly.  Quadratic cases use closed forms on both sides;
    otherwise the left side uses Gauss-Hermite over the low coordinates and
    the right side adaptive quadrature over all coordinates.
    """
    setup = s_eff.setup
    j = source_coords(J, setup.low)
    low, shell = setup.coords()
    bl, bs = low.basis, shell.basis

    if s_eff.quadratic is not None and s_int.degree <= 2:
        q_eff, h_eff = s_eff.quadratic
        lhs = math.exp(-s_eff.constant + _gauss_closed(low.variance, q_eff, j - h_eff))
        full_b = np.hstack([bl, bs])
        q, h = s_int.quadratic_form(full_b)
        jfull = np.concatenate([j, np.zeros(shell.dim)])
        rhs = math.exp(_gauss_closed(np.concatenate([low.variance, shell.variance]), q, jfull - h))
        return WeqCheck(lhs, rhs, abs(lhs - rhs) / abs(rhs), "closed-form")

    if low.dim > 2:
        raise ValueError("numeric check supports at most 2 low-band coordinates")
    pts, wts = _gh_nodes(low.variance, nodes)
    lhs = float(np.dot(wts, np.exp(-s_eff(pts) + pts @ j)))

    var = np.concatenate([low.variance, shell.variance])
    full_b = np.hstack([bl, bs])
    d = len(var)
    if d > 3:
        raise ValueError("numeric check supports at most 3 coordinates in total")
    sd = np.sqrt(var)
    norm = np.prod(np.sqrt(2 * np.pi * var))
    jfull = np.concatenate([j, np.zeros(shell.dim)])

    def integrand(*u):
        u = np.array(u)
        return math.exp(-0.5 * np.sum(u**2 / var) - float(s_int(full_b @ u)) + float(jfull @ u)) / norm

    ranges = [(-8 * s, 8 * s) for s in sd]
    rhs, _ = integrate.nquad(integrand, ranges, opts={"epsabs": 0, "epsrel": 1e-11, "limit": 200})
    return WeqCheck(lhs, rhs, abs(lhs - rhs) / abs(rhs), "quadrature")


# --------------------------------------------------------------------------
# Legendre effective action


@dataclass(frozen=True)
class MeasureSpec:
    """Density proportional to exp(-S) with S(phi) = 1/2 sum phi_i^2 / var_i + V(phi)."""

    variance: tuple[float, ...] = (1.0,)
    quartic: float = 0.0
    field: tuple[float, ...] | None = None
    name: str = "gaussian"

    @classmethod
    def gaussian(cls, variance: float = 1.0) -> MeasureSpec:
        return cls((float(variance),), name="gaussian")

    @classmethod
    def quartic_model(cls, g: float = 0.1, h: float = 0.0, variance: float = 1.0) -> MeasureSpec:
        """1/2 phi^2 / var + g phi^4 - h phi."""
        return cls((float(variance),), float(g), (float(h),) if h else None, name="quartic")

    @property
    def dim(self) -> int:
        return len(self.variance)

    def potential(self, phi: np.ndarray) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        out = self.quartic * np.sum(phi**4, axis=-1)
        if self.field is not None:
            out = out - phi @ np.asarray(self.field)
        return out

    def action(self, phi: np.ndarray) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        return 0.5 * np.sum(phi**2 / np.asarray(self.variance), axis=-1) + self.potential(phi)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "variance": list(self.variance),
            "quartic": self.quartic,
            "field": list(self.field) if self.field else None,
        }


class CumulantGenerator:
    """W(J) = log E_mu[exp(<J, phi>)] with gradient and Hessian.

    Uses adaptive Gauss-Hermite: nodes centred at the mode of the tilted
    density and scaled by its curvature there.
    """

    def __init__(self, mu: MeasureSpec, nodes: int | None = None):
        self.mu = mu
        self.nodes = nodes or (120 if mu.dim == 1 else 60)
        self._log_z0 = self._log_z(np.zeros(mu.dim))[0]

    def _mode(self, J: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        mu = self.mu
        var = np.asarray(mu.variance)

        def f(x):
            return float(mu.action(x) - x @ J)

        def grad(x):
            g = x / var + 4 * mu.quartic * x**3 - J
            if mu.field is not None:
                g = g - np.asarray(mu.field)
            return g

        def hess(x):
            return np.diag(1 / var + 12 * mu.quartic * x**2)

        res = optimize.minimize(f, J * var, jac=grad, hess=hess, method="Newton-CG", options={"xtol": 1e-12})
        x = res.x
        return x, hess(x)

    def _log_z(self, J: np.ndarray):
        J = np.atleast_1d(np.asarray(J, dtype=float))
        x0, h = self._mode(J)
        scale = 1 / np.sqrt(np.diag(h))
        d = self.mu.dim
        gx, gw = np.polynomial.hermite.hermgauss(self.nodes)
        grids = np.meshgrid(*([gx] * d), indexing="ij")
        xs = np.stack([g.ravel() for g in grids], axis=-1)
        ws = np.prod(np.stack([g.ravel() for g in np.meshgrid(*([gw] * d), indexing="ij")], axis=-1), axis=-1)
        pts = x0 + math.sqrt(2) * xs * scale
        expo = -self.mu.action(pts) + pts @ J + np.sum(xs**2, axis=-1)
        top = expo.max()
        e = ws * np.exp(expo - top)
        total = e.sum()
        log_z = top + math.log(total) + float(np.sum(np.log(math.sqrt(2) * scale)))
        p = e / total
        mean = p @ pts
        cen = pts - mean
        cov = (cen * p[:, None]).T @ cen
        return log_z, mean, cov

    def __call__(self, J) -> float:
        return float(self._log_z(J)[0] - self._log_z0)

    def grad(self, J) -> np.ndarray:
        return self._log_z(J)[1]

    def hess(self, J) -> np.ndarray:
        return self._log_z(J)[2]

    def mean(self) -> np.ndarray:
        return self.grad(np.zeros(self.mu.dim))


def cumulant_generator(mu: MeasureSpec, J) -> float:
    return CumulantGenerator(mu)(J)


@dataclass
class LegendreResult:
    zeta: np.ndarray
    value: float
    source: np.ndarray
    iterations: int

    def to_json(self) -> dict:
        return {
            "zeta": self.zeta.tolist(),
            "gamma": self.value,
            "maximizing_source": self.source.tolist(),
            "iterations": self.iterations,
        }


def _fd_grad(W: Callable, J: np.ndarray, h: float = 1e-5) -> np.ndarray:
    g = np.empty_like(J)
    for i in range(len(J)):
        e = np.zeros_like(J)
        e[i] = h
        g[i] = (W(J + e) - W(J - e)) / (2 * h)
    return g


def _fd_hess(W: Callable, J: np.ndarray, h: float = 1e-4) -> np.ndarray:
    d = len(J)
    H = np.empty((d, d))
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        H[i] = (_fd_grad(W, J + e) - _fd_grad(W, J - e)) / (2 * h)
    return 0.5 * (H + H.T)


def legendre_transform(
    W: Callable,
    zeta,
    grad: Callable | None = None,
    hess: Callable | None = None,
    *,
    tol: float = 1e-8,
    max_expand: int = 60,
) -> LegendreResult:
    """Gamma(zeta) = sup_J <zeta, J> - W(J) for convex, differentiable W.

    1D: Newton steps safeguarded by a bracket that is grown geometrically
    until W' - zeta changes sign.  2D: damped Newton.
    """
    if isinstance(W, CumulantGenerator):
        grad = grad or W.grad
        hess = hess or W.hess
    zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
    d = len(zeta)
    wfun = lambda J: float(W(np.asarray(J, dtype=float)))
    gfun = (lambda J: np.atleast_1d(grad(J))) if grad else (lambda J: _fd_grad(wfun, J))
    hfun = (lambda J: np.atleast_2d(hess(J))) if hess else (lambda J: _fd_hess(wfun, J))

    if d == 1:
        f = lambda j: float(gfun(np.array([j]))[0] - zeta[0])
        lo, hi = -1.0, 1.0
        flo, fhi = f(lo), f(hi)
        k = 0
        while flo > 0 and k < max_expand:
            hi, fhi = lo, flo
            lo *= 2
            flo = f(lo)
            k += 1
        while fhi < 0 and k < max_expand:
            lo, flo = hi, fhi
            hi *= 2
            fhi = f(hi)
            k += 1
        if flo > 0 or fhi < 0:
            raise ValueError("zeta not attained by the gradient of W")
        j = 0.5 * (lo + hi) if not (lo <= 0 <= hi) else 0.0
        it = 0
        for it in range(1, 200):
            fj = f(j)
            if abs(fj) < tol * 1e-3:
                break
            if fj > 0:
                hi = j
            else:
                lo = j
            h2 = float(hfun(np.array([j]))[0, 0])
            step = j - fj / h2 if h2 > 0 else None
            j_new = step if step is not None and lo < step < hi else 0.5 * (lo + hi)
            if abs(j_new - j) < tol * 1e-3 * max(1.0, abs(j)):
                j = j_new
                break
            j = j_new
        J = np.array([j])
    else:
        J = np.zeros(d)
        it = 0
        for it in range(1, 200):
            g = gfun(J) - zeta
            if np.max(np.abs(g)) < tol * 1e-3:
                break
            step = np.linalg.solve(hfun(J), g)
            t = 1.0
            obj = lambda x: float(zeta @ x - wfun(x))
            base = obj(J)
            while obj(J - t * step) < base - 1e-15 and t > 1e-8:
                t *= 0.5
            J = J - t * step
        if np.max(np.abs(gfun(J) - zeta)) > 1e-6:
            raise ValueError("zeta not attained by the gradient of W")
    return LegendreResult(zeta, float(zeta @ J - wfun(J)), J, it)


@dataclass
class RateFunction:
    grid: np.ndarray
    values: np.ndarray
    sources: np.ndarray

    def is_convex(self, tol: float = 1e-9) -> bool:
        v = self.values
        return bool(np.all(v[:-2] + v[2:] - 2 * v[1:-1] >= -tol))

    def argmin(self) -> float:
        return float(self.grid[int(np.argmin(self.values))])

    def to_csv_rows(self) -> list[dict]:
        return [
            {"zeta": float(z), "gamma": float(v), "source": float(s)}
            for z, v, s in zip(self.grid, self.values, self.sources)
        ]


def rate_function(W: CumulantGenerator, grid: Sequence[float]) -> RateFunction:
    vals, srcs = [], []
    for z in grid:
        r = legendre_transform(W, z)
        vals.append(r.value)
        srcs.append(r.source[0])
    return RateFunction(np.asarray(grid, dtype=float), np.array(vals), np.array(srcs))


# --------------------------------------------------------------------------
# empirical N-mean law


def sample_measure(mu: MeasureSpec, count: int, seed: int, stream: int = 0) -> np.ndarray:
    """Exact draws by rejection from the Gaussian part of the action."""
    var = np.asarray(mu.variance)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 2, stream])))
    if mu.quartic == 0 and mu.field is None:
        return rng.standard_normal((count, mu.dim)) * np.sqrt(var)
    if mu.quartic <= 0:
        raise ValueError("rejection sampler needs a positive quartic term")
    # minimum of V over each axis: 4 g x^3 = h
    h = np.asarray(mu.field) if mu.field is not None else np.zeros(mu.dim)
    xmin = np.cbrt(h / (4 * mu.quartic))
    vmin = float(mu.potential(xmin))
    out = np.empty((0, mu.dim))
    while len(out) < count:
        n = int(1.3 * (count - len(out))) + 1024
        x = rng.standard_normal((n, mu.dim)) * np.sqrt(var)
        acc = rng.random(n) < np.exp(-(mu.potential(x) - vmin))
        out = np.concatenate([out, x[acc]])
    return out[:count]


@dataclass
class MeanLaw:
    n: int
    edges: np.ndarray
    counts: np.ndarray
    samples: int
    means: np.ndarray = field(repr=False)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.samples * self.widths)

    def rate(self) -> np.ndarray:
        """-(1/N) log(bin probability / bin width); inf on empty bins."""
        with np.errstate(divide="ignore"):
            return -np.log(self.density) / self.n

    def rate_at(self, zeta: float) -> tuple[float, float]:
        """Empirical rate at the bin containing ``zeta`` and its standard error."""
        k = int(np.searchsorted(self.edges, zeta, side="right") - 1)
        if not 0 <= k < len(self.counts) or self.counts[k] == 0:
            raise ValueError("no samples in the bin containing zeta")
        c = self.counts[k]
        return float(self.rate()[k]), float(1 / (self.n * math.sqrt(c)))

    def to_csv_rows(self) -> list[dict]:
        centres = 0.5 * (self.edges[1:] + self.edges[:-1])
        return [
            {"bin_centre": float(c), "count": int(k), "density": float(d), "rate": float(r)}
            for c, k, d, r in zip(centres, self.counts, self.density, self.rate())
        ]


def empirical_mean_law(
    mu: MeasureSpec, n: int, samples: int, seed: int, *, bins: np.ndarray | int = 200, span: float = 4.0
) -> MeanLaw:
    """Histogram of (xi_1 + ... + xi_N) / N for iid xi ~ mu (first coordinate)."""
    if n < 1:
        raise ValueError("N must be >= 1")
    means = np.zeros(samples)
    # N separate streams keep memory at one block of `samples` draws
    for j in range(n):
        means += sample_measure(mu, samples, seed, stream=j)[:, 0]
    means /= n
    if isinstance(bins, int):
        sd = math.sqrt(mu.variance[0])
        edges = np.linspace(-span * sd, span * sd, bins + 1)
    else:
        edges = np.asarray(bins, dtype=float)
    counts, _ = np.histogram(means, edges)
    return MeanLaw(n, edges, counts, samples, means)


def star_l(*draws: np.ndarray) -> np.ndarray:
    """Samples of the law of the empirical mean of independent draws."""
    return sum(draws) / len(draws)


def nonassociativity_demo(samples: int = 200000, seed: int = 0) -> dict:
    """Compare (a *_L b) *_L c with a *_L (b *_L c) for a = N(2,1), b = c = N(0,1).

    Returns the mean difference in units of its Monte Carlo standard error.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 3])))
    a1, b1, c1 = 2 + rng.standard_normal(samples), rng.standard_normal(samples), rng.standard_normal(samples)
    a2, b2, c2 = 2 + rng.standard_normal(samples), rng.standard_normal(samples), rng.standard_normal(samples)
    left = star_l(star_l(a1, b1), c1)
    right = star_l(a2, star_l(b2, c2))
    se = math.sqrt(left.var(ddof=1) / samples + right.var(ddof=1) / samples)
    diff = float(right.mean() - left.mean())
    return {
        "left_mean": float(left.mean()),
        "right_mean": float(right.mean()),
        "left_var": float(left.var(ddof=1)),
        "right_var": float(right.var(ddof=1)),
        "mean_difference": diff,
        "standard_error": se,
        "sigmas": abs(diff) / se,
    }
