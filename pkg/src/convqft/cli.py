"""Command-line front end.

Every run prints one report holding the resolved configuration, the results
and a named pass/fail flag per invariant.  Exit status: 0 when all
invariants hold, 1 when one fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

SCHEMA_VERSION = 1
SEED_ENV = "CONVQFT_SEED"

log = logging.getLogger("convqft")


class UsageError(Exception):
    pass


@dataclass
class Report:
    result: dict
    checks: dict[str, bool]
    rows: list[dict] = field(default_factory=list)
    text: list[str] = field(default_factory=list)

    @property
    def failures(self) -> list[str]:
        return sorted(k for k, v in self.checks.items() if not v)


# --------------------------------------------------------------------------
# argument helpers


def _fraction(s: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(f"not a rational number: {s!r}") from e


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _nonneg_int(s: str) -> int:
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError("must be a nonnegative integer")
    return v


def _float_list(s: str) -> list[float]:
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {s!r}") from e


def _fraction_list(s: str) -> list[Fraction]:
    return [_fraction(x.strip()) for x in s.split(",") if x.strip()]


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _plain(x):
    """Convert numpy and Fraction values into JSON-ready Python values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


# --------------------------------------------------------------------------
# commands


def cmd_hopf_check(a) -> Report:
    from .hopf import check_axioms

    rep = check_axioms(a.max_nodes)
    checks = {k: not rep[k] for k in ("coassociativity", "multiplicativity", "counit", "antipode")}
    return Report(dict(rep), checks, text=[rep.summary(), f"forests checked: {rep['forests']}"])


def _toy(a, max_nodes: int):
    from .renorm import ToyModelParams, toy_character

    if a.order is None:
        params = ToyModelParams.for_size(max_nodes, a.scale_log)
    else:
        params = ToyModelParams(scale_log=a.scale_log, order=a.order)
    return params, toy_character(params)


def cmd_renormalize(a) -> Report:
    from .hopf import Forest, parse_forest
    from .renorm import (
        check_convolution_identity,
        counterterm,
        prepare,
        renormalized_character,
    )

    f = parse_forest(a.tree)
    if f.is_unit():
        raise UsageError("give a nonempty tree or forest")
    params, F = _toy(a, max(t.size for t in f.trees))
    R = renormalized_character(F)(f)
    result = {
        "forest": f.code,
        "params": {"scale_log": params.scale_log, "order": params.order},
        "F": F(f).to_json(),
        "C": counterterm(f, F).to_json(),
        "R": R.to_json(),
    }
    if len(f) == 1:
        result["P"] = prepare(f.trees[0], F).to_json()
    checks = {
        "R pole-free": R.is_finite(),
        "R = C * F": check_convolution_identity(f if len(f) > 1 else f.trees[0], F),
    }
    text = [f"F = {F(f)}", f"C = {counterterm(f, F)}", f"R = {R}"]
    if isinstance(f, Forest) and len(f) == 1:
        text.insert(1, f"P = {prepare(f.trees[0], F)}")
    return Report(result, checks, text=text)


def cmd_zren(a) -> Report:
    from .renorm import z_ren

    _, F = _toy(a, a.max_nodes)
    rep = z_ren(a.g, a.max_nodes, F)
    rows = [{"forest": f or "1", "weight": _plain(w)} for f, w in rep.terms]
    text = [f"Z_ren = {rep.series}", f"pole-free: {rep.pole_free}", f"normalization: {rep.normalization}"]
    return Report(rep.to_json(), {"Z_ren pole-free": rep.pole_free}, rows=rows, text=text)


def cmd_gaussian_check(a) -> Report:
    from .fields import (
        FieldVector,
        MomentumGrid,
        RegularizedPropagator,
        characteristic_function,
        convolve_measures,
        free_action_momentum,
        free_action_position,
        moment_series_oracle,
        perturbative_partition,
        sample,
        wick_correlator,
    )

    tol = a.tolerance if a.tolerance is not None else 1e-10
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([a.seed, 10])))
    action_dev = 0.0
    cov_exact = True
    char_dev = 0.0
    moment_z = 0.0
    rows = []
    for n in a.n:
        grid = MomentumGrid(n, a.mass)
        full = RegularizedPropagator.full(grid)
        for _ in range(a.fields):
            phi = FieldVector.random(grid, rng)
            d = abs(free_action_position(phi) - free_action_momentum(phi, full))
            action_dev = max(action_dev, d / max(1.0, abs(free_action_momentum(phi, full))))
        for kind in ("sharp", "smooth"):
            make = getattr(RegularizedPropagator, kind)
            low, shell = make(grid, 0.0, a.cutoff), make(grid, a.cutoff, math.inf)
            conv = convolve_measures(low.measure(), shell.measure())
            if kind == "sharp":
                cov_exact &= bool(np.array_equal(conv.covariance, full.weights))
            for _ in range(10):
                J = FieldVector.random(grid, rng)
                prod = characteristic_function(low.measure(), J) * characteristic_function(shell.measure(), J)
                char_dev = max(char_dev, abs(characteristic_function(conv, J) - prod))
        mu = full.measure()
        draws = sample(mu, a.seed, a.samples, workers=a.workers)
        neg = grid.neg()
        for pos, j in enumerate(grid.indices):
            x = (draws[:, pos] * draws[:, neg[pos]]).real
            m, se = x.mean(), x.std(ddof=1) / math.sqrt(len(x))
            z = abs(m - mu.covariance[pos]) / se if se > 0 else 0.0
            moment_z = max(moment_z, z)
            rows.append(
                {"n": n, "mode": int(j), "weight": float(mu.covariance[pos]), "sample_mean": float(m),
                 "stderr": float(se), "z": float(z)}
            )
    grid = MomentumGrid(a.n[0], a.mass)
    mu = RegularizedPropagator.full(grid).measure()
    w0 = mu.covariance[grid.pos(0)]
    wick4 = wick_correlator(mu, [0, 0, 0, 0])
    series = perturbative_partition(a.order)
    oracle = moment_series_oracle(a.order)
    result = {
        "grids": [MomentumGrid(n, a.mass).to_json() for n in a.n],
        "max_action_relative_deviation": action_dev,
        "sharp_convolution_covariance_exact": cov_exact,
        "max_characteristic_function_deviation": char_dev,
        "max_moment_z_score": moment_z,
        "wick_4pt_zero_mode": wick4,
        "wick_4pt_expected": 3 * w0**2,
        "partition_series": series.to_json(),
    }
    checks = {
        "position/momentum action": action_dev <= tol,
        "sharp convolution covariance": cov_exact,
        "characteristic functions multiply": char_dev < 1e-12,
        "sampled second moments": moment_z <= 5.0,
        "wick 4-point": math.isclose(wick4, 3 * w0**2, rel_tol=1e-14),
        "partition series": series == oracle,
    }
    text = [f"{k}: {'OK' if v else 'FAILED'}" for k, v in checks.items()]
    return Report(result, checks, rows=rows, text=text)


def cmd_gauge_demo(a) -> Report:
    from .fields import GaugeQuadrature, gauge_partition

    quad = GaugeQuadrature(field_nodes=a.field_nodes, gauge_nodes=a.gauge_nodes, adaptive=not a.fixed_scale)
    res = gauge_partition(a.sigma, quad)
    default = {"rotation": 1e-10, "identity": 1e-10}.get(a.sigma, 1e-8)
    tol = a.tolerance if a.tolerance is not None else default
    checks = {}
    if res.det_preserving:
        checks["factorization Z = Z_m Z_g"] = res.deviation <= tol
    out = res.to_json() | {"sigma": a.sigma, "quadrature": quad.to_json(), "tolerance": tol}
    text = [f"Z = {res.z:.15g}", f"Z_m Z_g = {res.factorized:.15g}", f"relative deviation = {res.deviation:.3e}"]
    text += [f"warning: {w}" for w in res.warnings]
    return Report(out, checks, text=text)


def cmd_wilson(a) -> Report:
    from .effective import InteractionSpec, WilsonSetup, check_weq, wilson_effective
    from .fields import FieldVector, MomentumGrid

    s_int = InteractionSpec.of(g1=a.g1, g2=a.g2, g3=a.g3, g4=a.g4)
    setup = WilsonSetup(MomentumGrid(a.n, a.mass), a.cutoff, a.bare_cutoff)
    s_eff = wilson_effective(s_int, setup, a.method, nodes=a.nodes, samples=a.samples, seed=a.seed)
    low, shell = setup.coords()
    default = {"exact-quadratic": 1e-8, "quadrature": 1e-6, "monte-carlo": 5e-2}[a.method]
    tol = a.tolerance if a.tolerance is not None else default
    weq = []
    for amp in a.sources:
        J = FieldVector.modes(setup.grid, {a.source_mode: amp})
        c = check_weq(s_int, s_eff, J)
        weq.append({"source_amplitude": amp, "source_mode": a.source_mode} | c.to_json())
    pts = np.linspace(-2, 2, a.table_points)
    table_pts = np.zeros((len(pts), low.dim))
    if low.dim:
        table_pts[:, 0] = pts
    rows = s_eff.tabulate(table_pts) if low.dim else []
    for r in rows:
        r["u"] = ";".join(f"{x:.6g}" for x in r["u"])
    result = {
        "setup": setup.to_json(),
        "interaction": s_int.to_json(),
        "method": a.method,
        "low_coordinates": list(low.labels),
        "shell_coordinates": list(shell.labels),
        "constant": s_eff.constant,
        "weq": weq,
        "tolerance": tol,
    }
    max_dev = max((w["relative_deviation"] for w in weq), default=0.0)
    checks = {"Z(cutoff, J) = Z_bare(J)": max_dev <= tol}
    text = [f"J={w['source_amplitude']:g}: deviation {w['relative_deviation']:.3e}" for w in weq]
    return Report(result, checks, rows=rows, text=text)


def _measure(a):
    from .effective import MeasureSpec

    if a.model == "gaussian":
        return MeasureSpec.gaussian(a.variance)
    return MeasureSpec.quartic_model(g=a.g, h=a.h, variance=a.variance)


def cmd_legendre(a) -> Report:
    from .effective import CumulantGenerator, legendre_transform, rate_function

    mu = _measure(a)
    W = CumulantGenerator(mu)
    grid = np.linspace(a.zeta_min, a.zeta_max, a.points)
    rf = rate_function(W, grid)
    mean = float(W.mean()[0])
    at_mean = legendre_transform(W, mean)
    tol = a.tolerance if a.tolerance is not None else 1e-6
    checks = {"Gamma convex": rf.is_convex(), "Gamma'(<phi>) = 0": abs(at_mean.source[0]) <= tol}
    result = {"measure": mu.to_json(), "mean": mean, "source_at_mean": float(at_mean.source[0]),
              "gamma_at_mean": at_mean.value, "argmin": rf.argmin(), "tolerance": tol}
    if a.model == "gaussian":
        dev = float(np.max(np.abs(rf.values - grid**2 / (2 * a.variance))))
        result["max_deviation_from_closed_form"] = dev
        checks["Gamma = zeta^2 / (2 var)"] = dev <= (a.tolerance if a.tolerance is not None else 1e-8)
    text = [f"mean {mean:.10g}, Gamma'(mean) source {at_mean.source[0]:.3e}, argmin {rf.argmin():.6g}"]
    return Report(result, checks, rows=rf.to_csv_rows(), text=text)


def cmd_mean_law(a) -> Report:
    from .effective import CumulantGenerator, empirical_mean_law, legendre_transform, nonassociativity_demo
    from scipy import optimize

    mu = _measure(a)
    W = CumulantGenerator(mu)
    mean = float(W.mean()[0])
    target = a.gamma_level
    zeta = optimize.brentq(lambda z: legendre_transform(W, z).value - target, mean, mean + 20 * math.sqrt(a.variance))
    law = empirical_mean_law(mu, a.N, a.samples, a.seed, bins=a.bins)
    rate, se = law.rate_at(zeta)
    gamma = legendre_transform(W, zeta).value
    rel = abs(rate - gamma) / gamma
    tol = a.tolerance if a.tolerance is not None else 0.25
    result = {
        "measure": mu.to_json(),
        "N": a.N,
        "samples": a.samples,
        "zeta": zeta,
        "gamma": gamma,
        "empirical_rate": rate,
        "empirical_rate_stderr": se,
        "relative_deviation": rel,
        "tolerance": tol,
    }
    checks = {"empirical rate matches Gamma": rel <= tol}
    if a.nonassoc:
        demo = nonassociativity_demo(samples=a.samples, seed=a.seed)
        result["nonassociativity"] = demo
    text = [f"zeta={zeta:.6g} Gamma={gamma:.6g} empirical={rate:.6g}+-{se:.2g} rel.dev={rel:.3f}"]
    return Report(result, checks, rows=law.to_csv_rows(), text=text)


def cmd_seq_pointwise(a) -> Report:
    from .sequences import binomial_closed_form, pointwise_interaction

    law = pointwise_interaction(a.n, a.p, a.a, a.b)
    checks = {"normalization": law.total() == 1, "masses in [0, 1]": all(0 <= m <= 1 for m in law.masses)}
    result = {"n": a.n, "p": a.p, "a": a.a, "b": a.b, "law": law.to_rows()}
    if a.a * a.p + a.b * (1 - a.p) == 1:
        same = law == binomial_closed_form(a.n, a.a * a.p)
        result["equals_free_law_with_parameter_ap"] = same
        checks["case (a): law is Bin(n, ap)"] = same
    return Report(result, checks, rows=law.to_rows(), text=[f"{r['k']}: {r['p']}" for r in law.to_rows()])


def cmd_seq_conv(a) -> Report:
    from .sequences import DiscreteLaw, binomial_free, conv_interaction, order, range_

    free = binomial_free(a.free_n, a.free_p)
    out = conv_interaction(free, a.interaction)
    term = DiscreteLaw(a.interaction)
    checks = {
        "normalization": out.total() == 1,
        "order additivity": order(out) == order(free) + order(term),
    }
    if term[order(term)] == 1:
        shift = order(term)
        checks["pure shift"] = all(out[j] == free[j - shift] for j in range(order(out) + 1) if j >= shift) and all(
            out[j] == 0 for j in range(shift)
        )
    result = {
        "free": free.to_rows(),
        "interaction": term.to_rows(),
        "law": out.to_rows(),
        "order": order(out),
        "range_interaction": range_(term),
        "conf_size": order(out) + 1,
        "free_conf_size": order(free) + 1,
    }
    return Report(result, checks, rows=out.to_rows(), text=[f"{r['k']}: {r['p']}" for r in out.to_rows()])


def cmd_seq_poisson(a) -> Report:
    from .sequences import poisson_limit_check

    res = poisson_limit_check(a.n, a.lam, a.p)
    checks = {"Le Cam bound": res.within_le_cam}
    if a.tolerance is not None:
        checks["TV within tolerance"] = res.tv <= a.tolerance
    row = res.to_json()
    return Report(row, checks, rows=[row], text=[f"TV = {res.tv:.6e} (Le Cam bound {res.le_cam_bound:.3g})"])


def cmd_seq_xi(a) -> Report:
    from .sequences import xi_representation

    ks = [a.k] if a.k is not None else list(range(a.n + a.r + 1))
    table = {k: xi_representation(k, a.n, a.r) for k in ks}
    rows = [{"k": k, "xi": " ".join(map(str, v))} for k, v in table.items()]
    checks = {"card <= range": all(len(v) <= a.r + 1 for v in table.values())}
    if a.k is None:
        checks["injective"] = len(set(table.values())) == len(table)
    return Report({"n": a.n, "r": a.r, "xi": {str(k): list(v) for k, v in table.items()}}, checks, rows=rows,
                  text=[f"{r['k']}: ({r['xi']})" for r in rows])


def cmd_hierarchy_check(a) -> Report:
    from .hierarchy import run_checks

    tol = a.tolerance if a.tolerance is not None else 1e-12
    rep = run_checks(a.base_points, a.resolution, a.levels, seed=a.seed, tol=tol)
    js = rep.to_json()
    checks = {
        "pullback identity": rep.pullback_deviation < 1e-14 and rep.pullback_exact_zero,
        "lifted idempotents": all(v < tol for v in rep.idempotency.values()),
        "rank at point masses": rep.rank_preserved,
        "observable compatibility": rep.observable_ok and rep.perturbed_rejected,
        "point base trivial": rep.point_trivial,
        "level sizes": rep.sizes_ok,
    }
    rows = [{"projector": k, "idempotency_deviation": v} for k, v in rep.idempotency.items()]
    return Report(js, checks, rows=rows, text=[f"{k}: {'OK' if v else 'FAILED'}" for k, v in checks.items()])


# --------------------------------------------------------------------------
# parser


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run options")
    g.add_argument("--seed", type=int, default=None, help=f"RNG seed (default: ${SEED_ENV} or 0)")
    g.add_argument("--format", choices=("json", "csv", "text"), default="json", help="output format")
    g.add_argument("--tolerance", type=float, default=None, help="override the pass/fail tolerance")
    g.add_argument("--out", default=None, help="write output to this path instead of stdout")
    g.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="convqft",
        description="Desk-scale convolution experiments: Hopf renormalization, Gaussian measures, "
        "effective actions, interacting sequences and state-space hierarchies.",
        epilog=f"The default seed can be set with the {SEED_ENV} environment variable.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_, description=help_)
        p.set_defaults(fn=fn)
        return p

    p = add("hopf-check", cmd_hopf_check, "check Hopf algebra axioms on all forests up to a size")
    p.add_argument("--max-nodes", type=_nonneg_int, default=5)

    def toy_args(p):
        p.add_argument("--scale-log", type=_fraction, default=None, help="L = ln a (symbolic when omitted)")
        p.add_argument("--order", type=_nonneg_int, default=None, help="expansion order of a^(n eps)")

    p = add("renormalize", cmd_renormalize, "BPHZ counterterm and renormalized value of a tree")
    p.add_argument("tree", help='nested-parenthesis encoding, e.g. "(())"')
    toy_args(p)

    p = add("zren", cmd_zren, "renormalized partition sum over forests")
    p.add_argument("--g", type=_fraction, default=Fraction(1, 10))
    p.add_argument("--max-nodes", type=_nonneg_int, default=4)
    toy_args(p)

    p = add("gaussian-check", cmd_gaussian_check, "free action, measure convolution and sampling checks")
    p.add_argument("--n", type=lambda s: [int(x) for x in s.split(",")], default=[4, 8, 16], help="grid sizes")
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--fields", type=_positive_int, default=100)
    p.add_argument("--cutoff", type=float, default=1.0)
    p.add_argument("--samples", type=_positive_int, default=100000)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--order", type=_nonneg_int, default=6, help="order of the perturbative series")

    from .fields import SIGMA_FAMILIES

    p = add("gauge-demo", cmd_gauge_demo, "factorization of the gauge-type partition function")
    p.add_argument("--sigma", choices=sorted(SIGMA_FAMILIES), default="rotation")
    p.add_argument("--field-nodes", type=_positive_int, default=48)
    p.add_argument("--gauge-nodes", type=_positive_int, default=64)
    p.add_argument("--fixed-scale", action="store_true", help="use an A-independent node scale")

    p = add("wilson", cmd_wilson, "Wilson effective action by integrating out the momentum shell")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--cutoff", type=float, default=1.0)
    p.add_argument("--bare-cutoff", type=float, default=4.0)
    for m, d in ((1, 0.0), (2, 0.0), (3, 0.0), (4, 0.1)):
        p.add_argument(f"--g{m}", type=float, default=d, help=f"coupling of phi^{m}/{m}!")
    p.add_argument("--method", choices=("exact-quadratic", "quadrature", "monte-carlo"), default="quadrature")
    p.add_argument("--nodes", type=_positive_int, default=40)
    p.add_argument("--samples", type=_positive_int, default=20000)
    p.add_argument("--sources", type=_float_list, default=[0.0, 0.3, -1.0, 1.0], help="source amplitudes")
    p.add_argument("--source-mode", type=int, default=0)
    p.add_argument("--table-points", type=_positive_int, default=9)

    def measure_args(p):
        p.add_argument("--model", choices=("gaussian", "quartic"), default="quartic")
        p.add_argument("--g", type=float, default=0.1)
        p.add_argument("--h", type=float, default=0.0)
        p.add_argument("--variance", type=float, default=1.0)

    p = add("legendre", cmd_legendre, "Legendre effective action of a one-mode measure")
    measure_args(p)
    p.add_argument("--zeta-min", type=float, default=-2.0)
    p.add_argument("--zeta-max", type=float, default=2.0)
    p.add_argument("--points", type=_positive_int, default=41)

    p = add("mean-law", cmd_mean_law, "empirical N-mean law and its rate function")
    measure_args(p)
    p.add_argument("--N", type=_positive_int, default=5)
    p.add_argument("--samples", type=_positive_int, default=1_000_000)
    p.add_argument("--bins", type=_positive_int, default=200)
    p.add_argument("--gamma-level", type=float, default=1.0, help="compare where Gamma equals this value")
    p.add_argument("--nonassoc", action="store_true", help="also run the non-associativity demo")

    seq = sub.add_parser("sequences", help="interacting-sequence laws")
    ssub = seq.add_subparsers(dest="action", required=True, metavar="ACTION")

    def sadd(name, fn, help_):
        q = ssub.add_parser(name, parents=[common], help=help_, description=help_)
        q.set_defaults(fn=fn)
        return q

    q = sadd("interact-pointwise", cmd_seq_pointwise, "binomial law with pointwise interaction weights")
    q.add_argument("--n", type=_nonneg_int, default=5)
    q.add_argument("--p", type=_fraction, default=Fraction(1, 2))
    q.add_argument("--a", type=_fraction, default=Fraction(6, 5))
    q.add_argument("--b", type=_fraction, default=Fraction(4, 5))

    q = sadd("interact-conv", cmd_seq_conv, "binomial law convolved with an interaction law")
    q.add_argument("--free-n", type=_nonneg_int, default=2)
    q.add_argument("--free-p", type=_fraction, default=Fraction(1, 2))
    q.add_argument("--interaction", type=_fraction_list, default=[Fraction(1, 2), Fraction(1, 2)],
                   help="masses p(0),p(1),... as comma-separated rationals")

    q = sadd("poisson-limit", cmd_seq_poisson, "distance of the rescaled law to Poisson")
    q.add_argument("--n", type=_positive_int, default=1000)
    q.add_argument("--lambda", dest="lam", type=float, default=1.0)
    q.add_argument("--p", type=float, default=0.5)

    q = sadd("xi", cmd_seq_xi, "free-state tuples behind interacting states")
    q.add_argument("--n", type=_nonneg_int, default=4)
    q.add_argument("--r", type=_nonneg_int, default=2)
    q.add_argument("--k", type=_nonneg_int, default=None, help="single state (default: all)")

    hier = sub.add_parser("hierarchy", help="discretized state-space hierarchy")
    hsub = hier.add_subparsers(dest="action", required=True, metavar="ACTION")
    q = hsub.add_parser("check", parents=[common], help="pullback, idempotent and observable checks")
    q.set_defaults(fn=cmd_hierarchy_check)
    q.add_argument("--base-points", type=_positive_int, default=3)
    q.add_argument("--resolution", type=_positive_int, default=2)
    q.add_argument("--levels", type=_positive_int, default=2)
    return parser


# --------------------------------------------------------------------------
# output


def _config(a) -> dict:
    skip = {"fn", "format", "out", "verbose"}
    return _plain({k: v for k, v in sorted(vars(a).items()) if k not in skip})


def render(report: Report, a, timestamp: str | None = None) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": a.command + (f" {a.action}" if getattr(a, "action", None) else ""),
        "config": _config(a),
        "result": _plain(report.result),
        "checks": _plain(report.checks),
        "ok": not report.failures,
        "failures": report.failures,
        "timestamp": timestamp or datetime.now(timezone.utc).isoformat(),
    }
    if a.format == "json":
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if a.format == "csv":
        rows = report.rows or [{"check": k, "ok": v} for k, v in sorted(report.checks.items())]
        rows = [_plain(r) for r in rows]
        buf = io.StringIO()
        fields = list(dict.fromkeys(k for r in rows for k in r))
        w = csv.DictWriter(buf, fieldnames=fields, quoting=csv.QUOTE_MINIMAL)
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()
    lines = list(report.text)
    lines.append("all checks passed" if not report.failures else "FAILED: " + ", ".join(report.failures))
    return "\n".join(lines) + "\n"


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if a.seed is None:
            a.seed = _default_seed()
    except UsageError as e:
        print(f"{parser.prog}: error: {e}", file=stderr)
        return 2
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, stream=stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    fn: Callable = a.fn
    try:
        report = fn(a)
    except (UsageError, ValueError, ArithmeticError) as e:
        print(f"{parser.prog}: error: {e}", file=stderr)
        return 2
    text = render(report, a)
    if a.out:
        with open(a.out, "w", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    for name in report.failures:
        print(f"invariant failed: {name}", file=stderr)
    return 1 if report.failures else 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
