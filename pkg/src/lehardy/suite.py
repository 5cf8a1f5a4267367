"""The acceptance matrix, shared by ``lehardy verify-suite`` and the tests.

Each ``criterion_<n>`` returns a ``CriterionResult`` whose ``details`` hold
every number that went into the verdict. Solves that several criteria need
are cached for the lifetime of the process.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import constants, hardy
from .closed_forms import ClosedForm, compare
from .corpus import XorShift64Star, standard_corpus
from .errors import LEHardyError
from .grid import ScalarField, ShapeSpec, build_domain, solve_poisson
from .lane_emden import (
    comparison_check,
    exhaust_density,
    lambda_2q_from_density,
    solve_lane_emden,
)
from .spectral import lambda_2gamma, principal_eigenvalue, schrodinger_ground_state

SHAPES = {
    "disk": ShapeSpec.ball((0.0, 0.0), 1.0),
    "square": ShapeSpec.rectangle([(0.0, 1.0), (0.0, 1.0)]),
    "interval": ShapeSpec.interval(-1.0, 1.0),
    "slab": ShapeSpec.slab(1.0, 8.0, 2),
}
DISK_H = 2.0 ** -7
SLAB_H = 2.0 ** -6
WAVEGUIDE_H = 2.0 ** -5
SWEEP_H = 2.0 ** -6
INTERVAL_H = 2.0 ** -8
EXHAUSTION_RADII = (2.0, 4.0, 8.0)
# spacing of the checks on each bounded shape
CHECK_H = {"disk": DISK_H, "square": DISK_H, "interval": INTERVAL_H}
TOL = 1e-8


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] criterion {self.number:>2}: {self.title} ({self.seconds:.1f} s)"


@lru_cache(maxsize=None)
def domain(name: str, h: float):
    return build_domain(SHAPES[name], h)


@lru_cache(maxsize=None)
def density(name: str, h: float, q: float):
    return solve_lane_emden(domain(name, h), q, TOL)


@lru_cache(maxsize=None)
def eigen(name: str, h: float):
    return principal_eigenvalue(domain(name, h))


@lru_cache(maxsize=None)
def certificate(name: str, h: float, q: float):
    return hardy.certify(domain(name, h), q)


def _timed(number: int, title: str, fn, budget: float | None = None) -> CriterionResult:
    t0 = time.perf_counter()
    try:
        passed, details = fn()
    except LEHardyError as exc:
        passed, details = False, {"error": f"{type(exc).__name__}: {exc}"}
    secs = time.perf_counter() - t0
    if budget is not None:
        details["budget_s"] = budget
        passed = passed and secs <= budget
    return CriterionResult(number, title, bool(passed), details, secs)


def criterion_1() -> CriterionResult:
    def run():
        c = certificate("disk", DISK_H, 1.0)
        d = {"sup_norm": c.sup_norm, "theorem_bound": c.theorem_bound,
             "lambda1_V": c.lambda1_V, "threshold": 2 - 5 * DISK_H, "verdict": c.verdict,
             "corollary_bound": c.corollary_bound}
        ok = (abs(c.sup_norm - 0.25) <= 1e-3 and round(c.theorem_bound, 3) == 2.0
              and c.theorem_bound == 0.5 / c.sup_norm
              and c.lambda1_V >= 2 - 5 * DISK_H and c.verdict == "PASS")
        return ok, d
    return _timed(1, "ball bound on the unit disk", run, 60.0)


def criterion_2() -> CriterionResult:
    def run():
        ex = exhaust_density(SHAPES["slab"], 1.0, EXHAUSTION_RADII, SLAB_H, TOL)
        last = ex.densities[-1]
        err = compare(last.field, ClosedForm("slab_torsion", 2),
                      lambda x: np.abs(x[:, 1]) <= 1.0)
        tb = hardy.theorem_bound(last)
        c = certificate("slab", SLAB_H, 1.0)
        d = {"center_values": ex.center_values, "increments": ex.increments,
             "monotone": ex.monotone, "theorem_bound": tb, "closed_form_max_rel": err.max_rel,
             "certificate_verdict": c.verdict, "lambda1_V": c.lambda1_V}
        ok = (ex.monotone and ex.center_values[-1] >= 0.5 - 5e-3 and abs(tb - 1) <= 0.02
              and err.max_rel <= 1e-2 and c.verdict == "PASS")
        return ok, d
    return _timed(2, "slab bound and exhaustion", run, 120.0)


def criterion_3() -> CriterionResult:
    def run():
        spec = ShapeSpec.waveguide(ShapeSpec.ball((0.0, 0.0), 1.0), 8.0)
        ex = exhaust_density(spec, 1.0, EXHAUSTION_RADII, WAVEGUIDE_H, TOL)
        last = ex.densities[-1]
        tb = hardy.theorem_bound(last)
        mid = lambda x: np.abs(x[:, 2]) < 0.5 * WAVEGUIDE_H
        err = compare(last.field, ClosedForm("waveguide_density", 3), mid)
        dom3 = last.domain
        keep = mid(dom3.coords)
        disk = solve_lane_emden(build_domain(SHAPES["disk"], WAVEGUIDE_H), 1.0, TOL)
        idx = disk.domain.index_of(dom3.lattice_index[keep][:, :2])
        discrete = float(np.abs(last.values[keep] - disk.values[idx]).max())
        d = {"nodes": dom3.M, "theorem_bound": tb, "monotone": ex.monotone,
             "vs_closed_form_max_abs": err.max_abs, "vs_disk_solve_max_abs": discrete}
        ok = (abs(tb - 2) <= 0.05 * 2 and err.max_abs <= 1e-2 and discrete <= 1e-2
              and ex.monotone)
        return ok, d
    return _timed(3, "waveguide bound and dimensional reduction", run, 600.0)


def criterion_4() -> CriterionResult:
    def run():
        total = positive = failed = 0
        worst = math.inf
        for name in ("disk", "square"):
            for q in (1.0, 1.5):
                dn = density(name, SWEEP_H, q)
                tests = standard_corpus(dn.domain, seed=0)
                for delta in hardy.DEFAULT_SWEEP:
                    for c in hardy.check_hardy(dn, delta, tests):
                        total += 1
                        positive += c.margin > 0
                        failed += not c.passed
                        worst = min(worst, c.margin / c.rhs)
        d = {"checks": total, "failed": failed, "positive_fraction": positive / total,
             "worst_relative_margin": worst}
        return failed == 0 and positive >= 0.95 * total, d
    return _timed(4, "Hardy-Lane-Emden sweep over test corpora", run)


def criterion_5() -> CriterionResult:
    def run():
        d = {}
        ok = True
        for q in (1.0, 1.5):
            via_density = lambda_2q_from_density(density("disk", DISK_H, q))
            direct = lambda_2gamma(domain("disk", DISK_H), q)
            rel = abs(via_density - direct) / direct
            d[f"disk_q{q:g}"] = {"density": via_density, "direct": direct, "rel": rel}
            ok &= rel <= 0.01
        lam = lambda_2q_from_density(density("interval", INTERVAL_H, 1.0))
        d["interval_q1"] = lam
        ok &= abs(lam - 1.5) <= 0.015
        return ok, d
    return _timed(5, "lambda_2q via density vs direct minimization", run)


def criterion_6() -> CriterionResult:
    def run():
        d = {}
        ok = True
        for name in ("disk", "interval"):
            h = CHECK_H[name]
            for q, gamma in ((1.0, 1.0), (1.0, 1.5), (1.25, 1.5)):
                lam = lambda_2gamma(domain(name, h), gamma)
                r = hardy.check_bilat(density(name, h, q), gamma, lam)
                d[f"{name}_q{q:g}_g{gamma:g}"] = {"middle": r.middle, "upper": r.upper}
                ok &= r.passed
                if gamma == q:
                    ok &= abs(r.middle - 1.0) <= 0.02
        return ok, d
    return _timed(6, "two-sided lambda_2gamma estimate", run)


def criterion_7() -> CriterionResult:
    def run():
        d = {}
        ok = True
        for name in ("disk", "square", "interval"):
            h = CHECK_H[name]
            lam = eigen(name, h).eigenvalue
            for q in (1.0, 1.5):
                r = hardy.check_dorin(density(name, h, q), lam)
                d[f"{name}_q{q:g}"] = {"lower": r.lower.value, "sup": r.sup_norm,
                                       "upper": r.upper.bound, "looseness": r.looseness}
                ok &= r.passed
        return ok, d
    return _timed(7, "sup-norm estimate by lambda_1", run)


def criterion_8() -> CriterionResult:
    def run():
        d = {}
        ok = True
        cases = (("disk", DISK_H, (0.0, 0.0), 0.5), ("slab", SLAB_H, (0.0, 0.0), 0.8),
                 ("slab", SLAB_H, (0.0, 5.0), 0.9))
        for name, h, center, R0 in cases:
            for q in (1.0, 1.5):
                rhs = {}
                for alpha in (2.0, 4.0):
                    r = hardy.check_linfty_estimate(density(name, h, q), center, R0, alpha)
                    rhs[alpha] = r.rhs
                    d[f"{name}@{center}_q{q:g}_a{alpha:g}"] = {"lhs": r.lhs, "rhs": r.rhs,
                                                               "looseness": r.looseness}
                    ok &= r.passed
                ok &= rhs[4.0] >= rhs[2.0]
        return ok, d
    return _timed(8, "local L-infinity estimate", run)


def criterion_9() -> CriterionResult:
    def run():
        m1 = constants.moser_constant(1, 1.0)
        t4 = constants.talenti_constant(4)
        certs = [certificate("disk", DISK_H, 1.0), certificate("slab", SLAB_H, 1.0)]
        order = [c.corollary_bound <= c.theorem_bound for c in certs]
        d = {"moser_1": m1, "talenti_4": t4,
             "ordering": [(c.corollary_bound, c.theorem_bound) for c in certs]}
        ok = (abs(m1 - 8 * math.sqrt(5)) <= 1e-12 * m1
              and abs(t4 - 8 * math.pi / math.sqrt(6)) <= 1e-12 * t4 and all(order))
        return ok, d
    return _timed(9, "explicit constants and bound ordering", run)


def _random_shape(rng: XorShift64Star) -> ShapeSpec:
    if rng.uniform() < 0.5:
        lo = [rng.uniform(-1.0, -0.3) for _ in range(2)]
        return ShapeSpec.rectangle([(a, a + rng.uniform(0.6, 1.4)) for a in lo])
    balls = [((rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)), rng.uniform(0.3, 0.7))
             for _ in range(1 + int(3 * rng.uniform()))]
    return ShapeSpec.union_of_balls(balls)


def property_sbp(rng: XorShift64Star) -> tuple[bool, float]:
    """``<-Delta u, v> = <u, -Delta v>`` on random fields."""
    worst = 0.0
    for name, h in (("disk", 2.0 ** -5), ("square", 2.0 ** -5), ("interval", 2.0 ** -6)):
        dom = domain(name, h)
        for _ in range(3):
            u = np.array([rng.uniform(-1, 1) for _ in range(dom.M)])
            v = np.array([rng.uniform(-1, 1) for _ in range(dom.M)])
            A = dom.laplacian_matrix
            a, b = np.dot(A @ u, v), np.dot(u, A @ v)
            worst = max(worst, abs(a - b) / max(abs(a), abs(b)))
    return worst <= 1e-12, worst


def property_max_principle(rng: XorShift64Star, n: int = 50) -> tuple[bool, float]:
    lowest = math.inf
    h = 2.0 ** -5
    for _ in range(n):
        dom = build_domain(_random_shape(rng), h)
        f = np.array([rng.uniform(0, 1) for _ in range(dom.M)])
        u = solve_poisson(ScalarField(dom, f), tol=1e-12).values
        lowest = min(lowest, float(u.min()))
    return lowest >= 0.0, lowest


def property_comparison(rng: XorShift64Star, n: int = 20) -> tuple[bool, float]:
    worst = -math.inf
    h = 2.0 ** -5
    ok = True
    for _ in range(n):
        c = (rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3))
        r = rng.uniform(0.3, 0.6)
        inner = ShapeSpec.ball(c, r)
        outer = ShapeSpec.union_of_balls([(c, r + rng.uniform(0.05, 0.4)),
                                          ((rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)),
                                           rng.uniform(0.3, 0.6))])
        q = (1.0, 1.25, 1.5)[int(3 * rng.uniform())]
        rep = comparison_check(solve_lane_emden(build_domain(inner, h), q, TOL),
                               solve_lane_emden(build_domain(outer, h), q, TOL))
        worst = max(worst, rep.max_violation)
        ok &= rep.passed
    return ok, worst


def property_init_independence(rng: XorShift64Star) -> tuple[bool, float]:
    worst = 0.0
    for name in ("disk", "square"):
        dom = domain(name, 2.0 ** -5)
        ref = solve_lane_emden(dom, 1.5, TOL)
        inits = [ScalarField.constant(dom, 0.0),
                 ScalarField(dom, np.array([rng.uniform(0, 2) for _ in range(dom.M)]))]
        for init in inits:
            other = solve_lane_emden(dom, 1.5, TOL, init=init)
            worst = max(worst, float(np.abs(other.values - ref.values).max() / ref.sup_norm))
    return worst <= 10 * TOL, worst


def property_perturbation(rng: XorShift64Star, n: int = 10) -> tuple[bool, float]:
    """Shifting the limit potential down by less than the margin keeps positivity."""
    dom = domain("disk", 2.0 ** -5)
    dn = density("disk", 2.0 ** -5, 1.0)
    V = hardy.limit_potential(dn)
    margin = constants.perturbation_margin(eigen("disk", 2.0 ** -5).eigenvalue, 2, 1.0)
    lowest = math.inf
    for k in range(n):
        scale = 0.9 * margin * (1.0 if k == 0 else rng.uniform())
        shift = np.array([scale * rng.uniform() for _ in range(dom.M)]) if k else scale
        lam = schrodinger_ground_state(dom, V.shifted_down(shift)).eigenvalue
        lowest = min(lowest, lam)
    return lowest > 0, lowest


def property_gsr() -> tuple[bool, dict]:
    # the residual is set by the sqrt-type singularity of W at depth 3h and
    # does not shrink with h; 5% is the stated interior tolerance
    d2 = hardy.ground_state_representation_check(density("disk", DISK_H, 1.0), 2.0)
    d1 = hardy.ground_state_representation_check(density("interval", INTERVAL_H, 1.0), 2.0)
    return d2.passed and d1.passed, {"disk": d2.residual, "interval": d1.residual}


def criterion_10(seed: int = 2024) -> CriterionResult:
    def run():
        rng = XorShift64Star(seed)
        parts = {
            "sbp": property_sbp(rng),
            "maximum_principle": property_max_principle(rng),
            "comparison": property_comparison(rng),
            "init_independence": property_init_independence(rng),
            "perturbation": property_perturbation(rng),
            "ground_state_representation": property_gsr(),
            "delta_argmin": (hardy.delta_argmin() == 2.0, hardy.delta_argmin()),
        }
        d = {k: {"passed": bool(ok), "value": v} for k, (ok, v) in parts.items()}
        return all(ok for ok, _ in parts.values()), d
    return _timed(10, "property suites", run, 1200.0)


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 11)}


def run_suite(numbers=None) -> list[CriterionResult]:
    numbers = sorted(CRITERIA) if not numbers else sorted(numbers)
    return [CRITERIA[n]() for n in numbers]


def summary_table(results) -> str:
    return "\n".join(r.line() for r in results) + (
        f"\n{sum(r.passed for r in results)}/{len(results)} criteria pass\n")
