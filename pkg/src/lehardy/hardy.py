"""Hardy-Lane-Emden weights, the inequality checks built on Lane-Emden
densities, and ground-state bound certificates for ``-Delta + V``."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import constants
from .corpus import standard_corpus, support_mask
from .errors import (
    BallNotContained,
    DomainMismatch,
    InvalidExponent,
    LEHardyError,
)
from .grid import (
    GridDomain,
    ScalarField,
    default_floor,
    dirichlet_energy,
    gradient_norm_squared_field,
)
from .lane_emden import DEFAULT_TOL, LaneEmdenDensity, solve_lane_emden
from .spectral import Potential, principal_eigenvalue, schrodinger_ground_state

log = logging.getLogger(__name__)

DEFAULT_SWEEP = (0.5, 1.0, 2.0, 4.0)
SLACK_PER_H = 5.0
BILAT_SLACK = 0.02
GSR_TOLERANCE = 0.05
GSR_DEPTH = 3
ADMISSIBLE_EPS = 1e-12
SCHEMA_VERSION = "1"


def _floor(d: LaneEmdenDensity, floor: Optional[float]) -> float:
    floor = default_floor(d.domain.h) if floor is None else floor
    if not floor > 0:
        raise ValueError("floor must be positive")
    return floor


@dataclass(frozen=True, eq=False)
class HardyWeight:
    delta: float
    grad_term: ScalarField
    density_term: ScalarField
    floor: float

    @property
    def values(self) -> np.ndarray:
        return self.grad_term.values + self.density_term.values


def hardy_weight(d: LaneEmdenDensity, delta: float, floor: Optional[float] = None) -> HardyWeight:
    """``(1/delta)(1 - 1/delta)|grad w/w|^2`` and ``(1/delta) w^(q-2)`` per node.

    Both ``w`` in the denominators are clamped below by ``floor``.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    floor = _floor(d, floor)
    g = gradient_norm_squared_field(d.field, floor).values
    inv = 1.0 / delta
    grad = inv * (1.0 - inv) * g
    dens = inv * np.maximum(d.values, floor) ** (d.q - 2.0)
    return HardyWeight(delta, d.field.with_values(grad), d.field.with_values(dens), floor)


@dataclass
class HardyCheck:
    delta: float
    test_id: str
    lhs: float
    rhs: float
    margin: float
    passed: bool


def check_hardy(d: LaneEmdenDensity, delta: float, tests, floor: Optional[float] = None,
                weight: Optional[HardyWeight] = None) -> list[HardyCheck]:
    """Quadratic-form check of the Hardy-Lane-Emden inequality.

    ``tests`` holds ``ScalarField``s or ``(id, ScalarField)`` pairs. Each
    must vanish within ``2h`` of the boundary. A check passes when
    ``RHS - LHS >= -5 h RHS``.
    """
    if weight is None:
        weight = hardy_weight(d, delta, floor)
    wv = weight.values
    dom = d.domain
    inside = support_mask(dom)
    cell = dom.cell_volume
    out = []
    for k, item in enumerate(tests):
        tid, phi = item if isinstance(item, tuple) else (f"test-{k:02d}", item)
        if not phi.domain.same_grid(dom):
            raise DomainMismatch(f"test field {tid} lives on another grid")
        if np.any(phi.values[~inside] != 0):
            raise ValueError(f"test field {tid} does not vanish within 2h of the boundary")
        lhs = float(cell * np.dot(wv, phi.values ** 2))
        rhs = float(dirichlet_energy(phi))
        margin = rhs - lhs
        out.append(HardyCheck(delta, tid, lhs, rhs, margin,
                              bool(margin >= -SLACK_PER_H * dom.h * rhs)))
    return out


def delta_argmin(sweep: Sequence[float] = DEFAULT_SWEEP) -> float:
    """Sweep value minimizing the gradient coefficient ``(1/delta)(1/delta - 1)``."""
    coef = [(1 / t) * (1 / t - 1) for t in sweep]
    return float(sweep[int(np.argmin(coef))])


def limit_potential(d: LaneEmdenDensity, floor: Optional[float] = None) -> Potential:
    """``-1/4 |grad w / w|^2`` with the clamp ``floor``."""
    g = gradient_norm_squared_field(d.field, _floor(d, floor))
    return Potential(g.with_values(-0.25 * g.values), "limit")


@dataclass
class AdmissibilityReport:
    fraction: float
    worst_index: int
    worst_violation: float
    worst_point: list

    @property
    def admissible(self) -> bool:
        return self.fraction == 1.0


def check_admissible(V: Potential, d: LaneEmdenDensity,
                     floor: Optional[float] = None) -> AdmissibilityReport:
    """Fraction of nodes with ``0 >= V >= -1/4 |grad w/w|^2``; worst node reported."""
    if not V.domain.same_grid(d.domain):
        raise DomainMismatch("potential and density live on different grids")
    lower = limit_potential(d, floor).values
    viol = np.maximum(lower - ADMISSIBLE_EPS - V.values, 0.0) + np.maximum(V.values, 0.0)
    i = int(np.argmax(viol))
    return AdmissibilityReport(float(np.mean(viol == 0)), i, float(viol[i]),
                               d.domain.coords[i].tolist())


def theorem_bound(d: LaneEmdenDensity) -> float:
    return 0.5 * d.sup_norm ** (d.q - 2.0)


@dataclass
class SideReport:
    value: float
    bound: float
    passed: bool


@dataclass
class DorinReport:
    sup_norm: float
    lower: SideReport
    upper: SideReport
    looseness: float

    @property
    def passed(self) -> bool:
        return self.lower.passed and self.upper.passed


def check_dorin(d: LaneEmdenDensity, lambda1: float, N: Optional[int] = None,
                C: Optional[float] = None) -> DorinReport:
    """Two-sided estimate of ``||w||_inf`` by ``lambda_1^(1/(q-2))``.

    ``looseness`` is upper bound over ``||w||_inf``.
    """
    N = d.domain.N if N is None else N
    slack = SLACK_PER_H * d.domain.h
    base = lambda1 ** (1.0 / (d.q - 2.0))
    upper = constants.dorin_upper_factor(N, d.q, C) * base
    s = d.sup_norm
    return DorinReport(
        s,
        SideReport(base, s, base <= s * (1 + slack)),
        SideReport(s, upper, s <= upper * (1 + slack)),
        upper / s,
    )


@dataclass
class BilatReport:
    middle: float
    lower: float
    upper: float
    lower_ok: bool
    upper_ok: bool

    @property
    def passed(self) -> bool:
        return self.lower_ok and self.upper_ok


def bilat_upper_constant(q: float, gamma: float) -> float:
    return (2 - gamma) / (gamma - 2 * (q - 1)) * ((2 - q) / (2 - gamma)) ** 2


def check_bilat(d: LaneEmdenDensity, gamma: float, lambda_2gamma_val: float) -> BilatReport:
    """Double-sided bound on ``lambda_{2,gamma}`` through a power integral of ``w``."""
    q = d.q
    if gamma < q or gamma >= 2:
        raise InvalidExponent(f"need q <= gamma < 2, got q={q}, gamma={gamma}")
    p = (2 - q) * gamma / (2 - gamma)
    integral = d.domain.cell_volume * np.sum(d.values ** p)
    middle = float(lambda_2gamma_val * integral ** ((2 - gamma) / gamma))
    up = bilat_upper_constant(q, gamma)
    return BilatReport(middle, 1.0, up, middle >= 1.0 - BILAT_SLACK,
                       middle <= up * (1 + BILAT_SLACK))


@dataclass
class LinftyReport:
    lhs: float
    rhs: float
    mean_term: float
    source_term: float
    constant: float
    looseness: float
    passed: bool


def _sphere_points(N: int) -> np.ndarray:
    if N == 1:
        return np.array([[-1.0], [1.0]])
    if N == 2:
        t = np.linspace(0, 2 * np.pi, 256, endpoint=False)
        return np.column_stack([np.cos(t), np.sin(t)])
    # Fibonacci points on the sphere, padded with zeros beyond N=3
    k = np.arange(512) + 0.5
    z = 1 - 2 * k / 512
    phi = np.pi * (3 - np.sqrt(5)) * k
    r = np.sqrt(1 - z * z)
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return np.hstack([pts, np.zeros((len(pts), N - 3))]) if N > 3 else pts


def check_linfty_estimate(d: LaneEmdenDensity, center, R0: float, alpha: float = 2.0,
                          C: Optional[float] = None, lam: float = 1.0) -> LinftyReport:
    """Local sup bound on ``B_{R0/2}`` by an ``L^alpha`` average over ``B_{R0}``."""
    if alpha < 2:
        raise ValueError("alpha must be at least 2")
    dom = d.domain
    center = np.asarray(center, dtype=float).reshape(-1)
    if center.shape != (dom.N,) or not R0 > 0:
        raise ValueError("bad ball")
    shell = center + R0 * _sphere_points(dom.N)
    if not dom.shape.contains(center[None, :]).all() or not dom.shape.contains(shell).all():
        raise BallNotContained(f"B({center.tolist()}, {R0}) leaves the domain")
    lo = np.floor((center - R0) / dom.h).astype(int)
    hi = np.ceil((center + R0) / dom.h).astype(int)
    axes = np.meshgrid(*[np.arange(a, b + 1) for a, b in zip(lo, hi)], indexing="ij")
    lat = np.stack([a.ravel() for a in axes], axis=1)
    r = np.linalg.norm(lat * dom.h - center, axis=1)
    big = lat[r < R0]
    idx = dom.index_of(big)
    if np.any(idx < 0):
        raise BallNotContained("ball contains exterior grid nodes")
    small = idx[r[r < R0] < 0.5 * R0]
    if small.size == 0:
        raise BallNotContained("no grid node in the half ball")
    C = constants.moser_constant(dom.N, d.q) if C is None else C
    lhs = float(d.values[small].max())
    mean = float(np.mean(d.values[idx] ** alpha) ** (1 / alpha))
    source = (lam / 4) ** (1 / (2 - d.q)) * R0 ** (2 / (2 - d.q))
    rhs = C * (mean + source)
    return LinftyReport(lhs, rhs, mean, source, C, rhs / lhs if lhs > 0 else math.inf, lhs <= rhs)


@dataclass
class RepresentationReport:
    delta: float
    residual: float
    nodes: int
    passed: bool


def ground_state_representation_check(d: LaneEmdenDensity, delta: float,
                                      floor: Optional[float] = None) -> RepresentationReport:
    """Relative residual of ``-Delta W = W * weight`` for ``W = w^(1/delta)``.

    Evaluated on nodes at least ``3h`` from the exterior.
    """
    weight = hardy_weight(d, delta, floor)
    dom = d.domain
    W = np.maximum(d.values, 0.0) ** (1.0 / delta)
    keep = support_mask(dom, GSR_DEPTH)
    lhs = (dom.laplacian_matrix @ W)[keep]
    rhs = (W * weight.values)[keep]
    res = float(np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs))
    return RepresentationReport(delta, res, int(keep.sum()), res <= GSR_TOLERANCE)


VERDICTS = ("PASS", "FAIL(ADMISSIBILITY)", "FAIL(HARDY)", "FAIL(BOUND)",
            "FAIL(ORDERING)", "INCOMPLETE")


@dataclass
class BoundCertificate:
    q: float
    N: int
    shape: dict
    h: float
    delta_sweep: list
    slack: float
    lambda1: Optional[float] = None
    sup_norm: Optional[float] = None
    hardy_checks: list = field(default_factory=list)
    admissibility: Optional[float] = None
    worst_violation: Optional[float] = None
    theorem_bound: Optional[float] = None
    moser_constant: Optional[float] = None
    corollary_bound: Optional[float] = None
    lambda1_V: Optional[float] = None
    verdict: str = "INCOMPLETE"
    errors: list = field(default_factory=list)

    @property
    def positivity_claimed(self) -> bool:
        return self.verdict == "PASS"

    def to_dict(self) -> dict:
        out = {"schema_version": SCHEMA_VERSION}
        out.update(asdict(self))
        out["positivity_claimed"] = self.positivity_claimed
        return out


PotentialSource = Union[Potential, Callable[[LaneEmdenDensity], Potential], None]


def _verdict(c: BoundCertificate) -> str:
    if c.admissibility < 1.0:
        return "FAIL(ADMISSIBILITY)"
    if not all(k.passed for k in c.hardy_checks):
        return "FAIL(HARDY)"
    if c.lambda1_V < c.theorem_bound - c.slack:
        return "FAIL(BOUND)"
    if c.corollary_bound > c.theorem_bound:
        return "FAIL(ORDERING)"
    return "PASS"


def certify(domain: GridDomain, q: float, V: PotentialSource = None,
            delta_sweep: Sequence[float] = DEFAULT_SWEEP, test_functions=None,
            tol: float = DEFAULT_TOL, eig_tol: float = 1e-10,
            floor: Optional[float] = None, seed: int = 0,
            moser: Optional[float] = None,
            density: Optional[LaneEmdenDensity] = None) -> BoundCertificate:
    """Assemble a lower-bound certificate for ``lambda_1(Omega; V)``.

    Parameters
    ----------
    V : Potential or callable, optional
        The potential, or a function of the computed density returning it.
        Defaults to the limit potential of the density.
    test_functions : list, optional
        ``(id, ScalarField)`` pairs; the standard corpus when omitted.
    moser : float, optional
        Precomputed Moser constant; computed from ``N`` and ``q`` otherwise.
    density : LaneEmdenDensity, optional
        Density already solved on ``domain`` with exponent ``q``.

    The slack is ``5h``. Any failing sub-step yields an INCOMPLETE
    certificate holding whatever was computed before it.
    """
    cert = BoundCertificate(q=q, N=domain.N, shape=domain.shape.to_dict(), h=domain.h,
                            delta_sweep=[float(t) for t in delta_sweep],
                            slack=SLACK_PER_H * domain.h)
    try:
        if density is None:
            d = solve_lane_emden(domain, q, tol)
        elif density.q != q or not density.domain.same_grid(domain):
            raise DomainMismatch("supplied density does not match domain and q")
        else:
            d = density
        cert.sup_norm = d.sup_norm
        cert.theorem_bound = theorem_bound(d)
        eig = principal_eigenvalue(domain, eig_tol)
        cert.lambda1 = eig.eigenvalue
        if V is None:
            pot = limit_potential(d, floor)
        elif isinstance(V, Potential):
            pot = V
        else:
            pot = V(d)
        adm = check_admissible(pot, d, floor)
        cert.admissibility, cert.worst_violation = adm.fraction, adm.worst_violation
        tests = test_functions
        if tests is None:
            tests = standard_corpus(domain, seed, density=d.field, eigenfunction=eig.eigenfunction)

        def sweep():
            return [c for t in delta_sweep for c in check_hardy(d, t, tests, floor)]

        with ThreadPoolExecutor(max_workers=2) as pool:
            ground = pool.submit(schrodinger_ground_state, domain, pot, eig_tol)
            checks = pool.submit(sweep)
            cert.hardy_checks = checks.result()
            cert.lambda1_V = ground.result().eigenvalue
        cert.moser_constant = constants.moser_constant(domain.N, q) if moser is None else moser
        cert.corollary_bound = constants.corollary_bound(cert.lambda1, domain.N, q,
                                                         cert.moser_constant)
    except (LEHardyError, ValueError) as exc:
        log.warning("certificate incomplete: %s", exc)
        cert.errors.append(f"{type(exc).__name__}: {exc}")
        cert.verdict = "INCOMPLETE"
        return cert
    cert.verdict = _verdict(cert)
    return cert
