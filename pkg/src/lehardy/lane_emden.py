"""Lane-Emden q-densities: the positive solutions of ``-Delta w = w^(q-1)``.

For ``q = 1`` the density is the torsion function and one linear solve
suffices. For ``1 < q < 2`` we run the Picard map
``u -> (-Delta_h)^(-1) max(u, 0)^(q-1)``, which is order preserving and
converges to the unique positive fixed point.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import GridMismatch, InvalidExponent, NoConvergence
from .grid import (
    GridDomain,
    ScalarField,
    ShapeSpec,
    build_domain,
    cg_solve,
    dirichlet_energy,
    jacobi_preconditioner,
)

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200
# inner CG solves cannot go much below this on fine 1D grids (kappa * eps)
INNER_TOL_FLOOR = 1e-11
# seed used when the caller hands in an identically zero start
_ZERO_INIT_SEED = 1e-6


def _check_q(q: float):
    if not (1.0 <= q < 2.0):
        raise InvalidExponent(f"q must lie in [1, 2), got {q}")


@dataclass(frozen=True, eq=False)
class LaneEmdenDensity:
    q: float
    field: ScalarField
    residual: float
    iterations: int
    energy: float
    tol: float = DEFAULT_TOL

    @property
    def domain(self) -> GridDomain:
        return self.field.domain

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    @property
    def sup_norm(self) -> float:
        return float(self.field.values.max())


def pde_residual(u: ScalarField, q: float) -> float:
    """``||-Delta_h u - u_+^(q-1)|| / ||u_+^(q-1)||`` (inf for the zero field)."""
    rhs = _power(u.values, q - 1.0)
    denom = np.linalg.norm(rhs)
    if denom == 0:
        return float("inf")
    return float(np.linalg.norm(u.domain.laplacian_matrix @ u.values - rhs) / denom)


def _power(values: np.ndarray, p: float) -> np.ndarray:
    pos = np.maximum(values, 0.0)
    if p == 0.0:
        return np.ones_like(pos)
    return pos ** p


def lane_emden_energy(u: ScalarField, q: float) -> float:
    """``0.5 * int |grad u|^2 - (1/q) int u_+^q`` on the grid."""
    _check_q(q)
    mass = u.domain.cell_volume * np.sum(np.maximum(u.values, 0.0) ** q)
    return 0.5 * dirichlet_energy(u) - mass / q


def solve_lane_emden(domain: GridDomain, q: float, tol: float = DEFAULT_TOL,
                     max_iter: int = DEFAULT_MAX_ITER,
                     init: Optional[ScalarField] = None) -> LaneEmdenDensity:
    """Compute the Lane-Emden q-density of ``domain``.

    Parameters
    ----------
    domain : GridDomain
    q : float
        Exponent in ``[1, 2)``.
    tol : float
        Target relative PDE residual.
    max_iter : int
        Picard step cap; the step is relaxed by 1/2 whenever the residual
        grows.
    init : ScalarField, optional
        Starting iterate, torsion function by default. Negative values are
        clipped; an identically zero start is replaced by a tiny constant.

    Raises
    ------
    InvalidExponent, NoConvergence
    """
    _check_q(q)
    if not tol > 0:
        raise ValueError("tol must be positive")
    A = domain.laplacian_matrix
    precond = jacobi_preconditioner(A)
    inner_tol = max(0.05 * tol, INNER_TOL_FLOOR)
    ones = np.ones(domain.M)

    if q == 1.0:
        w, _ = cg_solve(A, ones, inner_tol, preconditioner=precond)
        fld = ScalarField(domain, w)
        return LaneEmdenDensity(q, fld, pde_residual(fld, q), 1,
                                lane_emden_energy(fld, q), tol)

    if init is None:
        u, _ = cg_solve(A, ones, inner_tol, preconditioner=precond)
    else:
        if not init.domain.same_grid(domain):
            raise GridMismatch("init lives on another grid")
        u = np.maximum(init.values, 0.0)
        if not u.any():
            u = np.full(domain.M, _ZERO_INIT_SEED)

    res = pde_residual(ScalarField(domain, u), q)
    relax = 1.0
    for k in range(1, max_iter + 1):
        target, _ = cg_solve(A, _power(u, q - 1.0), inner_tol, x0=u, preconditioner=precond)
        cand = (1.0 - relax) * u + relax * target
        new_res = pde_residual(ScalarField(domain, cand), q)
        if new_res > res and relax > 0.25:
            relax *= 0.5
            log.debug("picard step %d: residual grew, relaxing to %.2f", k, relax)
        u, res = cand, new_res
        if res <= tol:
            fld = ScalarField(domain, u)
            return LaneEmdenDensity(q, fld, res, k, lane_emden_energy(fld, q), tol)
    raise NoConvergence(f"Picard iteration stalled at residual {res:.3e} after "
                        f"{max_iter} steps", last_residual=res, iterations=max_iter)


def lambda_2q_from_density(d: LaneEmdenDensity) -> float:
    """Poincare-Sobolev constant ``lambda_{2,q}`` read off the density."""
    mass = d.domain.cell_volume * np.sum(d.values ** d.q)
    return float(mass ** (-(2.0 - d.q) / d.q))


def scale_solution(u: ScalarField, t: float, q: float) -> ScalarField:
    """Map a solution of ``-Delta u = t u^(q-1)`` to one of ``-Delta v = v^(q-1)``."""
    _check_q(q)
    if not t > 0:
        raise ValueError("t must be positive")
    return u.with_values(t ** (1.0 / (q - 2.0)) * u.values)


@dataclass
class ComparisonReport:
    max_violation: float
    threshold: float
    shared_nodes: int

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.threshold


def comparison_check(d1: LaneEmdenDensity, d2: LaneEmdenDensity) -> ComparisonReport:
    """Check ``w1 <= w2`` for densities of nested sets on a common lattice."""
    a, b = d1.domain, d2.domain
    if not a.same_lattice(b):
        raise GridMismatch("densities are not on the same lattice")
    if d1.q != d2.q:
        raise GridMismatch("densities have different exponents")
    idx = b.index_of(a.lattice_index)
    if np.any(idx < 0):
        raise GridMismatch("first domain is not contained in the second")
    diff = d1.values - d2.values[idx]
    return ComparisonReport(float(diff.max()), 10.0 * (d1.tol + d2.tol), len(idx))


@dataclass
class ExhaustionRun:
    spec: ShapeSpec
    q: float
    radii: list
    densities: list
    window_lattice: np.ndarray = field(repr=False)
    increments: list
    center_values: list
    min_step: list

    @property
    def monotone(self) -> bool:
        return all(s >= -1e-8 for s in self.min_step)

    @property
    def final_increment(self) -> float:
        return self.increments[-1]


def _probe_window(spec: ShapeSpec, domain: GridDomain, r0: float) -> np.ndarray:
    """Lattice points of the first truncation within ``r0/2`` along the cut axes."""
    x = domain.coords
    if spec.kind == "slab":
        keep = np.all(np.abs(x[:, 1:]) <= 0.5 * r0 + 1e-12, axis=1)
    else:
        keep = np.abs(x[:, -1]) <= 0.5 * r0 + 1e-12
    return domain.lattice_index[keep]


def exhaust_density(spec: ShapeSpec, q: float, radii: Sequence[float], h: float,
                    tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> ExhaustionRun:
    """Densities of growing truncations of a slab or wave-guide.

    The truncations are the boxes ``Q_R`` (cross-section times ``(-R, R)``
    along every unbounded axis). Values are compared on a fixed window of
    the first truncation.
    """
    if spec.kind not in ("slab", "waveguide"):
        raise ValueError("exhaustion needs a slab or waveguide shape")
    radii = [float(r) for r in radii]
    if len(radii) < 3 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("need at least three strictly increasing radii")
    densities, increments, centers, steps = [], [], [], []
    window = None
    prev = None
    for R in radii:
        dom = build_domain(spec.truncated(R), h)
        d = solve_lane_emden(dom, q, tol, max_iter)
        if window is None:
            window = _probe_window(spec, dom, R)
        vals = d.values[dom.index_of(window)]
        c = dom.index_of(np.zeros((1, dom.N), dtype=np.int64))[0]
        centers.append(float(d.values[c]) if c >= 0 else float("nan"))
        if prev is not None:
            steps.append(float((vals - prev).min()))
            increments.append(float(np.abs(vals - prev).max()))
        densities.append(d)
        prev = vals
    return ExhaustionRun(spec, q, radii, densities, window, increments, centers, steps)
