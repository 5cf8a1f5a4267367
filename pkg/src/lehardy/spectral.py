"""Bottom of the spectrum of ``-Delta_h`` and ``-Delta_h + V``, and the
nonlinear Poincare-Sobolev constants ``lambda_{2,gamma}``."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DomainMismatch, InvalidExponent, NoConvergence, ZeroField
from .grid import (
    GridDomain,
    ScalarField,
    cg_solve,
    dirichlet_energy,
    jacobi_preconditioner,
    l2_inner,
)

log = logging.getLogger(__name__)

# above this many unknowns the factorizations get too large; CG takes over
LU_LIMIT = 400_000


@dataclass(frozen=True, eq=False)
class SpectralResult:
    eigenvalue: float
    eigenfunction: ScalarField
    residual: float
    iterations: int
    shift: float = 0.0

    def to_dict(self) -> dict:
        return {"eigenvalue": self.eigenvalue, "residual": self.residual,
                "iterations": self.iterations, "shift": self.shift}


@dataclass(frozen=True, eq=False)
class Potential:
    """A nonpositive potential sampled on the grid."""

    field: ScalarField
    provenance: str = "array"

    def __post_init__(self):
        if np.any(self.field.values > 0):
            raise ValueError("potential must be nonpositive")

    @property
    def domain(self) -> GridDomain:
        return self.field.domain

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    @classmethod
    def zero(cls, domain: GridDomain) -> "Potential":
        return cls(ScalarField.constant(domain, 0.0), "zero")

    def scaled(self, c: float) -> "Potential":
        return Potential(self.field.with_values(c * self.values), f"{c:g}*{self.provenance}")

    def shifted_down(self, h: np.ndarray | float) -> "Potential":
        """``V - h`` for a nonnegative bounded ``h``."""
        h = np.broadcast_to(np.asarray(h, dtype=float), self.values.shape)
        if np.any(h < 0):
            raise ValueError("downward shift must be nonnegative")
        return Potential(self.field.with_values(self.values - h), f"{self.provenance}-h")


def _l2_normalize(x: np.ndarray, cell: float) -> np.ndarray:
    return x / np.sqrt(cell * np.dot(x, x))


def _result(H, x, cell, iterations, shift, domain) -> SpectralResult:
    x = _l2_normalize(x, cell)
    if x.sum() < 0:
        x = -x
    Hx = H @ x
    lam = cell * np.dot(x, Hx)
    res = np.sqrt(cell * np.sum((Hx - lam * x) ** 2))
    return SpectralResult(float(lam), ScalarField(domain, x), float(res), iterations, shift)


def _lanczos_ground(H, sigma: float, lu, tol: float, v0: np.ndarray):
    """Eigenvector of ``H`` nearest ``sigma`` by shift-invert Lanczos.

    Returns the vector and the number of factorized solves used.
    """
    count = [0]

    def solve(b):
        count[0] += 1
        return lu.solve(np.ascontiguousarray(b, dtype=float).ravel())

    op = spla.LinearOperator(H.shape, matvec=solve, dtype=float)
    _, vecs = spla.eigsh(H, k=1, sigma=sigma, which="LM", OPinv=op, tol=tol, v0=v0)
    return vecs[:, 0], count[0]


def principal_eigenvalue(domain: GridDomain, tol: float = 1e-10,
                         max_iter: int = 500) -> SpectralResult:
    """Smallest eigenvalue of ``-Delta_h``.

    Up to ``LU_LIMIT`` unknowns this is shift-invert Lanczos around 0 on a
    sparse LU factorization; the gap between the first two eigenvalues can
    be tiny on elongated domains, where plain inverse iteration crawls.
    Larger grids use inverse power iteration with Jacobi-preconditioned CG
    solves, stopped once the Rayleigh quotient changes by less than ``tol``
    (relative) and the eigen-residual is below ``sqrt(tol) * lambda``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    A = domain.laplacian_matrix
    cell = domain.cell_volume
    if domain.M <= LU_LIMIT:
        lu = spla.splu(A.tocsc())
        x, solves = _lanczos_ground(A, 0.0, lu, tol, np.ones(domain.M))
        return _result(A, x, cell, solves, 0.0, domain)
    precond = jacobi_preconditioner(A)
    inner = min(1e-6, 0.01 * tol)
    x = _l2_normalize(np.ones(domain.M), cell)
    lam = cell * np.dot(x, A @ x)
    for k in range(1, max_iter + 1):
        y, _ = cg_solve(A, x, inner, x0=x / lam, preconditioner=precond)
        x = _l2_normalize(y, cell)
        Ax = A @ x
        new = cell * np.dot(x, Ax)
        res = np.sqrt(cell * np.sum((Ax - new * x) ** 2))
        done = abs(new - lam) <= tol * abs(new) and res <= np.sqrt(tol) * abs(new)
        lam = new
        if done:
            return _result(A, x, cell, k, 0.0, domain)
    raise NoConvergence(f"inverse iteration did not settle in {max_iter} steps",
                        last_residual=res, iterations=max_iter)


def _negative_pivots(K: sp.spmatrix):
    """Factor symmetric ``K`` without numerical pivoting.

    Returns ``(lu, count)`` where ``count`` is the number of negative
    eigenvalues of ``K`` by Sylvester's law of inertia, or ``None`` when
    the factorization was not a symmetric one.
    """
    try:
        lu = spla.splu(K.tocsc(), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                       options={"SymmetricMode": True})
    except RuntimeError:
        return None, None
    if not np.array_equal(lu.perm_r, lu.perm_c):
        return lu, None
    return lu, int(np.sum(lu.U.diagonal() < 0))


def certified_shift(H: sp.spmatrix, upper: float, floor: float):
    """Find ``sigma < lambda_1(H)`` and the factorization of ``H - sigma``.

    Starting half a unit of ``|upper|`` below the Rayleigh-quotient upper
    bound, the gap doubles until the factorization shows no negative pivot.
    ``floor`` is a shift known to be safe and is the last resort.
    """
    I = sp.identity(H.shape[0], format="csr")
    gap = 0.5 * max(1.0, abs(upper))
    while upper - gap > floor:
        sigma = upper - gap
        lu, neg = _negative_pivots(H - sigma * I)
        if neg == 0:
            return sigma, lu
        gap *= 2.0
    return floor, spla.splu((H - floor * I).tocsc())


def schrodinger_ground_state(domain: GridDomain, V: Potential, tol: float = 1e-10,
                             max_iter: int = 2000) -> SpectralResult:
    """Smallest eigenvalue of ``-Delta_h + diag(V)`` by shift-invert Lanczos.

    The shift is certified to lie below the ground state (see
    ``certified_shift``), so the eigenvalue nearest to it is the smallest;
    ``min(V) - 1`` always qualifies and is the fallback. When the fallback
    is used the Lanczos step is replaced by plain shifted inverse iteration.
    """
    if not V.domain.same_grid(domain):
        raise DomainMismatch("potential lives on another grid")
    if not tol > 0:
        raise ValueError("tol must be positive")
    A = domain.laplacian_matrix
    H = (A + sp.diags(V.values)).tocsr()
    cell = domain.cell_volume
    x, _ = cg_solve(A, np.ones(domain.M), 1e-8, preconditioner=jacobi_preconditioner(A))
    x = _l2_normalize(x, cell)
    lam = cell * np.dot(x, H @ x)
    floor = float(V.values.min()) - 1.0
    sigma, lu = certified_shift(H, lam, floor)
    if sigma > floor:
        x, solves = _lanczos_ground(H, sigma, lu, tol, x)
        return _result(H, x, cell, solves, sigma, domain)
    for k in range(1, max_iter + 1):
        x = _l2_normalize(lu.solve(x), cell)
        Hx = H @ x
        new = cell * np.dot(x, Hx)
        res = np.sqrt(cell * np.sum((Hx - new * x) ** 2))
        scale = max(abs(new), 1.0)
        done = abs(new - lam) <= tol * scale and res <= np.sqrt(tol) * scale
        lam = new
        if done:
            return _result(H, x, cell, k, sigma, domain)
    raise NoConvergence(f"shifted inverse iteration did not settle in {max_iter} steps",
                        last_residual=res, iterations=max_iter)


def rayleigh_quotient(u: ScalarField, V: Optional[Potential] = None) -> float:
    """``(int |grad u|^2 + int V u^2) / int u^2``."""
    mass = l2_inner(u, u)
    if mass == 0:
        raise ZeroField("Rayleigh quotient of the zero field")
    num = dirichlet_energy(u)
    if V is not None:
        if not V.domain.same_grid(u.domain):
            raise DomainMismatch("potential lives on another grid")
        num += u.domain.cell_volume * np.dot(V.values, u.values ** 2)
    return float(num / mass)


def _check_gamma(gamma: float, N: int):
    if gamma < 1:
        raise InvalidExponent(f"gamma must be >= 1, got {gamma}")
    if N >= 3 and gamma >= 2 * N / (N - 2):
        raise InvalidExponent(f"gamma must stay below the Sobolev exponent {2 * N / (N - 2):g}")


def lambda_2gamma(domain: GridDomain, gamma: float, tol: float = 1e-8,
                  max_iter: int = 500, init: Optional[ScalarField] = None) -> float:
    """Minimize ``int |grad u|^2 / ||u||_gamma^2`` over grid functions.

    Projected gradient descent in the energy inner product: the direction is
    ``R * (-Delta_h)^(-1) u^(gamma-1) - u`` for ``||u||_gamma = 1``, the step
    is Armijo-backtracked from 1, and every iterate is replaced by its
    absolute value and renormalized. Starts from the principal
    eigenfunction unless ``init`` is given.
    """
    _check_gamma(gamma, domain.N)
    if not tol > 0:
        raise ValueError("tol must be positive")
    A = domain.laplacian_matrix
    cell = domain.cell_volume
    precond = jacobi_preconditioner(A)

    def normalize(u):
        u = np.abs(u)
        return u / (cell * np.sum(u ** gamma)) ** (1.0 / gamma)

    def ratio(u):
        return cell * np.dot(u, A @ u)  # ||u||_gamma = 1 after normalize

    if init is None:
        u = principal_eigenvalue(domain, tol=1e-8).eigenfunction.values
    else:
        u = init.values
    u = normalize(u)
    R = ratio(u)
    quiet = 0
    for _ in range(max_iter):
        solve, _ = cg_solve(A, u ** (gamma - 1.0), min(1e-10, 0.01 * tol), preconditioner=precond)
        d = R * solve - u
        slope = -2.0 * cell * np.dot(d, A @ d)
        if slope == 0.0:
            return float(R)
        t = 1.0
        while True:
            cand = normalize(u + t * d)
            Rc = ratio(cand)
            if Rc <= R + 1e-4 * t * slope or t < 1e-10:
                break
            t *= 0.5
        change = abs(R - Rc) / R
        if Rc <= R:
            u, R = cand, Rc
        quiet = quiet + 1 if change < tol else 0
        if quiet >= 10:
            return float(R)
    raise NoConvergence(f"lambda_2,{gamma:g} descent did not settle in {max_iter} steps",
                        last_residual=change, iterations=max_iter)
