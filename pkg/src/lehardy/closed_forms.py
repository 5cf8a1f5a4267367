"""Exact torsion functions and limit potentials for balls, slabs and
cylindrical wave-guides, used as oracles."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import GeometryMismatch
from .grid import GridDomain, ScalarField

CLOSED_FORMS = (
    "ball_torsion",
    "slab_torsion",
    "ellipsoid_torsion",
    "waveguide_density",
    "ball_limit_potential",
    "slab_limit_potential",
    "waveguide_limit_potential",
)


@dataclass(frozen=True)
class ClosedForm:
    """A named closed-form field.

    ``R`` is the ball radius for the ``ball_*`` forms and the ellipsoid's
    transverse semi-axis for ``ellipsoid_torsion``; the slab half-width and
    the wave-guide cross-section radius are 1.
    """

    name: str
    N: int
    R: float = 1.0

    def __post_init__(self):
        if self.name not in CLOSED_FORMS:
            raise ValueError(f"unknown closed form {self.name!r}")
        if self.name.startswith(("slab", "waveguide", "ellipsoid")) and self.N < 2:
            raise GeometryMismatch(f"{self.name} needs N >= 2")

    @property
    def is_potential(self) -> bool:
        return self.name.endswith("limit_potential")

    def torsion(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Torsion value and gradient (zero-extended) behind this form."""
        x = np.atleast_2d(x)
        N, R = self.N, self.R
        grad = np.zeros_like(x, dtype=float)
        if self.name.startswith("ball"):
            w = (R * R - np.sum(x * x, axis=1)) / (2 * N)
            grad = -x / N
        elif self.name.startswith("slab"):
            w = (1.0 - x[:, 0] ** 2) / 2
            grad[:, 0] = -x[:, 0]
        elif self.name.startswith("waveguide"):
            xp = x[:, :-1]
            w = (1.0 - np.sum(xp * xp, axis=1)) / (2 * (N - 1))
            grad[:, :-1] = -xp / (N - 1)
        else:
            c = R * R / (R * R + (N - 1))
            xp2 = np.sum(x[:, 1:] ** 2, axis=1)
            w = c * (1.0 - x[:, 0] ** 2 - xp2 / (R * R)) / 2
            grad[:, 0] = -c * x[:, 0]
            grad[:, 1:] = -c * x[:, 1:] / (R * R)
        inside = w > 0
        grad[~inside] = 0.0
        return np.where(inside, w, 0.0), grad

    def __call__(self, x: np.ndarray, floor: Optional[float] = None) -> np.ndarray:
        """Evaluate at points ``x`` of shape (K, N).

        For the limit potentials ``floor`` clamps the torsion in the
        denominator, mirroring the grid version; the default is no clamp.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.N:
            raise GeometryMismatch(f"{self.name} is {self.N}-dimensional")
        w, grad = self.torsion(x)
        if not self.is_potential:
            return w
        g2 = np.sum(grad * grad, axis=1)
        if floor is None:
            with np.errstate(divide="ignore", invalid="ignore"):
                v = np.where(w > 0, -0.25 * g2 / np.where(w > 0, w, 1.0) ** 2, 0.0)
            return v
        return np.where(w > 0, -0.25 * g2 / np.maximum(w, floor) ** 2, 0.0)


def _compatible(cf: ClosedForm, domain: GridDomain) -> bool:
    s = domain.shape
    if s.dim != cf.N:
        return False
    if cf.name.startswith("ball"):
        if s.kind != "ball":
            return False
        (c, r), = s.balls
        return np.allclose(c, 0.0) and np.isclose(r, cf.R)
    if cf.name.startswith("slab") or cf.name == "ellipsoid_torsion":
        return s.kind == "slab" and np.isclose(s.half_width, 1.0)
    cs = s.cross_section
    return (s.kind == "waveguide" and cs.kind == "ball"
            and np.allclose(cs.balls[0][0], 0.0) and np.isclose(cs.balls[0][1], 1.0))


def sample(cf: ClosedForm, domain: GridDomain, floor: Optional[float] = None) -> ScalarField:
    """Evaluate ``cf`` at every interior node of a compatible domain."""
    if not _compatible(cf, domain):
        raise GeometryMismatch(f"{cf.name} does not describe {domain.shape.kind} domains")
    return ScalarField(domain, cf(domain.coords, floor=floor))


@dataclass
class ErrorReport:
    max_abs: float
    max_rel: float
    l2_rel: float
    nodes: int


def compare(numeric: ScalarField, cf: ClosedForm,
            window: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> ErrorReport:
    """Errors of ``numeric`` against ``cf`` on the nodes selected by ``window``.

    ``window`` maps an (M, N) coordinate array to a boolean mask. Relative
    errors are normalized by the largest exact value on the window.
    """
    x = numeric.domain.coords
    if x.shape[1] != cf.N:
        raise GeometryMismatch(f"{cf.name} is {cf.N}-dimensional")
    keep = np.ones(len(x), dtype=bool) if window is None else np.asarray(window(x), dtype=bool)
    if not keep.any():
        raise GeometryMismatch("comparison window selects no node")
    exact = cf(x[keep])
    diff = numeric.values[keep] - exact
    scale = np.abs(exact).max()
    scale = scale if scale > 0 else 1.0
    l2 = np.linalg.norm(exact)
    return ErrorReport(
        max_abs=float(np.abs(diff).max()),
        max_rel=float(np.abs(diff).max() / scale),
        l2_rel=float(np.linalg.norm(diff) / (l2 if l2 > 0 else 1.0)),
        nodes=int(keep.sum()),
    )
