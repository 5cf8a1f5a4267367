"""Explicit constants of the local L^infinity estimate for Lane-Emden
densities: ball volume, the sharp Sobolev constant and the Moser-iteration
constant, plus the lower bounds built from them."""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Optional

from .errors import InvalidDimension, InvalidExponent, MissingGamma

DEFAULT_GAMMA = 4.0
# resolution of the unit-disk lambda_{2,gamma} solve behind the N=2 constant
BALL_GAMMA_H = 2.0 ** -7


def unit_ball_volume(N: int) -> float:
    return math.pi ** (N / 2) / math.gamma(N / 2 + 1)


def talenti_constant(N: int) -> float:
    """Sharp constant of the Sobolev inequality in R^N, N >= 3."""
    if N < 3:
        raise InvalidDimension(f"the Sobolev constant needs N >= 3, got {N}")
    return math.pi * N * (N - 2) * (math.gamma(N / 2) / math.gamma(N)) ** (2 / N)


@lru_cache(maxsize=None)
def ball_lambda_2gamma(gamma: float, h: float = BALL_GAMMA_H) -> float:
    """``lambda_{2,gamma}`` of the unit disk, computed once per process."""
    from .grid import ShapeSpec, build_domain
    from .spectral import lambda_2gamma

    return lambda_2gamma(build_domain(ShapeSpec.ball((0.0, 0.0), 1.0), h), gamma)


def moser_constant(N: int, q: float = 1.0, gamma: Optional[float] = DEFAULT_GAMMA,
                   lambda_ball: Optional[float] = None) -> float:
    """Constant in the local sup bound for subsolutions of Lane-Emden.

    The value does not depend on ``q``; it is validated only. For ``N = 2``
    the formula needs ``lambda_{2,gamma}`` of the unit disk with
    ``gamma > 2``; pass ``lambda_ball`` to skip the numerical solve.
    """
    if not (1.0 <= q < 2.0):
        raise InvalidExponent(f"q must lie in [1, 2), got {q}")
    if N == 1:
        return 8.0 * math.sqrt(5.0)
    if N == 2:
        if gamma is None:
            raise MissingGamma("the planar constant needs an exponent gamma > 2")
        if not gamma > 2:
            raise InvalidExponent(f"gamma must exceed 2, got {gamma}")
        lam = ball_lambda_2gamma(float(gamma)) if lambda_ball is None else lambda_ball
        return (math.sqrt(math.pi) * (2 * gamma) ** (gamma / (gamma - 2) ** 2)
                * (640.0 / lam) ** (gamma / (2 * (gamma - 2))))
    if N >= 3:
        return (math.sqrt(unit_ball_volume(N)) * (4 * N / (N - 2)) ** (N * (N - 2) / 8)
                * (640.0 * talenti_constant(N)) ** (N / 4))
    raise InvalidDimension(f"dimension must be positive, got {N}")


def _chain_factor(N: int, q: float, C: float) -> float:
    return 2.0 ** N * C * C * ((2.0 * C) ** (2.0 - q) + 4.0)


def corollary_bound(lambda1: float, N: int, q: float, C: Optional[float] = None) -> float:
    """Fully explicit lower bound on the ground state in terms of ``lambda_1``."""
    if lambda1 < 0:
        raise ValueError("lambda1 must be nonnegative")
    C = moser_constant(N, q) if C is None else C
    return 0.5 * lambda1 / _chain_factor(N, q, C)


def perturbation_margin(lambda1: float, N: int, q: float, C: Optional[float] = None) -> float:
    """Largest downward shift of the potential that keeps the spectrum positive."""
    return corollary_bound(lambda1, N, q, C)


def dorin_upper_factor(N: int, q: float, C: Optional[float] = None) -> float:
    """Factor ``K`` in ``||w||_inf <= K * lambda_1^(1/(q-2))``."""
    C = moser_constant(N, q) if C is None else C
    return _chain_factor(N, q, C) ** (1.0 / (2.0 - q))
