"""Reproducible test-field corpora for the quadratic-form checks.

Random fields are drawn from xorshift64*: state ``x`` (a nonzero unsigned
64-bit integer) is updated by ``x ^= x >> 12; x ^= x << 25; x ^= x >> 27``
and the output is ``x * 0x2545F4914F6CDD1D mod 2^64``. A uniform float in
``[0, 1)`` is the top 53 bits of the output times ``2^-53``. Seed 0 is
mapped to ``0x9E3779B97F4A7C15``. Any implementation following these lines
reproduces the same corpus.
"""

from __future__ import annotations

import numpy as np

from .grid import GridDomain, ScalarField

_MASK = (1 << 64) - 1
_MULT = 0x2545F4914F6CDD1D
_ZERO_SEED = 0x9E3779B97F4A7C15
# test supports stay this many spacings away from the exterior nodes
SUPPORT_DEPTH = 2
N_RANDOM = 20
BUMPS_PER_FIELD = 3


class XorShift64Star:
    def __init__(self, seed: int):
        seed = int(seed) & _MASK
        self.state = seed if seed else _ZERO_SEED

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK
        x ^= x >> 27
        self.state = x
        return (x * _MULT) & _MASK

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        return low + (high - low) * (self.next_u64() >> 11) * 2.0 ** -53


def support_mask(domain: GridDomain, depth: int = SUPPORT_DEPTH) -> np.ndarray:
    """Nodes at distance at least ``depth * h`` from every exterior node."""
    return domain.boundary_distance >= depth * domain.h * (1 - 1e-9)


def _cutoff(domain: GridDomain) -> np.ndarray:
    """Smooth ramp from 0 at ``2h`` depth to 1 a tenth of the width further in."""
    h = domain.h
    ramp = max(0.1 * domain.shape.min_width(), 2 * h)
    t = np.clip((domain.boundary_distance - SUPPORT_DEPTH * h) / ramp, 0.0, 1.0)
    return np.where(support_mask(domain), t * t * (3 - 2 * t), 0.0)


def restrict_support(u: ScalarField) -> ScalarField:
    """Zero ``u`` on the boundary layer of width ``2h``."""
    return u.with_values(np.where(support_mask(u.domain), u.values, 0.0))


def random_smooth_fields(domain: GridDomain, n: int = N_RANDOM, seed: int = 0):
    """``n`` sums of Gaussian bumps times a plane wave, cut off near the boundary."""
    rng = XorShift64Star(seed)
    lo, hi = domain.shape.bounding_box()
    width = domain.shape.min_width()
    x = domain.coords
    cut = _cutoff(domain)
    out = []
    for i in range(n):
        vals = np.zeros(domain.M)
        for _ in range(BUMPS_PER_FIELD):
            c = np.array([rng.uniform(a, b) for a, b in zip(lo, hi)])
            s = rng.uniform(0.1, 0.5) * width
            amp = rng.uniform(-1.0, 1.0)
            vals += amp * np.exp(-np.sum((x - c) ** 2, axis=1) / (2 * s * s))
        k = np.array([rng.uniform(-1.0, 1.0) for _ in range(domain.N)]) * 2 * np.pi / width
        vals *= 1.0 + 0.5 * np.cos(x @ k + rng.uniform(0.0, 2 * np.pi))
        out.append((f"rand-{i:02d}", ScalarField(domain, vals * cut)))
    return out


def tensor_bumps(domain: GridDomain):
    """Products of one-dimensional quartic bumps, centred and off-centre."""
    lo, hi = domain.shape.bounding_box()
    mid = 0.5 * (lo + hi)
    half = 0.25 * domain.shape.min_width()
    out = []
    for name, shift in (("bump-center", 0.0), ("bump-offset", 0.5)):
        c = mid + shift * half
        t = (domain.coords - c) / half
        vals = np.prod(np.clip(1 - t * t, 0.0, None) ** 2, axis=1)
        out.append((name, restrict_support(ScalarField(domain, vals))))
    return [(name, f) for name, f in out if np.any(f.values)]


def standard_corpus(domain: GridDomain, seed: int = 0, density=None,
                    eigenfunction=None, n_random: int = N_RANDOM):
    """Corpus of ``(id, field)`` pairs, all vanishing within ``2h`` of the boundary."""
    out = []
    if eigenfunction is not None:
        out.append(("eigenfunction", restrict_support(eigenfunction)))
    if density is not None:
        out.append(("density", restrict_support(density)))
    out.extend(tensor_bumps(domain))
    out.extend(random_smooth_fields(domain, n_random, seed))
    return out
