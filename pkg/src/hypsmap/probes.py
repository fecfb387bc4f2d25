"""Random smooth perturbations and empirical Lipschitz constants of the gauge maps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .gauge import gauge_transform
from .grid import RadialGrid, radial_l2_norm
from .maps import MapProfile, bump_map, h1_distance, normalize
from .reconstruct import reconstruct_map

__all__ = [
    "LipschitzProbe",
    "map_perturbation",
    "field_perturbation",
    "forward_lipschitz",
    "inverse_lipschitz",
    "bump_with_norm",
]


@dataclass(frozen=True)
class LipschitzProbe:
    kind: str  # "forward" (u -> psi+) or "inverse" (psi+ -> u)
    index: int
    input_distance: float
    output_distance: float

    @property
    def constant(self) -> float:
        return self.output_distance / self.input_distance


def _profile(g: RadialGrid, rng: np.random.Generator, power: int) -> np.ndarray:
    # r^power exp(-(r - c)^2 / s^2) with random centre and width; vanishes fast at r_max
    c = rng.uniform(0.0, 3.0)
    s = rng.uniform(0.8, 2.0)
    return g.r**power * np.exp(-((g.r - c) ** 2) / s**2)


def map_perturbation(u: MapProfile, rng: np.random.Generator, size: float) -> MapProfile:
    """``normalize(u + size * p)`` with a random smooth regular ``p``, scaled so ``||p||_inf = 1``."""
    g = u.grid
    p = np.stack(
        [
            rng.normal() * _profile(g, rng, 1),
            rng.normal() * _profile(g, rng, 1),
            rng.normal() * _profile(g, rng, 2),
        ],
        axis=1,
    )
    p /= np.max(np.abs(p))
    return normalize(u.u + size * p, g, u.m)


def field_perturbation(g: RadialGrid, rng: np.random.Generator, size: float) -> np.ndarray:
    """Random smooth complex field vanishing like ``r^2`` at the origin, radial norm ``size``."""
    d = (rng.normal() + 1j * rng.normal()) * _profile(g, rng, 2)
    d = d + (rng.normal() + 1j * rng.normal()) * _profile(g, rng, 2)
    return size * d / radial_l2_norm(d, g)


def forward_lipschitz(u: MapProfile, rng: np.random.Generator, n: int = 20, size: float = 1e-3):
    """``||psi+(u~) - psi+(u)|| / d(u~, u)`` over ``n`` random perturbations."""
    g = u.grid
    _, base = gauge_transform(u)
    out = []
    for k in range(n):
        v = map_perturbation(u, rng, size)
        _, gv = gauge_transform(v)
        out.append(
            LipschitzProbe("forward", k, h1_distance(u, v), radial_l2_norm(gv.psi_plus - base.psi_plus, g))
        )
    return out


def inverse_lipschitz(
    psi_plus: np.ndarray,
    g: RadialGrid,
    rng: np.random.Generator,
    n: int = 20,
    size: float = 1e-3,
    u3_inf: float = 1.0,
):
    """``d(u(psi+ + delta), u(psi+)) / ||delta||`` over ``n`` random ``delta``."""
    base = reconstruct_map(psi_plus, g, u3_inf).map
    out = []
    for k in range(n):
        delta = field_perturbation(g, rng, size)
        v = reconstruct_map(psi_plus + delta, g, u3_inf).map
        out.append(LipschitzProbe("inverse", k, radial_l2_norm(delta, g), h1_distance(base, v)))
    return out


def bump_with_norm(g: RadialGrid, norm: float, twist: float = 1.0) -> MapProfile:
    """The :func:`bump_map` whose ``psi^+`` has the requested radial norm."""

    def gap(amp):
        return radial_l2_norm(gauge_transform(bump_map(g, amp, twist))[1].psi_plus, g) - norm

    hi = 0.05
    while gap(hi) < 0:
        hi *= 2
        if hi > 2.0:
            raise ValueError(f"no bump map reaches ||psi+|| = {norm}")
    amp = brentq(gap, 0.0, hi, xtol=1e-14, rtol=1e-12)
    return bump_map(g, amp, twist)
