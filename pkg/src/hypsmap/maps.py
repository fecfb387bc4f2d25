"""Equivariant map profiles into the unit sphere.

A 1-equivariant map is ``u(r, theta) = exp(m theta R) ubar(r)`` with ``R`` the
generator of rotations about the third axis; only the radial profile ``ubar``
is stored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import RadialGrid, d1

__all__ = [
    "MapProfile",
    "TangentField",
    "MapError",
    "normalize",
    "q_lambda",
    "energy",
    "laplacian_m",
    "tension",
    "schroedinger_rhs",
    "h1_distance",
    "soliton_energy",
    "bump_map",
    "PARITY",
]

NORTH = np.array([0.0, 0.0, 1.0])
# parity of (u1, u2, u3) at the origin for m = 1
PARITY = np.array([-1.0, -1.0, 1.0])


class MapError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MapProfile:
    grid: RadialGrid
    u: np.ndarray  # shape (n, 3)
    m: int = 1

    def __post_init__(self):
        u = np.asarray(self.grid.check_field(self.u), dtype=float)
        if u.ndim != 2 or u.shape[1] != 3:
            raise MapError(f"profile must have shape (n, 3), got {u.shape}")
        if not np.all(np.isfinite(u)):
            raise MapError("profile contains non-finite values")
        dev = np.max(np.abs(np.einsum("ij,ij->i", u, u) - 1.0))
        if dev > 1e-12:
            raise MapError(f"profile leaves the sphere (max | |u|^2 - 1 | = {dev:.2e})")
        object.__setattr__(self, "u", u)

    def endpoint_deviation(self) -> float:
        """Distance of ``ubar(r_max)`` from the north pole."""
        return float(np.linalg.norm(self.u[-1] - NORTH))

    def in_class_e0(self, tol: float = 1e-8) -> bool:
        return self.endpoint_deviation() <= tol


@dataclass(frozen=True, eq=False)
class TangentField:
    grid: RadialGrid
    xi: np.ndarray  # shape (n, 3)

    def normal_component(self, u: MapProfile) -> np.ndarray:
        return np.einsum("ij,ij->i", self.xi, u.u)

    def sup(self, mask=None) -> float:
        a = np.linalg.norm(self.xi, axis=1)
        return float(np.max(a if mask is None else a[mask]))


def normalize(raw: np.ndarray, g: RadialGrid, m: int = 1) -> MapProfile:
    raw = np.asarray(raw, dtype=float)
    nrm = np.linalg.norm(raw, axis=-1)
    if np.any(nrm == 0):
        raise MapError("cannot normalize a zero vector")
    return MapProfile(g, raw / nrm[:, None], m)


def q_lambda(lam: float, g: RadialGrid) -> MapProfile:
    """The explicit harmonic map with ``u3(inf) = (1 - lam^2) / (1 + lam^2)``."""
    if lam < 0:
        raise MapError(f"lambda must be nonnegative, got {lam}")
    t = lam * np.tanh(g.r / 2)
    d = 1.0 + t * t
    u = np.stack([2 * t / d, np.zeros_like(t), (1 - t * t) / d], axis=1)
    return MapProfile(g, u, 1)


def bump_map(g: RadialGrid, amplitude: float, twist: float = 1.0) -> MapProfile:
    """Smooth map returning to the north pole at infinity.

    Polar angle ``amplitude * r * exp(-r^2/4) * (1 + 0.3 r^2)`` and azimuth
    ``twist * exp(-r^2/2)``; ``twist`` makes the frame transport nontrivial.
    """
    r = g.r
    phi = amplitude * r * np.exp(-0.25 * r * r) * (1.0 + 0.3 * r * r)
    beta = twist * np.exp(-0.5 * r * r)
    sp = np.sin(phi)
    return MapProfile(g, np.stack([sp * np.cos(beta), sp * np.sin(beta), np.cos(phi)], axis=1), 1)


def soliton_energy(lam: float) -> float:
    return 4 * np.pi * lam**2 / (1 + lam**2)


def _energy_density(u: MapProfile, du: np.ndarray) -> np.ndarray:
    g = u.grid
    return np.sum(du**2, axis=1) + u.m**2 * (u.u[:, 0] ** 2 + u.u[:, 1] ** 2) / g.sinh**2


def energy(u: MapProfile) -> float:
    """``pi * int (|u_r|^2 + m^2 (u1^2 + u2^2) / sinh^2 r) sinh r dr``."""
    g = u.grid
    dens = _energy_density(u, d1(u.u, g))
    return float(np.pi * np.sum(dens * g.sinh) * g.h)


def laplacian_m(u: MapProfile) -> np.ndarray:
    """Componentwise equivariant Laplacian of the profile.

    Flux-form second differences for ``d_rr + coth r d_r`` (the origin face has
    zero weight), ``-m^2 / sinh^2 r`` on the first two components, and a
    one-sided second-order closure at the outer node.
    """
    g = u.grid
    f = u.u
    h = g.h
    n = g.n_points
    faces = np.sinh(np.arange(1, n) * h)  # interior faces r = j h
    flux = faces[:, None] * (f[1:] - f[:-1]) / h
    out = np.zeros_like(f)
    out[:-1] += flux
    out[1:] -= flux
    out /= (g.sinh * h)[:, None]
    # outer node: one-sided second-order stencils for u'' and u'
    d2 = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / h**2
    dd = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
    out[-1] = d2 + g.coth[-1] * dd
    out[:, :2] -= (u.m**2 / g.sinh**2)[:, None] * f[:, :2]
    return out


def tension(u: MapProfile) -> TangentField:
    """``tau(u) = Delta_m u + |du|^2 u``, projected onto the tangent plane."""
    g = u.grid
    lap = laplacian_m(u)
    dens = _energy_density(u, d1(u.u, g))
    tau = lap + dens[:, None] * u.u
    tau -= np.einsum("ij,ij->i", tau, u.u)[:, None] * u.u
    return TangentField(g, tau)


def schroedinger_rhs(u: MapProfile) -> TangentField:
    """``u x Delta_m u``, the sphere-target form of ``J tau(u)``."""
    return TangentField(u.grid, np.cross(u.u, laplacian_m(u)))


def h1_distance(u: MapProfile, v: MapProfile) -> float:
    """Energy-type distance ``(pi int |d(u - v)|^2 sinh r dr)^(1/2)``."""
    g = u.grid
    diff = u.u - v.u
    dens = np.sum(d1(diff, g) ** 2, axis=1) + u.m**2 * (
        diff[:, 0] ** 2 + diff[:, 1] ** 2
    ) / g.sinh**2
    return float(np.sqrt(np.pi * np.sum(dens * g.sinh) * g.h))
