"""Inverse gauge transform: rebuild the map from ``psi^+`` alone.

Two inward sweeps from ``r_max``:

1. ``A_2' = Im(psi^+ conj(psi_2)) - |psi_2|^2 / sinh r`` and
   ``psi_2' = i A_2 psi^+ + A_2 psi_2 / sinh r``, with the pair renormalized to
   ``A_2^2 + |psi_2|^2 = 1`` after every step;
2. ``U' = M U`` for the rows ``U = (u, v, w)`` with
   ``psi_1 = psi^+ - i psi_2 / sinh r``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gauge import Frame, boundary_frame, rk4_linear_propagators
from .grid import RadialGrid, d1, radial_l2_norm, to_midpoints
from .maps import NORTH, MapProfile

__all__ = [
    "ReconstructionError",
    "Reconstruction",
    "solve_a2_psi2",
    "psi_minus_of",
    "solve_frame_system",
    "reconstruct_map",
    "psi2_ode_residual",
]

ORTHO_FAIL = 1e-6


class ReconstructionError(ArithmeticError):
    """Raised when the gauge data violates the hypotheses of the inverse transform."""


def _boundary_gauge(u3_inf: float) -> tuple[float, complex]:
    # psi_2 = w_3 - i v_3 evaluated on boundary_frame(u_inf)
    if not -1.0 < u3_inf <= 1.0:
        raise ReconstructionError(f"endpoint u3 = {u3_inf} outside (-1, 1]")
    return u3_inf, 1j * np.sqrt(max(0.0, 1.0 - u3_inf**2))


def solve_a2_psi2(
    psi_plus: np.ndarray,
    g: RadialGrid,
    u3_inf: float = 1.0,
    check_norm: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Solve for ``(A_2, psi_2)`` with data ``(u3_inf, i sqrt(1 - u3_inf^2))`` at ``r_max``.

    ``u3_inf = 1`` is the class of maps that return to the north pole at
    infinity; other values reproduce the soliton endpoint classes. After every
    step the pair is projected back onto ``A_2^2 + |psi_2|^2 = 1``.

    Raises:
        ReconstructionError: if ``||psi^+|| >= 2`` (radial measure) while
            ``check_norm`` is set, or if ``A_2`` reaches zero although the
            norm hypothesis holds (which would mean numerical breakdown).
    """
    psi_plus = np.asarray(g.check_field(psi_plus), dtype=complex)
    nrm = radial_l2_norm(psi_plus, g)
    small = nrm < 2.0
    if check_norm and not small:
        raise ReconstructionError(f"||psi+|| = {nrm:.4f} >= 2")
    n = g.n_points
    h = g.h
    pp = psi_plus.tolist()
    pm = to_midpoints(psi_plus, g, 1.0).tolist()
    isn = (1.0 / g.sinh).tolist()
    ism = (1.0 / np.sinh(np.arange(1, n) * h)).tolist()

    def rhs(a: float, q: complex, p: complex, isv: float) -> tuple[float, complex]:
        qq = q.real * q.real + q.imag * q.imag
        return (p * q.conjugate()).imag - qq * isv, a * (1j * p + q * isv)

    a, q = _boundary_gauge(u3_inf)
    a2 = np.empty(n)
    psi2 = np.empty(n, dtype=complex)
    a2[-1], psi2[-1] = a, q
    half = -0.5 * h
    for i in range(n - 1, 0, -1):
        ka1, kq1 = rhs(a, q, pp[i], isn[i])
        ka2, kq2 = rhs(a + half * ka1, q + half * kq1, pm[i - 1], ism[i - 1])
        ka3, kq3 = rhs(a + half * ka2, q + half * kq2, pm[i - 1], ism[i - 1])
        ka4, kq4 = rhs(a - h * ka3, q - h * kq3, pp[i - 1], isn[i - 1])
        a = a - h / 6.0 * (ka1 + 2 * ka2 + 2 * ka3 + ka4)
        q = q - h / 6.0 * (kq1 + 2 * kq2 + 2 * kq3 + kq4)
        scale = (a * a + q.real * q.real + q.imag * q.imag) ** -0.5
        a *= scale
        q *= scale
        if small and u3_inf > 0 and a <= 0.0:
            raise ReconstructionError(
                f"A_2 reached {a:.3e} at r = {g.r[i - 1]:.4f} with ||psi+|| = {nrm:.4f} < 2"
            )
        a2[i - 1] = a
        psi2[i - 1] = q
    return a2, psi2


def psi2_ode_residual(psi_plus, a2, psi2, g: RadialGrid) -> np.ndarray:
    """``psi_2' - i A_2 psi^+ - A_2 psi_2 / sinh r``; zero up to discretization."""
    return d1(psi2, g) - 1j * a2 * psi_plus - a2 * psi2 / g.sinh


def psi_minus_of(psi_plus, psi2, g: RadialGrid) -> np.ndarray:
    return np.asarray(psi_plus) - 2j * np.asarray(psi2) / g.sinh


def solve_frame_system(
    psi1: np.ndarray,
    a2: np.ndarray,
    psi2: np.ndarray,
    g: RadialGrid,
) -> tuple[MapProfile, Frame]:
    """Integrate ``U' = M U`` inward from the boundary rotation at ``r_max``.

    The boundary value ``u(r_max)`` is read off ``(a2, psi2)`` at the last
    node, so that ``u3 = A_2`` there; for decaying data it is the north pole
    with ``(v, w) = (i, j)``.
    """
    psi1 = np.asarray(g.check_field(psi1), dtype=complex)
    n = g.n_points
    u_end = np.array([np.abs(psi2[-1]), 0.0, a2[-1]])
    u_end /= np.linalg.norm(u_end)
    v_end, w_end = boundary_frame(u_end)
    if np.allclose(u_end, NORTH, atol=0, rtol=0):
        v_end, w_end = np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])

    def mat(p):
        a = np.zeros(p.shape + (3, 3))
        a[..., 0, 1] = p.real
        a[..., 0, 2] = p.imag
        a[..., 1, 0] = -p.real
        a[..., 2, 0] = -p.imag
        return a

    props = rk4_linear_propagators(mat(psi1), mat(to_midpoints(psi1, g, 1.0)), g.h)
    frames = np.empty((n, 3, 3))
    frames[-1] = np.stack([u_end, v_end, w_end])
    cur = frames[-1]
    eye = np.eye(3)
    for i in range(n - 1, 0, -1):
        x = props[i - 1] @ cur
        drift = np.max(np.abs(x @ x.T - eye))
        if drift > ORTHO_FAIL:
            raise ReconstructionError(
                f"frame drift {drift:.2e} at r = {g.r[i - 1]:.4f} before correction"
            )
        # nearest rotation: one Newton step of the polar iteration
        x = 1.5 * x - 0.5 * (x @ x.T) @ x
        frames[i - 1] = x
        cur = x
    u = frames[:, 0, :]
    u = u / np.linalg.norm(u, axis=1)[:, None]
    return MapProfile(g, u, 1), Frame(g, frames[:, 1, :], frames[:, 2, :])


@dataclass(frozen=True, eq=False)
class Reconstruction:
    map: MapProfile
    frame: Frame
    a2: np.ndarray
    psi2: np.ndarray
    psi_minus: np.ndarray
    energy: float  # pi ||psi+||^2 in the radial measure


def reconstruct_map(
    psi_plus: np.ndarray, g: RadialGrid, u3_inf: float = 1.0, check_norm: bool = True
) -> Reconstruction:
    a2, psi2 = solve_a2_psi2(psi_plus, g, u3_inf, check_norm)
    psi1 = np.asarray(psi_plus) - 1j * psi2 / g.sinh
    u, frame = solve_frame_system(psi1, a2, psi2, g)
    return Reconstruction(
        u,
        frame,
        a2,
        psi2,
        psi_minus_of(psi_plus, psi2, g),
        float(np.pi * radial_l2_norm(psi_plus, g) ** 2),
    )
