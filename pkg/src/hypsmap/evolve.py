"""Split-step integration of the coupled ``(psi^+, psi^-)`` Schroedinger system.

Radially, each component obeys

    i d_t psi + (Delta - V) psi = N psi,    Delta = d_rr + coth r d_r,

with ``V^+ = 2 (cosh r + 1) / sinh^2 r``, ``V^- = -2 (cosh r - 1) / sinh^2 r``
and real nonlinear potentials ``N^(+-)`` built from ``A_0``, ``A_2`` and
``psi_2``. One step is Strang splitting: a half-step phase rotation
``exp(-i dt/2 N)``, a Crank-Nicolson step for ``exp(i dt L)`` with
``L = Delta - V`` and the nonlinear potential refreshed before the second half
rotation. Both substeps are isometries of the ``sinh r``-weighted norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.linalg import lapack

from .gauge import GaugeFields, _a0, a2_from_psi
from .grid import RadialGrid, RadialOperator, build_operator, d1, l2_norm, lp_norm

__all__ = [
    "Potentials",
    "EvolveConfig",
    "Ledger",
    "EvolutionState",
    "Trajectory",
    "EvolutionError",
    "SplitStepper",
    "linear_potentials",
    "nonlinear_potentials",
    "compatibility_residual",
    "initial_state",
    "step",
    "run",
]

GUARD = 0.5  # dt * sup|N| above this is reported as an accuracy warning


class EvolutionError(ArithmeticError):
    """The linear solve failed or the state stopped being finite."""


class Potentials(str, Enum):
    FULL = "full"  # V^(+-) and N^(+-)
    LINEAR = "linear"  # V^(+-) only
    FREE = "free"  # plain Delta on both components


@dataclass(frozen=True)
class EvolveConfig:
    dt: float
    t_end: float
    n_points: int = 4096
    r_max: float = 20.0
    every: int = 100
    potentials: Potentials = Potentials.FULL

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (np.isfinite(self.t_end) and self.t_end >= 0):
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")
        if self.every < 1:
            raise ValueError(f"every must be >= 1, got {self.every}")
        object.__setattr__(self, "potentials", Potentials(self.potentials))

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_end / self.dt - 1e-9))

    @property
    def step_size(self) -> float:
        """``dt`` adjusted so that ``n_steps`` steps land exactly on ``t_end``."""
        n = self.n_steps
        return self.t_end / n if n else self.dt


# -------------------------------------------------------------- potentials


def linear_potentials(g: RadialGrid) -> tuple[np.ndarray, np.ndarray]:
    """``V^+ = 2 (cosh r + 1) / sinh^2 r`` and ``V^- = -2 (cosh r - 1) / sinh^2 r``.

    ``V^-`` is evaluated as ``-1 / cosh^2(r/2)`` to avoid cancellation near 0.
    """
    half = np.cosh(0.5 * g.r) ** 2
    v_minus = -1.0 / half
    v_plus = 1.0 / np.sinh(0.5 * g.r) ** 2
    return v_plus, v_minus


def nonlinear_potentials(gf: GaugeFields) -> tuple[np.ndarray, np.ndarray]:
    """Real potentials ``N^(+-)`` from the current fields.

    ``N^+ = A_0 + 2 cosh r (A_2 - 1) / sinh^2 r - Im(psi^+ conj(psi_2) / sinh r)``
    ``N^- = A_0 - 2 cosh r (A_2 - 1) / sinh^2 r + Im(psi^- conj(psi_2) / sinh r)``
    """
    g = gf.grid
    q = np.conj(gf.psi2_over_sinh)
    curv = 2.0 * g.cosh * (gf.a2 - 1.0) / g.sinh**2
    n_plus = gf.a0 + curv - np.imag(gf.psi_plus * q)
    n_minus = gf.a0 - curv + np.imag(gf.psi_minus * q)
    return n_plus, n_minus


def compatibility_residual(gf: GaugeFields) -> float:
    """``|| d_r(sinh r (psi^+ - psi^-)) + A_2 (psi^+ + psi^-) ||`` over the plane."""
    g = gf.grid
    res = d1(g.sinh * (gf.psi_plus - gf.psi_minus), g) + gf.a2 * (gf.psi_plus + gf.psi_minus)
    return l2_norm(res, g)


def _refresh(g: RadialGrid, psi_plus, psi_minus) -> GaugeFields:
    return GaugeFields(
        g, psi_plus, psi_minus, a2_from_psi(psi_plus, psi_minus, g), _a0(psi_plus, psi_minus, g)
    )


# ------------------------------------------------------------------ state


@dataclass(frozen=True)
class Ledger:
    mass_plus: float
    mass_minus: float
    compat_residual: float
    l4_accumulator: float = 0.0  # running int (||psi+||_4^4 + ||psi-||_4^4) dt
    guard_max: float = 0.0  # largest dt * sup|N| seen so far
    steps: int = 0


@dataclass(frozen=True, eq=False)
class EvolutionState:
    t: float
    gf: GaugeFields
    ledger: Ledger

    def mass_defect(self) -> float:
        """Relative mismatch between the ledger masses and recomputed ones."""
        g = self.gf.grid
        out = 0.0
        for m, f in ((self.ledger.mass_plus, self.gf.psi_plus), (self.ledger.mass_minus, self.gf.psi_minus)):
            now = l2_norm(f, g) ** 2
            out = max(out, abs(now - m) / max(now, 1e-300))
        return out


def _l4(gf: GaugeFields) -> float:
    g = gf.grid
    return lp_norm(gf.psi_plus, g, 4) ** 4 + lp_norm(gf.psi_minus, g, 4) ** 4


def initial_state(gf: GaugeFields, refresh: bool = True) -> EvolutionState:
    """Wrap gauge data as a state at ``t = 0``; ``A_2``, ``A_0`` are rederived from ``psi^(+-)``."""
    g = gf.grid
    if refresh:
        gf = _refresh(g, gf.psi_plus, gf.psi_minus)
    ledger = Ledger(
        l2_norm(gf.psi_plus, g) ** 2,
        l2_norm(gf.psi_minus, g) ** 2,
        compatibility_residual(gf),
    )
    return EvolutionState(0.0, gf, ledger)


# ---------------------------------------------------------------- stepping


class _CrankNicolson:
    """Factored ``I - i tau L`` and the explicit ``I + i tau L`` for fixed ``tau``."""

    def __init__(self, op: RadialOperator, tau: float):
        z = 1j * tau
        self.op = op
        self.z = z
        dl, d, du, du2, ipiv, info = lapack.zgttrf(
            (-z * op.sub).astype(complex), (1.0 - z * op.diag).astype(complex), (-z * op.sup).astype(complex)
        )
        if info != 0:
            raise EvolutionError(f"tridiagonal factorization failed (info = {info})")
        self._lu = (dl, d, du, du2, ipiv)

    def __call__(self, f: np.ndarray) -> np.ndarray:
        rhs = f + self.z * self.op.apply(f)
        x, info = lapack.zgttrs(*self._lu, rhs)
        if info != 0:
            raise EvolutionError(f"tridiagonal solve failed (info = {info})")
        return x


class SplitStepper:
    """Strang splitting with cached Crank-Nicolson factors for one ``(grid, dt)``."""

    def __init__(self, g: RadialGrid, dt: float, potentials: Potentials = Potentials.FULL):
        self.grid = g
        self.dt = float(dt)
        self.potentials = Potentials(potentials)
        if self.potentials is Potentials.FREE:
            v_plus = v_minus = np.zeros(g.n_points)
        else:
            v_plus, v_minus = linear_potentials(g)
        self.op_plus = build_operator(g, 0, v_plus)
        self.op_minus = build_operator(g, 0, v_minus)
        self._cn_plus = _CrankNicolson(self.op_plus, 0.5 * self.dt)
        self._cn_minus = _CrankNicolson(self.op_minus, 0.5 * self.dt)

    def _rotate(self, gf: GaugeFields, tau: float):
        n_plus, n_minus = nonlinear_potentials(gf)
        guard = self.dt * max(np.max(np.abs(n_plus)), np.max(np.abs(n_minus)))
        return gf.psi_plus * np.exp(-1j * tau * n_plus), gf.psi_minus * np.exp(-1j * tau * n_minus), guard

    def __call__(self, s: EvolutionState) -> EvolutionState:
        g = self.grid
        half = 0.5 * self.dt
        nonlinear = self.potentials is Potentials.FULL
        guard = 0.0
        if nonlinear:
            pp, pm, guard = self._rotate(s.gf, half)
        else:
            pp, pm = s.gf.psi_plus, s.gf.psi_minus
        pp = self._cn_plus(pp)
        pm = self._cn_minus(pm)
        mid = _refresh(g, pp, pm)
        if nonlinear:
            pp, pm, guard2 = self._rotate(mid, half)
            guard = max(guard, guard2)
            gf = _refresh(g, pp, pm)
        else:
            gf = mid
        old = s.ledger
        ledger = Ledger(
            l2_norm(pp, g) ** 2,
            l2_norm(pm, g) ** 2,
            old.compat_residual,
            old.l4_accumulator + half * (_l4(s.gf) + _l4(gf)),
            max(old.guard_max, guard),
            old.steps + 1,
        )
        return EvolutionState(s.t + self.dt, gf, ledger)


def step(s: EvolutionState, dt: float, potentials: Potentials = Potentials.FULL) -> EvolutionState:
    """One Strang step. Builds fresh factors; use :class:`SplitStepper` in loops."""
    out = SplitStepper(s.gf.grid, dt, potentials)(s)
    return replace(out, ledger=replace(out.ledger, compat_residual=compatibility_residual(out.gf)))


@dataclass(frozen=True, eq=False)
class Trajectory:
    config: EvolveConfig
    snapshots: list = field(default_factory=list)
    completed: bool = True
    message: str = ""

    @property
    def final(self) -> EvolutionState:
        return self.snapshots[-1]


def _finite(gf: GaugeFields) -> bool:
    return bool(np.all(np.isfinite(gf.psi_plus)) and np.all(np.isfinite(gf.psi_minus)))


def run(cfg: EvolveConfig, initial: GaugeFields) -> Trajectory:
    """Step to ``cfg.t_end``, snapshotting every ``cfg.every`` steps and at the end.

    A non-finite state stops the run; the trajectory then ends with the last
    finite snapshot and ``completed = False``.
    """
    g = initial.grid
    if g.n_points != cfg.n_points or g.r_max != cfg.r_max:
        raise ValueError("initial data does not live on the configured grid")
    state = initial_state(initial)
    snaps = [state]
    n = cfg.n_steps
    if n == 0:
        return Trajectory(cfg, snaps)
    stepper = SplitStepper(g, cfg.step_size, cfg.potentials)
    with np.errstate(over="ignore", invalid="ignore"):
        return _march(cfg, stepper, state, snaps, n)


def _march(cfg: EvolveConfig, stepper: SplitStepper, state: EvolutionState, snaps: list, n: int) -> Trajectory:
    for k in range(1, n + 1):
        try:
            nxt = stepper(state)
        except EvolutionError as exc:
            return Trajectory(cfg, snaps + [state] if snaps[-1] is not state else snaps, False, str(exc))
        if not _finite(nxt.gf):
            if snaps[-1] is not state:
                snaps.append(state)
            return Trajectory(cfg, snaps, False, f"non-finite state at step {k}, t = {nxt.t:.6g}")
        state = nxt
        if k % cfg.every == 0 or k == n:
            state = replace(
                state,
                t=k * cfg.step_size,
                ledger=replace(state.ledger, compat_residual=compatibility_residual(state.gf)),
            )
            snaps.append(state)
    return Trajectory(cfg, snaps)
