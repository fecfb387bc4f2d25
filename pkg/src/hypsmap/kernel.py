"""Free Schroedinger kernel on the hyperbolic plane and its oscillatory bounds.

The kernel is

    K(t, rho) = |t|^(-3/2) I(t, rho, 0),
    I(t, r, a) = int_r^inf exp(i (s + a)^2 / 4t) (s + a) (cosh s - cosh r)^(-1/2) ds,

with the overall constant fixed to 1. ``I`` is evaluated in two zones: near
``s = r`` the substitution ``s = r + tau^2`` removes the inverse square root;
beyond ``A = r + Delta`` two integrations by parts in the phase (for
``t <= 1``) leave a remainder with amplitude ``O(t^2)``, integrated against
``cos`` / ``sin`` weights in ``w = (s + a)^2``.

An independent route deforms the contour to ``(s + a)^2 = (r + a)^2 + i y``,
turning the oscillatory integral into a Laplace-type one:

    I = exp(i (r + a)^2 / 4t) (i/2) int_0^inf exp(-y / 4t) (cosh s(y) - cosh r)^(-1/2) dy.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, stats
from scipy.interpolate import CubicSpline

from .grid import RadialGrid

__all__ = [
    "KernelSample",
    "KernelQuadratureError",
    "DecayFit",
    "BoundSample",
    "oscillatory_integral",
    "contour_integral",
    "free_kernel",
    "contour_kernel",
    "decay_fit",
    "oscillatory_bound_ratio",
    "bound_rhs",
    "regime_of",
    "PROPAGATOR_CONSTANT",
    "apply_free_propagator",
    "kernel_sup",
]

# e^{it Delta} = C e^{-it/4} int u0(y) K(t, d(x, y)) dy on H^2, by continuing the
# heat kernel t -> it: C = sqrt(2) (4 pi i)^(-3/2)
PROPAGATOR_CONSTANT = math.sqrt(2.0) * np.exp(-0.75j * np.pi) / (4.0 * np.pi) ** 1.5

_T_RANGE = (1e-3, 1e3)
_RHO_MAX = 50.0


class KernelQuadratureError(ArithmeticError):
    """Quadrature did not reach the requested accuracy; ``partial`` holds the estimate."""

    def __init__(self, message: str, partial: complex, est_error: float):
        super().__init__(message)
        self.partial = partial
        self.est_error = est_error


@dataclass(frozen=True)
class KernelSample:
    t: float
    rho: float
    value: complex
    est_error: float


# ------------------------------------------------------------ helpers


def _sqrt_sinh(z):
    """Analytic ``sqrt(sinh z)`` on ``Re z >= 0``, positive on the real axis."""
    z = np.asarray(z, dtype=complex)
    return np.exp(0.5 * z) * np.sqrt(0.5 * (1.0 - np.exp(-2.0 * z)))


def _gap(s, r):
    """``cosh s - cosh r`` without cancellation."""
    return 2.0 * np.sinh(0.5 * (s + r)) * np.sinh(0.5 * (s - r))


def _check_args(t: float, r: float, a: float):
    if not (np.isfinite(t) and t > 0):
        raise ValueError(f"t must be positive here, got {t}")
    if r < 0 or a < 0:
        raise ValueError(f"r and a must be nonnegative, got r = {r}, a = {a}")
    if r == 0 and a > 0:
        raise ValueError("the integral diverges logarithmically for r = 0 < a")


def _near_width(t: float, r: float, a: float) -> float:
    # keep roughly a dozen phase oscillations inside [r, r + Delta]
    return min(1.0, 150.0 * t / (r + a + math.sqrt(t)))


# ------------------------------------------------------ two-zone quadrature


def _near_zone(t, r, a, width, tol):
    span = math.sqrt(width)

    def amp(tau):
        tt = tau * tau
        q = 0.5 if tt < 1e-8 else math.sinh(0.5 * tt) / tt
        s = r + tt
        return (s + a) * 2.0 / math.sqrt(2.0 * math.sinh(r + 0.5 * tt) * q)

    def re(tau):
        return amp(tau) * math.cos((r + tau * tau + a) ** 2 / (4 * t))

    def im(tau):
        return amp(tau) * math.sin((r + tau * tau + a) ** 2 / (4 * t))

    pts = [math.sqrt(r)] if 0 < math.sqrt(r) < span else None
    # absolute target tied to the amplitude: |I| ~ exp(-r/2) for large r
    scale = max(abs(amp(span)) * span, 1e-300)
    kw = dict(limit=500, epsabs=tol * 1e-2 * scale, epsrel=tol, points=pts)
    vr, er = integrate.quad(re, 0.0, span, **kw)
    vi, ei = integrate.quad(im, 0.0, span, **kw)
    return complex(vr, vi), er + ei


def _h_terms(s, t, r, a):
    """IBP amplitudes ``h_0``, ``h_1`` and the (real) remainder amplitude ``h_2``."""
    d = _gap(s, r)
    sa = s + a
    sh, ch = math.sinh(s), math.cosh(s)
    h0 = sa / math.sqrt(d)
    h1 = -1j * t * sh * d**-1.5
    h2 = 2 * t * t * (ch * d**-1.5 / sa - 1.5 * sh * sh * d**-2.5 / sa - sh * d**-1.5 / sa**2)
    return h0, h1, h2


def _far_zone(t, r, a, start, tol, scale_hint, n_ibp):
    phase = (start + a) ** 2 / (4 * t)
    e = complex(math.cos(phase), math.sin(phase))
    h0, h1, _ = _h_terms(start, t, r, a)
    pref = 2j * t / (start + a)
    boundary = 0j
    if n_ibp >= 1:
        boundary += pref * h0 * e
    if n_ibp >= 2:
        boundary += pref * h1 * e
    if n_ibp not in (0, 2):
        raise ValueError("n_ibp must be 0 or 2")
    which = n_ibp

    def amp(s):
        return _h_terms(s, t, r, a)[which].real

    target = tol * max(abs(boundary), scale_hint, 1e-300)
    stop = start + 20.0
    while 2.2 * abs(amp(stop)) > 1e-3 * target and stop < start + 400.0:
        stop += 10.0
    tail = 2.2 * abs(amp(stop))

    def g(w):
        sw = math.sqrt(w)
        return amp(sw - a) / (2.0 * sw)

    w0, w1 = (start + a) ** 2, (stop + a) ** 2
    omega = 1.0 / (4 * t)
    kw = dict(limit=500, epsabs=target * 1e-2, epsrel=tol, wvar=omega)
    vc, ec = integrate.quad(g, w0, w1, weight="cos", **kw)
    vs, es = integrate.quad(g, w0, w1, weight="sin", **kw)
    return boundary + complex(vc, vs), ec + es + tail


def oscillatory_integral(
    t: float, r: float, a: float = 0.0, tol: float = 1e-10, n_ibp: int | None = None
) -> tuple[complex, float]:
    """``I(t, r, a)`` for ``t > 0`` by two-zone quadrature; returns ``(value, est_error)``.

    ``n_ibp`` integrations by parts (0 or 2) precede the far-zone quadrature.
    The default uses two for ``t <= 1``, where the phase oscillates fast, and
    none above, where the boundary terms grow like ``t^2`` and cancel.
    """
    _check_args(t, r, a)
    if n_ibp is None:
        n_ibp = 2 if t <= 1.0 else 0
    width = _near_width(t, r, a)
    near, e_near = _near_zone(t, r, a, width, tol)
    far, e_far = _far_zone(t, r, a, r + width, tol, abs(near), n_ibp)
    return near + far, e_near + e_far


# --------------------------------------------------------- contour route


def _contour_integrand(tau, t, r, a):
    tau = np.asarray(tau, dtype=float)
    c = r + a
    s = -a + np.sqrt(c * c + 1j * tau * tau)
    root = math.sqrt(2.0) * _sqrt_sinh(0.5 * (s + r)) * _sqrt_sinh(0.5 * (s - r))
    # 2 tau / sqrt(D) with the tau -> 0 limit taken analytically
    small = tau < 1e-7
    safe = np.where(small, 1.0, tau)
    out = 2.0 * safe / np.where(small, 1.0, root)
    if np.any(small):
        lim = 2.0 / np.sqrt(1j * math.sinh(r) / (2.0 * c)) if r > 0 else 2.0 / np.sqrt(0.5j)
        out = np.where(small, lim, out)
    return np.exp(-tau * tau / (4 * t)) * out


def contour_integral(t: float, r: float, a: float = 0.0, tol: float = 1e-12) -> complex:
    """``I(t, r, a)`` on the steepest-descent contour (adaptive quadrature)."""
    _check_args(t, r, a)
    top = math.sqrt(4 * t * 60.0)
    kw = dict(limit=400, epsabs=0.0, epsrel=tol)
    # smooth integrand with Gaussian decay; QUADPACK flags roundoff once tol nears machine precision
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        vr, _ = integrate.quad(lambda x: _contour_integrand(x, t, r, a).real, 0.0, top, **kw)
        vi, _ = integrate.quad(lambda x: _contour_integrand(x, t, r, a).imag, 0.0, top, **kw)
    c = r + a
    return np.exp(1j * c * c / (4 * t)) * 0.5j * complex(vr, vi)


@lru_cache(maxsize=8)
def _gauss_nodes(n: int):
    return np.polynomial.legendre.leggauss(n)


def _envelope(t: float, rho: np.ndarray, n_nodes: int = 160, n_panels: int = 4) -> np.ndarray:
    """``(i/2) int exp(-y/4t) (cosh s - cosh rho)^(-1/2) dy`` for an array of ``rho``."""
    x, wq = _gauss_nodes(n_nodes)
    top = math.sqrt(4 * t * 60.0)
    edges = np.linspace(0.0, top, n_panels + 1)
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    out = np.zeros(rho.shape, dtype=complex)
    for lo, hi in zip(edges[:-1], edges[1:]):
        tau = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        wts = 0.5 * (hi - lo) * wq
        c = rho[:, None]
        s = np.sqrt(c * c + 1j * tau[None, :] ** 2)
        root = math.sqrt(2.0) * _sqrt_sinh(0.5 * (s + c)) * _sqrt_sinh(0.5 * (s - c))
        vals = np.exp(-tau**2 / (4 * t))[None, :] * 2.0 * tau[None, :] / root
        out += vals @ wts
    return 0.5j * out


# ----------------------------------------------------------------- kernel


def _check_kernel_args(t: float, rho: float):
    if not (_T_RANGE[0] <= abs(t) <= _T_RANGE[1]):
        raise ValueError(f"|t| must lie in [{_T_RANGE[0]}, {_T_RANGE[1]}], got {t}")
    if not (0.0 <= rho <= _RHO_MAX):
        raise ValueError(f"rho must lie in [0, {_RHO_MAX}], got {rho}")


def free_kernel(t: float, rho: float, tol: float = 1e-10, max_rel_error: float = 1e-6) -> KernelSample:
    """``K(t, rho)`` by two-zone quadrature, with ``K(-t) = conj K(t)``.

    Raises:
        KernelQuadratureError: if the error estimate exceeds
            ``max_rel_error * |K|`` (with a floor at ``1e-300``).
    """
    _check_kernel_args(t, rho)
    val, err = oscillatory_integral(abs(t), rho, 0.0, tol)
    scale = abs(t) ** -1.5
    val, err = val * scale, err * scale
    if t < 0:
        val = val.conjugate()
    if err > max_rel_error * max(abs(val), 1e-300):
        raise KernelQuadratureError(
            f"kernel quadrature at t = {t}, rho = {rho} did not converge", val, err
        )
    return KernelSample(float(t), float(rho), complex(val), float(err))


def contour_kernel(t: float, rho: float, tol: float = 1e-12) -> complex:
    """``K(t, rho)`` along the steepest-descent contour; an independent check on :func:`free_kernel`."""
    _check_kernel_args(t, rho)
    val = contour_integral(abs(t), rho, 0.0, tol) * abs(t) ** -1.5
    return val.conjugate() if t < 0 else val


def kernel_sup(t: float, rhos, tol: float = 1e-10) -> float:
    """``max |K(t, rho)|`` over the given distances; the small-time decay proxy."""
    return max(abs(free_kernel(t, float(r), tol).value) for r in rhos)


# -------------------------------------------------------------- decay fit


@dataclass(frozen=True)
class DecayFit:
    slope: float
    half_width: float  # 95% confidence half-width of the slope
    intercept: float


def decay_fit(t_values, magnitudes, confidence: float = 0.95) -> DecayFit:
    """Least-squares slope of ``log |K|`` against ``log t``."""
    t_values = np.asarray(t_values, dtype=float)
    mags = np.asarray(magnitudes, dtype=float)
    if t_values.shape != mags.shape or t_values.size < 4:
        raise ValueError("need at least four (t, |K|) pairs")
    if np.any(t_values <= 0) or np.any(mags <= 0):
        raise ValueError("t values and magnitudes must be positive")
    if t_values.max() / t_values.min() < 8.0:
        raise ValueError("t values must span at least a factor of 8")
    fit = stats.linregress(np.log(t_values), np.log(mags))
    q = stats.t.ppf(0.5 + 0.5 * confidence, t_values.size - 2)
    return DecayFit(float(fit.slope), float(q * fit.stderr), float(fit.intercept))


# ---------------------------------------------------------- bound ratio


@dataclass(frozen=True)
class BoundSample:
    r: float
    a: float
    t: float
    regime: str  # "outer" (r above the threshold) or "inner"
    lhs: float
    rhs: float
    est_error: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs


def regime_of(r: float, t: float, threshold: str = "half") -> str | None:
    """``"outer"``, ``"inner"`` or ``None`` in the gap between the two regimes.

    ``threshold = "half"`` uses ``r >= sqrt(t)/2`` for the outer regime;
    ``"inverse"`` uses ``r >= sqrt(t)/t``, which leaves a gap for ``t < 2``.
    """
    rt = math.sqrt(t)
    if r < 0.5 * rt:
        return "inner"
    if threshold == "half":
        return "outer"
    if threshold == "inverse":
        return "outer" if r >= rt / t else None
    raise ValueError(f"unknown threshold {threshold!r}")


def bound_rhs(r: float, a: float, t: float, regime: str) -> float:
    rt = math.sqrt(t)
    if regime == "outer":
        return rt * math.sqrt((r + a) / math.sinh(r))
    if regime == "inner":
        return rt * (1.0 + (a / r if a else 0.0))
    raise ValueError(f"unknown regime {regime!r}")


def oscillatory_bound_ratio(
    r: float, a: float, t: float, tol: float = 1e-10, threshold: str = "half"
) -> BoundSample:
    """``|I(t, r, a)|`` against the regime-dependent bound.

    Raises:
        ValueError: when ``r`` falls in the gap between regimes, or ``r = 0``.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    regime = regime_of(r, t, threshold)
    if regime is None:
        raise ValueError(f"r = {r} lies between the regimes for t = {t}")
    val, err = oscillatory_integral(t, r, a, tol)
    return BoundSample(r, a, t, regime, abs(val), bound_rhs(r, a, t, regime), err)


# ------------------------------------------------------------- propagator


def _filon_weights(theta: float) -> tuple[complex, complex, complex]:
    """Moments ``int_{-1}^{1} x^k exp(i theta x) dx`` for ``k = 0, 1, 2``."""
    if abs(theta) < 0.05:
        t2 = theta * theta
        m0 = 2.0 - t2 / 3.0 + t2 * t2 / 60.0 - t2**3 / 2520.0
        m1 = 1j * theta * (2.0 / 3.0 - t2 / 15.0 + t2 * t2 / 420.0)
        m2 = 2.0 / 3.0 - t2 / 5.0 + t2 * t2 / 84.0 - t2**3 / 3240.0
        return m0, m1, m2
    s, c = math.sin(theta), math.cos(theta)
    m0 = 2.0 * s / theta
    m1 = 2j * (s - theta * c) / theta**2
    m2 = 2.0 * ((theta * theta - 2.0) * s + 2.0 * theta * c) / theta**3
    return m0, m1, m2


def _filon(values: np.ndarray, w0: float, dw: float, omega: float) -> complex:
    """``int exp(i omega w) G(w) dw`` for ``G`` sampled at ``w0 + k dw`` (odd count)."""
    m0, m1, m2 = _filon_weights(omega * dw)
    gm, g0, gp = values[0:-2:2], values[1:-1:2], values[2::2]
    centers = w0 + dw * (1 + 2 * np.arange(g0.size))
    panel = g0 * m0 + 0.5 * (gp - gm) * m1 + 0.5 * (gp - 2 * g0 + gm) * m2
    return complex(dw * np.sum(np.exp(1j * omega * centers) * panel))


def _support_radius(f: np.ndarray, g: RadialGrid, rel: float = 1e-14) -> float:
    big = np.abs(f) > rel * np.max(np.abs(f))
    return float(g.r[np.nonzero(big)[0][-1]] + g.h)


def apply_free_propagator(
    f: np.ndarray,
    t: float,
    g: RadialGrid,
    r_out=None,
    n_alpha: int = 48,
    drho: float | None = None,
) -> np.ndarray:
    """``e^{it Delta} f`` for a radial (angular index 0) field by kernel quadrature.

    For each output radius ``x`` the plane integral is written in polar
    coordinates about ``x``: the angular average of ``f`` over the circle of
    radius ``rho`` is taken by Gauss-Legendre quadrature over the arc that
    meets the support of ``f``, and the radial integral against the kernel is
    done by Filon quadrature in ``w = rho^2`` with the smooth kernel envelope
    from the contour route.

    Args:
        f: field on ``g`` that is negligible beyond three quarters of ``r_max``.
        t: time, ``|t|`` in ``[1e-3, 1e3]``.
        r_out: output radii; defaults to the grid nodes.
        n_alpha: angular quadrature nodes.
        drho: radial resolution, default ``min(0.01, sqrt|t|/8)``.
    """
    f = np.asarray(g.check_field(f), dtype=complex)
    if not (_T_RANGE[0] <= abs(t) <= _T_RANGE[1]):
        raise ValueError(f"|t| must lie in [{_T_RANGE[0]}, {_T_RANGE[1]}], got {t}")
    if t < 0:
        return np.conj(apply_free_propagator(np.conj(f), -t, g, r_out, n_alpha, drho))
    r_out = g.r if r_out is None else np.atleast_1d(np.asarray(r_out, dtype=float))
    if not np.any(f):
        return np.zeros(r_out.shape, dtype=complex)
    support = _support_radius(f, g)
    if support > 0.75 * g.r_max:
        raise ValueError(
            f"field support reaches r = {support:.3f}, beyond 0.75 r_max = {0.75 * g.r_max:.3f}"
        )
    keep = g.r <= support + 4 * g.h
    rr = g.r[keep]
    spline = CubicSpline(np.concatenate([-rr[::-1], rr]), np.concatenate([f[keep][::-1], f[keep]]))

    if drho is None:
        drho = min(0.01, math.sqrt(t) / 8.0)
    rho_top = float(np.max(r_out)) + support
    table_r = np.arange(0.0, rho_top + 4 * drho, drho)
    scaled = _envelope(t, table_r) * np.exp(0.5 * table_r)
    env = CubicSpline(table_r, scaled)

    xa, wa = _gauss_nodes(n_alpha)
    omega = 1.0 / (4.0 * t)
    ch_s = math.cosh(support)
    out = np.empty(r_out.shape, dtype=complex)
    for k, x in enumerate(r_out):
        lo, hi = max(0.0, x - support), x + support
        w_lo, w_hi = lo * lo, hi * hi
        n_w = 2 * int(math.ceil((w_hi - w_lo) / (2.0 * hi * drho) / 2.0)) + 1
        n_w = max(n_w, 33)
        w = np.linspace(w_lo, w_hi, n_w)
        rho = np.sqrt(w)
        shx, chx = math.sinh(x), math.cosh(x)
        sh, chr_ = np.sinh(rho), np.cosh(rho)
        denom = shx * sh
        with np.errstate(divide="ignore", invalid="ignore"):
            cos_edge = np.where(denom > 0, (chx * chr_ - ch_s) / denom, -2.0)
        amax = np.arccos(np.clip(cos_edge, -1.0, 1.0))
        alpha = 0.5 * amax[:, None] * (xa[None, :] + 1.0)
        cosh_d = chx * chr_[:, None] - denom[:, None] * np.cos(alpha)
        dist = np.arccosh(np.maximum(cosh_d, 1.0))
        inside = dist <= support
        vals = np.where(inside, spline(np.minimum(dist, support)), 0.0)
        avg = amax * (vals @ wa)  # int_0^{2 pi} f dalpha = 2 int_0^{amax}
        sinhc = np.where(rho > 0, sh / np.where(rho > 0, rho, 1.0), 1.0)
        amp = env(rho) * np.exp(-0.5 * rho) * avg * 0.5 * sinhc
        out[k] = _filon(amp, w_lo, w[1] - w[0], omega)
    return PROPAGATOR_CONSTANT * np.exp(-0.25j * t) * t**-1.5 * out
