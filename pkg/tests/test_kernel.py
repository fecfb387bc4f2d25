import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypsmap.grid import build_grid, build_operator, l2_norm
from hypsmap.kernel import (
    KernelQuadratureError,
    _filon_weights,
    apply_free_propagator,
    bound_rhs,
    contour_integral,
    contour_kernel,
    decay_fit,
    free_kernel,
    oscillatory_bound_ratio,
    oscillatory_integral,
    regime_of,
)


def test_conjugation_symmetry():
    a, b = free_kernel(0.3, 1.0), free_kernel(-0.3, 1.0)
    assert abs(a.value - b.value.conjugate()) <= a.est_error + 1e-15


@pytest.mark.parametrize(
    "t, rho",
    [(1e-3, 0.0), (1e-3, 5.0), (0.05, 0.3), (0.5, 2.0), (1.0, 1.0), (7.0, 0.0), (30.0, 10.0), (1e3, 1.0), (0.2, 50.0)],
)
def test_two_zone_matches_contour_route(t, rho):
    two_zone = free_kernel(t, rho).value
    assert abs(two_zone - contour_kernel(t, rho)) <= 1e-7 * abs(two_zone)


@pytest.mark.parametrize("t, r, a", [(0.05, 3.0, 4.0), (0.5, 0.2, 1.0), (4.0, 1.0, 2.0)])
def test_shifted_integral_matches_contour(t, r, a):
    val, err = oscillatory_integral(t, r, a)
    ref = contour_integral(t, r, a)
    assert abs(val - ref) <= 1e-7 * abs(ref)
    assert err < 1e-6 * abs(ref)


def test_ibp_count_does_not_change_value():
    v0, _ = oscillatory_integral(0.5, 1.0, 0.0, n_ibp=0)
    v2, _ = oscillatory_integral(0.5, 1.0, 0.0, n_ibp=2)
    assert abs(v0 - v2) < 1e-8 * abs(v0)


def test_argument_checks():
    for t, rho in ((0.0, 1.0), (1e-4, 1.0), (2e3, 1.0), (1.0, -0.1), (1.0, 51.0)):
        with pytest.raises(ValueError):
            free_kernel(t, rho)
    with pytest.raises(ValueError):
        oscillatory_integral(1.0, 0.0, 1.0)


def test_error_carries_partial_value():
    with pytest.raises(KernelQuadratureError) as info:
        free_kernel(0.3, 1.0, max_rel_error=1e-300)
    assert abs(info.value.partial - free_kernel(0.3, 1.0).value) < 1e-8
    assert info.value.est_error > 0


def test_decay_fit_exact_power_law():
    ts = np.array([2.0, 4.0, 8.0, 16.0, 32.0])
    fit = decay_fit(ts, ts**-1.5)
    assert fit.slope == pytest.approx(-1.5, abs=1e-12)
    assert fit.half_width < 1e-12


def test_decay_fit_rejects_degenerate():
    with pytest.raises(ValueError):
        decay_fit([1, 2, 4], [1, 1, 1])
    with pytest.raises(ValueError):
        decay_fit([1, 2, 3, 4], [1, 1, 1, 1])
    with pytest.raises(ValueError):
        decay_fit([1, 2, 4, 8], [1, 1, 0, 1])


def test_regimes_and_bound():
    assert regime_of(0.1, 1.0) == "inner"
    assert regime_of(0.6, 1.0) == "outer"
    assert regime_of(0.6, 1.0, "inverse") is None
    assert regime_of(1.0, 1.0, "inverse") == "outer"
    assert bound_rhs(1.0, 0.0, 4.0, "inner") == 2.0
    assert bound_rhs(1.0, 1.0, 1.0, "outer") == pytest.approx(math.sqrt(2.0 / math.sinh(1.0)))
    with pytest.raises(ValueError):
        oscillatory_bound_ratio(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        oscillatory_bound_ratio(0.6, 1.0, 1.0, threshold="inverse")


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@pytest.mark.parametrize("theta", [0.0, 1e-3, 0.0499, 0.0501, 0.7, 5.0])
def test_filon_moments_against_quadrature(theta):
    from scipy.integrate import quad

    got = _filon_weights(theta)
    for k, m in enumerate(got):
        re = quad(lambda x: x**k * np.cos(theta * x), -1, 1, epsabs=1e-15, limit=200)[0]
        im = quad(lambda x: x**k * np.sin(theta * x), -1, 1, epsabs=1e-15, limit=200)[0]
        assert abs(m - complex(re, im)) < 5e-12  # closed form loses ~eps/theta^3 near the switch


def test_propagator_against_discrete_exponential():
    from scipy.linalg import expm

    g = build_grid(512, 12.0)
    f = np.exp(-g.r**2)
    exact = expm(0.5j * build_operator(g).dense()) @ f
    idx = np.arange(0, 256, 25)
    kern = apply_free_propagator(f, 0.5, g, g.r[idx])
    assert np.max(np.abs(kern - exact[idx])) < 1e-4


def test_propagator_time_reversal():
    g = build_grid(1024, 16.0)
    f = np.exp(-g.r**2) * (1 + 0.5j)
    x = g.r[::100]
    fwd = apply_free_propagator(f, 0.2, g, x)
    back = apply_free_propagator(np.conj(f), -0.2, g, x)
    assert np.allclose(fwd, np.conj(back), atol=1e-14)


def test_propagator_rejects_wide_support():
    g = build_grid(256, 8.0)
    with pytest.raises(ValueError):
        apply_free_propagator(np.ones(g.n_points), 0.1, g)


@settings(max_examples=12, deadline=None)
@given(st.floats(0.01, 100.0), st.floats(0.0, 20.0))
def test_symmetry_property(t, rho):
    a, b = free_kernel(t, rho), free_kernel(-t, rho)
    assert abs(a.value - b.value.conjugate()) <= 2 * a.est_error + 1e-14 * abs(a.value)


@settings(max_examples=12, deadline=None)
@given(st.floats(0.01, 100.0), st.floats(0.0, 20.0))
def test_kernel_below_large_time_envelope(t, rho):
    # |I(t, rho, 0)| is bounded uniformly in t, so |K| t^{3/2} stays below the t -> inf limit
    k = abs(free_kernel(t, rho).value) * t**1.5
    assert k <= abs(free_kernel(1e3, rho).value) * 1e3**1.5 * 1.001


@pytest.mark.parametrize("r, a", [(2.0, 0.0), (1.0, 1.0), (3.0, 0.5)])
def test_bound_side_grows_like_sqrt_t(r, a):
    lhs = [oscillatory_bound_ratio(r, a, t).lhs for t in (0.1, 0.4)]
    assert 1.8 < lhs[1] / lhs[0] < 2.2


@pytest.mark.parametrize("t, rho", [(0.3, 1.0), (5.0, 3.0), (50.0, 1.0)])
def test_tighter_tolerance_within_error_estimate(t, rho):
    a, b = free_kernel(t, rho, 1e-10), free_kernel(t, rho, 5e-11)
    assert abs(a.value - b.value) <= a.est_error + 1e-15 * abs(a.value)


def test_propagator_identity_and_norm():
    g = build_grid(400, 12.0)
    f = np.exp(-(g.r**2)) + 0j
    near = apply_free_propagator(f, 1e-3, g)
    assert l2_norm(near - f, g) < 0.02 * l2_norm(f, g)
    for t in (0.1, 0.5):
        assert abs(l2_norm(apply_free_propagator(f, t, g), g) / l2_norm(f, g) - 1) < 0.01
