import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypsmap.gauge import (
    a0_from_psi,
    a0_from_psi12,
    a2_from_psi,
    boundary_frame,
    build_frame,
    coulomb_residual,
    energy_identity_gap,
    FrameError,
    gauge_transform,
    GaugeFields,
    psi0,
)
from hypsmap.grid import build_grid, interior_mask, radial_l2_norm
from hypsmap.maps import MapProfile, bump_map, energy, normalize, q_lambda, schroedinger_rhs

SMALL = build_grid(1024, 16.0)


def test_frame_orthonormal_and_coulomb(grid):
    u = bump_map(grid, 0.5, 1.5)
    f = build_frame(u)
    assert f.orthonormality_defect(u) < 1e-12
    assert np.max(np.abs(coulomb_residual(u, f))[interior_mask(grid, 0.5)]) < 1e-5


def test_boundary_frame_at_north():
    v, w = boundary_frame(np.array([0.0, 0.0, 1.0]))
    assert np.allclose(v, [1, 0, 0]) and np.allclose(w, [0, 1, 0])


def test_boundary_frame_rejects_south():
    with pytest.raises(FrameError):
        boundary_frame(np.array([0.0, 0.0, -1.0]))


def test_soliton_has_vanishing_psi_plus(grid):
    for lam in (0.3, 1.0, 2.0):
        _, gf = gauge_transform(q_lambda(lam, grid))
        assert np.max(np.abs(gf.psi_plus)) < 1e-8
        assert radial_l2_norm(gf.psi_minus, grid) > 0.5


@pytest.mark.parametrize("lam", [0.25, 0.5, 1.0, 2.0])
def test_signed_identity_for_solitons(grid, lam):
    u = q_lambda(lam, grid)
    gap = energy_identity_gap(u, gauge_transform(u)[1])
    assert abs(gap["gap_minus"]) <= 1e-5 * gap["energy"] * 10
    assert abs(gap["gap_plus"]) <= 1e-5 * gap["energy"]


def test_identity_for_bump_maps(grid):
    for amp, tw in ((0.2, 0.0), (0.5, 1.0), (0.8, -2.0)):
        u = bump_map(grid, amp, tw)
        gap = energy_identity_gap(u, gauge_transform(u)[1])
        assert gap["boundary_jump"] == pytest.approx(0.0, abs=1e-14)
        assert abs(gap["gap_plus"]) <= 1e-5 * gap["energy"]
        assert abs(gap["gap_minus"]) <= 1e-5 * gap["energy"]


def test_a2_formula_matches_u3():
    errs = []
    for n in (2048, 4096):
        g = build_grid(n, 20.0)
        u = bump_map(g, 0.6, 1.0)
        _, gf = gauge_transform(u)
        errs.append(np.max(np.abs(a2_from_psi(gf.psi_plus, gf.psi_minus, g) - u.u[:, 2])))
    assert errs[1] < 5e-6
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_pair_conservation(grid):
    _, gf = gauge_transform(bump_map(grid, 0.6, 1.0))
    assert gf.conservation_defect() < 1e-12


def test_a0_two_forms_agree(grid):
    _, gf = gauge_transform(bump_map(grid, 0.6, 1.0))
    assert np.max(np.abs(a0_from_psi(gf) - a0_from_psi12(gf))) < 1e-12


def test_from_psi_roundtrip_fields(grid):
    _, gf = gauge_transform(bump_map(grid, 0.3, 1.0))
    again = GaugeFields.from_psi(gf.psi_plus, gf.psi_minus, grid)
    assert np.max(np.abs(again.a2 - gf.a2)) < 1e-6
    assert np.allclose(again.psi1, 0.5 * (gf.psi_plus + gf.psi_minus))


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 0.8), st.floats(-2.0, 2.0), st.floats(0.0, 2 * np.pi))
def test_moduli_invariant_under_target_rotation(amp, twist, alpha):
    u = bump_map(SMALL, amp, twist)
    c, s = np.cos(alpha), np.sin(alpha)
    rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    v = MapProfile(SMALL, u.u @ rot.T)
    _, a = gauge_transform(u)
    _, b = gauge_transform(v)
    assert np.max(np.abs(np.abs(a.psi_plus) - np.abs(b.psi_plus))) < 1e-9
    assert np.max(np.abs(np.abs(a.psi_minus) - np.abs(b.psi_minus))) < 1e-9


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 0.8), st.floats(-2.0, 2.0))
def test_energy_identity_holds_on_family(amp, twist):
    u = bump_map(SMALL, amp, twist)
    _, gf = gauge_transform(u)
    assert np.pi * radial_l2_norm(gf.psi_plus, SMALL) ** 2 == pytest.approx(energy(u), rel=1e-4)


def test_north_pole_map_has_standard_frame():
    g = build_grid(512, 10.0)
    u = normalize(np.tile([0.0, 0.0, 1.0], (512, 1)), g)
    f, gf = gauge_transform(u)
    assert np.array_equal(f.v, np.tile([1.0, 0.0, 0.0], (512, 1)))
    assert np.array_equal(f.w, np.tile([0.0, 1.0, 0.0], (512, 1)))
    assert not np.any(gf.psi_plus) and not np.any(gf.psi_minus)
    assert np.all(gf.a2 == 1.0) and not np.any(gf.a0) and not np.any(psi0(gf))


def test_psi2_modulus_is_horizontal_part(grid):
    u = bump_map(grid, 0.4)
    _, gf = gauge_transform(u)
    assert np.max(np.abs(np.abs(gf.psi2) ** 2 - (u.u[:, 0] ** 2 + u.u[:, 1] ** 2))) < 1e-10


def test_coulomb_residual_second_order():
    sups = []
    for n in (1024, 2048):
        g = build_grid(n, 20.0)
        u = q_lambda(0.5, g)
        sups.append(np.max(np.abs(coulomb_residual(u, build_frame(u)))[interior_mask(g, 0.5, 1.0)]))
    assert sups[1] < 1e-6 or 3.5 < sups[0] / sups[1] < 4.5


def test_a0_vanishes_beyond_support(grid):
    r = grid.r
    p = np.where(r < 3.0, 0.2 * r * (3.0 - r) ** 3, 0.0) + 0j
    gf = GaugeFields.from_psi(p, 0.5 * p, grid)
    assert not np.any(gf.a0[r > 3.0])
    assert np.any(gf.a0[r < 3.0])


def test_equal_moduli_give_a2_one(grid):
    p = grid.r**2 * np.exp(-(grid.r**2)) + 0j
    assert np.max(np.abs(a2_from_psi(p, 1j * p, grid) - 1.0)) < 1e-15


def test_psi0_matches_frame_coefficients_of_flow():
    sups = []
    for n in (1024, 2048):
        g = build_grid(n, 20.0)
        u = bump_map(g, 0.4)
        f, gf = gauge_transform(u)
        xi = schroedinger_rhs(u).xi
        coeff = np.einsum("ij,ij->i", xi, f.v) + 1j * np.einsum("ij,ij->i", xi, f.w)
        sups.append(np.max(np.abs(psi0(gf) - coeff)[interior_mask(g, 0.5, 2.0)]))
    assert sups[1] < 1e-4
    assert 3.5 < sups[0] / sups[1] < 4.5


def test_psi0_of_soliton_is_discretization_error():
    sups = []
    for n in (1024, 2048):
        g = build_grid(n, 20.0)
        sups.append(np.max(np.abs(psi0(gauge_transform(q_lambda(0.5, g))[1]))[interior_mask(g, 0.5, 2.0)]))
    assert sups[1] < 1e-5
    assert 3.5 < sups[0] / sups[1] < 4.5
