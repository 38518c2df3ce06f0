"""Spectral transform, Mellin multipliers, the N/B families, and the
time-domain propagator.  The convention-pinning kernel oracle and the full
formula-vs-propagation comparison are asserted in the acceptance suite."""

import numpy as np
import pytest

from oracles import pv_halfline_kernel, radial_profile
from scat2d.errors import (BoundaryContamination, GridMismatch, NoObstruction,
                           PResonancePresent, UnderResolved)
from scat2d.grids import AngularGrid, build_disk_grid
from scat2d.potentials import factorize_potential
from scat2d.waveop import (LogEnergyGrid, MellinMultiplier, SpectralField,
                           WaveOperatorAssembly, assemble_nb,
                           dilation_multiplier_apply, from_spectral,
                           gaussian_packet, spectral_transform,
                           waveop_apply_formula, waveop_timedomain)

ANG16 = AngularGrid(16)      # enough for radial/flat fields
ANG32 = AngularGrid(32)      # needed for directed packets (angular width ~ sigma_k / k)


@pytest.fixture(scope="module")
def packet():
    return gaussian_packet(256, 56.0, k0=(1.2, 0.0), sigma=4.0, window=(0.5, 4.0))


@pytest.fixture(scope="module")
def sgrid():
    return LogEnergyGrid(np.log(0.05), np.log(30.0), 96)


def test_window_mass_invariant(packet):
    assert packet.window_mass >= 0.99


def test_parseval(packet, sgrid):
    fld = spectral_transform(packet, sgrid, ANG32)
    assert abs(fld.norm() - packet.norm()) <= 1e-3


def test_gaussian_closed_form(sgrid):
    pk = gaussian_packet(256, 56.0, k0=(0.0, 0.0), sigma=1.0, window=(1e-3, 9.0))
    x = pk.coords
    pk.values = np.exp(-0.5 * (x[:, None] ** 2 + x[None, :] ** 2)).astype(complex)
    grid = LogEnergyGrid(np.log(0.05), np.log(6.0), 64)
    fld = spectral_transform(pk, grid, ANG16)
    want = 2.0**-0.5 * np.exp(-0.5 * grid.lams)
    assert np.max(np.abs(fld.values - want[:, None])) <= 1e-4


def test_h0_diagonalization(packet, sgrid):
    fld = spectral_transform(packet, sgrid, ANG32)
    lap = gaussian_packet(packet.n, packet.extent, (1.2, 0.0), 4.0)
    xi = 2.0 * np.pi * np.fft.fftfreq(packet.n, d=packet.h)
    k2 = xi[:, None] ** 2 + xi[None, :] ** 2
    lap.values = np.fft.ifft2(k2 * np.fft.fft2(packet.values))
    fld_lap = spectral_transform(lap, sgrid, ANG32)
    ref = fld.copy_with(sgrid.lams[:, None] * fld.values)
    dev = fld.copy_with(fld_lap.values - ref.values).norm() / ref.norm()
    assert dev <= 1e-3


def test_under_resolved_refusal(packet):
    grid = LogEnergyGrid(np.log(0.05), np.log(500.0), 32)
    with pytest.raises(UnderResolved):
        spectral_transform(packet, grid, ANG16)


def test_roundtrip_on_resolvable_packet():
    # the packet's spectral mass must sit well inside the energy window for
    # the inverse to be faithful; the residual is the reported roundtrip error
    pk = gaussian_packet(160, 40.0, k0=(1.1, 0.0), sigma=4.0, window=(0.05, 6.0))
    grid = LogEnergyGrid(np.log(0.05), np.log(6.0), 80)
    ang = AngularGrid(48)
    fld = spectral_transform(pk, grid, ang)
    back = from_spectral(fld, 160, 40.0)
    err = np.sqrt(np.sum(np.abs(back.values - pk.values) ** 2)
                  / np.sum(np.abs(pk.values) ** 2))
    assert err <= 2e-2


def test_multiplier_identity_and_half(packet, sgrid):
    fld = spectral_transform(packet, sgrid, ANG16)
    one = MellinMultiplier.custom(lambda s: np.ones_like(s))
    out = dilation_multiplier_apply(one, fld)
    assert np.max(np.abs(out.values - fld.values)) <= 1e-12
    assert MellinMultiplier.theta().samples(np.array([0.0]))[0] == 0.5


def test_builtin_symbols_bounded():
    sig = np.linspace(-40.0, 40.0, 4001)
    for mult in (MellinMultiplier.theta(), MellinMultiplier.theta_tilde(),
                 MellinMultiplier.tanh_half()):
        assert np.all(np.abs(mult.samples(sig)) <= 1.0 + 1e-12)


def test_tanh_half_equals_theta_by_generator_correspondence():
    # spatial A equals -2 A+ on the energy side, so the spatial multiplier
    # (1 + tanh(pi A/2))/2 and theta coincide as A+ symbols
    sig = np.linspace(-10.0, 10.0, 101)
    a = MellinMultiplier.tanh_half().samples(sig)
    b = MellinMultiplier.theta().samples(sig)
    assert np.allclose(a, b, atol=1e-15)


def test_multiplier_grid_mismatch(packet, sgrid):
    fld = spectral_transform(packet, sgrid, ANG16)
    bad = SpectralField(LogEnergyGrid(sgrid.s_min, sgrid.s_max, sgrid.n_s),
                        ANG16, fld.values.copy())
    bad.grid = sgrid  # still fine
    s = sgrid.s.copy()
    with pytest.raises(GridMismatch):
        SpectralField(LogEnergyGrid(0.0, 1.0, 7), ANG16, fld.values)


def test_commutator_defect_shrinks_under_refinement():
    # [theta(A+), f(L)] applied to a fixed smooth field: the discretization
    # converges under log-grid refinement (compact-commutator behaviour)
    def commutator_field(n_s):
        grid = LogEnergyGrid(-5.0, 5.0, n_s)
        prof = np.exp(-0.5 * (grid.s / 0.8) ** 2)
        fld = SpectralField(grid, ANG16,
                            np.repeat(prof[:, None], ANG16.m, axis=1).astype(complex))
        fvals = np.tanh(grid.s)[:, None]
        th = MellinMultiplier.theta()
        a = dilation_multiplier_apply(th, fld.copy_with(fvals * fld.values))
        b = fld.copy_with(fvals * dilation_multiplier_apply(th, fld).values)
        return grid, fld.copy_with(a.values - b.values)

    _, c1 = commutator_field(64)
    _, c2 = commutator_field(128)
    _, c3 = commutator_field(256)
    d12 = abs(c1.norm() - c2.norm())
    d23 = abs(c2.norm() - c3.norm())
    assert d23 < d12


def test_mellin_pinning_against_pv_kernel():
    # the tanh_half multiplier realizes the closed-form singular kernel on
    # radial functions (this is what pins the dual-variable sign convention)
    grid = LogEnergyGrid(-6.0, 6.0, 512)
    prof = np.exp(-0.5 * ((grid.s - 0.3) / 0.5) ** 2).astype(complex)
    fld = SpectralField(grid, ANG16, np.repeat(prof[:, None], ANG16.m, axis=1))
    out = dilation_multiplier_apply(MellinMultiplier.tanh_half(), fld)
    r_eval = np.geomspace(0.3, 25.0, 60)
    got = radial_profile(out.values[:, 0], grid.s, r_eval)
    rho = np.linspace(1e-4, 60.0, 24001)
    psi_rho = radial_profile(prof, grid.s, rho)
    want = pv_halfline_kernel(psi_rho, rho, r_eval)
    err = np.linalg.norm(got - want) / np.linalg.norm(want)
    assert err <= 2e-2


# --- N, Nt, B, Bt families ----------------------------------------------------

def test_generic_case_tilde_families_vanish(gauss1):
    pot, pset = gauss1
    nb = assemble_nb(pot, pset, 0.5, ANG16)
    assert np.all(nb.ntilde == 0.0)
    assert np.all(nb.btilde == 0.0)
    assert nb.identity_defect <= 1e-10


def test_zero_bound_fixture_tilde_families(b_fixture):
    pot, pset = b_fixture
    norms = []
    for lam in (1e-2, 1e-3, 1e-4, 1e-5):
        nb = assemble_nb(pot, pset, lam, ANG16)
        assert nb.identity_defect <= 1e-10
        norms.append(np.linalg.norm(nb.ntilde, 2))
    assert norms[0] > 0.0
    assert all(np.diff(norms) < 0.0)       # ||Nt|| decreases toward zero energy


def test_p_resonant_fixture_refused(p_fixture):
    pot, pset = p_fixture
    with pytest.raises(PResonancePresent):
        assemble_nb(pot, pset, 0.1, ANG16)


def test_free_formula_is_identity(sgrid):
    pot = factorize_potential("gaussian", {}, 0.0, build_disk_grid(6.0, 12, 16))
    from scat2d.threshold import compute_projection_set
    pset = compute_projection_set(pot, tol=1e-6)
    prof = np.exp(-0.5 * ((sgrid.s - 0.2) / 0.5) ** 2).astype(complex)
    fld = SpectralField(sgrid, ANG16, np.repeat(prof[:, None], ANG16.m, axis=1))
    out, _ = waveop_apply_formula(pot, pset, fld)
    assert np.max(np.abs(out.values - fld.values)) <= 1e-12


# --- time-domain oracle ---------------------------------------------------------

def test_timedomain_free_packet_unchanged(packet):
    pot = factorize_potential("gaussian", {}, 0.0, build_disk_grid(6.0, 12, 16))
    out = waveop_timedomain(pot, packet, T=2.0, dt=0.02)
    assert np.max(np.abs(out.values - packet.values)) <= 1e-10


def test_timedomain_norm_conserved(packet):
    pot = factorize_potential("gaussian", {}, 1.0, build_disk_grid(6.0, 12, 16))
    out = waveop_timedomain(pot, packet, T=3.0, dt=0.01)
    assert abs(out.norm() - packet.norm()) <= 1e-8


def test_timedomain_boundary_contamination():
    pk = gaussian_packet(96, 18.0, k0=(1.5, 0.0), sigma=2.5, window=(0.5, 4.0))
    pot = factorize_potential("gaussian", {}, 1.0, build_disk_grid(6.0, 12, 16))
    with pytest.raises(BoundaryContamination):
        waveop_timedomain(pot, pk, T=6.0, dt=0.02)
