"""Acceptance suite: one test per exit criterion, each printing a PASS/FAIL
line with the measured runtime against the stated budget.

Run with  pytest tests/test_acceptance.py -v -s  to watch the lines appear.
All tolerances are stated inline; nothing is deferred to calibration.
"""

import time

import numpy as np
import pytest

from conftest import (J0_ZERO_SQ, J1_ZERO_SQ, P_FIXTURE_TOL, S_FIXTURE_TOL,
                      timed)
from oracles import pv_halfline_kernel, radial_profile
from scat2d.grids import AngularGrid, build_disk_grid
from scat2d.levinson import winding_number
from scat2d.operators import assemble_f0, assemble_gamma
from scat2d.potentials import factorize_potential
from scat2d.radial import count_bound_states_radial, critical_coupling_radial
from scat2d.smatrix import smatrix, sweep_smatrix
from scat2d.threshold import compute_projection_set
from scat2d.waveop import (LogEnergyGrid, MellinMultiplier, SpectralField,
                           dilation_multiplier_apply)

DECADES = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)


def report(num: int, ok: bool, detail: str, elapsed: float, budget: float):
    stamp = "PASS" if ok else "FAIL"
    print(f"\n[criterion {num}] {stamp}: {detail} "
          f"(runtime {elapsed:.1f}s, budget {budget:.0f}s)")
    assert ok, f"criterion {num}: {detail}"
    assert elapsed <= budget, f"criterion {num} exceeded runtime budget"


def test_criterion_1_free_case_exactness():
    t0 = time.perf_counter()
    pot = factorize_potential("gaussian", {}, 0.0, build_disk_grid(6.0, 32, 64))
    sweep = sweep_smatrix(pot, np.geomspace(1e-6, 1e2, 25), AngularGrid(64))
    worst = max(sm.s_minus_1_norm for sm in sweep)
    elapsed = time.perf_counter() - t0
    report(1, worst <= 1e-12, f"free sweep max ||S-1|| = {worst:.2e} <= 1e-12",
           elapsed, 10.0)


@pytest.fixture(scope="module")
def gauss_sweep(gauss1):
    pot, _ = gauss1
    return timed(sweep_smatrix, pot, np.geomspace(1e-6, 1e2, 25), AngularGrid(64))


def test_criterion_2_unitarity_on_gated_mesh(gauss1, gauss_sweep):
    pot, _ = gauss1
    t0 = time.perf_counter()
    # convergence gate: grid-independent representations of the assembled
    # operators move by <= 1e-6 under doubling of both node counts
    ang = AngularGrid(64)
    fine = pot.grid.refined(2)
    f = lambda g: np.exp(-0.55 * np.sum(g.nodes**2, axis=1))
    gate = 0.0
    for lam in (1e-4, 1.0):
        a = assemble_f0(lam, pot.grid, ang)
        b = assemble_f0(lam, fine, ang)
        gate = max(gate, np.max(np.abs((a @ a.adjoint()).matrix
                                       - (b @ b.adjoint()).matrix)))
        gate = max(gate, np.max(np.abs(a.apply(f(pot.grid)) - b.apply(f(fine)))))
    for j in (0, 1, 2):
        ga = assemble_gamma(j, pot.grid, ang).apply(f(pot.grid))
        gb = assemble_gamma(j, fine, ang).apply(f(fine))
        gate = max(gate, np.max(np.abs(ga - gb)))
    defect = max(sm.unitarity_defect for sm in gauss_sweep.value)
    elapsed = time.perf_counter() - t0 + gauss_sweep.elapsed
    ok = gate <= 1e-6 and defect <= 1e-6
    report(2, ok, f"gate {gate:.2e} <= 1e-6, max unitarity defect "
           f"{defect:.2e} <= 1e-6", elapsed, 120.0)


def test_criterion_3_low_energy_limit(gauss_sweep, s_fine_tune, s_fixture_fine):
    t0 = time.perf_counter()
    by_lam = {sm.lam: sm.s_minus_1_norm for sm in gauss_sweep.value}
    gvals = [by_lam[min(by_lam, key=lambda x: abs(np.log(x / lam)))]
             for lam in DECADES]
    ok_i = all(np.diff(gvals) < 0.0) and gvals[-1] <= 0.5 * gvals[0]

    pot, pset = s_fixture_fine
    assert pset.ranks["T2"] == 1 and pset.ranks["S3"] == 2
    ang = AngularGrid(32)
    svals = [smatrix(pot, lam, ang).s_minus_1_norm for lam in DECADES]
    ok_ii = all(np.diff(svals) < 0.0) and svals[-1] <= 0.5 * svals[0]
    elapsed = time.perf_counter() - t0 + s_fine_tune.elapsed
    detail = (f"generic {['%.3g' % v for v in gvals]}, "
              f"s-resonant/zero-bound fixture {['%.3g' % v for v in svals]}, "
              "both strictly decreasing with >= factor-2 drop")
    report(3, ok_i and ok_ii, detail, elapsed, 600.0)


def test_criterion_4_projection_identity_suite(p_fixture, s_fixture, b_fixture):
    t0 = time.perf_counter()
    ang = AngularGrid(32)
    worst_tight = 0.0   # gamma0 v Q and P S_j at 1e-10
    worst_loose = 0.0   # gamma0 v S_j, gamma1 v S3, gamma0 v M00 S3 at 1e-8
    for pot, ps in (p_fixture, s_fixture, b_fixture):
        g0 = assemble_gamma(0, pot.grid, ang).matrix
        g1 = assemble_gamma(1, pot.grid, ang).matrix
        v = np.diag(pot.v)
        worst_tight = max(worst_tight, np.linalg.norm(g0 @ v @ ps.Q.matrix, 2))
        for s in (ps.S1, ps.S2, ps.S3):
            worst_tight = max(worst_tight,
                              np.linalg.norm(ps.P.matrix @ s.matrix, 2))
            worst_loose = max(worst_loose, np.linalg.norm(g0 @ v @ s.matrix, 2))
        worst_loose = max(worst_loose,
                          np.linalg.norm(g1 @ v @ ps.S3.matrix, 2),
                          np.linalg.norm(g0 @ v @ ps.m00.matrix @ ps.S3.matrix, 2))
    elapsed = time.perf_counter() - t0
    ok = worst_tight <= 1e-10 and worst_loose <= 1e-8
    report(4, ok, f"max tight-identity norm {worst_tight:.2e} <= 1e-10, "
           f"max loose-identity norm {worst_loose:.2e} <= 1e-8", elapsed, 60.0)


def test_criterion_5_classifier_vs_oracle(tuned_base, p_fixture, s_fixture,
                                          p_report, s_report, sq_grid_fine,
                                          p_fine_tune, s_fixture_fine):
    t0 = time.perf_counter()
    checks = []
    gp, gs = tuned_base.value["p"], tuned_base.value["s"]
    checks.append(("g_p within 1e-2 of 5.7832", abs(gp - J0_ZERO_SQ) <= 1e-2))
    checks.append(("g_s within 1e-2 of 14.682", abs(gs - J1_ZERO_SQ) <= 1e-2))

    # rank bounds on the tuned fixtures and on 20 randomized ring draws
    rank_ok = True
    for _, ps in (p_fixture, s_fixture):
        rank_ok &= ps.ranks["T2"] <= 1 and ps.ranks["T3"] <= 2
    rng = np.random.default_rng(2024)
    for _ in range(20):
        params = {"a": rng.uniform(0.3, 0.7), "b": rng.uniform(1.0, 1.7),
                  "h": rng.uniform(0.2, 2.0)}
        g = rng.uniform(0.5, 20.0)
        pset = compute_projection_set(factorize_potential("ring", params, g),
                                      tol=1e-6)
        rank_ok &= pset.ranks["T2"] <= 1 and pset.ranks["T3"] <= 2
    checks.append(("rank(T2) <= 1 and rank(T3) <= 2 on all fixtures", rank_ok))

    exps_ok = abs(s_report.exponents["T2"][0].exponent) <= 0.1
    for fit in p_report.exponents["T3"]:
        exps_ok &= abs(fit.exponent + 1.0) <= 0.1
    for fit in s_report.exponents["S3"]:
        exps_ok &= fit.exponent <= -1.85
    checks.append(("decay exponents 0 / -1 / <= -1.85", exps_ok))

    # rank stability: doubled grid (re-tuned) and tolerance shifts x10
    pot_pf = factorize_potential("square_well", {"radius": 1.0},
                                 p_fine_tune.value, sq_grid_fine)
    ranks_pf = compute_projection_set(pot_pf, tol=P_FIXTURE_TOL).ranks
    stable = ranks_pf == p_fixture[1].ranks
    stable &= s_fixture_fine[1].ranks == s_fixture[1].ranks
    for tol in (P_FIXTURE_TOL / 10.0, P_FIXTURE_TOL * 10.0):
        stable &= compute_projection_set(p_fixture[0], tol=tol).ranks == ranks_pf
    for tol in (S_FIXTURE_TOL / 10.0, S_FIXTURE_TOL * 10.0):
        stable &= (compute_projection_set(s_fixture[0], tol=tol).ranks
                   == s_fixture[1].ranks)
    checks.append(("ranks stable under grid doubling and tol x10", stable))

    elapsed = (time.perf_counter() - t0 + tuned_base.elapsed
               + p_fine_tune.elapsed)
    ok = all(flag for _, flag in checks)
    detail = "; ".join(name for name, _ in checks) + (
        f" [g_p = {gp:.5f}, g_s = {gs:.5f}]")
    failed = [name for name, flag in checks if not flag]
    report(5, ok, detail if ok else f"failed: {failed}", elapsed, 900.0)


def test_criterion_6_levinson(levinson_square, levinson_gauss):
    sq, ga = levinson_square.value, levinson_gauss.value
    ok = True
    details = []
    for name, rep, n_want in (("square g=10", sq, 3), ("gaussian g=8", ga, 3)):
        w0, w1 = rep.windings[0].winding, rep.windings[1].winding
        ok &= rep.n_bound_fd == n_want and rep.n_bound_radial == n_want
        ok &= abs(w1 + n_want) <= 0.05
        ok &= abs(w1 - w0) <= 1e-2
        details.append(f"{name}: winding {w1:+.4f} vs -{n_want} "
                       f"(both counters {rep.n_bound_fd}/{rep.n_bound_radial}, "
                       f"|n1-n0| = {abs(w1 - w0):.2e})")
    elapsed = levinson_square.elapsed + levinson_gauss.elapsed
    report(6, ok, "; ".join(details), elapsed, 1200.0)


def test_criterion_7_wave_operator_formula(waveop_cmp):
    cmp = waveop_cmp.value
    ok = (cmp.relative_error <= 5e-2
          and cmp.isometry_defect_formula <= 2e-2
          and cmp.identity_defect_max <= 1e-10)
    detail = (f"formula vs split-step {cmp.relative_error:.2e} <= 5e-2, "
              f"isometry defect {cmp.isometry_defect_formula:.2e} <= 2e-2, "
              f"identity defect {cmp.identity_defect_max:.2e} <= 1e-10")
    report(7, ok, detail, waveop_cmp.elapsed, 600.0)


def test_criterion_8_mellin_kernel_pinning():
    t0 = time.perf_counter()
    grid = LogEnergyGrid(-6.0, 6.0, 512)
    ang = AngularGrid(8)
    errs = []
    for s0, width in ((0.3, 0.5), (-0.4, 0.7)):
        prof = np.exp(-0.5 * ((grid.s - s0) / width) ** 2).astype(complex)
        fld = SpectralField(grid, ang, np.repeat(prof[:, None], ang.m, axis=1))
        out = dilation_multiplier_apply(MellinMultiplier.tanh_half(), fld)
        r_eval = np.geomspace(0.3, 25.0, 60)
        got = radial_profile(out.values[:, 0], grid.s, r_eval)
        rho = np.linspace(1e-4, 60.0, 24001)
        want = pv_halfline_kernel(radial_profile(prof, grid.s, rho), rho, r_eval)
        errs.append(np.linalg.norm(got - want) / np.linalg.norm(want))
    elapsed = time.perf_counter() - t0
    ok = max(errs) <= 2e-2
    report(8, ok, f"tanh_half vs principal-value kernel: max rel dev "
           f"{max(errs):.3e} <= 2e-2", elapsed, 120.0)


def test_criterion_9_bound_state_creation():
    t0 = time.perf_counter()
    # clean single s-criticality (the square well degenerates l = 0 with
    # l = +-2 there, see test_levinson); the gaussian well separates them
    gstar = critical_coupling_radial("gaussian", {}, 0, (10.0, 12.5))
    lams = np.geomspace(1e-9, 60.0, int(np.ceil(18 * np.log10(60.0 / 1e-9))))
    ang = AngularGrid(64)
    winds = {}
    counts = {}
    for fac in (0.95, 1.05):
        pot = factorize_potential("gaussian", {}, fac * gstar,
                                  build_disk_grid(6.0, 32, 64))
        sweep = sweep_smatrix(pot, lams, ang)
        winds[fac] = winding_number(sweep, 1).winding
        counts[fac] = count_bound_states_radial("gaussian", {}, fac * gstar)
    delta = winds[1.05] - winds[0.95]
    elapsed = time.perf_counter() - t0
    ok = abs(delta + 1.0) <= 0.05 and counts[1.05] - counts[0.95] == 1
    report(9, ok, f"winding change across s-criticality g* = {gstar:.4f}: "
           f"{delta:+.4f} (target -1, counts {counts[0.95]} -> {counts[1.05]})",
           elapsed, 600.0)
