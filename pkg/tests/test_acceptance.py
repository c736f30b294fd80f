"""Acceptance gate: one test per stated criterion, at its stated tolerance.

Each test prints a `criterion N: PASS/FAIL` line (visible with -s or in the
captured output on failure).  Grid sizes follow the criteria: B=4096 where a
criterion pins it, B=1024 for the coupled-chain and LDGM experiments whose
anchors have coarser tolerances (see the module docstrings for the bias
analysis).  Criterion 6a asserts the literature anchor for the LDGM
second-fixed-point emergence verbatim; the anchor is not reproducible under
any reading of that ensemble (the companion anchors are), so 6a is an
expected, documented failure that reports the measured location.
"""

import math
import time

import numpy as np
import pytest

from delab import coupled as C
from delab import de as DE
from delab import measure as M
from delab import potential as P
from delab.channels import ChannelFamily
from conftest import random_measure
from oracles import BecLdpcOracle


def _verdict(name: str, ok: bool, detail: str) -> None:
    print(f"{name}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def oracle36(ldpc36):
    return BecLdpcOracle(ldpc36.lam.coeffs, ldpc36.rho.coeffs,
                         ldpc36.L.coeffs, ldpc36.R.coeffs)


def test_criterion_1_bec_oracle_equivalence(ldpc36, oracle36, grid_full):
    worst = 0.0
    t0 = time.time()
    for eps in (0.40, 0.42, 0.43):
        c = M.bec_measure(grid_full, eps)
        x = M.delta0(grid_full)
        expect = oracle36.trajectory(eps, 200)
        for step in range(200):
            x = DE.de_step(ldpc36, x, c)
            worst = max(worst, abs(x.atom0 - expect[step + 1]))
    elapsed = time.time() - t0
    _verdict("criterion 1", worst <= 1e-12 and elapsed < 1.0,
             f"max |atom0 - scalar| = {worst:.2e}, {elapsed:.2f}s")


def test_criterion_2_duality_rule(grid_full):
    rng = np.random.default_rng(2024)
    t0 = time.time()
    worst = 0.0
    for _ in range(100):
        x = random_measure(grid_full, rng)
        y = random_measure(grid_full, rng)
        res = abs(
            M.entropy(M.var_conv(x, y)) + M.entropy(M.check_conv(x, y))
            - M.entropy(x) - M.entropy(y)
        )
        worst = max(worst, res)
    elapsed = time.time() - t0
    _verdict("criterion 2", worst <= 1e-4 and elapsed < 120.0,
             f"max duality residual = {worst:.2e} over 100 pairs at B=4096, {elapsed:.0f}s")


def test_criterion_3_moment_multiplicativity(grid_full):
    rng = np.random.default_rng(2025)
    worst = 0.0
    for _ in range(100):
        x = random_measure(grid_full, rng)
        y = random_measure(grid_full, rng)
        xy = M.check_conv(x, y)
        mx = M.moments_upto(x, 10)
        my = M.moments_upto(y, 10)
        mxy = M.moments_upto(xy, 10)
        worst = max(worst, float(np.max(np.abs(mxy - mx * my))))
    _verdict("criterion 3", worst <= 1e-6,
             f"max |M_k(x*y) - M_k M_k| = {worst:.2e}, k<=10, 100 pairs at B=4096")


def test_criterion_4_bp_thresholds(ldpc36, grid_full):
    stop = DE.DeStop(tol_dh=1e-8, max_iter=2000)
    t0 = time.time()
    bsc = DE.bp_threshold(ldpc36, ChannelFamily("bsc", grid_full), tol_h=0.002,
                          bracket=(0.40, 0.44), stop=stop)
    t_bsc = time.time() - t0
    t0 = time.time()
    bec = DE.bp_threshold(ldpc36, ChannelFamily("bec", grid_full), tol_h=1e-4,
                          bracket=(0.42, 0.44), stop=DE.DeStop(1e-10, 20000))
    t_bec = time.time() - t0
    ok = (
        abs(bsc.h_mid - 0.416) <= 0.003 and t_bsc < 300.0
        and abs(bec.h_mid - 0.4294) <= 5e-4 and t_bec < 300.0
    )
    _verdict("criterion 4", ok,
             f"BSC {bsc.h_mid:.5f} ({t_bsc:.0f}s), BEC {bec.h_mid:.5f} ({t_bec:.0f}s)")


def test_criterion_5_potential_thresholds(ldpc36, grid_full):
    stop = DE.DeStop(tol_dh=1e-8, max_iter=2000)
    bsc = P.potential_threshold(ldpc36, ChannelFamily("bsc", grid_full),
                                estimator="both", tol_h=0.002,
                                bracket=(0.44, 0.50), stop=stop)
    bec = P.potential_threshold(ldpc36, ChannelFamily("bec", grid_full),
                                estimator="both", tol_h=2e-4,
                                bracket=(0.45, 0.52), stop=DE.DeStop(1e-11, 20000))
    ok = (
        abs(bsc.h_mid - 0.469) <= 0.004
        and abs(bec.h_mid - 0.4881) <= 1e-3
        and "estimator_discrepancy" not in bsc.flags
        and "estimator_discrepancy" not in bec.flags
    )
    _verdict("criterion 5", ok,
             f"BSC {bsc.h_mid:.5f} flags={bsc.flags}, BEC {bec.h_mid:.5f} flags={bec.flags}")


def test_criterion_6a_ldgm_second_fixed_point_emergence(ldgm_fig4, grid_mid):
    # Faithful to the stated anchor (0.4529 +- 0.005).  The measured
    # emergence of the forward/minimal fixed-point split sits near 0.31
    # under every reading of the ensemble polynomial that reproduces the
    # companion anchors; see the README and the bisection log below.
    stop = DE.DeStop(tol_dh=1e-9, max_iter=2000)
    t0 = time.time()
    rep = P.fixed_point_split(ldgm_fig4, ChannelFamily("bsc", grid_mid),
                              bracket=(0.25, 0.50), tol_h=0.002, stop=stop)
    elapsed = time.time() - t0
    ok = abs(rep.h_mid - 0.4529) <= 0.005 and not rep.flags
    _verdict("criterion 6a", ok,
             f"measured emergence {rep.h_mid:.5f} vs anchor 0.4529+-0.005 ({elapsed:.0f}s)")


def test_criterion_6b_ldgm_energy_gap_sign_change(ldgm_fig4, grid_mid):
    stop = DE.DeStop(tol_dh=1e-9, max_iter=2000)
    t0 = time.time()
    rep = P.gap_sign_change(ldgm_fig4, ChannelFamily("bsc", grid_mid),
                            bracket=(0.56, 0.62), tol_h=0.002, stop=stop)
    elapsed = time.time() - t0
    ok = abs(rep.h_mid - 0.5902) <= 0.006 and not rep.flags and elapsed < 900.0
    _verdict("criterion 6b", ok,
             f"gap sign change {rep.h_mid:.5f} vs anchor 0.5902+-0.006 ({elapsed:.0f}s)")


@pytest.fixture(scope="module")
def saturation_cells(ldpc36, grid_mid):
    fam = ChannelFamily("bsc", grid_mid)
    stop = DE.DeStop(tol_dh=1e-9, max_iter=4000)
    cells = {}
    for h in (0.46, 0.48):
        spec = C.CoupledSpec(ensemble=ldpc36, half_len=32, width=3)
        c = fam.density_from_entropy(h)
        t0 = time.time()
        prof, trace = C.coupled_fixed_point(
            spec, C.delta0_profile(spec, grid_mid), c, stop, early_h=1e-7
        )
        cells[h] = (prof, trace, time.time() - t0)
    return cells


@pytest.fixture(scope="module")
def sweep_rows(ldpc36, grid_mid):
    fam = ChannelFamily("bsc", grid_mid)
    return C.saturation_sweep(ldpc36, fam, Ns=[16], ws=[1, 2, 3, 4],
                              h_grid=[0.42, 0.46, 0.48],
                              stop=DE.DeStop(tol_dh=1e-9, max_iter=4000))


def test_criterion_7_threshold_saturation(saturation_cells, sweep_rows):
    prof46, trace46, t46 = saturation_cells[0.46]
    prof48, trace48, t48 = saturation_cells[0.48]
    ok_cells = (
        prof46.max_entropy() < 1e-6
        and prof48.max_entropy() > 1e-3
        and t46 < 600.0 and t48 < 600.0
    )
    # empirical coupled threshold per w: largest grid entropy that decoded
    emp = {}
    for w in (1, 2, 3, 4):
        decoded = [r.h for r in sweep_rows if r.w == w and r.converged_perfect]
        emp[w] = max(decoded) if decoded else 0.0
    nondecreasing = all(emp[w + 1] >= emp[w] for w in (1, 2, 3))
    beats_uncoupled = emp[2] > 0.416
    ok = ok_cells and nondecreasing and beats_uncoupled
    _verdict(
        "criterion 7", ok,
        f"N=32 w=3: maxH(0.46)={prof46.max_entropy():.1e} ({t46:.0f}s), "
        f"maxH(0.48)={prof48.max_entropy():.1e} ({t48:.0f}s); "
        f"empirical thresholds by w: {emp}",
    )


@pytest.fixture(scope="module")
def modified_fp_1024(ldpc36, grid_mid):
    fam = ChannelFamily("bsc", grid_mid)
    c = fam.density_from_entropy(0.48)
    spec = C.CoupledSpec(ensemble=ldpc36, half_len=8, width=3, saturate=True)
    prof, trace = C.coupled_fixed_point(
        spec, C.delta0_profile(spec, grid_mid), c, DE.DeStop(1e-10, 4000)
    )
    assert trace.status == "converged"
    return spec, prof, c


def test_criterion_8_lemma_level_checks(ldpc36, grid_full, modified_fp_1024):
    fam = ChannelFamily("bsc", grid_full)
    c = fam.density_from_entropy(0.44)
    trace = DE.de_fixed_point(ldpc36, M.delta0(grid_full), c, DE.DeStop(1e-9, 2000))
    fp = trace.terminal
    rng = np.random.default_rng(8)
    dirs = [(random_measure(grid_full, rng), random_measure(grid_full, rng))
            for _ in range(10)]
    stat = P.stationarity_residual(ldpc36, fp, c, dirs)
    area = abs(P.area_functional(3, 6, fp) + P.potential(ldpc36, fp, c).value)

    spec, prof, c_mod = modified_fp_1024
    ordering = all(
        M.is_degraded(prof[i], prof[i - 1], slack=1e-8)
        for i in range(1, spec.n_positions)
    )
    shift = C.shift_bound_check(spec, prof, c_mod, slack=1e-4)
    ok = stat <= 1e-5 and ordering and shift.holds and area <= 1e-4
    _verdict(
        "criterion 8", ok,
        f"stationarity {stat:.1e} (<=1e-5), spatial ordering {ordering}, "
        f"shift bound lhs={shift.lhs:.2e} rhs={shift.rhs:.2e} holds={shift.holds}, "
        f"|A+U| = {area:.1e} (<=1e-4)",
    )


def test_criterion_9_coupling_constant_and_sufficient_width(ldpc36, sweep_rows):
    K = ldpc36.derived_constants()["K"]
    ok_k = K == 435.0
    # theoretical sufficient width reported with every sweep row, and never
    # below the empirically sufficient width where the gap is positive+finite
    ok_emit = all(hasattr(r, "sufficient_w") for r in sweep_rows)
    ok_bound = True
    for h in {r.h for r in sweep_rows}:
        rows_h = [r for r in sweep_rows if r.h == h]
        suff = rows_h[0].sufficient_w
        if suff is None or suff == 0.0:
            continue  # gap nonpositive or infinite: no finite claim to check
        decoded_ws = [r.w for r in rows_h if r.converged_perfect]
        if decoded_ws:
            ok_bound &= suff >= min(decoded_ws)
    ok = ok_k and ok_emit and ok_bound
    _verdict("criterion 9", ok,
             f"K={K} (needs 435 exactly), sufficient-w emitted and bound loose: {ok_bound}")


def test_criterion_10_ldgm_saturation(ldgm_fig4, grid_mid):
    fam = ChannelFamily("bsc", grid_mid)
    stop = DE.DeStop(tol_dh=1e-9, max_iter=2000)
    c = fam.density_from_entropy(0.56)
    t0 = time.time()
    f0 = DE.minimal_fixed_point(ldgm_fig4, c, stop)
    spec = C.CoupledSpec(ensemble=ldgm_fig4, half_len=16, width=4)
    prof, trace = C.coupled_fixed_point(spec, C.delta0_profile(spec, grid_mid), c, stop)
    elapsed = time.time() - t0
    below = all(M.is_degraded(f0, x, slack=1e-6) for x in prof.positions)
    ok = trace.status == "converged" and below and elapsed < 900.0
    _verdict(
        "criterion 10", ok,
        f"every position at or below the minimal fixed point: {below} "
        f"(status={trace.status}, {elapsed:.0f}s)",
    )
