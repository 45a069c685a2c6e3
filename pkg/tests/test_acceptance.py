"""Acceptance gate: eight criteria at their stated tolerances.

Each test records its measured values with `record`, and the terminal
summary prints one PASS/FAIL line per criterion.  Parts that do not reach
the stated bound are kept at that bound and marked as strict expected
failures, so they show up as FAIL in the summary instead of being loosened.
"""
import numpy as np
import pytest

from conftest import record
from vortexlab.evolution import decay_report, elliptic_solve, rel_l2, timestep_oracle
from vortexlab.greens import longrange_green, step_bvp_green, step_bvp_richardson, step_green
from vortexlab.greens import verify_green_bound
from vortexlab.oracle import k1_gamma
from vortexlab.sdf import (build_initial_data, compact_bump, depletion_fit, gaussian, jump_check,
                           limit_gamma, pv_residual)
from vortexlab.spectrum import assemble_Lk, lap_coercivity, spectrum_report

MU2 = np.sqrt(12.0)


# 1. identities -------------------------------------------------------------------

def test_criterion_1_identities(profile, rng):
    v = rng.uniform(-15.0, 15.0, 1000)
    B, Bp, Bpp, D = profile.suite(v)
    res_v = float(np.max(np.abs(2 * Bp + Bpp - np.exp(2 * v) * D)))
    r = np.exp(rng.uniform(-12.0, 12.0, 1000))
    res_r = float(np.max(np.abs(profile.U_prime(r) + profile.U(r) / r - profile.omega(r))))
    b0 = float(profile.b(0.0))
    ok = res_v < 1e-10 and res_r < 1e-10 and abs(b0 - 0.0625) <= 1e-12
    record(1, "identities", ok, f"v-form {res_v:.1e}, r-form {res_r:.1e}, b(0) = {b0!r}")
    assert ok


# 2. |k| = 1 explicit formula ------------------------------------------------------------

@pytest.fixture(scope="module")
def data_k1(profile):
    return build_initial_data(1, gaussian(0.0, 1.0), profile=profile)


@pytest.mark.parametrize("w", [-6.0, -2.0, 0.0, 2.0])
def test_criterion_2_k1_closed_form(data_k1, w):
    L = limit_gamma(1, w, data_k1, eps0=1e-3 * np.exp(-2 * abs(w)), levels=3, h=1.0 / 64)
    ref = k1_gamma(L.v, w, data_k1)
    m = (np.abs(L.v) <= 8.0) & (np.abs(L.v - w) >= 0.1)
    err = float(np.linalg.norm(L.gamma_limit[m] - ref[m]) / np.linalg.norm(ref[m]))
    record(2, f"w = {w:g}", err < 1e-3, f"rel-L2 {err:.2e} (< 1e-3)")
    assert err < 1e-3


# 3. Green's bounds -------------------------------------------------------------------

@pytest.fixture(scope="module")
def green_ratios():
    out = {}
    for k in (1, 2, 3, 4):
        vals = []
        for w in (-20.0, -12.0):
            rep = verify_green_bound(longrange_green(k, w, h=1.0 / 64))
            vals.append(max(rep["max_ratio_G"], rep["max_ratio_dG"]))
        out[k] = vals
    return out


_GREEN_XFAIL = pytest.mark.xfail(strict=True, reason="measured constant exceeds 10 for |k| <= 2")


@pytest.mark.parametrize("k", [pytest.param(1, marks=_GREEN_XFAIL),
                               pytest.param(2, marks=_GREEN_XFAIL), 3, 4])
def test_criterion_3_green_bound(green_ratios, k):
    vals = green_ratios[k]
    c = max(vals)
    spread = abs(vals[0] - vals[1]) / c
    ok = c <= 10.0
    record(3, f"k = {k} bound", ok,
           f"max ratio {c:.2f} (<= 10), w = -20 vs -12 differ by {100 * spread:.1f}%")
    assert spread < 0.05
    assert c <= 10.0


def test_criterion_3_step_kernel_vs_bvp():
    k, A, A2, rho = 2, -5.0, 0.0, -2.5
    errs = []
    for h in (1.0 / 32, 1.0 / 64, 1.0 / 128):
        grid, col = step_bvp_green(k, A, A2, rho, h)
        errs.append(float(np.max(np.abs(col - step_green(k, A, A2, grid.v, rho)))))
    grid, col = step_bvp_richardson(k, A, A2, rho, 1.0 / 64)
    agree = float(np.max(np.abs(col - step_green(k, A, A2, grid.v, rho))))
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    ok = agree < 1e-6 and all(abs(r / 4.0 - 1.0) < 0.05 for r in ratios)
    record(3, "step kernel vs BVP", ok,
           f"agreement {agree:.1e} at h = 1/64 (< 1e-6), reduction {ratios[0]:.2f}, {ratios[1]:.2f}")
    assert ok


# 4. depletion exponent -------------------------------------------------------------

def test_criterion_4_theta_left_tail(profile):
    data = build_initial_data(2, compact_bump(-16.0, 1.0), profile=profile)
    L = limit_gamma(2, -14.0, data, h=1.0 / 64)
    e = depletion_fit(L)
    ok = 0.9 * MU2 <= e <= 1.1 * MU2 and e > 2.0
    record(4, "Theta_2(., -14)", ok, f"exponent {e:.4f} in [{0.9 * MU2:.2f}, {1.1 * MU2:.2f}]")
    assert ok


def test_criterion_4_local_part(evolution_k2_right):
    rep = decay_report(evolution_k2_right, left=(-10.0, -4.0))
    ex = rep["F1_left_exponent"]
    ok = all(0.9 * MU2 <= e <= 1.1 * MU2 and e > 2.0 for e in ex)
    record(4, "F1_{2,v*}, v* in [-10, -4]", ok,
           f"exponents {min(ex):.3f}..{max(ex):.3f} over t = {rep['times']}")
    assert ok


# 5. spectrum ------------------------------------------------------------------

@pytest.mark.parametrize("k", [2, 3])
def test_criterion_5_no_outliers(k):
    a = spectrum_report(assemble_Lk(k))
    b = spectrum_report(assemble_Lk(k, domain=(-24.0, 24.0)))
    ok = a["n_outliers"] == 0 and b["n_outliers"] == 0
    record(5, f"k = {k}", ok, f"outliers {a['n_outliers']} / {b['n_outliers']} (doubled domain), "
           f"range [{a['min']:.2e}, {a['max']:.6f}]")
    assert ok


def test_criterion_5_embedded_eigenvalue():
    rep = spectrum_report(assemble_Lk(1))
    lam, al = rep["aligned_eigenvalue"], rep["alignment"]
    ok = abs(lam) < 1e-4 and al > 0.999 and rep["n_aligned"] == 1
    record(5, "k = 1", ok, f"eigenvalue {lam:.2e}, alignment {al:.6f}, "
           f"{rep['n_aligned']} aligned eigenvector")
    assert ok


# 6. limiting absorption ----------------------------------------------------------

DECADES = (1e-3, 1e-4, 1e-5)


def _lap_sweep(k, w, regime=None):
    return [lap_coercivity(k, 1, w, d * np.exp(-2 * abs(w)), regime=regime)["sigma_min"]
            for d in DECADES]


def _lap_ok(vals):
    var = max(abs(b / a - 1.0) for a, b in zip(vals[:-1], vals[1:]))
    return min(vals) >= 0.05 and var < 0.2, var


@pytest.mark.parametrize("k,w", [(2, 0.0), (2, 2.0), (4, 0.0), (4, 2.0)])
def test_criterion_6_T(k, w):
    vals = _lap_sweep(k, w)
    ok, var = _lap_ok(vals)
    record(6, f"T k = {k}, w = {w:g}", ok,
           "sigma_min " + ", ".join(f"{x:.4f}" for x in vals) + f", max change {100 * var:.1f}%")
    assert ok


def test_criterion_6_S():
    vals = _lap_sweep(2, -14.0, regime="S")
    ok, var = _lap_ok(vals)
    record(6, "S k = 2, w = -14", ok,
           "sigma_min " + ", ".join(f"{x:.4f}" for x in vals) + f", max change {100 * var:.1f}%")
    assert ok


# 7. evolution -------------------------------------------------------------------

def test_criterion_7_completeness(evolution_k2, data_k2):
    v = evolution_k2.v
    ref = elliptic_solve(2, v, -np.exp(2 * v) * data_k2.f0(v))
    err = rel_l2(evolution_k2.phi[0], ref, v)
    record(7, "t = 0 reconstruction", err < 1e-2, f"rel-L2 {err:.2e} (< 1e-2)")
    assert err < 1e-2


def test_criterion_7_timestep(evolution_k2, data_k2):
    v = evolution_k2.v
    j = evolution_k2.times.index(10.0)
    ts = timestep_oracle(2, data_k2, 10.0, 0.05, v=v, times=[10.0])
    e_phi = rel_l2(evolution_k2.phi[j], ts.phi[0], v)
    e_f = rel_l2(evolution_k2.f[j], ts.f[0], v)
    ok = e_phi < 1e-2 and e_f < 1e-2
    record(7, "t = 10 vs timestep", ok, f"phi {e_phi:.2e}, f {e_f:.2e} (< 1e-2)")
    assert ok


@pytest.mark.xfail(strict=True, reason="<t>||F2|| still grows between t = 4 and t = 32")
def test_criterion_7_nonlocal_decay(evolution_k2):
    rep = decay_report(evolution_k2)
    ratios = {vs: e["ratio_last_to_t4"] for vs, e in rep["F2_scaled"].items()}
    ok = all(r <= 1.5 for r in ratios.values())
    record(7, "<t>||F2|| at t = 32 / t = 4", ok,
           ", ".join(f"v* = {vs:g}: {r:.2f}" for vs, r in ratios.items()) + " (<= 1.5)")
    assert ok


@pytest.mark.xfail(strict=True, reason="weak proxy decays only after t ~ 64 at this data")
def test_criterion_7_weak_proxy(evolution_k2):
    rep = decay_report(evolution_k2)
    r = rep["weak_ratio"]
    record(7, "weak proxy t = 32 / t = 0", r < 0.2, f"{r:.3f} (< 0.2)")
    assert r < 0.2


# 8. jump and PV -------------------------------------------------------------------

@pytest.fixture(scope="module")
def jump_pv_slices(data_k2):
    return [limit_gamma(2, 0.0, data_k2, h=h) for h in (1.0 / 32, 1.0 / 64)]


def test_criterion_8_jump(jump_pv_slices, data_k2):
    res = [jump_check(s, data_k2) for s in jump_pv_slices]
    ok = res[-1] < 0.05 and res[1] < res[0]
    record(8, "derivative jump", ok, f"{100 * res[0]:.2f}% -> {100 * res[1]:.2f}% (< 5%)")
    assert ok


def test_criterion_8_pv(jump_pv_slices, data_k2):
    res = [pv_residual(s, data_k2) for s in jump_pv_slices]
    ok = res[-1] < 1e-3 and res[1] < res[0]
    record(8, "PV residual", ok, f"{res[0]:.1e} -> {res[1]:.1e} (< 1e-3 of max|Theta|)")
    assert ok
