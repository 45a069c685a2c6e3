import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vortexlab.greens import (Grid, GreenKernel, apply_fd, fd_green, free_green, free_green_r,
                              longrange_green, potential_Vw, step_bvp_green, step_bvp_richardson,
                              step_green, verify_green_bound)
from vortexlab.norms import WaveSpec


def test_grid_validation():
    g = Grid.span(-1.0, 1.0, 0.25)
    assert g.n == 9 and g.v_max == pytest.approx(1.0)
    with pytest.raises(ValueError):
        Grid.span(0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        Grid.span(1.0, 0.0, 0.1)


def test_free_kernel_values():
    assert free_green(1, 0.3, 0.3) == 0.5
    assert free_green(2, 1.0, 0.0) == pytest.approx(np.exp(-2.0) / 4.0, rel=1e-15)
    assert free_green(-2, 0.0, 1.0) == free_green(2, 0.0, 1.0)
    with pytest.raises(ValueError):
        free_green(0, 0.0, 0.0)


@given(k=st.integers(1, 6), v=st.floats(-5, 5), rho=st.floats(-5, 5))
def test_free_kernel_radial_form(k, v, rho):
    # the radial kernel carries the Jacobian rho of d rho / rho
    r, s = np.exp(v), np.exp(rho)
    assert free_green_r(k, r, s) == pytest.approx(s * free_green(k, v, rho), rel=1e-12)


def test_free_kernel_discrete_delta():
    # the 3-point stencil of k^2 - d^2 applied to a sampled column gives
    # delta/h up to O(h^2)
    k = 2
    errs = []
    for h in (1.0 / 16, 1.0 / 32, 1.0 / 64):
        v = h * np.arange(-200, 201)
        g = free_green(k, v, 0.0)
        r = k * k * g[1:-1] - (g[2:] - 2 * g[1:-1] + g[:-2]) / h**2
        target = np.zeros_like(r)
        target[199] = 1.0 / h
        errs.append(np.max(np.abs(h * (r - target))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


def test_step_kernel_degenerate_is_free():
    v = np.linspace(-6.0, 6.0, 241)
    for rho in (-2.0, 0.0, 1.3):
        g = step_green(2, -1.0, -1.0, v, rho)
        assert np.allclose(g, free_green(2, v, rho), rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("rho", [-7.0, -2.5, 0.0, 3.0])
def test_step_kernel_unit_jump_and_continuity(rho):
    d = 1e-7
    g = lambda x: step_green(2, -5.0, 0.0, np.array([x]), rho)[0]
    right = (g(rho + 2 * d) - g(rho + d)) / d
    left = (g(rho - d) - g(rho - 2 * d)) / d
    assert right - left == pytest.approx(-1.0, abs=1e-5)
    # C^1 across the potential edges
    for edge in (-5.0, 0.0):
        if abs(edge - rho) > 1e-3:
            dr = (g(edge + 2 * d) - g(edge + d)) / d
            dl = (g(edge - d) - g(edge - 2 * d)) / d
            assert dr == pytest.approx(dl, abs=1e-5)


def test_step_kernel_rejects_bad_interval():
    with pytest.raises(ValueError):
        step_green(2, 0.0, -1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        step_green(0, -1.0, 0.0, 0.0, 0.0)


def test_step_kernel_against_bvp_solve():
    # independent finite-difference oracle on [-30, 30]
    k, A, A2, rho = 2, -5.0, 0.0, -2.5
    errs = []
    for h in (1.0 / 32, 1.0 / 64, 1.0 / 128):
        grid, col = step_bvp_green(k, A, A2, rho, h)
        errs.append(np.max(np.abs(col - step_green(k, A, A2, grid.v, rho))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.02)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.02)
    grid, col = step_bvp_richardson(k, A, A2, rho, 1.0 / 64)
    j = int(np.argmin(np.abs(grid.v - rho)))
    assert abs(col[j] - step_green(k, A, A2, np.array([rho]), rho)[0]) < 1e-6
    assert np.max(np.abs(col - step_green(k, A, A2, grid.v, rho))) < 1e-6


def test_potential_values():
    assert potential_Vw(-16.0, np.array([-16.0]))[0] == 0.0
    assert potential_Vw(-16.0, np.array([-8.0]))[0] == pytest.approx(8.0, abs=1e-3)
    assert potential_Vw(-16.0, np.array([5.0]))[0] < 1e-3
    with pytest.raises(ValueError):
        potential_Vw(-4.0, np.array([0.0]))


@given(w=st.floats(-30.0, -5.0), v=st.floats(-40.0, 20.0))
def test_potential_nonnegative_and_cut(w, v):
    val = potential_Vw(w, np.array([v]))[0]
    assert val >= 0.0
    if v <= w + 1:
        assert val == 0.0


@pytest.fixture(scope="module")
def kernel_k2():
    return longrange_green(2, -14.0, h=1.0 / 32)


def test_longrange_symmetry_positivity(kernel_k2):
    G = kernel_k2.values
    assert np.max(np.abs(G - G.T)) < 1e-10
    assert np.min(G) >= 0.0


def test_longrange_below_free(kernel_k2):
    grid = kernel_k2.grid
    G0 = fd_green(2, grid, np.zeros(grid.n))
    assert np.all(kernel_k2.values <= G0 * (1 + 1e-12))


def test_longrange_discrete_inverse(kernel_k2):
    grid = kernel_k2.grid
    res = apply_fd(2, grid, kernel_k2.meta["V"], kernel_k2.values)
    eye = np.eye(grid.n) / grid.h
    assert np.max(np.abs(res[1:-1] - eye[1:-1])) < 1e-8 / grid.h


def test_longrange_with_step_potential_matches_step_kernel():
    k, w = 2, -14.0
    A, A2 = w + 2.0, 0.0
    errs = []
    for h in (1.0 / 16, 1.0 / 32):
        grid = Grid.span(w - 12.0, 12.0, h)
        tol = 1e-9 * h

        def step(v):
            out = np.where((v > A + tol) & (v < A2 - tol), 8.0, 0.0)
            return np.where((np.abs(v - A) <= tol) | (np.abs(v - A2) <= tol), 4.0, out)

        ker = longrange_green(k, w, grid, potential=step)
        cols = [int(round((r - grid.v_min) / h)) for r in (-10.0, -3.0, 2.0)]
        err = max(np.max(np.abs(ker.values[:, j] - step_green(k, A, A2, grid.v, grid.v[j])))
                  for j in cols)
        errs.append(err)
    assert errs[1] < 1e-3
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_longrange_decay_rate():
    # left of rho = -10 on the plateau the column decays like e^{mu_2 v}
    ker = longrange_green(2, -20.0, h=1.0 / 64)
    v = ker.grid.v
    j = int(round((-10.0 - ker.grid.v_min) / ker.grid.h))
    sel = (v >= -18.0) & (v <= -12.0)
    slope = np.polyfit(v[sel], np.log(ker.values[sel, j]), 1)[0]
    mu = WaveSpec(2).mu
    assert 0.9 * mu <= slope <= 1.1 * mu


def test_longrange_grid_too_small():
    with pytest.raises(ValueError):
        longrange_green(2, -10.0, Grid.span(-12.0, 3.0, 0.125))
    with pytest.raises(ValueError):
        longrange_green(2, -3.0)


def test_bound_free_kernel_is_one_half():
    grid = Grid.span(-6.0, 6.0, 1.0 / 16)
    v = grid.v
    ker = GreenKernel(3, None, grid, free_green(3, v[:, None], v[None, :]), "free")
    rep = verify_green_bound(ker, w_star=0.0)
    assert rep["max_ratio_G"] == pytest.approx(0.5, rel=1e-14)


def test_bound_step_kernel_finite():
    grid = Grid.span(-16.0, 6.0, 1.0 / 16)
    v = grid.v
    vals = np.column_stack([step_green(1, -10.0, 0.0, v, r) for r in v])
    rep = verify_green_bound(GreenKernel(1, -10.0, grid, vals, "step(-10,0)"))
    assert np.isfinite(rep["max_ratio_G"]) and np.isfinite(rep["max_ratio_dG"])
    # the step covers exactly the depletion interval [w, 0], so the exact
    # kernel stays under the free-kernel value 1/2
    assert 0.49 < rep["max_ratio_G"] <= 0.5 + 1e-12


def test_bound_constant_uniform_in_w():
    # one constant per k, independent of w: the measured ratios agree to 5%
    for k in (2, 3, 4):
        r = [verify_green_bound(longrange_green(k, w, h=1.0 / 32))["max_ratio_G"]
             for w in (-15.0, -10.0)]
        assert r[0] == pytest.approx(r[1], rel=0.05)


def test_bound_constant_k34_below_ten():
    for k in (3, 4):
        rep = verify_green_bound(longrange_green(k, -15.0, h=1.0 / 32))
        assert max(rep["max_ratio_G"], rep["max_ratio_dG"]) <= 10.0


@pytest.mark.xfail(strict=True, reason="k = 2 constant is about 13.6; the weight counts "
                   "depletion on [w, 0] but the potential plateau starts at w + 2")
def test_bound_constant_k2_below_ten():
    rep = verify_green_bound(longrange_green(2, -15.0, h=1.0 / 32))
    assert rep["max_ratio_G"] <= 10.0
