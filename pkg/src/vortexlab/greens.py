"""Green's kernels of k^2 - d^2/dv^2 + V on the line.

Three kernels are provided: the free kernel, the exact kernel of the step
potential 8 * 1_[A, A'], and a finite-difference kernel for a general
potential sampled on a uniform grid (used for the long-range potential V_w).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .norms import bump_cdf, varpi
from .profile import DefaultProfile

__all__ = [
    "Grid",
    "GreenKernel",
    "free_green",
    "free_green_r",
    "step_green",
    "potential_Vw",
    "fd_green",
    "longrange_green",
    "step_bvp_green",
    "step_bvp_richardson",
    "verify_green_bound",
]

STEP_HEIGHT = 8.0


@dataclass(frozen=True)
class Grid:
    """Uniform grid v_i = v_min + i h, i = 0..n-1."""

    v_min: float
    h: float
    n: int

    @classmethod
    def span(cls, v_min, v_max, h):
        if not h > 0:
            raise ValueError("grid spacing must be positive")
        if not v_min < v_max:
            raise ValueError("v_min must be below v_max")
        n = int(round((v_max - v_min) / h)) + 1
        return cls(float(v_min), float(h), n)

    @property
    def v(self):
        return self.v_min + self.h * np.arange(self.n)

    @property
    def v_max(self):
        return self.v_min + self.h * (self.n - 1)


@dataclass
class GreenKernel:
    k: int
    w: float | None
    grid: Grid
    values: np.ndarray
    potential_tag: str
    meta: dict = field(default_factory=dict)


def free_green(k, v, rho):
    """Kernel exp(-|k||v-rho|)/(2|k|) of k^2 - d^2/dv^2."""
    if k == 0:
        raise ValueError("mode k must be nonzero")
    k = abs(k)
    return np.exp(-k * np.abs(np.asarray(v, float) - np.asarray(rho, float))) / (2.0 * k)


def free_green_r(k, r, rho):
    """Radial form (rho / 2|k|) (min/max)^{|k|}."""
    if k == 0:
        raise ValueError("mode k must be nonzero")
    k = abs(k)
    r = np.asarray(r, float)
    rho = np.asarray(rho, float)
    ratio = np.minimum(r, rho) / np.maximum(r, rho)
    return rho / (2.0 * k) * ratio**k


# step potential -----------------------------------------------------------

def _step_coeffs(k, A, A2, rho):
    """Regions and coefficients of the step kernel with source at rho.

    Each region [L, R] carries a e^{lam (v - R)} + b e^{-lam (v - L)}, which
    keeps both exponentials bounded by 1 inside the region.
    """
    mu = np.sqrt(k * k + STEP_HEIGHT)
    pts = sorted([(A, "A"), (A2, "A2"), (rho, "rho")], key=lambda p: p[0])
    edges = [-np.inf] + [p[0] for p in pts] + [np.inf]
    lams = []
    for j in range(4):
        L, R = edges[j], edges[j + 1]
        mid = 0.5 * (L + R) if np.isfinite(L) and np.isfinite(R) else (R - 1 if np.isfinite(R) else L + 1)
        inside = A < mid < A2 if A < A2 else False
        lams.append(mu if inside else float(k))
    # unknowns: region0 a0 ; region1 a1 b1 ; region2 a2 b2 ; region3 b3
    idx = {(0, "a"): 0, (1, "a"): 1, (1, "b"): 2, (2, "a"): 3, (2, "b"): 4, (3, "b"): 5}

    def basis(j, v):
        L, R = edges[j], edges[j + 1]
        lam = lams[j]
        out = {}
        if (j, "a") in idx:
            e = np.exp(lam * (v - R))
            out[(j, "a")] = (e, lam * e)
        if (j, "b") in idx:
            e = np.exp(-lam * (v - L))
            out[(j, "b")] = (e, -lam * e)
        return out

    M = np.zeros((6, 6))
    rhs = np.zeros(6)
    row = 0
    for j, (p, tag) in enumerate(pts):
        left = basis(j, p)
        right = basis(j + 1, p)
        for key, (val, _) in left.items():
            M[row, idx[key]] += val
        for key, (val, _) in right.items():
            M[row, idx[key]] -= val
        for key, (_, der) in left.items():
            M[row + 1, idx[key]] += der
        for key, (_, der) in right.items():
            M[row + 1, idx[key]] -= der
        if tag == "rho":
            # g'(rho+) - g'(rho-) = -1
            rhs[row + 1] = 1.0
        row += 2
    if abs(np.linalg.det(M)) < 1e-300 or not np.isfinite(np.linalg.cond(M)):
        raise np.linalg.LinAlgError("singular step-kernel coefficient system")
    c = np.linalg.solve(M, rhs)
    return edges, lams, idx, c


def step_green(k, A, A_prime, v, rho):
    """Exact kernel of (k^2 - d^2) g + 8 * 1_[A, A'] g = delta(v - rho).

    `rho` must be a scalar; `v` may be an array.
    """
    if k == 0:
        raise ValueError("mode k must be nonzero")
    if A > A_prime:
        raise ValueError("need A <= A_prime")
    k = abs(k)
    edges, lams, idx, c = _step_coeffs(k, float(A), float(A_prime), float(rho))
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape)
    for j in range(4):
        L, R = edges[j], edges[j + 1]
        sel = (v >= L) & (v <= R) if j < 3 else (v > L)
        if j == 0:
            sel = v <= R
        vs = v[sel]
        val = np.zeros(vs.shape)
        if (j, "a") in idx:
            val += c[idx[(j, "a")]] * np.exp(lams[j] * (vs - R))
        if (j, "b") in idx:
            val += c[idx[(j, "b")]] * np.exp(-lams[j] * (vs - L))
        out[sel] = val
    return out


# long-range potential -------------------------------------------------------

def potential_Vw(w, v, profile=None):
    """Mollified long-range potential, zero for v <= w + 1."""
    if w > -5:
        raise ValueError("the long-range potential is defined only for w <= -5")
    profile = profile or DefaultProfile()
    v = np.asarray(v, dtype=float)
    cut = bump_cdf(v - (w + 2.0))
    out = np.zeros(v.shape)
    on = cut > 0
    vv = v[on]
    out[on] = np.exp(2 * vv) * profile.D(vv) / profile.B_diff(vv, w) * cut[on]
    return out


def _fd_banded(k, grid, V, lam_left, lam_right):
    """Symmetric banded form of the FD operator with half-weight end rows."""
    n, h = grid.n, grid.h
    ab = np.zeros((3, n))
    diag = 2.0 / h**2 + k * k + V
    diag[0] = 1.0 / h**2 + lam_left / h + 0.5 * (k * k + V[0])
    diag[-1] = 1.0 / h**2 + lam_right / h + 0.5 * (k * k + V[-1])
    ab[0, 1:] = -1.0 / h**2
    ab[1] = diag
    ab[2, :-1] = -1.0 / h**2
    return ab


def fd_green(k, grid, V, columns=None):
    """Finite-difference kernel of k^2 - d^2 + V with Robin decay ends.

    The end rows are scaled by 1/2 so that the matrix is symmetric; the
    kernel is then G = S^{-1} / h, symmetric as well.  Returns the columns
    listed in `columns` (all by default) as an (n, m) array.
    """
    k = abs(k)
    V = np.asarray(V, dtype=float)
    lam_l = np.sqrt(k * k + V[0])
    lam_r = np.sqrt(k * k + V[-1])
    ab = _fd_banded(k, grid, V, lam_l, lam_r)
    n = grid.n
    if columns is None:
        rhs = np.eye(n) / grid.h
    else:
        columns = np.atleast_1d(columns)
        rhs = np.zeros((n, columns.size))
        rhs[columns, np.arange(columns.size)] = 1.0 / grid.h
    return solve_banded((1, 1), ab, rhs, check_finite=False)


def apply_fd(k, grid, V, G):
    """Apply the (unsymmetrized) FD operator to the columns of G."""
    h = grid.h
    k = abs(k)
    V = np.asarray(V, dtype=float)
    lam_l = np.sqrt(k * k + V[0])
    lam_r = np.sqrt(k * k + V[-1])
    ab = _fd_banded(k, grid, V, lam_l, lam_r)
    out = ab[1][:, None] * G
    out[:-1] += ab[0, 1:][:, None] * G[1:]
    out[1:] += ab[2, :-1][:, None] * G[:-1]
    out[0] *= 2.0
    out[-1] *= 2.0
    return out


def longrange_green(k, w, grid=None, profile=None, h=1.0 / 64, potential=None):
    """Kernel of k^2 - d^2 + V_w on a truncated grid (default [w-12, 12])."""
    if w > -5:
        raise ValueError("the long-range kernel needs w <= -5")
    if grid is None:
        grid = Grid.span(w - 12.0, 12.0, h)
    if grid.v_min > w - 5 or grid.v_max < 5:
        raise ValueError("grid must contain [w, 0] with 5-unit margins")
    v = grid.v
    if potential is None:
        V = potential_Vw(w, v, profile)
        tag = f"longrange({w:g})"
    else:
        V = np.asarray(potential(v), dtype=float)
        tag = "custom"
    G = fd_green(k, grid, V)
    return GreenKernel(k=int(k), w=float(w), grid=grid, values=G, potential_tag=tag,
                       meta={"V": V})


def step_potential_nodal(grid, A, A2):
    """Sampled step potential with half values at nodes sitting on A, A'."""
    v = grid.v
    tol = 1e-9 * grid.h
    V = np.where((v > A + tol) & (v < A2 - tol), STEP_HEIGHT, 0.0)
    V = np.where(np.abs(v - A) <= tol, 0.5 * STEP_HEIGHT, V)
    V = np.where(np.abs(v - A2) <= tol, 0.5 * STEP_HEIGHT, V)
    return V


def step_bvp_green(k, A, A2, rho, h, domain=(-30.0, 30.0)):
    """Column of the FD step kernel at source rho (oracle for step_green)."""
    grid = Grid.span(domain[0], domain[1], h)
    V = step_potential_nodal(grid, A, A2)
    j = int(round((rho - grid.v_min) / h))
    col = fd_green(k, grid, V, columns=[j])[:, 0]
    return grid, col


def step_bvp_richardson(k, A, A2, rho, h, domain=(-30.0, 30.0)):
    """(4 G_{h/2} - G_h) / 3 on the grid of spacing h: the O(h^2) error of
    the FD column is removed, leaving O(h^4)."""
    grid, col = step_bvp_green(k, A, A2, rho, h, domain)
    _, fine = step_bvp_green(k, A, A2, rho, 0.5 * h, domain)
    return grid, (4.0 * fine[::2] - col) / 3.0


def verify_green_bound(kernel, w_star=None):
    """Sup of |k| G / varpi and |dG/dv| / varpi over the grid.

    Derivatives are centered differences; the two diagonals next to v = rho
    and the boundary rows are excluded.
    """
    G = kernel.values
    v = kernel.grid.v
    h = kernel.grid.h
    k = abs(kernel.k)
    if w_star is None:
        w_star = kernel.w if kernel.w is not None else 0.0
    W = varpi(k, w_star, v[:, None], v[None, :])
    r0 = k * np.abs(G) / W
    i0 = np.unravel_index(np.argmax(r0), r0.shape)
    dG = (G[2:] - G[:-2]) / (2 * h)
    r1 = np.abs(dG) / W[1:-1]
    ii, jj = np.meshgrid(np.arange(1, len(v) - 1), np.arange(len(v)), indexing="ij")
    r1[np.abs(ii - jj) <= 1] = 0.0
    i1 = np.unravel_index(np.argmax(r1), r1.shape)
    return {
        "max_ratio_G": float(r0[i0]),
        "argmax_G": (float(v[i0[0]]), float(v[i0[1]])),
        "max_ratio_dG": float(r1[i1]),
        "argmax_dG": (float(v[i1[0] + 1]), float(v[i1[1]])),
        "symmetry": float(np.max(np.abs(G - G.T))),
        "min_value": float(np.min(G)),
    }
