"""Discretized linearized operator L_k, its spectrum, and limiting-absorption
constants measured on the grid.

In v = log r the operator reads

    L_k f = B(v) f + D(v) int e^{-|k||v-rho|} / (2|k|) e^{2 rho} f(rho) d rho,

and it is self-adjoint for the weight r^2 / |Omega'(r)| dr = e^{2v} / |D| dv.
With u = e^{v} f / sqrt|D| it becomes the symmetric kernel

    B(v) u - sqrt|D(v)| e^{v} int K(v, rho) e^{rho} sqrt|D(rho)| u d rho

which is what `assemble_Lk` stores, using trapezoidal weights in v.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .greens import Grid, fd_green, potential_Vw
from .norms import varpi
from .profile import DefaultProfile
from .sdf import (check_epsilon, default_domain, galerkin_matrix, cauchy_rule,
                  regular_rule, solve_grid)

__all__ = [
    "OperatorMatrix",
    "assemble_Lk",
    "omega_prime_vector",
    "eigen_residual",
    "spectrum_report",
    "lap_operator",
    "lap_coercivity",
    "norm_factor",
]

DELTA = 5e-3


@dataclass
class OperatorMatrix:
    k: int
    v: np.ndarray
    matrix: np.ndarray
    profile: object
    coupled: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def r(self):
        return np.exp(self.v)

    @property
    def h(self):
        return self.v[1] - self.v[0]

    @property
    def weight(self):
        """X_k weight r^2 / |Omega'(r)| at the nodes."""
        r = self.r
        return r * r / np.abs(self.profile.omega_prime(r))

    @property
    def asymmetry(self):
        return float(np.max(np.abs(self.matrix - self.matrix.T)))


def _trap_weights(n, h):
    wt = np.full(n, h)
    wt[[0, -1]] *= 0.5
    return wt


def assemble_Lk(k, h=1.0 / 16, domain=(-12.0, 12.0), profile=None, coupled=True):
    """Symmetric matrix of L_k in X_k-orthonormal coordinates.

    The trapezoidal weights are split as sqrt(w_i) sqrt(w_j) so that the
    matrix stays exactly symmetric.  With `coupled=False` only the
    multiplication part B(v) is kept.
    """
    if k == 0:
        raise ValueError("mode k must be nonzero")
    profile = profile or DefaultProfile()
    lo, hi = domain
    grid = Grid.span(lo, hi, h)
    v = grid.v
    kk = abs(k)
    M = np.diag(profile.B(v)).astype(float)
    if coupled:
        a = np.sqrt(np.abs(profile.D(v))) * np.exp(v) * np.sqrt(_trap_weights(v.size, grid.h))
        K = np.exp(-kk * np.abs(v[:, None] - v[None, :])) / (2.0 * kk)
        M -= a[:, None] * K * a[None, :]
    return OperatorMatrix(int(k), v, M, profile, coupled, {"h": grid.h, "domain": (lo, hi)})


def omega_prime_vector(op):
    """-Omega' in the orthonormal coordinates, unit Euclidean norm."""
    v = op.v
    u = np.exp(2 * v) * np.sqrt(np.abs(op.profile.D(v))) * np.sqrt(_trap_weights(v.size, op.h))
    return u / np.linalg.norm(u)


def eigen_residual(op):
    """||L_k(-Omega')||_X / ||Omega'||_X on the grid."""
    u = omega_prime_vector(op)
    return float(np.linalg.norm(op.matrix @ u))


def spectrum_report(op, delta=DELTA, near_zero=1e-4, bins=16):
    """Eigenvalues, outliers outside [-delta, b(0) + delta] and, for |k| = 1,
    the eigenvector best aligned with Omega'."""
    try:
        lam, vec = linalg.eigh(op.matrix)
    except linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed: {exc}") from exc
    b0 = float(op.profile.b(0.0))
    out = (lam < -delta) | (lam > b0 + delta)
    hist, edges = np.histogram(lam, bins=bins, range=(0.0, b0))
    report = {
        "k": op.k,
        "n": int(lam.size),
        "b0": b0,
        "min": float(lam[0]),
        "max": float(lam[-1]),
        "outliers": lam[out].tolist(),
        "n_outliers": int(np.count_nonzero(out)),
        "histogram": hist.tolist(),
        "bin_edges": edges.tolist(),
        "asymmetry": op.asymmetry,
    }
    if abs(op.k) == 1 and op.coupled:
        u = omega_prime_vector(op)
        align = np.abs(vec.T @ u)
        j = int(np.argmax(align))
        report.update({
            "aligned_eigenvalue": float(lam[j]),
            "alignment": float(align[j]),
            "n_aligned": int(np.count_nonzero(align > 0.5)),
            "n_near_zero": int(np.count_nonzero(np.abs(lam) < near_zero)),
            "eigen_residual": eigen_residual(op),
        })
    report["eigenvalues"] = lam
    return report


# limiting absorption ---------------------------------------------------------

def _free_kernel(k, v):
    kk = abs(k)
    return np.exp(-kk * np.abs(v[:, None] - v[None, :])) / (2.0 * kk)


def _tridiag_dense(diag, off):
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


def lap_operator(k, w, epsilon, h=1.0 / 32, domain=None, profile=None, regime=None):
    """Nodal matrix of T^w_{k,eps} (w >= -20) or S^w_{k,eps} (w <= -10).

    h is represented by its piecewise-linear interpolant.  The potential
    part becomes the Galerkin matrix of the singular weight (Cauchy product
    rule), so the operator is the kernel at the nodes times that matrix.
    Returns (nodes, matrix, regime).
    """
    if k == 0:
        raise ValueError("mode k must be nonzero")
    if regime is None:
        regime = "T" if w >= -20 else "S"
    if regime == "T" and w < -20:
        raise ValueError("T needs w >= -20")
    if regime == "S" and w > -10:
        raise ValueError("S needs w <= -10")
    if regime not in ("T", "S"):
        raise ValueError("regime must be 'T' or 'S'")
    check_epsilon(w, epsilon)
    profile = profile or DefaultProfile()
    lo, hi = domain or default_domain(w)
    nodes = solve_grid(w, lo, hi, h)
    rule = cauchy_rule(profile, nodes, w, epsilon, 1)
    qd, qo = galerkin_matrix(rule, np.exp(2 * rule.rho) * profile.D(rule.rho))
    Q = _tridiag_dense(qd, qo)
    if regime == "T":
        K = _free_kernel(k, nodes)
    else:
        reg = regular_rule(nodes)
        vd, vo = galerkin_matrix(reg, potential_Vw(w, reg.rho, profile))
        Q = Q - _tridiag_dense(vd, vo)
        grid = Grid(float(nodes[0]), float(nodes[1] - nodes[0]), nodes.size)
        K = fd_green(k, grid, potential_Vw(w, nodes, profile))
    return nodes, K @ Q, regime


def _weights(nodes, w, k_star, regime):
    if regime == "T":
        return np.exp(abs(k_star) * np.abs(nodes))
    return 1.0 / varpi(k_star, w, nodes, 0.0)


def norm_factor(nodes, W, k, norm="y"):
    """Upper-triangular R with |R x| the discrete norm of the samples x.

    norm="y": weighted L^2 plus |k|^{-2} times the weighted L^2 norm of
    the difference quotient (the Hilbert-space version of the window norm);
    norm="l2": weighted L^2 of the samples only.
    """
    h = nodes[1] - nodes[0]
    n = nodes.size
    G = np.diag(h * W**2)
    if norm == "y":
        Wm = np.sqrt(W[1:] * W[:-1])
        c = h * Wm**2 / (h * h * k * k)
        G[np.arange(n - 1), np.arange(n - 1)] += c
        G[np.arange(1, n), np.arange(1, n)] += c
        G[np.arange(n - 1), np.arange(1, n)] -= c
        G[np.arange(1, n), np.arange(n - 1)] -= c
    elif norm != "l2":
        raise ValueError("norm must be 'y' or 'l2'")
    return linalg.cholesky(G)


def _conjugate(R, A):
    """R A R^{-1} without forming the inverse."""
    RA = R @ A
    return linalg.solve_triangular(R, RA.T, trans="T").T


def lap_coercivity(k, k_star, w, epsilon, h=1.0 / 32, domain=None, profile=None,
                   regime=None, norm="y"):
    """Smallest singular value of I + T (or I + S) in a weighted sample norm.

    The weight is e^{|k*||v|} for T and rho_{k*,w} = 1/varpi_{k*,w}(., 0)
    for S.  The sup over windows is replaced by the corresponding Hilbert
    norm (see `norm_factor`), so sigma_min is a proxy for kappa.  Plain
    weighted l^2 (norm="l2") is not uniform: its minimizer jumps at w and
    sigma_min decays like sqrt(h).
    Returns a dict with sigma_min and the operator norm of T/S.
    """
    if not 1 <= abs(k_star) <= abs(k):
        raise ValueError("need 1 <= |k_star| <= |k|")
    nodes, A, regime = lap_operator(k, w, epsilon, h, domain, profile, regime)
    W = _weights(nodes, w, k_star, regime)
    R = norm_factor(nodes, W, abs(k), norm)
    Aw = _conjugate(R, A)
    sv_op = linalg.svdvals(Aw)
    Aw[np.diag_indices_from(Aw)] += 1.0
    sv = linalg.svdvals(Aw)
    return {
        "k": int(k), "k_star": int(k_star), "w": float(w), "epsilon": float(epsilon),
        "regime": regime, "norm": norm, "sigma_min": float(sv[-1]),
        "op_norm": float(sv_op[0]), "n": int(nodes.size),
    }
