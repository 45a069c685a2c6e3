"""Mode parameters, decay weights, weighted norms and smooth cutoffs."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

__all__ = [
    "WaveSpec",
    "overlap_d",
    "varpi",
    "zeta",
    "y_norm",
    "gevrey_norm_estimate",
    "bump",
    "bump_cdf",
    "phi_zero",
    "phi_star",
    "phi_star2",
]


def mu(k):
    return float(np.sqrt(k * k + 8.0))


def mu_star(k):
    k = abs(k)
    return (9.0 * mu(k) + k + 2.0) / 10.0


@dataclass(frozen=True)
class WaveSpec:
    """Parameters attached to an azimuthal mode k."""

    k: int
    k_dagger: int = 5
    kappa: int = field(init=False)
    mu: float = field(init=False)
    mu_star: float = field(init=False)

    def __post_init__(self):
        if self.k == 0:
            raise ValueError("mode k must be nonzero")
        if self.k_dagger < 5:
            raise ValueError("k_dagger must be at least 5")
        kk = abs(int(self.k))
        object.__setattr__(self, "kappa", min(kk, self.k_dagger))
        object.__setattr__(self, "mu", mu(kk))
        # for |k| = 1 both rates equal 3
        object.__setattr__(self, "mu_star", 3.0 if kk == 1 else mu_star(kk))


def overlap_d(w_star, v, rho):
    """Length of [min(v,rho), max(v,rho)] intersected with [min(w_star,0), 0]."""
    v = np.asarray(v, dtype=float)
    rho = np.asarray(rho, dtype=float)
    lo = np.minimum(v, rho)
    hi = np.maximum(v, rho)
    a = min(float(w_star), 0.0)
    return np.maximum(0.0, np.minimum(hi, 0.0) - np.maximum(lo, a))


def varpi(k_eff, w_star, v, rho):
    """Decay weight exp(-|k||v-rho| - (mu_k - |k|) d)."""
    k = abs(k_eff)
    if k < 1:
        raise ValueError("k_eff must be at least 1")
    v = np.asarray(v, dtype=float)
    rho = np.asarray(rho, dtype=float)
    d = overlap_d(w_star, v, rho)
    return np.exp(-k * np.abs(v - rho) - (mu(k) - k) * d)


def zeta(k_eff, w_star, v, rho):
    """Reciprocal of varpi."""
    k = abs(k_eff)
    d = overlap_d(w_star, v, rho)
    return np.exp(k * np.abs(np.asarray(v) - np.asarray(rho)) + (mu(k) - k) * d)


def _trapz(y, dx):
    return dx * (np.sum(y) - 0.5 * (y[0] + y[-1]))


def y_norm(h, v, k, k_star):
    """Sup over integer j of the weighted L^2 norms on windows (j, j+2).

    Parameters
    ----------
    h : array_like
        Samples of the function (real or complex) on the uniform grid `v`.
    v : array_like
        Uniform grid.
    k, k_star : int
        Mode and weight index.

    Returns
    -------
    float
    """
    h = np.asarray(h)
    v = np.asarray(v, dtype=float)
    dv = v[1] - v[0]
    if 2.0 / dv < 4:
        raise ValueError("grid too coarse: fewer than 4 points per window")
    weight = np.exp(abs(k_star) * np.abs(v))
    g = weight * h
    dh = np.gradient(h, dv)
    gp = weight * dh
    best = 0.0
    for j in range(int(np.floor(v[0])), int(np.ceil(v[-1]))):
        sel = (v >= j - 1e-12) & (v <= j + 2 + 1e-12)
        if np.count_nonzero(sel) < 4:
            continue
        a = np.sqrt(_trapz(np.abs(g[sel]) ** 2, dv))
        b = np.sqrt(_trapz(np.abs(gp[sel]) ** 2, dv)) / abs(k)
        best = max(best, a + b)
    return float(best)


# smooth cutoffs ---------------------------------------------------------

_BUMP_X, _BUMP_W = np.polynomial.legendre.leggauss(60)


def _raw_bump(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    xi = x[inside]
    out[inside] = np.exp(-1.0 / (1.0 - xi * xi))
    return out


# adaptive quadrature for the mass; the cdf uses its own 60-point half-mass
# so that it is exactly 1/2 at 0 and exactly odd about that point
_BUMP_MASS = 2.0 * integrate.quad(_raw_bump, 0.0, 1.0, epsabs=1e-15, epsrel=1e-13)[0]
_HALF_MASS = float(_raw_bump(0.5 * (_BUMP_X - 1.0)) @ _BUMP_W) * 0.5


def bump(x):
    """Unit-mass bump proportional to exp(-1/(1-x^2)) on (-1, 1)."""
    return _raw_bump(x) / _BUMP_MASS


def bump_prime(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        fac = np.where(np.abs(x) < 1, -2.0 * x / (1.0 - x * x) ** 2, 0.0)
    return bump(x) * fac


def bump_cdf(x):
    """Integral of the unit bump from -1 to x (a smooth step from 0 to 1)."""
    x = np.asarray(x, dtype=float)
    # integrate from -1 to -|x| and reflect, which keeps the result monotone
    xl = -np.minimum(np.abs(x), 1.0)
    half = 0.5 * (xl + 1.0)
    nodes = half[..., None] * (_BUMP_X + 1.0) - 1.0
    left = 0.5 * half * (_raw_bump(nodes) @ _BUMP_W) / _HALF_MASS
    return np.where(x > 0, 1.0 - left, left)


def _step_up(v, a, b):
    """0 for v <= a, 1 for v >= b."""
    c = 0.5 * (a + b)
    s = 0.5 * (b - a)
    return bump_cdf((np.asarray(v, dtype=float) - c) / s)


def phi_zero(v, order=0):
    """1 on (-inf, -2], 0 on [-1, inf); `order` selects a derivative (0, 1, 2)."""
    v = np.asarray(v, dtype=float)
    x = (v + 1.5) / 0.5
    if order == 0:
        return 1.0 - bump_cdf(x)
    if order == 1:
        return -bump(x) / 0.5
    if order == 2:
        return -bump_prime(x) / 0.25
    raise ValueError("order must be 0, 1 or 2")


def phi_star(v):
    """1 on [-2, 2], 0 outside (-4, 4)."""
    return _step_up(v, -4.0, -2.0) * (1.0 - _step_up(v, 2.0, 4.0))


def phi_star2(v):
    """1 on [-4, 4], 0 outside (-5, 5)."""
    return _step_up(v, -5.0, -4.0) * (1.0 - _step_up(v, 4.0, 5.0))


def gevrey_norm_estimate(h, v, delta=0.1, window=None, k=1, taper=True):
    """Windowed Fourier diagnostic sum exp(2 delta <k,xi>^{1/2}) |h_hat|^2.

    The samples are multiplied by a bump cutoff rescaled to `window`, then
    transformed with the FFT.  The sum is normalized so that delta = 0
    returns the squared L^2 norm of the tapered function.  This is a trend
    monitor only.
    """
    h = np.asarray(h)
    v = np.asarray(v, dtype=float)
    dv = v[1] - v[0]
    if window is None:
        window = (v[0], v[-1])
    a, b = window
    if a < v[0] - 1e-12 or b > v[-1] + 1e-12:
        raise ValueError("window must lie inside the grid")
    sel = (v >= a) & (v <= b)
    hs = h[sel]
    if taper:
        x = (2.0 * v[sel] - a - b) / (b - a)
        hs = hs * np.e * _raw_bump(x)
    if not np.any(hs):
        return 0.0
    n = hs.size
    hhat = dv * np.fft.fft(hs)
    xi = 2.0 * np.pi * np.fft.fftfreq(n, d=dv)
    dxi = 2.0 * np.pi / (n * dv)
    weight = np.exp(2.0 * delta * (k * k + xi * xi + 2.0) ** 0.25)
    return float(np.sum(weight * np.abs(hhat) ** 2) * dxi / (2.0 * np.pi))
