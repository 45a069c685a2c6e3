"""Background vortex profiles and their log-variable coefficients.

A profile is described by its vorticity Omega(r).  From it we build the
angular velocity b(r) = U(r)/r, the quantity d(r) = Omega'(r)/r and the
coefficients B(v) = b(e^v), D(v) = d(e^v) together with B', B''.
"""
from __future__ import annotations

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

__all__ = [
    "VortexProfile",
    "DefaultProfile",
    "TabulatedProfile",
    "bracket",
    "default_profile",
]


def bracket(x):
    """Japanese bracket sqrt(x**2 + 2)."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(x * x + 2.0)


def _check_r(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be nonnegative")
    return r


# Gauss-Legendre nodes on [0, 1] used for the generic radial averages.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


class VortexProfile:
    """Generic radially decreasing vortex.

    Parameters
    ----------
    omega : callable
        Vorticity r -> Omega(r), vectorized.
    omega_prime : callable
        Derivative r -> Omega'(r), vectorized.
    c_star, C_star : float
        Limit constant with d(r) ~ c_star / <r>^8 near r = 0, and the bound constant in
        Omega(r) <= C_star / <r>^6.
    """

    name = "generic"

    def __init__(self, omega, omega_prime, c_star=None, C_star=None):
        self._omega = omega
        self._omega_prime = omega_prime
        if c_star is None:
            # d(r) ~ c_star / <r>^8 as r -> 0
            r0 = 1e-4
            c_star = float(omega_prime(r0) / r0 * bracket(r0) ** 8)
        self.c_star = float(c_star)
        if C_star is None:
            r = np.linspace(0.0, 50.0, 20001)
            C_star = float(np.max(omega(r) * bracket(r) ** 6))
        self.C_star = float(C_star)

    # radial quantities -------------------------------------------------
    def omega(self, r):
        return self._omega(_check_r(r))

    def omega_prime(self, r):
        return self._omega_prime(_check_r(r))

    def b(self, r):
        """Angular velocity U(r)/r = int_0^1 s Omega(rs) ds."""
        r = _check_r(r)
        inner = self._omega(np.multiply.outer(np.minimum(r, 1.0), _GL_X)) * _GL_X @ _GL_W
        # beyond r = 1 integrate rho*Omega in log variables on unit panels
        v = np.log(np.maximum(r, 1.0))
        acc = inner[()] if np.ndim(inner) == 0 else inner.copy()
        npan = int(np.ceil(np.max(v, initial=0.0)))
        for j in range(npan):
            a = np.minimum(j, v)
            c = np.minimum(j + 1.0, v)
            s = np.multiply.outer(c - a, _GL_X) + a[..., None]
            es = np.exp(s)
            acc = acc + (c - a) * ((es * es * self._omega(es)) @ _GL_W)
        return acc / np.maximum(r, 1.0) ** 2

    def b_prime(self, r):
        r = _check_r(r)
        small = self._omega_prime(np.multiply.outer(r, _GL_X)) * _GL_X**2 @ _GL_W
        with np.errstate(divide="ignore", invalid="ignore"):
            large = (self._omega(r) - 2.0 * self.b(r)) / r
        return np.where(r < 1.0, small, large)

    def U(self, r):
        return _check_r(r) * self.b(r)

    def U_prime(self, r):
        r = _check_r(r)
        return self.b(r) + r * self.b_prime(r)

    def d(self, r):
        r = _check_r(r)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = self.omega_prime(r) / r
        return np.where(r == 0, self.c_star / 16.0, out)

    # log-variable coefficients -----------------------------------------
    def B(self, v):
        return self.b(np.exp(np.asarray(v, dtype=float)))

    def Bp(self, v):
        r = np.exp(np.asarray(v, dtype=float))
        return r * self.b_prime(r)

    def D(self, v):
        return self.d(np.exp(np.asarray(v, dtype=float)))

    def Bpp(self, v):
        # chain rule: 2B' + B'' = e^{2v} D
        v = np.asarray(v, dtype=float)
        return np.exp(2 * v) * self.D(v) - 2.0 * self.Bp(v)

    def B_diff(self, v, w):
        """B(v) - B(w) without cancellation, via Gauss-Legendre on [w, v]."""
        v, w = np.broadcast_arrays(np.asarray(v, float), np.asarray(w, float))
        n = int(np.ceil(np.max(np.abs(v - w), initial=0.0))) + 1
        x, wt = np.polynomial.legendre.leggauss(24)
        out = np.zeros(v.shape)
        for j in range(n):
            a = w + (v - w) * j / n
            c = w + (v - w) * (j + 1) / n
            nodes = 0.5 * (c - a)[..., None] * (x + 1.0) + a[..., None]
            out += 0.5 * (c - a) * (self.Bp(nodes) @ wt)
        return out

    def suite(self, v):
        """Return (B, B', B'', D) at v."""
        return self.B(v), self.Bp(v), self.Bpp(v), self.D(v)

    def plateau(self, v, w):
        """Quotient e^{2v} D(v) / (B(v) - B(w)); tends to 8 on the plateau."""
        v = np.asarray(v, dtype=float)
        w = np.asarray(w, dtype=float)
        if np.any(v == w):
            raise ZeroDivisionError("quotient is singular at v == w")
        return np.exp(2 * v) * self.D(v) / self.B_diff(v, w)

    def check_assumptions(self, r=None, tol=1e-12):
        """Return a dict of the finite Assumption-1 checks on an r-grid."""
        if r is None:
            r = np.linspace(1e-6, 60.0, 6001)
        om = self.omega(r)
        omp = self.omega_prime(r)
        bound = om * bracket(r) ** 6
        return {
            "positive": bool(np.all(om > 0)),
            "decreasing": bool(np.all(omp < 0)),
            "bound_max": float(np.max(bound)),
            "bound_ok": bool(np.max(bound) <= self.C_star * (1 + tol)),
        }


class DefaultProfile(VortexProfile):
    """Omega(r) = (r^2 + 2)^{-3} with all coefficients in closed form."""

    name = "default"

    def __init__(self):
        super().__init__(
            lambda r: (r * r + 2.0) ** -3,
            lambda r: -6.0 * r * (r * r + 2.0) ** -4,
            c_star=-6.0,
            C_star=1.0,
        )

    def b(self, r):
        x = _check_r(r) ** 2
        return (x + 4.0) / (16.0 * (x + 2.0) ** 2)

    def b_prime(self, r):
        r = _check_r(r)
        x = r * r
        return -r * (x + 6.0) / (8.0 * (x + 2.0) ** 3)

    def d(self, r):
        x = _check_r(r) ** 2
        return -6.0 / (x + 2.0) ** 4

    def B(self, v):
        x = np.exp(2 * np.asarray(v, dtype=float))
        return (x + 4.0) / (16.0 * (x + 2.0) ** 2)

    def Bp(self, v):
        x = np.exp(2 * np.asarray(v, dtype=float))
        return -x * (x + 6.0) / (8.0 * (x + 2.0) ** 3)

    def Bpp(self, v):
        x = np.exp(2 * np.asarray(v, dtype=float))
        return x * (x * x + 8.0 * x - 12.0) / (4.0 * (x + 2.0) ** 4)

    def D(self, v):
        x = np.exp(2 * np.asarray(v, dtype=float))
        return -6.0 / (x + 2.0) ** 4

    def B_diff(self, v, w):
        v = np.asarray(v, dtype=float)
        w = np.asarray(w, dtype=float)
        x = np.exp(2 * v)
        y = np.exp(2 * w)
        # y - x written through sinh so that nearby v, w do not cancel
        y_minus_x = -2.0 * np.exp(v + w) * np.sinh(v - w)
        num = y_minus_x * (x * y + 4.0 * x + 4.0 * y + 12.0)
        return num / (16.0 * (x + 2.0) ** 2 * (y + 2.0) ** 2)


class TabulatedProfile(VortexProfile):
    """Profile given by samples of Omega on an r-grid (cubic spline)."""

    name = "tabulated"

    def __init__(self, r, omega, c_star=None, C_star=None):
        r = np.asarray(r, dtype=float)
        omega = np.asarray(omega, dtype=float)
        if r[0] != 0.0:
            raise ValueError("tabulated profile must start at r = 0")
        # even extension keeps Omega'(0) = 0
        rr = np.concatenate([-r[:0:-1], r])
        oo = np.concatenate([omega[:0:-1], omega])
        spl = CubicSpline(rr, oo)
        dspl = spl.derivative()
        rmax = r[-1]
        tail = omega[-1] * rmax**6

        def om(x):
            x = np.asarray(x, dtype=float)
            return np.where(x <= rmax, spl(np.minimum(x, rmax)), tail / np.maximum(x, rmax) ** 6)

        def omp(x):
            x = np.asarray(x, dtype=float)
            return np.where(
                x <= rmax, dspl(np.minimum(x, rmax)), -6 * tail / np.maximum(x, rmax) ** 7
            )

        super().__init__(om, omp, c_star=c_star, C_star=C_star)


def default_profile():
    return DefaultProfile()


def b_by_quadrature(profile, r):
    """Adaptive-quadrature value of int_0^1 s Omega(rs) ds (reference)."""
    val, _ = integrate.quad(lambda s: s * float(profile.omega(r * s)), 0.0, 1.0,
                            epsabs=1e-15, epsrel=1e-13, limit=200)
    return val
