"""Time evolution from the spectral density, the local/nonlocal split of the
vorticity, decay measurements and a direct time-stepping reference.

The representation

    phi(t, v) = -(1/2pi) int e^{-ikB(w)t} Gamma(v, w) B'(w) dw

is evaluated after the substitution u = B(w): between two w-nodes the
amplitude is taken linear in u and the oscillatory factor e^{-iktu} is
integrated exactly (Filon-trapezoid), so the cost does not grow with t.
All slices Gamma(., w_m) live on one lattice v_i = i h with w_m = (m + 1/2) h
at the cell midpoints, which is what the resolvent solver expects.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .norms import phi_star
from .sdf import _eps_limit, default_eps0

__all__ = [
    "ThetaField",
    "ModeEvolution",
    "compute_theta_field",
    "filon_weights",
    "stream_from_theta",
    "vorticity_from_stream",
    "split_f",
    "evolve",
    "window_norm",
    "decay_report",
    "elliptic_solve",
    "timestep_oracle",
    "rel_l2",
    "max_time",
    "weak_proxy",
]

DEFAULT_TIMES = (0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0)
REPORT_WINDOW = (-10.0, 6.0)


@dataclass
class ThetaField:
    """Limits Gamma(v_i, w_m) on a common lattice; row m belongs to w_m."""

    k: int
    v: np.ndarray
    w: np.ndarray
    gamma: np.ndarray
    profile: object
    data: object = None
    meta: dict = field(default_factory=dict)

    @property
    def h(self):
        return self.v[1] - self.v[0]

    def theta(self, m):
        """(s, Theta(s, w_m)) with s = v - w_m."""
        return self.v - self.w[m], self.gamma[m]


def _lattice(lo, hi, h):
    i0 = int(np.floor(lo / h + 1e-9))
    i1 = int(np.ceil(hi / h - 1e-9))
    return h * np.arange(i0, i1 + 1)


def compute_theta_field(k, data, h=1.0 / 32, w_range=(-14.0, 8.0), domain=None,
                        levels=3, profile=None, threads=1):
    """Solve the eps -> 0 limit for every w_m in w_range on one v-lattice.

    The default v-domain is [w_min - 8, max(14, w_max + 8)].  Slices are
    independent; `threads` > 1 maps them over a thread pool (results are
    gathered in w order, so the output does not depend on scheduling).
    """
    if k == 0:
        raise ValueError("mode k must be nonzero")
    profile = profile or data.profile
    wa, wb = w_range
    if not wa < wb:
        raise ValueError("w_range must be increasing")
    lo, hi = domain or (wa - 8.0, max(14.0, wb + 8.0))
    v = _lattice(lo, hi, h)
    m0 = int(np.ceil(wa / h - 0.5))
    m1 = int(np.floor(wb / h - 0.5))
    w = h * (np.arange(m0, m1 + 1) + 0.5)
    if w[0] <= v[0] + 1 or w[-1] >= v[-1] - 1:
        raise ValueError("w_range must lie inside the v-domain with a 1-unit margin")

    def one(wm):
        eps0 = default_eps0(wm, h, profile)
        sched = [eps0 * 4.0**-j for j in range(levels + 1)]
        (im, _, _, _), order, _, flagged = _eps_limit(k, wm, data, v, sched, profile)
        return im, order, flagged

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(one, w))
    else:
        out = [one(wm) for wm in w]
    gamma = np.array([o[0] for o in out])
    meta = {
        "h": float(h), "w_range": (float(wa), float(wb)), "domain": (float(lo), float(hi)),
        "levels": int(levels), "orders": [float(o[1]) for o in out],
        "n_flagged": int(sum(bool(o[2]) for o in out)),
    }
    return ThetaField(int(k), v, w, gamma, profile, data, meta)


# oscillatory quadrature in w ------------------------------------------------

def _filon_moments(theta):
    """I0 = int_0^1 e^{-i theta s} ds and I1 = int_0^1 s e^{-i theta s} ds."""
    theta = np.asarray(theta, dtype=float)
    c = -1j * theta
    small = np.abs(theta) < 0.5
    I0 = np.empty(theta.shape, dtype=complex)
    I1 = np.empty(theta.shape, dtype=complex)
    cs = c[small]
    term0 = np.ones(cs.shape, dtype=complex)
    s0 = np.zeros(cs.shape, dtype=complex)
    s1 = np.zeros(cs.shape, dtype=complex)
    fact = 1.0
    for n in range(16):
        if n > 0:
            term0 = term0 * cs
            fact *= n
        s0 += term0 / (fact * (n + 1))
        s1 += term0 / (fact * (n + 2))
    I0[small] = s0
    I1[small] = s1
    cl = c[~small]
    ec = np.exp(cl)
    I0[~small] = (ec - 1.0) / cl
    I1[~small] = ec / cl - (ec - 1.0) / cl**2
    return I0, I1


def filon_weights(alpha, w, profile):
    """Complex weights c_m with sum_m c_m G(w_m) ~ int e^{-i alpha B(w)} G B'(w) dw.

    G is interpolated linearly in u = B(w) between consecutive nodes and
    the oscillatory factor is integrated exactly.
    """
    w = np.asarray(w, dtype=float)
    du = profile.B_diff(w[1:], w[:-1])
    u0 = profile.B(w[:-1])
    I0, I1 = _filon_moments(alpha * du)
    ph = np.exp(-1j * alpha * u0) * du
    c = np.zeros(w.size, dtype=complex)
    c[:-1] += ph * (I0 - I1)
    c[1:] += ph * I1
    return c


def max_time(field, phase_per_cell=0.5):
    """Largest t whose output phase e^{-iktB(v)} changes by at most
    `phase_per_cell` radians per v-cell in the report window."""
    v = field.v
    sel = (v >= REPORT_WINDOW[0]) & (v <= REPORT_WINDOW[1])
    bp = np.max(np.abs(field.profile.Bp(v[sel])))
    return phase_per_cell / (abs(field.k) * bp * field.h)


def _check_time(t, field):
    tmax = max_time(field)
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t > tmax:
        raise ValueError(f"t = {t:g} exceeds the resolvable t_max = {tmax:.4g} for this grid")


def stream_from_theta(t, field):
    """phi_k(t, .) on the lattice from the representation formula."""
    _check_time(t, field)
    c = filon_weights(field.k * t, field.w, field.profile)
    return -(c @ field.gamma) / (2 * np.pi)


def vorticity_from_stream(phi, v, k):
    """f = -e^{-2v} (k^2 - d^2) phi by the 3-point stencil; end values are 0."""
    phi = np.asarray(phi)
    v = np.asarray(v, dtype=float)
    h = v[1] - v[0]
    f = np.zeros(phi.shape, dtype=np.result_type(phi, float))
    lap = (phi[..., 2:] - 2 * phi[..., 1:-1] + phi[..., :-2]) / h**2
    f[..., 1:-1] = -np.exp(-2 * v[1:-1]) * (k * k * phi[..., 1:-1] - lap)
    return f


def _applied(field):
    """(k^2 - d^2) Gamma(., w_m) by the stencil, zero at the end nodes."""
    g = field.gamma
    h = field.h
    out = np.zeros_like(g)
    out[:, 1:-1] = field.k**2 * g[:, 1:-1] - (g[:, 2:] - 2 * g[:, 1:-1] + g[:, :-2]) / h**2
    return out


def split_f(t, field, applied=None):
    """Local and nonlocal parts (f1, f2) of the vorticity at time t.

    f1 keeps Phi*(v - w) inside the w-integral, f2 keeps 1 - Phi*(v - w);
    both use the same stencil and weights as vorticity_from_stream, so
    f1 + f2 reproduces it up to rounding.
    """
    _check_time(t, field)
    if applied is None:
        applied = _applied(field)
    c = filon_weights(field.k * t, field.w, field.profile)
    cut = phi_star(field.v[None, :] - field.w[:, None])
    pre = np.exp(-2 * field.v) / (2 * np.pi)
    f1 = pre * (c @ (applied * cut))
    f2 = pre * (c @ (applied * (1.0 - cut)))
    f1[[0, -1]] = 0.0
    f2[[0, -1]] = 0.0
    return f1, f2


# evolution records ------------------------------------------------------------

@dataclass
class ModeEvolution:
    k: int
    times: list
    v: np.ndarray
    phi: np.ndarray
    f: np.ndarray
    f1: np.ndarray = None
    f2: np.ndarray = None
    windows: list = field(default_factory=list)
    profile: object = None
    method: str = "repr"

    def F1(self, j, v_star):
        """F^1_{k,v*}(t_j, .) = f1 e^{ikB(v)t} Phi*(v - v*)."""
        t = self.times[j]
        return self.f1[j] * np.exp(1j * self.k * self.profile.B(self.v) * t) * phi_star(
            self.v - v_star)

    def F2(self, j, v_star):
        return self.f2[j] * phi_star(self.v - v_star)


def evolve(field, times=DEFAULT_TIMES, windows=(-2.0, 0.0, 2.0), split=True, threads=1):
    """Representation-formula evolution at the listed times."""
    times = [float(t) for t in times]
    applied = _applied(field) if split else None

    def one(t):
        phi = stream_from_theta(t, field)
        f = vorticity_from_stream(phi, field.v, field.k)
        if split:
            f1, f2 = split_f(t, field, applied)
        else:
            f1 = f2 = None
        return phi, f, f1, f2

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(one, times))
    else:
        out = [one(t) for t in times]
    phi = np.array([o[0] for o in out])
    f = np.array([o[1] for o in out])
    f1 = np.array([o[2] for o in out]) if split else None
    f2 = np.array([o[3] for o in out]) if split else None
    return ModeEvolution(field.k, times, field.v, phi, f, f1, f2, list(windows),
                         field.profile, "repr")


def _trapz(y, h):
    return h * (np.sum(y) - 0.5 * (y[0] + y[-1]))


def window_norm(values, v, v_star=None, window=REPORT_WINDOW):
    """L^2 norm of values * Phi*(v - v*) (or of values on `window`)."""
    v = np.asarray(v, dtype=float)
    h = v[1] - v[0]
    if v_star is not None:
        y = np.abs(values * phi_star(v - v_star)) ** 2
    else:
        sel = (v >= window[0]) & (v <= window[1])
        y = np.where(sel, np.abs(values) ** 2, 0.0)
    return float(np.sqrt(_trapz(y, h)))


def rel_l2(a, b, v, window=REPORT_WINDOW, margin=1.0):
    """||a - b|| / ||b|| on the window shrunk by `margin` at both ends."""
    win = (window[0] + margin, window[1] - margin)
    den = window_norm(b, v, window=win)
    return window_norm(a - b, v, window=win) / den if den > 0 else 0.0


def _fit_exponent(xs, norms):
    xs = np.asarray(xs, dtype=float)
    norms = np.asarray(norms, dtype=float)
    keep = norms > 0
    if np.count_nonzero(keep) < 2:
        return float("nan")
    return float(np.polyfit(xs[keep], np.log(norms[keep]), 1)[0])


def weak_proxy(f, v, g=None):
    """|int f g dv| for a fixed Gaussian test function (default width 2 at 0)."""
    v = np.asarray(v, dtype=float)
    gv = np.exp(-0.5 * (v / 2.0) ** 2) if g is None else g(v)
    return float(np.abs(_trapz(f * gv, v[1] - v[0])))


def decay_report(evol, windows=None, left=(-10.0, -4.0), right=(2.0, 5.0), g=None):
    """Measured decay quantities of an evolution.

    (a) <t> |B'(v*)| ||F2_{v*}(t)|| per window, its sup over t and the
        ratio of its values at the last time and at t = 4 (when present);
    (b) exponents of log ||F1_{v*}|| against v* on integer v* in `left`
        (slope) and `right` (minus slope), per time;
    (c) the weak-convergence proxy |int f(t) g| per time.
    """
    if len(evol.times) < 4:
        raise ValueError("decay_report needs at least 4 time samples")
    if evol.f1 is None:
        raise ValueError("evolution has no f1/f2 split")
    windows = list(evol.windows if windows is None else windows)
    times = np.asarray(evol.times)
    bracket_t = np.sqrt(1.0 + times**2)
    f2_scaled = {}
    for vs in windows:
        bp = abs(float(evol.profile.Bp(vs)))
        vals = [bracket_t[j] * bp * window_norm(evol.F2(j, vs), evol.v)
                for j in range(len(times))]
        entry = {"values": vals, "sup": float(max(vals))}
        if 4.0 in evol.times:
            j4 = evol.times.index(4.0)
            entry["ratio_last_to_t4"] = float(vals[-1] / vals[j4]) if vals[j4] > 0 else float("nan")
        f2_scaled[vs] = entry
    lv = np.arange(np.ceil(left[0]), np.floor(left[1]) + 1)
    rv = np.arange(np.ceil(right[0]), np.floor(right[1]) + 1)
    left_exp, right_exp, left_norms = [], [], []
    for j in range(len(times)):
        ln = [window_norm(evol.F1(j, vs), evol.v) for vs in lv]
        rn = [window_norm(evol.F1(j, vs), evol.v) for vs in rv]
        left_norms.append(ln)
        left_exp.append(_fit_exponent(lv, ln))
        right_exp.append(-_fit_exponent(rv, rn))
    weak = [weak_proxy(evol.f[j], evol.v, g) for j in range(len(times))]
    return {
        "k": evol.k,
        "times": list(evol.times),
        "F2_scaled": f2_scaled,
        "F1_left_exponent": left_exp,
        "F1_right_exponent": right_exp,
        "F1_left_norms": left_norms,
        "F1_left_centers": lv.tolist(),
        "weak": weak,
        "weak_ratio": float(weak[-1] / weak[0]) if weak[0] > 0 else float("nan"),
    }


# direct time stepping ---------------------------------------------------------

def elliptic_solve(k, v, rhs):
    """FD solution of (k^2 - d^2) phi = rhs with decay (Robin, rate |k|) ends.

    The end rows are the half-cell balance, which keeps the scheme second
    order at the boundary.
    """
    v = np.asarray(v, dtype=float)
    h = v[1] - v[0]
    n = v.size
    kk = abs(k)
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = -1.0 / h**2
    ab[2, :-1] = -1.0 / h**2
    ab[1] = 2.0 / h**2 + kk * kk
    ab[1, 0] = 1.0 / h**2 + kk / h + 0.5 * kk * kk
    ab[1, -1] = 1.0 / h**2 + kk / h + 0.5 * kk * kk
    b = np.array(rhs, dtype=complex)
    b[0] *= 0.5
    b[-1] *= 0.5
    return solve_banded((1, 1), ab, b, check_finite=False)


def timestep_oracle(k, data, t_final, dt, v=None, times=None, coupled=True, profile=None,
                    h=1.0 / 32, domain=(-22.0, 16.0)):
    """Method of lines for f_t = -ikB f + ikD phi, (k^2 - d^2) phi = -e^{2v} f.

    RK4 on g = f e^{ikB(v)t}, which removes the transport phase.  With
    `coupled=False` the D-term is dropped (pure transport).  Returns a
    ModeEvolution at `times` (default: 0 and t_final), which must be
    multiples of dt.
    """
    if k == 0:
        raise ValueError("mode k must be nonzero")
    profile = profile or data.profile
    if v is None:
        v = _lattice(domain[0], domain[1], h)
    v = np.asarray(v, dtype=float)
    B = profile.B(v)
    if dt * abs(k) * np.max(np.abs(B)) > 0.1:
        raise ValueError("CFL violation: need dt*|k|*max|B| <= 0.1")
    D = profile.D(v) if coupled else np.zeros(v.size)
    e2 = np.exp(2 * v)
    f0 = np.asarray(data.f0(v), dtype=complex)
    times = [0.0, float(t_final)] if times is None else [float(t) for t in times]
    steps = [int(round(t / dt)) for t in times]
    if any(abs(s * dt - t) > 1e-9 * max(1.0, t) for s, t in zip(steps, times)):
        raise ValueError("times must be multiples of dt")

    def rhs(t, g):
        ph = np.exp(1j * k * B * t)
        f = g / ph
        phi = elliptic_solve(k, v, -e2 * f)
        return 1j * k * D * phi * ph

    g = f0.copy()
    t = 0.0
    out_f, out_phi = {}, {}
    targets = dict(zip(steps, times))
    n_steps = max(steps)
    for n in range(n_steps + 1):
        if n in targets:
            f = g * np.exp(-1j * k * B * t)
            out_f[n] = f
            out_phi[n] = elliptic_solve(k, v, -e2 * f)
        if n == n_steps:
            break
        k1 = rhs(t, g)
        k2 = rhs(t + dt / 2, g + dt / 2 * k1)
        k3 = rhs(t + dt / 2, g + dt / 2 * k2)
        k4 = rhs(t + dt, g + dt * k3)
        g = g + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = (n + 1) * dt
    phi = np.array([out_phi[s] for s in steps])
    f = np.array([out_f[s] for s in steps])
    return ModeEvolution(int(k), times, v, phi, f, None, None, [], profile, "timestep")
