"""Command-line driver: key-value run configs, pipeline stages, CSV/JSON export.

A config file holds one ``key = value`` pair per line; ``#`` starts a
comment.  Lists are comma separated.  Every stage writes CSV tables with a
header row into the output directory, and the run writes ``manifest.json``
with the config echo, package versions, per-stage timings and the measured
constants.  CSV files carry no timings, so identical configs give
byte-identical CSVs.

Example::

    stages = profile, sdf
    k = 2
    w = -2, 0
    data = gaussian(0, 1)
"""
from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

STAGES = ("profile", "green", "sdf", "evolve", "spectrum", "verify")


class ConfigError(ValueError):
    """Malformed run configuration."""


class StageError(RuntimeError):
    def __init__(self, stage, message):
        super().__init__(f"stage '{stage}' failed: {message}")
        self.stage = stage


# configuration ----------------------------------------------------------------

def _floats(s):
    return [float(x) for x in s.split(",") if x.strip()]


def _ints(s):
    return [int(x) for x in s.split(",") if x.strip()]


def _names(s):
    return [x.strip() for x in s.split(",") if x.strip()]


def _bool(s):
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


@dataclass
class RunConfig:
    stages: list = field(default_factory=list)
    profile: str = "default"
    profile_file: str | None = None
    grid_h: float | None = None
    v_min: float | None = None
    v_max: float | None = None
    k: list = field(default_factory=lambda: [2])
    w: list = field(default_factory=lambda: [0.0])
    eps0: float | None = None
    eps_levels: int = 3
    h_richardson: bool = True
    t: list = field(default_factory=lambda: [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0])
    data: str = "gaussian(0, 1)"
    check_tails: bool = True
    method: str = "repr"
    dt: float = 0.05
    windows: list = field(default_factory=lambda: [-2.0, 0.0, 2.0])
    w_range: list = field(default_factory=lambda: [-14.0, 8.0])
    lap: bool = False
    lap_w: list = field(default_factory=lambda: [0.0, 2.0])
    lap_eps: list = field(default_factory=lambda: [1e-4, 1e-5])
    green_stride: int = 4
    n_random: int = 1000
    out: str = "out"
    threads: int = 1
    seed: int = 0
    tol_identity: float = 1e-10
    tol_spectrum: float = 5e-3

    _PARSERS = {
        "stages": _names, "profile": str.strip, "profile_file": str.strip,
        "grid_h": float, "v_min": float, "v_max": float, "k": _ints, "w": _floats,
        "eps0": float, "eps_levels": int, "h_richardson": _bool, "t": _floats,
        "data": str.strip, "check_tails": _bool, "method": str.strip, "dt": float,
        "windows": _floats, "w_range": _floats, "lap": _bool, "lap_w": _floats,
        "lap_eps": _floats, "green_stride": int, "n_random": int, "out": str.strip,
        "threads": int, "seed": int, "tol_identity": float, "tol_spectrum": float,
    }

    @classmethod
    def keys(cls):
        return [f.name for f in fields(cls)]

    @classmethod
    def parse(cls, text, base_dir=None):
        """Build a config from key-value text; unknown keys are errors."""
        values = {}
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {n}: expected 'key = value', got {raw.strip()!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in cls._PARSERS:
                raise ConfigError(f"line {n}: unknown config key '{key}'")
            try:
                values[key] = cls._PARSERS[key](val)
            except ValueError as exc:
                raise ConfigError(f"line {n}: bad value for '{key}': {exc}") from None
        cfg = cls(**values)
        cfg._base = Path(base_dir) if base_dir is not None else Path(".")
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path):
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        return cls.parse(path.read_text(), base_dir=path.parent)

    def validate(self):
        bad = [s for s in self.stages if s not in STAGES]
        if bad:
            raise ConfigError(f"unknown stage(s) {bad}; choose from {list(STAGES)}")
        if self.grid_h is not None and not self.grid_h > 0:
            raise ConfigError("grid_h must be positive")
        if self.v_min is not None and self.v_max is not None and not self.v_min < self.v_max:
            raise ConfigError("v_min must be below v_max")
        if any(k == 0 for k in self.k):
            raise ConfigError("mode list k must not contain 0")
        if self.method not in ("repr", "timestep", "both"):
            raise ConfigError("method must be repr, timestep or both")
        if self.profile not in ("default", "tabulated"):
            raise ConfigError("profile must be 'default' or 'tabulated'")
        if self.profile == "tabulated" and not self.profile_file:
            raise ConfigError("profile = tabulated needs profile_file")
        if len(self.w_range) != 2 or not self.w_range[0] < self.w_range[1]:
            raise ConfigError("w_range must be two increasing numbers")
        if self.eps_levels < 1:
            raise ConfigError("eps_levels must be at least 1")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        return self

    def echo(self):
        return {name: getattr(self, name) for name in self.keys()}

    def resolve(self, path):
        p = Path(path)
        return p if p.is_absolute() else getattr(self, "_base", Path(".")) / p

    def domain(self, default):
        lo = default[0] if self.v_min is None else self.v_min
        hi = default[1] if self.v_max is None else self.v_max
        if not lo < hi:
            raise ValueError("v_min must be below v_max")
        return (lo, hi)


# helpers ------------------------------------------------------------------------

def write_csv(path, header, columns):
    """CSV with a header row, '.' decimals and '\\n' line endings."""
    cols = [np.asarray(c) for c in columns]
    n = len(cols[0]) if cols else 0
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(n):
            fh.write(",".join(_fmt(c[i]) for c in cols) + "\n")


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".16e")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _read_two_columns(path):
    arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if arr.shape[1] < 2:
        raise ValueError(f"{path}: need two columns")
    return arr[:, 0], arr[:, 1]


def make_profile(cfg):
    from .profile import DefaultProfile, TabulatedProfile

    if cfg.profile == "default":
        return DefaultProfile()
    path = cfg.resolve(cfg.profile_file)
    if not path.is_file():
        raise FileNotFoundError(f"profile file not found: {path}")
    r, om = _read_two_columns(path)
    return TabulatedProfile(r, om)


def make_raw_data(spec, cfg):
    """Callable or (v, f) samples from 'gaussian(c, s)', 'compact(c, hw)' or a CSV path."""
    from .sdf import compact_bump, gaussian

    s = spec.strip()
    for name, fn in (("gaussian", gaussian), ("compact", compact_bump)):
        if s.startswith(name + "(") and s.endswith(")"):
            args = _floats(s[len(name) + 1:-1])
            return fn(*args)
    path = cfg.resolve(s)
    if not path.is_file():
        raise FileNotFoundError(f"data file not found: {path}")
    return _read_two_columns(path)


def make_data(k, cfg, profile):
    from .sdf import build_initial_data

    return build_initial_data(k, make_raw_data(cfg.data, cfg), profile=profile,
                              check_tails=cfg.check_tails)


# stages ---------------------------------------------------------------------------

def stage_profile(cfg, out, profile):
    h = cfg.grid_h or 1.0 / 64
    lo, hi = cfg.domain((-12.0, 12.0))
    v = lo + h * np.arange(int(round((hi - lo) / h)) + 1)
    r = np.exp(v)
    write_csv(out / "profile_r.csv", ["r", "omega", "U", "b", "d"],
              [r, profile.omega(r), profile.U(r), profile.b(r), profile.d(r)])
    B, Bp, Bpp, D = profile.suite(v)
    write_csv(out / "profile_v.csv", ["v", "B", "Bp", "Bpp", "D"], [v, B, Bp, Bpp, D])
    ident = 2 * Bp + Bpp - np.exp(2 * v) * D
    return {
        "b0": float(profile.b(0.0)),
        "c_star": float(profile.c_star),
        "identity_max_residual": float(np.max(np.abs(ident))),
        "assumptions": profile.check_assumptions(),
    }


def stage_green(cfg, out, profile):
    from .greens import Grid, GreenKernel, free_green, longrange_green, verify_green_bound

    h = cfg.grid_h or 1.0 / 16
    stride = max(1, cfg.green_stride)
    reports = []
    for k in cfg.k:
        for w in cfg.w:
            if w <= -5:
                lo, hi = cfg.domain((w - 12.0, 12.0))
                ker = longrange_green(k, w, Grid.span(lo, hi, h), profile)
            else:
                lo, hi = cfg.domain((-12.0, 12.0))
                grid = Grid.span(lo, hi, h)
                vv = grid.v
                ker = GreenKernel(k, float(w), grid, free_green(k, vv[:, None], vv[None, :]),
                                  "free")
            rep = verify_green_bound(ker)
            rep.update({"k": k, "w": w, "kernel": ker.potential_tag, "h": h})
            reports.append(rep)
            v = ker.grid.v[::stride]
            G = ker.values[::stride, ::stride]
            V, R = np.meshgrid(v, v, indexing="ij")
            write_csv(out / f"green_k{k}_w{w:g}.csv", ["v", "rho", "G"],
                      [V.ravel(), R.ravel(), G.ravel()])
    return {"bounds": reports}


def stage_sdf(cfg, out, profile):
    from .sdf import depletion_fit, jump_check, limit_gamma, pv_residual

    h = cfg.grid_h or 1.0 / 64
    report = []
    for k in cfg.k:
        data = make_data(k, cfg, profile)
        rows_w, rows_v, rows_g, rows_re = [], [], [], []
        for w in cfg.w:
            dom = None
            if cfg.v_min is not None or cfg.v_max is not None:
                from .sdf import default_domain
                dom = cfg.domain(default_domain(w))
            sl = limit_gamma(k, w, data, eps0=cfg.eps0, levels=cfg.eps_levels, h=h,
                             domain=dom, profile=profile, h_richardson=cfg.h_richardson)
            entry = {
                "k": k, "w": w, "trace": sl.trace, "trace_im": sl.trace_im,
                "extrapolation_order": sl.extrapolation_order, "flagged": sl.flagged,
                "eps_schedule": sl.eps_schedule,
                "jump_residual": jump_check(sl, data),
                "pv_residual": pv_residual(sl, data, profile=profile),
            }
            if w <= -6:
                try:
                    entry["depletion_exponent"] = depletion_fit(sl)
                except ValueError as exc:
                    entry["depletion_exponent"] = None
                    entry["depletion_note"] = str(exc)
            report.append(entry)
            rows_w.append(np.full(sl.v.size, w))
            rows_v.append(sl.v)
            rows_g.append(sl.gamma_limit)
            rows_re.append(sl.real_part)
        write_csv(out / f"sdf_k{k}.csv", ["w", "v", "s", "gamma", "gamma_re"],
                  [np.concatenate(rows_w), np.concatenate(rows_v),
                   np.concatenate(rows_v) - np.concatenate(rows_w),
                   np.concatenate(rows_g), np.concatenate(rows_re)])
    return {"slices": report}


def stage_evolve(cfg, out, profile):
    from .evolution import (compute_theta_field, decay_report, evolve, rel_l2,
                            timestep_oracle)

    h = cfg.grid_h or 1.0 / 32
    result = []
    for k in cfg.k:
        data = make_data(k, cfg, profile)
        entry = {"k": k}
        rep = None
        if cfg.method in ("repr", "both"):
            dom = None
            if cfg.v_min is not None or cfg.v_max is not None:
                dom = cfg.domain((cfg.w_range[0] - 8.0, max(14.0, cfg.w_range[1] + 8.0)))
            fld = compute_theta_field(k, data, h=h, w_range=tuple(cfg.w_range), domain=dom,
                                      levels=cfg.eps_levels, profile=profile,
                                      threads=cfg.threads)
            rep = evolve(fld, cfg.t, cfg.windows, split=True, threads=cfg.threads)
            _write_evolution(out / f"evolve_k{k}_repr.csv", rep)
            entry["theta_field"] = {"n_w": int(fld.w.size), "n_v": int(fld.v.size),
                                    "n_flagged": fld.meta["n_flagged"]}
            if len(rep.times) >= 4:
                entry["decay"] = decay_report(rep)
        if cfg.method in ("timestep", "both"):
            v = rep.v if rep is not None else None
            ts = timestep_oracle(k, data, max(cfg.t), cfg.dt, v=v, times=cfg.t, profile=profile,
                                 h=h)
            _write_evolution(out / f"evolve_k{k}_timestep.csv", ts)
            if rep is not None:
                entry["repr_vs_timestep"] = {
                    "phi": [rel_l2(rep.phi[j], ts.phi[j], rep.v) for j in range(len(cfg.t))],
                    "f": [rel_l2(rep.f[j], ts.f[j], rep.v) for j in range(len(cfg.t))],
                }
        result.append(entry)
    return {"modes": result}


def _write_evolution(path, ev):
    nt, nv = ev.phi.shape
    cols = [np.repeat(np.asarray(ev.times, dtype=float), nv), np.tile(ev.v, nt),
            ev.phi.real.ravel(), ev.phi.imag.ravel(), ev.f.real.ravel(), ev.f.imag.ravel()]
    header = ["t", "v", "phi_re", "phi_im", "f_re", "f_im"]
    if ev.f1 is not None:
        cols += [ev.f1.real.ravel(), ev.f1.imag.ravel(), ev.f2.real.ravel(), ev.f2.imag.ravel()]
        header += ["f1_re", "f1_im", "f2_re", "f2_im"]
    write_csv(path, header, cols)


def stage_spectrum(cfg, out, profile):
    from .spectrum import assemble_Lk, lap_coercivity, spectrum_report

    h = cfg.grid_h or 1.0 / 16
    dom = cfg.domain((-12.0, 12.0))
    reports, laps = [], []
    for k in cfg.k:
        op = assemble_Lk(k, h=h, domain=dom, profile=profile)
        rep = spectrum_report(op, delta=cfg.tol_spectrum)
        lam = rep.pop("eigenvalues")
        write_csv(out / f"spectrum_k{k}.csv", ["index", "eigenvalue"],
                  [np.arange(lam.size), lam])
        reports.append(rep)
        if cfg.lap:
            for w in cfg.lap_w:
                for eps in cfg.lap_eps:
                    laps.append(lap_coercivity(k, 1, w, eps, profile=profile))
    if laps:
        write_csv(out / "lap.csv", ["k", "w", "epsilon", "sigma_min", "op_norm"],
                  [[d["k"] for d in laps], [d["w"] for d in laps],
                   [d["epsilon"] for d in laps], [d["sigma_min"] for d in laps],
                   [d["op_norm"] for d in laps]])
    return {"spectra": reports, "lap": laps}


def stage_verify(cfg, out, profile):
    """Identity residuals at random points and weight-bound ratio tables."""
    from .greens import longrange_green, verify_green_bound

    rng = np.random.default_rng(cfg.seed)
    r = rng.uniform(0.0, 20.0, cfg.n_random)
    v = rng.uniform(-10.0, 4.0, cfg.n_random)
    B, Bp, Bpp, D = profile.suite(v)
    ident_v = float(np.max(np.abs(2 * Bp + Bpp - np.exp(2 * v) * D)))
    rr = r[r > 0]
    ident_r = float(np.max(np.abs(profile.U_prime(rr) + profile.U(rr) / rr - profile.omega(rr))))
    rows = []
    h = cfg.grid_h or 1.0 / 16
    for k in cfg.k:
        for w in cfg.w:
            if w > -5:
                continue
            rep = verify_green_bound(longrange_green(k, w, profile=profile, h=h))
            rows.append((k, w, rep["max_ratio_G"], rep["max_ratio_dG"]))
            print(f"k={k:<3d} w={w:<8g} |k|G/varpi={rep['max_ratio_G']:.4g}  "
                  f"|dG|/varpi={rep['max_ratio_dG']:.4g}")
    if rows:
        cols = list(zip(*rows))
        write_csv(out / "verify_bounds.csv", ["k", "w", "ratio_G", "ratio_dG"], cols)
    ok = ident_v < cfg.tol_identity and ident_r < cfg.tol_identity
    print(f"identities at {cfg.n_random} random points: "
          f"v-form {ident_v:.2e}, r-form {ident_r:.2e} -> {'PASS' if ok else 'FAIL'}")
    if not ok:
        raise ValueError(f"identity residual above tol_identity = {cfg.tol_identity:g}")
    return {"identity_v": ident_v, "identity_r": ident_r, "bounds": [
        {"k": a, "w": b, "ratio_G": c, "ratio_dG": d} for a, b, c, d in rows]}


STAGE_FUNCS = {
    "profile": stage_profile,
    "green": stage_green,
    "sdf": stage_sdf,
    "evolve": stage_evolve,
    "spectrum": stage_spectrum,
    "verify": stage_verify,
}


# runner -----------------------------------------------------------------------------

def _versions():
    import scipy

    from . import __version__
    return {"python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "vortexlab": __version__}


def run(cfg):
    """Execute the configured stages; returns (status, manifest)."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"config": cfg.echo(), "versions": _versions(), "timings": {},
                "constants": {}, "status": "ok"}
    status = 0
    try:
        profile = make_profile(cfg)
        for name in cfg.stages:
            t0 = time.perf_counter()
            try:
                manifest["constants"][name] = STAGE_FUNCS[name](cfg, out, profile)
            except Exception as exc:
                raise StageError(name, exc) from exc
            finally:
                manifest["timings"][name] = time.perf_counter() - t0
    except StageError as exc:
        manifest["status"] = "error"
        manifest["error"] = {"stage": exc.stage, "message": str(exc)}
        print(f"error: {exc}", file=sys.stderr)
        status = 2
    except (OSError, ValueError) as exc:
        manifest["status"] = "error"
        manifest["error"] = {"stage": "setup", "message": str(exc)}
        print(f"error: stage 'setup' failed: {exc}", file=sys.stderr)
        status = 2
    with open(out / "manifest.json", "w", newline="\n") as fh:
        json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return status, manifest


# argument parsing -----------------------------------------------------------------------

def _global_flags(parser, suppress):
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=d, help="key-value run config")
    parser.add_argument("--out", default=d, help="output directory")
    parser.add_argument("--threads", type=int, default=d, help="worker threads")
    parser.add_argument("--seed", type=int, default=d, help="seed for randomized checks")


def build_parser():
    p = argparse.ArgumentParser(prog="vortexlab",
                                description="Spectral-density vortex laboratory.")
    _global_flags(p, suppress=False)
    sub = p.add_subparsers(dest="command")
    S = argparse.SUPPRESS

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        _global_flags(sp, suppress=True)
        return sp

    sp = add("profile", "tabulate Omega, U, b, d and B, B', B'', D")
    sp.add_argument("--grid-h", type=float, default=S)
    sp.add_argument("--domain", default=S, help="v_min,v_max")

    sp = add("green", "Green's kernels and their weight bounds")
    sp.add_argument("--k", default=S)
    sp.add_argument("--w", default=S)
    sp.add_argument("--grid-h", type=float, default=S)
    sp.add_argument("--domain", default=S)

    sp = add("sdf", "spectral density limits, trace, jump and PV checks")
    sp.add_argument("--k", default=S)
    sp.add_argument("--w-list", dest="w", default=S)
    sp.add_argument("--eps0", type=float, default=S)
    sp.add_argument("--eps-levels", type=int, default=S)
    sp.add_argument("--grid-h", type=float, default=S)
    sp.add_argument("--domain", default=S)
    sp.add_argument("--data", default=S, help="CSV (v, f0), gaussian(c,s) or compact(c,hw)")

    sp = add("evolve", "representation-formula evolution and decay report")
    sp.add_argument("--k", default=S)
    sp.add_argument("--t-list", dest="t", default=S)
    sp.add_argument("--data", default=S)
    sp.add_argument("--method", choices=["repr", "timestep", "both"], default=S)
    sp.add_argument("--windows", default=S)
    sp.add_argument("--grid-h", type=float, default=S)

    sp = add("spectrum", "eigenvalues of L_k and limiting-absorption constants")
    sp.add_argument("--k", default=S)
    sp.add_argument("--grid-h", type=float, default=S)
    sp.add_argument("--domain", default=S)
    sp.add_argument("--lap", action="store_true", default=S)

    sp = add("verify", "identity residuals and weight-bound ratio tables")
    sp.add_argument("--k", default=S)
    sp.add_argument("--w", default=S)
    sp.add_argument("--grid-h", type=float, default=S)
    return p


_LIST_FLAGS = {"k": _ints, "w": _floats, "t": _floats, "windows": _floats}


def config_from_args(args):
    ns = vars(args)
    cfg = RunConfig.load(ns["config"]) if ns.get("config") else RunConfig().validate()
    if ns.get("command"):
        cfg.stages = [ns["command"]]
    for key, val in ns.items():
        if key in ("config", "command") or val is None:
            continue
        if key == "domain":
            lo, hi = _floats(val)
            cfg.v_min, cfg.v_max = lo, hi
        elif key in _LIST_FLAGS:
            setattr(cfg, key, _LIST_FLAGS[key](val))
        else:
            setattr(cfg, key, val)
    return cfg.validate()


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    status, _ = run(cfg)
    return status


if __name__ == "__main__":
    sys.exit(main())
