"""Experiment harness: sweeps, fits and their on-disk artifacts.

Every experiment takes an :class:`ExperimentSpec` and returns a
:class:`SweepResult`.  Randomness is drawn only from ``numpy`` generators seeded
by the spec, so results are reproducible.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import evolve as ev
from . import linearized as lin
from . import paracalc as pc
from . import waterwave as ww
from .spectral import ConfigurationError, PeriodicGrid, make_grid

log = logging.getLogger(__name__)

KINDS = ("energy_drift", "lifespan", "nf_order", "fd_check", "ratio_suite", "convergence")
PROFILE_TYPES = ("single_mode", "packet", "random")
A_LIMIT = 0.1


# -- specs and results ------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run.

    ``profile`` is a dict with ``type`` in ``single_mode`` (``k``, ``amplitude``),
    ``packet`` (``center``, ``width``, ``amplitude``) or ``random`` (``seed``,
    ``slope``, ``slope_r``, ``kmax``, ``amplitude``).  ``options`` holds
    experiment specific knobs.
    """

    kind: str
    profile: dict = field(default_factory=lambda: {"type": "single_mode", "k": 1, "amplitude": 0.01})
    eps_grid: tuple = ()
    h_grid: tuple = ()
    n_grid: tuple = (256,)
    solver: ev.SolverConfig = field(default_factory=ev.SolverConfig)
    out: str | None = None
    options: dict = field(default_factory=dict)
    workers: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"experiment kind must be one of {KINDS}, got {self.kind!r}")
        if self.profile.get("type") not in PROFILE_TYPES:
            raise ConfigurationError(f"profile type must be one of {PROFILE_TYPES}")
        for name in ("eps_grid", "h_grid", "n_grid"):
            vals = tuple(getattr(self, name))
            object.__setattr__(self, name, vals)
            if list(vals) != sorted(vals):
                raise ConfigurationError(f"{name} must be sorted ascending")
        if not self.n_grid:
            raise ConfigurationError("n_grid must not be empty")
        if isinstance(self.solver, dict):
            object.__setattr__(self, "solver", ev.SolverConfig(**self.solver))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["solver"] = self.solver.as_dict()
        for name in ("eps_grid", "h_grid", "n_grid"):
            d[name] = list(d[name])
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        data = dict(data)
        data["solver"] = ev.SolverConfig(**data.get("solver", {}))
        return cls(**data)


@dataclass
class SweepResult:
    kind: str
    records: list = field(default_factory=list)
    fit: dict | None = None
    status: str = "pass"
    criteria: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def write(self, out, spec: ExperimentSpec | None = None, trajectories: dict | None = None) -> Path:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        if spec is not None:
            (out / "spec.json").write_text(json.dumps(spec.to_dict(), indent=2), encoding="utf-8")
        write_records_csv(out / "points.csv", self.records)
        meta = {"kind": self.kind, "status": self.status, "fit": self.fit, "criteria": self.criteria}
        (out / "fit.json").write_text(json.dumps(meta, indent=2, default=_json_default), encoding="utf-8")
        if trajectories:
            tdir = out / "trajectories"
            tdir.mkdir(exist_ok=True)
            for name, traj in trajectories.items():
                traj.write_csv(tdir / f"{name}.csv")
        return out

    @classmethod
    def read(cls, out) -> "SweepResult":
        out = Path(out)
        meta = json.loads((out / "fit.json").read_text(encoding="utf-8"))
        records = read_records_csv(out / "points.csv")
        return cls(meta["kind"], records, meta["fit"], meta["status"], meta["criteria"])


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def write_records_csv(path, records: list) -> None:
    cols: list = []
    for r in records:
        cols.extend(c for c in r if c not in cols)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(cols)
        for r in records:
            wr.writerow([_fmt(r.get(c, "")) for c in cols])


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _parse(s: str):
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def read_records_csv(path) -> list:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: _parse(v) for k, v in r.items() if v != ""} for r in rows]


# -- fitting ----------------------------------------------------------------------------


def loglog_fit(x, y) -> dict | None:
    """Least-squares line through ``(log x, log y)``; ``None`` below three points."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    ok = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    if ok.sum() < 3:
        return None
    lx, ly = np.log(x[ok]), np.log(y[ok])
    (slope, icpt), res, *_ = np.polyfit(lx, ly, 1, full=True)
    resid = float(np.sqrt(res[0] / ok.sum())) if len(res) else 0.0
    return {"slope": float(slope), "intercept": float(icpt), "residual": resid, "n_points": int(ok.sum())}


def _map(fn: Callable, items: list, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- profiles ------------------------------------------------------------------------------


def _random_coeffs(seed: int, slope: float, kmax: int, stream: int) -> np.ndarray:
    """Gaussian coefficients times ``k^-slope`` for modes ``-1..-kmax``, independent of ``n``."""
    rng = np.random.default_rng([seed, stream])
    z = rng.standard_normal(kmax) + 1j * rng.standard_normal(kmax)
    return z * np.arange(1, kmax + 1, dtype=float) ** (-slope)


def _holo_from_modes(grid: PeriodicGrid, amps: np.ndarray) -> np.ndarray:
    """Point values of ``sum_k amps[k-1] exp(-i k alpha)``."""
    c = np.zeros(grid.n, complex)
    kmax = min(len(amps), grid.n // 3)
    c[-np.arange(1, kmax + 1) % grid.n] = amps[:kmax]
    return grid.ifft(c)


def shape(grid: PeriodicGrid, profile: dict) -> ww.DiffState:
    """Unit-size differentiated data of a profile (amplitudes applied later)."""
    kind = profile["type"]
    if kind == "single_mode":
        k = int(profile.get("k", 1))
        Wa = _holo_from_modes(grid, np.eye(1, k, k - 1)[0].astype(complex))
        return ww.DiffState(grid, Wa, np.zeros(grid.n, complex))
    if kind == "packet":
        center, width = float(profile.get("center", 16)), float(profile.get("width", 4))
        ks = np.arange(1, grid.n // 3 + 1, dtype=float)
        env = np.exp(-0.5 * ((ks - center) / width) ** 2)
        Wa = _holo_from_modes(grid, env.astype(complex))
        # Right-moving linear wave: R_k = Wa_k / sqrt(k) per mode.
        R = _holo_from_modes(grid, (env / np.sqrt(ks)).astype(complex))
        scale = np.max(np.abs(Wa))
        return ww.DiffState(grid, Wa / scale, R / scale)
    if kind == "random":
        seed = int(profile.get("seed", 0))
        kmax = int(profile.get("kmax", 64))
        cw = _random_coeffs(seed, float(profile.get("slope", 2.0)), kmax, 0)
        cr = _random_coeffs(seed, float(profile.get("slope_r", 2.5)), kmax, 1)
        Wa, R = _holo_from_modes(grid, cw), _holo_from_modes(grid, cr)
        scale = np.max(np.abs(Wa)) + np.max(np.abs(R))
        return ww.DiffState(grid, Wa / scale, R / scale)
    raise ConfigurationError(f"unknown profile type {kind!r}")


def make_diff_state(grid: PeriodicGrid, profile: dict, amplitude: float | None = None) -> ww.DiffState:
    """Differentiated data for a profile.

    ``single_mode`` and ``packet`` amplitudes are the sup norm of ``W`` (the
    surface elevation) for single modes and of ``W_alpha`` for packets; random
    data are scaled so that the control norm ``A`` equals the amplitude.
    """
    amp = float(profile.get("amplitude", 0.01) if amplitude is None else amplitude)
    base = shape(grid, profile)
    if profile["type"] == "single_mode":
        return base.scaled(amp * int(profile.get("k", 1)))
    if profile["type"] == "packet":
        return base.scaled(amp)
    if amp == 0:
        return base.scaled(0.0)
    lam = amp / max(pc.control_params(grid, base.Wa * 1e-6, base.R * 1e-6).A * 1e6, 1e-300)
    for _ in range(30):
        A = pc.control_params(grid, lam * base.Wa, lam * base.R).A
        if abs(A - amp) <= 1e-12 * amp:
            break
        lam *= amp / A
    return base.scaled(lam)


def make_full_state(grid: PeriodicGrid, profile: dict, amplitude: float | None = None) -> ww.FullState:
    return make_diff_state(grid, profile, amplitude).to_full()


def check_amplitude(grid: PeriodicGrid, profile: dict, amplitude: float | None = None, limit: float = A_LIMIT) -> float:
    ds = make_diff_state(grid, profile, amplitude)
    A = pc.control_params(grid, ds.Wa, ds.R).A
    if A > limit * (1 + 1e-9):
        raise ConfigurationError(f"profile amplitude gives A = {A:.3g} > {limit}")
    return A


def _amplitudes(spec: ExperimentSpec) -> tuple:
    return spec.eps_grid or (float(spec.profile.get("amplitude", 0.01)),)


def _precheck(spec: ExperimentSpec) -> None:
    g = make_grid(spec.n_grid[0])
    check_amplitude(g, spec.profile, max(_amplitudes(spec)))


# -- energy drift ------------------------------------------------------------------------


def _energy_point(args) -> dict:
    spec, n, eps, dt = args
    g = make_grid(n)
    st = make_full_state(g, spec.profile, eps)
    cfg = replace(spec.solver, dt=dt)
    traj = ev.run(st, cfg, "full")
    E = traj.column("E_full")
    drift = float(np.max(np.abs(E - E[0])) / abs(E[0])) if E[0] != 0 else float(np.max(np.abs(E - E[0])))
    return {"n": n, "eps": eps, "dt": dt, "drift": drift, "status": traj.status.kind, "t_end": traj.snapshots[-1].t}


def energy_drift_experiment(spec: ExperimentSpec) -> SweepResult:
    """Maximum relative energy drift per ``(n, eps, dt)``; ``h_grid`` holds the time steps."""
    _precheck(spec)
    dts = spec.h_grid or (spec.solver.dt,)
    items = [(spec, n, e, dt) for n in spec.n_grid for e in _amplitudes(spec) for dt in dts]
    recs = _map(_energy_point, items, spec.workers)
    tol = float(spec.options.get("drift_tol", 1e-7))
    min_gain = float(spec.options.get("min_gain", 8.0))
    crit = {"drift_tol": tol, "min_gain": min_gain}
    base = [r for r in recs if r["dt"] == max(dts)]
    ok = all(r["drift"] <= tol and r["status"] == "completed" for r in base)
    gains = []
    for n in spec.n_grid:
        for e in _amplitudes(spec):
            row = sorted((r for r in recs if r["n"] == n and r["eps"] == e), key=lambda r: -r["dt"])
            for a, b in zip(row, row[1:]):
                gains.append(a["drift"] / b["drift"] if b["drift"] > 0 else math.inf)
    crit["gains"] = gains
    if gains:
        ok = ok and all(gv >= min_gain for gv in gains)
    fit = loglog_fit([r["dt"] for r in recs], [r["drift"] for r in recs]) if len(spec.n_grid) * len(_amplitudes(spec)) == 1 else None
    return SweepResult("energy_drift", recs, fit, "pass" if ok else "fail", crit)


# -- lifespan ----------------------------------------------------------------------------


def ode_doubling_time(eps: float, dt: float | None = None) -> float:
    """Doubling time of ``x' = x^2, x(0) = eps`` by RK4 with a root-refined crossing."""
    dt = dt or 1e-3 / eps
    x, t = eps, 0.0
    f = lambda y: y * y
    while True:
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        xn = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if xn >= 2 * eps:
            # Hermite-free refinement: linear interpolation of 1/x, which is exact here.
            a, b = 1 / x, 1 / xn
            return t + dt * (a - 1 / (2 * eps)) / (a - b)
        x, t = xn, t + dt


def _lifespan_point(args) -> dict:
    spec, n, eps, linear_only = args
    g = make_grid(n)
    system = spec.options.get("system", "diff")
    ds = make_diff_state(g, spec.profile, eps)
    st = ds if system == "diff" else ds.to_full()
    Wa0, R0 = ds.Wa, ds.R
    h0 = pc.pair_norm(g, Wa0, R0, 0.75)
    factor = float(spec.options.get("growth_factor", 2.0))

    def stop(row):
        return "doubled" if row["Hs34_pair"] >= factor * h0 else None

    rhs = (lambda u, v: ww.linear_part(g, u, v)) if linear_only else None
    traj = ev.run(st, spec.solver, system, rhs=rhs, stop=stop)
    t_end = traj.snapshots[-1].t
    if traj.status.kind == "blowup":
        T, capped, why = traj.status.t_star, False, traj.status.reason
    elif traj.status.reason == "doubled":
        T, capped, why = t_end, False, "doubled"
    else:
        T, capped, why = spec.solver.t_max, True, "capped"
    hs = traj.column("Hs34_pair")
    # Second smallness quantity of the cubic lifespan statement, recorded only.
    small = pc.pair_norm(g, Wa0, R0, 0.25)
    return {
        "n": n,
        "eps": eps,
        "T": float(T),
        "capped": capped,
        "reason": why,
        "max_growth": float(np.max(hs) / h0) if h0 > 0 else 0.0,
        "H14_pair0": small,
    }


def lifespan_sweep(spec: ExperimentSpec) -> SweepResult:
    """Norm-doubling lifespan ``T(eps)`` and the exponent ``p`` in ``T ~ eps^-p``.

    ``options``: ``oracle`` (use ``x' = x^2``), ``linear_only`` (replace the
    vector field by its linear part), ``p_range`` (acceptance window),
    ``system`` and ``growth_factor``.
    """
    eps = _amplitudes(spec)
    if max(eps) < 4 * min(eps):
        log.warning("eps grid spans only a factor %.2f; exponent fits will be loose", max(eps) / min(eps))
    opts = spec.options
    if opts.get("oracle"):
        recs = [{"eps": e, "T": ode_doubling_time(e), "capped": False, "reason": "oracle"} for e in eps]
        p_range = opts.get("p_range", (0.95, 1.05))
    else:
        _precheck(spec)
        items = [(spec, n, e, bool(opts.get("linear_only"))) for n in spec.n_grid for e in eps]
        recs = _map(_lifespan_point, items, spec.workers)
        p_range = opts.get("p_range", (1.6, 2.4))
    valid = [r for r in recs if not r["capped"]]
    fit = loglog_fit([r["eps"] for r in valid], [r["T"] for r in valid])
    crit = {"p_range": list(p_range), "uncapped": len(valid)}
    if fit is None:
        return SweepResult("lifespan", recs, None, "inconclusive", crit)
    fit["p"] = -fit["slope"]
    ok = p_range[0] <= fit["p"] <= p_range[1]
    return SweepResult("lifespan", recs, fit, "pass" if ok else "fail", crit)


# -- normal form cancellation ----------------------------------------------------------


def nf_full_derivative(grid: PeriodicGrid, W, Q, Wt, Qt):
    """Time derivative of the quadratic normal form variables by the chain rule."""
    d, P = grid.d, grid.P
    dW = Wt - 2 * P(Wt.real * d(W) + W.real * d(Wt))
    dQ = Qt - 2 * P(Wt.real * d(Q) + W.real * d(Qt))
    return grid.holo(dW), grid.holo(dQ)


def cancellation_order_experiment(spec: ExperimentSpec) -> SweepResult:
    """Size of the non-linear residual before and after the quadratic normal form."""
    _precheck(spec)
    recs = []
    for n in spec.n_grid:
        g = make_grid(n)
        # Random data are normalized once and then scaled, so every eps sees the same shape.
        ref = max(_amplitudes(spec))
        base = make_full_state(g, spec.profile, ref) if spec.profile["type"] == "random" else None
        for e in _amplitudes(spec):
            st = base.scaled(e / ref) if base is not None else make_full_state(g, spec.profile, e)
            Wt, Qt = ww.rhs_full(st)
            L0 = ww.linear_part(g, st.W, st.Q)
            rho0 = pc.pair_norm(g, Wt - L0[0], Qt - L0[1], 0.0)
            nf = ww.normal_form_full(st)
            dW, dQ = nf_full_derivative(g, st.W, st.Q, Wt, Qt)
            L1 = ww.linear_part(g, nf.W, nf.Q)
            rho = pc.pair_norm(g, dW - L1[0], dQ - L1[1], 0.0)
            recs.append({"n": n, "eps": e, "rho0": rho0, "rho": rho})
    crit = {"slope0": [2.0, 0.15], "slope": [3.0, 0.3]}
    f0 = loglog_fit([r["eps"] for r in recs], [r["rho0"] for r in recs])
    f1 = loglog_fit([r["eps"] for r in recs], [r["rho"] for r in recs])
    if f0 is None or f1 is None:
        return SweepResult("nf_order", recs, None, "inconclusive", crit)
    fit = {"control": f0, "normalized": f1}
    ok = abs(f0["slope"] - 2.0) <= 0.15 and abs(f1["slope"] - 3.0) <= 0.3
    return SweepResult("nf_order", recs, fit, "pass" if ok else "fail", crit)


# -- finite-difference linearization check ------------------------------------------------


def _direction(grid: PeriodicGrid, seed: int) -> tuple:
    d = make_diff_state(grid, {"type": "random", "seed": seed + 1000, "kmax": 16}, 0.1).to_full()
    return d.W, d.Q


def fd_linearization_check(spec: ExperimentSpec) -> SweepResult:
    """``e(h) = ||(S(u + h d) - S(u))/h - L d||`` at time ``t_max`` for each ``h``.

    The error is measured both in ``(w, q)`` and in diagonal ``(w, r)`` variables.
    """
    if not spec.h_grid:
        raise ConfigurationError("fd_check needs an h grid")
    cfg = replace(spec.solver, record_every=1)
    recs = []
    fits = {}
    for n in spec.n_grid:
        g = make_grid(n)
        for e in _amplitudes(spec):
            if e > 0:
                check_amplitude(g, spec.profile, e)
            u = make_full_state(g, spec.profile, e)
            dW, dQ = _direction(g, int(spec.profile.get("seed", 0)))
            if spec.options.get("zero_direction"):
                dW, dQ = 0 * dW, 0 * dQ
            base = ev.run(u, cfg, "full")
            if not base.status.completed:
                raise RuntimeError(f"background run stopped: {base.status}")
            bgT = ww.derived_fields(base.snapshots[-1])
            bg0 = ww.derived_fields(u)
            w0, r0 = ww.diagonalize(g, dW, dQ, bg0.R)
            lt = ev.solve_linearized_along(base, w0, r0, cfg)
            wT, rT = lt.snapshots[-1].w, lt.snapshots[-1].r
            lw, lq = ww.undiagonalize(g, wT, rT, bgT.R)
            for h in spec.h_grid:
                pert = ev.run(ww.FullState(g, u.W + h * dW, u.Q + h * dQ), replace(cfg, record_every=cfg.n_steps), "full")
                sT = pert.snapshots[-1]
                fw = (sT.W - base.snapshots[-1].W) / h
                fq = (sT.Q - base.snapshots[-1].Q) / h
                err = pc.pair_norm(g, fw - lw, fq - lq, 0.0)
                fr = ww.diagonalize(g, fw, fq, bgT.R)[1]
                err_diag = pc.pair_norm(g, fw - wT, fr - rT, 0.0)
                recs.append({"n": n, "eps": e, "h": h, "err": err, "err_diag": err_diag})
            pts = [r for r in recs if r["n"] == n and r["eps"] == e]
            fits[f"n={n},eps={e}"] = {
                "wq": loglog_fit([r["h"] for r in pts], [r["err"] for r in pts]),
                "wr": loglog_fit([r["h"] for r in pts], [r["err_diag"] for r in pts]),
            }
    tol = float(spec.options.get("slope_tol", 0.2))
    crit = {"slope": [1.0, tol]}
    if all(r["err"] == 0 for r in recs):
        return SweepResult("fd_check", recs, fits, "pass", crit)
    if any(f["wq"] is None for f in fits.values()):
        return SweepResult("fd_check", recs, fits, "inconclusive", crit)
    ok = all(abs(f[k]["slope"] - 1.0) <= tol for f in fits.values() for k in ("wq", "wr"))
    return SweepResult("fd_check", recs, fits, "pass" if ok else "fail", crit)


# -- inequality ratio suite ---------------------------------------------------------------


RATIO_NAMES = ("est_Y", "a_point", "b_bounds", "M_infty", "A14_plus", "WR_nf")


def ratio_values(grid: PeriodicGrid, ds: ww.DiffState) -> dict:
    """LHS/RHS of each audited inequality on one state."""
    df = ww.derived_fields(ds)
    cp = pc.control_params(grid, ds.Wa, ds.R)
    bmo = lambda f, s: pc.bmo_norm(grid, grid.absd(f, s))
    out = {}
    out["est_Y"] = bmo(df.Y, 0.25) / cp.A14
    out["a_point"] = float(np.max(np.abs(df.a))) / pc.besov_inf2(grid, ds.R, 0.5) ** 2
    out["b_bounds"] = bmo(df.b, 0.5) / bmo(ds.R, 0.5)
    out["M_infty"] = float(np.max(np.abs(df.M))) / cp.A14**2
    out["A14_plus"] = (bmo(ds.Wa, 0.25) + bmo(ds.R, 0.75)) / cp.A14
    out["WR_nf"] = ww.normal_form_diff(ds, s=0.75).ratio
    return out


def estimate_ratio_suite(spec: ExperimentSpec) -> SweepResult:
    """Maximum ratio per inequality over a seeded ensemble, for each resolution."""
    members = int(spec.options.get("members", 6))
    amp = float(spec.profile.get("amplitude", 0.05))
    slack = float(spec.options.get("slack", 0.10))
    if members <= 0:
        return SweepResult("ratio_suite", [], None, "inconclusive", {})
    recs = []
    for n in spec.n_grid:
        g = make_grid(n)
        worst = dict.fromkeys(RATIO_NAMES, 0.0)
        for m in range(members):
            prof = dict(spec.profile, type="random", seed=int(spec.profile.get("seed", 0)) + m)
            ds = make_diff_state(g, prof, amp)
            for k, v in ratio_values(g, ds).items():
                worst[k] = max(worst[k], v)
        recs.append({"n": n, **worst})
    verdicts = {}
    for k in RATIO_NAMES:
        seq = [r[k] for r in recs]
        verdicts[k] = bool(all(b <= (1 + slack) * a for a, b in zip(seq, seq[1:])) and all(np.isfinite(seq)))
    status = "pass" if all(verdicts.values()) else "fail"
    return SweepResult("ratio_suite", recs, None, status, {"slack": slack, "per_inequality": verdicts})


# -- convergence -------------------------------------------------------------------------


def plane_wave(grid: PeriodicGrid, k: int, eps: float, t: float):
    """Exact zero-background solution ``w = eps e^{-ik alpha + i omega t}``, ``r = w / omega``."""
    om = math.sqrt(k)
    ph = np.exp(-1j * k * grid.nodes + 1j * om * t)
    return eps * ph, eps / om * ph


def _plane_error(n: int, k: int, eps: float, dt: float, T: float, scheme: str) -> float:
    g = make_grid(n)
    w, r = plane_wave(g, k, eps, 0.0)
    cfg = ev.SolverConfig(dt=dt, t_max=T, scheme=scheme, record_every=10**9, dealias=False)
    rhs = lambda u, v: ww.linear_part(g, u, v)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ev.StabilityWarning)
        traj = ev.run(lin.LinState(g, w, r), cfg, "lin", rhs=rhs)
    last = traj.snapshots[-1]
    we, re_ = plane_wave(g, k, eps, last.t)
    return float(np.sqrt(pc.l2_norm(g, last.w - we) ** 2 + pc.l2_norm(g, last.r - re_) ** 2))


def convergence_experiment(spec: ExperimentSpec) -> SweepResult:
    """Temporal order (rk4), integrating-factor exactness (lawson4), spatial floor."""
    opts = spec.options
    k = int(opts.get("k", spec.profile.get("k", 16)))
    eps = float(spec.profile.get("amplitude", 0.01))
    T = float(opts.get("T", spec.solver.t_max))
    n0 = spec.n_grid[0]
    dts = spec.h_grid or (2e-3, 1e-3, 5e-4)
    recs = []
    for dt in dts:
        recs.append({"test": "temporal", "scheme": "rk4", "n": n0, "dt": dt, "err": _plane_error(n0, k, eps, dt, T, "rk4")})
    lw_err = _plane_error(n0, k, eps, max(dts), T, "lawson4")
    recs.append({"test": "temporal", "scheme": "lawson4", "n": n0, "dt": max(dts), "err": lw_err})
    for n in spec.n_grid:
        recs.append({"test": "spatial", "scheme": "lawson4", "n": n, "dt": max(dts), "err": _plane_error(n, k, eps, max(dts), T, "lawson4")})
    temporal = [r for r in recs if r["test"] == "temporal" and r["scheme"] == "rk4"]
    fit = loglog_fit([r["dt"] for r in temporal], [r["err"] for r in temporal])
    crit = {"order": [4.0, 0.2], "lawson4_tol": 1e-8, "spatial_floor": 1e-10}
    if fit is None:
        return SweepResult("convergence", recs, None, "inconclusive", crit)
    spatial = [r["err"] for r in recs if r["test"] == "spatial"]
    ok = abs(fit["slope"] - 4.0) <= 0.2 and lw_err <= 1e-8 and max(spatial) < 1e-10 * max(1.0, eps)
    return SweepResult("convergence", recs, fit, "pass" if ok else "fail", crit)


EXPERIMENTS: dict[str, Callable[[ExperimentSpec], SweepResult]] = {
    "energy_drift": energy_drift_experiment,
    "lifespan": lifespan_sweep,
    "nf_order": cancellation_order_experiment,
    "fd_check": fd_linearization_check,
    "ratio_suite": estimate_ratio_suite,
    "convergence": convergence_experiment,
}


def run_experiment(spec: ExperimentSpec) -> SweepResult:
    res = EXPERIMENTS[spec.kind](spec)
    if spec.out:
        res.write(spec.out, spec)
    return res


# -- identity checks ------------------------------------------------------------------------


def _rel_dealiased(grid: PeriodicGrid, a: np.ndarray, b: np.ndarray) -> float:
    da, db = grid.fft(a) * grid.dealias_mask, grid.fft(b) * grid.dealias_mask
    scale = np.max(np.abs(db))
    return float(np.max(np.abs(da - db)) / scale) if scale > 0 else float(np.max(np.abs(da)))


def structural_identity_errors(state: ww.FullState) -> dict:
    """Defects of the exact algebraic identities on one full state.

    Keys: ``ytow`` (paraproduct identity for ``Y``), ``m_reps`` (the two
    alternative forms of ``M``), ``full_forms`` and ``diff_forms`` (the two
    algebraic forms of each right-hand side), ``consistency`` (differentiating
    the full flow reproduces the differentiated flow), ``a_imag``.
    """
    g = state.grid
    df = ww.derived_fields(state)
    scaleM = max(float(np.max(np.abs(df.M))), 1e-300)
    (Wt, Qt), (Wt2, Qt2) = ww.rhs_full_forms(state)
    ds = state.to_diff()
    (Wat, Rt), (y1, y2), r2 = ww.rhs_diff_forms(ds)
    Wt_c, Qt_c = g.holo(Wt), g.holo(Qt)
    Wat_f = g.d(Wt_c)
    Wa = g.d(state.W)
    Rt_f = (g.d(Qt_c) - df.R * Wat_f) / (1 + Wa)
    amax = float(np.max(np.abs(df.a)))
    return {
        "ytow": float(np.max(np.abs(ww.ytow_defect(df)))),
        "m_reps": max(float(np.max(np.abs(df.M - df.M_rep1))), float(np.max(np.abs(df.M - df.M_rep2)))) / max(1.0, scaleM),
        "full_forms": max(_rel_dealiased(g, Wt, Wt2), _rel_dealiased(g, Qt, Qt2)),
        "diff_forms": max(_rel_dealiased(g, y1, y2), _rel_dealiased(g, Rt, r2)),
        "consistency": max(_rel_dealiased(g, Wat_f, Wat), _rel_dealiased(g, Rt_f, Rt)),
        "a_imag": float(np.max(np.abs(df.a.imag))) / (1 + amax),
        "min_one_plus_a": ww.taylor_check(df)["min_one_plus_a"],
    }


def ensemble(grid: PeriodicGrid, members: int, amplitude: float, seed: int = 0, kmax: int = 64) -> list:
    """Seeded random full states with control norm ``A`` equal to ``amplitude``."""
    out = []
    for m in range(members):
        prof = {"type": "random", "seed": seed + m, "kmax": kmax}
        ds = make_diff_state(grid, prof, amplitude)
        rng = np.random.default_rng([seed, m, 7])
        w_mean = 1j * amplitude * rng.uniform(-1, 1)
        q_mean = amplitude * rng.uniform(-1, 1)
        out.append(ds.to_full(w_mean, q_mean))
    return out


IDENTITY_TOLERANCES = {
    "ytow": 1e-10,
    "m_reps": 1e-10,
    "full_forms": 1e-9,
    "diff_forms": 1e-9,
    "consistency": 1e-9,
    "a_imag": 1e-11,
}


def identity_suite(n: int = 256, members: int = 4, amplitude: float = 0.05, seed: int = 0) -> list:
    """Rows ``{module, check, value, tol, pass}`` covering every module's invariants."""
    from . import spectral as sp

    g = make_grid(n)
    rng = np.random.default_rng(seed)
    rows = []

    def add(module, check, value, tol, ok=None):
        value = float(value)
        rows.append({"module": module, "check": check, "value": value, "tol": tol, "pass": bool(value <= tol if ok is None else ok)})

    # band-limited samples: the Nyquist mode is deliberately not split by P or H
    f = g.dealias(rng.standard_normal(n) + 1j * rng.standard_normal(n))
    h = g.dealias(rng.standard_normal(n) + 1j * rng.standard_normal(n))
    f0 = f - f.mean()
    nrm = np.max(np.abs(f))
    add("spectral", "hilbert_squared", np.max(np.abs(g.H(g.H(f0)) + f0)) / nrm, 1e-12)
    add("spectral", "P_idempotent", np.max(np.abs(g.P(g.P(f0)) - g.P(f0))) / nrm, 1e-12)
    add("spectral", "P_plus_Pbar", np.max(np.abs(g.P(f) + g.Pbar(f) - f)) / nrm, 1e-12)
    add("spectral", "round_trip", np.max(np.abs(g.ifft(g.fft(f)) - f)) / nrm, 1e-13)
    pars = abs(pc.l2_norm(g, f) - np.sqrt(2 * np.pi * n) * np.linalg.norm(sp.transform(g, f)) / np.sqrt(n)) / pc.l2_norm(g, f)
    add("spectral", "parseval", pars, 1e-12)
    add("paracalc", "partition_of_unity", np.max(np.abs(pc.partition(g).psi.sum(axis=0) - 1)), 1e-14)
    T_f, T_h, Pi = pc.paraproduct_parts(g, f, h)
    add("paracalc", "reconstruction", np.max(np.abs(f * h - T_f - T_h - Pi)) / np.max(np.abs(f * h)), 1e-12)
    add("paracalc", "T_one_identity", np.max(np.abs(pc.para_low_high(g, np.ones(n), h) - h)) / np.max(np.abs(h)), 1e-13)
    add("paracalc", "bmo_vs_sup", pc.bmo_norm(g, f) / (2 * np.max(np.abs(f))), 1.0)
    # well resolved data so products do not alias
    for st in ensemble(g, members, amplitude, seed, kmax=min(64, n // 8)):
        errs = structural_identity_errors(st)
        for k, tol in IDENTITY_TOLERANCES.items():
            add("waterwave", k, errs[k], tol)
        add("waterwave", "taylor_positive", -errs["min_one_plus_a"], 0.0, errs["min_one_plus_a"] > 0)
        E = ww.energy_full(st)
        shifted = ww.FullState(g, np.roll(st.W, 5), np.roll(st.Q, 5))
        add("waterwave", "energy_translation", abs(ww.energy_full(shifted) - E) / abs(E), 1e-12)
    zero = ww.derived_fields(ww.FullState(g, np.zeros(n, complex), np.zeros(n, complex)))
    w = make_diff_state(g, {"type": "random", "seed": seed + 99}, 0.1).Wa
    r = make_diff_state(g, {"type": "random", "seed": seed + 98}, 0.1).R
    lw, lr = lin.rhs_linearized(zero, w, r)
    add("linearized", "zero_background_lin", max(np.max(np.abs(lw + g.d(r))), np.max(np.abs(lr - 1j * w))) / np.max(np.abs(g.d(r))), 1e-12)
    pw, pr = lin.rhs_paralin(zero, w, r)
    add("linearized", "zero_background_paralin", max(np.max(np.abs(pw + g.d(r))), np.max(np.abs(pr - 1j * w))) / np.max(np.abs(g.d(r))), 1e-12)
    e0 = ww.energy_lin0(g, w, r)
    add("linearized", "zero_background_energy", abs(lin.energy_paralin0(zero, w, r) - e0) / e0, 1e-12)
    bg = ww.derived_fields(ensemble(g, 1, amplitude, seed + 5)[0])
    a1, b1 = lin.rhs_linearized(bg, w, r)
    a2, b2 = lin.rhs_linearized(bg, 2 * w, 2 * r)
    add("linearized", "linearity", max(np.max(np.abs(a2 - 2 * a1)), np.max(np.abs(b2 - 2 * b1))) / np.max(np.abs(a1)), 1e-12)
    add("linearized", "holomorphy", max(ww._rel_pos(g, x) for x in lin.rhs_paralin(bg, w, r) + (a1, b1)), 1e-9)
    wp, rp = plane_wave(g, 4, 0.01, 0.0)
    lin_rhs = lambda u, v: ww.linear_part(g, u, v)
    u1, v1 = ev.step(g, wp, rp, 0.01, "lawson4", lin_rhs)
    we, re_ = plane_wave(g, 4, 0.01, 0.01)
    add("evolve", "lawson4_exact_linear", max(np.max(np.abs(u1 - we)), np.max(np.abs(v1 - re_))) / 0.01, 1e-12)
    u0, v0 = ev.step(g, wp, rp, 0.0, "rk4", lin_rhs)
    add("evolve", "dt_zero_identity", max(np.max(np.abs(u0 - wp)), np.max(np.abs(v0 - rp))), 0.0)
    return rows


# -- paradifferential energy audit -------------------------------------------------------------


def paralin_energy_audit(state: ww.FullState, w: np.ndarray, r: np.ndarray, h: float = 1e-4) -> dict:
    """Coercivity and growth ratios of the paradifferential energy at one background.

    ``coercivity`` is ``E / ||(w, r)||^2``; ``growth`` is ``|dE/dt| / (A14^2 E)``
    where ``dE/dt`` combines the paradifferential flow of ``(w, r)`` and the
    nonlinear flow of the background by centered differences.
    """
    g = state.grid
    bg = ww.derived_fields(state)
    cp = pc.control_params(g, bg.Wa, bg.R)
    E = lin.energy_paralin0(bg, w, r)
    H0 = pc.pair_norm(g, w, r, 0.0) ** 2
    wt, rt = lin.rhs_paralin(bg, w, r)
    Wt, Qt = ww.rhs_full(state)
    vals = []
    for sgn in (1, -1):
        s2 = ww.FullState(g, state.W + sgn * h * Wt, state.Q + sgn * h * Qt)
        vals.append(lin.energy_paralin0(ww.derived_fields(s2), w + sgn * h * wt, r + sgn * h * rt))
    dEdt = (vals[0] - vals[1]) / (2 * h)
    return {"A": cp.A, "A14": cp.A14, "E": E, "coercivity": E / H0, "dEdt": dEdt, "growth": abs(dEdt) / (cp.A14**2 * E)}
