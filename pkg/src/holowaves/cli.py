"""Command-line entry point: ``holowaves <command> --config cfg.json --out dir``.

Exit codes: 0 success, 1 usage or configuration error, 2 experiment failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import fields
from importlib import resources
from pathlib import Path

from . import evolve as ev
from . import lab
from . import paracalc as pc
from . import waterwave as ww
from .spectral import ConfigurationError

log = logging.getLogger("holowaves")

COMMANDS = ("simulate", "lifespan", "nf-order", "lin-check", "ratios", "norms", "identity-suite")
SWEEP_KINDS = {"lifespan": "lifespan", "nf-order": "nf_order", "lin-check": "fd_check", "ratios": "ratio_suite"}
TOP_KEYS = ("grid", "solver", "profile", "experiment", "seed")
SOLVER_KEYS = tuple(f.name for f in fields(ev.SolverConfig))
SPEC_KEYS = ("eps_grid", "h_grid", "n_grid", "workers")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", required=True, help="JSON config path, or the name of a bundled config")
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--quiet", action="store_true")
    common.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p = _Parser(prog="holowaves", description="Deep-water gravity waves in holomorphic coordinates.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "lifespan":
            sp.add_argument("--oracle", action="store_true", help="calibrate on the scalar ODE x' = x^2")
    return p


# -- config ----------------------------------------------------------------------------------


def load_config(path: str) -> dict:
    p = Path(path)
    if p.is_file():
        text = p.read_text(encoding="utf-8")
    else:
        bundled = resources.files("holowaves") / "configs" / p.name
        if p.parent != Path(".") or not bundled.is_file():
            raise ConfigurationError(f"config file not found: {path}")
        text = bundled.read_text(encoding="utf-8")
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"malformed JSON in {path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigurationError("config must be a JSON object")
    return cfg


def _need(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigurationError(f"missing field: {where}{key}")
    return d[key]


def resolve_config(cfg: dict, command: str, seed: int | None = None, oracle: bool = False) -> dict:
    """Validate ``cfg`` and fill in every default; raises :class:`ConfigurationError`."""
    extra = set(cfg) - set(TOP_KEYS)
    if extra:
        raise ConfigurationError(f"unknown top-level field(s): {sorted(extra)}")
    grid = _need(cfg, "grid", "")
    if not isinstance(grid, dict):
        raise ConfigurationError("field grid must be an object")
    n = _need(grid, "n", "grid.")
    if not isinstance(n, int) or isinstance(n, bool):
        raise ConfigurationError(f"grid.n must be an integer, got {n!r}")
    lab.make_grid(n)
    solver = dict(cfg.get("solver", {}))
    bad = set(solver) - set(SOLVER_KEYS)
    if bad:
        raise ConfigurationError(f"unknown solver field(s): {sorted(bad)}")
    top_seed = cfg.get("seed", 0) if seed is None else seed
    if not isinstance(top_seed, int) or isinstance(top_seed, bool):
        raise ConfigurationError("seed must be an integer")
    solver["seed"] = top_seed
    try:
        solver = ev.SolverConfig(**solver).as_dict()
    except TypeError as exc:
        raise ConfigurationError(f"bad solver field type: {exc}") from None
    needs_profile = command != "identity-suite" and not (command == "lifespan" and oracle)
    profile = dict(_need(cfg, "profile", "") if needs_profile else cfg.get("profile", {"type": "single_mode", "k": 1, "amplitude": 0.01}))
    ptype = _need(profile, "type", "profile.")
    if ptype not in lab.PROFILE_TYPES:
        raise ConfigurationError(f"profile.type must be one of {lab.PROFILE_TYPES}, got {ptype!r}")
    if ptype == "random" and (seed is not None or "seed" not in profile):
        profile["seed"] = top_seed
    experiment = dict(cfg.get("experiment", {}))
    if not isinstance(experiment, dict):
        raise ConfigurationError("field experiment must be an object")
    if oracle:
        experiment["oracle"] = True
    return {"grid": {"n": n}, "solver": solver, "profile": profile, "experiment": experiment, "seed": top_seed}


def make_spec(cfg: dict, command: str, out: str) -> lab.ExperimentSpec:
    exp = dict(cfg["experiment"])
    spec_args = {k: exp.pop(k) for k in SPEC_KEYS if k in exp}
    spec_args.setdefault("n_grid", [cfg["grid"]["n"]])
    if command == "lifespan" and not spec_args.get("eps_grid"):
        raise ConfigurationError("missing field: experiment.eps_grid")
    return lab.ExperimentSpec(
        kind=SWEEP_KINDS[command],
        profile=cfg["profile"],
        solver=ev.SolverConfig(**cfg["solver"]),
        out=out,
        options=exp,
        **spec_args,
    )


# -- commands --------------------------------------------------------------------------------


def _write_rows(path: Path, rows: list) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


def cmd_simulate(cfg: dict, out: Path) -> int:
    g = lab.make_grid(cfg["grid"]["n"])
    system = cfg["experiment"].get("system", "full")
    if system not in ("full", "diff"):
        raise ConfigurationError(f"experiment.system must be 'full' or 'diff', got {system!r}")
    lab.check_amplitude(g, cfg["profile"])
    init = lab.make_full_state(g, cfg["profile"]) if system == "full" else lab.make_diff_state(g, cfg["profile"])
    traj = ev.run(init, ev.SolverConfig(**cfg["solver"]))
    traj.write_csv(out / "trajectory.csv")
    ww.write_snapshot(traj.snapshots[-1], out / "final_state.json")
    st = traj.status
    (out / "status.json").write_text(
        json.dumps({"kind": st.kind, "reason": st.reason, "t_star": st.t_star, "gauge_drift": traj.gauge_drift}, indent=2),
        encoding="utf-8",
    )
    log.info("simulate: %s (%s) after t = %g", st.kind, st.reason, traj.times[-1])
    return 0


def cmd_sweep(cfg: dict, out: Path, command: str) -> int:
    spec = make_spec(cfg, command, str(out))
    res = lab.run_experiment(spec)
    res.write(out, spec)
    log.info("%s: %s fit=%s", command, res.status, json.dumps(res.fit, default=lab._json_default))
    return 0 if res.passed else 2


def cmd_norms(cfg: dict, out: Path) -> int:
    g = lab.make_grid(cfg["grid"]["n"])
    ds = lab.make_diff_state(g, cfg["profile"])
    cp = pc.control_params(g, ds.Wa, ds.R, cfg["solver"]["delta_J"])
    orders = cfg["experiment"].get("s", [0.0, 0.25, 0.5, 0.75, 1.0])
    summary = dict(cp.as_dict())
    summary["E_full"] = ww.energy_full(ds.to_full())
    summary["E0_lin"] = ww.energy_lin0(g, ds.to_full().W, ds.to_full().Q)
    for s in orders:
        summary[f"pair_Hdot{s:g}"] = pc.pair_norm(g, ds.Wa, ds.R, s)
    (out / "norms.json").write_text(json.dumps(summary, indent=2), encoding="utf-8")
    bands = {s: pc.band_pair_norms(g, ds.Wa, ds.R, s) for s in orders}
    rows = [{"band": j, **{f"s={s:g}": float(bands[s][j]) for s in orders}} for j in range(len(bands[orders[0]]))]
    _write_rows(out / "bands.csv", rows)
    log.info("norms: A=%.3e B=%.3e A14=%.3e Asharp=%.3e", cp.A, cp.B, cp.A14, cp.Asharp)
    return 0


def cmd_identity_suite(cfg: dict, out: Path) -> int:
    exp = cfg["experiment"]
    rows = lab.identity_suite(
        n=cfg["grid"]["n"], members=exp.get("members", 4), amplitude=exp.get("amplitude", 0.05), seed=cfg["seed"]
    )
    _write_rows(out / "identities.csv", rows)
    failed = [r for r in rows if not r["pass"]]
    for r in failed:
        log.warning("identity failed: %s.%s = %.3e > %.1e", r["module"], r["check"], r["value"], r["tol"])
    log.info("identity-suite: %d/%d pass", len(rows) - len(failed), len(rows))
    return 2 if failed else 0


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"holowaves: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        cfg = resolve_config(load_config(args.config), args.command, args.seed, getattr(args, "oracle", False))
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.json").write_text(json.dumps(cfg, indent=2), encoding="utf-8")
        if args.command == "simulate":
            return cmd_simulate(cfg, out)
        if args.command == "norms":
            return cmd_norms(cfg, out)
        if args.command == "identity-suite":
            return cmd_identity_suite(cfg, out)
        return cmd_sweep(cfg, out, args.command)
    except ConfigurationError as exc:
        print(f"holowaves: config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
