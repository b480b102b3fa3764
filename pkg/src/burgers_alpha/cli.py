"""Command-line front end.

    burgers-alpha [--config PATH] [--out DIR] [--workers N] [--seed N] COMMAND [options]

Precedence: built-in defaults < config file < command-line flags. The
config file is ``key = value`` text; keys may sit in any section, and a
section named after the command overrides the others. Every run prints
its resolved configuration and stores it in the manifest.

Exit codes: 0 success, 2 invalid configuration, 3 solver failure,
4 non-convergence.
"""
from __future__ import annotations

import argparse
import configparser
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._backend import BACKEND
from .control import (boundary_null_control, large_alpha_control, large_time_control,
                      nonlinear_null_control)
from .core import ControlWindow, Grid1D, ScalarField, Trajectory
from .dynamics import ForcingSpec, check_estimates, solve_burgers_alpha
from .errors import DivergenceError, SolverError
from .experiments import (CONVERGENCE_COLUMNS, DECAY_COLUMNS, FAMILIES, SweepSpec, controlled_limit_study,
                          decay_study, emit_report, initial_datum, load_samples, uncontrolled_limit_study)
from .hum import cost_study
from .io import fmt, write_manifest, write_table, write_trajectory

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_NONCONVERGED = 0, 2, 3, 4
COMMANDS = ("simulate", "control", "sweep", "decay", "cost")


class ConfigError(ValueError):
    pass


def _floats(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    parts = [p for p in str(text).replace(";", ",").replace(" ", ",").split(",") if p]
    return tuple(float(p) for p in parts)


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _opt_float(text):
    return None if text in (None, "", "none") else float(text)


# key: (parser, default, help, commands or None for all)
OPTIONS = {
    "L": (float, 1.0, "domain length", None),
    "T": (float, 1.0, "final time", None),
    "nx": (int, 63, "interior nodes", None),
    "nt": (int, 200, "time steps", None),
    "alpha": (float, 0.1, "filter length scale", ("simulate", "control")),
    "y0": (str, "sine", f"initial-datum family {FAMILIES}", None),
    "amplitude": (float, 0.1, "sup norm of the initial datum", ("simulate", "control", "sweep")),
    "y0_mode": (int, 1, "wavenumber of the sine family", None),
    "samples": (str, "", "file of raw nodal values (overrides y0)", ("simulate", "control", "sweep")),
    "forcing": (float, 0.0, "body force amplitude f = forcing sin(pi x/L)", ("simulate", "sweep")),
    "window": (_floats, (0.3, 0.7), "control window a,b", ("control", "sweep", "cost")),
    "nested": (_floats, (), "nested endpoints a1,b1,a2,b2 (default: 0.2/0.3 of the width)", ("control", "sweep")),
    "epsilon": (float, 1e-6, "terminal penalty", ("control", "sweep", "cost")),
    "fp_tol": (float, 1e-8, "fixed-point tolerance (sup norm)", ("control", "sweep")),
    "max_fp_iter": (int, 50, "fixed-point iteration cap", ("control", "sweep")),
    "cg_tol": (float, 1e-10, "relative CG tolerance", ("control",)),
    "damping": (float, 1.0, "fixed-point relaxation in (0, 1]", ("control",)),
    "mode": (str, "direct_hum", "direct_hum or cutoff", ("control", "sweep")),
    "large_time": (_bool, False, "coast with v = 0, then control on a unit horizon", ("control",)),
    "delta": (float, 0.05, "H1 threshold that ends the coast", ("control",)),
    "large_alpha": (_bool, False, "sweep alpha_list and report the empirical alpha_0", ("control",)),
    "alpha_list": (_floats, (2.0, 1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01), "alphas for --large-alpha", ("control",)),
    "boundary": (_bool, False, "boundary control at x = L by extension", ("control",)),
    "L_ext": (_opt_float, None, "extended length for --boundary; none means 1.5 L", ("control",)),
    "alphas": (_floats, (0.4, 0.2, 0.1, 0.05), "decreasing alpha list (a trailing 0 is allowed)", ("sweep",)),
    "controlled": (_bool, False, "null-control every alpha instead of free evolution", ("sweep",)),
    "decay_alpha": (float, 0.1, "filter length scale of the decay runs", ("decay",)),
    "amplitudes": (_floats, (0.25, 0.5, 0.75), "sup norms of the decay data", ("decay",)),
    "transport": (_bool, True, "keep the nonlinear transport (false: heat flow)", ("decay",)),
    "A_values": (_floats, (0.0, 1.0, 2.0, 4.0), "amplitudes c of the outward transport c (2x/L - 1)", ("cost",)),
    "T_values": (_floats, (0.25, 0.5, 1.0), "control horizons", ("cost",)),
    "steps_per_unit": (int, 400, "time steps per unit time", ("cost",)),
}

COMMAND_DEFAULTS = {
    "simulate": {"nt": 400},
    "decay": {"L": math.pi, "T": 20.0, "nt": 2000},
    "cost": {"nx": 31},
}

HELP = {
    "simulate": "march the Burgers-alpha system and check the sup-norm bound",
    "control": "null-control the Burgers-alpha system",
    "sweep": "alpha -> 0 convergence table",
    "decay": "fit uncontrolled H1 decay rates",
    "cost": "control cost over transport amplitude and horizon",
}


def _default(cmd, key):
    return COMMAND_DEFAULTS.get(cmd, {}).get(key, OPTIONS[key][1])


def _show(value) -> str:
    if isinstance(value, tuple):
        return ",".join(fmt(v) for v in value)
    return "none" if value is None else fmt(value)


def _brief(value) -> str:
    if isinstance(value, tuple):
        return ",".join(_brief(v) for v in value) or "none"
    if isinstance(value, bool):
        return fmt(value)
    return repr(value) if isinstance(value, float) else ("none" if value in (None, "") else str(value))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="burgers-alpha", description=__doc__.split("\n\n")[0],
                                formatter_class=argparse.RawDescriptionHelpFormatter,
                                epilog="exit codes: 0 ok, 2 invalid config, 3 solver failure, 4 non-convergence")
    p.add_argument("--config", metavar="PATH", default=None, help="key = value config file (default: none)")
    p.add_argument("--out", metavar="DIR", default="out", help="output directory (default: out)")
    p.add_argument("--workers", type=int, default=1, help="worker processes for sweeps (default: 1)")
    p.add_argument("--seed", type=int, default=0, help="recorded in the manifest; runs are deterministic (default: 0)")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd, help=HELP[cmd], description=HELP[cmd])
        for key, (_, _, text, cmds) in OPTIONS.items():
            if cmds is not None and cmd not in cmds:
                continue
            flag = "--" + key.replace("_", "-")
            parse = OPTIONS[key][0]
            meta = "{true,false}" if parse is _bool else ("LIST" if parse is _floats else key.upper())
            sp.add_argument(flag, dest=key, default=None, metavar=meta,
                            help=f"{text} (default: {_brief(_default(cmd, key))})")
    return p


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags into one typed dict."""
    cmd = args.command
    keys = [k for k, spec in OPTIONS.items() if spec[3] is None or cmd in spec[3]]
    values = {k: _default(cmd, k) for k in keys}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        merged = dict(cp.defaults())
        for section in cp.sections():
            if section not in COMMANDS:
                merged.update(cp.items(section, raw=True))
        if cp.has_section(cmd):
            merged.update(cp.items(cmd, raw=True))
        for raw_key, text in merged.items():
            key = raw_key.strip().replace("-", "_")
            if key not in OPTIONS:
                raise ConfigError(f"unknown config key {raw_key!r}")
            if key in values:
                values[key] = _parse_value(key, text)
    for key in keys:
        text = getattr(args, key, None)
        if text is not None:
            values[key] = _parse_value(key, text)
    return values


def _parse_value(key, text):
    try:
        return OPTIONS[key][0](text)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: cannot parse {text!r} ({exc})") from None


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Validated objects built from a resolved option dict."""

    command: str
    values: dict
    grid: Grid1D
    y0: ScalarField | None
    window: ControlWindow | None
    forcing: ForcingSpec | None

    @classmethod
    def build(cls, command: str, values: dict) -> "RunConfig":
        v = values
        try:
            grid = Grid1D(v["L"], v["T"], v["nx"], v["nt"])
        except ValueError as exc:
            raise ConfigError(f"grid: {exc}") from None
        for key in ("epsilon", "fp_tol", "cg_tol", "delta"):
            if key in v and not v[key] > 0:
                raise ConfigError(f"{key} must be positive, got {v[key]}")
        for key in ("alpha", "decay_alpha"):
            if key in v and not v[key] >= 0:
                raise ConfigError(f"{key} must be non-negative, got {v[key]}")
        if "damping" in v and not 0 < v["damping"] <= 1:
            raise ConfigError(f"damping must lie in (0, 1], got {v['damping']}")
        if "max_fp_iter" in v and v["max_fp_iter"] < 1:
            raise ConfigError("max_fp_iter must be at least 1")
        if "mode" in v and v["mode"] not in ("direct_hum", "cutoff"):
            raise ConfigError(f"mode must be direct_hum or cutoff, got {v['mode']!r}")
        if v["y0"] not in FAMILIES:
            raise ConfigError(f"y0 must be one of {FAMILIES}, got {v['y0']!r}")
        if command == "control" and sum(bool(v[k]) for k in ("large_time", "large_alpha", "boundary")) > 1:
            raise ConfigError("choose at most one of large_time, large_alpha, boundary")
        if command == "control" and v["boundary"] and v["mode"] == "cutoff":
            raise ConfigError("boundary control supports mode direct_hum only")

        window = None
        if "window" in v:
            ab = v["window"]
            if len(ab) != 2:
                raise ConfigError(f"window needs two endpoints a,b, got {ab}")
            nested = v.get("nested", ())
            if nested and len(nested) != 4:
                raise ConfigError(f"nested needs four values a1,b1,a2,b2, got {nested}")
            try:
                window = ControlWindow(ab[0], ab[1], *nested)
            except ValueError as exc:
                raise ConfigError(f"window: {exc}") from None
            inside = grid.L if not (command == "control" and v["boundary"]) else math.inf
            if window.b > inside:
                raise ConfigError(f"window ({window.a}, {window.b}) leaves the domain (0, {grid.L})")

        y0 = None
        if "amplitude" in v:
            if v.get("samples"):
                try:
                    y0 = load_samples(v["samples"], grid)
                except OSError as exc:
                    raise ConfigError(f"samples: {exc}") from None
            else:
                y0 = initial_datum(v["y0"], v["amplitude"], grid, v["y0_mode"])
        if command == "sweep":
            try:
                SweepSpec(v["alphas"], y0, grid)
            except ValueError as exc:
                raise ConfigError(f"alphas: {exc}") from None
        if command == "control" and v["large_alpha"]:
            a = v["alpha_list"]
            if not a or any(x <= 0 for x in a) or any(y >= x for x, y in zip(a, a[1:])):
                raise ConfigError(f"alpha_list must be positive and strictly decreasing, got {a}")
        if command == "decay" and any(not 0 <= s < math.pi / grid.L for s in v["amplitudes"]):
            raise ConfigError(f"decay amplitudes must lie in [0, pi/L) = [0, {math.pi / grid.L:.6g})")

        forcing = None
        if v.get("forcing"):
            f0, L = v["forcing"], grid.L
            forcing = ForcingSpec(body_force=Trajectory.from_function(grid, lambda x, t: f0 * np.sin(np.pi * x / L) + 0 * t))
        return cls(command, v, grid, y0, window, forcing)


def _echo(cfg: RunConfig, globals_: dict) -> dict:
    entries = {k: _show(val) for k, val in cfg.values.items()}
    for k, val in globals_.items():
        entries[k] = _show(val)
    print(f"[{cfg.command}]")
    for k in sorted(entries):
        print(f"{k} = {entries[k]}")
    return entries


def cmd_simulate(cfg: RunConfig, out: Path) -> tuple[int, dict]:
    v = cfg.values
    y, z = solve_burgers_alpha(cfg.y0, cfg.forcing, v["alpha"], cfg.grid)
    rep = check_estimates(y, z, cfg.y0, cfg.forcing)
    write_trajectory(out / "y.csv", y)
    write_trajectory(out / "z.csv", z)
    write_table(out / "estimate.csv", ("sup_state", "bound_M", "tolerance", "satisfied", "margin"), [rep.__dict__])
    print(f"sup |y| = {fmt(rep.sup_state)}  M(T) = {fmt(rep.bound_M)}  satisfied = {fmt(rep.satisfied)}")
    return EXIT_OK, {"sup_state": rep.sup_state, "bound_M": rep.bound_M, "satisfied": rep.satisfied}


def _write_trace(path, trace):
    rows = [dict(iteration=i + 1, **r.__dict__) for i, r in enumerate(trace.iterations)]
    write_table(path, ("iteration", "residual_sup", "control_sup", "control_L2", "terminal_L2", "cg_iters"), rows)


def _control_kw(v):
    return dict(mode=v["mode"], fp_tol=v["fp_tol"], max_fp_iter=v["max_fp_iter"], cg_tol=v["cg_tol"],
                damping=v["damping"])


def _summary(res) -> dict:
    return {"converged": res.converged, "terminal_L2": res.terminal_L2, "terminal_tol": res.terminal_tol,
            "control_sup": res.control_sup, "control_L2": res.control_L2, "fp_iters": res.trace.iter_count,
            "replay_gap": res.replay_gap}


def cmd_control(cfg: RunConfig, out: Path) -> tuple[int, dict]:
    v, g = cfg.values, cfg.grid
    kw = _control_kw(v)
    if v["large_alpha"]:
        rows, alpha0 = large_alpha_control(cfg.y0, cfg.window, g, v["alpha_list"], epsilon=v["epsilon"], **kw)
        cols = ("alpha", "converged", "status", "fp_iters", "control_sup", "control_L2", "terminal_L2", "z_sup")
        write_table(out / "large_alpha.csv", cols, [r.as_dict() for r in rows])
        print(f"alpha_0 = {fmt(alpha0)}")
        for r in rows:
            print(f"  alpha = {fmt(r.alpha)}  {r.status}")
        return (EXIT_OK if math.isfinite(alpha0) else EXIT_NONCONVERGED), {"alpha0": alpha0}
    if v["boundary"]:
        kw.pop("mode")
        res = boundary_null_control(cfg.y0, v["alpha"], L_ext=v["L_ext"], window_ext=cfg.window
                                    if tuple(v["window"]) != OPTIONS["window"][1] else None,
                                    epsilon=v["epsilon"], **kw)
        write_table(out / "boundary.csv", ("t", "u"), [{"t": t, "u": u} for t, u in zip(res.t, res.u)])
        write_trajectory(out / "state.csv", res.y)
        _write_trace(out / "trace.csv", res.extended.trace)
        info = {"converged": res.converged, "terminal_L2": res.terminal_L2, "terminal_tol": res.terminal_tol,
                "replay_residual": res.replay_residual}
        print(f"converged = {fmt(res.converged)}  terminal_L2 = {fmt(res.terminal_L2)}  "
              f"replay_residual = {fmt(res.replay_residual)}")
        return (EXIT_OK if res.converged else EXIT_NONCONVERGED), info
    if v["large_time"]:
        lt = large_time_control(cfg.y0, v["alpha"], cfg.window, delta_small=v["delta"], epsilon=v["epsilon"],
                                steps_per_unit=max(1, round(g.nt / g.T)), **kw)
        res = lt.result
        write_table(out / "coast.csv", ("t", "h1"), [{"t": t, "h1": h} for t, h in zip(lt.coast_t, lt.coast_h1)])
        info = _summary(res) | {"coast_time": lt.coast_time, "coast_cap": lt.coast_cap, "rate": lt.rate}
        print(f"coast_time = {fmt(lt.coast_time)}  cap = {fmt(lt.coast_cap)}")
    else:
        res = nonlinear_null_control(cfg.y0, v["alpha"], cfg.window, g, epsilon=v["epsilon"], **kw)
        info = _summary(res)
    write_trajectory(out / "control.csv", res.v)
    write_trajectory(out / "state.csv", res.y)
    _write_trace(out / "trace.csv", res.trace)
    print(f"converged = {fmt(res.converged)}  terminal_L2 = {fmt(res.terminal_L2)}  "
          f"control_sup = {fmt(res.control_sup)}")
    return (EXIT_OK if res.converged else EXIT_NONCONVERGED), info


def cmd_sweep(cfg: RunConfig, out: Path, workers: int = 1) -> tuple[int, dict]:
    v = cfg.values
    f0, L = v["forcing"], cfg.grid.L
    spec = SweepSpec(v["alphas"], cfg.y0, cfg.grid, cfg.window,
                     forcing=(lambda x, t: f0 * np.sin(np.pi * x / L) + 0 * t) if f0 else None,
                     mode=v["mode"], epsilon=v["epsilon"], fp_tol=v["fp_tol"], max_fp_iter=v["max_fp_iter"],
                     workers=workers)
    if v["controlled"]:
        rows, rep = controlled_limit_study(spec)
        code = EXIT_OK if rep["all_converged"] else EXIT_NONCONVERGED
        info = {k: val for k, val in rep.items() if k != "failed"}
        info["failed_alphas"] = " ".join(fmt(a) for a, _ in rep["failed"]) or "none"
    else:
        rows = uncontrolled_limit_study(spec)
        code, info = EXIT_OK, {}
    emit_report(rows, out / "convergence.csv", CONVERGENCE_COLUMNS)
    for r in rows:
        print(f"  alpha = {fmt(r.alpha)}  err_y = {fmt(r.err_y)}  err_z = {fmt(r.err_z)}")
    return code, info


def cmd_decay(cfg: RunConfig, out: Path) -> tuple[int, dict]:
    v, g = cfg.values, cfg.grid
    data = [initial_datum(v["y0"], s, g, v["y0_mode"]) for s in v["amplitudes"]]
    rows = decay_study(data, v["decay_alpha"], g, transport=v["transport"])
    emit_report(rows, out / "decay.csv", DECAY_COLUMNS)
    flagged = [r for r in rows if r.flag]
    for r in rows:
        print(f"  y0_sup = {fmt(r.y0_sup)}  r_theory = {fmt(r.r_theory)}  r_fitted = {fmt(r.r_fitted)}")
    return (EXIT_NONCONVERGED if flagged else EXIT_OK), {"flagged": len(flagged)}


def _outward(c, L):
    def A(x, t):
        return c * (2.0 * x / L - 1.0) + 0.0 * t
    return A


def cmd_cost(cfg: RunConfig, out: Path) -> tuple[int, dict]:
    v, g = cfg.values, cfg.grid
    shape = initial_datum(v["y0"], 1.0, g, v["y0_mode"]).values
    xs = g.x

    def y0(x):
        return np.interp(x, xs, shape)

    family = [_outward(c, g.L) for c in v["A_values"]]
    rows, summary = cost_study(family, list(v["T_values"]), cfg.window, y0, L=g.L, nx=g.nx,
                               steps_per_unit=v["steps_per_unit"], epsilon=v["epsilon"])
    write_table(out / "cost.csv", ("normA_inf", "T", "cost", "fitted_C1"), [r.as_dict() for r in rows])
    print(f"fitted C1 = {fmt(summary['fitted_C1'])}  residual = {fmt(summary['residual'])}")
    return EXIT_OK, summary


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Path(args.out)
    try:
        cfg = RunConfig.build(args.command, resolve(args))
        if args.workers < 1:
            raise ConfigError("workers must be at least 1")
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    entries = _echo(cfg, {"workers": args.workers, "seed": args.seed, "out": str(out)})
    try:
        if args.command == "simulate":
            code, info = cmd_simulate(cfg, out)
        elif args.command == "control":
            code, info = cmd_control(cfg, out)
        elif args.command == "sweep":
            code, info = cmd_sweep(cfg, out, args.workers)
        elif args.command == "decay":
            code, info = cmd_decay(cfg, out)
        else:
            code, info = cmd_cost(cfg, out)
    except DivergenceError as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        code, info = EXIT_NONCONVERGED, {"error": str(exc)}
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        code, info = EXIT_SOLVER, {"error": str(exc)}
    except ValueError as exc:
        # CFL and hypothesis violations surface here
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    write_manifest(out / "manifest.txt", {"command": args.command, "exit_code": code, "backend": BACKEND},
                   {"config": entries, "result": info})
    return code


if __name__ == "__main__":
    sys.exit(main())
