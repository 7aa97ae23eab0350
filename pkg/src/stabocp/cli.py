"""Command-line front end: ``stabocp <command> [--config FILE] [flags]``.

Every command reads defaults, then the JSON ``--config`` file (unknown keys
are rejected), then explicit flags. Output goes to ``--output`` or stdout.
Exit codes: 0 success, 2 bad configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidInputError, StabOCPError
from .ivp import integrate
from .problems import PROBLEMS, make_problem
from .solver import METHODS, SolverConfig, fit_slope, run_ladder, solve
from .stabcoeffs import coefficients, unroll_tableau
from .stabilitylab import STAGE_METHODS, emit_stability_csv
from .tableau import check_order_two, dirk2 as DIRK2, double_adjoint, hat_tableau, symplecticity_residual

__all__ = ["main", "build_parser", "COMMANDS"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(Exception):
    pass


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) if not isinstance(v, str) else v for v in r])
    return buf.getvalue()


def _json(obj) -> str:
    def conv(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        raise TypeError(type(o))
    return json.dumps(obj, indent=2, default=conv, allow_nan=False) + "\n"


# --- commands ----------------------------------------------------------------
# Each command takes the merged parameter dict and returns the artifact text.

def cmd_coeffs(p) -> str:
    c = coefficients(p["order"], p["stages"], p["eta"])
    rows = []
    for i in range(1, c.s + 1):
        nu = c.nu_at(i) if i >= 2 else None
        rows.append([i, c.mu_at(i), nu, c.alpha_at(i), c.omega0, c.omega, c.a_final, c.b_final_T])
    return _csv(["i", "mu", "nu", "alpha", "omega0", "omega", "a_s", "b_s_T_s"], rows)


def cmd_tableau(p) -> str:
    """Long-format CSV ``block,i,j,value`` for ``A``, ``b``, ``c``, the double
    adjoint and the symplecticity residual of the pair with ``a^``."""
    if p["kind"] == "dirk2":
        t = DIRK2
    elif p["kind"] == "stabilized":
        t = unroll_tableau(coefficients(p["order"], p["stages"], p["eta"]))
    else:
        raise InvalidInputError("kind must be stabilized or dirk2")
    da = double_adjoint(t)
    res = symplecticity_residual(hat_tableau(t))
    rows = []
    for block, M in (("A", t.A), ("A_double_adjoint", da.A), ("symplecticity_residual", res)):
        rows += [[block, i + 1, j + 1, M[i, j]] for i in range(t.s) for j in range(t.s)]
    for block, v in (("b", t.b), ("c", t.c), ("b_double_adjoint", da.b)):
        rows += [[block, i + 1, "", v[i]] for i in range(t.s)]
    rows.append(["order_two", "", "", int(check_order_two(t))])
    return _csv(["block", "i", "j", "value"], rows)


def cmd_stability(p) -> str:
    if p["method"] not in STAGE_METHODS:
        raise InvalidInputError(f"method must be one of {STAGE_METHODS}")
    return emit_stability_csv(p["method"], p["stages"], p["eta"], (p["zmin"], p["zmax"]), p["points"])


def _ode_rhs(y):
    return np.cos(y)


def _ode_exact(t):
    return 2.0 * np.arctan(np.tanh(t / 2.0))


def cmd_converge_ode(p) -> str:
    """``y' = cos y``, ``y(0) = 0`` on ``[0, 1]`` with the fixed stage count."""
    if p["method"] not in ("cheb1", "rkc2", "rkc-classical"):
        raise InvalidInputError("method must be cheb1, rkc2 or rkc-classical")
    rows, hs, errs = [], [], []
    for k in range(p["pmin"], p["pmax"] + 1):
        N = 2 ** k
        tr = integrate(_ode_rhs, np.array([0.0]), 1.0, N, method=p["method"], s=p["stages"], eta=p["eta"])
        err = float(np.max(np.abs(tr.states[:, 0] - _ode_exact(tr.times))))
        rows.append([1.0 / N, err, None, p["stages"], tr.evals])
        hs.append(1.0 / N)
        errs.append(err)
    print(f"fitted slope {fit_slope(hs, errs):.4f}", file=sys.stderr)
    return _csv(["h", "state_error", "control_error", "s_used", "f_evals"], rows)


def _problem(p):
    params = {}
    if p["problem"] == "stiff-sp":
        params["epsilon"] = p["epsilon"]
    elif p["problem"] == "burgers":
        params.update(M=p["M"], mu=p["mu"], nu=p["nu"], alpha=p["alpha"], T=p["T"])
    return make_problem(p["problem"], **params)


def _solver_kw(p):
    return dict(tol=p["tol"], max_iters=p["max_iters"], trisection_iters=p["trisection_iters"],
                eta=p["eta"], stages=p["stages"])


def cmd_converge_ocp(p) -> str:
    prob = _problem(p)
    if p["method"] not in METHODS:
        raise InvalidInputError(f"method must be one of {METHODS}")
    Ns = [2 ** k for k in range(p["pmin"], p["pmax"] + 1)]
    if p["reference"] == "exact" and not hasattr(prob, "u_star"):
        raise InvalidInputError(f"{prob.name} has no exact solution; set reference to a power of two exponent")
    header = ["h", "state_error", "control_error", "s_used", "f_evals"]
    kw = _solver_kw(p)
    rows = []
    try:
        reference = "exact"
        if p["reference"] != "exact":
            reference = solve(prob, SolverConfig(N=2 ** int(p["reference"]), method=p["method"], **kw))
        for N in Ns:
            rows += run_ladder(prob, p["method"], [N], reference=reference, **kw)[0]
    except StabOCPError as exc:
        done = [[r.h, r.state_error, r.control_error, r.s_used, r.f_evals, ""] for r in rows]
        partial = _csv(header + ["error"], done + [[None] * 5 + [str(exc)]])
        raise _NumericFailure(partial, exc) from exc
    out = [[r.h, r.state_error, r.control_error, r.s_used, r.f_evals] for r in rows]
    if len(rows) >= 2:
        hs = [r.h for r in rows]
        print(f"fitted slopes: state {fit_slope(hs, [r.state_error for r in rows]):.4f}, "
              f"control {fit_slope(hs, [r.control_error for r in rows]):.4f}", file=sys.stderr)
    return _csv(header, out)


def _report_dict(rep, prob) -> dict:
    return {
        "problem": prob.name, "method": rep.method, "N": rep.final_record.N, "s": rep.s,
        "iterations": rep.iterations, "converged": rep.converged,
        "final_cost": rep.cost_history[-1] if rep.cost_history else None,
        "cost_history": rep.cost_history, "update_norms": rep.update_norms,
        "total_f_evals": rep.total_f_evals, "total_adjoint_evals": rep.total_adjoint_evals,
    }


def cmd_solve(p) -> str:
    prob = _problem(p)
    rep = _run_solve(prob, SolverConfig(N=p["N"], method=p["method"], **_solver_kw(p)))
    out = _report_dict(rep, prob)
    rec = rep.final_record
    out["grid"] = rec.grid
    out["states"] = rec.states
    out["grid_controls"] = rec.controls[:, 0]
    return _json(out)


def cmd_burgers(p) -> str:
    prob = _problem({**p, "problem": "burgers"})
    grid = prob.params["grid"]
    rep = _run_solve(prob, SolverConfig(N=p["N"], method=p["method"], **_solver_kw(p)))
    rec = rep.final_record
    dt = prob.horizon / p["N"]
    y_final = rec.states[-1, 1:]
    target = prob.params["target"]
    mismatch = float(np.sqrt(np.dot(grid.weights, (y_final - target) ** 2)))
    out = _report_dict(rep, prob)
    out.update(M=grid.M, dx=grid.dx, dt=dt, alpha=grid.alpha,
               euler_cost_factor=dt / (rep.s * grid.dx**2 / 2.0),
               final_mismatch_l2=mismatch)
    if p["csv"]:
        snaps = [min(int(round(t / dt)), p["N"] - 1) for t in p["snapshot_times"]]
        header = ["x", "y_final", "target"]
        cols = [grid.x, y_final, target]
        for k in snaps:
            header += [f"y_t{rec.grid[k]:.6g}", f"u_t{rec.grid[k]:.6g}"]
            cols += [rec.states[k, 1:], rec.controls[k, 0]]
        with open(p["csv"], "w", encoding="utf-8") as fh:
            fh.write(_csv(header, np.column_stack(cols).tolist()))
    return _json(out)


class _NumericFailure(Exception):
    def __init__(self, partial: str, cause: Exception):
        super().__init__(str(cause))
        self.partial = partial


def _run_solve(prob, cfg):
    try:
        return solve(prob, cfg)
    except StabOCPError as exc:
        raise _NumericFailure(_json({"error": str(exc)}), exc) from exc


# --- parameter tables -------------------------------------------------------------

@dataclass(frozen=True)
class Param:
    type: Callable
    default: object
    help: str = ""


def _float_list(text):
    if isinstance(text, list):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _opt_float(v):
    return None if v is None or v == "none" else float(v)


def _opt_int(v):
    return None if v is None or v == "none" else int(v)


def _ref(v):
    return "exact" if str(v) == "exact" else int(v)


_SOLVER = {
    "tol": Param(float, 1e-8, "control-update tolerance (sup norm)"),
    "max_iters": Param(int, 500, "outer iteration limit"),
    "trisection_iters": Param(int, 40, "line-search trisection steps"),
    "eta": Param(_opt_float, None, "damping (default 0.05 / 0.15)"),
    "stages": Param(_opt_int, None, "fixed stage count (default: adaptive)"),
}
_PROBLEM = {
    "problem": Param(str, "hager", f"one of {', '.join(PROBLEMS)}"),
    "epsilon": Param(float, 1e-3, "stiffness of stiff-sp"),
    "M": Param(int, 99, "Burgers interior points"),
    "mu": Param(float, 0.1, "Burgers diffusion"),
    "nu": Param(float, 0.02, "Burgers advection"),
    "alpha": Param(float, 0.01, "Burgers control weight"),
    "T": Param(float, 2.5, "Burgers horizon"),
}

COMMANDS = {
    "coeffs": (cmd_coeffs, "recurrence coefficients as CSV", {
        "order": Param(int, 2), "stages": Param(int, 10), "eta": Param(_opt_float, None)}),
    "tableau": (cmd_tableau, "Butcher tableau, double adjoint and symplecticity residual as CSV", {
        "kind": Param(str, "stabilized", "stabilized or dirk2"), "order": Param(int, 2), "stages": Param(int, 4), "eta": Param(_opt_float, None)}),
    "stability": (cmd_stability, "internal-stage stability functions as CSV", {
        "method": Param(str, "cheb1", f"one of {', '.join(STAGE_METHODS)}"),
        "stages": Param(int, 10), "eta": Param(_opt_float, None),
        "zmin": Param(float, -200.0), "zmax": Param(float, 0.0),
        "points": Param(_opt_int, None, "grid points (default 20 s^2)")}),
    "converge-ode": (cmd_converge_ode, "ODE convergence ladder on y' = cos y", {
        "method": Param(str, "rkc2"), "stages": Param(int, 5), "eta": Param(_opt_float, None),
        "pmin": Param(int, 3, "coarsest step 2^-pmin"), "pmax": Param(int, 9, "finest step 2^-pmax")}),
    "converge-ocp": (cmd_converge_ocp, "optimal-control convergence ladder", {
        **_PROBLEM, **_SOLVER, "method": Param(str, "rkc2", f"one of {', '.join(METHODS)}"),
        "pmin": Param(int, 3, "coarsest N = 2^pmin"), "pmax": Param(int, 7, "finest N = 2^pmax"),
        "reference": Param(_ref, "exact", "'exact' or exponent of the reference N")}),
    "solve": (cmd_solve, "one optimal-control solve, JSON report", {
        **_PROBLEM, **_SOLVER, "method": Param(str, "rkc2"), "N": Param(int, 32)}),
    "burgers": (cmd_burgers, "Burgers optimal control, JSON report (+ CSV profiles)", {
        **{k: v for k, v in _PROBLEM.items() if k not in ("problem", "epsilon")}, **_SOLVER,
        "method": Param(str, "rkc2"), "N": Param(int, 30),
        "csv": Param(str, "", "path for x / final state / target / snapshot columns"),
        "snapshot_times": Param(_float_list, [0.0, 0.625, 1.25, 1.875], "comma-separated times")}),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stabocp", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (_, help_text, params) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", help="JSON file with parameters")
        sp.add_argument("--output", help="artifact path (default stdout)")
        sp.add_argument("--seed", help="accepted for uniformity; nothing is random")
        for key, prm in params.items():
            flag = "--" + key.replace("_", "-")
            sp.add_argument(flag, dest=key, default=None,
                            help=f"{prm.help} (default {prm.default!r})".strip())
    return ap


def _merge(params: dict, config_path, flags: dict) -> dict:
    merged = {k: v.default for k, v in params.items()}
    if config_path:
        try:
            with open(config_path, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(cfg) - set(params))
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        merged.update(cfg)
    merged.update({k: v for k, v in flags.items() if v is not None})
    out = {}
    for k, prm in params.items():
        try:
            out[k] = prm.type(merged[k]) if merged[k] is not None else None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {k}: {merged[k]!r}") from exc
        if isinstance(out[k], float) and not math.isfinite(out[k]):
            raise ConfigError(f"{k} must be finite")
    return out


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fn, _, params = COMMANDS[args.command]
    # failures are reported once, through the exit code and stderr below
    logging.getLogger("stabocp").setLevel(logging.ERROR)
    flags = {k: getattr(args, k) for k in params}
    try:
        p = _merge(params, args.config, flags)
        with np.errstate(over="ignore", invalid="ignore"):
            text = fn(p)
    except (ConfigError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NumericFailure as exc:
        _emit(exc.partial, args.output)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except StabOCPError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _emit(text, args.output)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
