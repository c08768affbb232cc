"""Command-line front end.

Commands: derive, table-gamma, solve, plot-data, simulate, verify.  Every
command reads the JSON config (``--config``, baseline if omitted) and flags
override individual fields.  CSV goes to ``--out`` or stdout; JSON reports go
to ``--report`` (solve defaults to the CSV path with a ``.json`` suffix).

Exit codes
----------
0 success, 2 configuration or usage error, 3 degenerate model (gamma <= 1),
4 numerical failure in the density solver, 5 tail fit or normalisation
failure, 6 I/O error, 7 a verification check failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config, model_params
from .density import eval_H, eval_H_prime, eval_H_second, scaled_ode_residual
from .errors import (
    DegenerateModel,
    NegativeDensity,
    OutOfRange,
    PlateauNotReached,
    SeedDiverged,
    StepSizeUnderflow,
    TailTooHeavy,
)
from .montecarlo import MCConfig, estimate_psi, write_outcomes_csv
from .params import ModelParams, check_nondegeneracy, derive, gamma_of_kappa, heun_params
from .report import RunReport
from .survival import (
    SurvivalSolution,
    phi,
    phi_prime,
    probe_grid,
    psi,
    scaled_ide_residual,
    solve,
)
from .tail import loglog_slope

__all__ = ["main", "build_parser", "EXIT_CODES"]

EXIT_OK, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_NUMERICAL, EXIT_TAIL, EXIT_IO, EXIT_VERIFY = 0, 2, 3, 4, 5, 6, 7
EXIT_CODES = {
    "ok": EXIT_OK,
    "config": EXIT_CONFIG,
    "degenerate": EXIT_DEGENERATE,
    "numerical": EXIT_NUMERICAL,
    "tail": EXIT_TAIL,
    "io": EXIT_IO,
    "verify": EXIT_VERIFY,
}

# Acceptance thresholds used by ``verify``.
BOUNDARY_RTOL = 1e-12
IDE_BOUND = 1e-6
IDE_PROBES = 50


class _UsageError(ValueError):
    pass


# --------------------------------------------------------------------------
# config plumbing

def _apply_flags(cfg: dict, ns: argparse.Namespace) -> dict:
    """Copy explicitly given flags into the config (flag names mirror JSON paths)."""
    mapping = {
        "tol": ("solver", "tol"),
        "u_min": ("output", "u_min"),
        "u_max": ("output", "u_max"),
        "u_points": ("output", "u_points"),
        "scale": ("output", "scale"),
        "out": ("output", "out"),
        "seed": ("mc", "seed"),
        "paths": ("mc", "paths"),
        "dt": ("mc", "dt"),
        "horizon": ("mc", "horizon"),
        "safe_barrier": ("mc", "safe_barrier"),
        "workers": ("mc", "workers"),
    }
    for attr, (section, key) in mapping.items():
        value = getattr(ns, attr, None)
        if value is not None:
            cfg[section][key] = value
    if getattr(ns, "kappa", None):
        cfg["output"]["kappas"] = list(ns.kappa)
    if getattr(ns, "u", None):
        cfg["output"]["probes"] = list(ns.u)
    return cfg


def _single_kappa_params(cfg: dict, ns: argparse.Namespace) -> ModelParams:
    p = model_params(cfg)
    if getattr(ns, "kappa", None):
        if len(ns.kappa) != 1:
            raise _UsageError(f"{ns.command} takes a single --kappa, got {len(ns.kappa)}")
        p = p.with_kappa(ns.kappa[0])
    return p


def _solve(p: ModelParams, cfg: dict) -> SurvivalSolution:
    s = cfg["solver"]
    return solve(p, tol=float(s["tol"]), u_max=s["u_max"],
                 tail_cap=float(s["tail_cap"]), spread_cap=float(s["spread_cap"]))


def _probes(cfg: dict) -> np.ndarray:
    o = cfg["output"]
    n = o["u_points"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigError(f"output.u_points must be a positive integer, got {n!r}")
    if not o["u_min"] <= o["u_max"]:
        raise ConfigError("output.u_min must not exceed output.u_max")
    if o["u_min"] < 0:
        raise ConfigError("output.u_min must be >= 0")
    return probe_grid(float(o["u_min"]), float(o["u_max"]), n, o["scale"])


def _mc_config(cfg: dict) -> MCConfig:
    m = cfg["mc"]
    return MCConfig(n_paths=m["paths"], dt=float(m["dt"]), horizon=float(m["horizon"]),
                    seed=int(m["seed"]), safe_barrier=m["safe_barrier"])


def _workers(cfg: dict) -> int:
    w = cfg["mc"]["workers"]
    if isinstance(w, bool) or not isinstance(w, int) or w < 1:
        raise ConfigError(f"mc.workers must be a positive integer, got {w!r}")
    return w


def _pmap(fn, items, workers: int) -> list:
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------
# output helpers

def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _emit(text: str, path) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _report_path(ns, out) -> Path | None:
    if ns.report:
        return Path(ns.report)
    if out in (None, "-"):
        return None
    return Path(out).with_suffix(".json")


def _base_report(command: str, p: ModelParams) -> RunReport:
    d = derive(p)
    return RunReport(command=command, params=p.to_dict(), derived=d.to_dict(),
                     heun=heun_params(d, p.mu).to_dict())


def _tail_summary(sol: SurvivalSolution) -> dict:
    t = sol.tail.to_dict()
    t["slope"] = loglog_slope(sol, sol.tail.fit_window)
    t["u_max"] = sol.grid.u_max
    return t


def _with_scaled_C(sol: SurvivalSolution, factor: float) -> SurvivalSolution:
    """Fault injection: multiply the normalisation constant by ``factor``."""
    return replace(sol, C=sol.C * factor, phi0=sol.phi0 * factor,
                   tail=replace(sol.tail, K_ruin=sol.tail.K_ruin * factor))


def boundary_error(sol: SurvivalSolution) -> float:
    """|c Phi'(0) - lambda Phi(0)| / (lambda Phi(0))."""
    p = sol.params
    lhs = p.c * phi_prime(sol, 0.0)
    rhs = p.lam * phi(sol, 0.0)
    return abs(lhs - rhs) / rhs


def ode_residual_summary(sol: SurvivalSolution) -> dict:
    """Largest scaled density-equation residual at the nodes and step midpoints."""
    g, d, mu = sol.grid, sol.derived, sol.params.mu
    at_nodes = scaled_ode_residual(g.nodes, g.h, g.h_prime, g.h_second, d, mu)
    mid = 0.5 * (g.nodes[1:] + g.nodes[:-1])
    at_mid = scaled_ode_residual(mid, eval_H(g, mid), eval_H_prime(g, mid), eval_H_second(g, mid), d, mu)
    return {"ode_nodes_max": float(np.max(at_nodes)), "ode_midpoints_max": float(np.max(at_mid))}


def ide_residual_sweep(sol: SurvivalSolution, qtol: float, n: int = IDE_PROBES,
                       workers: int = 1) -> tuple[float, float]:
    """(sup of the scaled residual, its location) on n log-spaced probes in [0.1, 0.9 u_max]."""
    u = np.geomspace(0.1, 0.9 * sol.grid.u_max, n)
    res = _pmap(lambda x: scaled_ide_residual(sol, float(x), qtol), u, workers)
    i = int(np.argmax(res))
    return float(res[i]), float(u[i])


# --------------------------------------------------------------------------
# commands

def cmd_derive(ns, cfg) -> int:
    p0 = model_params(cfg)
    kappas = ns.kappa or [p0.kappa]
    lines = []
    for k in kappas:
        p = p0.with_kappa(k)
        d = derive(p)
        check_nondegeneracy(d)
        h = heun_params(d, p.mu)
        lines.append(f"model parameters (kappa = {k!r})")
        lines += [f"  {key:<11} = {v:.12g}" for key, v in p.to_dict().items()]
        lines.append("derived parameters")
        lines += [f"  {key:<11} = {v:.12g}" for key, v in d.to_dict().items()]
        lines.append("heun invariants")
        lines += [f"  {key:<11} = {v:.12g}" for key, v in h.to_dict().items()]
        lines.append("")
    _emit("\n".join(lines), cfg["output"]["out"])
    return EXIT_OK


def cmd_table_gamma(ns, cfg) -> int:
    p = model_params(cfg)
    labels = cfg["output"].get("labels") or {}
    rows = [(labels.get(format(k, "g"), ""), k, g, g - 1.0)
            for k, g in gamma_of_kappa(p, cfg["output"]["kappas"])]
    _emit(_csv_text(["label", "kappa", "gamma", "tail_order"], rows), cfg["output"]["out"])
    return EXIT_OK


def cmd_solve(ns, cfg) -> int:
    p = _single_kappa_params(cfg, ns)
    u = _probes(cfg)
    workers = _workers(cfg)
    t0 = time.perf_counter()
    sol = _solve(p, cfg)
    t1 = time.perf_counter()
    ph = np.atleast_1d(phi(sol, u))
    ps = np.atleast_1d(psi(sol, u))
    residuals = ode_residual_summary(sol)
    residuals["boundary_rel"] = boundary_error(sol)
    sup, at = ide_residual_sweep(sol, float(cfg["solver"]["qtol"]), workers=workers)
    residuals["ide_scaled_sup"] = sup
    residuals["ide_scaled_sup_at"] = at
    t2 = time.perf_counter()

    report = _base_report("solve", p)
    report.C = sol.C
    report.phi0 = sol.phi0
    report.tail = _tail_summary(sol)
    report.probes = [[float(a), float(b), float(c)] for a, b, c in zip(u, ph, ps)]
    report.residuals = residuals
    report.timings = {"solve": t1 - t0, "residuals": t2 - t1}

    out = cfg["output"]["out"]
    _emit(_csv_text(["u", "phi", "psi"], zip(u, ph, ps)), out)
    rpath = _report_path(ns, out)
    if rpath is not None:
        rpath.write_text(report.to_json(timings=not ns.no_timings), encoding="utf-8")
    if out not in (None, "-"):
        print(f"kappa={p.kappa!r} gamma={sol.derived.gamma:.6g} C={sol.C!r} "
              f"phi(0)={sol.phi0!r} K1={sol.tail.K1:.6g} slope={report.tail['slope']:.4f}")
    return EXIT_OK


def cmd_plot_data(ns, cfg) -> int:
    p0 = model_params(cfg)
    kappas = [float(k) for k in cfg["output"]["kappas"]]
    if not kappas:
        raise ConfigError("plot-data needs at least one kappa")
    u = _probes(cfg)
    sols = _pmap(lambda k: _solve(p0.with_kappa(k), cfg), kappas, _workers(cfg))
    cols = [np.atleast_1d(psi(s, u)) for s in sols]
    header = ["u"] + [f"psi_kappa={format(k, 'g')}" for k in kappas]
    _emit(_csv_text(header, zip(u, *cols)), cfg["output"]["out"])
    return EXIT_OK


def _mc_row(res, exact: float | None = None) -> dict:
    row = res.to_dict()
    if not math.isfinite(row["config"]["safe_barrier"]):
        row["config"]["safe_barrier"] = None
    if exact is not None:
        row["psi_exact"] = exact
    return row


def cmd_simulate(ns, cfg) -> int:
    p = _single_kappa_params(cfg, ns)
    mc = _mc_config(cfg)
    workers = _workers(cfg)
    report = _base_report("simulate", p)
    for u in cfg["output"]["probes"]:
        t0 = time.perf_counter()
        res = estimate_psi(float(u), p, mc, workers=workers, keep_paths=bool(ns.paths_csv))
        report.timings[f"u={float(u)!r}"] = time.perf_counter() - t0
        report.mc.append(_mc_row(res))
        if ns.paths_csv:
            d = Path(ns.paths_csv)
            d.mkdir(parents=True, exist_ok=True)
            write_outcomes_csv(res, d / f"paths_u={float(u)!r}.csv")
    rows = [(r["u"], r["psi_hat"], r["stderr"], r["ruined"], r["survived_censored"],
             r["survived_early"], r["leaked"], r["n_paths"]) for r in report.mc]
    _emit(_csv_text(["u", "psi_hat", "stderr", "ruined", "survived_censored",
                     "survived_early", "leaked", "n_paths"], rows), cfg["output"]["out"])
    if ns.report:
        Path(ns.report).write_text(report.to_json(timings=not ns.no_timings), encoding="utf-8")
    return EXIT_OK


def _check(name: str, value: float, bound: float) -> dict:
    return {"name": name, "value": float(value), "bound": float(bound), "passed": bool(value <= bound)}


def cmd_verify(ns, cfg) -> int:
    p = _single_kappa_params(cfg, ns)
    mc = _mc_config(cfg)
    workers = _workers(cfg)
    t0 = time.perf_counter()
    sol = _solve(p, cfg)
    if ns.fault_c_scale != 1.0:
        sol = _with_scaled_C(sol, ns.fault_c_scale)
    t1 = time.perf_counter()

    report = _base_report("verify", p)
    report.C, report.phi0 = sol.C, sol.phi0
    report.tail = _tail_summary(sol)
    report.checks.append(_check("boundary identity", boundary_error(sol), BOUNDARY_RTOL))
    sup, at = ide_residual_sweep(sol, float(cfg["solver"]["qtol"]), workers=workers)
    report.residuals = {"ide_scaled_sup": sup, "ide_scaled_sup_at": at}
    report.checks.append(_check("ide residual", sup, IDE_BOUND))
    t2 = time.perf_counter()

    for u in cfg["output"]["probes"]:
        u = float(u)
        exact = psi(sol, u)
        res = estimate_psi(u, p, mc, workers=workers)
        # Under the null hypothesis the standard error is that of the exact
        # value; the larger of the two keeps p_hat in {0, 1} from passing
        # or failing on a zero-width interval.
        se = max(res.stderr, math.sqrt(exact * (1.0 - exact) / res.n_paths))
        allowance = 3.0 * se + res.survived_censored / res.n_paths
        report.mc.append(_mc_row(res, exact))
        report.checks.append(_check(f"monte carlo u={u!r}", abs(exact - res.psi_hat), allowance))
    t3 = time.perf_counter()
    report.timings = {"solve": t1 - t0, "residuals": t2 - t1, "monte_carlo": t3 - t2}

    for c in report.checks:
        tag = "PASS" if c["passed"] else "FAIL"
        print(f"{tag}  {c['name']:<24} {c['value']:.3e} <= {c['bound']:.3e}")
    if ns.report:
        Path(ns.report).write_text(report.to_json(timings=not ns.no_timings), encoding="utf-8")
    return EXIT_OK if report.passed else EXIT_VERIFY


COMMANDS = {
    "derive": cmd_derive,
    "table-gamma": cmd_table_gamma,
    "solve": cmd_solve,
    "plot-data": cmd_plot_data,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


# --------------------------------------------------------------------------
# argument parsing

def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config (baseline if omitted)")
    common.add_argument("--kappa", type=float, action="append", metavar="F",
                        help="risky share; repeat for several")
    common.add_argument("--out", metavar="PATH", help="CSV output ('-' for stdout)")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--tol", type=float, metavar="F", help="integration tolerance")

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--u-min", type=float, metavar="F")
    grid.add_argument("--u-max", type=float, metavar="F")
    grid.add_argument("--u-points", type=_positive_int, metavar="N")
    grid.add_argument("--scale", choices=["semilog", "loglog", "linear", "log"])

    mc = argparse.ArgumentParser(add_help=False)
    mc.add_argument("--u", type=float, action="append", metavar="F",
                    help="probe capital; repeat for several")
    mc.add_argument("--seed", type=int, metavar="N")
    mc.add_argument("--paths", type=_positive_int, metavar="N")
    mc.add_argument("--dt", type=float, metavar="F")
    mc.add_argument("--horizon", type=float, metavar="F")
    mc.add_argument("--safe-barrier", type=float, metavar="F")

    par = argparse.ArgumentParser(add_help=False)
    par.add_argument("--workers", type=_positive_int, metavar="N", help="worker threads")

    rep = argparse.ArgumentParser(add_help=False)
    rep.add_argument("--report", metavar="PATH", help="JSON run report")
    rep.add_argument("--no-timings", action="store_true", help="omit timings from the report")

    parser = argparse.ArgumentParser(
        prog="ruinheun",
        description="Ruin probabilities of the risk model with proportional investment.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("derive", parents=[common], help="print derived parameters")
    sub.add_parser("table-gamma", parents=[common], help="tail exponent per risky share")
    sub.add_parser("solve", parents=[common, solver, grid, par, rep],
                   help="survival and ruin probabilities on a probe grid")
    sub.add_parser("plot-data", parents=[common, solver, grid, par],
                   help="ruin probability columns for several risky shares")
    s = sub.add_parser("simulate", parents=[common, mc, par, rep], help="Monte Carlo estimates")
    s.add_argument("--paths-csv", metavar="DIR", help="debug: per-path outcome CSVs")
    v = sub.add_parser("verify", parents=[common, solver, mc, par, rep],
                       help="residual checks and Monte Carlo comparison")
    v.add_argument("--fault-c-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    return parser


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, DegenerateModel):
        return EXIT_DEGENERATE
    if isinstance(exc, (PlateauNotReached, TailTooHeavy)):
        return EXIT_TAIL
    if isinstance(exc, (SeedDiverged, StepSizeUnderflow, NegativeDensity, OutOfRange)):
        return EXIT_NUMERICAL
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_CONFIG


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = _apply_flags(load_config(ns.config), ns)
        return COMMANDS[ns.command](ns, cfg)
    except (ConfigError, ValueError, TypeError, KeyError, OSError,
            DegenerateModel, PlateauNotReached, TailTooHeavy,
            SeedDiverged, StepSizeUnderflow, NegativeDensity) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
