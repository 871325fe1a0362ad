"""Command-line interface.

Subcommands:
  classify   decide existence/non-existence/uniqueness for one problem
  sweep-rho  run the dichotomy across a list of singularity strengths
  solve      compute a mild solution trace and its decay certificate
  probe      evaluate the non-existence functional Phi(tau)
  verify     run the semigroup estimate-verification battery
  criteria   evaluate all integral conditions for one problem

Problem parameters come from flags or a key=value config file ('#' starts a
comment); flags override the file.  Results are emitted as JSON
{command, spec, result, certificates, timings}; table-producing commands
also write CSV, and matplotlib figures are rendered next to the delimited
output when an output directory is given.

classify exit codes: 0 existence predicted, 1 excluded, 2 inconclusive,
3 invalid input.  verify exits nonzero iff any check fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from heatlab.criteria import (
    _measured_c0,
    check_blowup_weight,
    check_def2,
    check_h4,
    check_laister,
    classify,
    critical_values,
)
from heatlab.nonlinearity import (growth_exponents, parse_nonlinearity,
                                  parse_weight)
from heatlab.radial import ProblemSpec, build_singular_data
from heatlab.solver import (blowup_probe, build_supersolution, decay_check,
                            default_engine, direct_mild_solve,
                            monotone_iterate)
from heatlab.verification import SUITE_SECTIONS, run_verify_suite

__all__ = ["main"]


# ---------------------------------------------------------------------------
# plumbing
# ---------------------------------------------------------------------------


class _CliError(Exception):
    """Invalid input; mapped to exit code 3."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit 2; we reserve that
        raise _CliError(message)


def _jsonable(obj):
    """Recursively convert to JSON-safe values (inf/nan become strings)."""
    if hasattr(obj, "as_dict"):
        return _jsonable(obj.as_dict())
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
    return obj


def _read_config(path: str) -> dict:
    cfg = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise _CliError(f"bad config line (need key=value): {raw!r}")
        key, value = line.split("=", 1)
        cfg[key.strip().replace("-", "_")] = value.strip()
    return cfg


# defaults for problem parameters; config-file values and flags layer on top
_DEFAULTS = {
    "N": 3, "r": 1.0, "rho": None, "K": 1.0, "a": 1.0,
    "f": "power:q=3", "h": "one", "side": "upper",
    "domain": "whole_space", "ball_R": None,
    "A": 2.0, "tol": 1e-6, "grid_M": 256, "T": "auto", "n_steps": 32,
    "out": None,
}
_CASTS = {
    "N": int, "r": float, "rho": float, "K": float, "a": float,
    "A": float, "tol": float, "grid_M": int, "ball_R": float,
    "n_steps": int,
}


def _merge_config(args: argparse.Namespace) -> dict:
    cfg = dict(_DEFAULTS)
    if getattr(args, "config", None):
        for key, value in _read_config(args.config).items():
            if key not in cfg:
                raise _CliError(f"unknown config key {key!r}")
            cfg[key] = value
    for key in cfg:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            cfg[key] = flag_val
    for key, cast in _CASTS.items():
        if cfg[key] is not None and not isinstance(cfg[key], cast):
            try:
                cfg[key] = cast(cfg[key])
            except ValueError as exc:
                raise _CliError(f"bad value for {key}: {cfg[key]!r}") from exc
    return cfg


def _build_spec(cfg: dict, rho: Optional[float] = None,
                side: Optional[str] = None) -> ProblemSpec:
    rho = cfg["rho"] if rho is None else rho
    if rho is None:
        raise _CliError("--rho is required for this command")
    side = cfg["side"] if side is None else side
    side_map = {"upper": "upper_class", "lower": "lower_class",
                "upper_class": "upper_class", "lower_class": "lower_class"}
    if side not in side_map:
        raise _CliError(f"bad side {side!r} (upper or lower)")
    try:
        return ProblemSpec(
            dimension=cfg["N"], r=cfg["r"], rho=float(rho), K=cfg["K"],
            a=cfg["a"],
            nonlinearity=parse_nonlinearity(cfg["f"]),
            weight=parse_weight(cfg["h"]),
            data_side=side_map[side], domain=cfg["domain"],
            ball_radius=cfg["ball_R"],
        )
    except ValueError as exc:
        raise _CliError(str(exc)) from exc


def _emit(cfg: dict, payload: dict, name: str, quiet_stdout: bool = False,
          ) -> Optional[Path]:
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True)
    if cfg["out"] is not None:
        outdir = Path(cfg["out"])
        outdir.mkdir(parents=True, exist_ok=True)
        path = outdir / f"{name}.json"
        path.write_text(text + "\n")
        return path
    if not quiet_stdout:
        print(text)
    return None


def _figures_enabled(cfg: dict, args) -> bool:
    return cfg["out"] is not None and not getattr(args, "no_figures", False)


def _print_config(cfg: dict) -> None:
    for key in sorted(cfg):
        print(f"{key}={cfg[key]}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_classify(args) -> int:
    cfg = _merge_config(args)
    if args.print_config:
        _print_config(cfg)
        return 0
    spec = _build_spec(cfg)
    t0 = time.perf_counter()
    try:
        verdict = classify(spec, A=cfg["A"])
    except ValueError as exc:
        raise _CliError(str(exc)) from exc
    timings = {"classify_s": time.perf_counter() - t0}
    payload = {"command": "classify", "spec": spec.as_dict(),
               "result": verdict.as_dict(),
               "certificates": list(verdict.as_dict()["certificates"]),
               "timings": timings}
    _emit(cfg, payload, "classify", quiet_stdout=args.explain)
    if args.explain:
        v = verdict
        print(f"data side        : {v.data_side}")
        print(f"rho              : {v.rho:g}")
        for key, val in v.critical_values.items():
            print(f"{key:<17}: {val}")
        print(f"existence        : {v.existence}")
        print(f"uniqueness       : {v.uniqueness}")
        print(f"mechanism        : {v.applied_theorem}")
        for cert in v.certificates:
            mark = "PASS" if cert["pass"] else "FAIL"
            print(f"  [{mark}] {cert['criterion']}: value={cert['value']} "
                  f"threshold={cert['threshold']}")
        for flag in v.flags:
            print(f"  note: {flag}")
    return {"predicted": 0, "excluded": 1, "inconclusive": 2}[verdict.existence]


def _existence_row(cfg: dict, spec: ProblemSpec, row: dict) -> None:
    engine = default_engine(spec, node_count=cfg["grid_M"])
    u0 = build_singular_data(spec, engine.grid)
    sup = build_supersolution(spec, A=cfg["A"], verify=False)
    T = min(sup.T_star, 1.0)
    row["T_star_or_escape"] = sup.T_star
    if T <= 0.0:
        row["error"] = "supersolution horizon is zero"
        return
    trace = monotone_iterate(spec, engine, u0, T, n_steps=cfg["n_steps"],
                             tol=cfg["tol"], A=cfg["A"])
    row["status"] = trace.status
    if trace.status == "converged":
        row["C_meas"] = trace.decay_constant()
    probe = blowup_probe(spec, engine, u0, tau_grid=trace.times)
    if probe["applicable"]:
        row["Phi_max"] = probe["max_phi"]


def _nonexistence_row(cfg: dict, spec: ProblemSpec, row: dict) -> None:
    engine = default_engine(spec, node_count=cfg["grid_M"])
    u0 = build_singular_data(spec, engine.grid)
    probe = blowup_probe(spec, engine, u0)
    if probe["applicable"]:
        row["Phi_max"] = probe["max_phi"]
    trace = direct_mild_solve(spec, engine, u0, T=1e-2, n_steps=48)
    row["status"] = trace.status
    if trace.blown_up:
        row["T_star_or_escape"] = trace.escape_time


_SWEEP_COLUMNS = ("rho", "verdict", "T_star_or_escape", "Phi_max", "C_meas",
                  "error")


def _cmd_sweep_rho(args) -> int:
    cfg = _merge_config(args)
    if args.print_config:
        _print_config(cfg)
        return 0
    rho_list = [float(s) for s in args.rho_list.split(",") if s.strip()] \
        if args.rho_list else []
    t0 = time.perf_counter()
    rows = []
    for rho in rho_list:
        row = {k: None for k in _SWEEP_COLUMNS}
        row["rho"] = rho
        try:
            spec_up = _build_spec(cfg, rho=rho, side="upper")
            verdict = classify(spec_up, A=cfg["A"])
            if verdict.existence != "predicted":
                spec_lo = _build_spec(cfg, rho=rho, side="lower")
                verdict = classify(spec_lo, A=cfg["A"])
            row["verdict"] = verdict.existence
            if verdict.existence == "predicted":
                _existence_row(cfg, spec_up, row)
            elif verdict.existence == "excluded":
                _nonexistence_row(cfg, spec_lo, row)
        except Exception as exc:  # per-row fault tolerance
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)

    def fmt(v):
        if v is None:
            return ""
        return f"{v:.10g}" if isinstance(v, float) else str(v)

    lines = [",".join(_SWEEP_COLUMNS)]
    lines += [",".join(fmt(row[c]) for c in _SWEEP_COLUMNS) for row in rows]
    csv_text = "\n".join(lines) + "\n"
    timings = {"sweep_s": time.perf_counter() - t0}

    spec_info = dict(cfg)
    spec_info.pop("out", None)
    rho_star = None
    try:
        f = parse_nonlinearity(cfg["f"])
        exps = growth_exponents(f, 1.0 + 2.0 * cfg["r"] / cfg["N"])
        if exps.p_sup is not None and math.isfinite(exps.p_sup) \
                and exps.p_sup > 1.0:
            rho_star = 2.0 * cfg["r"] / (exps.p_sup - 1.0)
    except ValueError:
        pass
    payload = {"command": "sweep-rho", "spec": spec_info,
               "result": {"rows": rows, "rho_star": rho_star},
               "certificates": [], "timings": timings}
    if cfg["out"] is not None:
        outdir = Path(cfg["out"])
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "sweep.csv").write_text(csv_text)
        _emit(cfg, payload, "sweep")
        if _figures_enabled(cfg, args) and rows:
            from heatlab.report import render_sweep_figure
            render_sweep_figure(rows, rho_star, outdir / "sweep.png")
    else:
        sys.stdout.write(csv_text)
    return 0


def _cmd_solve(args) -> int:
    cfg = _merge_config(args)
    if args.print_config:
        _print_config(cfg)
        return 0
    spec = _build_spec(cfg)
    t0 = time.perf_counter()
    engine = default_engine(spec, node_count=cfg["grid_M"])
    u0 = build_singular_data(spec, engine.grid)
    sup = build_supersolution(spec, engine=engine, u0=u0, A=cfg["A"],
                              verify=(args.method == "monotone"))
    if str(cfg["T"]).lower() == "auto":
        T = min(sup.T_star, 1.0)
        if T <= 0.0:
            raise _CliError("supersolution horizon is zero; pass an explicit --T")
    else:
        try:
            T = float(cfg["T"])
        except ValueError as exc:
            raise _CliError(f"bad --T value {cfg['T']!r}") from exc
    t_super = time.perf_counter()
    if args.method == "monotone":
        trace = monotone_iterate(spec, engine, u0, T, n_steps=cfg["n_steps"],
                                 tol=cfg["tol"], A=cfg["A"])
    else:
        trace = direct_mild_solve(spec, engine, u0, T,
                                  n_steps=max(cfg["n_steps"], 48))
    t_solve = time.perf_counter()

    certificates = []
    result = {"trace": trace.as_dict(), "supersolution": sup.as_dict(),
              "T": T, "status": trace.status}
    if trace.status == "converged":
        dc = decay_check(trace, A=cfg["A"])
        result["decay_check"] = dc
        certificates.append({"criterion": "decay constant within bound",
                             "value": dc["C_meas"], "threshold": dc["bound"],
                             "pass": dc["pass"]})
        probe = blowup_probe(spec, engine, u0, tau_grid=trace.times)
        if probe["applicable"]:
            result["probe_on_trace"] = {"max_phi": probe["max_phi"]}
            certificates.append({
                "criterion": "probe stays below certification on the trace",
                "value": probe["max_phi"], "threshold": 1.05,
                "pass": probe["max_phi"] <= 1.05})
    timings = {"supersolution_s": t_super - t0, "solve_s": t_solve - t_super}
    payload = {"command": "solve", "spec": spec.as_dict(), "result": result,
               "certificates": certificates, "timings": timings}
    _emit(cfg, payload, "solve")
    if cfg["out"] is not None:
        outdir = Path(cfg["out"])
        with open(outdir / "trace.csv", "w") as fh:
            trace.to_csv(fh)
        if _figures_enabled(cfg, args):
            from heatlab.report import render_trace_figure
            expo = spec.rho / (2.0 * spec.r)
            render_trace_figure(
                trace.times.tolist(), trace.sup_norms.tolist(),
                (trace.times**expo * trace.sup_norms).tolist(),
                outdir / "trace.png", rho_over_2r=expo)
    return 0 if trace.status == "converged" else 1


def _cmd_probe(args) -> int:
    cfg = _merge_config(args)
    if args.print_config:
        _print_config(cfg)
        return 0
    spec = _build_spec(cfg)
    t0 = time.perf_counter()
    engine = default_engine(spec, node_count=cfg["grid_M"])
    u0 = build_singular_data(spec, engine.grid)
    tau_grid = None
    if str(cfg["T"]).lower() != "auto":
        tau_grid = np.geomspace(1e-6, float(cfg["T"]), 17)
    probe = blowup_probe(spec, engine, u0, tau_grid=tau_grid)
    timings = {"probe_s": time.perf_counter() - t0}
    certificates = []
    if probe["applicable"]:
        certificates.append({"criterion": "probe exceeds certification level",
                             "value": probe["max_phi"], "threshold": 1.0,
                             "pass": probe["certified"]})
    payload = {"command": "probe", "spec": spec.as_dict(), "result": probe,
               "certificates": certificates, "timings": timings}
    _emit(cfg, payload, "probe")
    if cfg["out"] is not None and probe["applicable"]:
        outdir = Path(cfg["out"])
        with open(outdir / "probe.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["tau", "phi"])
            for tau, phi in zip(probe["tau"], probe["phi"]):
                writer.writerow([f"{tau:.17g}", f"{phi:.17g}"])
        if _figures_enabled(cfg, args):
            from heatlab.report import render_probe_figure
            render_probe_figure(probe["tau"], probe["phi"],
                                outdir / "probe.png")
    return 0


def _cmd_verify(args) -> int:
    cfg = _merge_config(args)
    if args.print_config:
        _print_config(cfg)
        return 0
    t0 = time.perf_counter()
    try:
        result = run_verify_suite(only=args.only, fault=args.fault)
    except ValueError as exc:
        raise _CliError(str(exc)) from exc
    timings = {"verify_s": time.perf_counter() - t0}
    payload = {"command": "verify", "spec": {"only": args.only,
                                             "fault": args.fault},
               "result": result, "certificates": result["checks"],
               "timings": timings}
    _emit(cfg, payload, "verify", quiet_stdout=not args.full_report)
    print(f"{result['n_checks']} checks, {result['n_failed']} failed")
    if not result["pass"]:
        print("FAILED checks: " + ", ".join(result["failed_names"]),
              file=sys.stderr)
        return 1
    return 0


def _cmd_criteria(args) -> int:
    cfg = _merge_config(args)
    if args.print_config:
        _print_config(cfg)
        return 0
    spec = _build_spec(cfg)
    t0 = time.perf_counter()
    g, h, r, N, rho = (spec.nonlinearity, spec.weight, spec.r,
                       spec.dimension, spec.rho)
    p_star = 1.0 + 2.0 * r / N
    exps = growth_exponents(g, p_star)
    result: dict = {"growth_exponents": {"p_inf": exps.p_inf,
                                         "p_sup": exps.p_sup,
                                         "method": exps.method}}
    if exps.p_sup is not None and math.isfinite(exps.p_sup) \
            and exps.p_sup > 1.0:
        beta = h.beta if h.family == "power" else 0.0
        result["critical_values"] = critical_values(N, r, exps.p_sup, beta)
    try:
        result["laister"] = check_laister(g, r, N)
    except ValueError as exc:
        result["laister"] = {"pass": None, "reason": str(exc)}
    C0 = _measured_c0(N, rho / r)
    result["C0_measured"] = C0
    result["h4"] = check_h4(g, h, r, rho, A=cfg["A"], C0=C0, K=spec.K)
    C1 = cfg["A"] * C0 * spec.K ** (1.0 / r)
    try:
        result["def2"] = check_def2(g, h, r, rho, C1)
    except ValueError as exc:
        result["def2"] = {"pass": None, "reason": str(exc)}
    if exps.p_sup is not None and math.isfinite(exps.p_sup) \
            and exps.p_sup > 1.0:
        blow = None
        for k in range(1, 11):
            eps = (exps.p_sup - 1.0) * 2.0 ** -k
            blow = check_blowup_weight(h, r, rho, exps.p_sup, eps)
            blow["epsilon"] = eps
            if blow["holds"]:
                break
        result["blowup_weight"] = blow
    timings = {"criteria_s": time.perf_counter() - t0}
    payload = {"command": "criteria", "spec": spec.as_dict(),
               "result": result, "certificates": [], "timings": timings}
    _emit(cfg, payload, "criteria")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file ('#' comments); "
                                    "flags override it")
    p.add_argument("--print-config", action="store_true",
                   help="print the merged configuration and exit")
    p.add_argument("--N", type=int, help="space dimension (1, 2 or 3)")
    p.add_argument("--r", type=float, help="Lebesgue exponent of the data")
    p.add_argument("--rho", type=float, help="singularity strength")
    p.add_argument("--K", type=float, help="data amplitude (K^{1/r} scale)")
    p.add_argument("--a", type=float, help="support radius of the data")
    p.add_argument("--f", help="nonlinearity, e.g. power:q=3, exp:alpha=1, "
                               "logpow:q=5,s=2")
    p.add_argument("--h", help="time weight, e.g. one or weight:beta=0.5")
    p.add_argument("--side", choices=["upper", "lower"],
                   help="which data class bound the profile satisfies")
    p.add_argument("--domain", choices=["whole_space", "dirichlet_ball"])
    p.add_argument("--ball-R", type=float, dest="ball_R",
                   help="ball radius for the Dirichlet domain")
    p.add_argument("--A", type=float, help="supersolution amplification")
    p.add_argument("--tol", type=float, help="iteration tolerance")
    p.add_argument("--grid-M", type=int, dest="grid_M",
                   help="number of radial nodes")
    p.add_argument("--T", help="time horizon (number, or 'auto')")
    p.add_argument("--n-steps", type=int, dest="n_steps",
                   help="time steps per solve")
    p.add_argument("--out", help="output directory (JSON/CSV/figures); "
                                 "default prints JSON to stdout")
    p.add_argument("--no-figures", action="store_true",
                   help="skip figure rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="heatlab",
                     description="numerical laboratory for local existence "
                                 "of mild solutions with singular data")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="existence/uniqueness verdict")
    _add_common(p)
    p.add_argument("--explain", action="store_true",
                   help="print the certificate chain in plain text")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("sweep-rho", help="dichotomy across rho values")
    _add_common(p)
    p.add_argument("--rho-list", dest="rho_list", default="",
                   help="comma-separated rho values")
    p.set_defaults(func=_cmd_sweep_rho)

    p = sub.add_parser("solve", help="mild solution trace + certificates")
    _add_common(p)
    p.add_argument("--method", choices=["monotone", "direct"],
                   default="monotone")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("probe", help="non-existence functional Phi(tau)")
    _add_common(p)
    p.set_defaults(func=_cmd_probe)

    p = sub.add_parser("verify", help="semigroup estimate battery")
    _add_common(p)
    p.add_argument("--only", choices=list(SUITE_SECTIONS),
                   help="run a single section")
    p.add_argument("--fault", choices=["smoothing"],
                   help="inject a broken constant (test hook)")
    p.add_argument("--full-report", action="store_true",
                   help="print the full JSON record list to stdout")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("criteria", help="all integral conditions at once")
    _add_common(p)
    p.set_defaults(func=_cmd_criteria)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
