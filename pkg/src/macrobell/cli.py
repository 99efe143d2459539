"""Command-line front end.

Every subcommand writes plot-ready CSV or JSON.  Values come from flags, from
a JSON file given with --config, or from built-in defaults, in that order of
precedence.  Exit codes: 0 success, 1 computation failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from ._parallel import WORKERS_ENV, resolve_workers
from .errors import DegenerateBasisError, DomainError, MacroBellError
from .josephson import NbsParams, nbs_trace, scaled_frequency
from .kerr import (IDEAL_B, NEAR_DEGENERATE_AMPLITUDE, PAIR_LABELS, KerrParams, KerrSettings,
                   build_cat_basis, chsh_kerr, joint_quadrature_density, kerr_evolve,
                   kerr_sweep, prepare_bell_cat)
from .noon import (DEFAULT_THETA, PHI_PI_OVER_16, ch_sweep, find_ch_maximum,
                   ideal_ch_closed_form, ripple_amplitude)
from .search import MIN_BUDGET, OBJECTIVE_LABEL, optimize_nbs

FLOAT_FORMAT = ".16e"


class UsageError(Exception):
    pass


def _range(text: str) -> tuple:
    try:
        lo, hi = (float(x) for x in str(text).split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}")
    return lo, hi


# name -> (type, default); None default means required unless noted per command
COMMAND_OPTIONS = {
    "nbs-trace": {"N": (int, None), "kappa": (float, None), "g": (float, None),
                  "t_max": (float, "auto"), "steps": (int, 512)},
    "bell-ch": {"N": (int, 1), "kappa": (float, "auto"), "g": (float, "auto"),
                "phi_min": (float, 0.0), "phi_max": (float, math.pi / 2),
                "phi_steps": (int, 200), "mode": (str, "ideal"), "theta": (float, DEFAULT_THETA)},
    "kerr-chsh": {"alpha": (float, None), "beta": (float, None), "Omega": (float, 1.0),
                  "n_max": (int, "auto"), "ta": (float, 0.0), "ta_prime": (float, math.pi / 3),
                  "tb": (float, 0.0), "tb_prime": (float, 2 * math.pi / 3)},
    "kerr-sweep": {"alpha_min": (float, None), "alpha_max": (float, None), "steps": (int, None),
                   "Omega": (float, 1.0)},
    "kerr-density": {"alpha": (float, None), "beta": (float, None), "ta": (float, 0.0),
                     "tb": (float, 0.0), "grid_points": (int, 101), "Omega": (float, 1.0),
                     "half_width": (float, "auto")},
    "optimize": {"N": (int, None), "kappa_range": (_range, None), "g_range": (_range, None),
                 "budget": (int, 400)},
    "verify": {"filter": (str, "")},
}

DEFAULT_FORMAT = {"nbs-trace": "csv", "bell-ch": "csv", "kerr-chsh": "json", "kerr-sweep": "csv",
                  "kerr-density": "csv", "optimize": "json", "verify": "text"}

HELP = {
    "nbs-trace": "p_N, p_0 and leakage of |N,0> under the Josephson Hamiltonian",
    "bell-ch": "CH statistic S over the (0, 2phi, phi, 3phi) settings family",
    "kerr-chsh": "CHSH correlators and B for the Bell cat state",
    "kerr-sweep": "B along alpha = beta",
    "kerr-density": "joint quadrature density after Kerr evolution",
    "optimize": "search (kappa, g) for the best nonlinear beam splitter",
    "verify": "run the invariant suite",
}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="macrobell", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for command, options in COMMAND_OPTIONS.items():
        p = sub.add_parser(command, help=HELP[command])
        for name, (kind, _) in options.items():
            p.add_argument(_flag(name), dest=name, type=kind, default=None)
        p.add_argument("--config", help="JSON file with option values; flags override it")
        p.add_argument("--output", "-o", help="output file (default: stdout)")
        p.add_argument("--workers", type=int, default=None,
                       help=f"processes for sweeps (default: ${WORKERS_ENV} or 1)")
        if command != "verify":
            p.add_argument("--format", choices=("csv", "json"), default=None)
            p.add_argument("--summary", help="also write a JSON summary to this file")
        else:
            p.add_argument("--inject-fault", dest="inject_fault", default=None,
                           help=argparse.SUPPRESS)
    return parser


def resolve_options(args: argparse.Namespace) -> dict:
    """Merge flags over --config values over defaults, coercing config values."""
    options = COMMAND_OPTIONS[args.command]
    config = {}
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}")
        if not isinstance(raw, dict):
            raise UsageError("config file must hold a JSON object")
        config = {k.replace("-", "_"): v for k, v in raw.items()}
        unknown = set(config) - set(options) - {"workers", "format", "output"}
        if unknown:
            raise UsageError(f"unknown config keys for {args.command}: {sorted(unknown)}")
    values = {}
    for name, (kind, default) in options.items():
        value = getattr(args, name)
        if value is None and name in config:
            try:
                value = kind(config[name])
            except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"bad config value for {name}: {exc}")
        if value is None:
            if default is None:
                raise UsageError(f"{_flag(name)} is required")
            value = None if default == "auto" else default
        values[name] = value
    for key in ("workers", "format", "output"):
        flag = getattr(args, key, None)
        values[key] = flag if flag is not None else config.get(key)
    values["workers"] = resolve_workers(values["workers"])
    if values.get("format") is None:
        values["format"] = DEFAULT_FORMAT[args.command]
    return values


def _prob(x):
    """Clamp rounding excursions (|dx| ~ 1e-16) so emitted probabilities stay in [0, 1]."""
    return np.clip(x, 0.0, 1.0)


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), FLOAT_FORMAT)
    return str(value)


def render_csv(header: list, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_clean(obj):
    if isinstance(obj, dict):
        return {str(k): _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def render_json(obj) -> str:
    return json.dumps(_json_clean(obj), indent=2) + "\n"


def _table(header, rows, summary, fmt) -> str:
    if fmt == "csv":
        return render_csv(header, rows)
    return render_json({"summary": summary,
                        "columns": header,
                        "rows": [list(r) for r in rows]})


# --- commands ---------------------------------------------------------------

def _nbs_params(v) -> NbsParams:
    return NbsParams(v["N"], v["kappa"], v["g"])


def cmd_nbs_trace(v) -> tuple:
    if v["steps"] < 1:
        raise UsageError("--steps must be >= 1")
    params = _nbs_params(v)
    if v["t_max"] is not None and not v["t_max"] > 0:
        raise UsageError("--t-max must be > 0")
    freq = scaled_frequency(params)
    t_max = v["t_max"] if v["t_max"] is not None else 2 * math.pi / freq.omega_fitted
    times = np.linspace(0.0, t_max, v["steps"] + 1)
    trace = nbs_trace(params, times, freq.omega_fitted)
    summary = {"N": params.N, "kappa": params.kappa, "g": params.g, "t_max": t_max,
               "steps": v["steps"], "omega_formula": freq.omega_formula,
               "omega_fitted": freq.omega_fitted, "omega_spectral": freq.omega_spectral,
               "half_time": freq.half_time, "max_leakage": float(_prob(trace.max_leakage))}
    header = ["t", "t_scaled", "p_N", "p_0", "leakage"]
    rows = zip(trace.times, trace.scaled_times, _prob(trace.p_N), _prob(trace.p_0),
               _prob(trace.leakage))
    return _table(header, list(rows), summary, v["format"]), summary


def cmd_bell_ch(v) -> tuple:
    if v["phi_steps"] < 2:
        raise UsageError("--phi-steps must be >= 2")
    if v["mode"] not in ("ideal", "hamiltonian"):
        raise UsageError("--mode must be ideal or hamiltonian")
    if not v["phi_max"] > v["phi_min"]:
        raise UsageError("--phi-max must exceed --phi-min")
    params = None
    if v["mode"] == "hamiltonian":
        if v["kappa"] is None or v["g"] is None:
            raise UsageError("hamiltonian mode needs --kappa and --g")
        params = _nbs_params(v)
    elif v["N"] < 1:
        raise UsageError("--N must be >= 1")
    phis = np.linspace(v["phi_min"], v["phi_max"], v["phi_steps"])
    sweep = ch_sweep(phis, v["mode"], params, v["theta"], v["workers"])
    peak_phi, peak_S = sweep.peak()
    best = find_ch_maximum()
    summary = {"mode": v["mode"], "theta": v["theta"], "peak_S": peak_S, "peak_phi": peak_phi,
               "violation": bool(peak_S > 1.0),
               "violation_intervals": sweep.violation_intervals(),
               "ripple_amplitude": ripple_amplitude(sweep.S),
               "ideal_S_max": best.S_max, "ideal_phi_argmax": best.phi_max,
               "phi_pi_over_16": PHI_PI_OVER_16,
               "ideal_S_at_pi_over_16": best.S_at_pi_over_16,
               "ideal_S_at_peak_phi": float(ideal_ch_closed_form(peak_phi))}
    if params is not None:
        summary.update({"N": params.N, "kappa": params.kappa, "g": params.g,
                        "omega_fitted": sweep.omega,
                        "time_conversion": "physical time = scaled time / omega_fitted"})
    header = ["phi", "S", "p_pp_tt", "p_pp_ttp", "p_pp_tpt", "p_pp_tptp", "p_A_plus",
              "p_B_plus"]
    rows = []
    for phi, rep in zip(sweep.phi, sweep.reports):
        r = rep.row()
        rows.append([phi, r["S"]] + [float(_prob(r[h])) for h in header[2:]])
    return _table(header, rows, summary, v["format"]), summary


def _check_cat_amplitudes(*amps):
    for a in amps:
        if a < 0:
            raise UsageError("cat amplitudes must be >= 0")
        if a < NEAR_DEGENERATE_AMPLITUDE:
            raise DegenerateBasisError(
                f"amplitude {a} is below {NEAR_DEGENERATE_AMPLITUDE}: the two cat states of a "
                "site overlap too strongly to act as distinct measurement outcomes")


def _kerr_params(v) -> KerrParams:
    _check_cat_amplitudes(v["alpha"], v["beta"])
    return KerrParams(v["alpha"], v["beta"], v["Omega"], v.get("n_max"))


def cmd_kerr_chsh(v) -> tuple:
    params = _kerr_params(v)
    settings = KerrSettings(v["ta"], v["ta_prime"], v["tb"], v["tb_prime"])
    rep = chsh_kerr(params, settings)
    a = build_cat_basis(params.alpha, "A", params.n_max)
    b = build_cat_basis(params.beta, "B", params.n_max)
    summary = {"alpha": params.alpha, "beta": params.beta, "Omega": params.Omega,
               "n_max": params.n_max,
               "settings": {"t_a": settings.t_a, "t_a_prime": settings.t_a_prime,
                            "t_b": settings.t_b, "t_b_prime": settings.t_b_prime,
                            "units": "1/Omega"},
               **{f"E_{k}": rep.E[k] for k in PAIR_LABELS},
               "B": rep.B, "B_ideal_limit": IDEAL_B, "violation": rep.violation,
               "quadrant_probabilities": {
                   k: {f"{'p' if sa > 0 else 'm'}{'p' if sb > 0 else 'm'}": float(_prob(p))
                       for (sa, sb), p in rep.probabilities[k].items()}
                   for k in PAIR_LABELS},
               "cat_overlap_abs_a": abs(a.overlap), "cat_overlap_abs_b": abs(b.overlap)}
    if v["format"] == "csv":
        header = ["alpha", "beta"] + [f"E_{k}" for k in PAIR_LABELS] + ["B"]
        row = [params.alpha, params.beta] + rep.correlators() + [rep.B]
        return render_csv(header, [row]), summary
    return render_json(summary), summary


def cmd_kerr_sweep(v) -> tuple:
    if v["steps"] < 1:
        raise UsageError("--steps must be >= 1")
    if v["alpha_max"] < v["alpha_min"]:
        raise UsageError("--alpha-max must be >= --alpha-min")
    _check_cat_amplitudes(v["alpha_min"])
    alphas = np.linspace(v["alpha_min"], v["alpha_max"], v["steps"])
    reports = kerr_sweep(alphas, v["Omega"], workers=v["workers"])
    header = ["alpha", "B", "E1", "E2", "E3", "E4"]
    rows = [[float(a), r.B] + r.correlators() for a, r in zip(alphas, reports)]
    Bs = [r.B for r in reports]
    summary = {"Omega": v["Omega"], "pairs": list(PAIR_LABELS), "min_B": min(Bs),
               "max_B": max(Bs), "all_violate": bool(min(Bs) > 2.0)}
    return _table(header, rows, summary, v["format"]), summary


def cmd_kerr_density(v) -> tuple:
    if v["grid_points"] < 2:
        raise UsageError("--grid-points must be >= 2")
    params = _kerr_params(v)
    L = v["half_width"]
    if L is None:
        L = math.sqrt(2.0) * max(params.alpha, params.beta) + 6.0
    state = kerr_evolve(prepare_bell_cat(params), params.Omega, v["ta"], v["tb"])
    x = np.linspace(-L, L, v["grid_points"])
    dens = joint_quadrature_density(state, x)
    dens = np.maximum(dens, 0.0)
    rows = [[xa, xb, dens[i, j]] for i, xa in enumerate(x) for j, xb in enumerate(x)]
    summary = {"alpha": params.alpha, "beta": params.beta, "t_a": v["ta"], "t_b": v["tb"],
               "Omega": params.Omega, "half_width": L, "grid_points": v["grid_points"],
               "peak_density": float(dens.max())}
    return _table(["x_A", "x_B", "density"], rows, summary, v["format"]), summary


def cmd_optimize(v) -> tuple:
    if v["budget"] < MIN_BUDGET:
        raise UsageError(f"--budget must be >= {MIN_BUDGET}")
    for name in ("kappa_range", "g_range"):
        lo, hi = v[name]
        if not 0 < lo <= hi:
            raise UsageError(f"{_flag(name)} must satisfy 0 < LO <= HI")
    if v["N"] < 1:
        raise UsageError("--N must be >= 1")
    res = optimize_nbs(v["N"], v["kappa_range"], v["g_range"], v["budget"], v["workers"])
    summary = {"N": v["N"], "objective": OBJECTIVE_LABEL,
               "best": {"kappa": res.params.kappa, "g": res.params.g,
                        "g_over_kappa": res.params.g / res.params.kappa,
                        **res.objective.as_dict()},
               "grid_best": {"kappa": res.grid_best_params.kappa, "g": res.grid_best_params.g,
                             **res.grid_best.as_dict()},
               "evaluations": res.evaluations, "budget": v["budget"]}
    summary["best"].pop("objective")
    summary["grid_best"].pop("objective")
    if v["format"] == "csv":
        header = ["kappa", "g", "score", "max_leakage", "profile_error", "omega_fitted",
                  "evaluations"]
        o = res.objective
        row = [res.params.kappa, res.params.g, o.score, o.max_leakage, o.profile_error,
               o.omega_fitted, res.evaluations]
        return render_csv(header, [row]), summary
    return render_json(summary), summary


def cmd_verify(v, inject_fault=None) -> tuple:
    from . import verify
    from .kerr import FAULT_ENV
    previous = os.environ.get(FAULT_ENV)
    if inject_fault:
        os.environ[FAULT_ENV] = inject_fault
    try:
        results = verify.run_checks(v["filter"])
    finally:
        if previous is None:
            os.environ.pop(FAULT_ENV, None)
        else:
            os.environ[FAULT_ENV] = previous
    if not results:
        raise UsageError(f"no checks match filter {v['filter']!r}")
    text = verify.format_table(results)
    return text, {"passed": all(r.passed for r in results)}


COMMANDS = {"nbs-trace": cmd_nbs_trace, "bell-ch": cmd_bell_ch, "kerr-chsh": cmd_kerr_chsh,
            "kerr-sweep": cmd_kerr_sweep, "kerr-density": cmd_kerr_density,
            "optimize": cmd_optimize, "verify": cmd_verify}


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        values = resolve_options(args)
        if args.command == "verify":
            text, summary = cmd_verify(values, args.inject_fault)
            _emit(text, values["output"])
            return 0 if summary["passed"] else 1
        text, summary = COMMANDS[args.command](values)
    except UsageError as exc:
        parser.error(str(exc))
    except DomainError as exc:
        parser.error(str(exc))
    except (MacroBellError, ArithmeticError) as exc:
        print(f"macrobell {args.command}: {exc}", file=sys.stderr)
        return 1
    _emit(text, values["output"])
    if args.summary:
        _emit(render_json(summary), args.summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
