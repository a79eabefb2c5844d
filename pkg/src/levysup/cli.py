"""Command-line front end.

Subcommands map onto the exact-law evaluator, the Monte Carlo experiment
drivers, and the slow-variation diagnostic. Options resolve in three layers:
built-in defaults, then the config file (INI section named after the
subcommand, or a previously written run manifest), then explicit flags.
Every experiment writes a CSV plus a ``manifest.json`` that can be fed back
through ``--config`` to reproduce the CSV byte-for-byte.

Exit codes: 0 success, 1 a validated bound or hard check failed, 2
configuration/usage error.
"""

from __future__ import annotations

import argparse
import configparser
import datetime
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .errors import ConfigurationError, DomainError
from .exact_dist import CdfCurve, mt_cdf_exact
from .families import (
    LevyMeasureSpec,
    NormingScale,
    SlowlyVarying,
    ssv_diagnostic,
    ssv_verdict,
)
from .harness import (
    ExperimentConfig,
    run_de_experiment,
    run_inequality_validation,
    run_mt_experiment,
    run_yz_experiment,
)

__all__ = ["run", "main"]

_COMMANDS = ("mt-exact", "simulate", "yz", "de", "validate-ineq", "ssv-check")

_DEFAULTS = {
    "alpha": "1",
    "ell": "constant:1",
    "neg_ratio": "0",
    "cutoff": "",            # empty -> model default (see _make_spec)
    "q": "0.9",
    "t_grid": "1e-2:1e-4",
    "x_grid": "0.5:1:2",
    "replicates": "1000",
    "seed": "",
    "threads": "1",
    "eps": "",
    "eps_budget": "0.5",
    "out_dir": "levysup-out",
    "centered": "auto",
    "a_grid": "0.05:0.1:0.2",
    "b_grid": "0.1:0.2:0.4",
    "p": "2",
    "t": "",
    "x": "",
    "delta_max": "2",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levysup",
        description="Small-time extremes of Levy processes: exact laws and "
                    "Monte Carlo verification.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("mt-exact", "evaluate the exact maximum-jump CDF"),
        ("simulate", "Monte Carlo of the scaled maximum jump vs exact law"),
        ("yz", "Frechet fit of the scaled running/process suprema"),
        ("de", "coupling probability of the two suprema"),
        ("validate-ineq", "Monte Carlo domination check of the exponential "
                          "bounds"),
        ("ssv-check", "super-slow-variation verdict for an ell family"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None,
                       help="INI config or a previous run's manifest.json")
        for key in _DEFAULTS:
            p.add_argument("--" + key.replace("_", "-"), default=None,
                           dest=key)
    return parser


# ---------------------------------------------------------------------------
# option resolution


def _load_config(path: str, command: str) -> dict:
    if not os.path.exists(path):
        raise ConfigurationError(f"config file not found: {path}")
    with open(path) as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        manifest = json.loads(text)
        opts = manifest.get("options")
        if not isinstance(opts, dict):
            raise ConfigurationError(f"not a run manifest: {path}")
        return {k: str(v) for k, v in opts.items()}
    cp = configparser.ConfigParser()
    cp.read_string(text)
    out = {}
    for section in ("common", command):
        if cp.has_section(section):
            out.update(dict(cp.items(section)))
    unknown = set(out) - set(_DEFAULTS)
    if unknown:
        raise ConfigurationError(
            f"unknown config keys: {', '.join(sorted(unknown))}")
    return out


def _resolve_options(args: argparse.Namespace) -> dict:
    opts = dict(_DEFAULTS)
    if args.config is not None:
        opts.update(_load_config(args.config, args.command))
    for key in _DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = val
    if opts["seed"] == "":
        # fresh entropy, recorded in the manifest so the run is replayable
        opts["seed"] = str(int(np.random.SeedSequence().entropy) % 2**32)
    return opts


def _grid(text: str) -> tuple:
    try:
        vals = tuple(float(v) for v in str(text).split(":") if v != "")
    except ValueError as exc:
        raise ConfigurationError(f"bad grid {text!r}") from exc
    if not vals:
        raise ConfigurationError(f"empty grid {text!r}")
    return vals


def _make_spec(opts: dict, stable_default_cutoff: bool = False) \
        -> LevyMeasureSpec:
    ell = SlowlyVarying.parse(opts["ell"])
    if opts["cutoff"] != "":
        cutoff = float(opts["cutoff"])
    elif stable_default_cutoff and ell.kind == "constant":
        # exact-law arithmetic: the pure power tail with no truncation
        cutoff = math.inf
    else:
        cutoff = 1.0
    try:
        return LevyMeasureSpec(float(opts["alpha"]), ell,
                               neg_ratio=float(opts["neg_ratio"]),
                               cutoff=cutoff)
    except (DomainError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from exc


def _centered(opts: dict) -> bool | None:
    val = str(opts["centered"]).lower()
    if val in ("auto", ""):
        return None
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"bad centered value {opts['centered']!r}")


def _experiment_config(opts: dict, kind: str) -> ExperimentConfig:
    return ExperimentConfig(
        spec=_make_spec(opts),
        kind=kind,
        report_times=_grid(opts["t_grid"]),
        n_replicates=int(opts["replicates"]),
        master_seed=int(opts["seed"]),
        q=float(opts["q"]),
        delta=float(opts["eps_budget"]),
        eps=float(opts["eps"]) if opts["eps"] != "" else None,
        centered=_centered(opts),
        threads=int(opts["threads"]),
    )


def _write_outputs(opts: dict, command: str, report, csv_name: str) -> str:
    out_dir = opts["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, csv_name)
    report.to_csv(csv_path)
    manifest = {
        "tool": "levysup",
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "command": command,
        "options": opts,
        "outputs": [csv_name],
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path


# ---------------------------------------------------------------------------
# subcommands


def _cmd_mt_exact(opts: dict) -> int:
    spec = _make_spec(opts, stable_default_cutoff=True)
    scale = NormingScale(spec)
    if opts["t"] != "" and opts["x"] != "":
        value = mt_cdf_exact(spec, scale, float(opts["t"]), float(opts["x"]))
        print(f"{value:.6f}")
        return 0
    # grid mode: one CDF curve per report time
    t_vals = _grid(opts["t_grid"]) if opts["t"] == "" else (float(opts["t"]),)
    x_vals = _grid(opts["x_grid"]) if opts["x"] == "" else (float(opts["x"]),)
    out_dir = opts["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for t in t_vals:
        values = [mt_cdf_exact(spec, scale, t, x) for x in sorted(x_vals)]
        curve = CdfCurve(np.sort(np.asarray(x_vals)), np.asarray(values),
                         meta={"t": t})
        name = f"mt_exact_t{t:g}.csv"
        curve.to_csv(os.path.join(out_dir, name))
        written.append(name)
    manifest = {
        "tool": "levysup",
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "command": "mt-exact",
        "options": opts,
        "outputs": written,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for name in written:
        print(os.path.join(out_dir, name))
    return 0


def _cmd_simulate(opts: dict) -> int:
    cfg = _experiment_config(opts, "mt")
    report = run_mt_experiment(cfg)
    path = _write_outputs(opts, "simulate", report, "simulate.csv")
    worst = max(abs(r["zscore"]) for r in report.rows
                if r["statistic"] == "cdf_point")
    print(f"wrote {path}")
    print(f"max |z| over {sum(r['statistic'] == 'cdf_point' for r in report.rows)} "
          f"pointwise checks: {worst:.3f}")
    return 0


def _cmd_yz(opts: dict) -> int:
    cfg = _experiment_config(opts, "yz")
    report = run_yz_experiment(cfg)
    path = _write_outputs(opts, "yz", report, "yz.csv")
    print(f"wrote {path}")
    for r in report.rows:
        if r["statistic"] in ("ks_Y", "ks_Z"):
            print(f"t={r['t']:g} {r['statistic']}={r['estimate']:.5f}")
    return 0


def _cmd_de(opts: dict) -> int:
    cfg = _experiment_config(opts, "de")
    report = run_de_experiment(cfg)
    path = _write_outputs(opts, "de", report, "de.csv")
    print(f"wrote {path}")
    for r in report.rows:
        print(f"t={r['t']:g} p(Y=Z)={r['p_equal']:.4f} "
              f"(se {r['stderr']:.4f})")
    return 0


def _cmd_validate_ineq(opts: dict) -> int:
    cfg = _experiment_config(opts, "ineq")
    t_vals = _grid(opts["t_grid"])
    params = [(a, b, t, int(opts["p"]))
              for t in t_vals
              for a in _grid(opts["a_grid"])
              for b in _grid(opts["b_grid"])]
    report = run_inequality_validation(cfg, params)
    path = _write_outputs(opts, "validate-ineq", report, "ineq.csv")
    print(f"wrote {path}")
    violations = [r for r in report.rows if not r["satisfied"]]
    for r in violations:
        print(f"VIOLATED {r['case']} a={r['a']:g} b={r['b']:g} t={r['t']:g}: "
              f"estimate {r['estimate']:.5f} > bound {r['bound']:.5g}")
    n_vac = sum(r["vacuous"] for r in report.rows)
    print(f"{len(report.rows)} cases, {len(violations)} violated, "
          f"{n_vac} vacuous")
    return 1 if violations else 0


def _cmd_ssv_check(opts: dict) -> int:
    ell = SlowlyVarying.parse(opts["ell"])
    t_grid = np.asarray(sorted(_grid(opts["t_grid"]), reverse=True))
    devs = ssv_diagnostic(ell, float(opts["delta_max"]), t_grid)
    passed = ssv_verdict(devs)
    for t, d in zip(t_grid, devs):
        print(f"t={t:g} sup-deviation={d:.6g}")
    print(("super-slowly varying" if passed
           else "NOT super-slowly varying"))
    return 0


_DISPATCH = {
    "mt-exact": _cmd_mt_exact,
    "simulate": _cmd_simulate,
    "yz": _cmd_yz,
    "de": _cmd_de,
    "validate-ineq": _cmd_validate_ineq,
    "ssv-check": _cmd_ssv_check,
}


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 2
        return 0 if code == 0 else 2
    try:
        opts = _resolve_options(args)
        return _DISPATCH[args.command](opts)
    except (ConfigurationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
