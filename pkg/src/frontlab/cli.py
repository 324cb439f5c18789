"""Command line harness around the certify / wave / supersolution /
run / sweep pipelines.

Each subcommand reads one JSON config (see config.py), optionally
patched by --override dotted.path=value flags, and emits JSON reports
plus CSV tables.  Every CSV starts with a column-schema comment line.
Exit codes: 0 on success, 2 on configuration errors, 3 on numerical
failures with the failing stage named on stderr.  FRONTLAB_LOG sets
the logging level.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import (
    ConfigError,
    ExperimentConfig,
    build_drift,
    build_nonlinearity,
    load_config,
)
from .drift import blocking_criterion, make_mollified_indicator
from .nonlinearity import blocking_constants
from .simulator import Grid1D, run_simulation
from .supersolution import (
    continue_to_minus_infinity,
    scaled_residual,
    verify_supersolution,
)
from .wave import solve_wave

log = logging.getLogger("frontlab")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class StageFailure(RuntimeError):
    """A pipeline stage failed numerically; stage names the culprit."""

    def __init__(self, stage: str, exc: BaseException):
        self.stage = stage
        super().__init__(f"stage '{stage}' failed: {exc}")


def _stage(name: str, fn, *args, **kwargs):
    """Run one pipeline stage, converting numerical errors into a
    StageFailure that carries the stage name."""
    try:
        return fn(*args, **kwargs)
    except ConfigError:
        raise
    except (RuntimeError, ArithmeticError, ValueError) as exc:
        raise StageFailure(name, exc) from exc


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    return repr(float(v))


def _write_csv(path: str, columns, rows, extra_comments=()):
    with open(path, "w") as fh:
        fh.write("# columns: " + ", ".join(columns) + "\n")
        for line in extra_comments:
            fh.write("# " + line + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _ensure_out(args) -> str:
    if not args.out:
        raise ConfigError("--out", "this subcommand writes files and "
                          "needs an output directory")
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _load(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("--config", "a config file is required")
    return load_config(args.config, args.override)


# ---------------------------------------------------------------------------
# subcommands


def cmd_certify(args) -> int:
    cfg = _load(args)
    nl = _stage("nonlinearity", build_nonlinearity, cfg.nonlinearity)
    consts = _stage("constants", blocking_constants, nl)
    d = _stage("drift", build_drift, cfg.drift)
    rep = _stage("certify", blocking_criterion, consts, d)
    text = _json_text(rep.to_dict())
    sys.stdout.write(text)
    if args.out:
        out = _ensure_out(args)
        with open(os.path.join(out, "criterion.json"), "w") as fh:
            fh.write(text)
    return EXIT_OK


def cmd_wave(args) -> int:
    cfg = _load(args)
    nl = _stage("nonlinearity", build_nonlinearity, cfg.nonlinearity)
    w = _stage("wave", solve_wave, nl, Z=cfg.wave.Z, tol=cfg.wave.tol,
               dz=cfg.wave.dz, n_grid=cfg.wave.n_grid)
    summary = {
        "c": w.c,
        "C_phi": w.C_phi,
        "mu": w.mu,
        "sigma": w.sigma,
        "omega_decay": w.omega_decay,
        "n_grid": int(w.z_grid.size),
    }
    sys.stdout.write(_json_text(summary))
    if args.out:
        out = _ensure_out(args)
        rows = zip(w.z_grid, w.phi, w.phi_prime)
        _write_csv(os.path.join(out, "wave.csv"),
                   ("z", "phi", "phi_prime"), rows)
    return EXIT_OK


def cmd_supersolution(args) -> int:
    cfg = _load(args)
    nl = _stage("nonlinearity", build_nonlinearity, cfg.nonlinearity)
    consts = _stage("constants", blocking_constants, nl)
    d = _stage("drift", build_drift, cfg.drift)
    sc = cfg.supersolution
    a = sc.a if sc.a is not None else consts.a_opt
    delta = sc.delta
    if delta is None:
        crit = _stage("certify", blocking_criterion, consts, d)
        if crit.verdict == "BlockingCertified":
            delta = crit.delta
    s = _stage("supersolution", continue_to_minus_infinity, d, nl, a,
               tol=sc.tol, R_start=sc.R_start,
               max_doublings=sc.max_doublings, delta=delta)
    rep = _stage("verify", verify_supersolution, s, d, nl)
    text = _json_text(rep.to_dict())
    sys.stdout.write(text)
    if args.out:
        out = _ensure_out(args)
        w = s.w_inf
        res = np.full(w.grid.size, math.nan)
        res[1:-1] = scaled_residual(w, d, nl)
        rows = zip(w.grid, w.values, res)
        _write_csv(os.path.join(out, "supersolution.csv"),
                   ("x", "w", "residual"), rows)
        with open(os.path.join(out, "supersolution.json"), "w") as fh:
            fh.write(text)
    if not rep.passed:
        print("numerical failure: stage 'verify' failed: barrier "
              "property not satisfied", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _simulate(cfg: ExperimentConfig, nl, d, w):
    if cfg.grid.x_min > -d.x0 - 5.0:
        raise ConfigError(
            "grid.x_min",
            f"must be at most {-d.x0 - 5.0:g} so the grid holds the "
            "drift support with margin")
    g = Grid1D(cfg.grid.x_min, cfg.grid.x_max, cfg.grid.n)
    t = cfg.time
    return g, run_simulation(
        nl, d, w, g, t.t0, t.t_end, t.dt, scheme=cfg.scheme,
        sample_interval=t.sample_interval,
        checkpoint_times=cfg.checkpoint_times,
        monitors=cfg.monitors, cutoff_speed=cfg.cutoff_speed,
        tol_env=cfg.tol_env)


def cmd_run(args) -> int:
    cfg = _load(args)
    out = _ensure_out(args)
    nl = _stage("nonlinearity", build_nonlinearity, cfg.nonlinearity)
    d = _stage("drift", build_drift, cfg.drift)
    w = _stage("wave", solve_wave, nl, Z=cfg.wave.Z, tol=cfg.wave.tol,
               dz=cfg.wave.dz, n_grid=cfg.wave.n_grid)
    g, result = _stage("simulate", _simulate, cfg, nl, d, w)
    rep = result.report

    rows = zip(result.times, rep.front_trace[:, 1], rep.beta_trace)
    _write_csv(os.path.join(out, "front_trace.csv"),
               ("t", "front", "beta_fit"), rows)
    _write_csv(os.path.join(out, "monitors.csv"),
               ("t", "L", "Q", "margin_lower", "margin_upper"),
               result.monitor_rows)
    x = g.nodes()
    for i, (t_ck, u) in enumerate(result.checkpoints):
        _write_csv(os.path.join(out, f"checkpoint_{i:02d}.csv"),
                   ("x", "u"), zip(x, u),
                   extra_comments=(f"t = {t_ck!r}",))
    with open(os.path.join(out, "report.json"), "w") as fh:
        fh.write(_json_text(rep.to_dict()))
    lines = [
        f"classification: {rep.classification}",
        f"beta_shift: {rep.beta_shift}",
        f"envelope violations: {len(rep.envelope_violations)}",
        f"front samples: {rep.front_trace.shape[0]}",
    ]
    lines += [f"note: {n}" for n in rep.notes]
    with open(os.path.join(out, "summary.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"{rep.classification} (beta = {rep.beta_shift}); "
          f"artifacts in {out}")
    return EXIT_OK


def _sweep_job(cfg: ExperimentConfig, nl, consts, w, K: float,
               eps: float):
    smoothing = cfg.sweep.smoothing_factor * eps
    try:
        d = make_mollified_indicator(K, eps, smoothing)
        verdict_cert = blocking_criterion(consts, d).verdict
    except ConfigError:
        raise
    except (RuntimeError, ArithmeticError, ValueError) as exc:
        log.warning("sweep cell K=%g eps=%g: criterion failed: %s",
                    K, eps, exc)
        return K, eps, f"Failed({type(exc).__name__})", "Skipped"
    try:
        _, result = _simulate(cfg, nl, d, w)
        verdict_sim = result.report.classification
    except ConfigError:
        raise
    except (RuntimeError, ArithmeticError, ValueError) as exc:
        log.warning("sweep cell K=%g eps=%g failed: %s", K, eps, exc)
        verdict_sim = f"Failed({type(exc).__name__})"
    return K, eps, verdict_cert, verdict_sim


def cmd_sweep(args) -> int:
    cfg = _load(args)
    out = _ensure_out(args)
    sw = cfg.sweep
    if not sw.K_values or not sw.eps_values:
        raise ConfigError("sweep.K_values",
                          "sweep needs K_values and eps_values")
    nl = _stage("nonlinearity", build_nonlinearity, cfg.nonlinearity)
    consts = _stage("constants", blocking_constants, nl)
    w = _stage("wave", solve_wave, nl, Z=cfg.wave.Z, tol=cfg.wave.tol,
               dz=cfg.wave.dz, n_grid=cfg.wave.n_grid)
    jobs = [(float(K), float(eps))
            for K in sw.K_values for eps in sw.eps_values]
    rows = []
    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        futures = [pool.submit(_sweep_job, cfg, nl, consts, w, K, eps)
                   for K, eps in jobs]
        for fut in futures:
            rows.append(fut.result())
    _write_csv(os.path.join(out, "phase_diagram.csv"),
               ("K", "eps", "verdict_cert", "verdict_sim"), rows)
    print(f"{len(rows)} sweep cells; artifacts in {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frontlab",
        description="Certify and simulate front blocking under a "
                    "compactly supported drift.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, help_text in (
            ("certify", cmd_certify,
             "evaluate the variational blocking criterion"),
            ("wave", cmd_wave, "solve the undisturbed front profile"),
            ("supersolution", cmd_supersolution,
             "build and verify the stationary barrier"),
            ("run", cmd_run, "time-step one experiment with monitors"),
            ("sweep", cmd_sweep,
             "scan a (K, eps) grid for certificate vs simulation")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True,
                       help="path to the JSON experiment config")
        p.add_argument("--out", default=None,
                       help="output directory for artifacts")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads (sweep only)")
        p.add_argument("--override", action="append", default=[],
                       metavar="PATH=VALUE",
                       help="dotted-path config override, repeatable")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=getattr(logging, os.environ.get("FRONTLAB_LOG",
                                              "WARNING").upper(),
                      logging.WARNING))
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
