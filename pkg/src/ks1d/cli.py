"""Command-line entry points.

Subcommands:

* ``simulate <config>``: run the solver, write diagnostics/state/summary
  artifacts.  Exit 0 on horizon-reached, 2 on blow-up detected (a
  distinguished scientific outcome, not an error), 1 on errors or dt
  underflow.
* ``certify <config>``: evaluate the blow-up certificate only; JSON on
  stdout.  Exit 0 when certified, 3 when inconclusive, 1 on errors.
* ``sweep <config>``: evaluate certificates (optionally simulations)
  over 1-2 swept scalars in parallel; CSV table.  Exit 0.
* ``verify <config>``: run the invariant battery; report on stdout,
  nonzero exit when any check fails.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import RunConfig, apply_override, parse_config
from .criterion import certify, scan_q
from .errors import ConfigError, KS1DError
from .initial_data import build_initial_state
from .solver import run
from .verify import run_verification

log = logging.getLogger("ks1d")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BLOWUP = 2
EXIT_INCONCLUSIVE = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ks1d",
        description="1D Keller-Segel laboratory: simulate, certify, sweep, verify",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("simulate", "advance the system and write diagnostics"),
        ("certify", "evaluate the blow-up certificate (no simulation)"),
        ("sweep", "scan 1-2 parameters, one CSV row per point"),
        ("verify", "run the invariant/identity battery"),
    ):
        cmd = sub.add_parser(name, help=help_)
        cmd.add_argument("config", help="path to the key-value configuration")
        cmd.add_argument("--out", default=".", help="output directory")
        cmd.add_argument("--quiet", action="store_true", help="suppress progress output")
        cmd.add_argument("--jobs", type=int, default=None,
                         help="worker processes for sweeps (default: machine parallelism)")
    return parser


def _certificate_for(cfg: RunConfig):
    params = cfg.params
    model = cfg.diffusion.build()
    state0 = build_initial_state(cfg.initial, params, cfg.grid)
    if cfg.certificate_scan:
        return scan_q(state0.u, state0.v, params, model, cfg.grid)
    if cfg.certificate_q is None:
        raise ConfigError("set certificate.q (or certificate.scan = true)")
    return certify(state0.u, state0.v, params, model, cfg.certificate_q, cfg.grid)


def cmd_simulate(cfg: RunConfig, out_dir: Path) -> int:
    params = cfg.params
    model = cfg.diffusion.build()
    state0 = build_initial_state(cfg.initial, params, cfg.grid)
    track = cfg.track_subsolution and params.eps > 0.0
    outcome, series = run(state0, params, model, cfg.grid, cfg.solver,
                          qs=cfg.qs, track_subsolution=track)
    out_dir.mkdir(parents=True, exist_ok=True)
    series.to_csv(out_dir / "diagnostics.csv")

    final = series.final_state
    x = cfg.grid.centers()
    with open(out_dir / "state.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "u", "v"])
        for i in range(cfg.grid.n):
            writer.writerow([repr(float(x[i])), repr(float(final.u[i])),
                             repr(float(final.v[i]))])

    summary = {
        "outcome": {
            "reason": outcome.reason,
            "t_final": outcome.t_final,
            "max_u": outcome.max_u,
            "steps": outcome.steps,
        },
        "final": {
            "t": float(series.t[-1]),
            "mass": float(series.mass[-1]),
            "v_mean": float(series.v_mean[-1]),
            "L": float(series.L[-1]),
            "diss_cum": float(series.diss_cum[-1]),
            "sup_u": float(series.sup_u[-1]),
            "h1_v": float(series.h1_v[-1]),
        },
        "certificate": None,
    }
    if cfg.certificate_q is not None or cfg.certificate_scan:
        cert = _certificate_for(cfg)
        summary["certificate"] = cert.to_dict()
        if cert.T_star is not None:
            summary["t_b"] = outcome.t_final if outcome.reason == "blowup-detected" else None
            summary["T_star"] = cert.T_star
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    log.info("%s at t = %.6g after %d steps; sup u = %.6g",
             outcome.reason, outcome.t_final, outcome.steps, outcome.max_u)
    if outcome.reason == "horizon-reached":
        return EXIT_OK
    if outcome.reason == "blowup-detected":
        return EXIT_BLOWUP
    log.error("time step underflow at t = %.6g", outcome.t_final)
    return EXIT_ERROR


def cmd_certify(cfg: RunConfig) -> int:
    cert = _certificate_for(cfg)
    json.dump(cert.to_dict(), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK if cert.certified else EXIT_INCONCLUSIVE


def _sweep_point(args: tuple[str, tuple[tuple[str, float], ...], bool]) -> dict:
    """Worker: evaluate one sweep point from serialised configuration."""
    text, overrides, simulate = args
    row: dict = {name: value for name, value in overrides}
    try:
        cfg = parse_config(text)
        for name, value in overrides:
            cfg = apply_override(cfg, name, value)
        cert = _certificate_for(cfg)
        row.update({
            "indicator": cert.indicator,
            "envelope_at_X0": cert.envelope_at_X0,
            "verdict": cert.verdict,
            "T_star": "" if cert.T_star is None else cert.T_star,
            "t_b": "",
            "error": "",
        })
        if simulate:
            params = cfg.params
            model = cfg.diffusion.build()
            state0 = build_initial_state(cfg.initial, params, cfg.grid)
            outcome, _ = run(state0, params, model, cfg.grid, cfg.solver, qs=cfg.qs)
            row["t_b"] = outcome.t_final if outcome.reason == "blowup-detected" else ""
            row["outcome"] = outcome.reason
    except Exception as exc:  # per-point failures stay in the table
        row.setdefault("indicator", "")
        row.setdefault("envelope_at_X0", "")
        row.setdefault("verdict", "")
        row.setdefault("T_star", "")
        row.setdefault("t_b", "")
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def cmd_sweep(cfg: RunConfig, cfg_text: str, out_dir: Path, jobs: int | None) -> int:
    if not cfg.sweep:
        raise ConfigError("sweep needs sweep.parameter (+ start/stop/count)")
    axes = cfg.sweep
    values = [axis.values() for axis in axes]
    points: list[tuple[tuple[str, float], ...]] = []
    if len(axes) == 1:
        points = [((axes[0].parameter, v),) for v in values[0]]
    else:
        points = [((axes[0].parameter, a), (axes[1].parameter, b))
                  for a in values[0] for b in values[1]]
    tasks = [(cfg_text, overrides, cfg.sweep_simulate) for overrides in points]

    fieldnames = [axis.parameter for axis in axes]
    fieldnames += ["indicator", "envelope_at_X0", "verdict", "T_star", "t_b"]
    if cfg.sweep_simulate:
        fieldnames.append("outcome")
    fieldnames.append("error")

    jobs = jobs or os.cpu_count() or 1
    if tasks and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(task) for task in tasks]

    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "sweep.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    log.info("wrote %d sweep rows to %s", len(rows), path)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out_dir: Path) -> int:
    report = run_verification(cfg)
    for line in report.lines():
        print(line)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "verify.json", "w") as fh:
        json.dump([{"name": c.name, "ok": c.ok, "detail": c.detail}
                   for c in report.checks], fh, indent=2)
    return EXIT_OK if report.ok else EXIT_ERROR


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    try:
        with open(args.config) as fh:
            cfg_text = fh.read()
        cfg = parse_config(cfg_text)
        out_dir = Path(args.out)
        if args.command == "simulate":
            return cmd_simulate(cfg, out_dir)
        if args.command == "certify":
            return cmd_certify(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg, cfg_text, out_dir, args.jobs)
        return cmd_verify(cfg, out_dir)
    except (KS1DError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
