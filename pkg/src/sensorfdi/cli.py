"""Command-line entry points: synth, design, run, report."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .data import generate_synthetic_flight
from .pipeline import (
    DiagnosisReport,
    PipelineConfig,
    PipelineError,
    emit_series,
    run_offline_design,
    run_pipeline,
    write_report,
)

log = logging.getLogger(__name__)


def _load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.from_json(args.config)
    if args.seed is not None:
        cfg = cfg.reseed(args.seed)
    return cfg


def _cmd_synth(args) -> int:
    cfg = _load_config(args)
    synth = cfg.synthetic_train if args.role == "train" else cfg.synthetic_validation
    if synth is None:
        raise PipelineError("synth", f"config has no synthetic_{args.role} section")
    ds = generate_synthetic_flight(synth)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ds.x_channels) + list(ds.u_channels))
        for row in ds.samples:
            writer.writerow([repr(float(v)) for v in row])
    print(f"wrote {ds.m}x{ds.n} dataset to {args.out}")
    return 0


def _cmd_design(args) -> int:
    cfg = _load_config(args)
    bundle = run_offline_design(cfg)
    Path(args.out).write_text(bundle.to_json() + "\n", encoding="utf-8")
    print(f"wrote design bundle to {args.out}")
    print(f"  detection threshold: {bundle.detection.threshold:.6g}")
    print(f"  reliability threshold: {bundle.reliability.threshold:.6g}")
    print(f"  direction objective: {bundle.isolation.objective:.6g}")
    return 0


def _default_series_ids(report: DiagnosisReport) -> list[str]:
    ids = []
    for result in report.results:
        ids.append(f"detection/{result.name}/{result.rule}")
        ids.append(f"evidence/{result.name}/{result.rule}")
        ids.append(f"combined/{result.name}/{result.rule}")
    for name in report.scenario_names():
        if any(r.name == name and r.fault is not None for r in report.results):
            ids.append(f"fault-evidence/{name}")
    return ids


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    report = run_pipeline(cfg)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "bundle.json").write_text(report.bundle.to_json() + "\n", encoding="utf-8")
    series_dir = outdir / "series"
    series_dir.mkdir(exist_ok=True)
    paths = {}
    for series_id in _default_series_ids(report):
        filename = series_id.replace("/", "_") + ".csv"
        emit_series(report, series_id, series_dir / filename)
        paths[series_id] = Path("series") / filename
    write_report(report, outdir / "report.json", series_paths=paths)
    print(f"wrote report to {outdir / 'report.json'}")
    _print_metrics(report)
    return 0


def _print_metrics(report: DiagnosisReport) -> None:
    print(f"{'scenario':<20} {'rule':<6} {'TDR%':>8} {'TIR%':>8} {'FA%':>8}")
    for result in report.results:
        tdr = "-" if result.tdr is None else f"{result.tdr:.1f}"
        tir = "-" if result.tir is None else f"{result.tir:.1f}"
        print(
            f"{result.name:<20} {result.rule:<6} {tdr:>8} {tir:>8} "
            f"{result.false_alarm_rate:>8.2f}"
        )


def _cmd_report(args) -> int:
    cfg = _load_config(args)
    report = run_pipeline(cfg)
    if args.series:
        emit_series(report, args.series, args.out)
        print(f"wrote series {args.series} to {args.out}")
    else:
        _print_metrics(report)
        if args.out:
            write_report(report, args.out)
            print(f"wrote report to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sensorfdi",
        description="Sensor fault detection and isolation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic dataset CSV")
    synth.add_argument("--role", choices=("train", "validation"), default="train")
    design = sub.add_parser("design", help="run the offline design phase")
    run = sub.add_parser("run", help="full pipeline: design, scenarios, report")
    report = sub.add_parser("report", help="recompute and emit metrics or one series")
    report.add_argument("--series", help="series id, e.g. combined/fault_x1/RB")

    for cmd, out_required in ((synth, True), (design, True), (run, True), (report, False)):
        cmd.add_argument("--config", required=True, help="pipeline config JSON")
        cmd.add_argument("--seed", type=int, default=None, help="override config seeds")
        cmd.add_argument("--out", required=out_required, help="output path")
    return parser


_COMMANDS = {
    "synth": _cmd_synth,
    "design": _cmd_design,
    "run": _cmd_run,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except PipelineError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (ValueError, OSError, np.linalg.LinAlgError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
