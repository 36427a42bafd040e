"""Command-line front end: run experiments, calibrate thresholds, export reports."""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, apply_sweep_value, parse_config_file
from .harness import calibrate_delta, dump_example_iq, export_csv, run_monte_carlo
from .metrics import reports_from_json, reports_to_json


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("config", help="flat key=value experiment config file")
    parser.add_argument("--seed", type=int, help="override master_seed")
    parser.add_argument("--trials", type=int, help="override n_auth")
    parser.add_argument("--sweep", help="axis=v1,v2,... sweep override")
    parser.add_argument("--attack", help="override attacker kind")
    parser.add_argument("--out", help="override output directory")


def _load_config(args):
    config = parse_config_file(args.config)
    if args.seed is not None:
        config.master_seed = args.seed
    if args.trials is not None:
        config.n_auth = args.trials
    if args.attack is not None:
        config.attack = args.attack
    if args.out is not None:
        config.out_dir = args.out
    if args.sweep is not None:
        axis, _, raw = args.sweep.partition("=")
        values = [v.strip() for v in raw.split(",") if v.strip()]
        config.sweep_axis = axis.strip()
        if axis.strip() in ("profile", "attack"):
            config.sweep_values = values
        elif axis.strip() == "key_length":
            config.sweep_values = [int(v) for v in values]
        else:
            config.sweep_values = [float(v) for v in values]
    config.validate()
    return config


def _export(reports, out_dir, figures: bool) -> None:
    paths = export_csv(reports, out_dir)
    report_path = os.path.join(out_dir, "report.json")
    with open(report_path, "w", encoding="utf-8") as f:
        f.write(reports_to_json(reports))
    paths.append(report_path)
    if figures:
        from . import plots
        paths.extend(plots.render_all(reports, out_dir))
    for p in paths:
        print(p)


def cmd_run(args) -> int:
    config = _load_config(args)
    if args.dump_iq:
        dump_example_iq(config, args.dump_iq)
        print(args.dump_iq)
    reports = run_monte_carlo(config)
    _export(reports, config.out_dir, not args.no_figures)
    return 0


def cmd_calibrate(args) -> int:
    config = _load_config(args)
    delta = calibrate_delta(config, args.target_fpr)
    print(f"delta={delta!r}")
    return 0


def cmd_roc(args) -> int:
    config = _load_config(args)
    config.experiment = "roc"
    reports = run_monte_carlo(config)
    _export(reports, config.out_dir, not args.no_figures)
    return 0


def cmd_export(args) -> int:
    with open(args.report, "r", encoding="utf-8") as f:
        reports = reports_from_json(f.read())
    _export(reports, args.out, not args.no_figures)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bdauth",
        description="Monte Carlo simulator for power-ratio challenge-response "
                    "authentication between ambient-backscatter devices")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the configured experiment")
    _add_common(p_run)
    p_run.add_argument("--dump-iq", metavar="FILE",
                       help="also dump one challenge frame as float32 I/Q")
    p_run.add_argument("--no-figures", action="store_true",
                       help="skip figure rendering")
    p_run.set_defaults(func=cmd_run)

    p_cal = sub.add_parser("calibrate", help="train the decision threshold")
    _add_common(p_cal)
    p_cal.add_argument("--target-fpr", type=float,
                       help="false-positive budget (default from config)")
    p_cal.set_defaults(func=cmd_calibrate)

    p_roc = sub.add_parser("roc", help="run a ROC experiment and export the curve")
    _add_common(p_roc)
    p_roc.add_argument("--no-figures", action="store_true")
    p_roc.set_defaults(func=cmd_roc)

    p_exp = sub.add_parser("export", help="re-export CSVs/figures from report.json")
    p_exp.add_argument("report", help="report.json from a previous run")
    p_exp.add_argument("--out", required=True)
    p_exp.add_argument("--no-figures", action="store_true")
    p_exp.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
