"""Command-line interface: run, metrics, serve, plot."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .config import ConfigError, ScenarioConfig, apply_overrides, from_json, preset
from .engine import EngineDivergence, run_scenario
from .metrics import DEFAULT_BINS, compute_metrics

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="teleosim", description="Teleoperation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and export the trace")
    run.add_argument("--scenario", default="custom")
    run.add_argument("--controller", choices=["tic", "iac", "high-gain"])
    run.add_argument("--delay-ms", type=int)
    run.add_argument("--dt", type=float)
    run.add_argument("--duration", type=float)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="trace CSV path")
    run.add_argument("--config", help="JSON config file; flags override it")
    run.add_argument("--transport", choices=["memory", "udp"])
    run.add_argument("--estimator", choices=["direct", "observer"])

    metrics = sub.add_parser("metrics", help="report metrics from a trace CSV")
    metrics.add_argument("trace")
    metrics.add_argument("--bins", help="comma-separated stiffness bin edges")

    serve = sub.add_parser("serve", help="serve the interactive session")
    serve.add_argument("--scenario", default="custom")
    serve.add_argument("--port", type=int, default=8700)

    plot = sub.add_parser("plot", help="render static plots from a trace CSV")
    plot.add_argument("trace")
    plot.add_argument("--out", required=True, help="output directory")
    return parser


def _run_config(args) -> ScenarioConfig:
    if args.config:
        config = from_json(args.config)
        if args.scenario != "custom" and args.scenario != config.scenario:
            config = preset(args.scenario, config.controller)
    else:
        config = preset(args.scenario, args.controller or "iac")
    overrides = {}
    if args.controller is not None:
        overrides["controller"] = args.controller
        if args.scenario == "balloon" and not args.config:
            config = preset("balloon", args.controller)
    if args.delay_ms is not None:
        overrides["delta"] = args.delay_ms / 1000.0
    for key in ("dt", "duration", "seed", "out", "transport", "estimator"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    return apply_overrides(config, overrides)


def _cmd_run(args) -> int:
    from .traceio import export_trace

    config = _run_config(args)
    try:
        trace = run_scenario(config)
    except EngineDivergence as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    if config.out:
        export_trace(trace, config.out)
        print(f"wrote {len(trace)} rows to {config.out}")
    else:
        report = compute_metrics(trace)
        print(json.dumps(dataclasses.asdict(report), indent=2))
    return EXIT_OK


def _cmd_metrics(args) -> int:
    from .traceio import load_trace

    bins = DEFAULT_BINS
    if args.bins:
        bins = tuple(float(v) for v in args.bins.split(","))
        if len(bins) < 2 or list(bins) != sorted(bins):
            raise ConfigError("bins: need ascending edges")
    trace = load_trace(args.trace)
    report = compute_metrics(trace, bins=bins)
    print(json.dumps(dataclasses.asdict(report), indent=2))
    return EXIT_OK


def _cmd_serve(args) -> int:
    from .session import serve_session

    serve_session(preset(args.scenario), args.port)
    return EXIT_OK


def _cmd_plot(args) -> int:
    from .plotting import plot_trace
    from .traceio import load_trace

    for path in plot_trace(load_trace(args.trace), args.out):
        print(f"wrote {path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": _cmd_run, "metrics": _cmd_metrics, "serve": _cmd_serve, "plot": _cmd_plot}
    try:
        return handlers[args.command](args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
