"""Command-line front end: run, replay, gen, eval and bench.

Configuration precedence is flag > config file > built-in default.
The config file is a flat JSON object whose keys are the DetectorConfig
field names, plus "alert", "source" and "bad_line_budget". Exit codes:
0 clean, 1 runtime failure, 2 configuration or usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .bench import format_bench, run_bench
from .detector import DetectorConfig
from .errors import (
    ConfigError,
    DrowsyguardError,
    InvalidScenario,
    TargetOutOfRange,
)
from .mesh import serialize_frame
from .pipeline import (
    DEFAULT_BAD_LINE_BUDGET,
    AlertPolicy,
    SourceSpec,
    line_sink,
    run_pipeline,
)
from .synth_eval import (
    evaluate,
    format_report,
    gen_scenario,
    load_labels,
    load_scenario,
    save_labels,
)

_DETECTOR_KEYS = {f.name for f in dataclasses.fields(DetectorConfig)}
_EXTRA_KEYS = {"alert", "source", "bad_line_budget"}


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold one flat object")
    unknown = set(doc) - _DETECTOR_KEYS - _EXTRA_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return doc


def _detector_config(file_cfg: dict, args: argparse.Namespace) -> DetectorConfig:
    merged = {k: v for k, v in file_cfg.items() if k in _DETECTOR_KEYS}
    for flag, key in (
        ("ear_threshold", "ear_close_threshold"),
        ("ear_open_threshold", "ear_open_threshold"),
        ("consec_frames", "consec_frames"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            merged[key] = value
    try:
        return DetectorConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _resolve(args: argparse.Namespace, file_cfg: dict, key: str, default):
    value = getattr(args, key, None)
    if value is not None:
        return value
    return file_cfg.get(key, default)


def _print_config(config: DetectorConfig, alert: str, source: str,
                  pacing: str, budget: int) -> int:
    doc = {
        "detector": dataclasses.asdict(config),
        "alert": alert,
        "source": source,
        "pacing": pacing,
        "bad_line_budget": budget,
    }
    print(json.dumps(doc, indent=2))
    return 0


def _require_file(path: str, what: str) -> None:
    if not os.path.isfile(path):
        raise ConfigError(f"{what} not found: {path}")


def _run_common(args: argparse.Namespace, source_text: str, pacing: str) -> int:
    file_cfg = _load_config_file(args.config)
    config = _detector_config(file_cfg, args)
    alert_text = _resolve(args, file_cfg, "alert", "bell")
    budget = _resolve(args, file_cfg, "bad_line_budget", DEFAULT_BAD_LINE_BUDGET)
    if args.print_config:
        return _print_config(config, alert_text, source_text, pacing, budget)
    policy = AlertPolicy.parse(alert_text)
    source = SourceSpec.parse(source_text, pacing)
    if source.kind == "file":
        _require_file(source.target, "session file")
    summary = run_pipeline(
        source, config, policy, [line_sink(sys.stdout)], bad_line_budget=budget
    )
    print(json.dumps(summary.to_dict()), file=sys.stderr)
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    source_text = _resolve(args, file_cfg, "source", "stdin")
    return _run_common(args, source_text, "realtime")


def cmd_replay(args: argparse.Namespace) -> int:
    pacing = "fast" if args.fast else "realtime"
    return _run_common(args, f"file:{args.input}", pacing)


def cmd_gen(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    frames, labels = gen_scenario(scenario)
    labels_path = _labels_path(args.out)
    count = 0
    with open(args.out, "w", encoding="utf-8") as fh:
        for frame in frames:
            fh.write(serialize_frame(frame) + "\n")
            count += 1
    save_labels(labels, labels_path)
    print(f"wrote {count} frames to {args.out}, labels to {labels_path}",
          file=sys.stderr)
    return 0


def _labels_path(out: str) -> str:
    base = out[: -len(".jsonl")] if out.endswith(".jsonl") else out
    return base + ".labels.json"


def cmd_eval(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    config = _detector_config(file_cfg, args)
    if args.print_config:
        return _print_config(config, "none", f"file:{args.session}", "fast",
                             DEFAULT_BAD_LINE_BUDGET)
    _require_file(args.session, "session file")
    labels = load_labels(args.labels)
    events = []
    run_pipeline(
        SourceSpec("file", args.session, "fast"),
        config,
        AlertPolicy(action="none"),
        [events.append],
    )
    report = evaluate(events, labels)
    record = json.dumps(dataclasses.asdict(report))
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(record + "\n")
    else:
        print(record)
    print(format_report(report))
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    report = run_bench(args.frames, args.seed)
    print(json.dumps(report.to_dict()))
    print(format_bench(report), file=sys.stderr)
    return 0


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH",
                        help="JSON config file (flag > file > default)")
    parser.add_argument("--ear-threshold", type=float, dest="ear_threshold",
                        metavar="F", help="closing threshold")
    parser.add_argument("--ear-open-threshold", type=float,
                        dest="ear_open_threshold", metavar="F",
                        help="reopening threshold (hysteresis)")
    parser.add_argument("--consec-frames", type=int, dest="consec_frames",
                        metavar="N", help="closed frames before a drowsy alert")
    parser.add_argument("--print-config", action="store_true",
                        help="dump the effective configuration and exit")


def _add_stream_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alert", metavar="ACTION",
                        help="bell, none or exec:COMMAND (default bell)")
    parser.add_argument("--bad-line-budget", type=int, dest="bad_line_budget",
                        metavar="N",
                        help=f"malformed lines tolerated before aborting"
                             f" (default {DEFAULT_BAD_LINE_BUDGET})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drowsyguard",
        description="Eye-closure drowsiness detection over landmark streams.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="consume a live source, emit events on stdout")
    _add_config_flags(p)
    _add_stream_flags(p)
    p.add_argument("--source", metavar="SRC",
                   help="stdin, file:PATH or tcp:HOST:PORT (default stdin)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", help="replay a recorded session file")
    _add_config_flags(p)
    _add_stream_flags(p)
    p.add_argument("input", metavar="SESSION", help="session file to replay")
    p.add_argument("--fast", action="store_true", help="disable pacing sleeps")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("gen", help="render a scenario file into a session")
    p.add_argument("scenario", metavar="SCENARIO", help="scenario JSON file")
    p.add_argument("--out", required=True, metavar="PATH",
                   help="session output path; labels land beside it")
    p.add_argument("--seed", type=int, metavar="N",
                   help="override the scenario seed")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("eval", help="score a session against its labels")
    _add_config_flags(p)
    p.add_argument("session", metavar="SESSION", help="session file")
    p.add_argument("labels", metavar="LABELS", help="labels JSON file")
    p.add_argument("--report", metavar="PATH", help="write the report here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="measure parse->EAR->detector throughput")
    p.add_argument("--frames", type=int, default=25_000, metavar="N")
    p.add_argument("--seed", type=int, default=0, metavar="N")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InvalidScenario, TargetOutOfRange) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DrowsyguardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1


if __name__ == "__main__":
    sys.exit(main())
