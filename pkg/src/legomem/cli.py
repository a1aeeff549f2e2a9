"""Command line: ``legomem {curate,run,report,split,validate-bank}``.

Exit status 0 on success, 1 on run-time failure, 2 on usage errors
(bad flags, missing or invalid config files).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from legomem import harness
from legomem.bank import load_banks, read_manifest
from legomem.curation import curate_corpus, validate
from legomem.embedding import make_provider
from legomem.errors import ConfigError, LegoMemError
from legomem.gateway import make_client
from legomem.logs import read_logs
from legomem.office import load_suite

USAGE_ERROR = 2
RUNTIME_ERROR = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits by default; keep control of the status
        raise UsageError(f"{self.format_usage().strip()}\n{self.prog}: error: {message}")


def _read_toml(path: str) -> dict:
    if not Path(path).is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        return harness.tomllib.loads(Path(path).read_text(encoding="utf-8"))
    except harness.tomllib.TOMLDecodeError as exc:
        raise UsageError(f"config {path} is not valid TOML: {exc}") from exc


def cmd_curate(args) -> int:
    model_cfg = _read_toml(args.model)
    if model_cfg.get("kind") == "rule-based":
        from legomem.scripted import RuleBasedCurator

        curator = RuleBasedCurator()
    else:
        curator = make_client(model_cfg)
    provider = make_provider(model_cfg.get("embedding"))
    manifest = curate_corpus(read_logs(args.logs), curator, provider, args.out, workers=args.workers)
    cur = manifest["curation"]
    print(f"kept {cur['kept']} / dropped {cur['dropped']} of {cur['filtered_successful']} successful logs")
    print(f"bank {args.out}: {manifest['counts']['full_task']} full-task, {manifest['counts']['subtask']} subtask memories")
    return 0


def cmd_run(args) -> int:
    if not Path(args.config).is_file():
        raise UsageError(f"config file not found: {args.config}")
    try:
        config = harness.load_config(args.config)
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc
    if args.out:
        config.output_dir = args.out
    report = harness.run_suite(config)
    print(harness.render_table([report]), end="")
    print(f"run written to {config.output_dir}")
    return 0


def cmd_report(args) -> int:
    reports = harness.load_run_reports(args.dir)
    if not reports:
        print(f"no runs (tasks.jsonl) found under {args.dir}", file=sys.stderr)
        return RUNTIME_ERROR
    print(harness.render_table(reports), end="")
    csv_text = harness.render_csv(reports)
    if args.csv:
        Path(args.csv).write_text(csv_text, encoding="utf-8")
    else:
        print()
        print(csv_text, end="")
    return 0


def cmd_split(args) -> int:
    train, test = harness.split_suite(load_suite(args.suite), args.seed)
    out = {"seed": args.seed, "train": [f.task_id for f in train], "test": [f.task_id for f in test]}
    print(json.dumps(out, indent=2))
    return 0


def cmd_validate_bank(args) -> int:
    path = harness.builtin_bank_path() if args.bank == "builtin" else Path(args.bank)
    manifest = read_manifest(path)
    banks = load_banks(path)
    counts = banks.counts()
    bad = 0
    for entry in banks.global_bank.entries:
        report = validate(banks.global_bank.payloads[entry.memory_id])
        for issue in report.issues:
            print(f"{entry.memory_id} {issue.severity} {issue.location}: {issue.message}")
        bad += not report.ok
    print(f"full_task {counts['full_task']}  subtask {counts['subtask']}")
    for agent, n in counts["agents"].items():
        print(f"  {agent} {n}")
    if counts != manifest["counts"]:
        print("counts differ from the manifest", file=sys.stderr)
        return RUNTIME_ERROR
    if bad:
        print(f"{bad} invalid unit(s)", file=sys.stderr)
        return RUNTIME_ERROR
    print(f"ok  content_hash {manifest['content_hash']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="legomem", description="Procedural memory for orchestrator/agent teams.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("curate", help="distill successful logs into memory banks")
    p.add_argument("--logs", required=True, help="JSON Lines execution logs")
    p.add_argument("--out", required=True, help="bank directory to write")
    p.add_argument("--model", required=True, help="TOML curator model config")
    p.add_argument("--workers", type=int, default=4)
    p.set_defaults(func=cmd_curate)

    p = sub.add_parser("run", help="run a suite from a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="override output_dir")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="render the results grid for run directories")
    p.add_argument("dir")
    p.add_argument("--csv", help="write the CSV here instead of stdout")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("split", help="print the train/test split")
    p.add_argument("--suite", default="builtin")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("validate-bank", help="check a bank against its manifest")
    p.add_argument("bank", nargs="?", default="builtin")
    p.set_defaults(func=cmd_validate_bank)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
        return args.func(args)
    except UsageError as exc:
        message = str(exc)
        if not message.startswith("usage:"):
            message = f"{parser.format_usage().strip()}\nlegomem: error: {message}"
        print(message, file=sys.stderr)
        return USAGE_ERROR
    except (LegoMemError, OSError, ValueError) as exc:
        print(f"legomem: error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
