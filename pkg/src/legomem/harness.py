"""Experiment driver: run configs, suite splitting, batch runs, metrics and reports."""

from __future__ import annotations

import csv
import io
import json
import logging
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from legomem.bank import Banks, load_banks
from legomem.embedding import EmbeddingProvider, make_provider
from legomem.errors import ConfigError, MissingResult, TooFewFixtures
from legomem.gateway import make_client
from legomem.logs import write_logs
from legomem.office import TaskFixture, load_suite
from legomem.orchestrator import RunSettings, TaskResult, Team, run_task
from legomem.retrieval import DEFAULT_K_AGENT, DEFAULT_K_ORCH, PLACEMENTS, VARIANTS
from legomem.scripted import golden_team, null_team

logger = logging.getLogger(__name__)

LEVELS = (1, 2, 3)
CSV_HEADER = ("variant", "placement", "level", "success_rate", "avg_steps", "step_failure_rate")
SPLITS = ("all", "train", "test")


def builtin_bank_path() -> Path:
    return Path(str(resources.files("legomem") / "data" / "fixture_bank"))


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    suite: str = "builtin"
    split_seed: int = 0
    split: str = "test"
    variant: str = "vanilla"
    placement: str = "orch_and_agent"
    include_reasoning: bool = True
    k_orch: int = DEFAULT_K_ORCH
    k_agent: int = DEFAULT_K_AGENT
    team: dict[str, Any] = field(default_factory=lambda: {"kind": "scripted", "script": "golden"})
    embedding: dict[str, Any] = field(default_factory=lambda: {"provider": "hash", "dim": 256})
    bank: str = "builtin"
    budget: int = 30
    stall_window: int = 6
    stall_repeats: int = 3
    max_replans: int = 2
    replanning: bool = True
    repetitions: int = 1
    workers: int = 4
    output_dir: str = "runs/latest"
    task_ids: list[str] | None = None

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; choose from {', '.join(VARIANTS)}")
        if self.placement not in PLACEMENTS:
            raise ConfigError(f"unknown placement {self.placement!r}; choose from {', '.join(PLACEMENTS)}")
        if self.split not in SPLITS:
            raise ConfigError(f"split must be one of {SPLITS}")
        if self.workers < 1 or self.budget < 1 or self.k_orch < 1 or self.k_agent < 1:
            raise ConfigError("workers, budget, k_orch and k_agent must be >= 1")

    def settings(self) -> RunSettings:
        return RunSettings(
            variant=self.variant,
            placement=self.placement,
            k_orch=self.k_orch,
            k_agent=self.k_agent,
            include_reasoning=self.include_reasoning,
            budget=self.budget,
            stall_window=self.stall_window,
            stall_repeats=self.stall_repeats,
            max_replans=self.max_replans,
            replanning=self.replanning,
        )

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], base_dir: Path | None = None) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg = dict(data)
        # relative paths in a config file resolve against the file's directory
        if base_dir is not None:
            for key in ("suite", "bank", "output_dir"):
                value = cfg.get(key)
                if isinstance(value, str) and value not in ("builtin", "none") and not Path(value).is_absolute():
                    cfg[key] = str(base_dir / value)
        try:
            return cls(**cfg)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}") from exc
    return RunConfig.from_dict(data, path.parent)


def make_team(config: Mapping[str, Any], fixtures: Sequence[TaskFixture]) -> Team:
    kind = config.get("kind", "scripted")
    if kind == "scripted":
        script = config.get("script", "golden")
        if script == "golden":
            return golden_team(fixtures)
        if script == "null":
            return null_team(fixtures)
        raise ConfigError(f"unknown scripted team {script!r}")
    if kind == "models":
        try:
            orch = make_client(config["orchestrator"])
            agents = make_client(config.get("agents", config["orchestrator"]))
            rewriter = make_client(config["rewriter"]) if "rewriter" in config else orch
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad team config: {exc}") from exc
        return Team(orch, agents, rewriter)
    raise ConfigError(f"unknown team kind {kind!r}")


# ---------------------------------------------------------------------------
# split
# ---------------------------------------------------------------------------

def split_suite(fixtures: Sequence[TaskFixture], seed: int = 0) -> tuple[list[TaskFixture], list[TaskFixture]]:
    """Seeded per-level shuffle; each level splits in half with train taking the ceiling."""
    if len(fixtures) < 2:
        raise TooFewFixtures(f"need at least 2 fixtures to split, got {len(fixtures)}")
    rng = random.Random(seed)
    train, test = [], []
    for level in sorted({f.level for f in fixtures}):
        group = sorted((f for f in fixtures if f.level == level), key=lambda f: f.task_id)
        rng.shuffle(group)
        cut = (len(group) + 1) // 2
        train += group[:cut]
        test += group[cut:]
    return sorted(train, key=lambda f: f.task_id), sorted(test, key=lambda f: f.task_id)


def select_fixtures(config: RunConfig) -> list[TaskFixture]:
    fixtures = load_suite(config.suite)
    if config.split != "all":
        train, test = split_suite(fixtures, config.split_seed)
        fixtures = train if config.split == "train" else test
    if config.task_ids:
        by_id = {f.task_id: f for f in fixtures}
        missing = [t for t in config.task_ids if t not in by_id]
        if missing:
            raise ConfigError(f"config references unknown fixtures: {', '.join(missing)}")
        fixtures = [by_id[t] for t in config.task_ids]
    return fixtures


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LevelMetrics:
    tasks: int
    successes: int
    success_rate: float
    avg_steps: float
    step_failure_rate: float
    failed_actions: int
    total_actions: int
    replans: int


@dataclass
class MetricsReport:
    variant: str
    placement: str
    levels: dict[str, LevelMetrics]
    rows: list[dict[str, Any]]
    repetition_success_rates: list[float] = field(default_factory=list)

    @property
    def overall(self) -> LevelMetrics:
        return self.levels["overall"]

    @property
    def success_rate(self) -> float:
        return self.overall.success_rate

    def csv_rows(self) -> list[tuple]:
        return [
            (self.variant, self.placement, level, f"{m.success_rate:.4f}", f"{m.avg_steps:.4f}", f"{m.step_failure_rate:.4f}")
            for level, m in self.levels.items()
        ]


def _level_metrics(rows: Sequence[Mapping[str, Any]]) -> LevelMetrics:
    n = len(rows)
    wins = sum(bool(r["success"]) for r in rows)
    failed = sum(int(r["failed_action_count"]) for r in rows)
    total = sum(int(r["total_action_count"]) for r in rows)
    return LevelMetrics(
        tasks=n,
        successes=wins,
        success_rate=wins / n * 100 if n else 0.0,
        avg_steps=sum(int(r["steps_executed"]) for r in rows) / n if n else 0.0,
        step_failure_rate=failed / total if total else 0.0,
        failed_actions=failed,
        total_actions=total,
        replans=sum(int(r.get("replan_count", 0)) for r in rows),
    )


def metrics_from_rows(rows: Sequence[Mapping[str, Any]], variant: str = "", placement: str = "") -> MetricsReport:
    """Pooled over every (task, repetition) row; levels without tasks are omitted."""
    levels: dict[str, LevelMetrics] = {}
    for level in LEVELS:
        subset = [r for r in rows if int(r["level"]) == level]
        if subset:
            levels[str(level)] = _level_metrics(subset)
    levels["overall"] = _level_metrics(rows)
    reps = sorted({int(r.get("repetition", 0)) for r in rows})
    per_rep = [_level_metrics([r for r in rows if int(r.get("repetition", 0)) == k]).success_rate for k in reps]
    return MetricsReport(variant, placement, levels, [dict(r) for r in rows], per_rep)


def result_row(result: TaskResult, fixture: TaskFixture, repetition: int = 0) -> dict[str, Any]:
    return {"level": fixture.level, "repetition": repetition, **result.row()}


def compute_metrics(
    results: Sequence[TaskResult],
    fixtures: Sequence[TaskFixture],
    variant: str = "",
    placement: str = "",
    repetitions: Sequence[int] | None = None,
) -> MetricsReport:
    by_id = {f.task_id: f for f in fixtures}
    got = {r.task_id for r in results}
    missing = sorted(set(by_id) - got)
    if missing:
        raise MissingResult(f"no result for fixtures: {', '.join(missing)}")
    unknown = sorted(got - set(by_id))
    if unknown:
        raise MissingResult(f"results for unknown fixtures: {', '.join(unknown)}")
    reps = repetitions or [0] * len(results)
    rows = [result_row(r, by_id[r.task_id], k) for r, k in zip(results, reps)]
    return metrics_from_rows(rows, variant, placement)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def render_csv(reports: Iterable[MetricsReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for report in reports:
        writer.writerows(report.csv_rows())
    return buf.getvalue()


def render_table(reports: Sequence[MetricsReport]) -> str:
    """Aligned grid: one row per variant/placement, success rate per level and overall."""
    columns = ["L1", "L2", "L3", "Overall"]
    keys = ["1", "2", "3", "overall"]
    header = ["variant", "placement"] + columns + ["avg steps", "step fail"]
    body = []
    for r in reports:
        cells = [f"{r.levels[k].success_rate:.2f}" if k in r.levels else "-" for k in keys]
        body.append([r.variant, r.placement] + cells + [f"{r.overall.avg_steps:.2f}", f"{r.overall.step_failure_rate:.3f}"])
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
    fmt = lambda row: "  ".join(c.ljust(w) if i < 2 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths)))
    lines = [fmt(header), "  ".join("-" * w for w in widths)] + [fmt(row) for row in body]
    return "\n".join(lines) + "\n"


def read_rows(path: str | Path) -> list[dict[str, Any]]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def load_run_reports(directory: str | Path) -> list[MetricsReport]:
    """Recompute reports from every run (``tasks.jsonl`` + ``config.json``) under a directory."""
    root = Path(directory)
    runs = sorted(p.parent for p in root.rglob("tasks.jsonl"))
    reports = []
    for run in runs:
        config = json.loads((run / "config.json").read_text(encoding="utf-8"))
        reports.append(metrics_from_rows(read_rows(run / "tasks.jsonl"), config["variant"], config["placement"]))
    return reports


# ---------------------------------------------------------------------------
# suite runs
# ---------------------------------------------------------------------------

def resolve_banks(config: RunConfig, provider: EmbeddingProvider) -> Banks | None:
    if config.bank == "none":
        return None
    path = builtin_bank_path() if config.bank == "builtin" else Path(config.bank)
    banks = load_banks(path, expected_dim=provider.dim)
    if banks.provider_name != provider.name:
        raise ConfigError(f"bank was embedded with {banks.provider_name}, config uses {provider.name}")
    return banks


def run_suite(
    config: RunConfig,
    banks: Banks | None = None,
    team: Team | None = None,
    fixtures: Sequence[TaskFixture] | None = None,
    provider: EmbeddingProvider | None = None,
    write: bool = True,
) -> MetricsReport:
    """Run every fixture for every repetition and aggregate.

    With ``banks=None`` the config's bank is loaded (``bank = "none"`` runs
    without memory). Task failures are data; only config/IO problems raise.
    """
    provider = provider or make_provider(config.embedding)
    fixtures = list(fixtures) if fixtures is not None else select_fixtures(config)
    if banks is None:
        banks = resolve_banks(config, provider)
    team = team or make_team(config.team, fixtures)
    settings = config.settings()
    jobs = [(rep, f) for rep in range(config.repetitions) for f in fixtures]

    def work(job):
        rep, fixture = job
        return run_task(fixture, banks, settings, team, provider, log_id=f"{fixture.task_id}#r{rep}")

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        results = list(pool.map(work, jobs))
    order = sorted(range(len(jobs)), key=lambda i: (jobs[i][0], jobs[i][1].task_id))
    results = [results[i] for i in order]
    reps = [jobs[i][0] for i in order]
    report = compute_metrics(results, fixtures, config.variant, config.placement, reps) if results else metrics_from_rows([], config.variant, config.placement)
    if write:
        write_run(config, report, results, banks)
    return report


def write_run(config: RunConfig, report: MetricsReport, results: Sequence[TaskResult], banks: Banks | None) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    bank_info = {"bank": config.bank, "content_hash": banks.content_hash() if banks else None}
    (out / "bank.json").write_text(json.dumps(bank_info, indent=2) + "\n", encoding="utf-8")
    write_logs([r.transcript for r in results], out / "transcripts.jsonl")
    with open(out / "tasks.jsonl", "w", encoding="utf-8") as fh:
        for row in report.rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    (out / "report.csv").write_text(render_csv([report]), encoding="utf-8")
    (out / "report.txt").write_text(render_table([report]), encoding="utf-8")
    return out


def golden_logs(fixtures: Sequence[TaskFixture]) -> list:
    """Memory-free golden transcripts, the raw material for the fixture bank."""
    team = golden_team(fixtures)
    settings = RunSettings(placement="none")
    return [run_task(f, None, settings, team).transcript for f in fixtures]


def build_fixture_bank(out_path: str | Path, seed: int = 0, provider: EmbeddingProvider | None = None) -> dict:
    """Curate the training split's golden transcripts with the rule-based curator."""
    from legomem.curation import curate_corpus
    from legomem.scripted import RuleBasedCurator

    train, _ = split_suite(load_suite("builtin"), seed)
    provider = provider or make_provider(None)
    return curate_corpus(golden_logs(train), RuleBasedCurator(), provider, out_path, workers=1)
