"""Offline memory construction: successful logs -> curator model -> validated units -> banks."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from legomem.agents import DEFAULT_REGISTRY
from legomem.bank import build_banks, save_banks
from legomem.embedding import EmbeddingProvider
from legomem.errors import CurationParseFailure, MalformedSchema, MissingTags, ProviderUnavailable
from legomem.gateway import ChatMessage, ModelClient
from legomem.logs import SUCCESS, ExecutionLog
from legomem.memory import END_TAG, START_TAG, MemoryUnit, check_action, parse_memory_unit, unit_from_dict, unit_to_dict
from legomem import prompts

logger = logging.getLogger(__name__)

MAX_SIMILAR = 10
KEEP_HEAD = 8
KEEP_TAIL = 2

# events the curator sees; model_call bodies would only duplicate the rest
_TRAJECTORY_EVENTS = ("task_start", "plan", "directive", "action", "summary", "stall", "final_answer")


@dataclass(frozen=True)
class Issue:
    severity: str
    message: str
    location: str = ""


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...] = ()

    @property
    def ok(self) -> bool:
        return not any(i.severity == "error" for i in self.issues)

    def errors(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "error"]


def filter_successful(logs: Iterable[ExecutionLog]) -> list[ExecutionLog]:
    return [log for log in logs if log.outcome == SUCCESS]


def _action_kind(event: dict) -> tuple | None:
    action = event.get("action")
    if not isinstance(action, dict):
        return None
    return (event.get("step"), action.get("app"), action.get("action"))


def truncate_similar(events: Sequence[dict]) -> list[dict]:
    """Collapse runs of more than 10 consecutive same-kind actions to the first 8,
    an elision marker, and the last 2."""
    out: list[dict] = []
    i = 0
    while i < len(events):
        kind = _action_kind(events[i]) if events[i].get("type") == "action" else None
        j = i + 1
        if kind is not None:
            while j < len(events) and events[j].get("type") == "action" and _action_kind(events[j]) == kind:
                j += 1
        run = events[i:j]
        if kind is not None and len(run) > MAX_SIMILAR:
            elided = len(run) - KEEP_HEAD - KEEP_TAIL
            out.extend(run[:KEEP_HEAD])
            out.append({"type": "elided", "count": elided, "app": kind[1], "action": kind[2]})
            out.extend(run[-KEEP_TAIL:])
        else:
            out.extend(run)
        i = j
    return out


def serialize_trajectory(log: ExecutionLog) -> str:
    """One compact JSON event per line, model calls dropped, long action runs elided."""
    header = json.dumps({"type": "task", "log_id": log.log_id, "task": log.task_description}, ensure_ascii=False)
    kept = [e for e in log.events if e.get("type") in _TRAJECTORY_EVENTS or e.get("type") == "elided"]
    lines = [header] + [json.dumps(e, ensure_ascii=False, sort_keys=True) for e in truncate_similar(kept)]
    return "\n".join(lines)


def curation_prompt(log: ExecutionLog) -> str:
    return prompts.fill(
        prompts.CURATION_PROMPT,
        full_trajectory=serialize_trajectory(log),
        start_tag=START_TAG,
        end_tag=END_TAG,
        example=prompts.CURATION_EXAMPLE,
    )


def distill(log: ExecutionLog, curator: ModelClient) -> MemoryUnit:
    if log.outcome != SUCCESS:
        raise ValueError(f"log {log.log_id} is not a successful trajectory")
    messages = [ChatMessage("user", curation_prompt(log))]
    replies = []
    for attempt in range(2):
        reply = curator.complete(messages)
        replies.append(reply)
        try:
            unit = parse_memory_unit(reply, source_log_id=log.log_id)
        except (MissingTags, MalformedSchema) as exc:
            if attempt == 0:
                retry = prompts.fill(prompts.CURATION_RETRY, error=str(exc), start_tag=START_TAG, end_tag=END_TAG)
                messages = messages + [ChatMessage("assistant", reply), ChatMessage("user", retry)]
                continue
            raise CurationParseFailure(f"log {log.log_id}: {exc}", raw_responses=replies) from exc
        # the task text always comes from the log; the id is recomputed to match
        data = unit_to_dict(unit, include_id=False)
        data["task_description"] = log.task_description
        return unit_from_dict(data, source_log_id=log.log_id)
    raise AssertionError("unreachable")


def validate(
    unit: MemoryUnit,
    agent_registry: Iterable[str] = DEFAULT_REGISTRY,
    log: ExecutionLog | None = None,
) -> ValidationReport:
    registry = set(agent_registry)
    issues: list[Issue] = []
    if not unit.subtasks:
        issues.append(Issue("error", "unit has no subtasks", "subtasks"))
    log_agents = log.agent_names() if log is not None else None
    for i, record in enumerate(unit.subtasks):
        where = f"subtasks[{i}]"
        if record.agent_name not in registry:
            issues.append(Issue("error", f"unknown agent {record.agent_name!r}", f"{where}.agent"))
        elif log_agents is not None and record.agent_name not in log_agents:
            issues.append(Issue("error", f"agent {record.agent_name!r} never acted in the log", f"{where}.agent"))
        if not record.steps and not record.observations.strip():
            issues.append(Issue("error", "subtask has neither steps nor observations", where))
        for j, pair in enumerate(record.steps):
            try:
                check_action(pair.action, j)
            except MalformedSchema as exc:
                issues.append(Issue("error", str(exc), f"{where}.steps[{j}]"))
        if len(record.steps) > MAX_SIMILAR:
            issues.append(Issue("warning", f"{len(record.steps)} steps exceed the cap of {MAX_SIMILAR}", f"{where}.steps"))
    if not unit.high_level_plan.strip():
        issues.append(Issue("warning", "empty high-level plan", "high_level_plan"))
    return ValidationReport(tuple(issues))


@dataclass
class CurationOutcome:
    log_id: str
    unit: MemoryUnit | None = None
    reason: str = ""
    raw: list[str] = field(default_factory=list)
    report: ValidationReport | None = None


def _distill_one(log: ExecutionLog, curator: ModelClient, registry: frozenset[str]) -> CurationOutcome:
    try:
        unit = distill(log, curator)
    except CurationParseFailure as exc:
        return CurationOutcome(log.log_id, reason=f"parse_failure: {exc}", raw=list(exc.raw_responses))
    except ProviderUnavailable as exc:
        return CurationOutcome(log.log_id, reason=f"provider_unavailable: {exc}")
    report = validate(unit, registry, log)
    if not report.ok:
        messages = "; ".join(f"{i.location}: {i.message}" for i in report.errors())
        return CurationOutcome(
            log.log_id, reason=f"invalid: {messages}", raw=[json.dumps(unit_to_dict(unit), ensure_ascii=False)], report=report
        )
    return CurationOutcome(log.log_id, unit=unit, report=report)


def curate_corpus(
    logs: Sequence[ExecutionLog],
    curator: ModelClient,
    provider: EmbeddingProvider,
    out_path: str | Path,
    registry: Iterable[str] = DEFAULT_REGISTRY,
    workers: int = 4,
) -> dict[str, Any]:
    """Filter, distill (concurrently), validate, build and save banks.

    Per-log failures are recorded in the manifest; only IO errors raise.
    """
    registry = frozenset(registry)
    successful = filter_successful(logs)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        outcomes = list(pool.map(lambda log: _distill_one(log, curator, registry), successful))
    outcomes.sort(key=lambda o: o.log_id)

    kept: list[MemoryUnit] = []
    seen: set[str] = set()
    dropped = []
    warnings = []
    for outcome in outcomes:
        if outcome.unit is None:
            dropped.append({"log_id": outcome.log_id, "reason": outcome.reason, "raw": outcome.raw})
        elif outcome.unit.id in seen:
            dropped.append({"log_id": outcome.log_id, "reason": f"duplicate of {outcome.unit.id}", "raw": []})
        else:
            seen.add(outcome.unit.id)
            kept.append(outcome.unit)
            warnings.extend(
                {"log_id": outcome.log_id, "location": i.location, "message": i.message}
                for i in outcome.report.issues
            )

    banks = build_banks(kept, provider)
    curation = {
        "prompt_version": prompts.prompt_version(),
        "logs_total": len(logs),
        "filtered_successful": len(successful),
        "kept": len(kept),
        "dropped": len(dropped),
        "kept_log_ids": [u.source_log_id for u in kept],
        "dropped_logs": dropped,
        "warnings": warnings,
    }
    manifest = save_banks(banks, out_path, {"curation": curation})
    logger.info("curated %d of %d successful logs into %s", len(kept), len(successful), out_path)
    return manifest
