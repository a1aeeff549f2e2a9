"""Execution logs: the transcript format shared by the orchestrator and curation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

SUCCESS = "success"
FAILURE = "failure"


@dataclass
class ExecutionLog:
    log_id: str
    task_description: str
    events: list[dict[str, Any]] = field(default_factory=list)
    outcome: str = FAILURE

    def __post_init__(self) -> None:
        if self.outcome not in (SUCCESS, FAILURE):
            raise ValueError(f"outcome must be success or failure, got {self.outcome!r}")
        if self.outcome == SUCCESS and self.final_answer is None:
            raise ValueError(f"log {self.log_id}: a successful log needs a final_answer event")

    @property
    def final_answer(self) -> str | None:
        for event in reversed(self.events):
            if event.get("type") == "final_answer":
                return event.get("text", "")
        return None

    def events_of(self, kind: str) -> list[dict[str, Any]]:
        return [e for e in self.events if e.get("type") == kind]

    def agent_names(self) -> set[str]:
        return {e["agent"] for e in self.events if e.get("type") == "directive" and e.get("agent")}

    def to_dict(self) -> dict[str, Any]:
        return {
            "log_id": self.log_id,
            "task_description": self.task_description,
            "outcome": self.outcome,
            "events": self.events,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=False)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExecutionLog":
        return cls(data["log_id"], data["task_description"], list(data.get("events", [])), data["outcome"])


def read_logs(path: str | Path) -> list[ExecutionLog]:
    with open(path, encoding="utf-8") as fh:
        return [ExecutionLog.from_dict(json.loads(line)) for line in fh if line.strip()]


def write_logs(logs: Iterable[ExecutionLog], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for log in logs:
            fh.write(log.to_json() + "\n")
