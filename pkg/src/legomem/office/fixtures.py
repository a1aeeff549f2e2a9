"""Task fixtures and programmatic success checkers."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Sequence

from legomem.office.env import Workspace, normalize_seed, state_hash

CHECKER_KINDS = ("exact_state", "keyword_fuzzy", "answer_match")
_MISSING = object()


@dataclass(frozen=True)
class Checker:
    kind: str
    expectations: tuple[Mapping[str, Any], ...]

    def __post_init__(self) -> None:
        if self.kind not in CHECKER_KINDS:
            raise ValueError(f"unknown checker kind {self.kind!r}")
        if not self.expectations:
            raise ValueError("checker needs at least one expectation")
        object.__setattr__(self, "expectations", tuple(self.expectations))


@dataclass(frozen=True)
class ReferenceStep:
    agent: str
    subtask: str
    actions: tuple[Mapping[str, Any], ...]  # each {"think": str, "action": {...}}
    summary: str


@dataclass(frozen=True)
class ReferenceSolution:
    plan: tuple[str, ...]
    steps: tuple[ReferenceStep, ...]
    final_answer: str

    def actions(self) -> list[Mapping[str, Any]]:
        return [a["action"] for step in self.steps for a in step.actions]


@dataclass(frozen=True)
class TaskFixture:
    task_id: str
    level: int
    description: str
    initial_workspace: Mapping[str, Any]
    checker: Checker
    reference: ReferenceSolution | None = None
    seed_hash: str = ""
    extras: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.level not in (1, 2, 3):
            raise ValueError(f"level must be 1, 2 or 3, got {self.level}")

    def apps_touched(self) -> set[str]:
        if self.reference is None:
            return set()
        return {a["app"] for a in self.reference.actions()}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TaskFixture":
        ref = data.get("reference_solution")
        reference = None
        if ref is not None:
            reference = ReferenceSolution(
                plan=tuple(ref["plan"]),
                steps=tuple(
                    ReferenceStep(s["agent"], s["subtask"], tuple(s["actions"]), s["summary"])
                    for s in ref["steps"]
                ),
                final_answer=ref["final_answer"],
            )
        checker = data["checker"]
        return cls(
            task_id=data["task_id"],
            level=int(data["level"]),
            description=data["description"],
            initial_workspace=data["initial_workspace"],
            checker=Checker(checker["kind"], tuple(checker["expectations"])),
            reference=reference,
            seed_hash=data.get("seed_hash", ""),
        )

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "task_id": self.task_id,
            "level": self.level,
            "description": self.description,
            "initial_workspace": self.initial_workspace,
            "seed_hash": self.seed_hash or state_hash(normalize_seed(self.initial_workspace)),
            "checker": {"kind": self.checker.kind, "expectations": list(self.checker.expectations)},
        }
        if self.reference is not None:
            data["reference_solution"] = {
                "plan": list(self.reference.plan),
                "steps": [
                    {"agent": s.agent, "subtask": s.subtask, "actions": list(s.actions), "summary": s.summary}
                    for s in self.reference.steps
                ],
                "final_answer": self.reference.final_answer,
            }
        return data


def load_fixture(path: str | Path) -> TaskFixture:
    return TaskFixture.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def load_suite(path: str | Path | None = None) -> list[TaskFixture]:
    """Load every ``*.json`` fixture in a directory; default is the bundled mini-suite."""
    if path is None or str(path) == "builtin":
        root = resources.files("legomem") / "data" / "suite"
        files = sorted((p for p in root.iterdir() if p.name.endswith(".json")), key=lambda p: p.name)
        fixtures = [TaskFixture.from_dict(json.loads(p.read_text(encoding="utf-8"))) for p in files]
    else:
        fixtures = [load_fixture(p) for p in sorted(Path(path).glob("*.json"))]
    return sorted(fixtures, key=lambda f: f.task_id)


# ---------------------------------------------------------------------------
# checking
# ---------------------------------------------------------------------------

def normalize_text(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip().casefold()


def fuzzy_contains(text: str, keywords: Sequence[str]) -> bool:
    haystack = normalize_text(text)
    return all(normalize_text(k) in haystack for k in keywords)


def select(state: Mapping[str, Any], path: str) -> Any:
    node: Any = state
    for part in path.split("/"):
        if isinstance(node, Mapping) and part in node:
            node = node[part]
        else:
            return _MISSING
    return node


def _matches(item: Any, pattern: Mapping[str, Any]) -> bool:
    return isinstance(item, Mapping) and all(item.get(k, _MISSING) == v for k, v in pattern.items())


def _as_text(value: Any) -> str:
    return value if isinstance(value, str) else json.dumps(value, sort_keys=True, ensure_ascii=False)


def check_expectation(exp: Mapping[str, Any], state: Mapping[str, Any], final_answer: str) -> bool:
    if "field" not in exp:
        return fuzzy_contains(final_answer or "", exp["keywords"])
    value = select(state, exp["field"])
    if exp.get("absent"):
        return value is _MISSING
    if value is _MISSING:
        return False
    if "equals" in exp:
        return value == exp["equals"]
    if "contains" in exp:
        return isinstance(value, list) and any(_matches(v, exp["contains"]) for v in value)
    if "not_contains" in exp:
        return isinstance(value, list) and not any(_matches(v, exp["not_contains"]) for v in value)
    if "keywords" in exp:
        return fuzzy_contains(_as_text(value), exp["keywords"])
    raise ValueError(f"unsupported expectation {dict(exp)!r}")


def check_success(handle: Workspace | Mapping[str, Any], final_answer: str, checker: Checker) -> bool:
    state = handle.snapshot() if isinstance(handle, Workspace) else handle
    return all(check_expectation(e, state, final_answer) for e in checker.expectations)
