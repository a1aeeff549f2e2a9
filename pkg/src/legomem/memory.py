"""Procedural memory units: schema, curator-output parsing, serialization, rendering.

A :class:`MemoryUnit` is the full-task memory distilled from one successful
trajectory: the high-level plan, the per-agent subtask traces, the final answer
and a short reflection. Each :class:`SubtaskRecord` can be projected into a
standalone :class:`SubtaskMemory` that is indexed and retrieved on its own.

On disk a unit is one JSON object per line using the curator's field names
(``agent``, ``description``, ``steps`` as a think/action tagged string,
``observations``) plus ``id``, ``source_log_id`` and ``task_description``.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Sequence

from legomem.errors import EmptyInput, MalformedAction, MalformedSchema, MissingTags

START_TAG = "<memory_start>"
END_TAG = "<memory_end>"

MEMORY_BLOCK_OPEN = "<memories>"
MEMORY_BLOCK_CLOSE = "</memories>"

_REQUIRED_UNIT_KEYS = ("high_level_plan", "subtasks", "final_answer", "reflections")
_REQUIRED_SUBTASK_KEYS = ("agent", "description", "steps", "observations")
_UNIT_KEYS = frozenset(_REQUIRED_UNIT_KEYS) | {"id", "source_log_id", "task_description"}

_STEP_TAG = re.compile(r"<(/?)(think|action)>")
_THINK_SEGMENT = re.compile(r"<think>.*?</think>", re.DOTALL)


@dataclass(frozen=True)
class ThinkActionPair:
    think: str
    action: Mapping[str, Any]

    def __post_init__(self) -> None:
        check_action(self.action)


@dataclass(frozen=True)
class SubtaskRecord:
    agent_name: str
    description: str
    steps: tuple[ThinkActionPair, ...] = ()
    observations: str = ""
    extras: Mapping[str, Any] = field(default_factory=dict, compare=True)

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.steps and not self.observations.strip():
            raise MalformedSchema(
                f"subtask {self.description!r} has neither steps nor observations"
            )


@dataclass(frozen=True)
class MemoryUnit:
    id: str
    task_description: str
    high_level_plan: str
    subtasks: tuple[SubtaskRecord, ...]
    final_answer: str
    reflections: str
    source_log_id: str = ""
    extras: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "subtasks", tuple(self.subtasks))
        if not self.subtasks:
            raise MalformedSchema("memory unit has no subtasks")

    @property
    def agent_names(self) -> list[str]:
        return sorted({s.agent_name for s in self.subtasks})

    def to_dict(self) -> dict[str, Any]:
        return unit_to_dict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    def with_content_id(self) -> "MemoryUnit":
        return replace(self, id=content_id(self))


@dataclass(frozen=True)
class SubtaskMemory:
    id: str
    parent_unit_id: str
    agent_name: str
    description: str
    steps: tuple[ThinkActionPair, ...]
    observations: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "parent_unit_id": self.parent_unit_id,
            "agent": self.agent_name,
            "description": self.description,
            "steps": steps_to_text(self.steps),
            "observations": self.observations,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SubtaskMemory":
        return cls(
            id=data["id"],
            parent_unit_id=data["parent_unit_id"],
            agent_name=data["agent"],
            description=data["description"],
            steps=parse_steps(data["steps"]),
            observations=data["observations"],
        )


def check_action(action: Any, index: int | None = None) -> None:
    if not isinstance(action, Mapping):
        raise MalformedAction(f"action {index} is not a structured object", index)
    for key in ("app", "action"):
        value = action.get(key)
        if not isinstance(value, str) or not value.strip():
            raise MalformedAction(f"action {index} lacks a non-empty {key!r}", index)


# ---------------------------------------------------------------------------
# steps string <-> ThinkActionPair
# ---------------------------------------------------------------------------

def action_to_text(action: Mapping[str, Any]) -> str:
    # "<" is escaped so a string value can never open or close a step tag
    return json.dumps(dict(action), ensure_ascii=False).replace("<", "\\u003c")


def steps_to_text(steps: Iterable[ThinkActionPair]) -> str:
    return "".join(
        f"<think>{s.think}</think><action>{action_to_text(s.action)}</action>"
        for s in steps
    )


def parse_steps(text: str) -> tuple[ThinkActionPair, ...]:
    """Split a ``<think>..</think><action>..</action>`` string into pairs.

    Tags must alternate strictly think/action; anything other than whitespace
    between pairs is rejected.
    """
    expected = [("", "think"), ("/", "think"), ("", "action"), ("/", "action")]
    pairs: list[ThinkActionPair] = []
    pos = 0
    state = 0
    think = ""
    body_start = 0
    for match in _STEP_TAG.finditer(text):
        tag = (match.group(1), match.group(2))
        if tag != expected[state]:
            raise MalformedSchema(
                f"steps: unexpected <{''.join(tag)}> at offset {match.start()}"
            )
        if state == 0 and text[pos:match.start()].strip():
            raise MalformedSchema(f"steps: stray text at offset {pos}")
        if state == 1:
            think = text[body_start:match.start()]
        elif state == 3:
            index = len(pairs)
            body = text[body_start:match.start()]
            try:
                action = json.loads(body)
            except json.JSONDecodeError as exc:
                raise MalformedAction(f"action {index} is not valid JSON: {exc}", index) from exc
            check_action(action, index)
            pairs.append(ThinkActionPair(think=think, action=action))
        body_start = match.end()
        pos = match.end()
        state = (state + 1) % 4
    if state != 0:
        raise MalformedSchema("steps: unterminated think/action pair")
    if text[pos:].strip():
        raise MalformedSchema(f"steps: stray text at offset {pos}")
    return tuple(pairs)


# ---------------------------------------------------------------------------
# unit (de)serialization
# ---------------------------------------------------------------------------

def unit_to_dict(unit: MemoryUnit, include_id: bool = True) -> dict[str, Any]:
    data: dict[str, Any] = {}
    if include_id:
        data["id"] = unit.id
    data["source_log_id"] = unit.source_log_id
    data["task_description"] = unit.task_description
    data["high_level_plan"] = unit.high_level_plan
    data["subtasks"] = [
        {
            "agent": s.agent_name,
            "description": s.description,
            "steps": steps_to_text(s.steps),
            "observations": s.observations,
            **s.extras,
        }
        for s in unit.subtasks
    ]
    data["final_answer"] = unit.final_answer
    data["reflections"] = unit.reflections
    data.update(unit.extras)
    return data


def content_id(unit: MemoryUnit) -> str:
    payload = json.dumps(unit_to_dict(unit, include_id=False), sort_keys=True, ensure_ascii=False)
    return "mem-" + hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def unit_from_dict(
    data: Mapping[str, Any],
    *,
    task_description: str | None = None,
    source_log_id: str | None = None,
) -> MemoryUnit:
    if not isinstance(data, Mapping):
        raise MalformedSchema("memory object is not a JSON object")
    for key in _REQUIRED_UNIT_KEYS:
        if key not in data:
            raise MalformedSchema(f"missing required key {key!r}")
    raw_subtasks = data["subtasks"]
    if not isinstance(raw_subtasks, list):
        raise MalformedSchema("'subtasks' must be a list")
    subtasks = []
    action_offset = 0
    for i, raw in enumerate(raw_subtasks):
        if not isinstance(raw, Mapping):
            raise MalformedSchema(f"subtask {i} is not an object")
        for key in _REQUIRED_SUBTASK_KEYS:
            if key not in raw:
                raise MalformedSchema(f"subtask {i} missing key {key!r}")
            if not isinstance(raw[key], str):
                raise MalformedSchema(f"subtask {i} key {key!r} must be a string")
        try:
            steps = parse_steps(raw["steps"])
        except MalformedAction as exc:
            # report the global action index across the whole unit
            index = None if exc.index is None else action_offset + exc.index
            raise MalformedAction(f"subtask {i}: {exc}", index) from exc
        action_offset += len(steps)
        extras = {k: v for k, v in raw.items() if k not in _REQUIRED_SUBTASK_KEYS}
        subtasks.append(
            SubtaskRecord(
                agent_name=raw["agent"],
                description=raw["description"],
                steps=steps,
                observations=raw["observations"],
                extras=extras,
            )
        )
    for key in ("high_level_plan", "final_answer", "reflections"):
        if not isinstance(data[key], str):
            raise MalformedSchema(f"key {key!r} must be a string")
    unit = MemoryUnit(
        id=str(data.get("id", "")),
        task_description=str(data.get("task_description", task_description or "")),
        high_level_plan=data["high_level_plan"],
        subtasks=tuple(subtasks),
        final_answer=data["final_answer"],
        reflections=data["reflections"],
        source_log_id=str(data.get("source_log_id", source_log_id or "")),
        extras={k: v for k, v in data.items() if k not in _UNIT_KEYS},
    )
    if source_log_id is not None:
        unit = replace(unit, source_log_id=source_log_id)
    if not unit.id:
        unit = unit.with_content_id()
    return unit


def serialize_unit(unit: MemoryUnit, start_tag: str = START_TAG, end_tag: str = END_TAG) -> str:
    return f"{start_tag}\n{json.dumps(unit.to_dict(), ensure_ascii=False, indent=2)}\n{end_tag}"


def parse_memory_unit(
    text: str,
    *,
    start_tag: str = START_TAG,
    end_tag: str = END_TAG,
    task_description: str | None = None,
    source_log_id: str | None = None,
) -> MemoryUnit:
    """Parse curator output holding one tag-delimited JSON memory object."""
    starts = text.count(start_tag)
    ends = text.count(end_tag)
    if starts == 0 or ends == 0:
        raise MissingTags(f"expected {start_tag} ... {end_tag} in curator output")
    if starts > 1 or ends > 1:
        raise MissingTags("curator output holds more than one delimited region")
    begin = text.index(start_tag) + len(start_tag)
    end = text.index(end_tag)
    if end < begin:
        raise MissingTags(f"{end_tag} precedes {start_tag}")
    body = text[begin:end].strip()
    try:
        data = json.loads(body)
    except json.JSONDecodeError as exc:
        raise MalformedSchema(f"memory body is not valid JSON: {exc}") from exc
    return unit_from_dict(data, task_description=task_description, source_log_id=source_log_id)


def read_units_jsonl(path) -> list[MemoryUnit]:
    with open(path, encoding="utf-8") as fh:
        return [unit_from_dict(json.loads(line)) for line in fh if line.strip()]


def write_units_jsonl(units: Iterable[MemoryUnit], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for unit in units:
            fh.write(unit.to_json() + "\n")


# ---------------------------------------------------------------------------
# subtask extraction and reasoning strip
# ---------------------------------------------------------------------------

def extract_subtask_memories(unit: MemoryUnit) -> list[SubtaskMemory]:
    return [
        SubtaskMemory(
            id=f"{unit.id}.s{i}",
            parent_unit_id=unit.id,
            agent_name=record.agent_name,
            description=record.description,
            steps=record.steps,
            observations=record.observations,
        )
        for i, record in enumerate(unit.subtasks)
    ]


def strip_reasoning_text(text: str) -> str:
    return _THINK_SEGMENT.sub("", text)


def strip_reasoning(memory):
    """Return a copy of a unit or subtask memory with every think emptied."""
    if isinstance(memory, MemoryUnit):
        return replace(
            memory,
            subtasks=tuple(
                replace(s, steps=tuple(replace(p, think="") for p in s.steps))
                for s in memory.subtasks
            ),
        )
    return replace(memory, steps=tuple(replace(p, think="") for p in memory.steps))


# ---------------------------------------------------------------------------
# prompt rendering
# ---------------------------------------------------------------------------

def _render_steps(steps: Sequence[ThinkActionPair], include_reasoning: bool, indent: str) -> list[str]:
    lines = []
    for pair in steps:
        if include_reasoning and pair.think:
            lines.append(f"{indent}<think>{pair.think}</think>")
        lines.append(f"{indent}<action>{action_to_text(pair.action)}</action>")
    return lines


def _render_unit(i: int, unit: MemoryUnit, include_reasoning: bool) -> list[str]:
    lines = [
        f"### Memory {i} ({unit.id})",
        f"Past task: {unit.task_description}",
        f"High-level plan: {unit.high_level_plan}",
        "Subtask traces:",
    ]
    for record in unit.subtasks:
        lines.append(f"- [{record.agent_name}] {record.description}")
        lines.extend(_render_steps(record.steps, include_reasoning, "    "))
        lines.append(f"    Observations: {record.observations}")
    lines.append(f"Final answer: {unit.final_answer}")
    lines.append(f"Reflections: {unit.reflections}")
    return lines


def _render_subtask(i: int, memory: SubtaskMemory, include_reasoning: bool) -> list[str]:
    lines = [f"### Subtask memory {i} ({memory.id})", f"Past subtask [{memory.agent_name}]: {memory.description}"]
    lines.extend(_render_steps(memory.steps, include_reasoning, "  "))
    lines.append(f"  Observations: {memory.observations}")
    return lines


def render_memories(memories: Sequence[MemoryUnit | SubtaskMemory], include_reasoning: bool = True) -> str:
    if not memories:
        raise EmptyInput("no memories to render")
    lines = [MEMORY_BLOCK_OPEN]
    for i, memory in enumerate(memories, start=1):
        if isinstance(memory, MemoryUnit):
            lines.extend(_render_unit(i, memory, include_reasoning))
        else:
            lines.extend(_render_subtask(i, memory, include_reasoning))
    lines.append(MEMORY_BLOCK_CLOSE)
    return "\n".join(lines)
