"""Deterministic stand-in models for offline runs.

``golden_team`` replays each fixture's reference solution through the full
orchestration protocol; ``null_team`` gives up immediately (negative control);
``stall_team`` loops on a useless subtask until a replan rescues it.
``RuleBasedCurator`` turns a serialized trajectory back into a memory object
without a model, which is how the bundled fixture bank is produced.
"""

from __future__ import annotations

import json
import re
from typing import Iterable, Sequence

from legomem.gateway import ChatMessage, ModelClient, ScriptedClient, ScriptEntry
from legomem.memory import END_TAG, START_TAG, action_to_text
from legomem.office import TaskFixture
from legomem.orchestrator import Team

NULL_ANSWER = "I could not complete the task."
STALL_SUBTASK = "Look around the workspace for anything relevant"


def _numbered(steps: Sequence[str]) -> str:
    return "\n".join(f"{i}. {s}" for i, s in enumerate(steps, start=1))


def _delegate(agent: str, subtask: str) -> str:
    return f"<agent>{agent}</agent><subtask>{subtask}</subtask>"


def _actions_reply(actions: Sequence[dict]) -> str:
    return "".join(f"<think>{a['think']}</think><action>{action_to_text(a['action'])}</action>" for a in actions)


def _require_reference(fixture: TaskFixture) -> None:
    if fixture.reference is None:
        raise ValueError(f"fixture {fixture.task_id} has no reference solution to script")


def _orchestrator_entries(fixture: TaskFixture) -> list[ScriptEntry]:
    ref = fixture.reference
    task = f"New task: {fixture.description}"
    entries = [ScriptEntry(("[plan-request]", task), _numbered(ref.plan))]
    for i, step in enumerate(ref.steps):
        entries.append(ScriptEntry(("[next-step]", task, f"Steps completed so far: {i}."), _delegate(step.agent, step.subtask)))
    entries.append(
        ScriptEntry(("[next-step]", task, f"Steps completed so far: {len(ref.steps)}."), f"<final_answer>{ref.final_answer}</final_answer>")
    )
    return entries


def _agent_entries(fixture: TaskFixture) -> list[ScriptEntry]:
    entries = []
    for step in fixture.reference.steps:
        sub = f"Subtask: {step.subtask}\n"
        entries.append(ScriptEntry(("[agent-act]", f"You are {step.agent},", sub), _actions_reply(step.actions)))
        entries.append(ScriptEntry(("[agent-summarize]", f"You are {step.agent}.", sub), f"<summary>{step.summary}</summary>"))
    return entries


def _rewriter_entries(fixture: TaskFixture) -> list[ScriptEntry]:
    reply = f"<start>\n{_numbered(fixture.reference.plan)}\n<end>"
    return [ScriptEntry((f"## New Task:\n{fixture.description}\n",), reply)]


def golden_team(fixtures: TaskFixture | Iterable[TaskFixture]) -> Team:
    """One team whose scripts cover every given fixture (prompts carry the task text)."""
    fixtures = [fixtures] if isinstance(fixtures, TaskFixture) else list(fixtures)
    orch, agents, rewrite = [], [], []
    for fixture in fixtures:
        _require_reference(fixture)
        orch += _orchestrator_entries(fixture)
        agents += _agent_entries(fixture)
        rewrite += _rewriter_entries(fixture)
    return Team(
        ScriptedClient(orch, "golden-orchestrator"),
        ScriptedClient(agents, "golden-agents"),
        ScriptedClient(rewrite, "golden-rewriter"),
    )


def null_team(fixtures: TaskFixture | Iterable[TaskFixture] = ()) -> Team:
    """Plans one vague step and immediately gives up."""
    orch = [
        ScriptEntry(("[plan-request]",), "1. Try to do the task"),
        ScriptEntry(("[replan-request]",), "1. Try to do the task"),
        ScriptEntry(("[next-step]",), f"<final_answer>{NULL_ANSWER}</final_answer>"),
    ]
    agents = [ScriptEntry(("[agent-",), "<summary>Nothing done.</summary>")]
    rewriter = [ScriptEntry(("## New Task:",), "<start>\n1. Try to do the task\n<end>")]
    return Team(ScriptedClient(orch, "null-orchestrator"), ScriptedClient(agents, "null-agents"), ScriptedClient(rewriter, "null-rewriter"))


def stall_team(fixture: TaskFixture) -> Team:
    """Loops on a no-op subtask under plan revision 0; after a replan the
    reference steps run. Without replanning the budget runs out."""
    _require_reference(fixture)
    ref = fixture.reference
    task = f"New task: {fixture.description}"
    first = ref.steps[0].agent
    orch = [
        ScriptEntry(("[plan-request]", task), _numbered([STALL_SUBTASK] + list(ref.plan))),
        ScriptEntry(("[replan-request]", task), _numbered(ref.plan)),
        ScriptEntry(("[next-step]", task, "Current plan (revision 0):"), _delegate(first, STALL_SUBTASK)),
    ]
    # after a replan at step 3 the stall window is clear and the reference resumes
    offset = 3
    for i, step in enumerate(ref.steps):
        orch.append(ScriptEntry(("[next-step]", task, "(revision 1)", f"Steps completed so far: {offset + i}."), _delegate(step.agent, step.subtask)))
    orch.append(
        ScriptEntry(
            ("[next-step]", task, "(revision 1)", f"Steps completed so far: {offset + len(ref.steps)}."),
            f"<final_answer>{ref.final_answer}</final_answer>",
        )
    )
    agents = [ScriptEntry(("[agent-act]", f"Subtask: {STALL_SUBTASK}\n"), "<summary>Nothing obviously relevant found.</summary>")]
    agents += _agent_entries(fixture)
    return Team(ScriptedClient(orch, "stall-orchestrator"), ScriptedClient(agents, "stall-agents"))


# ---------------------------------------------------------------------------
# curator
# ---------------------------------------------------------------------------

_TRAJECTORY = re.compile(r"# Trajectory:\n(.*?)\n\n# Example:", re.DOTALL)


class RuleBasedCurator(ModelClient):
    """Reads the JSON-lines trajectory out of a curation prompt and emits the
    memory object a careful curator would: one subtask per delegation, only
    successful actions, observations from the agent summary."""

    kind = "rule-based"
    name = "rule-based-curator"

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        match = _TRAJECTORY.search(messages[0].content)
        if match is None:
            return "No trajectory found."
        events = [json.loads(line) for line in match.group(1).splitlines() if line.strip()]
        return f"{START_TAG}\n{json.dumps(self.memory_object(events), indent=2, ensure_ascii=False)}\n{END_TAG}"

    @staticmethod
    def memory_object(events: Sequence[dict]) -> dict:
        steps: dict[int, dict] = {}
        plan: list[str] = []
        final = ""
        failures = 0
        elided = 0
        for event in events:
            kind = event.get("type")
            if kind == "plan":
                plan = list(event["steps"])
            elif kind == "directive":
                steps[event["step"]] = {"agent": event["agent"], "description": event["subtask"], "pairs": [], "summary": ""}
            elif kind == "action" and event.get("step") in steps:
                if event.get("failed") or not isinstance(event.get("action"), dict):
                    failures += 1
                    continue
                think = event.get("think") or "Proceed with the next call"
                steps[event["step"]]["pairs"].append(f"<think>{think}</think><action>{action_to_text(event['action'])}</action>")
            elif kind == "summary" and event.get("step") in steps:
                steps[event["step"]]["summary"] = event.get("text", "")
            elif kind == "elided":
                elided += event.get("count", 0)
            elif kind == "final_answer":
                final = event.get("text", "")
        subtasks = [
            {
                "agent": s["agent"],
                "description": s["description"],
                "steps": "".join(s["pairs"]),
                "observations": s["summary"] or "No notable observations.",
            }
            for _, s in sorted(steps.items())
            if s["pairs"] or s["summary"]
        ]
        agents = " ".join(f"{i}. {s['description']} ({s['agent']})." for i, s in enumerate(subtasks, start=1))
        reflection = "All delegated subtasks succeeded."
        if failures:
            reflection = f"{failures} failed action(s) were dropped; check parameters before retrying."
        if elided:
            reflection += f" {elided} repeated similar action(s) were omitted."
        return {
            "high_level_plan": agents or _numbered(plan),
            "subtasks": subtasks,
            "final_answer": final,
            "reflections": reflection,
        }
