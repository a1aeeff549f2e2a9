"""Orchestrator / task-agent execution loop with memory injection.

One task runs as: allocate memories, plan, then repeat
(next directive -> agent executes actions -> summary -> state update ->
stall check / replan) until the orchestrator finishes or the step budget runs
out. Every model call, action and observation is appended to the transcript,
which doubles as an :class:`~legomem.logs.ExecutionLog` for curation.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from legomem.agents import AGENT_APPS
from legomem.bank import Banks
from legomem.embedding import EmbeddingProvider
from legomem.errors import (
    AgentParseFailure,
    DirectiveParseFailure,
    LegoMemError,
    PlanParseFailure,
    RewriteParseFailure,
    UnknownAgent,
)
from legomem.gateway import ChatMessage, ModelClient
from legomem.logs import FAILURE, SUCCESS, ExecutionLog
from legomem.memory import SubtaskMemory, render_memories
from legomem.office import OfficeEnv, TaskFixture, Workspace, check_success
from legomem import prompts
from legomem.retrieval import (
    DEFAULT_K_AGENT,
    DEFAULT_K_ORCH,
    PLACEMENTS,
    VARIANTS,
    MemoryAllocation,
    allocate_dynamic_init,
    allocate_query_rewrite,
    allocate_vanilla,
    apply_placement,
    parse_numbered_steps,
    retrieve_dynamic_step,
)

logger = logging.getLogger(__name__)

_FINAL = re.compile(r"<final_answer>(.*?)</final_answer>", re.DOTALL)
_AGENT = re.compile(r"<agent>(.*?)</agent>", re.DOTALL)
_SUBTASK = re.compile(r"<subtask>(.*?)</subtask>", re.DOTALL)
_ACTION = re.compile(r"<action>(.*?)</action>", re.DOTALL)
_THINK = re.compile(r"<think>(.*?)</think>", re.DOTALL)
_SUMMARY = re.compile(r"<summary>(.*?)</summary>", re.DOTALL)


@dataclass(frozen=True)
class RunSettings:
    variant: str = "vanilla"
    placement: str = "orch_and_agent"
    k_orch: int = DEFAULT_K_ORCH
    k_agent: int = DEFAULT_K_AGENT
    include_reasoning: bool = True
    budget: int = 30
    stall_window: int = 6
    stall_repeats: int = 3
    max_replans: int = 2
    replanning: bool = True
    agents: Mapping[str, tuple[str, ...]] = field(default_factory=lambda: dict(AGENT_APPS))

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.placement not in PLACEMENTS:
            raise ValueError(f"unknown placement {self.placement!r}")
        if self.k_orch < 1 or self.k_agent < 1 or self.budget < 1:
            raise ValueError("k_orch, k_agent and budget must be >= 1")


@dataclass
class Team:
    orchestrator: ModelClient
    agents: ModelClient
    rewriter: ModelClient | None = None


@dataclass(frozen=True)
class Plan:
    steps: tuple[str, ...]
    origin: str = "initial"
    revision: int = 0

    def __post_init__(self) -> None:
        if not self.steps:
            raise PlanParseFailure("a plan needs at least one step")

    def render(self) -> str:
        return "\n".join(f"{i}. {s}" for i, s in enumerate(self.steps, start=1))


@dataclass(frozen=True)
class Directive:
    kind: str
    subtask_description: str = ""
    agent_name: str = ""
    final_answer: str = ""

    def fingerprint(self) -> str:
        return f"{self.agent_name}|{' '.join(self.subtask_description.split()).casefold()}"


@dataclass
class LedgerEntry:
    directive: Directive
    summary: str
    action_ok: list[bool]


@dataclass
class OrchestrationState:
    task_description: str
    plan: Plan
    budget: int
    step_ledger: list[LedgerEntry] = field(default_factory=list)
    stall_window: list[str] = field(default_factory=list)
    agent_history: dict[str, list[str]] = field(default_factory=dict)

    @property
    def step_index(self) -> int:
        return len(self.step_ledger)

    def record(self, entry: LedgerEntry) -> None:
        if self.step_index >= self.budget:
            raise RuntimeError("step budget exceeded")
        self.step_ledger.append(entry)
        self.stall_window.append(entry.directive.fingerprint())


@dataclass
class ActionStats:
    total: int = 0
    failed: int = 0


@dataclass
class TaskResult:
    task_id: str
    success: bool
    final_answer: str
    steps_executed: int
    failed_action_count: int
    total_action_count: int
    replan_count: int
    termination: str
    final_workspace_hash: str
    transcript: ExecutionLog

    def row(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "success": self.success,
            "steps_executed": self.steps_executed,
            "failed_action_count": self.failed_action_count,
            "total_action_count": self.total_action_count,
            "replan_count": self.replan_count,
            "termination": self.termination,
            "final_workspace_hash": self.final_workspace_hash,
        }


class Transcript:
    """Append-only event list for one run."""

    def __init__(self) -> None:
        self.events: list[dict[str, Any]] = []

    def add(self, event_type: str, **data: Any) -> None:
        self.events.append({"type": event_type, **data})

    def call(self, client: ModelClient, messages: list[ChatMessage], role: str, purpose: str) -> str:
        reply = client.complete(messages)
        self.log_call(messages, reply, role, purpose)
        return reply

    def log_call(self, messages: Sequence[ChatMessage], reply: str, role: str, purpose: str) -> None:
        self.add("model_call", role=role, purpose=purpose, messages=[m.to_dict() for m in messages], response=reply)


# ---------------------------------------------------------------------------
# prompt helpers
# ---------------------------------------------------------------------------

def _agents_text(settings: RunSettings) -> str:
    return "\n".join(f"- {name}: {', '.join(apps)}" for name, apps in sorted(settings.agents.items()))


def _orchestrator_memories(allocation: MemoryAllocation, stage: str, include_reasoning: bool) -> str:
    allowed = ("full", "planning_only") if stage == "planning" else ("full",)
    if allocation.orchestrator_scope not in allowed or not allocation.orchestrator_memories:
        return ""
    return prompts.memory_section(render_memories(allocation.orchestrator_memories, include_reasoning))


def _ledger_text(entries: Sequence[LedgerEntry]) -> str:
    if not entries:
        return "(no steps yet)"
    lines = []
    for i, entry in enumerate(entries, start=1):
        d = entry.directive
        ok = sum(entry.action_ok)
        bad = len(entry.action_ok) - ok
        lines.append(f"{i}. {d.agent_name} <- {d.subtask_description} | actions ok={ok} failed={bad} | summary: {entry.summary}")
    return "\n".join(lines)


def _parse_plan(reply: str) -> tuple[str, ...]:
    return tuple(parse_numbered_steps(reply))


def _plan_with_retry(client: ModelClient, prompt: str, transcript: Transcript, purpose: str) -> tuple[str, ...]:
    messages = [ChatMessage("user", prompt)]
    reply = transcript.call(client, messages, "orchestrator", purpose)
    steps = _parse_plan(reply)
    if steps:
        return steps
    messages += [ChatMessage("assistant", reply), ChatMessage("user", prompts.PLAN_RETRY)]
    reply = transcript.call(client, messages, "orchestrator", purpose + "_retry")
    steps = _parse_plan(reply)
    if not steps:
        raise PlanParseFailure("orchestrator returned no numbered plan after one retry")
    return steps


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def make_initial_plan(
    task_description: str,
    allocation: MemoryAllocation,
    client: ModelClient,
    settings: RunSettings = RunSettings(),
    transcript: Transcript | None = None,
) -> Plan:
    transcript = transcript or Transcript()
    prompt = prompts.fill(
        prompts.PLAN_PROMPT,
        agents=_agents_text(settings),
        task=task_description,
        memories=_orchestrator_memories(allocation, "planning", settings.include_reasoning),
    )
    return Plan(_plan_with_retry(client, prompt, transcript, "plan"), "initial", 0)


def replan(
    state: OrchestrationState,
    allocation: MemoryAllocation,
    client: ModelClient,
    settings: RunSettings = RunSettings(),
    transcript: Transcript | None = None,
) -> Plan:
    transcript = transcript or Transcript()
    prompt = prompts.fill(
        prompts.REPLAN_PROMPT,
        agents=_agents_text(settings),
        task=state.task_description,
        revision=state.plan.revision,
        plan=state.plan.render(),
        ledger_tail=_ledger_text(state.step_ledger[-settings.stall_window:]),
        memories=_orchestrator_memories(allocation, "planning", settings.include_reasoning),
    )
    steps = _plan_with_retry(client, prompt, transcript, "replan")
    state.plan = Plan(steps, "replanned", state.plan.revision + 1)
    state.stall_window.clear()
    return state.plan


def _parse_directive(reply: str, registry: Mapping[str, Any]) -> Directive:
    final = _FINAL.search(reply)
    if final:
        return Directive("finish", final_answer=final.group(1).strip())
    agent = _AGENT.search(reply)
    subtask = _SUBTASK.search(reply)
    if not agent or not subtask or not subtask.group(1).strip():
        raise DirectiveParseFailure("reply has neither <final_answer> nor <agent>+<subtask>")
    name = agent.group(1).strip()
    if name not in registry:
        raise UnknownAgent(f"unknown agent {name!r}.")
    return Directive("delegate", subtask.group(1).strip(), name)


def next_directive(
    state: OrchestrationState,
    allocation: MemoryAllocation,
    client: ModelClient,
    settings: RunSettings = RunSettings(),
    transcript: Transcript | None = None,
) -> Directive:
    if state.step_index >= state.budget:
        raise RuntimeError("next_directive called with the step budget exhausted")
    transcript = transcript or Transcript()
    prompt = prompts.fill(
        prompts.STEP_PROMPT,
        agents=_agents_text(settings),
        task=state.task_description,
        revision=state.plan.revision,
        plan=state.plan.render(),
        step_count=state.step_index,
        ledger=_ledger_text(state.step_ledger),
        memories=_orchestrator_memories(allocation, "step", settings.include_reasoning),
    )
    messages = [ChatMessage("user", prompt)]
    reply = transcript.call(client, messages, "orchestrator", "step")
    try:
        return _parse_directive(reply, settings.agents)
    except (DirectiveParseFailure, UnknownAgent) as exc:
        retry = prompts.fill(prompts.DIRECTIVE_RETRY, error=str(exc), agent_names=", ".join(sorted(settings.agents)))
        messages += [ChatMessage("assistant", reply), ChatMessage("user", retry)]
        reply = transcript.call(client, messages, "orchestrator", "step_retry")
        return _parse_directive(reply, settings.agents)


def detect_stall(state: OrchestrationState, window: int = 6, repeats: int = 3) -> bool:
    recent = state.stall_window[-window:]
    return any(count >= repeats for count in Counter(recent).values())


def _parse_agent_actions(reply: str) -> list[tuple[str, str]]:
    """(think, raw action body) pairs; think is the last <think> before each action."""
    pairs = []
    cursor = 0
    for match in _ACTION.finditer(reply):
        thinks = _THINK.findall(reply, cursor, match.start())
        pairs.append((thinks[-1].strip() if thinks else "", match.group(1).strip()))
        cursor = match.end()
    return pairs


def execute_subtask(
    directive: Directive,
    allocation: MemoryAllocation,
    workspace: Workspace,
    client: ModelClient,
    settings: RunSettings = RunSettings(),
    transcript: Transcript | None = None,
    banks: Banks | None = None,
    provider: EmbeddingProvider | None = None,
    history: Sequence[str] = (),
    step: int = 0,
) -> tuple[str, str, ActionStats]:
    if directive.kind != "delegate":
        raise ValueError("execute_subtask needs a delegate directive")
    transcript = transcript or Transcript()
    agent = directive.agent_name
    apps = settings.agents.get(agent, ())

    memories: Sequence[SubtaskMemory]
    if allocation.dynamic_enabled:
        if banks is None or provider is None:
            raise ValueError("dynamic allocation needs banks and a provider")
        memories = retrieve_dynamic_step(directive.subtask_description, agent, banks, provider, settings.k_agent)
        transcript.add(
            "dynamic_retrieval", step=step, agent=agent,
            query=directive.subtask_description, memory_ids=[m.id for m in memories],
        )
    else:
        memories = allocation.memories_for(agent)
    memory_text = ""
    if memories:
        memory_text = prompts.memory_section(
            render_memories(memories, settings.include_reasoning), prompts.SUBTASK_MEMORY_HEADER
        )

    prompt = prompts.fill(
        prompts.AGENT_PROMPT,
        agent=agent,
        apps=", ".join(apps),
        subtask=directive.subtask_description,
        memories=memory_text,
        history="\n".join(history) if history else "(none)",
    )
    messages = [ChatMessage("user", prompt)]
    reply = transcript.call(client, messages, f"agent:{agent}", "act")
    pairs = _parse_agent_actions(reply)
    direct_summary = _SUMMARY.search(reply)
    if not pairs and not direct_summary:
        raise AgentParseFailure(f"{agent} produced no action and no summary")

    stats = ActionStats()
    observations = []
    for think, raw in pairs:
        stats.total += 1
        action: Any = None
        try:
            action = json.loads(raw)
        except json.JSONDecodeError as exc:
            text, failed = f"Error (MalformedAction): {exc}", True
        else:
            if not isinstance(action, dict):
                text, failed = "Error (MalformedAction): action is not a JSON object", True
                action = None
            elif action.get("app") not in apps:
                text, failed = f"Error (AppNotAllowed): {agent} cannot use app {action.get('app')!r}", True
            else:
                obs = workspace.execute_action(action)
                text, failed = obs.text, obs.failed
        stats.failed += failed
        observations.append(text)
        transcript.add(
            "action", step=step, agent=agent, think=think, action=action,
            raw=raw, observation=text, failed=failed,
        )

    if pairs:
        obs_text = "\n".join(f"{i}. {o}" for i, o in enumerate(observations, start=1))
        follow_up = prompts.fill(
            prompts.AGENT_SUMMARY_PROMPT, agent=agent, subtask=directive.subtask_description, observations=obs_text
        )
        messages += [ChatMessage("assistant", reply), ChatMessage("user", follow_up)]
        summary_reply = transcript.call(client, messages, f"agent:{agent}", "summarize")
        tagged = _SUMMARY.search(summary_reply)
        summary = (tagged.group(1) if tagged else summary_reply).strip()
    else:
        summary = direct_summary.group(1).strip()
    transcript.add("summary", step=step, agent=agent, text=summary)
    return "\n".join(observations), summary, stats


# ---------------------------------------------------------------------------
# full task
# ---------------------------------------------------------------------------

def allocate(
    task_description: str,
    banks: Banks | None,
    provider: EmbeddingProvider | None,
    settings: RunSettings,
    rewriter: ModelClient | None = None,
    transcript: Transcript | None = None,
) -> MemoryAllocation:
    agents = tuple(settings.agents)
    if banks is None:
        empty = MemoryAllocation(orchestrator_scope="none", agent_memories={a: () for a in sorted(agents)})
        return apply_placement(empty, settings.placement)
    if settings.variant == "dynamic":
        return allocate_dynamic_init(task_description, banks, provider, settings.k_orch, settings.placement, agents)
    if settings.variant == "query_rewrite":
        if rewriter is None:
            raise ValueError("query_rewrite needs a rewriter client")
        on_call = None
        if transcript is not None:
            def on_call(messages, reply):
                transcript.log_call(messages, reply, "rewriter", "rewrite")
        try:
            return allocate_query_rewrite(
                task_description, banks, rewriter, provider, settings.k_orch, settings.k_agent,
                settings.placement, agents, settings.include_reasoning, on_call,
            )
        except RewriteParseFailure as exc:
            logger.info("query rewrite failed (%s); falling back to vanilla allocation", exc)
            fallback = allocate_vanilla(
                task_description, banks, provider, settings.k_orch, settings.k_agent, settings.placement, agents
            )
            return MemoryAllocation(
                fallback.orchestrator_memories, fallback.orchestrator_scope, fallback.agent_memories,
                fallback.dynamic_enabled, None, f"vanilla ({exc})",
            )
    return allocate_vanilla(
        task_description, banks, provider, settings.k_orch, settings.k_agent, settings.placement, agents
    )


def run_task(
    fixture: TaskFixture,
    banks: Banks | None,
    settings: RunSettings,
    team: Team,
    provider: EmbeddingProvider | None = None,
    log_id: str | None = None,
) -> TaskResult:
    """Run one fixture end to end. In-task failures never raise; they end the
    run with ``success=False`` and a recorded termination reason."""
    transcript = Transcript()
    workspace = OfficeEnv().reset(fixture)
    transcript.add(
        "task_start", task_id=fixture.task_id, variant=settings.variant,
        placement=settings.placement, seed_hash=workspace.content_hash(),
    )
    final_answer = ""
    termination = "finished"
    replans = 0
    stats = ActionStats()
    state: OrchestrationState | None = None

    try:
        allocation = allocate(fixture.description, banks, provider, settings, team.rewriter, transcript)
        transcript.add("allocation", **allocation.summary())
        plan = make_initial_plan(fixture.description, allocation, team.orchestrator, settings, transcript)
        transcript.add("plan", steps=list(plan.steps), origin=plan.origin, revision=plan.revision)
        state = OrchestrationState(fixture.description, plan, settings.budget)

        while True:
            if state.step_index >= settings.budget:
                termination = "budget_exhausted"
                break
            step = state.step_index + 1
            directive = next_directive(state, allocation, team.orchestrator, settings, transcript)
            if directive.kind == "finish":
                final_answer = directive.final_answer
                transcript.add("final_answer", text=final_answer)
                break
            transcript.add("directive", step=step, kind="delegate", agent=directive.agent_name, subtask=directive.subtask_description)
            history = state.agent_history.setdefault(directive.agent_name, [])
            try:
                observation, summary, step_stats = execute_subtask(
                    directive, allocation, workspace, team.agents, settings, transcript,
                    banks, provider, list(history), step,
                )
            except AgentParseFailure as exc:
                observation, summary, step_stats = "", f"Agent error: {exc}", ActionStats()
                transcript.add("summary", step=step, agent=directive.agent_name, text=summary)
            if observation:
                history.append(observation)
            stats.total += step_stats.total
            stats.failed += step_stats.failed
            ok = [True] * (step_stats.total - step_stats.failed) + [False] * step_stats.failed
            state.record(LedgerEntry(directive, summary, ok))

            if settings.replanning and detect_stall(state, settings.stall_window, settings.stall_repeats):
                transcript.add("stall", step=step)
                if replans >= settings.max_replans:
                    termination = "replan_limit"
                    break
                new_plan = replan(state, allocation, team.orchestrator, settings, transcript)
                replans += 1
                transcript.add("plan", steps=list(new_plan.steps), origin=new_plan.origin, revision=new_plan.revision)
    except (PlanParseFailure, DirectiveParseFailure, UnknownAgent) as exc:
        termination = type(exc).__name__
        transcript.add("error", error=type(exc).__name__, message=str(exc))
    except LegoMemError as exc:
        termination = f"error:{type(exc).__name__}"
        transcript.add("error", error=type(exc).__name__, message=str(exc))

    success = check_success(workspace, final_answer, fixture.checker)
    final_hash = workspace.content_hash()
    steps_executed = state.step_index if state else 0
    transcript.add(
        "termination", reason=termination, success=success, steps_executed=steps_executed,
        final_workspace_hash=final_hash,
    )
    has_answer = any(e["type"] == "final_answer" for e in transcript.events)
    log = ExecutionLog(
        log_id or fixture.task_id,
        fixture.description,
        transcript.events,
        SUCCESS if success and has_answer else FAILURE,
    )
    return TaskResult(
        task_id=fixture.task_id,
        success=success,
        final_answer=final_answer,
        steps_executed=steps_executed,
        failed_action_count=stats.failed,
        total_action_count=stats.total,
        replan_count=replans,
        termination=termination,
        final_workspace_hash=final_hash,
        transcript=log,
    )


def replay_actions(fixture: TaskFixture, log: ExecutionLog) -> Workspace:
    """Re-execute a transcript's parsed actions on a fresh workspace."""
    workspace = OfficeEnv().reset(fixture)
    for event in log.events_of("action"):
        if isinstance(event.get("action"), dict):
            workspace.execute_action(event["action"])
    return workspace
