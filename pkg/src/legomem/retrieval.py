"""Memory allocation for the three retrieval variants and the five placement modes.

Every variant gives the orchestrator the same top-``k_orch`` full-task memories;
they differ only in how task agents get subtask memories:

* ``vanilla``: subtasks extracted from the retrieved full-task memories.
* ``dynamic``: nothing up front; the selected agent's bank is queried with the
  live subtask description at each orchestration step.
* ``query_rewrite``: a rewriter model drafts plan steps from the retrieved
  memories; each step queries the best-matching agent bank before execution.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

from legomem.agents import DEFAULT_REGISTRY
from legomem.bank import Banks, retrieve
from legomem.embedding import EmbeddingProvider
from legomem.errors import RewriteParseFailure
from legomem.gateway import ChatMessage, ModelClient
from legomem.memory import MemoryUnit, SubtaskMemory, extract_subtask_memories, render_memories
from legomem.prompts import QUERY_REWRITE_PROMPT, QUERY_REWRITE_RETRY, fill

VARIANTS = ("vanilla", "dynamic", "query_rewrite")
PLACEMENTS = ("orch_and_agent", "orch_planning_and_agent", "orch_only", "agent_only", "none")
SCOPES = ("full", "planning_only", "none")

DEFAULT_K_ORCH = 5
DEFAULT_K_AGENT = 3

# which prompts carry memory under each placement: (planning, step, agent)
PLACEMENT_TABLE = {
    "orch_and_agent": (True, True, True),
    "orch_planning_and_agent": (True, False, True),
    "orch_only": (True, True, False),
    "agent_only": (False, False, True),
    "none": (False, False, False),
}

_NUMBERED = re.compile(r"^\s*(\d+)[.)]\s+(.+?)\s*$", re.MULTILINE)
_REWRITE_BLOCK = re.compile(r"<start>(.*?)<end>", re.DOTALL)


@dataclass(frozen=True)
class MemoryAllocation:
    orchestrator_memories: tuple[MemoryUnit, ...] = ()
    orchestrator_scope: str = "full"
    agent_memories: Mapping[str, tuple[SubtaskMemory, ...]] = field(default_factory=dict)
    dynamic_enabled: bool = False
    draft_plan: tuple[str, ...] | None = None
    fallback: str | None = None

    def __post_init__(self) -> None:
        if self.orchestrator_scope not in SCOPES:
            raise ValueError(f"unknown orchestrator scope {self.orchestrator_scope!r}")
        if self.orchestrator_scope == "none" and self.orchestrator_memories:
            raise ValueError("scope 'none' cannot carry orchestrator memories")

    def memories_for(self, agent: str) -> tuple[SubtaskMemory, ...]:
        return tuple(self.agent_memories.get(agent, ()))

    def summary(self) -> dict:
        return {
            "orchestrator_memory_ids": [u.id for u in self.orchestrator_memories],
            "orchestrator_scope": self.orchestrator_scope,
            "agent_memory_ids": {a: [m.id for m in mems] for a, mems in sorted(self.agent_memories.items())},
            "dynamic_enabled": self.dynamic_enabled,
            "draft_plan": list(self.draft_plan) if self.draft_plan is not None else None,
            "fallback": self.fallback,
        }


def _empty_agents(agents: Sequence[str]) -> dict[str, tuple[SubtaskMemory, ...]]:
    return {a: () for a in sorted(agents)}


def apply_placement(allocation: MemoryAllocation, mode: str) -> MemoryAllocation:
    if mode not in PLACEMENTS:
        raise ValueError(f"unknown placement {mode!r}")
    cleared = {a: () for a in allocation.agent_memories}
    if mode == "orch_and_agent":
        return allocation
    if mode == "orch_planning_and_agent":
        if allocation.orchestrator_scope == "none":
            return allocation
        return replace(allocation, orchestrator_scope="planning_only")
    if mode == "orch_only":
        return replace(allocation, agent_memories=cleared, dynamic_enabled=False)
    if mode == "agent_only":
        return replace(allocation, orchestrator_memories=(), orchestrator_scope="none")
    return replace(
        allocation,
        orchestrator_memories=(),
        orchestrator_scope="none",
        agent_memories=cleared,
        dynamic_enabled=False,
        draft_plan=None,
    )


def retrieve_orchestrator_memories(task_description: str, banks: Banks, provider: EmbeddingProvider, k_orch: int) -> tuple[MemoryUnit, ...]:
    return tuple(hit.payload for hit in retrieve(banks.global_bank, task_description, k_orch, provider))


def allocate_vanilla(
    task_description: str,
    banks: Banks,
    provider: EmbeddingProvider,
    k_orch: int = DEFAULT_K_ORCH,
    k_agent: int = DEFAULT_K_AGENT,
    placement: str = "orch_and_agent",
    agents: Sequence[str] = DEFAULT_REGISTRY,
) -> MemoryAllocation:
    if k_orch < 1 or k_agent < 1:
        raise ValueError("k_orch and k_agent must be >= 1")
    units = retrieve_orchestrator_memories(task_description, banks, provider, k_orch)
    per_agent: dict[str, list[SubtaskMemory]] = {a: [] for a in agents}
    # rank order of the parent units decides which subtasks survive the cap
    for unit in units:
        for sub in extract_subtask_memories(unit):
            bucket = per_agent.setdefault(sub.agent_name, [])
            if len(bucket) < k_agent:
                bucket.append(sub)
    allocation = MemoryAllocation(
        orchestrator_memories=units,
        orchestrator_scope="full",
        agent_memories={a: tuple(m) for a, m in sorted(per_agent.items())},
    )
    return apply_placement(allocation, placement)


def allocate_dynamic_init(
    task_description: str,
    banks: Banks,
    provider: EmbeddingProvider,
    k_orch: int = DEFAULT_K_ORCH,
    placement: str = "orch_and_agent",
    agents: Sequence[str] = DEFAULT_REGISTRY,
) -> MemoryAllocation:
    units = retrieve_orchestrator_memories(task_description, banks, provider, k_orch)
    allocation = MemoryAllocation(
        orchestrator_memories=units,
        orchestrator_scope="full",
        agent_memories=_empty_agents(agents),
        dynamic_enabled=True,
    )
    return apply_placement(allocation, placement)


def retrieve_dynamic_step(
    subtask_description: str,
    agent_name: str,
    banks: Banks,
    provider: EmbeddingProvider,
    k_agent: int = DEFAULT_K_AGENT,
) -> list[SubtaskMemory]:
    bank = banks.agent_banks.get(agent_name)
    if bank is None or not len(bank):
        return []
    return [hit.payload for hit in retrieve(bank, subtask_description, k_agent, provider)]


def parse_numbered_steps(text: str) -> list[str]:
    return [m.group(2) for m in _NUMBERED.finditer(text)]


def parse_draft_plan(text: str) -> list[str]:
    block = _REWRITE_BLOCK.search(text)
    if block is None:
        raise RewriteParseFailure("rewriter reply has no <start> ... <end> block")
    steps = parse_numbered_steps(block.group(1))
    if not steps:
        raise RewriteParseFailure("rewriter block has no numbered steps")
    return steps


def match_agent(step: str, banks: Banks, provider: EmbeddingProvider) -> str | None:
    """Agent whose bank gives ``step`` the highest top-1 score (ties: by name)."""
    best: tuple[float, str] | None = None
    for agent, bank in sorted(banks.agent_banks.items()):
        if not len(bank):
            continue
        top = retrieve(bank, step, 1, provider)[0]
        if best is None or top.score > best[0]:
            best = (top.score, agent)
    return None if best is None else best[1]


def allocate_query_rewrite(
    task_description: str,
    banks: Banks,
    rewriter: ModelClient,
    provider: EmbeddingProvider,
    k_orch: int = DEFAULT_K_ORCH,
    k_agent: int = DEFAULT_K_AGENT,
    placement: str = "orch_and_agent",
    agents: Sequence[str] = DEFAULT_REGISTRY,
    include_reasoning: bool = True,
    on_call: Callable[[list[ChatMessage], str], None] | None = None,
) -> MemoryAllocation:
    units = retrieve_orchestrator_memories(task_description, banks, provider, k_orch)
    context = render_memories(units, include_reasoning) if units else "(no similar tasks found)"
    messages = [ChatMessage("user", fill(QUERY_REWRITE_PROMPT, memory_context=context, task_description=task_description))]
    reply = rewriter.complete(messages)
    if on_call:
        on_call(list(messages), reply)
    try:
        draft = parse_draft_plan(reply)
    except RewriteParseFailure:
        messages += [ChatMessage("assistant", reply), ChatMessage("user", QUERY_REWRITE_RETRY)]
        reply = rewriter.complete(messages)
        if on_call:
            on_call(list(messages), reply)
        draft = parse_draft_plan(reply)

    per_agent: dict[str, list[SubtaskMemory]] = {a: [] for a in agents}
    for step in draft:
        agent = match_agent(step, banks, provider)
        if agent is None:
            continue
        bucket = per_agent.setdefault(agent, [])
        seen = {m.id for m in bucket}
        for hit in retrieve(banks.agent_banks[agent], step, k_agent, provider):
            if len(bucket) >= k_agent:
                break
            if hit.memory_id not in seen:
                bucket.append(hit.payload)
                seen.add(hit.memory_id)
    allocation = MemoryAllocation(
        orchestrator_memories=units,
        orchestrator_scope="full",
        agent_memories={a: tuple(m) for a, m in sorted(per_agent.items())},
        draft_plan=tuple(draft),
    )
    return apply_placement(allocation, placement)
