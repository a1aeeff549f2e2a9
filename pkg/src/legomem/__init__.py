"""Modular procedural memory for orchestrator + task-agent teams."""

from legomem.bank import Banks, MemoryBank, build_banks, load_banks, retrieve, save_banks
from legomem.curation import curate_corpus, distill, filter_successful, validate
from legomem.embedding import HashEmbedder, RemoteEmbedder, cosine_similarity, embed, make_provider
from legomem.gateway import ChatMessage, RecordReplayClient, RemoteChatClient, ScriptedClient, ScriptEntry
from legomem.harness import RunConfig, compute_metrics, load_config, run_suite, split_suite
from legomem.logs import ExecutionLog, read_logs, write_logs
from legomem.memory import (
    MemoryUnit,
    SubtaskMemory,
    SubtaskRecord,
    ThinkActionPair,
    extract_subtask_memories,
    parse_memory_unit,
    render_memories,
    serialize_unit,
    strip_reasoning,
)
from legomem.orchestrator import RunSettings, TaskResult, Team, run_task
from legomem.retrieval import (
    MemoryAllocation,
    allocate_dynamic_init,
    allocate_query_rewrite,
    allocate_vanilla,
    apply_placement,
    retrieve_dynamic_step,
)

__version__ = "0.1.0"

__all__ = [
    "Banks",
    "ChatMessage",
    "ExecutionLog",
    "HashEmbedder",
    "MemoryAllocation",
    "MemoryBank",
    "MemoryUnit",
    "RecordReplayClient",
    "RemoteChatClient",
    "RemoteEmbedder",
    "RunConfig",
    "RunSettings",
    "ScriptEntry",
    "ScriptedClient",
    "SubtaskMemory",
    "SubtaskRecord",
    "TaskResult",
    "Team",
    "ThinkActionPair",
    "allocate_dynamic_init",
    "allocate_query_rewrite",
    "allocate_vanilla",
    "apply_placement",
    "build_banks",
    "compute_metrics",
    "cosine_similarity",
    "curate_corpus",
    "distill",
    "embed",
    "extract_subtask_memories",
    "filter_successful",
    "load_banks",
    "load_config",
    "make_provider",
    "parse_memory_unit",
    "read_logs",
    "render_memories",
    "retrieve",
    "retrieve_dynamic_step",
    "run_suite",
    "run_task",
    "save_banks",
    "serialize_unit",
    "split_suite",
    "strip_reasoning",
    "validate",
    "write_logs",
]
