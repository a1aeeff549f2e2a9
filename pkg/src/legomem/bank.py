"""Embedding-indexed memory banks with exact top-K retrieval.

``Banks`` bundles the global full-task bank (indexed by task description) with
one subtask bank per agent (indexed by subtask description). Search is a full
scan: the bank sizes this targets (tens to low thousands) make an ANN index
unnecessary, and a full scan gives exact, reproducible results.

Directory layout written by :func:`save_banks`::

    manifest.json          provider, dim, counts, schema version, content hash
    global.jsonl           one full-task entry (with its unit) per line
    agents/<agent>.jsonl   one subtask entry (with its subtask memory) per line
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from legomem.embedding import EmbeddingProvider
from legomem.errors import (
    DimensionMismatch,
    DimMismatchOnLoad,
    EmptyQuery,
    IoFailure,
    SchemaVersionMismatch,
)
from legomem.memory import MemoryUnit, SubtaskMemory, extract_subtask_memories, unit_from_dict

SCHEMA_VERSION = 1
FULL_TASK = "full_task"
SUBTASK = "subtask"

# Scores are rounded before ranking so that numerically equal similarities
# (e.g. duplicate texts) tie exactly and fall back to the memory_id order.
SCORE_DECIMALS = 12


@dataclass(frozen=True)
class BankEntry:
    memory_id: str
    kind: str
    index_text: str
    embedding: np.ndarray = field(compare=False, repr=False)
    agent_name: str | None = None

    def __post_init__(self) -> None:
        if self.kind == SUBTASK and not self.agent_name:
            raise ValueError("subtask entries need an agent_name")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BankEntry):
            return NotImplemented
        return (
            (self.memory_id, self.kind, self.index_text, self.agent_name)
            == (other.memory_id, other.kind, other.index_text, other.agent_name)
            and np.array_equal(self.embedding, other.embedding)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class ScoredMemory:
    memory_id: str
    score: float
    payload: MemoryUnit | SubtaskMemory


class MemoryBank:
    """An immutable list of entries plus their payloads and a score matrix."""

    def __init__(
        self,
        entries: Sequence[BankEntry],
        payloads: dict[str, MemoryUnit | SubtaskMemory],
        provider_name: str,
        dim: int,
        kind: str = FULL_TASK,
        agent_name: str | None = None,
    ):
        self.entries = tuple(entries)
        self.payloads = dict(payloads)
        self.provider_name = provider_name
        self.dim = dim
        self.kind = kind
        self.agent_name = agent_name
        if self.entries:
            self.matrix = np.vstack([e.embedding for e in self.entries])
        else:
            self.matrix = np.zeros((0, dim))
        self.matrix.setflags(write=False)
        if self.matrix.shape[1] != dim:
            raise DimensionMismatch(f"entries have dim {self.matrix.shape[1]}, bank dim {dim}")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MemoryBank):
            return NotImplemented
        return (
            self.entries == other.entries
            and self.payloads == other.payloads
            and (self.provider_name, self.dim, self.kind, self.agent_name)
            == (other.provider_name, other.dim, other.kind, other.agent_name)
        )

    @property
    def ids(self) -> list[str]:
        return [e.memory_id for e in self.entries]

    @classmethod
    def from_items(
        cls,
        items: Iterable[tuple[str, str, Any]],
        provider: EmbeddingProvider,
        kind: str = FULL_TASK,
        agent_name: str | None = None,
    ) -> "MemoryBank":
        """Index ``(memory_id, index_text, payload)`` triples."""
        items = list(items)
        vectors = provider.embed_many([text for _, text, _ in items]) if items else []
        entries = [
            BankEntry(mid, kind, text, vec, agent_name)
            for (mid, text, _), vec in zip(items, vectors)
        ]
        payloads = {mid: payload for mid, _, payload in items}
        return cls(entries, payloads, provider.name, provider.dim, kind, agent_name)


@dataclass
class Banks:
    global_bank: MemoryBank
    agent_banks: dict[str, MemoryBank]

    @property
    def dim(self) -> int:
        return self.global_bank.dim

    @property
    def provider_name(self) -> str:
        return self.global_bank.provider_name

    def counts(self) -> dict[str, Any]:
        return {
            FULL_TASK: len(self.global_bank),
            SUBTASK: sum(len(b) for b in self.agent_banks.values()),
            "agents": {name: len(b) for name, b in sorted(self.agent_banks.items())},
        }

    def content_hash(self) -> str:
        return _content_hash(*_serialize(self))


def build_banks(units: Sequence[MemoryUnit], provider: EmbeddingProvider) -> Banks:
    ids = [u.id for u in units]
    if len(set(ids)) != len(ids):
        raise ValueError("units must be deduplicated by id")
    global_bank = MemoryBank.from_items(
        ((u.id, u.task_description, u) for u in units), provider, FULL_TASK
    )
    by_agent: dict[str, list[SubtaskMemory]] = {}
    for unit in units:
        for sub in extract_subtask_memories(unit):
            by_agent.setdefault(sub.agent_name, []).append(sub)
    agent_banks = {
        agent: MemoryBank.from_items(
            ((s.id, s.description, s) for s in subs), provider, SUBTASK, agent
        )
        for agent, subs in sorted(by_agent.items())
    }
    return Banks(global_bank, agent_banks)


def rank(scores: np.ndarray, ids: Sequence[str], k: int) -> list[int]:
    rounded = np.round(scores, SCORE_DECIMALS)
    order = sorted(range(len(ids)), key=lambda i: (-rounded[i], ids[i]))
    return order[:k]


def retrieve(bank: MemoryBank, query_text: str, k: int, provider: EmbeddingProvider) -> list[ScoredMemory]:
    if not isinstance(query_text, str) or not query_text.strip():
        raise EmptyQuery("retrieval query is empty")
    if k < 1:
        raise ValueError("k must be positive")
    if provider.dim != bank.dim:
        raise DimensionMismatch(f"provider dim {provider.dim} != bank dim {bank.dim}")
    if not len(bank):
        return []
    query = provider.embed(query_text)
    scores = np.clip(bank.matrix @ query, -1.0, 1.0)
    ids = bank.ids
    out = []
    for i in rank(scores, ids, k):
        out.append(ScoredMemory(ids[i], float(np.round(scores[i], SCORE_DECIMALS)), bank.payloads[ids[i]]))
    return out


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def _entry_record(entry: BankEntry) -> dict[str, Any]:
    record: dict[str, Any] = {"memory_id": entry.memory_id, "kind": entry.kind}
    if entry.agent_name is not None:
        record["agent_name"] = entry.agent_name
    record["index_text"] = entry.index_text
    record["embedding"] = [float(x) for x in entry.embedding]
    return record


def _bank_lines(bank: MemoryBank) -> str:
    lines = []
    for entry in bank.entries:
        record = _entry_record(entry)
        payload = bank.payloads[entry.memory_id]
        if isinstance(payload, MemoryUnit):
            record["unit"] = payload.to_dict()
        else:
            record["subtask"] = payload.to_dict()
        lines.append(json.dumps(record, ensure_ascii=False) + "\n")
    return "".join(lines)


def _serialize(banks: Banks) -> tuple[str, dict[str, str]]:
    return _bank_lines(banks.global_bank), {
        name: _bank_lines(bank) for name, bank in sorted(banks.agent_banks.items())
    }


def _content_hash(global_text: str, agent_texts: dict[str, str]) -> str:
    h = hashlib.sha256()
    h.update(global_text.encode("utf-8"))
    for name in sorted(agent_texts):
        h.update(f"\x00{name}\x00".encode("utf-8"))
        h.update(agent_texts[name].encode("utf-8"))
    return h.hexdigest()


def save_banks(banks: Banks, path: str | os.PathLike, extra_manifest: dict | None = None) -> dict:
    root = Path(path)
    global_text, agent_texts = _serialize(banks)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "provider": banks.provider_name,
        "dim": banks.dim,
        "counts": banks.counts(),
        "content_hash": _content_hash(global_text, agent_texts),
    }
    if extra_manifest:
        manifest.update(extra_manifest)
    try:
        (root / "agents").mkdir(parents=True, exist_ok=True)
        for stale in (root / "agents").glob("*.jsonl"):
            if stale.stem not in agent_texts:
                stale.unlink()
        (root / "global.jsonl").write_text(global_text, encoding="utf-8")
        for name, text in agent_texts.items():
            (root / "agents" / f"{name}.jsonl").write_text(text, encoding="utf-8")
        (root / "manifest.json").write_text(
            json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise IoFailure(f"cannot write bank to {root}: {exc}") from exc
    return manifest


def read_manifest(path: str | os.PathLike) -> dict:
    try:
        return json.loads((Path(path) / "manifest.json").read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise IoFailure(f"no readable bank manifest in {path}: {exc}") from exc


def _parse_bank(text: str, provider_name: str, dim: int, kind: str, agent_name: str | None) -> MemoryBank:
    entries, payloads = [], {}
    for line in text.splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        vec = np.asarray(record["embedding"], dtype=np.float64)
        vec.setflags(write=False)
        entry = BankEntry(record["memory_id"], record["kind"], record["index_text"], vec, record.get("agent_name"))
        entries.append(entry)
        if "unit" in record:
            payloads[entry.memory_id] = unit_from_dict(record["unit"])
        else:
            payloads[entry.memory_id] = SubtaskMemory.from_dict(record["subtask"])
    return MemoryBank(entries, payloads, provider_name, dim, kind, agent_name)


def load_banks(path: str | os.PathLike, expected_dim: int | None = None) -> Banks:
    root = Path(path)
    manifest = read_manifest(root)
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"bank schema {manifest.get('schema_version')} != supported {SCHEMA_VERSION}"
        )
    dim = int(manifest["dim"])
    if expected_dim is not None and dim != expected_dim:
        raise DimMismatchOnLoad(f"bank built with dim {dim}, configuration expects {expected_dim}")
    provider_name = manifest["provider"]
    try:
        global_text = (root / "global.jsonl").read_text(encoding="utf-8")
        agent_texts = {
            p.stem: p.read_text(encoding="utf-8") for p in sorted((root / "agents").glob("*.jsonl"))
        }
    except OSError as exc:
        raise IoFailure(f"cannot read bank files in {root}: {exc}") from exc
    if _content_hash(global_text, agent_texts) != manifest["content_hash"]:
        raise IoFailure(f"bank files in {root} do not match the manifest content hash")
    global_bank = _parse_bank(global_text, provider_name, dim, FULL_TASK, None)
    agent_banks = {
        name: _parse_bank(text, provider_name, dim, SUBTASK, name)
        for name, text in agent_texts.items()
    }
    return Banks(global_bank, agent_banks)
