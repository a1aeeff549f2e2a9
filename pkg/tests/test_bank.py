import json
import math
import random
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from legomem.bank import (
    FULL_TASK,
    MemoryBank,
    build_banks,
    load_banks,
    read_manifest,
    retrieve,
    save_banks,
)
from legomem.embedding import HashEmbedder
from legomem.errors import DimensionMismatch, DimMismatchOnLoad, EmptyQuery, IoFailure, SchemaVersionMismatch
from legomem.memory import extract_subtask_memories

from conftest import memory_units

VOCAB = "add meeting calendar email send sheet total budget report notes draft bob carol dave".split()


def oracle_top_k(query_vec, bank, k):
    """Independent full scan: python dot products, sort by (-score, id)."""
    scored = []
    for entry in bank.entries:
        s = math.fsum(float(a) * float(b) for a, b in zip(query_vec, entry.embedding))
        scored.append((-round(min(1.0, max(-1.0, s)), 12), entry.memory_id))
    scored.sort()
    return [(mid, -neg) for neg, mid in scored[:k]]


def random_bank(rng, provider, size):
    # a small vocabulary makes duplicate texts, and so exact ties, common
    items = []
    for i in range(size):
        text = " ".join(rng.choice(VOCAB) for _ in range(rng.randint(1, 4)))
        items.append((f"m{rng.randrange(10**6):06d}-{i}", text, text))
    return MemoryBank.from_items(items, provider, FULL_TASK)


def test_retrieval_matches_oracle_on_100_banks():
    rng = random.Random(20240517)
    provider = HashEmbedder()
    start = time.perf_counter()
    for _ in range(100):
        bank = random_bank(rng, provider, rng.randint(0, 1000))
        query = " ".join(rng.choice(VOCAB) for _ in range(rng.randint(1, 4)))
        k = rng.randint(1, 20)
        got = retrieve(bank, query, k, provider)
        want = oracle_top_k(provider.embed(query), bank, k)
        assert [h.memory_id for h in got] == [m for m, _ in want]
        assert [h.score for h in got] == pytest.approx([s for _, s in want], abs=1e-12)
    assert time.perf_counter() - start < 10


def test_ties_break_by_id(provider):
    bank = MemoryBank.from_items([("b", "send email", 1), ("a", "send email", 2), ("c", "send email", 3)], provider)
    assert [h.memory_id for h in retrieve(bank, "email", 3, provider)] == ["a", "b", "c"]


def test_scores_non_increasing_and_bounded(provider):
    rng = random.Random(3)
    bank = random_bank(rng, provider, 300)
    hits = retrieve(bank, "budget report for carol", 300, provider)
    scores = [h.score for h in hits]
    assert scores == sorted(scores, reverse=True)
    assert all(-1.0 <= s <= 1.0 for s in scores)
    assert len(hits) == 300


def test_empty_bank_and_k_boundaries(provider):
    empty = MemoryBank.from_items([], provider)
    assert retrieve(empty, "anything", 5, provider) == []
    bank = MemoryBank.from_items([("x", "add meeting", 0), ("y", "send email", 0)], provider)
    assert len(retrieve(bank, "meeting", 10, provider)) == 2


def test_retrieve_errors(provider):
    bank = MemoryBank.from_items([("x", "add meeting", 0)], provider)
    with pytest.raises(EmptyQuery):
        retrieve(bank, "  ", 1, provider)
    with pytest.raises(DimensionMismatch):
        retrieve(bank, "meeting", 1, HashEmbedder(dim=64))


def test_retrieval_deterministic(fixture_bank, provider):
    a = retrieve(fixture_bank.global_bank, "email Dave about the sync", 5, provider)
    b = retrieve(fixture_bank.global_bank, "email Dave about the sync", 5, provider)
    assert a == b


@settings(max_examples=30, deadline=None)
@given(st.lists(memory_units(), min_size=0, max_size=6, unique_by=lambda u: u.id))
def test_build_banks_partition(units):
    units = [u for u in units if u.task_description.strip() and all(s.description.strip() for s in u.subtasks)]
    provider = HashEmbedder()
    try:
        banks = build_banks(units, provider)
    except Exception as exc:  # texts without alphanumeric tokens cannot be embedded
        assert type(exc).__name__ == "EmptyText"
        return
    assert len(banks.global_bank) == len(units)
    subs = [s for u in units for s in extract_subtask_memories(u)]
    assert banks.counts()["subtask"] == len(subs)
    seen = [e.memory_id for b in banks.agent_banks.values() for e in b]
    assert sorted(seen) == sorted(s.id for s in subs)
    for agent, bank in banks.agent_banks.items():
        assert all(bank.payloads[e.memory_id].agent_name == agent for e in bank)
        assert all(e.index_text == bank.payloads[e.memory_id].description for e in bank)
    for entry in banks.global_bank:
        assert entry.index_text == banks.global_bank.payloads[entry.memory_id].task_description


def test_empty_build(provider):
    banks = build_banks([], provider)
    assert len(banks.global_bank) == 0 and banks.agent_banks == {}


def test_duplicate_ids_rejected(fixture_bank, provider):
    unit = next(iter(fixture_bank.global_bank.payloads.values()))
    with pytest.raises(ValueError):
        build_banks([unit, unit], provider)


def test_save_load_round_trip(tmp_path, fixture_bank):
    manifest = save_banks(fixture_bank, tmp_path / "bank")
    loaded = load_banks(tmp_path / "bank")
    assert loaded.global_bank == fixture_bank.global_bank
    assert loaded.agent_banks == fixture_bank.agent_banks
    for a, b in zip(loaded.global_bank.entries, fixture_bank.global_bank.entries):
        assert a.embedding.tobytes() == b.embedding.tobytes()
    assert manifest == read_manifest(tmp_path / "bank")
    assert loaded.content_hash() == manifest["content_hash"]


def test_fixture_bank_counts_match_manifest(fixture_bank):
    from legomem.harness import builtin_bank_path

    manifest = read_manifest(builtin_bank_path())
    assert fixture_bank.counts() == manifest["counts"]
    units = fixture_bank.global_bank.payloads.values()
    assert manifest["counts"]["subtask"] == sum(len(u.subtasks) for u in units)


def test_load_empty_dir(tmp_path):
    with pytest.raises(IoFailure):
        load_banks(tmp_path)


def test_load_dim_guard(tmp_path, fixture_bank):
    save_banks(fixture_bank, tmp_path)
    with pytest.raises(DimMismatchOnLoad):
        load_banks(tmp_path, expected_dim=1536)


def test_load_schema_guard(tmp_path, fixture_bank):
    save_banks(fixture_bank, tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    manifest["schema_version"] = 99
    (tmp_path / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(SchemaVersionMismatch):
        load_banks(tmp_path)


def test_tampered_bank_detected(tmp_path, fixture_bank):
    save_banks(fixture_bank, tmp_path)
    path = tmp_path / "global.jsonl"
    path.write_text(path.read_text().replace("Bob", "Rob", 1))
    with pytest.raises(IoFailure):
        load_banks(tmp_path)


def test_bank_matrix_read_only(fixture_bank):
    with pytest.raises(ValueError):
        fixture_bank.global_bank.matrix[0, 0] = 1.0
    assert isinstance(fixture_bank.global_bank.matrix, np.ndarray)
