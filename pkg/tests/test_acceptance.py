"""The ten acceptance criteria, each printing one PASS/FAIL line."""

import contextlib
import math
import random
import re
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from legomem.bank import FULL_TASK, MemoryBank, retrieve
from legomem.curation import curate_corpus
from legomem.embedding import HashEmbedder
from legomem.gateway import ScriptedClient
from legomem.harness import compute_metrics, golden_logs, metrics_from_rows
from legomem.logs import ExecutionLog
from legomem.memory import END_TAG, START_TAG, action_to_text, parse_memory_unit, serialize_unit
from legomem.orchestrator import RunSettings, TaskResult, Team, replay_actions, run_task
from legomem.prompts import CURATION_EXAMPLE
from legomem.retrieval import DEFAULT_K_AGENT, DEFAULT_K_ORCH, PLACEMENTS
from legomem.scripted import RuleBasedCurator, golden_team, null_team

from conftest import memory_units


@pytest.fixture
def verdict(capsys):
    @contextlib.contextmanager
    def check(number, title):
        try:
            yield
        except BaseException:
            with capsys.disabled():
                print(f"\nFAIL  criterion {number:>2}: {title}")
            raise
        with capsys.disabled():
            print(f"\nPASS  criterion {number:>2}: {title}")

    return check


def user_prompts(result, purpose=None):
    """Every user-role message sent to a model during the run."""
    out = []
    for e in result.transcript.events:
        if e["type"] == "model_call" and (purpose is None or e["purpose"] == purpose):
            out.extend(m["content"] for m in e["messages"] if m["role"] == "user")
    return out


def last_prompts(result, purpose):
    return [e["messages"][-1]["content"] for e in result.transcript.events if e["type"] == "model_call" and e["purpose"] == purpose]


def oracle_ids(bank, query, k, provider):
    q = provider.embed(query)
    scored = sorted(
        ((-round(math.fsum(float(a) * float(b) for a, b in zip(q, e.embedding)), 12), e.memory_id) for e in bank.entries)
    )
    return [mid for _, mid in scored[:k]]


# 1 ---------------------------------------------------------------------------

def test_criterion_01_retrieval_oracle(verdict):
    with verdict(1, "retrieval equals brute-force oracle on 100 random banks, < 10 s"):
        rng = random.Random(1)
        provider = HashEmbedder()
        vocab = "add meeting calendar email send sheet total budget report draft bob carol".split()
        start = time.perf_counter()
        for _ in range(100):
            items = []
            for i in range(rng.randint(0, 1000)):
                text = " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 4)))
                items.append((f"m{rng.randrange(10**6):06d}-{i}", text, None))
            bank = MemoryBank.from_items(items, provider, FULL_TASK)
            query = " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 3)))
            k = rng.randint(1, 25)
            assert [h.memory_id for h in retrieve(bank, query, k, provider)] == oracle_ids(bank, query, k, provider)
        elapsed = time.perf_counter() - start
        assert elapsed < 10, f"{elapsed:.1f} s"


# 2 ---------------------------------------------------------------------------

def test_criterion_02_memory_round_trip(verdict):
    seen = []

    @settings(max_examples=500, deadline=None, database=None)
    @given(memory_units())
    def round_trip(unit):
        seen.append(unit.id)
        assert parse_memory_unit(serialize_unit(unit), task_description=unit.task_description, source_log_id=unit.source_log_id) == unit

    with verdict(2, "500 generated units round-trip; the worked curation example gives 2 calendar_agent subtasks"):
        round_trip()
        assert len(seen) >= 500
        bob = parse_memory_unit(f"{START_TAG}{CURATION_EXAMPLE}{END_TAG}")
        assert [s.agent_name for s in bob.subtasks] == ["calendar_agent", "calendar_agent"]


# 3 ---------------------------------------------------------------------------

def test_criterion_03_golden_run(verdict, suite, fixture_bank, provider):
    with verdict(3, "golden suite 12/12 with identical transcripts twice; null scripts 0/12; < 30 s"):
        start = time.perf_counter()
        cfg = RunSettings(variant="vanilla", placement="orch_and_agent")
        first = [run_task(f, fixture_bank, cfg, golden_team(suite), provider) for f in suite]
        second = [run_task(f, fixture_bank, cfg, golden_team(suite), provider) for f in suite]
        assert sum(r.success for r in first) == 12
        assert [r.transcript.to_json() for r in first] == [r.transcript.to_json() for r in second]
        null = [run_task(f, fixture_bank, cfg, null_team(suite), provider) for f in suite]
        assert sum(r.success for r in null) == 0
        assert time.perf_counter() - start < 30


# 4 ---------------------------------------------------------------------------

EXPECTED_PLACEMENT = {
    "orch_and_agent": (True, True, True),
    "orch_planning_and_agent": (True, False, True),
    "orch_only": (True, True, False),
    "agent_only": (False, False, True),
    "none": (False, False, False),
}


def test_criterion_04_placement_modes(verdict, suite, fixture_bank, provider):
    with verdict(4, "memory presence in planning/step/agent prompts matches all 15 mode-table cells"):
        assert set(EXPECTED_PLACEMENT) == set(PLACEMENTS)
        team = golden_team(suite)
        cells = 0
        for mode, (plan_on, step_on, agent_on) in EXPECTED_PLACEMENT.items():
            results = [run_task(f, fixture_bank, RunSettings(placement=mode), team, provider) for f in suite]
            assert all(r.success for r in results), mode
            plan = [p for r in results for p in last_prompts(r, "plan")]
            step = [p for r in results for p in last_prompts(r, "step")]
            for prompts, expected in ((plan, plan_on), (step, step_on)):
                assert prompts and all(("<memories>" in p) is expected for p in prompts), mode
                cells += 1
            # an agent prompt carries memory exactly when the mode allows it and the agent was allocated some
            with_memory = 0
            for r in results:
                alloc = next(e for e in r.transcript.events if e["type"] == "allocation")
                for e in r.transcript.events:
                    if e["type"] == "model_call" and e["purpose"] == "act":
                        agent = e["role"].split(":", 1)[1]
                        expected = agent_on and bool(alloc["agent_memory_ids"].get(agent))
                        assert ("<memories>" in e["messages"][-1]["content"]) is expected, (mode, agent)
                        with_memory += expected
            assert (with_memory > 0) is agent_on, mode
            cells += 1
        assert cells == 15


# 5 ---------------------------------------------------------------------------

def test_criterion_05_variant_mechanics(verdict, suite, fixture_bank, provider):
    with verdict(5, "dynamic queries once per step against the oracle; query rewrite allocates and falls back"):
        team = golden_team(suite)
        for fx in suite:
            result = run_task(fx, fixture_bank, RunSettings(variant="dynamic"), team, provider)
            queries = [e for e in result.transcript.events if e["type"] == "dynamic_retrieval"]
            assert len(queries) == result.steps_executed
            for q in queries:
                bank = fixture_bank.agent_banks.get(q["agent"])
                want = oracle_ids(bank, q["query"], DEFAULT_K_AGENT, provider) if bank is not None else []
                assert q["memory_ids"] == want

        for fx in suite:
            result = run_task(fx, fixture_bank, RunSettings(variant="query_rewrite"), team, provider)
            alloc = next(e for e in result.transcript.events if e["type"] == "allocation")
            assert alloc["draft_plan"] == list(fx.reference.plan) and alloc["fallback"] is None
            for agent, ids in alloc["agent_memory_ids"].items():
                bank_ids = {e.memory_id for e in fixture_bank.agent_banks.get(agent, ())}
                assert set(ids) <= bank_ids and len(ids) <= DEFAULT_K_AGENT and len(set(ids)) == len(ids)
            assert result.success

        fx = suite[0]
        broken = Team(team.orchestrator, team.agents, ScriptedClient([(("",), "no tags at all")]))
        result = run_task(fx, fixture_bank, RunSettings(variant="query_rewrite"), broken, provider)
        alloc = next(e for e in result.transcript.events if e["type"] == "allocation")
        assert alloc["fallback"].startswith("vanilla") and alloc["draft_plan"] is None
        assert result.success and result.termination == "finished"


# 6 ---------------------------------------------------------------------------

def test_criterion_06_default_k(verdict, suite, fixture_bank, provider):
    with verdict(6, "defaults k_orch=5, k_agent=3 show up as 5 orchestrator and at most 3 agent memories"):
        assert (RunSettings().k_orch, RunSettings().k_agent) == (DEFAULT_K_ORCH, DEFAULT_K_AGENT) == (5, 3)
        team = golden_team(suite)
        per_agent = []
        for fx in suite:
            result = run_task(fx, fixture_bank, RunSettings(), team, provider)
            for prompt in last_prompts(result, "plan") + last_prompts(result, "step"):
                assert prompt.count("Past task:") == 5
            for prompt in last_prompts(result, "act"):
                per_agent.append(prompt.count("Past subtask ["))
        assert max(per_agent) == 3 and min(per_agent) >= 0


# 7 ---------------------------------------------------------------------------

# task level success steps failed total, tallied by hand
HAND_SET = [
    (1, True, 2, 0, 2),
    (1, False, 5, 1, 4),
    (2, True, 3, 1, 3),
    (2, True, 2, 0, 2),
    (3, False, 30, 4, 10),
    (3, True, 4, 2, 6),
]
HAND_COUNTS = {
    "1": (50.0, 3.5, 1 / 6),
    "2": (100.0, 2.5, 1 / 5),
    "3": (50.0, 17.0, 6 / 16),
    "overall": (66.67, 46 / 6, 8 / 27),
}


def _transcript(task_id, success, failed, total):
    events = [{"type": "action", "step": 0, "failed": i < failed} for i in range(total)]
    if success:
        events.append({"type": "final_answer", "text": "done"})
    return ExecutionLog(task_id, "t", events, "success" if success else "failure")


def test_criterion_07_metrics(verdict, suite):
    by_level = {lvl: [f for f in suite if f.level == lvl] for lvl in (1, 2, 3)}
    fixtures, results = [], []
    for i, (level, ok, steps, failed, total) in enumerate(HAND_SET):
        fx = by_level[level][i % 2]
        fixtures.append(fx)
        log = _transcript(fx.task_id, ok, failed, total)
        counted = sum(e["failed"] for e in log.events_of("action")), len(log.events_of("action"))
        results.append(TaskResult(fx.task_id, ok, "done", steps, *counted, 0, "finished", "", log))

    @settings(max_examples=200, deadline=None, database=None)
    @given(st.lists(st.tuples(st.sampled_from([1, 2, 3]), st.booleans(), st.integers(0, 30), st.integers(0, 50), st.integers(0, 50)), min_size=1, max_size=40))
    def fuzzed(rows):
        data = [
            {"level": lvl, "success": ok, "steps_executed": s, "failed_action_count": min(a, b), "total_action_count": max(a, b)}
            for lvl, ok, s, a, b in rows
        ]
        report = metrics_from_rows(data)
        for m in report.levels.values():
            assert 0.0 <= m.step_failure_rate <= 1.0
            assert 0.0 <= m.success_rate <= 100.0

    with verdict(7, "metrics match the hand-tallied 6-transcript set; fuzzed failure rates stay in [0,1]"):
        report = compute_metrics(results, fixtures)
        assert set(report.levels) == set(HAND_COUNTS)
        for level, (rate, steps, sfr) in HAND_COUNTS.items():
            m = report.levels[level]
            assert m.success_rate == pytest.approx(rate, abs=0.01)
            assert m.avg_steps == steps
            assert m.step_failure_rate == sfr
        assert report.levels["overall"].tasks == 6
        assert sum(int(r["steps_executed"]) for r in report.rows) == 46
        fuzzed()


# 8 ---------------------------------------------------------------------------

def test_criterion_08_curation_pipeline(verdict, suite, provider, tmp_path):
    logs = golden_logs(suite[:4])
    unparseable = logs[3].log_id
    logs.append(ExecutionLog("failed-run", "a task that went wrong", [{"type": "directive", "agent": "email_agent"}], "failure"))
    rule = RuleBasedCurator()

    class Curator:
        def complete(self, messages):
            if f'"log_id": "{unparseable}"' in messages[0].content:
                return "Here is what happened, in prose."
            return rule.complete(messages)

    with verdict(8, "5 logs (1 failed, 1 unparseable) give 3 units; kept + dropped = 4; re-run hash identical"):
        first = curate_corpus(logs, Curator(), provider, tmp_path / "a")
        second = curate_corpus(logs, Curator(), provider, tmp_path / "b")
        cur = first["curation"]
        assert first["counts"]["full_task"] == cur["kept"] == 3
        assert cur["filtered_successful"] == 4 and cur["kept"] + cur["dropped"] == 4
        assert cur["dropped_logs"][0]["log_id"] == unparseable
        assert first["content_hash"] == second["content_hash"]


# 9 ---------------------------------------------------------------------------

def test_criterion_09_replay(verdict, suite, fixture_bank, provider):
    with verdict(9, "replaying each golden transcript reproduces its final workspace hash"):
        team = golden_team(suite)
        for variant in ("vanilla", "dynamic", "query_rewrite"):
            for fx in suite:
                result = run_task(fx, fixture_bank, RunSettings(variant=variant), team, provider)
                assert result.success
                assert replay_actions(fx, result.transcript).content_hash() == result.final_workspace_hash


# 10 --------------------------------------------------------------------------

MEMORY_BLOCK = re.compile(r"<memories>\n.*?\n</memories>", re.DOTALL)
MEMORY_ID = re.compile(r"^### (?:Subtask memory|Memory) \d+ \((mem-[0-9a-f]+(?:\.s\d+)?)\)$", re.MULTILINE)


def _steps_of(memory_id, banks):
    if ".s" not in memory_id:
        return [p for s in banks.global_bank.payloads[memory_id].subtasks for p in s.steps]
    return next(b.payloads[memory_id].steps for b in banks.agent_banks.values() if memory_id in b.payloads)


def test_criterion_10_reasoning_toggle(verdict, suite, fixture_bank, provider):
    team = golden_team(suite)

    with verdict(10, "include_reasoning=false strips every think from memory blocks and keeps every action"):
        shown = 0
        for placement in ("orch_and_agent", "agent_only"):
            for fx in suite:
                on = run_task(fx, fixture_bank, RunSettings(placement=placement), team, provider)
                off = run_task(fx, fixture_bank, RunSettings(placement=placement, include_reasoning=False), team, provider)
                blocks_on = [b for p in user_prompts(on) for b in MEMORY_BLOCK.findall(p)]
                blocks_off = [b for p in user_prompts(off) for b in MEMORY_BLOCK.findall(p)]
                assert blocks_off and any("<think>" in b for b in blocks_on)
                for block in blocks_off:
                    assert "<think>" not in block and "</think>" not in block
                    for memory_id in MEMORY_ID.findall(block):
                        for pair in _steps_of(memory_id, fixture_bank):
                            assert action_to_text(pair.action) in block
                            if pair.think.strip():
                                assert pair.think not in block
                        shown += 1
        assert shown > 0
