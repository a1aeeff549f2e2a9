import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from legomem.errors import AgentParseFailure, DirectiveParseFailure, PlanParseFailure, UnknownAgent
from legomem.gateway import ScriptedClient
from legomem.memory import render_memories
from legomem.office import reset
from legomem.orchestrator import (
    Directive,
    LedgerEntry,
    OrchestrationState,
    Plan,
    RunSettings,
    Transcript,
    detect_stall,
    execute_subtask,
    make_initial_plan,
    next_directive,
    replan,
    replay_actions,
    run_task,
)
from legomem.retrieval import MemoryAllocation, allocate_dynamic_init, allocate_vanilla, apply_placement
from legomem.scripted import golden_team, stall_team

MEMORY_SECTION = re.compile(r"Relevant (?:subtask )?memories from past (?:successful )?executions:\n<memories>.*?</memories>\n", re.DOTALL)
EMPTY = MemoryAllocation(orchestrator_scope="none")


def prompts_of(result, purpose=None):
    return [
        e["messages"][-1]["content"]
        for e in result.transcript.events
        if e["type"] == "model_call" and (purpose is None or e["purpose"] == purpose)
    ]


def by_id(suite, task_id):
    return next(f for f in suite if f.task_id == task_id)


def test_initial_plan_parsed():
    client = ScriptedClient([(("[plan-request]",), "Plan:\n1. Check calendar\n2. Add event\n3) Confirm")])
    plan = make_initial_plan("Add a meeting", EMPTY, client)
    assert plan == Plan(("Check calendar", "Add event", "Confirm"), "initial", 0)


def test_plan_retry_then_failure():
    client = ScriptedClient([(("[plan-retry]",), "1. ok"), (("",), "no list here")])
    assert make_initial_plan("t", EMPTY, client).steps == ("ok",)
    with pytest.raises(PlanParseFailure):
        make_initial_plan("t", EMPTY, ScriptedClient([(("",), "still no list")]))


def test_plan_prompt_memory_block(full_bank, provider):
    transcript = Transcript()
    client = ScriptedClient([(("[plan-request]",), "1. a")])
    alloc = allocate_vanilla("Email Dave about the budget total", full_bank, provider)
    make_initial_plan("Email Dave about the budget total", alloc, client, transcript=transcript)
    prompt = transcript.events[0]["messages"][0]["content"]
    assert render_memories(alloc.orchestrator_memories) in prompt
    assert prompt.count("High-level plan:") == 5
    for unit in alloc.orchestrator_memories:
        assert unit.high_level_plan in prompt

    transcript = Transcript()
    make_initial_plan("x", apply_placement(alloc, "none"), client, transcript=transcript)
    assert "<memories>" not in transcript.events[0]["messages"][0]["content"]


def _state(task="t", n_steps=0, budget=30):
    state = OrchestrationState(task, Plan(("a",)), budget)
    for i in range(n_steps):
        state.record(LedgerEntry(Directive("delegate", f"step {i}", "email_agent"), "ok", [True]))
    return state


def test_directive_parsing():
    finish = ScriptedClient([(("[next-step]",), "Done. <final_answer>It is 42.</final_answer>")])
    assert next_directive(_state(), EMPTY, finish) == Directive("finish", final_answer="It is 42.")
    delegate = ScriptedClient([(("[next-step]",), "<agent>calendar_agent</agent><subtask>Add Bob's meeting at 10:30</subtask>")])
    d = next_directive(_state(), EMPTY, delegate)
    assert (d.kind, d.agent_name, d.subtask_description) == ("delegate", "calendar_agent", "Add Bob's meeting at 10:30")


def test_unknown_agent_retried_once():
    client = ScriptedClient(
        [(("[directive-retry]",), "<agent>email_agent</agent><subtask>x</subtask>"), (("[next-step]",), "<agent>fax_agent</agent><subtask>x</subtask>")]
    )
    assert next_directive(_state(), EMPTY, client).agent_name == "email_agent"
    stubborn = ScriptedClient([(("",), "<agent>fax_agent</agent><subtask>x</subtask>")])
    with pytest.raises(UnknownAgent):
        next_directive(_state(), EMPTY, stubborn)
    with pytest.raises(DirectiveParseFailure):
        next_directive(_state(), EMPTY, ScriptedClient([(("",), "hmm")]))


def test_step_prompt_respects_scope(full_bank, provider):
    alloc = allocate_vanilla("budget report", full_bank, provider)
    client = ScriptedClient([(("[next-step]",), "<final_answer>x</final_answer>")])
    for mode, present in [("orch_and_agent", True), ("orch_planning_and_agent", False)]:
        t = Transcript()
        next_directive(_state("budget report", 2), apply_placement(alloc, mode), client, transcript=t)
        prompt = t.events[0]["messages"][0]["content"]
        assert ("<memories>" in prompt) is present
        assert "Steps completed so far: 2." in prompt and "2. email_agent <- step 1" in prompt


def _agent(reply, summary="<summary>done</summary>"):
    return ScriptedClient([(("[agent-act]",), reply), (("[agent-summarize]",), summary)])


def test_execute_valid_action(suite):
    fx = by_id(suite, "l1_calendar_add_meeting")
    ws = reset(fx)
    before = len(ws["calendars"]["Bob"])
    act = '<think>add it</think><action>{"app": "calendar", "action": "create_event", "user": "Bob", "summary": "Sync", "time_start": "2024-05-17 10:30", "time_end": "2024-05-17 11:00"}</action>'
    obs, summary, stats = execute_subtask(Directive("delegate", "add", "calendar_agent"), EMPTY, ws, _agent(act))
    assert (stats.total, stats.failed) == (1, 0)
    assert len(ws["calendars"]["Bob"]) == before + 1
    assert obs.startswith("Created event for Bob") and summary == "done"


def test_execute_failing_actions_are_counted(suite):
    ws = reset(suite[0])
    reply = (
        '<think>a</think><action>{"app": "fax", "action": "send"}</action>'
        '<think>b</think><action>not json</action>'
        '<think>c</think><action>{"app": "email", "action": "list_emails", "user": "Bob"}</action>'
    )
    t = Transcript()
    obs, _, stats = execute_subtask(Directive("delegate", "x", "calendar_agent"), EMPTY, ws, _agent(reply), transcript=t)
    assert (stats.total, stats.failed) == (3, 3)
    lines = obs.splitlines()
    assert lines[0].startswith("Error (AppNotAllowed)") and lines[1].startswith("Error (MalformedAction)")
    assert [e["failed"] for e in t.events if e["type"] == "action"] == [True, True, True]


def test_summary_only_and_parse_failure(suite):
    ws = reset(suite[0])
    _, summary, stats = execute_subtask(Directive("delegate", "x", "email_agent"), EMPTY, ws, _agent("<summary>nothing to do</summary>"))
    assert summary == "nothing to do" and stats.total == 0
    with pytest.raises(AgentParseFailure):
        execute_subtask(Directive("delegate", "x", "email_agent"), EMPTY, ws, _agent("I am confused"))


def test_dynamic_issues_one_query_for_selected_agent(full_bank, provider, suite):
    alloc = allocate_dynamic_init("t", full_bank, provider)
    t = Transcript()
    execute_subtask(
        Directive("delegate", "Send Dave the total", "email_agent"), alloc, reset(suite[0]), _agent("<summary>s</summary>"),
        transcript=t, banks=full_bank, provider=provider,
    )
    queries = [e for e in t.events if e["type"] == "dynamic_retrieval"]
    assert len(queries) == 1 and queries[0]["agent"] == "email_agent"
    assert "Past subtask [email_agent]" in t.events[-2]["messages"][0]["content"]


def test_stall_detection():
    def ledger(subtasks):
        state = _state()
        for s in subtasks:
            state.record(LedgerEntry(Directive("delegate", s, "word_agent"), "", []))
        return state

    assert detect_stall(ledger(["same"] * 3))
    assert not detect_stall(ledger([f"s{i}" for i in range(6)]))
    assert detect_stall(ledger(["Open  the Doc", "x", "open the doc", "y", "OPEN THE DOC "]))
    assert not detect_stall(ledger(["a", "a", "b", "c", "d", "e", "f", "a"]))


def test_replan_revision_and_ledger_tail():
    state = _state(n_steps=3)
    state.stall_window = ["x", "x", "x"]
    t = Transcript()
    client = ScriptedClient([(("[replan-request]", "Current plan (revision 0):", "3. email_agent <- step 2"), "1. new a\n2. new b")])
    plan = replan(state, EMPTY, client, transcript=t)
    assert (plan.revision, plan.origin, plan.steps) == (1, "replanned", ("new a", "new b"))
    assert state.plan is plan and state.stall_window == []


def test_stall_scenario_replan_vs_no_replan(suite):
    fx = by_id(suite, "l2_cancel_sync_notify")
    rescued = run_task(fx, None, RunSettings(), stall_team(fx))
    assert rescued.success and rescued.replan_count == 1 and rescued.termination == "finished"
    stuck = run_task(fx, None, RunSettings(replanning=False), stall_team(fx))
    assert not stuck.success and stuck.termination == "budget_exhausted" and stuck.steps_executed == 30


def test_replan_limit_ends_run(suite):
    fx = by_id(suite, "l2_cancel_sync_notify")
    orch = ScriptedClient([(("[plan-request]",), "1. look"), (("[replan-request]",), "1. look"), (("[next-step]",), "<agent>system_agent</agent><subtask>look</subtask>")])
    agents = ScriptedClient([(("[agent-act]",), "<summary>nothing</summary>")])
    from legomem.orchestrator import Team

    result = run_task(fx, None, RunSettings(), Team(orch, agents))
    assert result.termination == "replan_limit" and result.replan_count == 2 and result.steps_executed == 9


def test_golden_calendar_run(suite, fixture_bank, provider):
    fx = by_id(suite, "l1_calendar_add_meeting")
    result = run_task(fx, fixture_bank, RunSettings(), golden_team(fx), provider)
    assert result.success and result.steps_executed == 2
    assert result.transcript.outcome == "success"
    assert result.transcript.final_answer == fx.reference.final_answer


def test_budget_one_exhausts(suite):
    fx = by_id(suite, "l1_calendar_add_meeting")
    result = run_task(fx, None, RunSettings(budget=1), golden_team(fx))
    assert not result.success and result.termination == "budget_exhausted" and result.steps_executed == 1
    assert result.final_answer == ""


def test_in_task_failures_do_not_raise(suite):
    fx = suite[0]
    from legomem.orchestrator import Team

    junk = Team(ScriptedClient([(("",), "no plan")]), ScriptedClient([]))
    result = run_task(fx, None, RunSettings(), junk)
    assert not result.success and result.termination == "PlanParseFailure"
    missing = Team(ScriptedClient([(("[plan-request]",), "1. x")]), ScriptedClient([]))
    assert run_task(fx, None, RunSettings(), missing).termination == "error:ScriptExhausted"


def test_placement_none_only_removes_memory_blocks(suite, fixture_bank, provider):
    fx = by_id(suite, "l3_minutes_pipeline")
    team = golden_team(fx)
    with_mem = run_task(fx, fixture_bank, RunSettings(placement="orch_and_agent"), team, provider)
    without = run_task(fx, fixture_bank, RunSettings(placement="none"), team, provider)

    def scrub(result):
        events = []
        for e in result.transcript.events:
            if e["type"] == "allocation":
                continue
            if e["type"] == "task_start":
                e = {k: v for k, v in e.items() if k != "placement"}
            if e["type"] == "model_call":
                e = dict(e, messages=[dict(m, content=MEMORY_SECTION.sub("", m["content"])) for m in e["messages"]])
            events.append(e)
        return events

    assert any("<memories>" in p for p in prompts_of(with_mem))
    assert not any("<memories>" in p for p in prompts_of(without))
    assert scrub(with_mem) == scrub(without)


def test_banks_untouched_by_runs(suite, fixture_bank, provider):
    before = fixture_bank.content_hash()
    team = golden_team(suite)
    for variant in ("vanilla", "dynamic", "query_rewrite"):
        for fx in suite[:3]:
            run_task(fx, fixture_bank, RunSettings(variant=variant), team, provider)
    assert fixture_bank.content_hash() == before


def test_replay_reproduces_final_state(suite, fixture_bank, provider):
    fx = by_id(suite, "l3_budget_to_report")
    result = run_task(fx, fixture_bank, RunSettings(), golden_team(fx), provider)
    assert replay_actions(fx, result.transcript).content_hash() == result.final_workspace_hash


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.sampled_from(["vanilla", "dynamic", "query_rewrite"]), st.sampled_from(range(12)))
def test_budget_safety(budget, variant, index):
    from legomem.bank import load_banks
    from legomem.embedding import HashEmbedder
    from legomem.harness import builtin_bank_path
    from legomem.office import load_suite

    fx = load_suite("builtin")[index]
    result = run_task(fx, load_banks(builtin_bank_path()), RunSettings(variant=variant, budget=budget), golden_team(fx), HashEmbedder())
    assert result.steps_executed <= budget
    assert result.failed_action_count <= result.total_action_count
    if budget > len(fx.reference.steps):
        assert result.success and result.termination == "finished"
    else:
        assert result.termination == "budget_exhausted"
    assert result.transcript.outcome == ("success" if result.success and result.final_answer else "failure")
