"""
One task, step by step
======================

The orchestrator plans, delegates one subtask at a time and finishes with an
answer. Scripted clients replay the reference solution so the whole loop runs
offline; every prompt and action lands in the transcript.
"""

from collections import Counter

from legomem import HashEmbedder, RunSettings, load_banks, run_task
from legomem.harness import builtin_bank_path
from legomem.office import load_suite
from legomem.orchestrator import replay_actions
from legomem.scripted import golden_team, stall_team

suite = {f.task_id: f for f in load_suite("builtin")}
banks = load_banks(builtin_bank_path())
provider = HashEmbedder()

fixture = suite["l3_minutes_pipeline"]
print(fixture.description)

result = run_task(fixture, banks, RunSettings(), golden_team(fixture), provider)
print(result.success, result.steps_executed, "steps", result.termination)
print(Counter(e["type"] for e in result.transcript.events))

for e in result.transcript.events:
    if e["type"] == "directive" and e["kind"] == "delegate":
        print(f"  step {e['step']}: {e['agent']} <- {e['subtask']}")
print("answer:", result.final_answer)

# %%
# The transcript is enough to rebuild the final workspace.
print(replay_actions(fixture, result.transcript).content_hash() == result.final_workspace_hash)

# %%
# An orchestrator that keeps asking for the same thing gets caught and replans.
fixture = suite["l2_cancel_sync_notify"]
for replanning in (True, False):
    r = run_task(fixture, None, RunSettings(replanning=replanning), stall_team(fixture))
    print(f"replanning={replanning}: success={r.success} steps={r.steps_executed} replans={r.replan_count} ({r.termination})")
