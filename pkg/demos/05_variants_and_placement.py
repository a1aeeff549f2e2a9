"""
Where memory goes
=================

Three ways to pick memories (vanilla, dynamic, query rewrite) times five
placements. For one task we look at which prompts actually carried a memory
block.
"""

from legomem import HashEmbedder, RunSettings, load_banks, run_task
from legomem.harness import builtin_bank_path
from legomem.office import load_suite
from legomem.retrieval import PLACEMENTS, VARIANTS
from legomem.scripted import golden_team

suite = load_suite("builtin")
banks = load_banks(builtin_bank_path())
provider = HashEmbedder()
fixture = next(f for f in suite if f.task_id == "l2_email_to_project_log")
team = golden_team(fixture)


def carried(result, purpose):
    prompts = [e["messages"][-1]["content"] for e in result.transcript.events
               if e["type"] == "model_call" and e["purpose"] == purpose]
    return "yes" if any("<memories>" in p for p in prompts) else "-"


print(f"{'variant':14}{'placement':26}{'plan':>6}{'step':>6}{'agent':>7}")
for variant in VARIANTS:
    for placement in PLACEMENTS:
        r = run_task(fixture, banks, RunSettings(variant=variant, placement=placement), team, provider)
        print(f"{variant:14}{placement:26}{carried(r, 'plan'):>6}{carried(r, 'step'):>6}{carried(r, 'act'):>7}")

# %%
# The dynamic variant asks the agent bank again at every step.
r = run_task(fixture, banks, RunSettings(variant="dynamic"), team, provider)
for e in r.transcript.events:
    if e["type"] == "dynamic_retrieval":
        print(e["agent"], "|", e["query"], "->", e["memory_ids"])

# %%
# Query rewrite drafts a plan first and looks up each draft step.
r = run_task(fixture, banks, RunSettings(variant="query_rewrite"), team, provider)
alloc = next(e for e in r.transcript.events if e["type"] == "allocation")
print(alloc["draft_plan"])
print({a: ids for a, ids in alloc["agent_memory_ids"].items() if ids})
