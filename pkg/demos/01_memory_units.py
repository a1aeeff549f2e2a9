"""
Memory units
============

A memory unit is one past task boiled down: the task text, a plan, and a
trace per subtask of what the responsible agent thought and did. Curators
write them between start/end tags; everything else in the reply is ignored.
"""

from legomem import extract_subtask_memories, parse_memory_unit, render_memories, serialize_unit
from legomem.memory import END_TAG, START_TAG
from legomem.prompts import CURATION_EXAMPLE

# the worked example that ships with the curation prompt
reply = "Sure, here is the memory.\n" + START_TAG + CURATION_EXAMPLE + END_TAG
unit = parse_memory_unit(reply, task_description="Add a meeting to Bob's calendar")
print(unit.id)
print(unit.high_level_plan)

for record in unit.subtasks:
    print(f"[{record.agent_name}] {record.description}")
    for pair in record.steps:
        print("   think :", pair.think)
        print("   action:", pair.action)

# %%
# Serialising and parsing again gives back the same unit, id included.
again = parse_memory_unit(serialize_unit(unit), task_description=unit.task_description)
print(again == unit)

# %%
# Agents see subtask slices, not whole units.
for sub in extract_subtask_memories(unit):
    print(sub.id, "->", sub.agent_name, "|", sub.description)

# %%
# The same block rendered for a prompt, with and without the reasoning.
print(render_memories([unit]))
print()
print(render_memories([unit], include_reasoning=False))
