"""Prompt templates for the curator, the query rewriter, the orchestrator and agents.

Placeholders use ``{name}`` and are filled with :func:`fill`; unknown brace
groups are left alone, so the JSON braces inside templates need no escaping.
Each orchestrator/agent template opens with a bracketed marker line
(``[plan-request]`` etc.) that scripted clients key on.
"""

from __future__ import annotations

import hashlib
import re

CURATION_EXAMPLE = """{
    "high_level_plan": "1. Check Bob's calendar availability for the specified time slot. 2. Add the meeting to Bob's calendar for 5/17/2024 from 10:30 a.m. to 11:00 a.m.",
    "subtasks": [
        {
            "agent": "calendar_agent",
            "description": "Check Bob's schedule on 5/17/2024 from 10:30 a.m. to 11:00 a.m to ensure there are no conflicts",
            "steps": "<think>I need to check Bob's existing calendar events to ensure no scheduling conflicts</think><action>{\\"app\\": \\"calendar\\", \\"action\\": \\"list_events\\", \\"username\\": \\"Bob\\"}</action>",
            "observations": "No events found for Bob - calendar is available for the requested time slot"
        },
        {
            "agent": "calendar_agent",
            "description": "Add a meeting to Bob's calendar on 5/17/2024 from 10:30 a.m. to 11:00 a.m",
            "steps": "<think>Since no conflicts were found, I can now create the new calendar event for Bob</think><action>{\\"app\\": \\"calendar\\", \\"action\\": \\"create_event\\", \\"user\\": \\"Bob\\", \\"summary\\": \\"Meeting\\", \\"time_start\\": \\"2024-05-17 10:30:00\\", \\"time_end\\": \\"2024-05-17 11:00:00\\"}</action>",
            "observations": "Successfully created a new event in Bob's calendar for the specified date and time"
        }
    ],
    "final_answer": "The meeting has been successfully added to Bob's calendar on 5/17/2024 from 10:30 a.m. to 11:00 a.m.",
    "reflections": "Task completed successfully without any conflicts or errors. The calendar check confirmed availability, and the meeting was created with proper date/time formatting."
}"""

CURATION_PROMPT = """From the following agent trajectory, generate memory that can be useful for future LLM agents' reference.

# Trajectory:
{full_trajectory}

# Example:
{start_tag}
{example}
{end_tag}

# Instructions:
Please analyze the trajectory and extract structured memory with clear thinking and well-formed actions. Use the following format for each subtask step:
<think>reasoning about what needs to be done and why this action is appropriate</think>
<action>{precise tool call command in structured format}</action>

The memory object should be formatted as follows:
{
    "high_level_plan": "<a string that lists the high-level steps taken and which agent performs each subtask>",
    "subtasks": [
        {
            "agent": "<copy the exact name of agent that performed the subtask>",
            "description": "<description of the subtask given by the orchestrator>",
            "steps": "<Copy the precise actions taken with think-action structure: <think>reasoning</think><action>{tool_call}</action>, repeat for each action. Omit some actions if there are too many similar commands (>10). Remove actions that yielded errors or were malformed.>",
            "observations": "<a very brief summary of the key observations from the function execution results>"
        },
        ...
    ],
    "final_answer": "<The final answer given by the orchestrator or answer agent>",
    "reflections": "<a concise summary that lists what was successful, what were specific failures, root cause of which action and how to avoid, if any>"
}

# Rules to follow:
1. Group together actions into subtasks if they are related and can be done together.
2. For each action in the steps field, use the think-action format with clear reasoning followed by structured tool calls.
3. When copying actions, remove function call IDs but keep the essential tool call structure.
4. Only include successful actions; omit actions that resulted in errors. If there are too many repeated similar actions, truncate and omit some, and if the action parameters (such as contents to write to a word document) are too long, you can summarize it.
5. Keep observations very concise but informative.
6. Do not include orchestrator coordination steps in the subtasks.
7. For the subtask steps field, use a string format with think-action pairs, not a list.

Follow the JSON format exactly to ensure it can be parsed automatically, and put the json object between the tags {start_tag}
# your json here
{end_tag} and do not use markdown.
"""

CURATION_RETRY = (
    "Your previous reply could not be parsed ({error}). Reply again with exactly one JSON memory "
    "object between {start_tag} and {end_tag}, following the schema above, with no markdown."
)

QUERY_REWRITE_PROMPT = """Based on the following similar task examples, break down the new task into a step-by-step plan.

## Similar Task Examples:
{memory_context}

## New Task:
{task_description}

Please provide a numbered list of 3-5 high-level steps that would be needed to complete this task.
Focus on the main phases/subtasks, not detailed actions.

Format your response as a simple numbered list enclosed within <start> and <end> tags:

<start>
1. [First step]
2. [Second step]
3. [Third step]
...
<end>

Steps:"""

QUERY_REWRITE_RETRY = (
    "[query-rewrite-retry] Your reply did not contain a numbered list between <start> and <end>. "
    "Reply again with only the numbered list enclosed in <start> and <end>."
)

MEMORY_HEADER = "Relevant memories from past successful executions:"
SUBTASK_MEMORY_HEADER = "Relevant subtask memories from past executions:"

PLAN_PROMPT = """[plan-request]
You are the orchestrator of a team of task agents. Agents and the apps they operate:
{agents}

New task: {task}
{memories}
Write the initial high-level plan for this task as a numbered list of subtasks (one per line, "1. ...")."""

REPLAN_PROMPT = """[replan-request]
You are the orchestrator of a team of task agents. Agents and the apps they operate:
{agents}

New task: {task}
Current plan (revision {revision}):
{plan}
Progress has stalled. Most recent steps:
{ledger_tail}
{memories}
Write a revised high-level plan as a numbered list of subtasks (one per line, "1. ...")."""

PLAN_RETRY = "[plan-retry] Your reply contained no numbered steps. Reply with a numbered list of subtasks only, one per line."

STEP_PROMPT = """[next-step]
You are the orchestrator of a team of task agents. Agents and the apps they operate:
{agents}

New task: {task}
Current plan (revision {revision}):
{plan}
Steps completed so far: {step_count}.
Step ledger:
{ledger}
{memories}
Decide the next action. To delegate, reply with <agent>AGENT_NAME</agent><subtask>SUBTASK DESCRIPTION</subtask>.
When the task is complete, reply with <final_answer>ANSWER</final_answer>."""

DIRECTIVE_RETRY = (
    "[directive-retry] {error} Valid agents: {agent_names}. Reply with "
    "<agent>AGENT_NAME</agent><subtask>SUBTASK DESCRIPTION</subtask> or <final_answer>ANSWER</final_answer>."
)

AGENT_PROMPT = """[agent-act]
You are {agent}, a task agent that operates these apps: {apps}.
Subtask: {subtask}
{memories}
Your earlier observations in this task:
{history}

Emit one <think>reasoning</think><action>{"app": ..., "action": ..., ...}</action> pair per tool call, in order.
If no tool call is needed, reply with <summary>what you found</summary> instead."""

AGENT_SUMMARY_PROMPT = """[agent-summarize]
You are {agent}.
Subtask: {subtask}
Observations from your actions:
{observations}

Reply with <summary>a short report of the outcome for the orchestrator</summary>."""


_PLACEHOLDER = re.compile(r"\{(\w+)\}")


def fill(template: str, **values: object) -> str:
    # single pass, so placeholder-like text inside a value is never expanded
    return _PLACEHOLDER.sub(lambda m: str(values[m.group(1)]) if m.group(1) in values else m.group(0), template)


def prompt_version() -> str:
    payload = "\x00".join([CURATION_PROMPT, CURATION_EXAMPLE, CURATION_RETRY])
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def memory_section(block: str | None, header: str = MEMORY_HEADER) -> str:
    return f"{header}\n{block}\n" if block else ""
