"""Regenerate the bundled 12-task mini-suite under src/legomem/data/suite/.

Run from the repository root:  python tools/build_suite.py
"""

from __future__ import annotations

import json
from pathlib import Path

from legomem.office import TaskFixture, normalize_seed, state_hash

OUT = Path(__file__).resolve().parents[1] / "src" / "legomem" / "data" / "suite"
USERS = ["Alice", "Bob", "Carol", "Dave", "Erin"]
CLOCK = "2024-05-16 09:00:00"


def step(agent, subtask, actions, summary):
    return {"agent": agent, "subtask": subtask, "actions": [{"think": t, "action": a} for t, a in actions], "summary": summary}


def act(app, action, **params):
    return {"app": app, "action": action, **params}


BUDGET = [[1, 1, "Quarter"], [1, 2, "Amount"], [2, 1, "Q1"], [2, 2, "400"], [3, 1, "Q2"], [3, 2, "950"], [4, 1, "Q3"]]

FIXTURES = [
    # ---------------------------------------------------------------- level 1
    {
        "task_id": "l1_calendar_add_meeting",
        "level": 1,
        "description": "Add a meeting named 'Design review' to Bob's calendar on 2024-05-17 from 10:30 to 11:00 after checking his calendar for conflicts.",
        "initial_workspace": {
            "users": USERS, "clock": CLOCK,
            "calendars": {"Bob": [{"summary": "Standup", "time_start": "2024-05-17 09:00:00", "time_end": "2024-05-17 09:15:00"}]},
        },
        "checker": {"kind": "exact_state", "expectations": [
            {"field": "calendars/Bob", "contains": {"summary": "Design review", "time_start": "2024-05-17 10:30:00", "time_end": "2024-05-17 11:00:00"}},
        ]},
        "steps": [
            step("calendar_agent", "Check Bob's calendar on 2024-05-17 for events overlapping 10:30 to 11:00", [
                ("I need Bob's existing events to rule out a conflict", act("calendar", "list_events", user="Bob")),
            ], "Bob only has Standup 09:00-09:15 on 2024-05-17, so 10:30-11:00 is free."),
            step("calendar_agent", "Create the 'Design review' event on Bob's calendar for 2024-05-17 10:30 to 11:00", [
                ("The slot is free, so I can create the event", act("calendar", "create_event", user="Bob", summary="Design review", time_start="2024-05-17 10:30:00", time_end="2024-05-17 11:00:00")),
            ], "Created 'Design review' on Bob's calendar for 2024-05-17 10:30-11:00."),
        ],
        "final_answer": "Added 'Design review' to Bob's calendar on 2024-05-17 from 10:30 to 11:00.",
    },
    {
        "task_id": "l1_email_earliest_subject",
        "level": 1,
        "description": "Find the subject of the earliest email in Alice's inbox and report it.",
        "initial_workspace": {
            "users": USERS, "clock": CLOCK,
            "mailboxes": {"Alice": [
                {"sender": "Bob", "subject": "Budget update", "content": "Numbers attached.", "sent_at": "2024-05-15 14:00:00"},
                {"sender": "Dave", "subject": "Offsite logistics", "content": "Bus leaves at 8.", "sent_at": "2024-05-14 08:30:00"},
                {"sender": "Erin", "subject": "Lunch?", "content": "Noon works.", "sent_at": "2024-05-15 09:10:00"},
            ]},
        },
        "checker": {"kind": "answer_match", "expectations": [{"keywords": ["Offsite logistics"]}]},
        "steps": [
            step("email_agent", "List every email in Alice's inbox with its timestamp", [
                ("I need all timestamps to compare them, not just the first email", act("email", "list_emails", user="Alice")),
            ], "Alice has 3 emails; the oldest is email 2 'Offsite logistics' sent 2024-05-14 08:30:00."),
            step("email_agent", "Read email 2 in Alice's inbox to confirm its subject", [
                ("Reading the email confirms the subject of the earliest message", act("email", "read_email", user="Alice", email_id=2)),
            ], "Email 2 is 'Offsite logistics' from Dave, sent 2024-05-14 08:30:00."),
        ],
        "final_answer": "The earliest email in Alice's inbox is 'Offsite logistics' (sent 2024-05-14 08:30:00).",
    },
    {
        "task_id": "l1_sheet_update_total",
        "level": 1,
        "description": "In the 'budget' sheet, set the Q3 amount in row 4, column 2 to 1350 and report the Q1 amount stored in row 2, column 2.",
        "initial_workspace": {"users": USERS, "clock": CLOCK, "sheets": {"budget": BUDGET}},
        "checker": {"kind": "exact_state", "expectations": [
            {"field": "sheets/budget/4,2", "equals": "1350"},
            {"keywords": ["400"]},
        ]},
        "steps": [
            step("excel_agent", "Set cell (4,2) of the 'budget' sheet to 1350", [
                ("Row 4 is Q3 and column 2 holds amounts", act("sheet", "set_cell", sheet="budget", row=4, col=2, value="1350")),
            ], "Set budget(4,2) to 1350."),
            step("excel_agent", "Read cell (2,2) of the 'budget' sheet", [
                ("Cell (2,2) holds the Q1 amount", act("sheet", "get_cell", sheet="budget", row=2, col=2)),
            ], "budget(2,2) is 400."),
        ],
        "final_answer": "The Q3 amount is now 1350 and the Q1 amount is 400.",
    },
    {
        "task_id": "l1_doc_standup_notes",
        "level": 1,
        "description": "Create a document named 'standup_notes' containing 'Standup moved to 9:30 on Friday' and append the line 'Owner: Carol'.",
        "initial_workspace": {"users": USERS, "clock": CLOCK},
        "checker": {"kind": "keyword_fuzzy", "expectations": [
            {"field": "documents/standup_notes", "keywords": ["Standup moved to 9:30 on Friday", "Owner: Carol"]},
        ]},
        "steps": [
            step("word_agent", "Create 'standup_notes' with the announcement and append the owner line", [
                ("The document does not exist yet, so I create it with the announcement", act("document", "create_doc", name="standup_notes", content="Standup moved to 9:30 on Friday")),
                ("The owner line goes on its own line at the end", act("document", "append_text", name="standup_notes", text="Owner: Carol")),
            ], "Created standup_notes with the announcement and the owner line."),
            step("word_agent", "Read back 'standup_notes' to verify its content", [
                ("Reading the document verifies both lines are present", act("document", "read_doc", name="standup_notes")),
            ], "standup_notes contains both required lines."),
        ],
        "final_answer": "Created 'standup_notes' with the announcement and the owner line.",
    },
    # ---------------------------------------------------------------- level 2
    {
        "task_id": "l2_cancel_sync_notify",
        "level": 2,
        "description": "Cancel Carol's 'Team sync' event on 2024-05-20 and email Dave from Carol with subject 'Team sync cancelled' to let him know.",
        "initial_workspace": {
            "users": USERS, "clock": CLOCK,
            "calendars": {"Carol": [
                {"summary": "Team sync", "time_start": "2024-05-20 14:00:00", "time_end": "2024-05-20 14:30:00"},
                {"summary": "1:1 with Erin", "time_start": "2024-05-21 10:00:00", "time_end": "2024-05-21 10:30:00"},
            ]},
        },
        "checker": {"kind": "exact_state", "expectations": [
            {"field": "calendars/Carol", "not_contains": {"summary": "Team sync"}},
            {"field": "mailboxes/Dave", "contains": {"sender": "Carol", "subject": "Team sync cancelled"}},
        ]},
        "steps": [
            step("calendar_agent", "Delete the 'Team sync' event on 2024-05-20 from Carol's calendar", [
                ("I need the event id of Team sync before deleting", act("calendar", "list_events", user="Carol")),
                ("Team sync is event 1, so I delete it", act("calendar", "delete_event", user="Carol", event_id=1)),
            ], "Deleted event 1 'Team sync' from Carol's calendar."),
            step("email_agent", "Email Dave from Carol with subject 'Team sync cancelled' explaining the cancellation", [
                ("Dave must be told the sync is off", act("email", "send_email", sender="Carol", recipient="Dave", subject="Team sync cancelled", content="The Team sync on 2024-05-20 at 14:00 is cancelled.")),
            ], "Sent Dave the cancellation email."),
        ],
        "final_answer": "Carol's Team sync on 2024-05-20 is cancelled and Dave was notified.",
    },
    {
        "task_id": "l2_sales_total_email",
        "level": 2,
        "description": "Read the 'sales' sheet, add up the amounts in column 2, and email the total to Erin from Alice with subject 'Weekly sales'.",
        "initial_workspace": {
            "users": USERS, "clock": CLOCK,
            "sheets": {"sales": [[1, 1, "Region"], [1, 2, "Amount"], [2, 1, "North"], [2, 2, "120"], [3, 1, "South"], [3, 2, "80"], [4, 1, "West"], [4, 2, "50"]]},
        },
        "checker": {"kind": "keyword_fuzzy", "expectations": [
            {"field": "mailboxes/Erin", "keywords": ["Weekly sales", "250"]},
        ]},
        "steps": [
            step("excel_agent", "Read the whole 'sales' sheet", [
                ("All amounts are needed to compute the total", act("sheet", "read_sheet", sheet="sales")),
            ], "Sales amounts are 120, 80 and 50; the total is 250."),
            step("email_agent", "Send Erin an email from Alice with subject 'Weekly sales' stating the total of 250", [
                ("The total is known, so I can send the email", act("email", "send_email", sender="Alice", recipient="Erin", subject="Weekly sales", content="Total weekly sales: 250")),
            ], "Sent Erin the weekly sales total of 250."),
        ],
        "final_answer": "Emailed Erin the weekly sales total of 250.",
    },
    {
        "task_id": "l2_agenda_to_calendar",
        "level": 2,
        "description": "Read the 'offsite_agenda' document and add the offsite kickoff it describes to Alice's calendar.",
        "initial_workspace": {
            "users": USERS, "clock": CLOCK,
            "documents": {"offsite_agenda": "Offsite kickoff: 2024-05-22 from 13:00 to 15:00 in Room 4."},
        },
        "checker": {"kind": "exact_state", "expectations": [
            {"field": "calendars/Alice", "contains": {"summary": "Offsite kickoff", "time_start": "2024-05-22 13:00:00", "time_end": "2024-05-22 15:00:00"}},
        ]},
        "steps": [
            step("word_agent", "Read the 'offsite_agenda' document", [
                ("The agenda holds the kickoff date and time", act("document", "read_doc", name="offsite_agenda")),
            ], "The kickoff is on 2024-05-22 from 13:00 to 15:00 in Room 4."),
            step("calendar_agent", "Create 'Offsite kickoff' on Alice's calendar for 2024-05-22 13:00 to 15:00", [
                ("The agenda gave the exact slot", act("calendar", "create_event", user="Alice", summary="Offsite kickoff", time_start="2024-05-22 13:00:00", time_end="2024-05-22 15:00:00")),
            ], "Added Offsite kickoff to Alice's calendar."),
        ],
        "final_answer": "Added the Offsite kickoff (2024-05-22 13:00-15:00) to Alice's calendar.",
    },
    {
        "task_id": "l2_email_to_project_log",
        "level": 2,
        "description": "Find the latest email from Bob in Carol's inbox and append its content to the 'project_log' document.",
        "initial_workspace": {
            "users": USERS, "clock": CLOCK,
            "documents": {"project_log": "Log started."},
            "mailboxes": {"Carol": [
                {"sender": "Bob", "subject": "Kickoff", "content": "Kickoff done.", "sent_at": "2024-05-10 10:00:00"},
                {"sender": "Bob", "subject": "Status", "content": "Milestone 2 shipped on time.", "sent_at": "2024-05-15 16:20:00"},
                {"sender": "Erin", "subject": "Coffee", "content": "Tomorrow?", "sent_at": "2024-05-15 17:00:00"},
            ]},
        },
        "checker": {"kind": "keyword_fuzzy", "expectations": [
            {"field": "documents/project_log", "keywords": ["Log started.", "Milestone 2 shipped on time."]},
        ]},
        "steps": [
            step("email_agent", "List Carol's inbox to find Bob's most recent email", [
                ("Only the sender and timestamps tell which Bob email is latest", act("email", "list_emails", user="Carol")),
            ], "Bob's latest email is email 2 'Status' sent 2024-05-15 16:20:00."),
            step("email_agent", "Read email 2 in Carol's inbox", [
                ("I need the full content to copy it", act("email", "read_email", user="Carol", email_id=2)),
            ], "Email 2 says: Milestone 2 shipped on time."),
            step("word_agent", "Append 'Milestone 2 shipped on time.' to the 'project_log' document", [
                ("The log keeps its existing text; I append the email content", act("document", "append_text", name="project_log", text="Milestone 2 shipped on time.")),
            ], "Appended Bob's status to project_log."),
        ],
        "final_answer": "Appended Bob's latest email content to project_log.",
    },
    # ---------------------------------------------------------------- level 3
    {
        "task_id": "l3_budget_to_report",
        "level": 3,
        "description": "Check the Q2 amount in the 'budget' sheet, copy it into the 'finance_report' document with the system app, and email Dave from Alice with subject 'Report ready'.",
        "initial_workspace": {
            "users": USERS, "clock": CLOCK,
            "sheets": {"budget": BUDGET},
            "documents": {"finance_report": "Finance report. Q2 amount:"},
        },
        "checker": {"kind": "keyword_fuzzy", "expectations": [
            {"field": "documents/finance_report", "keywords": ["Q2 amount:", "950"]},
            {"field": "mailboxes/Dave", "keywords": ["Report ready"]},
        ]},
        "steps": [
            step("excel_agent", "Read cell (3,2) of the 'budget' sheet", [
                ("Row 3 is Q2", act("sheet", "get_cell", sheet="budget", row=3, col=2)),
            ], "budget(3,2) holds the Q2 amount 950."),
            step("system_agent", "Copy budget cell (3,2) into the 'finance_report' document", [
                ("Listing files confirms both the sheet and the document exist", act("system", "list_files")),
                ("Copying the cell avoids retyping the value", act("system", "copy_content", source="sheet:budget!3,2", target="document:finance_report")),
            ], "Copied 950 into finance_report."),
            step("email_agent", "Email Dave from Alice with subject 'Report ready'", [
                ("The report now has the amount, so Dave can be told", act("email", "send_email", sender="Alice", recipient="Dave", subject="Report ready", content="The finance report now includes the Q2 amount.")),
            ], "Sent Dave the 'Report ready' email."),
        ],
        "final_answer": "Copied the Q2 amount (950) into finance_report and emailed Dave.",
    },
    {
        "task_id": "l3_schedule_from_availability",
        "level": 3,
        "description": "Look up Erin's slot in the 'availability' sheet, book a 'Quarterly planning' meeting in Erin's calendar at that time, and email Erin a confirmation from Alice with subject 'Quarterly planning booked'.",
        "initial_workspace": {
            "users": USERS, "clock": CLOCK,
            "sheets": {"availability": [
                [1, 1, "Name"], [1, 2, "Start"], [1, 3, "End"],
                [2, 1, "Dave"], [2, 2, "2024-05-23 09:00:00"], [2, 3, "2024-05-23 10:00:00"],
                [3, 1, "Erin"], [3, 2, "2024-05-23 15:00:00"], [3, 3, "2024-05-23 16:00:00"],
            ]},
        },
        "checker": {"kind": "exact_state", "expectations": [
            {"field": "calendars/Erin", "contains": {"summary": "Quarterly planning", "time_start": "2024-05-23 15:00:00", "time_end": "2024-05-23 16:00:00"}},
            {"field": "mailboxes/Erin", "contains": {"sender": "Alice", "subject": "Quarterly planning booked"}},
        ]},
        "steps": [
            step("excel_agent", "Read the 'availability' sheet to find Erin's slot", [
                ("The sheet lists one slot per person", act("sheet", "read_sheet", sheet="availability")),
            ], "Erin is available 2024-05-23 15:00:00 to 16:00:00."),
            step("calendar_agent", "Create 'Quarterly planning' on Erin's calendar for 2024-05-23 15:00 to 16:00", [
                ("The slot comes straight from the sheet", act("calendar", "create_event", user="Erin", summary="Quarterly planning", time_start="2024-05-23 15:00:00", time_end="2024-05-23 16:00:00")),
            ], "Booked Quarterly planning for Erin."),
            step("email_agent", "Email Erin from Alice with subject 'Quarterly planning booked'", [
                ("Erin should get a confirmation with the time", act("email", "send_email", sender="Alice", recipient="Erin", subject="Quarterly planning booked", content="Booked for 2024-05-23 15:00-16:00.")),
            ], "Sent Erin the confirmation."),
        ],
        "final_answer": "Booked Quarterly planning for Erin on 2024-05-23 15:00-16:00 and confirmed by email.",
    },
    {
        "task_id": "l3_minutes_pipeline",
        "level": 3,
        "description": "Create a 'minutes' document titled 'Planning meeting minutes', copy the decision in cell (2,2) of the 'decisions' sheet into it, and mark cell (2,3) of the 'decisions' sheet as 'recorded'.",
        "initial_workspace": {
            "users": USERS, "clock": CLOCK,
            "sheets": {"decisions": [[1, 1, "Topic"], [1, 2, "Decision"], [1, 3, "Status"], [2, 1, "Release cadence"], [2, 2, "Adopt weekly releases"]]},
        },
        "checker": {"kind": "exact_state", "expectations": [
            {"field": "documents/minutes", "keywords": ["Planning meeting minutes", "Adopt weekly releases"]},
            {"field": "sheets/decisions/2,3", "equals": "recorded"},
        ]},
        "steps": [
            step("word_agent", "Create the 'minutes' document titled 'Planning meeting minutes'", [
                ("The minutes document must exist before content is copied into it", act("document", "create_doc", name="minutes", content="Planning meeting minutes")),
            ], "Created the minutes document."),
            step("system_agent", "Copy the decision in 'decisions' cell (2,2) into the 'minutes' document", [
                ("The system app can move a cell into a document", act("system", "copy_content", source="sheet:decisions!2,2", target="document:minutes")),
            ], "Copied 'Adopt weekly releases' into minutes."),
            step("excel_agent", "Set cell (2,3) of the 'decisions' sheet to 'recorded'", [
                ("Column 3 tracks whether the decision is in the minutes", act("sheet", "set_cell", sheet="decisions", row=2, col=3, value="recorded")),
            ], "Marked decisions(2,3) as recorded."),
        ],
        "final_answer": "The minutes document holds the decision and the sheet marks it as recorded.",
    },
    {
        "task_id": "l3_vendor_demo_triage",
        "level": 3,
        "description": "Find Dave's email about the vendor demo in Bob's inbox, add the demo to Bob's calendar, and log the demo time in the 'vendor_notes' document.",
        "initial_workspace": {
            "users": USERS, "clock": CLOCK,
            "documents": {"vendor_notes": "Vendor notes"},
            "mailboxes": {"Bob": [
                {"sender": "Dave", "subject": "Vendor demo", "content": "The vendor demo is on 2024-05-24 from 11:00 to 12:00.", "sent_at": "2024-05-13 12:00:00"},
                {"sender": "Carol", "subject": "Slides", "content": "Draft slides attached.", "sent_at": "2024-05-14 12:00:00"},
            ]},
        },
        "checker": {"kind": "exact_state", "expectations": [
            {"field": "calendars/Bob", "contains": {"summary": "Vendor demo", "time_start": "2024-05-24 11:00:00", "time_end": "2024-05-24 12:00:00"}},
            {"field": "documents/vendor_notes", "keywords": ["Vendor demo: 2024-05-24 11:00-12:00"]},
        ]},
        "steps": [
            step("email_agent", "Find and read Dave's vendor demo email in Bob's inbox", [
                ("I need the id of Dave's email first", act("email", "list_emails", user="Bob")),
                ("Email 1 is the vendor demo email", act("email", "read_email", user="Bob", email_id=1)),
            ], "The vendor demo is on 2024-05-24 from 11:00 to 12:00."),
            step("calendar_agent", "Create 'Vendor demo' on Bob's calendar for 2024-05-24 11:00 to 12:00", [
                ("The email gave the exact time", act("calendar", "create_event", user="Bob", summary="Vendor demo", time_start="2024-05-24 11:00:00", time_end="2024-05-24 12:00:00")),
            ], "Added Vendor demo to Bob's calendar."),
            step("word_agent", "Append 'Vendor demo: 2024-05-24 11:00-12:00' to 'vendor_notes'", [
                ("The notes document keeps a log of vendor events", act("document", "append_text", name="vendor_notes", text="Vendor demo: 2024-05-24 11:00-12:00")),
            ], "Logged the demo time in vendor_notes."),
        ],
        "final_answer": "The vendor demo (2024-05-24 11:00-12:00) is on Bob's calendar and logged in vendor_notes.",
    },
]


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for old in OUT.glob("*.json"):
        old.unlink()
    for raw in FIXTURES:
        data = {k: v for k, v in raw.items() if k not in ("steps", "final_answer")}
        data["seed_hash"] = state_hash(normalize_seed(raw["initial_workspace"]))
        data["reference_solution"] = {
            "plan": [s["subtask"] for s in raw["steps"]],
            "steps": raw["steps"],
            "final_answer": raw["final_answer"],
        }
        fixture = TaskFixture.from_dict(data)
        (OUT / f"{fixture.task_id}.json").write_text(json.dumps(fixture.to_dict(), indent=2) + "\n", encoding="utf-8")
        print("wrote", fixture.task_id)


if __name__ == "__main__":
    main()
