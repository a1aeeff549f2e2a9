"""Deterministic in-process office apps: calendar, email, document, sheet, system.

All mutation goes through :meth:`Workspace.execute_action`. Bad input never
raises: it comes back as an :class:`Observation` with ``failed=True`` and the
workspace left untouched.
"""

from __future__ import annotations

import copy
import hashlib
import json
import threading
from dataclasses import dataclass
from datetime import datetime
from typing import Any, Callable, Mapping

TIME_FORMAT = "%Y-%m-%d %H:%M:%S"
_TIME_INPUT_FORMATS = (TIME_FORMAT, "%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M")

APPS = ("calendar", "email", "document", "sheet", "system")


class ActionError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


@dataclass(frozen=True)
class Observation:
    text: str
    failed: bool = False
    error: str | None = None


class StaleHandle(RuntimeError):
    """Raised when acting on a workspace that a later reset invalidated."""


def _param(params: Mapping[str, Any], *names: str, required: bool = True) -> Any:
    for name in names:
        if name in params and params[name] not in (None, ""):
            return params[name]
    if required:
        raise ActionError("MissingParam", f"missing parameter {names[0]!r}")
    return None


def _time(value: Any, name: str) -> datetime:
    for fmt in _TIME_INPUT_FORMATS:
        try:
            return datetime.strptime(str(value).strip(), fmt)
        except ValueError:
            continue
    raise ActionError("InvalidParam", f"{name} {value!r} is not a timestamp like 2024-05-17 10:30:00")


def _int(value: Any, name: str) -> int:
    try:
        number = int(str(value).strip())
    except ValueError:
        raise ActionError("InvalidParam", f"{name} must be an integer, got {value!r}") from None
    if number < 1:
        raise ActionError("InvalidParam", f"{name} must be >= 1")
    return number


def cell_key(row: int, col: int) -> str:
    return f"{row},{col}"


def _cell_sort(key: str) -> tuple[int, int]:
    row, col = key.split(",")
    return int(row), int(col)


def normalize_seed(seed: Mapping[str, Any]) -> dict[str, Any]:
    """Canonical workspace state from a fixture seed."""
    users = sorted(set(seed.get("users", [])))
    state: dict[str, Any] = {
        "clock": seed.get("clock", "2024-05-16 09:00:00"),
        "users": users,
        "calendars": {u: [] for u in users},
        "mailboxes": {u: [] for u in users},
        "documents": dict(seed.get("documents", {})),
        "sheets": {},
    }
    for user, events in seed.get("calendars", {}).items():
        state["calendars"][user] = [
            {
                "id": ev.get("id", i + 1),
                "summary": ev["summary"],
                "time_start": _time(ev["time_start"], "time_start").strftime(TIME_FORMAT),
                "time_end": _time(ev["time_end"], "time_end").strftime(TIME_FORMAT),
            }
            for i, ev in enumerate(events)
        ]
    for user, messages in seed.get("mailboxes", {}).items():
        state["mailboxes"][user] = [
            {
                "id": msg.get("id", i + 1),
                "sender": msg["sender"],
                "recipient": msg.get("recipient", user),
                "subject": msg["subject"],
                "content": msg["content"],
                "sent_at": _time(msg["sent_at"], "sent_at").strftime(TIME_FORMAT),
            }
            for i, msg in enumerate(messages)
        ]
    for name, cells in seed.get("sheets", {}).items():
        if isinstance(cells, Mapping):
            state["sheets"][name] = {str(k): str(v) for k, v in cells.items()}
        else:
            state["sheets"][name] = {cell_key(int(r), int(c)): str(v) for r, c, v in cells}
    for user in list(state["calendars"]) + list(state["mailboxes"]):
        if user not in users:
            raise ValueError(f"seed references unknown user {user!r}")
    return state


def state_hash(state: Mapping[str, Any]) -> str:
    payload = json.dumps(state, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class Workspace:
    """Live app state for one task run."""

    def __init__(self, seed: Mapping[str, Any], task_id: str = "", generation: int = 0, env: "OfficeEnv | None" = None):
        self.task_id = task_id
        self._state = normalize_seed(seed)
        self._generation = generation
        self._env = env

    @property
    def live(self) -> bool:
        return self._env is None or self._env.generation(self.task_id) == self._generation

    def snapshot(self) -> dict[str, Any]:
        return copy.deepcopy(self._state)

    def content_hash(self) -> str:
        return state_hash(self._state)

    # -- dispatch -----------------------------------------------------------

    def execute_action(self, action: Mapping[str, Any]) -> Observation:
        if not self.live:
            raise StaleHandle(f"workspace for {self.task_id!r} was reset")
        if not isinstance(action, Mapping):
            return Observation("Error (InvalidAction): action is not a structured object", True, "InvalidAction")
        app = action.get("app")
        name = action.get("action")
        handlers = _DISPATCH.get(app) if isinstance(app, str) else None
        if handlers is None:
            return Observation(f"Error (UnknownApp): no app named {app!r}", True, "UnknownApp")
        handler = handlers.get(name) if isinstance(name, str) else None
        if handler is None:
            return Observation(f"Error (UnknownAction): app {app!r} has no action {name!r}", True, "UnknownAction")
        params = {k: v for k, v in action.items() if k not in ("app", "action")}
        # handlers work on a scratch copy so a failure never leaves partial edits
        scratch = copy.deepcopy(self._state)
        try:
            text = handler(scratch, params)
        except ActionError as exc:
            return Observation(f"Error ({exc.kind}): {exc}", True, exc.kind)
        self._state = scratch
        return Observation(text)

    def __getitem__(self, key: str) -> Any:
        return copy.deepcopy(self._state[key])


# ---------------------------------------------------------------------------
# app handlers: (state, params) -> observation text
# ---------------------------------------------------------------------------

def _user(state, params, *names) -> str:
    user = _param(params, *names)
    if user not in state["users"]:
        raise ActionError("NotFound", f"no user named {user!r}")
    return user


def _render_event(ev) -> str:
    return f"[{ev['id']}] {ev['summary']} | {ev['time_start']} -> {ev['time_end']}"


def _create_event(state, params) -> str:
    user = _user(state, params, "user", "username")
    summary = str(_param(params, "summary", "title"))
    start = _time(_param(params, "time_start", "start"), "time_start")
    end = _time(_param(params, "time_end", "end"), "time_end")
    if not start < end:
        raise ActionError("InvalidParam", "time_start must be before time_end")
    events = state["calendars"][user]
    event = {
        "id": max((e["id"] for e in events), default=0) + 1,
        "summary": summary,
        "time_start": start.strftime(TIME_FORMAT),
        "time_end": end.strftime(TIME_FORMAT),
    }
    events.append(event)
    return f"Created event for {user}: {_render_event(event)}"


def _list_events(state, params) -> str:
    user = _user(state, params, "user", "username")
    events = state["calendars"][user]
    if not events:
        return f"No events found for {user}"
    return "\n".join([f"Events for {user}:"] + [_render_event(e) for e in events])


def _delete_event(state, params) -> str:
    user = _user(state, params, "user", "username")
    events = state["calendars"][user]
    event_id = _param(params, "event_id", "id", required=False)
    summary = _param(params, "summary", required=False)
    if event_id is None and summary is None:
        raise ActionError("MissingParam", "missing parameter 'event_id' (or 'summary')")
    for i, ev in enumerate(events):
        if (event_id is not None and str(ev["id"]) == str(event_id)) or (
            event_id is None and ev["summary"] == summary
        ):
            del events[i]
            return f"Deleted event for {user}: {_render_event(ev)}"
    raise ActionError("NotFound", f"no matching event in {user}'s calendar")


def _send_email(state, params) -> str:
    sender = _user(state, params, "sender", "from")
    recipient = _user(state, params, "recipient", "to")
    subject = str(_param(params, "subject"))
    content = str(_param(params, "content", "body"))
    box = state["mailboxes"][recipient]
    message = {
        "id": max((m["id"] for m in box), default=0) + 1,
        "sender": sender,
        "recipient": recipient,
        "subject": subject,
        "content": content,
        "sent_at": state["clock"],
    }
    box.append(message)
    return f"Sent email {message['id']} from {sender} to {recipient}: {subject}"


def _list_emails(state, params) -> str:
    user = _user(state, params, "user", "username")
    box = state["mailboxes"][user]
    if not box:
        return f"No emails in {user}'s inbox"
    lines = [f"Inbox of {user}:"]
    lines += [f"[{m['id']}] from {m['sender']} | {m['subject']} | {m['sent_at']}" for m in box]
    return "\n".join(lines)


def _read_email(state, params) -> str:
    user = _user(state, params, "user", "username")
    email_id = str(_param(params, "email_id", "id"))
    for m in state["mailboxes"][user]:
        if str(m["id"]) == email_id:
            return (
                f"Email {m['id']} from {m['sender']} to {m['recipient']} at {m['sent_at']}\n"
                f"Subject: {m['subject']}\n{m['content']}"
            )
    raise ActionError("NotFound", f"no email {email_id} in {user}'s inbox")


def _create_doc(state, params) -> str:
    name = str(_param(params, "name", "file_name"))
    state["documents"][name] = str(params.get("content", "") or "")
    return f"Created document {name!r}"


def _append_text(state, params) -> str:
    name = str(_param(params, "name", "file_name"))
    text = str(_param(params, "text", "content"))
    if name not in state["documents"]:
        raise ActionError("NotFound", f"no document named {name!r}")
    current = state["documents"][name]
    state["documents"][name] = f"{current}\n{text}" if current else text
    return f"Appended {len(text)} characters to {name!r}"


def _read_doc(state, params) -> str:
    name = str(_param(params, "name", "file_name"))
    if name not in state["documents"]:
        raise ActionError("NotFound", f"no document named {name!r}")
    return f"Document {name!r}:\n{state['documents'][name]}"


def _sheet(state, params, create: bool = False) -> tuple[str, dict]:
    name = str(_param(params, "sheet", "name", "file_name"))
    if name not in state["sheets"]:
        if not create:
            raise ActionError("NotFound", f"no sheet named {name!r}")
        state["sheets"][name] = {}
    return name, state["sheets"][name]


def _set_cell(state, params) -> str:
    row = _int(_param(params, "row"), "row")
    col = _int(_param(params, "col", "column"), "col")
    value = _param(params, "value")
    name, cells = _sheet(state, params, create=True)
    cells[cell_key(row, col)] = str(value)
    return f"Set {name}({row},{col}) = {value}"


def _get_cell(state, params) -> str:
    row = _int(_param(params, "row"), "row")
    col = _int(_param(params, "col", "column"), "col")
    name, cells = _sheet(state, params)
    value = cells.get(cell_key(row, col))
    return f"{name}({row},{col}) = {value if value is not None else '(empty)'}"


def _read_sheet(state, params) -> str:
    name, cells = _sheet(state, params)
    if not cells:
        return f"Sheet {name!r} is empty"
    lines = [f"Sheet {name!r}:"]
    rows: dict[int, list[str]] = {}
    for key in sorted(cells, key=_cell_sort):
        row, col = _cell_sort(key)
        rows.setdefault(row, []).append(f"({row},{col}) {cells[key]}")
    lines += ["  ".join(parts) for _, parts in sorted(rows.items())]
    return "\n".join(lines)


def _list_files(state, params) -> str:
    docs = sorted(state["documents"])
    sheets = sorted(state["sheets"])
    return "Documents: " + (", ".join(docs) or "(none)") + "\nSheets: " + (", ".join(sheets) or "(none)")


def _parse_ref(ref: Any) -> tuple[str, str, str]:
    """Split ``document:<name>``, ``sheet:<name>!<row>,<col>``, ``email:<user>/<id>``."""
    if not isinstance(ref, str) or ":" not in ref:
        raise ActionError("InvalidParam", f"bad reference {ref!r}")
    kind, _, rest = ref.partition(":")
    if kind == "document":
        return kind, rest, ""
    if kind == "sheet" and "!" in rest:
        name, _, cell = rest.partition("!")
        return kind, name, cell
    if kind == "email" and "/" in rest:
        user, _, email_id = rest.partition("/")
        return kind, user, email_id
    raise ActionError("InvalidParam", f"bad reference {ref!r}")


def _read_ref(state, ref) -> str:
    kind, name, detail = _parse_ref(ref)
    if kind == "document":
        if name not in state["documents"]:
            raise ActionError("NotFound", f"no document named {name!r}")
        return state["documents"][name]
    if kind == "sheet":
        if name not in state["sheets"]:
            raise ActionError("NotFound", f"no sheet named {name!r}")
        value = state["sheets"][name].get(detail)
        if value is None:
            raise ActionError("NotFound", f"cell {detail} of {name!r} is empty")
        return value
    if name not in state["mailboxes"]:
        raise ActionError("NotFound", f"no user named {name!r}")
    for m in state["mailboxes"][name]:
        if str(m["id"]) == detail:
            return m["content"]
    raise ActionError("NotFound", f"no email {detail} in {name}'s inbox")


def _copy_content(state, params) -> str:
    source = _param(params, "source")
    target = _param(params, "target")
    text = _read_ref(state, source)
    kind, name, detail = _parse_ref(target)
    if kind == "document":
        current = state["documents"].get(name, "")
        state["documents"][name] = f"{current}\n{text}" if current else text
    elif kind == "sheet":
        row, _, col = detail.partition(",")
        key = cell_key(_int(row, "row"), _int(col, "col"))
        state["sheets"].setdefault(name, {})[key] = text
    else:
        raise ActionError("InvalidParam", "copy target must be a document or a sheet cell")
    return f"Copied {len(text)} characters from {source} to {target}"


_DISPATCH: dict[str, dict[str, Callable[[dict, dict], str]]] = {
    "calendar": {"create_event": _create_event, "list_events": _list_events, "delete_event": _delete_event},
    "email": {"send_email": _send_email, "list_emails": _list_emails, "read_email": _read_email},
    "document": {"create_doc": _create_doc, "append_text": _append_text, "read_doc": _read_doc},
    "sheet": {"set_cell": _set_cell, "get_cell": _get_cell, "read_sheet": _read_sheet},
    "system": {"list_files": _list_files, "copy_content": _copy_content},
}

ACTION_TABLE = {app: tuple(actions) for app, actions in _DISPATCH.items()}


class OfficeEnv:
    """Hands out workspaces; resetting a task invalidates its older handles."""

    def __init__(self) -> None:
        self._generations: dict[str, int] = {}
        self._lock = threading.Lock()

    def generation(self, task_id: str) -> int:
        with self._lock:
            return self._generations.get(task_id, 0)

    def reset(self, fixture) -> Workspace:
        with self._lock:
            gen = self._generations.get(fixture.task_id, 0) + 1
            self._generations[fixture.task_id] = gen
        return Workspace(fixture.initial_workspace, fixture.task_id, gen, self)


def execute_action(handle: Workspace, action: Mapping[str, Any]) -> Observation:
    return handle.execute_action(action)
