"""Model clients: remote chat-completions over HTTP, scripted stand-ins, cassettes."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import httpx

from legomem.errors import CassetteMiss, ProviderUnavailable, ScriptExhausted

logger = logging.getLogger(__name__)

ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if self.role in ("system", "user") and not self.content.strip():
            raise ValueError(f"{self.role} message content must be non-empty")

    def to_dict(self) -> dict[str, str]:
        return {"role": self.role, "content": self.content}


def user(content: str) -> ChatMessage:
    return ChatMessage("user", content)


def _check_messages(messages: Sequence[ChatMessage]) -> None:
    if not messages:
        raise ValueError("messages must be non-empty")
    if messages[-1].role != "user":
        raise ValueError("the last message must have role 'user'")


class ModelClient:
    name: str = "client"
    kind: str = "abstract"

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        raise NotImplementedError


def complete(client: ModelClient, messages: Sequence[ChatMessage]) -> str:
    return client.complete(messages)


# ---------------------------------------------------------------------------
# scripted
# ---------------------------------------------------------------------------

@dataclass
class ScriptEntry:
    matcher: tuple[str, ...]
    response: str
    max_uses: int | None = None

    def matches(self, text: str) -> bool:
        return all(s in text for s in self.matcher)


class ScriptedClient(ModelClient):
    """Answers from an ordered script; the first entry whose substrings all
    occur in the last user message wins."""

    kind = "scripted"

    def __init__(self, entries: Iterable[ScriptEntry | tuple], name: str = "scripted"):
        self.name = name
        self.entries = [e if isinstance(e, ScriptEntry) else ScriptEntry(tuple(e[0]), *e[1:]) for e in entries]
        self._uses = [0] * len(self.entries)
        self._lock = threading.Lock()

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        _check_messages(messages)
        text = messages[-1].content
        with self._lock:
            for i, entry in enumerate(self.entries):
                if entry.max_uses is not None and self._uses[i] >= entry.max_uses:
                    continue
                if entry.matches(text):
                    self._uses[i] += 1
                    return entry.response
        head = text[:300].replace("\n", " | ")
        raise ScriptExhausted(f"{self.name}: no script entry matches prompt: {head}")


# ---------------------------------------------------------------------------
# remote
# ---------------------------------------------------------------------------

def _dig(payload: Any, path: str) -> Any:
    node = payload
    for part in path.split("."):
        node = node[int(part)] if isinstance(node, list) else node[part]
    return node


class RemoteChatClient(ModelClient):
    """POSTs ``{"model", "messages", "temperature"}`` and extracts the reply text."""

    kind = "remote"

    def __init__(
        self,
        endpoint: str,
        model: str,
        token_env: str = "LEGOMEM_API_TOKEN",
        response_path: str = "choices.0.message.content",
        temperature: float = 0.0,
        max_retries: int = 3,
        backoff: float = 0.25,
        max_in_flight: int = 4,
        timeout: float = 120.0,
        http_client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.endpoint = endpoint
        self.model = model
        self.name = f"remote:{model}"
        self.token_env = token_env
        self.response_path = response_path
        self.temperature = temperature
        self.max_retries = max_retries
        self.backoff = backoff
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._http = http_client or httpx.Client(timeout=timeout)
        self._sleep = sleep

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        _check_messages(messages)
        body = {
            "model": self.model,
            "messages": [m.to_dict() for m in messages],
            "temperature": self.temperature,
        }
        token = os.environ.get(self.token_env)
        headers = {"Authorization": f"Bearer {token}"} if token else {}
        last_error: Exception | None = None
        with self._slots:
            for attempt in range(self.max_retries + 1):
                try:
                    resp = self._http.post(self.endpoint, json=body, headers=headers)
                    resp.raise_for_status()
                    text = _dig(resp.json(), self.response_path)
                    if not isinstance(text, str):
                        raise TypeError(f"value at {self.response_path!r} is not text")
                    return text
                except (httpx.HTTPError, ValueError, KeyError, IndexError, TypeError) as exc:
                    last_error = exc
                    logger.warning("%s attempt %d failed: %s", self.name, attempt + 1, exc)
                    if attempt < self.max_retries:
                        self._sleep(self.backoff * 2**attempt)
        raise ProviderUnavailable(f"{self.name} failed after {self.max_retries} retries: {last_error}")


# ---------------------------------------------------------------------------
# record / replay
# ---------------------------------------------------------------------------

def request_hash(messages: Sequence[ChatMessage]) -> str:
    payload = json.dumps([m.to_dict() for m in messages], sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _line_hash(req: str, response: str) -> str:
    return hashlib.sha256(f"{req}\x00{response}".encode("utf-8")).hexdigest()


class RecordReplayClient(ModelClient):
    """Cassette wrapper. ``record`` appends ``request hash -> response`` lines;
    ``replay`` serves them back (in recorded order per request) and raises
    :class:`CassetteMiss` for unseen requests."""

    def __init__(self, wrapped: ModelClient | None, cassette_path: str | os.PathLike, mode: str = "replay"):
        if mode not in ("record", "replay"):
            raise ValueError("mode must be 'record' or 'replay'")
        if mode == "record" and wrapped is None:
            raise ValueError("record mode needs a wrapped client")
        self.wrapped = wrapped
        self.path = Path(cassette_path)
        self.mode = mode
        self.kind = f"cassette-{mode}"
        self.name = f"cassette:{self.path.name}"
        self._lock = threading.Lock()
        self._served: dict[str, int] = {}
        self._responses: dict[str, list[str]] = {}
        if mode == "replay":
            self._load()
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._seq = sum(1 for _ in self.path.open(encoding="utf-8")) if self.path.exists() else 0

    def _load(self) -> None:
        with self.path.open(encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                record = json.loads(line)
                if record["content_hash"] != _line_hash(record["request_hash"], record["response"]):
                    raise CassetteMiss(f"cassette line {record.get('seq')} fails its content hash")
                self._responses.setdefault(record["request_hash"], []).append(record["response"])

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        _check_messages(messages)
        key = request_hash(messages)
        if self.mode == "replay":
            with self._lock:
                options = self._responses.get(key)
                if not options:
                    raise CassetteMiss(f"no cassette entry for request {key[:12]}")
                n = self._served.get(key, 0)
                self._served[key] = n + 1
                return options[min(n, len(options) - 1)]
        response = self.wrapped.complete(messages)
        with self._lock:
            record = {
                "seq": self._seq,
                "request_hash": key,
                "response": response,
                "content_hash": _line_hash(key, response),
            }
            self._seq += 1
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        return response


def record_replay(wrapped: ModelClient | None, cassette_path, mode: str = "replay") -> RecordReplayClient:
    return RecordReplayClient(wrapped, cassette_path, mode)


def make_client(config: dict) -> ModelClient:
    """Build a remote or cassette client from a config table."""
    kind = config.get("kind", "remote")
    if kind == "remote":
        return RemoteChatClient(
            endpoint=config["endpoint"],
            model=config["model"],
            token_env=config.get("token_env", "LEGOMEM_API_TOKEN"),
            response_path=config.get("response_path", "choices.0.message.content"),
            temperature=float(config.get("temperature", 0.0)),
            max_in_flight=int(config.get("max_in_flight", 4)),
        )
    if kind == "cassette":
        inner = make_client({**config, "kind": "remote"}) if config.get("mode") == "record" else None
        return record_replay(inner, config["cassette"], config.get("mode", "replay"))
    raise ValueError(f"cannot build a client of kind {kind!r} from config")
