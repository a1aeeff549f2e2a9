"""Task-agent registry: which apps each worker agent may drive."""

from __future__ import annotations

from types import MappingProxyType

AGENT_APPS = MappingProxyType(
    {
        "calendar_agent": ("calendar",),
        "email_agent": ("email",),
        "word_agent": ("document",),
        "excel_agent": ("sheet",),
        "system_agent": ("system",),
    }
)

DEFAULT_REGISTRY = frozenset(AGENT_APPS)


def agent_for_app(app: str) -> str | None:
    for agent, apps in AGENT_APPS.items():
        if app in apps:
            return agent
    return None
