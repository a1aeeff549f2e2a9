from legomem.office.env import (
    ACTION_TABLE,
    APPS,
    Observation,
    OfficeEnv,
    StaleHandle,
    Workspace,
    execute_action,
    normalize_seed,
    state_hash,
)
from legomem.office.fixtures import (
    Checker,
    ReferenceSolution,
    ReferenceStep,
    TaskFixture,
    check_success,
    fuzzy_contains,
    load_fixture,
    load_suite,
)


def reset(fixture: TaskFixture, env: OfficeEnv | None = None) -> Workspace:
    return (env or _DEFAULT_ENV).reset(fixture)


_DEFAULT_ENV = OfficeEnv()

__all__ = [
    "ACTION_TABLE",
    "APPS",
    "Checker",
    "Observation",
    "OfficeEnv",
    "ReferenceSolution",
    "ReferenceStep",
    "StaleHandle",
    "TaskFixture",
    "Workspace",
    "check_success",
    "execute_action",
    "fuzzy_contains",
    "load_fixture",
    "load_suite",
    "normalize_seed",
    "reset",
    "state_hash",
]
