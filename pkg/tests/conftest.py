from __future__ import annotations

import pytest
from hypothesis import strategies as st

from legomem.agents import AGENT_APPS
from legomem.bank import build_banks, load_banks
from legomem.curation import curate_corpus
from legomem.embedding import HashEmbedder
from legomem.harness import builtin_bank_path, golden_logs
from legomem.memory import MemoryUnit, SubtaskRecord, ThinkActionPair
from legomem.office import load_suite
from legomem.scripted import RuleBasedCurator



@pytest.fixture(scope="session")
def provider():
    return HashEmbedder()


@pytest.fixture(scope="session")
def suite():
    return load_suite("builtin")


@pytest.fixture(scope="session")
def fixture_bank():
    return load_banks(builtin_bank_path())


@pytest.fixture(scope="session")
def full_bank(tmp_path_factory, suite, provider):
    """12-unit bank curated from every fixture's golden transcript."""
    out = tmp_path_factory.mktemp("full_bank")
    curate_corpus(golden_logs(suite), RuleBasedCurator(), provider, out, workers=1)
    return load_banks(out)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

_text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters="<>"),
    min_size=0,
    max_size=30,
)
_word = st.text(alphabet="abcdefghijklmnopqrstuvwxyz_", min_size=1, max_size=10)
_scalar = st.one_of(
    st.integers(-10**6, 10**6),
    st.floats(allow_nan=False, allow_infinity=False, width=64),
    st.booleans(),
    st.none(),
    st.text(max_size=20),
)
_params = st.dictionaries(
    _word.filter(lambda k: k not in ("app", "action")),
    st.one_of(_scalar, st.lists(_scalar, max_size=3)),
    max_size=4,
)


@st.composite
def actions(draw):
    app = draw(st.sampled_from(["calendar", "email", "document", "sheet", "system"]))
    return {"app": app, "action": draw(_word), **draw(_params)}


@st.composite
def subtask_records(draw):
    steps = tuple(
        ThinkActionPair(draw(_text), draw(actions())) for _ in range(draw(st.integers(0, 4)))
    )
    observations = draw(_text)
    if not steps and not observations.strip():
        observations = "nothing to report"
    return SubtaskRecord(
        agent_name=draw(st.sampled_from(sorted(AGENT_APPS))),
        description=draw(_text.filter(lambda s: s.strip())),
        steps=steps,
        observations=observations,
    )


@st.composite
def memory_units(draw):
    unit = MemoryUnit(
        id="",
        task_description=draw(_text),
        high_level_plan=draw(_text),
        subtasks=tuple(draw(st.lists(subtask_records(), min_size=1, max_size=4))),
        final_answer=draw(_text),
        reflections=draw(_text),
        source_log_id=draw(_word),
    )
    return unit.with_content_id()


@pytest.fixture
def bank_of(provider):
    def make(units):
        return build_banks(list(units), provider)

    return make
