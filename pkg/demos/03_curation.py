"""
From execution logs to a memory bank
====================================

Run the golden scripts over the training half of the suite, keep the
successful transcripts, and distill each into a unit. The rule-based curator
stands in for a model; swap in any ModelClient to use a real one.
"""

import json
import tempfile
from pathlib import Path

from legomem import HashEmbedder, curate_corpus, load_banks, split_suite
from legomem.curation import serialize_trajectory
from legomem.harness import golden_logs
from legomem.office import load_suite
from legomem.scripted import RuleBasedCurator

train, test = split_suite(load_suite("builtin"), seed=0)
print("train:", [f.task_id for f in train])
print("test: ", [f.task_id for f in test])

logs = golden_logs(train)
print(logs[0].outcome, len(logs[0].events), "events")

# %%
# What the curator gets to see: model calls are dropped, one JSON event per line.
print("\n".join(serialize_trajectory(logs[0]).splitlines()[:6]))

# %%
out = Path(tempfile.mkdtemp()) / "bank"
manifest = curate_corpus(logs, RuleBasedCurator(), HashEmbedder(), out, workers=2)
print(json.dumps(manifest["counts"], indent=2))
print("kept", manifest["curation"]["kept"], "dropped", manifest["curation"]["dropped"])

banks = load_banks(out)
print(banks.content_hash() == manifest["content_hash"])
