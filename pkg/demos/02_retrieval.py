"""
Exact top-k retrieval
=====================

Banks are plain numpy matrices of unit vectors, so cosine similarity is one
matrix-vector product. Here we query the bundled bank and check the answer
against a hand-rolled scan.
"""

import numpy as np

from legomem import HashEmbedder, load_banks, retrieve
from legomem.harness import builtin_bank_path

provider = HashEmbedder()
banks = load_banks(builtin_bank_path())
print(banks.counts())

query = "Email Dave that the team sync is cancelled"
for hit in retrieve(banks.global_bank, query, 3, provider):
    print(f"{hit.score:.3f}  {hit.payload.task_description}")

# %%
# The same ranking by brute force: dot products, then sort by (-score, id).
q = provider.embed(query)
scores = banks.global_bank.matrix @ q
order = sorted(range(len(scores)), key=lambda i: (-round(float(scores[i]), 12), banks.global_bank.entries[i].memory_id))
print([banks.global_bank.entries[i].memory_id for i in order[:3]])
print(np.round(np.sort(scores)[::-1][:3], 3))

# %%
# Per-agent banks hold subtask slices, indexed by the subtask description.
for hit in retrieve(banks.agent_banks["calendar_agent"], "delete the cancelled event", 2, provider):
    print(f"{hit.score:.3f}  {hit.payload.description}")
