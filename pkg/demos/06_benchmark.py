"""
A small benchmark grid
======================

run_suite drives every fixture of the test split through one configuration
and aggregates success rate, steps and step failure rate per level. Scripted
teams make the numbers exact; point the config's team at real endpoints to
get something interesting.
"""

import tempfile
from pathlib import Path

from legomem import RunConfig, run_suite
from legomem.harness import render_csv, render_table

out = Path(tempfile.mkdtemp())
reports = []
for variant, placement, script in [
    ("vanilla", "orch_and_agent", "golden"),
    ("dynamic", "agent_only", "golden"),
    ("vanilla", "none", "null"),
]:
    config = RunConfig(
        variant=variant,
        placement=placement,
        team={"kind": "scripted", "script": script},
        repetitions=2,
        output_dir=str(out / f"{variant}-{placement}-{script}"),
    )
    reports.append(run_suite(config))

print(render_table(reports))
print(render_csv(reports))
print(sorted(p.name for p in (out / "vanilla-orch_and_agent-golden").iterdir()))
