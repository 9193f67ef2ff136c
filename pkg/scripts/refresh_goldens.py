#!/usr/bin/env python3
"""Regenerate the frozen golden artifacts for the blockage scenario.

The golden files pin the byte-exact output of `run_pipeline("blockage", ...)`
with the default seed.  Refresh them only after a deliberate behavior change,
then review the diff before committing.
"""

from __future__ import annotations

import shutil
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from mixdiag.pipeline import run_pipeline

GOLDEN_NAMES = ("report.txt", "graph.nt", "automaton.json", "anomalies.json")


def main() -> int:
    golden_dir = Path(__file__).resolve().parents[1] / "tests" / "golden" / "blockage"
    golden_dir.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as scratch:
        result = run_pipeline("blockage", scratch)
        for name in GOLDEN_NAMES:
            shutil.copyfile(result.artifacts[name], golden_dir / name)
            print(f"froze {golden_dir / name}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
