#!/usr/bin/env python3
"""Run every built-in scenario end to end and print a one-screen summary.

Artifacts land under --out (default: ./runs), one subdirectory per
scenario.  Exit status is 0 even when anomalies are found; this script
reports, it does not judge.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from mixdiag.pipeline import SCENARIOS, run_pipeline


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("runs"))
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--train-cycles", type=int, default=10)
    args = parser.parse_args(argv)

    for scenario in SCENARIOS:
        result = run_pipeline(
            scenario,
            args.out / scenario,
            seed=args.seed,
            train_cycles=args.train_cycles,
        )
        print(f"== {scenario} ==")
        print(
            f"  automaton: {len(result.automaton.states)} states, "
            f"{len(result.automaton.transitions)} transitions"
        )
        print(f"  anomalies: {len(result.anomalies)}")
        for anomaly in result.anomalies:
            extra = ""
            if anomaly.deviation_s is not None:
                extra = f" (deviation {anomaly.deviation_s:g} s)"
            print(f"    {anomaly.kind} {anomaly.event_label} at t={anomaly.at_t_s:g} s{extra}")
        passed = sum(1 for r in result.cq_results if r.passed)
        print(f"  competency questions: {passed}/{len(result.cq_results)} passed")
        print(f"  graph: {len(result.graph.all_triples())} triples")
        print(f"  report: {result.artifacts['report.txt']}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
