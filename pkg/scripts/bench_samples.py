#!/usr/bin/env python3
"""Time reading, parsing and analysing the sample BPEL processes.

Each file is measured ``--repeat`` times and the median is reported.  The
"load share" column is (read + parse) / total, the part of the work spent
getting the document into memory.
"""
from __future__ import annotations

import argparse
import statistics
import time
from pathlib import Path

from bpslicer.bpel import coordinator, parse_process
from bpslicer.policy import load_bundle

BPEL = Path(__file__).resolve().parent.parent / "data" / "bpel"


def measure(path: Path, bundle) -> tuple[float, float, float]:
    t0 = time.perf_counter()
    text = path.read_text(encoding="utf-8")
    t1 = time.perf_counter()
    model = parse_process(text, str(path))
    t2 = time.perf_counter()
    coordinator(model, bundle)
    t3 = time.perf_counter()
    return (t1 - t0) * 1e3, (t2 - t1) * 1e3, (t3 - t2) * 1e3


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dir", type=Path, default=BPEL)
    parser.add_argument("--bundle", type=Path, default=BPEL / "samples_bundle.json")
    parser.add_argument("--repeat", type=int, default=50)
    args = parser.parse_args()

    bundle = load_bundle(args.bundle)
    print(f"{'file':<16} {'read ms':>8} {'parse ms':>9} {'analysis ms':>12} {'load share':>11}")
    for path in sorted(args.dir.glob("sample*.bpel")):
        runs = [measure(path, bundle) for _ in range(args.repeat)]
        read, parse, analysis = (statistics.median(col) for col in zip(*runs))
        share = (read + parse) / (read + parse + analysis)
        print(f"{path.name:<16} {read:>8.3f} {parse:>9.3f} {analysis:>12.3f} {share:>10.0%}")


if __name__ == "__main__":
    main()
