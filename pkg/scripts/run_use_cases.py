#!/usr/bin/env python3
"""Slice both use cases and print their contexts and negotiation verdicts."""
from __future__ import annotations

import argparse
from pathlib import Path

from bpslicer.onthefly import asset_only_negotiations, on_the_fly_slice
from bpslicer.policy import load_bundle
from bpslicer.slicer import slice_trace
from bpslicer.trace import load_trace

DATA = Path(__file__).resolve().parent.parent / "data"


def show(title, contexts):
    print(f"== {title}")
    for c in contexts:
        print(f"  {c}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", type=Path, default=DATA)
    args = parser.parse_args()

    uc1 = slice_trace(load_trace(args.data / "usecase1.trace"))
    show("use case 1, asset-based", uc1.rop_contexts)
    show("use case 1, request-based", uc1.qop_contexts)

    uc2 = slice_trace(load_trace(args.data / "usecase2.trace"))
    show("use case 2, asset-based", uc2.rop_contexts)
    show("use case 2, request-based", uc2.qop_contexts)

    raw = load_trace(args.data / "usecase2_unfiltered.trace")
    bundle = load_bundle(args.data / "usecase2_bundle.json")
    _, events = on_the_fly_slice(raw, bundle)
    print("== use case 2, on-the-fly denials")
    for e in events:
        if e.denied:
            print(f"  step {e.step}: {e.consumer} <- {e.provider} ({e.context})")
    late = [e for e in asset_only_negotiations(raw, bundle) if e.denied]
    if late:
        print(f"== asset-only negotiation first fails at step {late[0].step}")


if __name__ == "__main__":
    main()
