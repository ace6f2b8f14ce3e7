"""Command-line front end.

Documents go to stdout (or ``--out``); diagnostics go to stderr.  Exit status
is 0 on success, 1 when a negotiation is denied and 2 on bad input.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import bpel
from .onthefly import asset_only_negotiations, negotiation_events, on_the_fly_slice
from .policy import PolicyError, load_bundle
from .scg import GraphError, build_graph, to_dot
from .slicer import AssetSlicer, RequestSlicer, _report
from .trace import load_trace

log = logging.getLogger("bpslicer")

EXIT_OK, EXIT_DENIED, EXIT_INPUT = 0, 1, 2
COMMANDS = ("slice-trace", "slice-bpel", "graph", "negotiate", "bench")
MODES = ("asset", "request", "on-the-fly")
FORMATS = ("json", "dot", "text")


@dataclass(frozen=True)
class RunConfig:
    command: str
    input_paths: tuple[str, ...]
    bundle_path: Optional[str] = None
    output_format: str = "json"
    mode: Optional[str] = None
    out: Optional[str] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        needs_bundle = self.command in ("negotiate", "slice-bpel") or self.mode == "on-the-fly"
        if needs_bundle and not self.bundle_path:
            raise ValueError(f"{self.command} needs --bundle")


class InputError(Exception):
    pass


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _is_bpel(path: str) -> bool:
    return Path(path).suffix in (".bpel", ".xml")


def _slice_trace(cfg: RunConfig) -> tuple[str, int]:
    calls = load_trace(cfg.input_paths[0])
    if cfg.mode == "on-the-fly":
        report, _ = on_the_fly_slice(calls, load_bundle(cfg.bundle_path))
    else:
        assets, requests = AssetSlicer(calls), RequestSlicer(calls)
        for c in calls:
            requests.feed(c)
            assets.feed(c)
        assets.finish()
        requests.finish()
        report = _report(assets, requests)
    if cfg.mode == "asset":
        contexts = report.rop_contexts
    elif cfg.mode == "request":
        contexts = report.qop_contexts
    else:
        contexts = None
    if cfg.output_format == "text":
        shown = contexts if contexts is not None else report.rop_contexts + report.qop_contexts
        return "".join(f"{c}\n" for c in shown), EXIT_OK
    if cfg.output_format == "dot":
        return to_dot(build_graph(calls)), EXIT_OK
    if contexts is not None:
        return _dump([c.to_dict() for c in contexts]), EXIT_OK
    return report.to_json(), EXIT_OK


def _slice_bpel(cfg: RunConfig) -> tuple[str, int]:
    model = bpel.load_process(cfg.input_paths[0])
    if cfg.output_format == "dot":
        return to_dot(bpel.process_graph(model)), EXIT_OK
    assembler = bpel.coordinator(model, load_bundle(cfg.bundle_path))
    status = EXIT_OK if assembler.start_process else EXIT_DENIED
    if not assembler.start_process:
        log.warning("negotiation denied; the business process is not started")
    if cfg.output_format == "text":
        lines = [f"{v['latest']}: {'ok' if v['satisfied'] else 'denied'}"
                 for v in assembler.config["verdicts"]]
        return "\n".join(lines) + "\n", status
    return assembler.to_json(), status


def _graph(cfg: RunConfig) -> tuple[str, int]:
    path = cfg.input_paths[0]
    if _is_bpel(path):
        graph = bpel.process_graph(bpel.load_process(path))
    else:
        graph = build_graph(load_trace(path))
    return to_dot(graph), EXIT_OK


def _negotiate(cfg: RunConfig) -> tuple[str, int]:
    path = cfg.input_paths[0]
    bundle = load_bundle(cfg.bundle_path)
    calls = bpel.translate(bpel.load_process(path)).calls if _is_bpel(path) else load_trace(path)
    if cfg.mode == "asset":
        events = asset_only_negotiations(calls, bundle)
    elif cfg.mode == "request":
        events = negotiation_events(calls, bundle, checks=("request",))
    else:
        _, events = on_the_fly_slice(calls, bundle)
    denied = any(e.denied for e in events)
    if cfg.output_format == "text":
        lines = [f"{e.step} {e.check} {e.consumer}<-{e.provider} {e.context} {e.right}: "
                 f"{'denied' if e.denied else 'ok'}" for e in events]
        text = "\n".join(lines) + ("\n" if lines else "")
    else:
        text = _dump([e.to_dict() for e in events])
    return text, EXIT_DENIED if denied else EXIT_OK


def _bench_one(path: Path, bundle) -> dict:
    t0 = time.perf_counter()
    text = path.read_text(encoding="utf-8")
    t1 = time.perf_counter()
    model = bpel.parse_process(text, str(path))
    t2 = time.perf_counter()
    if bundle is not None:
        bpel.coordinator(model, bundle)
    else:
        bpel.translate(model)
    t3 = time.perf_counter()
    row = {"file": path.name}
    row.update(model.metrics())
    row.update(io_ms=(t1 - t0) * 1e3, parse_ms=(t2 - t1) * 1e3, analysis_ms=(t3 - t2) * 1e3)
    return row


def _bench_files(paths: Sequence[str]) -> list[Path]:
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            files += [f for f in p.iterdir() if f.suffix == ".bpel"]
        else:
            files.append(p)
    return sorted(files, key=lambda f: (f.name, str(f)))


def _bench(cfg: RunConfig) -> tuple[str, int]:
    bundle = load_bundle(cfg.bundle_path) if cfg.bundle_path else None
    rows = [_bench_one(f, bundle) for f in _bench_files(cfg.input_paths)]
    if cfg.output_format == "json":
        return _dump(rows), EXIT_OK
    head = f"{'file':<20} {'links':>5} {'vars':>5} {'basic':>5} {'io ms':>8} {'parse ms':>9} {'analysis ms':>12}"
    lines = [head]
    for r in rows:
        lines.append(
            f"{r['file']:<20} {r['partner_links']:>5} {r['variables']:>5} "
            f"{r['basic_activities']:>5} {r['io_ms']:>8.3f} {r['parse_ms']:>9.3f} "
            f"{r['analysis_ms']:>12.3f}"
        )
    return "\n".join(lines) + "\n", EXIT_OK


_HANDLERS = {
    "slice-trace": _slice_trace,
    "slice-bpel": _slice_bpel,
    "graph": _graph,
    "negotiate": _negotiate,
    "bench": _bench,
}


def run(cfg: RunConfig) -> tuple[str, int]:
    """Execute one command; returns the document and the exit status."""
    try:
        return _HANDLERS[cfg.command](cfg)
    except (GraphError, PolicyError, json.JSONDecodeError) as exc:
        raise InputError(str(exc)) from exc
    except OSError as exc:
        raise InputError(f"{exc.filename}: {exc.strerror}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bpslicer",
        description="Slice collaborative business processes and negotiate usage policies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, many=False):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("input", nargs="+" if many else None, help="input file")
        p.add_argument("--bundle", help="policy bundle (JSON)")
        p.add_argument("--format", choices=FORMATS, default=None, dest="output_format")
        p.add_argument("--mode", choices=MODES, default=None)
        p.add_argument("--out", help="write the document here instead of stdout")
        return p

    add("slice-trace", "slice an interaction trace")
    add("slice-bpel", "pre-process a BPEL process into contexts and verdicts")
    add("graph", "emit the service call graph as DOT")
    add("negotiate", "list negotiation decisions for a trace or process")
    add("bench", "time parsing and analysis of BPEL processes", many=True)
    return parser


def _default_format(command: str) -> str:
    return {"graph": "dot", "bench": "text"}.get(command, "json")


def main(argv: Optional[Sequence[str]] = None) -> int:
    level = os.environ.get("BPSLICER_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    inputs = tuple(args.input) if isinstance(args.input, list) else (args.input,)
    try:
        cfg = RunConfig(args.command, inputs, args.bundle,
                        args.output_format or _default_format(args.command), args.mode, args.out)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    log.info("running %s on %s", cfg.command, ", ".join(cfg.input_paths))
    try:
        text, status = run(cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if cfg.out:
        Path(cfg.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
