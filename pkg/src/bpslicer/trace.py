"""Line-oriented text format for service-call tuples.

One interaction per line::

    <step> : <caller> <arrow> <callee> [in: a,b] [out: c] [noinc] [par]

Arrows: ``-c->`` control call, ``<-c-`` control response, ``-d->`` data call,
``<-d-`` data response, ``<->`` round trip, ``<-f->`` failed interaction.
A bare bracket ``[a,b]`` is the input list of a call and the output list of a
response.  ``#`` starts a comment.
"""
from __future__ import annotations

import re
from pathlib import Path
from typing import Iterable, Union

from .scg import CallKind, GraphError, ServiceCallTuple


class TraceSyntaxError(GraphError):
    def __init__(self, message: str, line: int, source: str = "<trace>"):
        super().__init__(f"{source}:{line}: {message}")
        self.line = line
        self.source = source


ARROWS = {
    "-c->": CallKind.CONTROL_CALL,
    "<-c-": CallKind.CONTROL_RESPONSE,
    "-d->": CallKind.DATA_CALL,
    "<-d-": CallKind.DATA_RESPONSE,
    "<->": CallKind.ROUND_TRIP,
    "<-f->": CallKind.FAILED,
}
_ARROW_OF = {v: k for k, v in ARROWS.items()}

_IDENT = r"[A-Za-z_][\w.]*"
_LINE = re.compile(
    rf"^(?P<step>[^\s:]+)\s*:\s*(?P<caller>{_IDENT})\s+(?P<arrow>\S+)\s+(?P<callee>{_IDENT})"
    r"(?P<rest>.*)$"
)
_BRACKET = re.compile(r"\[([^\]]*)\]")


def _names(text: str, line: int, source: str) -> tuple[str, ...]:
    items = tuple(s.strip() for s in text.split(",") if s.strip())
    for it in items:
        if not re.fullmatch(_IDENT, it):
            raise TraceSyntaxError(f"bad asset name {it!r}", line, source)
    return items


def parse_trace(text: str, source: str = "<trace>") -> list[ServiceCallTuple]:
    calls: list[ServiceCallTuple] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise TraceSyntaxError(f"cannot parse {raw.strip()!r}", lineno, source)
        arrow = m["arrow"]
        if arrow not in ARROWS:
            raise TraceSyntaxError(f"unknown tuple kind {arrow!r}", lineno, source)
        kind = ARROWS[arrow]
        rest = m["rest"]
        if _BRACKET.sub("", rest).strip():
            raise TraceSyntaxError(f"trailing text {rest.strip()!r}", lineno, source)
        assets_in: tuple[str, ...] = ()
        assets_out: tuple[str, ...] = ()
        includes_input, parallel = True, False
        for body in _BRACKET.findall(rest):
            body = body.strip()
            if body == "noinc":
                includes_input = False
            elif body == "par":
                parallel = True
            elif body.startswith("in:"):
                assets_in = _names(body[3:], lineno, source)
            elif body.startswith("out:"):
                assets_out = _names(body[4:], lineno, source)
            elif kind in (CallKind.DATA_RESPONSE,):
                assets_out = _names(body, lineno, source)
            else:
                assets_in = _names(body, lineno, source)
        step = m["step"]
        if step in seen:
            raise TraceSyntaxError(f"duplicate step label {step!r}", lineno, source)
        seen.add(step)
        try:
            calls.append(
                ServiceCallTuple(
                    step, m["caller"], m["callee"], kind, assets_in, assets_out,
                    includes_input, parallel,
                )
            )
        except GraphError as exc:
            raise TraceSyntaxError(str(exc), lineno, source) from None
    return calls


def load_trace(path: Union[str, Path]) -> list[ServiceCallTuple]:
    path = Path(path)
    return parse_trace(path.read_text(encoding="utf-8"), source=str(path))


def render_trace(calls: Iterable[ServiceCallTuple]) -> str:
    out = []
    for c in calls:
        parts = [f"{c.step} : {c.caller} {_ARROW_OF[c.kind]} {c.callee}"]
        if c.assets_in:
            parts.append(f"[in: {','.join(c.assets_in)}]")
        if c.assets_out:
            parts.append(f"[out: {','.join(c.assets_out)}]")
        if not c.includes_input:
            parts.append("[noinc]")
        if c.parallel:
            parts.append("[par]")
        out.append(" ".join(parts))
    return "\n".join(out) + ("\n" if out else "")
