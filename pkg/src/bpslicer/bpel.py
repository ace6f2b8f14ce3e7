"""A WS-BPEL subset: parsing, activity categories and slicing pre-processing.

The process element names the orchestrating party; each partnerLink names a
partner.  Variables may carry an ``asset="a,b"`` extension attribute listing
the assets they hold, and ``parts="p,q"`` declaring their message parts.
``invoke`` accepts ``noinclude="true"`` for replies that do not aggregate the
request's assets.

Analysis translates category-1 activities into service-call tuples and feeds
them to both slicers.  A split flag raised by a category-2 activity marks the
first partner interaction of each branch as parallel.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union
from xml.parsers import expat
from xml.sax.saxutils import escape, quoteattr

from .onthefly import NegotiationEvent, negotiation_events
from .policy import PolicyBundle, PolicyError
from .scg import (
    CallKind,
    DependencyKind,
    GraphError,
    PartyId,
    PartyKind,
    ServiceCallGraph,
    ServiceCallTuple,
    build_graph,
    record_call,
)
from .slicer import (
    AssetSlicer,
    DevelopmentKind,
    RequestSlicer,
    SliceReport,
    _report,
    classify_development,
)

BPEL_NS = "http://docs.oasis-open.org/wsbpel/2.0/process/executable"


class BpelError(GraphError):
    def __init__(self, message: str, line: int = 0, source: str = "<bpel>"):
        super().__init__(f"{source}:{line}: {message}" if line else f"{source}: {message}")
        self.line = line
        self.source = source


class Category(enum.IntEnum):
    INTERACTION = 1
    SPLITTING = 2
    TRANSPARENT = 3
    IGNORED = 4


class SlicerFlag(str, enum.Enum):
    UPDATE = "update"
    SPLIT = "split"


CATEGORY_1 = ("receive", "reply", "invoke", "assign", "exit")
CATEGORY_3 = ("pick", "scope", "while", "repeatUntil")
CATEGORY_4 = (
    "throw", "wait", "empty", "compensate", "compensateScope", "rethrow",
    "validate", "extensionActivity",
)
STRUCTURED = ("sequence", "flow", "forEach", "if") + CATEGORY_3
ACTIVITY_KINDS = CATEGORY_1 + STRUCTURED + CATEGORY_4
BASIC_KINDS = CATEGORY_1 + CATEGORY_4

# expression children kept as plain attribute text
_EXPRESSIONS = ("condition", "startCounterValue", "finalCounterValue", "for", "until")
_BOOLEAN = ("createInstance", "parallel", "noinclude")


@dataclass(frozen=True)
class Copy:
    """One ``<copy>`` of an assign; ``from_variable`` is None for literals."""

    to_variable: str
    from_variable: Optional[str] = None
    from_part: Optional[str] = None
    to_part: Optional[str] = None
    literal: Optional[str] = None


@dataclass
class ActivityNode:
    kind: str
    attributes: dict = field(default_factory=dict)
    children: list = field(default_factory=list)
    line: int = field(default=0, compare=False)

    @property
    def name(self) -> Optional[str]:
        return self.attributes.get("name")

    def walk(self):
        yield self
        for ch in self.children:
            yield from ch.walk()

    def signature(self):
        """Structure without names or line numbers, for branch comparison."""
        attrs = tuple(sorted((k, repr(v)) for k, v in self.attributes.items() if k != "name"))
        return (self.kind, attrs, tuple(ch.signature() for ch in self.children))


@dataclass(frozen=True)
class VariableDecl:
    name: str
    assets: tuple[str, ...] = ()
    parts: tuple[str, ...] = ()

    @property
    def party(self) -> PartyId:
        return PartyId(self.name, PartyKind.VARIABLE)


@dataclass
class ProcessModel:
    name: str
    partner_links: tuple[PartyId, ...]
    variables: tuple[VariableDecl, ...]
    root: ActivityNode
    source: str = field(default="<bpel>", compare=False)

    def variable(self, name: str) -> VariableDecl:
        for v in self.variables:
            if v.name == name:
                return v
        raise BpelError(f"undeclared variable {name!r}", source=self.source)

    @property
    def partner_names(self) -> list[str]:
        return [p.name for p in self.partner_links]

    def metrics(self) -> dict:
        """The three complexity counts used to describe sample processes."""
        return {
            "partner_links": len(self.partner_links),
            "variables": len(self.variables),
            "basic_activities": sum(1 for n in self.root.walk() if n.kind in BASIC_KINDS),
        }


# -- parsing -------------------------------------------------------------------


@dataclass
class _Elem:
    tag: str
    attrs: dict
    line: int
    children: list = field(default_factory=list)
    text: str = ""


def _read_xml(text: str, source: str) -> _Elem:
    parser = expat.ParserCreate(namespace_separator="}")
    stack: list[_Elem] = []
    root: list[_Elem] = []

    def start(tag, attrs):
        ns, _, local = tag.rpartition("}")
        if ns and ns != BPEL_NS:
            raise BpelError(f"unsupported namespace {ns!r}", parser.CurrentLineNumber, source)
        for key in attrs:
            if "}" in key:
                raise BpelError(f"unsupported attribute {key!r}", parser.CurrentLineNumber, source)
        el = _Elem(local, dict(attrs), parser.CurrentLineNumber)
        (stack[-1].children if stack else root).append(el)
        stack.append(el)

    def end(tag):
        stack.pop()

    def chars(data):
        if stack:
            stack[-1].text += data

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = chars
    try:
        parser.Parse(text, True)
    except expat.ExpatError as exc:
        raise BpelError(f"malformed XML: {expat.errors.messages[exc.code]}", exc.lineno,
                        source) from None
    return root[0]


def _split_list(value: Optional[str]) -> tuple[str, ...]:
    return tuple(s.strip() for s in (value or "").split(",") if s.strip())


def _flag(value: str, el: _Elem, source: str) -> bool:
    if value in ("yes", "true"):
        return True
    if value in ("no", "false"):
        return False
    raise BpelError(f"expected yes/no, got {value!r}", el.line, source)


class _Parser:
    def __init__(self, source: str):
        self.source = source

    def error(self, message: str, el: _Elem):
        raise BpelError(message, el.line, self.source)

    def process(self, el: _Elem) -> ProcessModel:
        if el.tag != "process":
            self.error(f"root element must be <process>, got <{el.tag}>", el)
        name = el.attrs.get("name")
        if not name:
            self.error("process needs a name", el)
        links, variables, activities = [], [], []
        for ch in el.children:
            if ch.tag == "partnerLinks":
                for pl in ch.children:
                    if pl.tag != "partnerLink" or not pl.attrs.get("name"):
                        self.error("expected <partnerLink name=...>", pl)
                    links.append(PartyId(pl.attrs["name"]))
            elif ch.tag == "variables":
                for v in ch.children:
                    if v.tag != "variable" or not v.attrs.get("name"):
                        self.error("expected <variable name=...>", v)
                    variables.append(VariableDecl(
                        v.attrs["name"], _split_list(v.attrs.get("asset")),
                        _split_list(v.attrs.get("parts")),
                    ))
            else:
                activities.append(ch)
        if len(activities) != 1:
            self.error("process must contain exactly one activity", el)
        names = [p.name for p in links] + [v.name for v in variables]
        if len(set(names)) != len(names):
            self.error("duplicate partnerLink or variable name", el)
        root = self.activity(activities[0])
        model = ProcessModel(name, tuple(links), tuple(variables), root, self.source)
        self.check(model)
        return model

    def _single(self, el: _Elem, allowed_expr=()) -> tuple[dict, list]:
        """Split children into expression attributes and activity nodes."""
        attrs, acts = {}, []
        for ch in el.children:
            if ch.tag in allowed_expr:
                attrs[ch.tag] = ch.text.strip()
            else:
                acts.append(self.activity(ch))
        return attrs, acts

    def activity(self, el: _Elem) -> ActivityNode:
        kind = el.tag
        if kind not in ACTIVITY_KINDS:
            self.error(f"unsupported element <{kind}>", el)
        attrs: dict = {}
        for k, v in el.attrs.items():
            attrs[k] = _flag(v, el, self.source) if k in _BOOLEAN else v
        children: list = []
        if kind == "flow":
            attrs.setdefault("parallel", True)
        if kind == "forEach":
            attrs.setdefault("parallel", False)
        if kind == "assign":
            attrs["copies"] = tuple(self.copy(ch) for ch in el.children)
            if not attrs["copies"]:
                self.error("assign needs at least one copy", el)
        elif kind == "if":
            conditions = []
            for ch in el.children:
                if ch.tag == "condition":
                    conditions.append(ch.text.strip())
                elif ch.tag == "elseif":
                    extra, acts = self._single(ch, ("condition",))
                    if len(acts) != 1 or "condition" not in extra:
                        self.error("elseif needs a condition and one activity", ch)
                    conditions.append(extra["condition"])
                    children.extend(acts)
                elif ch.tag == "else":
                    _, acts = self._single(ch)
                    if len(acts) != 1:
                        self.error("else needs exactly one activity", ch)
                    children.extend(acts)
                else:
                    children.append(self.activity(ch))
            if not conditions or len(children) not in (len(conditions), len(conditions) + 1):
                self.error("malformed if", el)
            attrs["conditions"] = tuple(conditions)
        elif kind == "pick":
            for ch in el.children:
                if ch.tag == "onMessage":
                    _, acts = self._single(ch)
                    if len(acts) != 1:
                        self.error("onMessage needs exactly one activity", ch)
                    branch = {k: v for k, v in ch.attrs.items()}
                    branch["branch"] = "onMessage"
                    children.append(ActivityNode("receive", branch, acts, ch.line))
                elif ch.tag == "onAlarm":
                    extra, acts = self._single(ch, ("for", "until"))
                    if len(acts) != 1:
                        self.error("onAlarm needs exactly one activity", ch)
                    children.append(ActivityNode("scope", {"branch": "onAlarm", **extra},
                                                 acts, ch.line))
                else:
                    self.error(f"unexpected <{ch.tag}> in pick", ch)
            if not any(c.kind == "receive" for c in children):
                self.error("pick needs an onMessage", el)
        elif kind in ("sequence", "flow"):
            _, children = self._single(el)
        elif kind in ("scope", "while", "repeatUntil", "forEach"):
            extra, children = self._single(el, _EXPRESSIONS)
            attrs.update(extra)
            if len(children) != 1:
                self.error(f"{kind} needs exactly one activity", el)
        elif kind == "wait":
            extra, children = self._single(el, ("for", "until"))
            attrs.update(extra)
            if children:
                self.error("wait cannot contain activities", el)
        elif el.children:
            self.error(f"{kind} cannot contain child elements", el)
        return ActivityNode(kind, attrs, children, el.line)

    def copy(self, el: _Elem) -> Copy:
        if el.tag != "copy":
            self.error(f"expected <copy>, got <{el.tag}>", el)
        src = [c for c in el.children if c.tag == "from"]
        dst = [c for c in el.children if c.tag == "to"]
        if len(src) != 1 or len(dst) != 1 or len(el.children) != 2:
            self.error("copy needs one <from> and one <to>", el)
        f, t = src[0], dst[0]
        if not t.attrs.get("variable"):
            self.error("copy target needs a variable", t)
        if f.attrs.get("variable"):
            return Copy(t.attrs["variable"], f.attrs["variable"], f.attrs.get("part"),
                        t.attrs.get("part"))
        return Copy(t.attrs["variable"], to_part=t.attrs.get("part"), literal=f.text.strip())

    def check(self, model: ProcessModel):
        partners = set(model.partner_names)
        variables = {v.name: v for v in model.variables}
        starts = []

        def var(name, part, node):
            if name not in variables:
                raise BpelError(f"undeclared variable {name!r}", node.line, self.source)
            decl = variables[name]
            if part is not None and decl.parts and part not in decl.parts:
                raise BpelError(f"variable {name!r} has no part {part!r}", node.line, self.source)

        for node in model.root.walk():
            a = node.attributes
            if node.kind in ("receive", "reply", "invoke"):
                link = a.get("partnerLink")
                if link not in partners:
                    raise BpelError(f"unresolved partnerLink {link!r}", node.line, self.source)
            for key in ("variable", "inputVariable", "outputVariable"):
                if key in a and node.kind in ("receive", "reply", "invoke"):
                    var(a[key], None, node)
            if node.kind == "assign":
                for c in a["copies"]:
                    var(c.to_variable, c.to_part, node)
                    if c.from_variable is not None:
                        var(c.from_variable, c.from_part, node)
            if node.kind in ("receive", "pick") and a.get("createInstance"):
                starts.append(node)
        if len(starts) != 1:
            raise BpelError(
                "no start activity with createInstance" if not starts
                else "more than one start activity with createInstance",
                model.root.line, self.source,
            )


def parse_process(xml: str, source: str = "<bpel>") -> ProcessModel:
    return _Parser(source).process(_read_xml(xml, source))


def load_process(path: Union[str, Path]) -> ProcessModel:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise BpelError(f"cannot read: {exc.strerror}", source=str(path)) from None
    return parse_process(text, str(path))


# -- serialization -------------------------------------------------------------


def _attr_text(key, value) -> str:
    if isinstance(value, bool):
        value = ("true" if value else "false") if key == "noinclude" else ("yes" if value else "no")
    return f" {key}={quoteattr(str(value))}"


def _plain_attrs(attrs: dict, skip=()) -> str:
    return "".join(
        _attr_text(k, v) for k, v in attrs.items()
        if k not in skip and k not in _EXPRESSIONS and k not in ("copies", "conditions", "branch")
    )


def _emit(node: ActivityNode, depth: int, out: list):
    pad = "  " * depth
    a = node.attributes
    if node.kind == "assign":
        out.append(f"{pad}<assign{_plain_attrs(a)}>")
        for c in a["copies"]:
            out.append(f"{pad}  <copy>")
            if c.from_variable is not None:
                part = f" part={quoteattr(c.from_part)}" if c.from_part is not None else ""
                out.append(f"{pad}    <from variable={quoteattr(c.from_variable)}{part}/>")
            else:
                out.append(f"{pad}    <from>{escape(c.literal or '')}</from>")
            part = f" part={quoteattr(c.to_part)}" if c.to_part is not None else ""
            out.append(f"{pad}    <to variable={quoteattr(c.to_variable)}{part}/>")
            out.append(f"{pad}  </copy>")
        out.append(f"{pad}</assign>")
        return
    if node.kind == "if":
        out.append(f"{pad}<if{_plain_attrs(a)}>")
        conds = a["conditions"]
        for i, ch in enumerate(node.children):
            if i == 0:
                out.append(f"{pad}  <condition>{escape(conds[0])}</condition>")
                _emit(ch, depth + 1, out)
            elif i < len(conds):
                out.append(f"{pad}  <elseif>")
                out.append(f"{pad}    <condition>{escape(conds[i])}</condition>")
                _emit(ch, depth + 2, out)
                out.append(f"{pad}  </elseif>")
            else:
                out.append(f"{pad}  <else>")
                _emit(ch, depth + 2, out)
                out.append(f"{pad}  </else>")
        out.append(f"{pad}</if>")
        return
    if node.kind == "pick":
        out.append(f"{pad}<pick{_plain_attrs(a)}>")
        for ch in node.children:
            tag = ch.attributes["branch"]
            out.append(f"{pad}  <{tag}{_plain_attrs(ch.attributes)}>")
            for key in ("for", "until"):
                if key in ch.attributes:
                    out.append(f"{pad}    <{key}>{escape(ch.attributes[key])}</{key}>")
            _emit(ch.children[0], depth + 2, out)
            out.append(f"{pad}  </{tag}>")
        out.append(f"{pad}</pick>")
        return
    skip = ()
    if node.kind == "flow" and a.get("parallel") is True:
        skip = ("parallel",)
    if node.kind == "forEach" and a.get("parallel") is False:
        skip = ("parallel",)
    head = f"{pad}<{node.kind}{_plain_attrs(a, skip)}"
    exprs = [k for k in _EXPRESSIONS if k in a]
    if not node.children and not exprs:
        out.append(head + "/>")
        return
    out.append(head + ">")
    for key in exprs:
        if key != "condition" or node.kind != "repeatUntil":
            out.append(f"{pad}  <{key}>{escape(a[key])}</{key}>")
    for ch in node.children:
        _emit(ch, depth + 1, out)
    if node.kind == "repeatUntil" and "condition" in a:
        out.append(f"{pad}  <condition>{escape(a['condition'])}</condition>")
    out.append(f"{pad}</{node.kind}>")


def to_xml(model: ProcessModel) -> str:
    out = [f'<process name={quoteattr(model.name)} xmlns="{BPEL_NS}">']
    if model.partner_links:
        out.append("  <partnerLinks>")
        out += [f"    <partnerLink name={quoteattr(p.name)}/>" for p in model.partner_links]
        out.append("  </partnerLinks>")
    if model.variables:
        out.append("  <variables>")
        for v in model.variables:
            extra = ""
            if v.assets:
                extra += f" asset={quoteattr(','.join(v.assets))}"
            if v.parts:
                extra += f" parts={quoteattr(','.join(v.parts))}"
            out.append(f"    <variable name={quoteattr(v.name)}{extra}/>")
        out.append("  </variables>")
    _emit(model.root, 1, out)
    out.append("</process>")
    return "\n".join(out) + "\n"


# -- categories and dependencies -----------------------------------------------


def categorize(node: ActivityNode) -> Category:
    """Category of an activity.

    Structured activities that cannot split (a serial forEach or flow, an
    ``if`` whose branches are structurally equal) still contain interactions,
    so they are treated as transparent rather than ignored.
    """
    k = node.kind
    if k in CATEGORY_1:
        return Category.INTERACTION
    if k == "sequence":
        return Category.SPLITTING
    if k in ("flow", "forEach"):
        return Category.SPLITTING if node.attributes.get("parallel") else Category.TRANSPARENT
    if k == "if":
        sigs = {ch.signature() for ch in node.children}
        different = len(sigs) > 1 or len(node.children) == len(node.attributes["conditions"])
        return Category.SPLITTING if different else Category.TRANSPARENT
    if k in CATEGORY_3:
        return Category.TRANSPARENT
    return Category.IGNORED


def variable_dependencies(node: ActivityNode, model: Optional[ProcessModel] = None
                          ) -> list[tuple[str, str, DependencyKind]]:
    """``(dependent, dependee, data)`` per copy between two different variables."""
    if node.kind != "assign":
        raise BpelError(f"variable dependencies need an assign, got {node.kind}", node.line)
    deps = []
    for c in node.attributes["copies"]:
        if model is not None:
            model.variable(c.to_variable)
            if c.from_variable is not None:
                model.variable(c.from_variable)
        if c.from_variable is not None and c.from_variable != c.to_variable:
            deps.append((c.to_variable, c.from_variable, DependencyKind.DATA))
    return deps


# -- analysis --------------------------------------------------------------------


class _Contexts:
    """What analysis accumulates: the translated tuples and variable links."""

    def __init__(self, model: ProcessModel):
        self.model = model
        self.calls: list[ServiceCallTuple] = []
        self.variable_deps: list[tuple[str, str, str, DependencyKind]] = []
        self.awaiting_callback: set[str] = set()
        self.received_from: set[str] = set()
        self.exited = False
        self._count = 0

    def assets(self, var: Optional[str]) -> tuple[str, ...]:
        return self.model.variable(var).assets if var else ()

    def label(self, node: ActivityNode) -> str:
        self._count += 1
        return node.name or f"s{self._count}"


def _union(*lists) -> tuple[str, ...]:
    return tuple(dict.fromkeys(a for lst in lists for a in lst))


def develop(node: ActivityNode, contexts: _Contexts, flag: SlicerFlag) -> SlicerFlag:
    """Translate one category-1 activity; returns the flag left for what follows.

    A partner interaction spends a pending split flag.
    """
    x = contexts.model.name
    a = node.attributes
    par = flag is SlicerFlag.SPLIT
    if node.kind == "exit":
        contexts.exited = True
        return flag
    step = contexts.label(node)
    if node.kind == "assign":
        copies = a["copies"]
        ins = _union(*(contexts.assets(c.from_variable) for c in copies if c.from_variable))
        outs = _union(*(contexts.assets(c.to_variable) for c in copies))
        contexts.variable_deps += [(step, *d) for d in variable_dependencies(node, contexts.model)]
        if ins or outs:
            contexts.calls.append(ServiceCallTuple(step, x, x, CallKind.ROUND_TRIP, ins, outs))
        return flag
    p = a["partnerLink"]
    if node.kind == "receive":
        assets = contexts.assets(a.get("variable"))
        if p in contexts.awaiting_callback:
            contexts.awaiting_callback.discard(p)
            kind = CallKind.DATA_RESPONSE if assets else CallKind.CONTROL_RESPONSE
            call = ServiceCallTuple(step, x, p, kind, (), assets, parallel=par)
        else:
            contexts.received_from.add(p)
            kind = CallKind.DATA_CALL if assets else CallKind.CONTROL_CALL
            call = ServiceCallTuple(step, p, x, kind, assets, (), parallel=par)
    elif node.kind == "reply":
        # exclusive branches may each reply to the same receive
        if p not in contexts.received_from:
            raise BpelError(f"reply to {p!r} without a matching receive", node.line,
                            contexts.model.source)
        assets = contexts.assets(a.get("variable"))
        kind = CallKind.DATA_RESPONSE if assets else CallKind.CONTROL_RESPONSE
        call = ServiceCallTuple(step, p, x, kind, (), assets, parallel=par)
    else:
        ins = contexts.assets(a.get("inputVariable"))
        if "outputVariable" in a:
            outs = contexts.assets(a["outputVariable"])
            call = ServiceCallTuple(step, x, p, CallKind.ROUND_TRIP, ins, outs,
                                    includes_input=not a.get("noinclude", False), parallel=par)
        else:
            contexts.awaiting_callback.add(p)
            kind = CallKind.DATA_CALL if ins else CallKind.CONTROL_CALL
            call = ServiceCallTuple(step, x, p, kind, ins, (), parallel=par)
    contexts.calls.append(call)
    return SlicerFlag.UPDATE


def analyze(node: ActivityNode, contexts: _Contexts, flag: SlicerFlag) -> SlicerFlag:
    if contexts.exited:
        return flag
    cat = categorize(node)
    if cat is Category.INTERACTION:
        flag = develop(node, contexts, flag)
        for ch in node.children:  # the handler of a pick's onMessage
            flag = analyze(ch, contexts, flag)
        return flag
    if cat is Category.SPLITTING:
        if node.kind == "sequence":
            for ch in node.children:
                flag = analyze(ch, contexts, flag)
            return flag
        for ch in node.children:
            analyze(ch, contexts, SlicerFlag.SPLIT)
        return SlicerFlag.UPDATE
    if cat is Category.TRANSPARENT:
        out = flag
        for ch in node.children:
            if analyze(ch, contexts, flag) is not flag:
                out = SlicerFlag.UPDATE
        return out
    return flag


def translate(model: ProcessModel) -> _Contexts:
    """Walk the process once and collect its service-call tuples."""
    contexts = _Contexts(model)
    analyze(model.root, contexts, SlicerFlag.UPDATE)
    return contexts


def process_graph(model: ProcessModel) -> ServiceCallGraph:
    """SCG of the process: partner interactions plus variable-level data edges."""
    contexts = translate(model)
    graph = build_graph(contexts.calls)
    kinds = {f"{model.name}.{v.name}": PartyKind.VARIABLE for v in model.variables}
    for n, (step, dependent, dependee, _) in enumerate(contexts.variable_deps, start=1):
        call = ServiceCallTuple(f"{step}/{n}", f"{model.name}.{dependee}",
                                f"{model.name}.{dependent}", CallKind.DATA_CALL, (dependee,))
        graph = record_call(graph, call, kinds)
    return graph


# -- coordination ----------------------------------------------------------------


@dataclass
class Assembler:
    contexts: SliceReport
    config: dict

    @property
    def start_process(self) -> bool:
        return self.config["start_process"]

    def to_json(self) -> str:
        return json.dumps(self.config, indent=2) + "\n"


def _verdicts(report: SliceReport, events: list[NegotiationEvent]) -> list[dict]:
    latest: dict[str, str] = {}
    for ctx in report.rop_contexts + report.qop_contexts:
        latest[ctx.name] = ctx.ref
    out = []
    for name, ref in latest.items():
        mine = [e for e in events if e.context == name]
        denied = [e for e in mine if e.denied]
        out.append({
            "context": name,
            "latest": ref,
            "negotiations": len(mine),
            "satisfied": not denied,
            "denied_steps": list(dict.fromkeys(e.step for e in denied)),
        })
    return out


def coordinator(process: ProcessModel, bundle: PolicyBundle) -> Assembler:
    """Pre-process a process into contexts and negotiation verdicts."""
    parties = [process.name] + process.partner_names
    missing = [p for p in parties if p not in bundle.rops or p not in bundle.qops]
    if missing:
        raise PolicyError(f"bundle has no policies for {', '.join(missing)}")
    contexts = translate(process)
    calls = contexts.calls
    assets, requests = AssetSlicer(calls), RequestSlicer(calls)
    kinds = []
    for i, c in enumerate(calls):
        last = i == len(calls) - 1
        kinds.append((classify_development(requests, c, last),
                      classify_development(assets, c, last)))
    assets.finish()
    requests.finish()
    events = negotiation_events(calls, bundle)
    report = _report(assets, requests, events)
    verdicts = _verdicts(report, events)
    config = {
        "process": process.name,
        "start_process": all(v["satisfied"] for v in verdicts),
        "steps": [
            {"step": c.step, "request_based": _kind(q), "asset_based": _kind(r)}
            for c, (q, r) in zip(calls, kinds)
        ],
        "verdicts": verdicts,
        "report": report.to_dict(),
    }
    return Assembler(report, config)


def _kind(k: Optional[DevelopmentKind]) -> Optional[str]:
    return None if k is None else k.value
