"""Service call graph: parties, service-call tuples and the dependency calculus.

Parties (partners or process variables) are nodes; every service-call tuple is
an edge carrying the assets exchanged by the interaction.  Direct dependencies
are derived from the edges, indirect ones by chaining them: a chain made only
of data dependencies is a data dependency, a chain with at least one control
dependency is a control dependency.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional


class GraphError(ValueError):
    pass


class PartyKind(str, enum.Enum):
    PARTNER = "partner"
    VARIABLE = "variable"


class DependencyKind(str, enum.Enum):
    CONTROL = "control"
    DATA = "data"


class CallKind(str, enum.Enum):
    CONTROL_CALL = "control_call"
    CONTROL_RESPONSE = "control_response"
    DATA_CALL = "data_call"
    DATA_RESPONSE = "data_response"
    ROUND_TRIP = "round_trip"
    FAILED = "failed"


REQUEST_KINDS = frozenset(
    {CallKind.CONTROL_CALL, CallKind.DATA_CALL, CallKind.ROUND_TRIP, CallKind.FAILED}
)
RESPONSE_KINDS = frozenset(
    {CallKind.CONTROL_RESPONSE, CallKind.DATA_RESPONSE, CallKind.ROUND_TRIP}
)


@dataclass(frozen=True)
class PartyId:
    name: str
    kind: PartyKind = PartyKind.PARTNER

    def __post_init__(self):
        if not self.name:
            raise GraphError("party name must be non-empty")

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class AssetId:
    name: str
    identifiable: bool = False

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class ServiceCallTuple:
    """One interaction ``<step, caller ~ callee, assets_in, assets_out>``.

    ``caller`` is always the left-hand party of the tuple: the one that sends
    the request, or receives the response.  ``parallel`` marks tuples issued
    from a parallel control structure (forces a split when slicing).
    """

    step: str
    caller: str
    callee: str
    kind: CallKind
    assets_in: tuple[str, ...] = ()
    assets_out: tuple[str, ...] = ()
    includes_input: bool = True
    parallel: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", CallKind(self.kind))
        object.__setattr__(self, "assets_in", tuple(self.assets_in))
        object.__setattr__(self, "assets_out", tuple(self.assets_out))
        if not self.step:
            raise GraphError("step label must be non-empty")
        k = self.kind
        if k in (CallKind.CONTROL_CALL, CallKind.CONTROL_RESPONSE, CallKind.FAILED):
            if self.assets_in or self.assets_out:
                raise GraphError(f"step {self.step}: {k.value} tuple cannot carry assets")
        elif k is CallKind.DATA_CALL and self.assets_out:
            raise GraphError(f"step {self.step}: data_call carries input assets only")
        elif k is CallKind.DATA_RESPONSE and self.assets_in:
            raise GraphError(f"step {self.step}: data_response carries output assets only")
        if not self.includes_input and k is not CallKind.ROUND_TRIP:
            raise GraphError(f"step {self.step}: noinc is only meaningful on round trips")

    @property
    def is_request(self) -> bool:
        return self.kind in REQUEST_KINDS and self.caller != self.callee

    @property
    def is_response(self) -> bool:
        return self.kind in RESPONSE_KINDS and self.caller != self.callee

    @property
    def is_self_call(self) -> bool:
        return self.caller == self.callee

    @property
    def request_step(self) -> str:
        # "i+ii" style labels name the request and the response halves
        return self.step.split("+")[0]

    @property
    def response_step(self) -> str:
        return self.step.split("+")[-1]

    def direct_dependencies(self) -> list[tuple[str, str, DependencyKind]]:
        """Direct ``(dependent, dependee, kind)`` triples induced by this edge."""
        a, b, k = self.caller, self.callee, self.kind
        if k is CallKind.FAILED:
            return []
        if k is CallKind.CONTROL_CALL:
            return [(b, a, DependencyKind.CONTROL)]
        if k is CallKind.CONTROL_RESPONSE:
            return [(a, b, DependencyKind.CONTROL)]
        if k is CallKind.DATA_CALL:
            return [(b, a, DependencyKind.DATA)]
        if k is CallKind.DATA_RESPONSE:
            return [(a, b, DependencyKind.DATA)]
        deps = []
        if self.assets_out:
            deps.append((a, b, DependencyKind.DATA))
        if self.assets_in and self.includes_input:
            deps.append((b, a, DependencyKind.DATA))
        if not deps:
            deps.append((b, a, DependencyKind.CONTROL))
        # a self round trip yields the same triple twice
        return list(dict.fromkeys(deps))


@dataclass(frozen=True)
class ServiceCallGraph:
    nodes: tuple[PartyId, ...] = ()
    edges: tuple[ServiceCallTuple, ...] = ()

    @property
    def node_names(self) -> list[str]:
        return [n.name for n in self.nodes]

    def node(self, name: str) -> PartyId:
        for n in self.nodes:
            if n.name == name:
                return n
        raise GraphError(f"unknown party {name!r}")

    @property
    def direct_dependencies(self) -> frozenset[tuple[str, str, DependencyKind]]:
        return frozenset(d for e in self.edges for d in e.direct_dependencies())


def record_call(
    graph: ServiceCallGraph, call: ServiceCallTuple, kinds: Optional[dict] = None
) -> ServiceCallGraph:
    """Return a new graph with ``call`` appended; unknown endpoints are registered.

    ``kinds`` optionally maps party names to :class:`PartyKind` for parties
    registered by this call.
    """
    if any(e.step == call.step for e in graph.edges):
        raise GraphError(f"duplicate step label {call.step!r}")
    kinds = kinds or {}
    nodes = list(graph.nodes)
    known = {n.name for n in nodes}
    for name in (call.caller, call.callee):
        if name not in known:
            nodes.append(PartyId(name, PartyKind(kinds.get(name, PartyKind.PARTNER))))
            known.add(name)
    return ServiceCallGraph(tuple(nodes), graph.edges + (call,))


def build_graph(calls: Iterable[ServiceCallTuple], kinds: Optional[dict] = None) -> ServiceCallGraph:
    graph = ServiceCallGraph()
    for c in calls:
        graph = record_call(graph, c, kinds)
    return graph


def _adjacency(graph: ServiceCallGraph) -> dict[str, dict[str, set[DependencyKind]]]:
    adj: dict[str, dict[str, set[DependencyKind]]] = {n: {} for n in graph.node_names}
    for dependent, dependee, kind in graph.direct_dependencies:
        adj[dependent].setdefault(dependee, set()).add(kind)
    return adj


def indirect_dependency(graph: ServiceCallGraph, a: str, b: str) -> Optional[DependencyKind]:
    """Dependency of ``a`` on ``b`` through any chain of direct dependencies.

    Chains never revisit a party.  Any chain containing a control edge makes
    the result ``CONTROL``; otherwise a pure data chain gives ``DATA``.  For
    ``a == b`` only a direct self-dependency counts.
    """
    graph.node(a)
    graph.node(b)
    adj = _adjacency(graph)
    if a == b:
        kinds = adj[a].get(a, set())
        if DependencyKind.CONTROL in kinds:
            return DependencyKind.CONTROL
        return DependencyKind.DATA if kinds else None

    found_data = False
    # depth-first over simple chains; (node, has_control) pairs already
    # expanded with a superset of the current visited set cannot help
    visited = {a}

    def walk(node: str, has_control: bool) -> bool:
        nonlocal found_data
        for nxt, kinds in adj[node].items():
            if nxt in visited:
                continue
            for kind in kinds:
                ctl = has_control or kind is DependencyKind.CONTROL
                if nxt == b:
                    if ctl:
                        return True
                    found_data = True
                    continue
                visited.add(nxt)
                hit = walk(nxt, ctl)
                visited.discard(nxt)
                if hit:
                    return True
        return False

    if walk(a, False):
        return DependencyKind.CONTROL
    return DependencyKind.DATA if found_data else None


_DOT_STYLE = {
    "control": 'color=blue, style=solid',
    "data": 'color=green, style=solid',
    "nonagg": 'color=green, style=dashed',
    "failed": 'color=blue, style=dashed',
}


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(graph: ServiceCallGraph) -> str:
    """Render the graph as a DOT digraph; arrows follow the message flow."""
    if not graph.nodes:
        return "digraph scg { }\n"
    lines = ["digraph scg {"]
    for n in graph.nodes:
        shape = "box" if n.kind is PartyKind.VARIABLE else "ellipse"
        lines.append(f"  {_quote(n.name)} [shape={shape}];")
    for e in graph.edges:
        k = e.kind
        if k is CallKind.FAILED:
            style = "failed"
        elif k in (CallKind.CONTROL_CALL, CallKind.CONTROL_RESPONSE):
            style = "control"
        elif k is CallKind.ROUND_TRIP and not (e.assets_in or e.assets_out):
            style = "control"
        elif k is CallKind.ROUND_TRIP and not e.includes_input:
            style = "nonagg"
        else:
            style = "data"
        if k in (CallKind.CONTROL_RESPONSE, CallKind.DATA_RESPONSE):
            src, dst = e.callee, e.caller
        else:
            src, dst = e.caller, e.callee
        attrs = [f"id={_quote(e.step)}"]
        assets = list(dict.fromkeys(e.assets_in + e.assets_out))
        attrs.append(f"label={_quote(','.join(assets) if assets else e.step)}")
        attrs.append(_DOT_STYLE[style])
        if k in (CallKind.ROUND_TRIP, CallKind.FAILED):
            attrs.append("dir=both")
        lines.append(f"  {_quote(src)} -> {_quote(dst)} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
