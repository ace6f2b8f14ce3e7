"""Sub-context slicing of a service-call tuple list.

Asset-based slicing follows the assets: a context is created when an original
asset is launched, updated when further assets merge into it or a new consumer
receives it, split when copies of it are forwarded to several partners and
develop separately, and merged when assets of two unrelated contexts combine.

Request-based slicing follows the requests: a party calling on its own behalf
creates a context holding its QoP; a party calling on behalf of an earlier
requester adds its QoP to that requester's context, or splits it when it calls
several partners for the same requester.  On-behalf-of relations are kept as
per-party frame stacks (interruption suspends a frame, a response from a
partner called for a suspended frame resumes it).
"""
from __future__ import annotations

import enum
import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .scg import CallKind, GraphError, ServiceCallTuple


class SliceError(GraphError):
    pass


class DevelopmentKind(str, enum.Enum):
    CREATE = "create"
    UPDATE = "update"
    MERGE = "merge"
    SPLIT = "split"
    END = "end"


@dataclass(frozen=True)
class ContextDevelopmentTuple:
    name: str
    version: int
    parents: tuple[tuple[str, int], ...]
    assets: tuple[str, ...]
    policies: tuple[str, ...]
    step: str

    def __post_init__(self):
        if self.version < 1:
            raise SliceError("context versions start at 1")

    @property
    def ref(self) -> str:
        return f"{self.name}.{self.version}"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "version": self.version,
            "parents": [f"{n}.{v}" for n, v in self.parents],
            "assets": list(self.assets),
            "policies": list(self.policies),
            "step": self.step,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ContextDevelopmentTuple":
        parents = tuple(
            (p.rsplit(".", 1)[0], int(p.rsplit(".", 1)[1])) for p in d["parents"]
        )
        return cls(d["name"], d["version"], parents, tuple(d["assets"]),
                   tuple(d["policies"]), d["step"])

    def __str__(self):
        parents = ",".join(f"{n}.{v}" for n, v in self.parents) or "φ"
        head = f"<{self.name}, {self.version}, ({parents}), "
        if self.assets:
            head += f"({','.join(self.assets)}), "
        return head + f"({','.join(self.policies)}), {self.step}>"


@dataclass(frozen=True)
class Development:
    step: str
    kind: DevelopmentKind
    context: str
    index: int = 0

    def to_dict(self) -> dict:
        return {"step": self.step, "kind": self.kind.value, "context": self.context}


@dataclass(frozen=True)
class SliceReport:
    rop_contexts: tuple[ContextDevelopmentTuple, ...] = ()
    qop_contexts: tuple[ContextDevelopmentTuple, ...] = ()
    developments: tuple[Development, ...] = ()
    attributions: tuple[dict, ...] = ()
    negotiations: tuple = ()

    def to_dict(self) -> dict:
        return {
            "rop_contexts": [c.to_dict() for c in self.rop_contexts],
            "qop_contexts": [c.to_dict() for c in self.qop_contexts],
            "developments": [d.to_dict() for d in self.developments],
            "attributions": [dict(a) for a in self.attributions],
            "negotiations": [n.to_dict() for n in self.negotiations],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"


def rop_ref(party: str) -> str:
    return f"RoP_{party}"


def qop_ref(party: str) -> str:
    return f"QoP_{party}"


def _ordered(base: Sequence[str], items: Sequence[str]) -> tuple[str, ...]:
    # items already in base keep base order, the rest follow in their own order
    head = [a for a in base if a in items]
    return tuple(dict.fromkeys(head + [a for a in items if a not in head]))


def _union(*lists: Iterable[str]) -> tuple[str, ...]:
    return tuple(dict.fromkeys(x for lst in lists for x in lst))


class _Lineages:
    """Versioned contexts sharing the bookkeeping of both slicers."""

    def __init__(self, prefix: str, with_assets: bool):
        self.prefix = prefix
        self.with_assets = with_assets
        self.versions: dict[str, list[ContextDevelopmentTuple]] = {}
        self.output: list[ContextDevelopmentTuple] = []
        self.developments: list[Development] = []
        self.last_index: dict[str, int] = {}
        self.merged_into: dict[str, str] = {}
        self.ended: set[str] = set()
        self.members: dict[str, set[str]] = defaultdict(set)

    def resolve(self, name: str) -> str:
        while name in self.merged_into:
            name = self.merged_into[name]
        return name

    def current(self, name: str) -> ContextDevelopmentTuple:
        return self.versions[name][-1]

    def ancestors(self, name: str) -> set[str]:
        seen: set[str] = set()
        todo = [p for v in self.versions[name] for p, _ in v.parents]
        while todo:
            p = todo.pop()
            if p in seen or p == name:
                continue
            seen.add(p)
            todo.extend(q for v in self.versions[p] for q, _ in v.parents)
        return seen

    def lineage_members(self, name: str) -> set[str]:
        out = set(self.members[name])
        for a in self.ancestors(name):
            out |= self.members[a]
        return out

    def fresh_name(self, a: str, b: str, step: str) -> str:
        name = f"{self.prefix}_{a}{b}"
        return name if name not in self.versions else f"{name}@{step}"

    def _emit(self, ctx: ContextDevelopmentTuple, kind: DevelopmentKind, index: int):
        self.versions.setdefault(ctx.name, []).append(ctx)
        self.output.append(ctx)
        self.last_index[ctx.name] = index
        self.developments.append(Development(ctx.step, kind, ctx.name, index))

    def end(self, name: str, step: str, index: int):
        if name not in self.ended:
            self.ended.add(name)
            self.developments.append(Development(step, DevelopmentKind.END, name, index))

    def create(self, name, parents, assets, policies, step, index,
               kind=DevelopmentKind.CREATE) -> str:
        ctx = ContextDevelopmentTuple(
            name, 1, tuple(parents), tuple(assets) if self.with_assets else (),
            _union(policies), step,
        )
        self._emit(ctx, kind, index)
        return name

    def update(self, name, step, index, assets=None, add_policies=()) -> str:
        cur = self.current(name)
        ctx = ContextDevelopmentTuple(
            name, cur.version + 1, ((name, cur.version),),
            cur.assets if assets is None or not self.with_assets else tuple(assets),
            _union(cur.policies, add_policies), step,
        )
        self._emit(ctx, DevelopmentKind.UPDATE, index)
        return name

    def merge(self, names, step, index, assets=None, add_policies=()) -> str:
        names = sorted(set(names), key=lambda n: (self.last_index[n], n))
        earlier = [n for n in names if self.last_index[n] < index] or names
        kept = max(earlier, key=lambda n: (self.last_index[n], names.index(n)))
        cur = self.current(kept)
        parents = tuple((n, self.current(n).version) for n in names)
        policies = _union(*(self.current(n).policies for n in names), add_policies)
        if assets is None:
            assets = _union(*(self.current(n).assets for n in names))
        ctx = ContextDevelopmentTuple(
            kept, cur.version + 1, parents,
            tuple(assets) if self.with_assets else (), policies, step,
        )
        self._emit(ctx, DevelopmentKind.MERGE, index)
        for n in names:
            if n != kept:
                self.merged_into[n] = kept
                self.members[kept] |= self.members[n]
                self.end(n, step, index)
        return kept

    def finish(self, step: Optional[str], index: int):
        if step is None:
            return
        for name in self.versions:
            if name not in self.merged_into:
                self.end(name, step, index)


# -- asset-based slicing -----------------------------------------------------


@dataclass(eq=False)
class _Branch:
    """A forwarded copy of a context's assets that has not developed yet."""

    parent: object  # str context name or _Branch
    bound: Optional[str] = None


class AssetSlicer:
    """Incremental asset-based slicer; feed tuples in trace order."""

    def __init__(self, calls: Sequence[ServiceCallTuple]):
        self.calls = list(calls)
        self.ctx = _Lineages("R", with_assets=True)
        self.holdings: dict[tuple[str, str], object] = {}
        self.known: set[str] = set()
        self.owner: dict[str, str] = {}
        self._branches: dict[tuple, _Branch] = {}
        self.fanout: dict[tuple[str, str], set[str]] = defaultdict(set)
        for c in self.calls:
            if c.is_self_call or c.kind is CallKind.FAILED:
                continue
            if c.kind is CallKind.DATA_CALL or (
                c.kind is CallKind.ROUND_TRIP and c.includes_input
            ):
                for a in c.assets_in:
                    self.fanout[(c.caller, a)].add(c.callee)
        self.index = -1
        self.last_kind: Optional[DevelopmentKind] = None

    # reference helpers
    def _resolve(self, ref):
        while isinstance(ref, _Branch):
            if ref.bound is None:
                return ref
            ref = ref.bound
        return self.ctx.resolve(ref)

    def _base(self, ref) -> str:
        ref = self._resolve(ref)
        while isinstance(ref, _Branch):
            ref = self._resolve(ref.parent)
        return ref

    def context_of(self, party: str, asset: str) -> Optional[str]:
        ref = self.holdings.get((party, asset))
        return None if ref is None else self._base(ref)

    def _lineages(self, refs) -> list:
        """Distinct targets of ``refs``, dropping ancestors of other targets."""
        targets = list(dict.fromkeys(self._resolve(r) for r in refs))
        names = {self._base(t) for t in targets}
        out = []
        for t in targets:
            base = self._base(t)
            if isinstance(t, _Branch):
                # an undeveloped copy next to its own context adds nothing
                if any(self._base(o) == base and not isinstance(o, _Branch) for o in targets):
                    continue
            if any(base in self.ctx.ancestors(n) for n in names if n != base):
                continue
            out.append(t)
        return out

    def _held(self, party: str, asset: str, step: str):
        try:
            return self.holdings[(party, asset)]
        except KeyError:
            raise SliceError(
                f"step {step}: {party} uses asset {asset!r} before it was provided to it"
            ) from None

    def _split(self, branch: _Branch, producer: str, consumer: str, assets, policies,
               step: str) -> str:
        parent = self._base(branch)
        cur = self.ctx.current(parent)
        name = self.ctx.create(
            self.ctx.fresh_name(producer, consumer, step), [(parent, cur.version)],
            assets, _union(cur.policies, policies), step, self.index, DevelopmentKind.SPLIT,
        )
        branch.bound = name
        self.ctx.end(parent, step, self.index)
        return name

    def _develop(self, targets, producer, consumer, assets, policies, step) -> str:
        """Fold a development into ``targets``: split, update or merge."""
        if len(targets) == 1:
            t = targets[0]
            if isinstance(t, _Branch):
                self.last_kind = DevelopmentKind.SPLIT
                return self._split(t, producer, consumer, assets, policies, step)
            self.last_kind = DevelopmentKind.UPDATE
            return self.ctx.update(t, step, self.index, assets, policies)
        names = [self._base(t) for t in targets]
        self.last_kind = DevelopmentKind.MERGE
        return self.ctx.merge(names, step, self.index, None, policies)

    def _deliver(self, sender: str, receiver: str, asset: str, parallel: bool):
        ref = self.holdings[(sender, asset)]
        if parallel or len(self.fanout[(sender, asset)]) >= 2:
            key = (sender, receiver, id(self._resolve(ref)))
            branch = self._branches.get(key)
            if branch is None:
                branch = self._branches[key] = _Branch(ref)
            ref = branch
        self.holdings[(receiver, asset)] = ref
        self.ctx.members[self._base(ref)].add(receiver)

    def feed(self, call: ServiceCallTuple) -> Optional[DevelopmentKind]:
        self.index += 1
        self.last_kind = None
        if call.kind in (CallKind.CONTROL_CALL, CallKind.CONTROL_RESPONSE, CallKind.FAILED):
            return None
        if call.is_self_call:
            self._aggregate(call)
        else:
            if call.assets_in:
                self._request(call)
            if call.assets_out:
                self._response(call)
        return self.last_kind

    def _introduce(self, party: str, assets) -> None:
        for a in assets:
            self.known.add(a)
            self.owner[a] = party

    def _request(self, c: ServiceCallTuple):
        x, y, step = c.caller, c.callee, c.request_step
        new = [a for a in c.assets_in if a not in self.known]
        refs = [self._held(x, a, step) for a in c.assets_in if a in self.known]
        if new:
            self._introduce(x, new)
            targets = self._lineages(refs)
            if targets:
                name = self._develop(targets, x, y, new, [rop_ref(x)], step)
            else:
                self.last_kind = DevelopmentKind.CREATE
                name = self.ctx.create(self.ctx.fresh_name(x, y, step), [], new,
                                       [rop_ref(x)], step, self.index)
            for a in new:
                self.holdings[(x, a)] = name
            self.ctx.members[name] |= {x}
        for a in c.assets_in:
            self._deliver(x, y, a, c.parallel)

    def _response(self, c: ServiceCallTuple):
        x, y, step = c.caller, c.callee, c.response_step
        new = [a for a in c.assets_out if a not in self.known]
        known = [a for a in c.assets_out if a in self.known]
        known_refs = [self._held(y, a, step) for a in known]
        req_refs = [self.holdings[(y, a)] for a in c.assets_in]
        if new:
            self._introduce(y, new)
            src = (req_refs if c.includes_input else []) + known_refs
            if src:
                name = self._develop(self._lineages(src), y, x, new, [rop_ref(y)], step)
            else:
                parents = [self._base(r) for r in req_refs]
                parents = [(p, self.ctx.current(p).version) for p in dict.fromkeys(parents)]
                name = self.ctx.create(self.ctx.fresh_name(y, x, step), parents, new,
                                       [rop_ref(y)], step, self.index)
                self.last_kind = DevelopmentKind.CREATE
                if parents:
                    # the requester combines the reply with the data it asked about
                    names = [p for p, _ in parents] + [name]
                    base = self.ctx.current(parents[0][0]).assets
                    assets = _union(*(self.ctx.current(p).assets for p, _ in parents), new)
                    name = self.ctx.merge(names, step, self.index, _ordered(base, assets))
                    self.last_kind = DevelopmentKind.MERGE
            for a in new:
                self.holdings[(y, a)] = name
            for a in c.assets_out:
                self.holdings[(x, a)] = name if a in new else self.holdings[(y, a)]
            self.ctx.members[name] |= {x, y}
            return
        for a in known:
            self.holdings[(x, a)] = self.holdings[(y, a)]
        for name in dict.fromkeys(self._base(r) for r in known_refs):
            if x not in self.ctx.lineage_members(name):
                # a new consumer joins the context
                self.ctx.update(name, step, self.index)
                self.last_kind = DevelopmentKind.UPDATE
            self.ctx.members[name].add(x)

    def _aggregate(self, c: ServiceCallTuple):
        x, step = c.caller, c.response_step
        if not c.assets_out:
            return
        new = [a for a in c.assets_in if a not in self.known]
        refs = [self._held(x, a, step) for a in c.assets_in if a in self.known]
        self._introduce(x, new)
        add = [rop_ref(x)] if new else []
        targets = self._lineages(refs)
        if not targets:
            self.last_kind = DevelopmentKind.CREATE
            name = self.ctx.create(self.ctx.fresh_name(x, x, step), [], c.assets_in,
                                   [rop_ref(x)], step, self.index)
        elif len(targets) == 1 and not isinstance(targets[0], _Branch):
            base = self.ctx.current(targets[0]).assets
            self.last_kind = DevelopmentKind.UPDATE
            name = self.ctx.update(targets[0], step, self.index,
                                   _ordered(base, c.assets_in), add)
        elif len(targets) == 1:
            name = self._develop(targets, x, x, c.assets_in, add, step)
        else:
            names = [self._base(t) for t in targets]
            kept_hint = max(names, key=lambda n: self.ctx.last_index[n])
            assets = _ordered(self.ctx.current(kept_hint).assets, c.assets_in)
            self.last_kind = DevelopmentKind.MERGE
            name = self.ctx.merge(names, step, self.index, assets, add)
        for a in list(c.assets_in) + list(c.assets_out):
            if a in new or a in c.assets_out:
                self.holdings[(x, a)] = name
        for a in c.assets_out:
            if a not in self.known:
                self.known.add(a)
                self.owner.setdefault(a, x)
        self.ctx.members[name].add(x)

    def finish(self):
        last = self.calls[-1].response_step if self.calls else None
        self.ctx.finish(last, len(self.calls))

    def run(self) -> list[ContextDevelopmentTuple]:
        for c in self.calls:
            self.feed(c)
        self.finish()
        return list(self.ctx.output)


def asset_slice(calls: Sequence[ServiceCallTuple]) -> list[ContextDevelopmentTuple]:
    return AssetSlicer(calls).run()


# -- request-based slicing ---------------------------------------------------


@dataclass(eq=False)
class OnBehalfFrame:
    fid: int
    servicer: str
    requester: str
    context: str
    pending_callees: set = field(default_factory=set)
    active: bool = True


class RequestSlicer:
    """Incremental request-based slicer maintaining on-behalf-of frames."""

    def __init__(self, calls: Sequence[ServiceCallTuple], _dry: bool = False):
        self.calls = list(calls)
        self.ctx = _Lineages("Q", with_assets=False)
        self.stacks: dict[str, list[OnBehalfFrame]] = defaultdict(list)
        self.roots: dict[tuple[str, str], str] = {}
        self.children: dict[tuple[int, str], str] = {}
        self.attributions: list[dict] = []
        self.request_context: dict[int, str] = {}
        self._next_fid = 0
        self._dry = _dry
        self.fanout: dict[int, set[str]] = defaultdict(set)
        if not _dry:
            # a first pass records which partners each frame ends up calling
            dry = RequestSlicer(self.calls, _dry=True)
            for c in self.calls:
                dry.feed(c)
            self.fanout = dry.fanout
        self.index = -1
        self.last_kind: Optional[DevelopmentKind] = None

    def active_frames(self, party: str) -> list[OnBehalfFrame]:
        return [f for f in self.stacks[party] if f.active]

    def on_behalf(self, party: str) -> list[str]:
        return [f.requester for f in self.active_frames(party)]

    def feed(self, call: ServiceCallTuple) -> Optional[DevelopmentKind]:
        self.index += 1
        self.last_kind = None
        if call.is_self_call:
            return None
        if call.kind in (CallKind.CONTROL_CALL, CallKind.DATA_CALL, CallKind.ROUND_TRIP,
                         CallKind.FAILED):
            self._request(call)
        if call.kind in (CallKind.CONTROL_RESPONSE, CallKind.DATA_RESPONSE,
                         CallKind.ROUND_TRIP):
            self._response(call)
        return self.last_kind

    def _request(self, c: ServiceCallTuple):
        x, y, step = c.caller, c.callee, c.request_step
        active = self.active_frames(x)
        names = list(dict.fromkeys(self.ctx.resolve(f.context) for f in active))
        if self._dry:
            for f in active:
                self.fanout[f.fid].add(y)
            ctx = "?"
        elif not active:
            ctx = self.roots.get((x, y))
            if ctx is None:
                ctx = self.ctx.create(self.ctx.fresh_name(x, y, step), [], (), [qop_ref(x)],
                                      step, self.index)
                self.roots[(x, y)] = ctx
                self.last_kind = DevelopmentKind.CREATE
            ctx = self.ctx.resolve(ctx)
        elif len(names) == 1:
            frame = active[-1]
            k = names[0]
            if c.parallel or len(self.fanout[frame.fid]) >= 2:
                ctx = self.children.get((frame.fid, y))
                if ctx is None:
                    cur = self.ctx.current(k)
                    ctx = self.ctx.create(
                        self.ctx.fresh_name(x, y, step), [(k, cur.version)], (),
                        _union(cur.policies, [qop_ref(x)]), step, self.index,
                        DevelopmentKind.SPLIT,
                    )
                    self.children[(frame.fid, y)] = ctx
                    self.ctx.end(k, step, self.index)
                    self.last_kind = DevelopmentKind.SPLIT
                ctx = self.ctx.resolve(ctx)
            else:
                ctx = k
                if qop_ref(x) not in self.ctx.current(k).policies:
                    self.ctx.update(k, step, self.index, None, [qop_ref(x)])
                    self.last_kind = DevelopmentKind.UPDATE
        else:
            ctx = self.ctx.merge(names, step, self.index, None, [qop_ref(x)])
            self.last_kind = DevelopmentKind.MERGE
        for f in active:
            f.pending_callees.add(y)
        if not self._dry:
            self.ctx.members[ctx] |= {x, y}
            self.request_context[self.index] = ctx
            self.attributions.append(self._attribution(step, ctx, (x, y)))
        if c.kind is not CallKind.FAILED:
            for f in self.stacks[y]:
                f.active = False
            self.stacks[y].append(
                OnBehalfFrame(self._next_fid, y, x, ctx if not self._dry else "?")
            )
            self._next_fid += 1

    def _response(self, c: ServiceCallTuple):
        x, y, step = c.caller, c.callee, c.response_step
        stack = self.stacks[y]
        for i in range(len(stack) - 1, -1, -1):
            if stack[i].requester == x:
                frame = stack.pop(i)
                break
        else:
            raise SliceError(f"step {step}: response from {y} to {x} without a matching request")
        for f in reversed(self.stacks[x]):
            if y in f.pending_callees:
                f.pending_callees.discard(y)
                f.active = True
                break
        if not self._dry:
            self.attributions.append(
                self._attribution(step, self.ctx.resolve(frame.context), (x, y))
            )

    def _attribution(self, step: str, ctx: str, parties) -> dict:
        return {
            "step": step,
            "context": ctx,
            "on_behalf": {p: self.on_behalf(p) for p in parties},
        }

    def finish(self):
        last = self.calls[-1].response_step if self.calls else None
        self.ctx.finish(last, len(self.calls))

    def run(self) -> list[ContextDevelopmentTuple]:
        for c in self.calls:
            self.feed(c)
        self.finish()
        return list(self.ctx.output)


def request_slice(calls: Sequence[ServiceCallTuple]) -> list[ContextDevelopmentTuple]:
    return RequestSlicer(calls).run()


def classify_development(
    previous: Union[AssetSlicer, RequestSlicer], call: ServiceCallTuple, last: bool = False
) -> Optional[DevelopmentKind]:
    """Kind of development ``call`` causes on top of ``previous`` (mutated).

    Returns ``END`` for the final tuple of a trace when the tuple itself does
    not develop a context, and ``None`` when nothing develops.
    """
    kind = previous.feed(call)
    if kind is None and last:
        return DevelopmentKind.END
    return kind


def slice_trace(calls: Sequence[ServiceCallTuple]) -> SliceReport:
    """Run both slicers independently and combine them in step order."""
    assets = AssetSlicer(calls)
    requests = RequestSlicer(calls)
    for c in calls:
        requests.feed(c)
        assets.feed(c)
    assets.finish()
    requests.finish()
    return _report(assets, requests)


def _report(assets: AssetSlicer, requests: RequestSlicer, negotiations=()) -> SliceReport:
    devs = [(d.index, 0, i, d) for i, d in enumerate(requests.ctx.developments)]
    devs += [(d.index, 1, i, d) for i, d in enumerate(assets.ctx.developments)]
    return SliceReport(
        rop_contexts=tuple(assets.ctx.output),
        qop_contexts=tuple(requests.ctx.output),
        developments=tuple(d for *_, d in sorted(devs, key=lambda t: t[:3])),
        attributions=tuple(requests.attributions),
        negotiations=tuple(negotiations),
    )
