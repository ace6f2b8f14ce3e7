"""Policy negotiation driven by the slicers.

Two checks run as the trace is replayed:

* request: the requesting consortium's aggregated QoP (the request-based
  context the call belongs to) against the callee's RoP;
* delivery: a receiver's QoP against the aggregated RoPs of the asset-based
  context covering what it receives.

On-the-fly mode runs both and turns every denied interaction into a failed
one, pruning what it would have produced.  Asset-only mode runs the delivery
check alone, which is what pre-processing with asset-based slicing sees.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from .policy import (
    Boundary,
    Decision,
    PolicyBundle,
    aggregate_qops,
    aggregate_rops,
    combine,
    negotiate,
)
from .scg import CallKind, ServiceCallTuple
from .slicer import AssetSlicer, RequestSlicer, SliceReport, _report


@dataclass(frozen=True)
class NegotiationEvent:
    step: str
    index: int
    check: str  # "request" or "delivery"
    consumer: str
    provider: str
    context: str
    qop_members: tuple[str, ...]
    rop_members: tuple[str, ...]
    right: str
    decision: Decision

    @property
    def denied(self) -> bool:
        return not self.decision.satisfied

    def to_dict(self) -> dict:
        d = {
            "step": self.step,
            "check": self.check,
            "consumer": self.consumer,
            "provider": self.provider,
            "context": self.context,
            "qop_members": list(self.qop_members),
            "rop_members": list(self.rop_members),
            "right": self.right,
        }
        d.update(self.decision.to_dict())
        return d


def _decide(bundle, qop_refs, rop_agg, **fields):
    qop = aggregate_qops([bundle.resolve(r) for r in qop_refs])
    return [
        NegotiationEvent(
            qop_members=tuple(qop_refs), rop_members=rop_agg.members, right=right,
            decision=negotiate(qop, rop_agg, right, bundle.rights), **fields,
        )
        for right in bundle.rights
    ]


def _delivery_rops(bundle, policies, sender, receiver):
    direct, rest = [], []
    for ref in policies:
        rop = bundle.resolve(ref)
        if rop.owner == receiver:
            continue
        (direct if rop.owner == sender else rest).append(rop)
    parts = []
    if direct:
        parts.append(aggregate_rops(direct, Boundary.DIRECT_PARTNER))
    if rest:
        parts.append(aggregate_rops(rest, Boundary.END_OF_TRANSACTION))
    return combine(*parts)


def negotiation_events(calls: Sequence[ServiceCallTuple], bundle: PolicyBundle,
                       checks=("request", "delivery")) -> list[NegotiationEvent]:
    assets = AssetSlicer(calls)
    requests = RequestSlicer(calls)
    events: list[NegotiationEvent] = []
    for i, c in enumerate(calls):
        requests.feed(c)
        assets.feed(c)
        if "request" in checks and c.is_request:
            ctx = requests.request_context[i]
            members = requests.ctx.current(ctx).policies
            rop = aggregate_rops([bundle.rop(c.callee)], Boundary.DIRECT_PARTNER)
            events += _decide(bundle, members, rop, step=c.request_step, index=i,
                              check="request", consumer=c.caller, provider=c.callee,
                              context=ctx)
        if "delivery" not in checks or c.kind is CallKind.FAILED or c.is_self_call:
            continue
        flows = []
        if c.assets_in:
            flows.append((c.request_step, c.caller, c.callee, c.assets_in))
        if c.assets_out:
            flows.append((c.response_step, c.callee, c.caller, c.assets_out))
        for step, sender, receiver, delivered in flows:
            names = dict.fromkeys(assets.context_of(receiver, a) for a in delivered)
            for name in names:
                policies = assets.ctx.current(name).policies
                rop = _delivery_rops(bundle, policies, sender, receiver)
                events += _decide(bundle, [f"QoP_{receiver}"], rop, step=step, index=i,
                                  check="delivery", consumer=receiver, provider=sender,
                                  context=name)
    return events


def asset_only_negotiations(calls, bundle) -> list[NegotiationEvent]:
    return negotiation_events(calls, bundle, checks=("delivery",))


def _fail_and_prune(calls: list[ServiceCallTuple], i: int) -> list[ServiceCallTuple]:
    bad = calls[i]
    pair = {bad.caller, bad.callee}
    pruned = set(bad.assets_out) | {a for a in bad.assets_in if a not in _earlier(calls, i)}
    out = calls[:i] + [ServiceCallTuple(bad.step, bad.caller, bad.callee, CallKind.FAILED)]
    for c in calls[i + 1:]:
        if {c.caller, c.callee} == pair:
            pruned |= set(c.assets_out)
            continue
        ins = tuple(a for a in c.assets_in if a not in pruned)
        outs = tuple(a for a in c.assets_out if a not in pruned)
        if c.is_self_call and c.assets_in and not ins:
            pruned |= set(c.assets_out)
            continue
        kind = c.kind
        if kind is CallKind.DATA_CALL and not ins:
            kind = CallKind.CONTROL_CALL
        elif kind is CallKind.DATA_RESPONSE and not outs:
            kind = CallKind.CONTROL_RESPONSE
        out.append(replace(c, kind=kind, assets_in=ins, assets_out=outs,
                           includes_input=c.includes_input or kind is not CallKind.ROUND_TRIP))
    return out


def _earlier(calls, i) -> set:
    return {a for c in calls[:i] for a in c.assets_in + c.assets_out}


def on_the_fly_slice(calls: Sequence[ServiceCallTuple], bundle: PolicyBundle
                     ) -> tuple[SliceReport, list[NegotiationEvent]]:
    """Slice while negotiating; denied interactions fail and are pruned."""
    calls = effective_trace(calls, bundle)
    events = negotiation_events(calls, bundle)
    assets = AssetSlicer(calls)
    requests = RequestSlicer(calls)
    for c in calls:
        requests.feed(c)
        assets.feed(c)
    assets.finish()
    requests.finish()
    return _report(assets, requests, events), events


def effective_trace(calls: Sequence[ServiceCallTuple], bundle: PolicyBundle
                    ) -> list[ServiceCallTuple]:
    """The trace on-the-fly negotiation leaves behind."""
    calls = list(calls)
    while True:
        events = negotiation_events(calls, bundle)
        denied = [e for e in events if e.denied and calls[e.index].kind is not CallKind.FAILED]
        if not denied:
            return calls
        calls = _fail_and_prune(calls, min(e.index for e in denied))
