"""Usage-control policies: RoP/QoP, lifecycle-scoped aggregation, negotiation.

Predicates range over a flat attribute vocabulary.  Two predicates on the
same attribute conflict when no value satisfies both; a QoP entails a required
predicate when every value allowed by its claims on that attribute satisfies
the requirement.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union


class PolicyError(ValueError):
    pass


class Target(str, enum.Enum):
    SUBJECT = "subject"
    OBJECT = "object"
    CONTEXT = "context"


class Operator(str, enum.Enum):
    EQ = "eq"
    NEQ = "neq"
    GEQ = "geq"
    LEQ = "leq"
    IN_SET = "in_set"


class Lifecycle(str, enum.Enum):
    DIRECT_PARTNER = "dp"
    END_OF_TRANSACTION = "eot"


class Boundary(str, enum.Enum):
    DIRECT_PARTNER = "direct_partner"
    END_OF_TRANSACTION = "end_of_transaction"


Scalar = Union[str, int, float, bool]


@dataclass(frozen=True)
class AttributePredicate:
    subject_kind: Target
    attribute: str
    operator: Operator
    value: object

    def __post_init__(self):
        object.__setattr__(self, "subject_kind", Target(self.subject_kind))
        object.__setattr__(self, "operator", Operator(self.operator))
        if self.operator is Operator.IN_SET:
            if isinstance(self.value, (str, bytes)) or not isinstance(self.value, Iterable):
                raise PolicyError(f"in_set on {self.attribute} needs a set of values")
            object.__setattr__(self, "value", frozenset(self.value))
        elif isinstance(self.value, (set, frozenset, list, tuple)):
            raise PolicyError(f"{self.operator.value} on {self.attribute} needs a scalar")
        if self.operator in (Operator.GEQ, Operator.LEQ) and not _is_number(self.value):
            raise PolicyError(f"{self.operator.value} on {self.attribute} needs a number")

    def holds(self, x) -> bool:
        op, v = self.operator, self.value
        if op is Operator.EQ:
            return x == v
        if op is Operator.NEQ:
            return x != v
        if op is Operator.IN_SET:
            return x in v
        if not _is_number(x):
            return False
        return x >= v if op is Operator.GEQ else x <= v

    def to_dict(self) -> dict:
        value = sorted(self.value, key=repr) if self.operator is Operator.IN_SET else self.value
        return {"kind": self.subject_kind.value, "attribute": self.attribute,
                "operator": self.operator.value, "value": value}

    @classmethod
    def from_dict(cls, d: dict, default_kind: Target = Target.SUBJECT) -> "AttributePredicate":
        return cls(d.get("kind", default_kind), d["attribute"], d["operator"], d["value"])

    def __str__(self):
        return f"{self.attribute} {self.operator.value} {self.value!r}"


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


@dataclass(frozen=True)
class UconRule:
    stakeholder: str
    right: str
    subject_conditions: tuple[AttributePredicate, ...] = ()
    object_conditions: tuple[AttributePredicate, ...] = ()
    context_conditions: tuple[AttributePredicate, ...] = ()
    obligations: tuple[str, ...] = ()
    restrictions: tuple[AttributePredicate, ...] = ()
    lifecycle: Lifecycle = Lifecycle.END_OF_TRANSACTION

    def __post_init__(self):
        if not self.right:
            raise PolicyError("a rule needs a right")
        object.__setattr__(self, "lifecycle", Lifecycle(self.lifecycle))
        for name in ("subject_conditions", "object_conditions", "context_conditions",
                     "obligations", "restrictions"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @property
    def predicates(self) -> tuple[AttributePredicate, ...]:
        return self.subject_conditions + self.object_conditions + \
            self.context_conditions + self.restrictions

    @property
    def consumer_requirements(self) -> tuple[AttributePredicate, ...]:
        # restrictions are checked as extra context predicates on the consumer
        return self.subject_conditions + self.context_conditions + tuple(
            AttributePredicate(Target.CONTEXT, p.attribute, p.operator, p.value)
            for p in self.restrictions
        )

    def to_dict(self) -> dict:
        return {
            "stakeholder": self.stakeholder,
            "right": self.right,
            "subject_conditions": [p.to_dict() for p in self.subject_conditions],
            "object_conditions": [p.to_dict() for p in self.object_conditions],
            "context_conditions": [p.to_dict() for p in self.context_conditions],
            "obligations": list(self.obligations),
            "restrictions": [p.to_dict() for p in self.restrictions],
            "lifecycle": self.lifecycle.value,
        }

    @classmethod
    def from_dict(cls, d: dict, stakeholder: str) -> "UconRule":
        def preds(key, kind):
            return tuple(AttributePredicate.from_dict(p, kind) for p in d.get(key, ()))

        return cls(
            stakeholder=d.get("stakeholder", stakeholder),
            right=d["right"],
            subject_conditions=preds("subject_conditions", Target.SUBJECT),
            object_conditions=preds("object_conditions", Target.OBJECT),
            context_conditions=preds("context_conditions", Target.CONTEXT),
            obligations=tuple(d.get("obligations", ())),
            restrictions=preds("restrictions", Target.CONTEXT),
            lifecycle=d.get("lifecycle", "eot"),
        )


@dataclass(frozen=True)
class Rop:
    owner: str
    rules: tuple[UconRule, ...] = ()
    asset: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        for r in self.rules:
            if r.stakeholder != self.owner:
                raise PolicyError(f"rule of {r.stakeholder} inside RoP of {self.owner}")

    @property
    def ref(self) -> str:
        return f"RoP_{self.owner}"


@dataclass(frozen=True)
class Qop:
    owner: str
    claims: tuple[AttributePredicate, ...] = ()
    accepted_obligations: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "claims", tuple(self.claims))
        object.__setattr__(self, "accepted_obligations", tuple(self.accepted_obligations))
        by_attr: dict[str, object] = {}
        for c in self.claims:
            if c.operator is Operator.EQ:
                prev = by_attr.setdefault(c.attribute, c.value)
                if prev != c.value:
                    raise PolicyError(f"QoP of {self.owner} claims {c.attribute} twice")

    @property
    def ref(self) -> str:
        return f"QoP_{self.owner}"


@dataclass(frozen=True)
class ConflictRecord:
    first: AttributePredicate
    second: AttributePredicate
    right: Optional[str]
    reason: str

    @property
    def key(self) -> frozenset:
        return frozenset({(self.right, self.first), (self.right, self.second)})

    def to_dict(self) -> dict:
        return {"right": self.right, "first": self.first.to_dict(),
                "second": self.second.to_dict(), "reason": self.reason}


@dataclass(frozen=True)
class AggregatedPolicy:
    members: tuple[str, ...]
    rules: tuple[UconRule, ...] = ()
    claims: tuple[AttributePredicate, ...] = ()
    accepted_obligations: tuple[str, ...] = ()
    conflicts: tuple[ConflictRecord, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.conflicts

    @property
    def effective(self) -> tuple:
        return self.rules or self.claims

    def conflict_set(self) -> set:
        return {c.key for c in self.conflicts}


# -- predicate algebra -------------------------------------------------------


@dataclass
class _Region:
    """Values allowed by a conjunction of predicates on one attribute."""

    finite: Optional[set] = None  # explicit candidate set, or None = unbounded
    lo: float = -math.inf
    hi: float = math.inf
    numeric: bool = False  # geq/leq seen: only numbers allowed
    excluded: set = field(default_factory=set)

    def members(self) -> Optional[set]:
        if self.finite is None:
            return None
        return {x for x in self.finite if self._admits(x)}

    def _admits(self, x) -> bool:
        if x in self.excluded:
            return False
        if self.numeric or self.lo > -math.inf or self.hi < math.inf:
            return _is_number(x) and self.lo <= x <= self.hi
        return True

    def empty(self) -> bool:
        m = self.members()
        if m is not None:
            return not m
        if self.lo > self.hi:
            return True
        if self.lo == self.hi:
            return self.lo in self.excluded
        return False


def _region(preds: Iterable[AttributePredicate]) -> _Region:
    r = _Region()
    for p in preds:
        op, v = p.operator, p.value
        if op is Operator.EQ:
            r.finite = {v} if r.finite is None else r.finite & {v}
        elif op is Operator.IN_SET:
            r.finite = set(v) if r.finite is None else r.finite & set(v)
        elif op is Operator.NEQ:
            r.excluded.add(v)
        elif op is Operator.GEQ:
            r.numeric, r.lo = True, max(r.lo, v)
        else:
            r.numeric, r.hi = True, min(r.hi, v)
    return r


def jointly_satisfiable(preds: Sequence[AttributePredicate]) -> bool:
    """Whether some value satisfies every predicate (all on one attribute)."""
    return not _region(preds).empty()


def entails(claims: Sequence[AttributePredicate], required: AttributePredicate) -> bool:
    """Whether every value allowed by ``claims`` satisfies ``required``.

    Unsatisfiable claims entail nothing: a contradictory profile cannot
    vouch for any attribute.
    """
    r = _region(claims)
    if r.empty():
        return False
    m = r.members()
    if m is not None:
        return all(required.holds(x) for x in m)
    op, v = required.operator, required.value
    if op is Operator.NEQ:
        return not r._admits(v)
    if not r.numeric:
        return False
    # a numeric interval [lo, hi] minus finitely many points
    if op is Operator.GEQ:
        return r.lo >= v
    if op is Operator.LEQ:
        return r.hi <= v
    if r.lo == r.hi:
        return required.holds(r.lo)
    return False


def _clash(p: AttributePredicate, q: AttributePredicate) -> Optional[str]:
    if p.attribute != q.attribute or jointly_satisfiable([p, q]):
        return None
    return f"{p} contradicts {q}"


# -- aggregation and negotiation ---------------------------------------------


def _pairwise_conflicts(items: Sequence[tuple[Optional[str], AttributePredicate]]):
    out = []
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            (ri, p), (rj, q) = items[i], items[j]
            if ri != rj or p.subject_kind != q.subject_kind:
                continue
            reason = _clash(p, q)
            if reason:
                out.append(ConflictRecord(p, q, ri, reason))
    return tuple(out)


def aggregate_rops(rops: Sequence[Rop], boundary: Boundary = Boundary.END_OF_TRANSACTION
                   ) -> AggregatedPolicy:
    """Combine RoPs; ``dp`` rules only survive a direct-partner boundary."""
    if not rops:
        raise PolicyError("nothing to aggregate")
    boundary = Boundary(boundary)
    rules = tuple(
        r for rop in rops for r in rop.rules
        if r.lifecycle is Lifecycle.END_OF_TRANSACTION or boundary is Boundary.DIRECT_PARTNER
    )
    items = [(r.right, p) for r in rules for p in r.predicates]
    return AggregatedPolicy(
        members=tuple(dict.fromkeys(r.ref for r in rops)),
        rules=rules,
        conflicts=_pairwise_conflicts(items),
    )


def combine(*aggregates: AggregatedPolicy) -> AggregatedPolicy:
    """Concatenate RoP aggregates computed under different boundaries."""
    rules = tuple(r for a in aggregates for r in a.rules)
    items = [(r.right, p) for r in rules for p in r.predicates]
    return AggregatedPolicy(
        members=tuple(dict.fromkeys(m for a in aggregates for m in a.members)),
        rules=rules,
        conflicts=_pairwise_conflicts(items),
    )


def aggregate_qops(qops: Sequence[Qop]) -> AggregatedPolicy:
    if not qops:
        raise PolicyError("nothing to aggregate")
    claims = tuple(dict.fromkeys(c for q in qops for c in q.claims))
    accepted = set(qops[0].accepted_obligations)
    for q in qops[1:]:
        accepted &= set(q.accepted_obligations)
    return AggregatedPolicy(
        members=tuple(dict.fromkeys(q.ref for q in qops)),
        claims=claims,
        accepted_obligations=tuple(o for o in qops[0].accepted_obligations if o in accepted),
        conflicts=_pairwise_conflicts([(None, c) for c in claims]),
    )


@dataclass(frozen=True)
class Decision:
    satisfied: bool
    unmet_rules: tuple[UconRule, ...] = ()
    unmatched: tuple[AttributePredicate, ...] = ()
    missing_obligations: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "decision": "satisfied" if self.satisfied else "denied",
            "unmet_rules": [f"{r.stakeholder}:{r.right}" for r in self.unmet_rules],
            "unmatched": [str(p) for p in self.unmatched],
            "missing_obligations": list(self.missing_obligations),
        }


def negotiate(qop: AggregatedPolicy, rop: AggregatedPolicy, right: str,
              rights: Optional[Iterable[str]] = None) -> Decision:
    """Check the consumers' aggregated QoP against every rule for ``right``."""
    if rights is not None and right not in set(rights):
        raise PolicyError(f"unknown right {right!r}")
    unmet, unmatched, missing = [], [], []
    accepted = set(qop.accepted_obligations)
    for rule in rop.rules:
        if rule.right != right:
            continue
        bad = []
        for p in rule.consumer_requirements:
            relevant = [c for c in qop.claims
                        if c.attribute == p.attribute and c.subject_kind == p.subject_kind]
            if not relevant or not entails(relevant, p):
                bad.append(p)
        lacking = [o for o in rule.obligations if o not in accepted]
        if bad or lacking:
            unmet.append(rule)
            unmatched.extend(bad)
            missing.extend(lacking)
    return Decision(
        not unmet, tuple(unmet), tuple(dict.fromkeys(unmatched)),
        tuple(dict.fromkeys(missing)),
    )


# -- policy bundle -----------------------------------------------------------


@dataclass(frozen=True)
class PolicyBundle:
    vocabulary: dict
    rights: tuple[str, ...]
    rops: dict
    qops: dict

    def rop(self, party: str) -> Rop:
        try:
            return self.rops[party]
        except KeyError:
            raise PolicyError(f"bundle has no RoP for {party!r}") from None

    def qop(self, party: str) -> Qop:
        try:
            return self.qops[party]
        except KeyError:
            raise PolicyError(f"bundle has no QoP for {party!r}") from None

    def resolve(self, ref: str) -> Union[Rop, Qop]:
        kind, _, party = ref.partition("_")
        if kind == "RoP":
            return self.rop(party)
        if kind == "QoP":
            return self.qop(party)
        raise PolicyError(f"bad policy reference {ref!r}")

    @classmethod
    def from_dict(cls, doc: dict) -> "PolicyBundle":
        vocab = dict(doc.get("vocabulary", {}))
        rights = tuple(doc.get("rights", ("read",)))
        rops, qops = {}, {}
        for party, body in doc.get("rops", {}).items():
            rules = tuple(UconRule.from_dict(r, party) for r in body.get("rules", ()))
            rops[party] = Rop(party, rules, body.get("asset"))
        for party, body in doc.get("qops", {}).items():
            claims = tuple(AttributePredicate.from_dict(c) for c in body.get("claims", ()))
            qops[party] = Qop(party, claims, tuple(body.get("accepted_obligations", ())))
        bundle = cls(vocab, rights, rops, qops)
        bundle._check()
        return bundle

    def _check(self):
        preds = [c for q in self.qops.values() for c in q.claims]
        for rop in self.rops.values():
            for r in rop.rules:
                if r.right not in self.rights:
                    raise PolicyError(f"rule of {rop.owner} uses unknown right {r.right!r}")
                preds.extend(r.predicates)
        if self.vocabulary:
            for p in preds:
                if p.attribute not in self.vocabulary:
                    raise PolicyError(f"attribute {p.attribute!r} not in vocabulary")

    def to_dict(self) -> dict:
        return {
            "vocabulary": dict(self.vocabulary),
            "rights": list(self.rights),
            "rops": {p: {"rules": [r.to_dict() for r in rop.rules]}
                     for p, rop in self.rops.items()},
            "qops": {p: {"claims": [c.to_dict() for c in q.claims],
                         "accepted_obligations": list(q.accepted_obligations)}
                     for p, q in self.qops.items()},
        }


def load_bundle(path: Union[str, Path]) -> PolicyBundle:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise PolicyError(f"{path}: {exc}") from None
    return PolicyBundle.from_dict(doc)
