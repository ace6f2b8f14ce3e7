import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from bpslicer.policy import (
    AttributePredicate,
    Boundary,
    PolicyBundle,
    PolicyError,
    Qop,
    Rop,
    UconRule,
    aggregate_qops,
    aggregate_rops,
    entails,
    jointly_satisfiable,
    load_bundle,
    negotiate,
)
from conftest import DATA

FRESH = "<fresh>"


def P(attr, op, value, kind="subject"):
    return AttributePredicate(kind, attr, op, value)


def candidates(preds):
    """Finite stand-in for the infinite attribute domain of ``preds``."""
    out = {FRESH}
    for p in preds:
        values = p.value if isinstance(p.value, frozenset) else {p.value}
        for v in values:
            out.add(v)
            if isinstance(v, (int, float)) and not isinstance(v, bool):
                out.update({v - 0.5, v + 0.5, v - 1e9, v + 1e9})
    return out


def brute_sat(preds):
    return any(all(p.holds(x) for p in preds) for x in candidates(preds))


def brute_entails(claims, req):
    models = [x for x in candidates(list(claims) + [req]) if all(c.holds(x) for c in claims)]
    return bool(models) and all(req.holds(x) for x in models)


def random_pred(rng, attrs=("n", "s"), kinds=("subject", "context")):
    attr = rng.choice(attrs)
    kind = rng.choice(kinds)
    if attr == "n":
        op = rng.choice(["eq", "neq", "geq", "leq", "in_set"])
        value = set(rng.sample(range(5), rng.randint(1, 3))) if op == "in_set" else rng.randint(0, 4)
    else:
        op = rng.choice(["eq", "neq", "in_set"])
        pool = ["a", "b", "c"]
        value = set(rng.sample(pool, rng.randint(1, 2))) if op == "in_set" else rng.choice(pool)
    return P(attr, op, value, kind)


def random_rule(rng, owner, rights=("read", "write")):
    preds = [random_pred(rng) for _ in range(rng.randint(0, 3))]
    return UconRule(
        owner, rng.choice(rights),
        subject_conditions=[p for p in preds if p.subject_kind.value == "subject"],
        context_conditions=[p for p in preds if p.subject_kind.value == "context"],
        obligations=rng.sample(["log", "delete"], rng.randint(0, 1)),
        lifecycle=rng.choice(["dp", "eot"]),
    )


def random_rop(rng, owner):
    return Rop(owner, [random_rule(rng, owner) for _ in range(rng.randint(0, 3))])


def random_qop(rng, owner):
    claims = []
    for _ in range(rng.randint(0, 4)):
        c = random_pred(rng)
        if c.operator.value == "eq" and any(
                d.attribute == c.attribute and d.operator.value == "eq" for d in claims):
            continue
        claims.append(c)
    return Qop(owner, claims, rng.sample(["log", "delete"], rng.randint(0, 2)))


def conflict_oracle(items):
    """Every clashing predicate pair, found by testing each pair."""
    found = set()
    for (ri, p), (rj, q) in itertools.combinations(items, 2):
        if ri == rj and p.subject_kind == q.subject_kind and p.attribute == q.attribute \
                and not brute_sat([p, q]):
            found.add(frozenset({(ri, p), (rj, q)}))
    return found


# -- predicate algebra ----------------------------------------------------------


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_satisfiability_matches_brute_force(seed):
    rng = random.Random(seed)
    preds = [random_pred(rng, attrs=(rng.choice("ns"),), kinds=("subject",))
             for _ in range(rng.randint(1, 4))]
    assert jointly_satisfiable(preds) == brute_sat(preds)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_entailment_matches_brute_force(seed):
    rng = random.Random(seed)
    attr = rng.choice("ns")
    claims = [random_pred(rng, attrs=(attr,), kinds=("subject",)) for _ in range(rng.randint(1, 3))]
    req = random_pred(rng, attrs=(attr,), kinds=("subject",))
    assert entails(claims, req) == brute_entails(claims, req)


def test_predicate_value_checks():
    with pytest.raises(PolicyError):
        P("n", "geq", "high")
    with pytest.raises(PolicyError):
        P("s", "in_set", "abc")
    with pytest.raises(PolicyError):
        P("s", "eq", ["a"])


# -- aggregation ------------------------------------------------------------------


def test_rop_direct_contradiction():
    a = Rop("A", [UconRule("A", "read", context_conditions=[P("encryption", "eq", "aes256", "context")])])
    b = Rop("B", [UconRule("B", "read", context_conditions=[P("encryption", "eq", "none", "context")])])
    agg = aggregate_rops([a, b])
    assert len(agg.conflicts) == 1
    assert agg.conflicts[0].first.attribute == "encryption"
    assert not agg.ok


def test_single_rop_identity():
    rop = Rop("A", [UconRule("A", "read", [P("n", "geq", 1)], lifecycle="eot")])
    agg = aggregate_rops([rop])
    assert agg.rules == rop.rules and agg.conflicts == () and agg.members == ("RoP_A",)


def test_lifecycle_boundary():
    dp = UconRule("G", "read", [P("n", "geq", 1)], lifecycle="dp")
    eot = UconRule("G", "read", [P("n", "geq", 2)], lifecycle="eot")
    rop = Rop("G", [dp, eot])
    assert aggregate_rops([rop], Boundary.DIRECT_PARTNER).rules == (dp, eot)
    assert aggregate_rops([rop], Boundary.END_OF_TRANSACTION).rules == (eot,)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_rop_conflicts_match_pair_oracle(seed):
    rng = random.Random(seed)
    rops = [random_rop(rng, o) for o in "ABC"[: rng.randint(1, 3)]]
    agg = aggregate_rops(rops, Boundary.DIRECT_PARTNER)
    items = [(r.right, p) for rop in rops for r in rop.rules for p in r.predicates]
    assert agg.conflict_set() == conflict_oracle(items)


def test_qop_union_without_conflict():
    e = Qop("E", [P("clearance", "geq", 3)])
    a = Qop("A", [P("platform", "eq", "trusted")])
    agg = aggregate_qops([e, a])
    assert agg.claims == e.claims + a.claims and agg.ok


def test_qop_contradiction():
    agg = aggregate_qops([Qop("E", [P("platform", "eq", "trusted")]),
                          Qop("A", [P("platform", "eq", "untrusted")])])
    assert len(agg.conflicts) == 1


def test_qop_obligations_intersect():
    agg = aggregate_qops([Qop("E", accepted_obligations=["log", "delete"]),
                          Qop("A", accepted_obligations=["delete"])])
    assert agg.accepted_obligations == ("delete",)


def test_qop_self_contradiction_rejected():
    with pytest.raises(PolicyError):
        Qop("E", [P("platform", "eq", "a"), P("platform", "eq", "b")])


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_qop_conflicts_match_pair_oracle(seed):
    rng = random.Random(seed)
    qops = [random_qop(rng, o) for o in "ABCD"[: rng.randint(1, 4)]]
    agg = aggregate_qops(qops)
    claims = list(dict.fromkeys(c for q in qops for c in q.claims))
    assert agg.conflict_set() == conflict_oracle([(None, c) for c in claims])


@settings(max_examples=250, deadline=None)
@given(st.integers(0, 2**32 - 1), st.randoms(use_true_random=False))
def test_conflict_set_permutation_invariant(seed, shuffler):
    rng = random.Random(seed)
    rops = [random_rop(rng, o) for o in "ABCD"]
    qops = [random_qop(rng, o) for o in "ABCD"]
    a, b = rops[:], qops[:]
    shuffler.shuffle(a)
    shuffler.shuffle(b)
    assert aggregate_rops(rops).conflict_set() == aggregate_rops(a).conflict_set()
    assert aggregate_qops(qops).conflict_set() == aggregate_qops(b).conflict_set()


# -- negotiation ------------------------------------------------------------------


def negotiate_oracle(qop, rop, right):
    """Rule by rule: every requirement entailed by same-attribute claims."""
    for rule in rop.rules:
        if rule.right != right:
            continue
        for req in rule.subject_conditions + rule.context_conditions:
            claims = [c for c in qop.claims
                      if c.attribute == req.attribute and c.subject_kind == req.subject_kind]
            if not claims or not brute_entails(claims, req):
                return False
        if not set(rule.obligations) <= set(qop.accepted_obligations):
            return False
    return True


def test_empty_rop_satisfied():
    d = negotiate(aggregate_qops([Qop("E")]), aggregate_rops([Rop("A")]), "read")
    assert d.satisfied and d.unmet_rules == ()


def test_unknown_right():
    with pytest.raises(PolicyError):
        negotiate(aggregate_qops([Qop("E")]), aggregate_rops([Rop("A")]), "fly", ["read"])


def test_usecase2_qop_e_fails_rop_i():
    bundle = load_bundle(DATA / "usecase2_bundle.json")
    qop = aggregate_qops([bundle.qop("E"), bundle.qop("A"), bundle.qop("C")])
    d = negotiate(qop, aggregate_rops([bundle.rop("I")], Boundary.DIRECT_PARTNER), "read")
    assert not d.satisfied
    assert [r.stakeholder for r in d.unmet_rules] == ["I"]
    d = negotiate(qop, aggregate_rops([bundle.rop("G")], Boundary.DIRECT_PARTNER), "read")
    assert d.satisfied


def test_obligations_must_be_accepted():
    rop = aggregate_rops([Rop("A", [UconRule("A", "read", obligations=["delete"])])])
    assert not negotiate(aggregate_qops([Qop("E")]), rop, "read").satisfied
    assert negotiate(aggregate_qops([Qop("E", accepted_obligations=["delete"])]), rop,
                     "read").satisfied


def test_restrictions_checked_as_context():
    rule = UconRule("A", "read", restrictions=[P("region", "eq", "eu", "context")])
    rop = aggregate_rops([Rop("A", [rule])])
    good = aggregate_qops([Qop("E", [P("region", "eq", "eu", "context")])])
    bad = aggregate_qops([Qop("E", [P("region", "eq", "eu", "subject")])])
    assert negotiate(good, rop, "read").satisfied
    assert not negotiate(bad, rop, "read").satisfied


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_negotiation_matches_rule_oracle(seed):
    rng = random.Random(seed)
    qop = aggregate_qops([random_qop(rng, "E"), random_qop(rng, "F")])
    rop = aggregate_rops([random_rop(rng, "A"), random_rop(rng, "B")], Boundary.DIRECT_PARTNER)
    right = rng.choice(["read", "write"])
    assert negotiate(qop, rop, right).satisfied == negotiate_oracle(qop, rop, right)


@settings(max_examples=250, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_monotonic_denial(seed):
    rng = random.Random(seed)
    qop = aggregate_qops([random_qop(rng, "E")])
    base = [random_rop(rng, "A")]
    extra = [random_rop(rng, "B")]
    right = rng.choice(["read", "write"])
    if not negotiate(qop, aggregate_rops(base), right).satisfied:
        assert not negotiate(qop, aggregate_rops(base + extra), right).satisfied


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_monotonic_satisfaction_on_qop_growth(seed):
    rng = random.Random(seed)
    q1, q2 = random_qop(rng, "E"), random_qop(rng, "F")
    rop = aggregate_rops([random_rop(rng, "A")])
    q2 = Qop("F", q2.claims, q1.accepted_obligations)
    grown = aggregate_qops([q1, q2])
    if negotiate(aggregate_qops([q1]), rop, "read").satisfied and grown.ok:
        assert negotiate(grown, rop, "read").satisfied


# -- bundles -----------------------------------------------------------------------


def test_bundle_round_trip():
    bundle = load_bundle(DATA / "usecase2_bundle.json")
    again = PolicyBundle.from_dict(bundle.to_dict())
    assert again == bundle
    assert bundle.resolve("RoP_E").owner == "E"
    assert bundle.resolve("QoP_A").owner == "A"


@pytest.mark.parametrize("doc", [
    {"vocabulary": {"n": "number"}, "rights": ["read"],
     "rops": {"A": {"rules": [{"right": "read", "subject_conditions": [
         {"attribute": "undeclared", "operator": "eq", "value": 1}]}]}}},
    {"vocabulary": {}, "rights": ["read"],
     "rops": {"A": {"rules": [{"right": "write"}]}}},
])
def test_bundle_validation(doc):
    with pytest.raises(PolicyError):
        PolicyBundle.from_dict(doc)


def test_bundle_missing_party():
    bundle = load_bundle(DATA / "usecase2_bundle.json")
    with pytest.raises(PolicyError):
        bundle.rop("Z")
    with pytest.raises(PolicyError):
        bundle.resolve("XoP_A")
