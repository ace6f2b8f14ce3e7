import random
from pathlib import Path

import pytest

from bpslicer.scg import CallKind, ServiceCallTuple

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data"
GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture
def data_dir():
    return DATA


def random_calls(rng: random.Random, n_parties: int, n_calls: int) -> list[ServiceCallTuple]:
    """Arbitrary tuples; no protocol consistency, only tuple invariants."""
    parties = [f"P{i}" for i in range(n_parties)]
    calls = []
    for i in range(n_calls):
        a, b = rng.choice(parties), rng.choice(parties)
        kind = rng.choice(list(CallKind))
        assets_in = assets_out = ()
        if kind is CallKind.DATA_CALL:
            assets_in = (f"x{i}",)
        elif kind is CallKind.DATA_RESPONSE:
            assets_out = (f"y{i}",)
        elif kind is CallKind.ROUND_TRIP:
            assets_in = (f"x{i}",) if rng.random() < 0.6 else ()
            assets_out = (f"y{i}",) if rng.random() < 0.6 else ()
        noinc = kind is CallKind.ROUND_TRIP and rng.random() < 0.2
        calls.append(ServiceCallTuple(f"t{i}", a, b, kind, assets_in, assets_out, not noinc))
    return calls


def nested_calls(rng: random.Random, n_parties: int, n_steps: int) -> list[ServiceCallTuple]:
    """A protocol-consistent trace: every response answers an open request.

    Assets only flow once they are held by the sender, so the trace is also
    consistent for asset-based slicing.
    """
    parties = [f"P{i}" for i in range(n_parties)]
    held = {p: [] for p in parties}
    open_requests: list[tuple[str, str]] = []  # (requester, servicer)
    calls = []
    fresh = iter(range(10**6))

    def new_asset(owner):
        name = f"a{next(fresh)}"
        held[owner].append(name)
        return name

    for i in range(n_steps):
        step = f"t{i}"
        r = rng.random()
        if open_requests and r < 0.3:
            x, y = open_requests.pop(rng.randrange(len(open_requests)))
            if any(o == (x, y) for o in open_requests):
                open_requests.append((x, y))
                continue
            if rng.random() < 0.6:
                out = tuple(rng.sample(held[y], k=min(len(held[y]), rng.randint(1, 2)))) \
                    if held[y] and rng.random() < 0.6 else (new_asset(y),)
                held[x].extend(a for a in out if a not in held[x])
                calls.append(ServiceCallTuple(step, x, y, CallKind.DATA_RESPONSE, (), out))
            else:
                calls.append(ServiceCallTuple(step, x, y, CallKind.CONTROL_RESPONSE))
            continue
        x = rng.choice(parties)
        y = rng.choice([p for p in parties if p != x])
        if r < 0.4:
            ins = (rng.choice(held[x]),) if held[x] and rng.random() < 0.5 else (new_asset(x),)
            held[y].extend(a for a in ins if a not in held[y])
            calls.append(ServiceCallTuple(step, x, y, CallKind.DATA_CALL, ins,
                                          parallel=rng.random() < 0.1))
            open_requests.append((x, y))
        elif r < 0.5:
            calls.append(ServiceCallTuple(step, x, y, CallKind.CONTROL_CALL))
            open_requests.append((x, y))
        elif r < 0.8:
            ins = (rng.choice(held[x]),) if held[x] else ()
            held[y].extend(a for a in ins if a not in held[y])
            out = (new_asset(y),)
            held[x].extend(out)
            calls.append(ServiceCallTuple(step, x, y, CallKind.ROUND_TRIP, ins, out,
                                          includes_input=rng.random() < 0.8))
        elif r < 0.9 and held[x]:
            ins = tuple(rng.sample(held[x], k=min(2, len(held[x]))))
            calls.append(ServiceCallTuple(step, x, x, CallKind.ROUND_TRIP, ins, (new_asset(x),)))
        else:
            calls.append(ServiceCallTuple(step, x, y, CallKind.FAILED))
    return calls
