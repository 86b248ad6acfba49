"""Probabilistic forcing with random error caps (the fireworks template).

Each requirement R_i carries a random cap n_i in [1, N(i)]. The engine makes
passive guesses "nothing below the current condition is in W_i" and replaces
a guess each time the enumeration refutes it. The n_i-th refutation switches
R_i to an active search for an extension in W_i. A run that exhausts its
global budget during an active search is stuck.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterator, Sequence

from .bushy import EnumerableSet, PredicateSet, is_prefix

Condition = Hashable


class ForcingPoset:
    """Interface: a computable partial order with an extension search."""

    root: Condition

    def leq(self, q: Condition, p: Condition) -> bool:
        raise NotImplementedError

    def search(self, p: Condition, W: EnumerableSet, stage: int) -> Condition | None:
        raise NotImplementedError

    def step(self, p: Condition, rng: random.Random) -> Condition:
        """A random strengthening, taken while no requirement acts."""
        return p


class StringPoset(ForcingPoset):
    """Finite binary strings; q <= p iff q extends p.

    ``search`` looks at p and its extensions by up to ``search_depth`` bits,
    shortest first, then lexicographically.
    """

    def __init__(self, search_depth: int = 2, root: tuple = ()):
        self.search_depth = search_depth
        self.root = tuple(root)

    def leq(self, q, p) -> bool:
        return is_prefix(p, q)

    def _below(self, p: tuple) -> Iterator[tuple]:
        layer = [p]
        for _ in range(self.search_depth + 1):
            yield from layer
            layer = [q + (b,) for q in layer for b in (0, 1)]

    def search(self, p, W: EnumerableSet, stage: int):
        snap = W.at(stage)
        for q in self._below(tuple(p)):
            if q in snap:
                return q
        return None

    def step(self, p, rng: random.Random):
        return tuple(p) + (rng.getrandbits(1),)


# ---------------------------------------------------------------------------
# plans


@dataclass
class FireworksPlan:
    caps: list[int]
    bounds: list[int]
    counters: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.counters:
            self.counters = [0] * len(self.caps)
        for n, N in zip(self.caps, self.bounds):
            if not 1 <= n <= N:
                raise ValueError(f"cap {n} outside [1, {N}]")

    def with_cap(self, i: int, value: int) -> "FireworksPlan":
        caps = list(self.caps)
        caps[i] = value
        return FireworksPlan(caps, list(self.bounds))


def draw_plan(N: Callable[[int], int], req_count: int, rng: random.Random | int) -> FireworksPlan:
    """Independent uniform caps n_i in [1, N(i)]."""
    if isinstance(rng, int):
        rng = random.Random(rng)
    bounds = []
    for i in range(req_count):
        b = N(i)
        if b < 1:
            raise ValueError(f"N({i}) = {b} < 1")
        bounds.append(b)
    return FireworksPlan([rng.randint(1, b) for b in bounds], bounds)


def stuck_bound(N: Callable[[int], int], req_count: int) -> Fraction:
    return sum((Fraction(1, N(i)) for i in range(req_count)), Fraction(0))


# ---------------------------------------------------------------------------
# scheduling


class RoundRobin:
    """Fair scheduler; requirement i is skipped until ``delays[i]`` iterations have passed."""

    def __init__(self, count: int, delays: Sequence[int] | None = None):
        self.count = count
        self.delays = list(delays) if delays is not None else [0] * count
        self._next = 0

    def pick(self, stage: int, eligible: Callable[[int], bool]) -> int | None:
        for off in range(self.count):
            i = (self._next + off) % self.count
            if stage >= self.delays[i] and eligible(i):
                self._next = (i + 1) % self.count
                return i
        return None


# ---------------------------------------------------------------------------
# outcome


PENDING = "pending"
PASSIVE = "satisfied-passively"
ACTIVE = "satisfied-actively"


@dataclass
class FireworksOutcome:
    status: list[str]
    chain: list
    stuck: tuple[int, int] | None
    caps: list[int]
    counters: list[int]
    guesses: list = field(default_factory=list)  # per requirement: (chain index, stage) of the standing guess
    log: list[dict] = field(default_factory=list)
    stages: int = 0

    @property
    def is_stuck(self) -> bool:
        return self.stuck is not None

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(ev, sort_keys=True) for ev in self.log) + "\n"

    def summary(self) -> dict:
        return {
            "status": self.status,
            "stuck": list(self.stuck) if self.stuck else None,
            "caps": self.caps,
            "counters": self.counters,
            "chain_length": len(self.chain),
            "stages": self.stages,
        }


def _jsonable(p):
    return list(p) if isinstance(p, tuple) else p


def run(poset: ForcingPoset, family: Sequence[EnumerableSet], plan: FireworksPlan,
        schedule: RoundRobin | None = None, global_budget: int = 1000,
        rng: random.Random | int | None = None) -> FireworksOutcome:
    """One run of the template; the loop counter is the enumeration stage."""
    if isinstance(rng, int) or rng is None:
        rng = random.Random(rng)
    count = len(family)
    if len(plan.caps) != count:
        raise ValueError("plan and family sizes differ")
    schedule = schedule or RoundRobin(count)
    caps = list(plan.caps)
    counters = [0] * count
    status = [PENDING] * count
    guess: list = [None] * count  # (chain index, stage) of the standing passive guess
    chain = [poset.root]
    log: list[dict] = []
    waiting: int | None = None

    def eligible(i):
        return status[i] != ACTIVE

    stage = 0
    for stage in range(global_budget):
        p = chain[-1]
        if waiting is not None:
            i = waiting
            q = poset.search(p, family[i], stage)
            if q is not None:
                chain.append(q)
                status[i] = ACTIVE
                guess[i] = None
                waiting = None
                log.append({"event": "extension", "req": i, "stage": stage,
                            "condition": _jsonable(q), "index": len(chain) - 1})
            continue
        i = schedule.pick(stage, eligible)
        if i is None:
            chain.append(poset.step(p, rng))
            continue
        if guess[i] is None and counters[i] == 0:
            guess[i] = (len(chain) - 1, stage)
            log.append({"event": "guess", "req": i, "stage": stage, "index": len(chain) - 1})
            continue
        j, _ = guess[i]
        refuter = poset.search(chain[j], family[i], stage)
        if refuter is None:
            chain.append(poset.step(p, rng))
            continue
        counters[i] += 1
        log.append({"event": "refutation", "req": i, "stage": stage, "index": j,
                    "witness": _jsonable(refuter), "count": counters[i]})
        if counters[i] < caps[i]:
            guess[i] = (len(chain) - 1, stage)
            log.append({"event": "guess", "req": i, "stage": stage, "index": len(chain) - 1})
            continue
        guess[i] = None
        log.append({"event": "switch", "req": i, "stage": stage, "index": len(chain) - 1})
        q = poset.search(p, family[i], stage)
        if q is not None:
            chain.append(q)
            status[i] = ACTIVE
            log.append({"event": "extension", "req": i, "stage": stage,
                        "condition": _jsonable(q), "index": len(chain) - 1})
        else:
            waiting = i
    stuck = None
    if waiting is not None:
        stuck = (waiting, stage)
        log.append({"event": "stuck", "req": waiting, "stage": stage})
    for i in range(count):
        if status[i] == PENDING and guess[i] is not None:
            status[i] = PASSIVE
    return FireworksOutcome(status, chain, stuck, caps, counters, list(guess), log, stage + 1)


# ---------------------------------------------------------------------------
# the length-trap family


def trap_length(i: int, base: int = 10, spacing: int = 3) -> int:
    return base + spacing * i


def length_trap_family(count: int, lag: int = 2, base: int = 10, spacing: int = 3,
                       delay: int = 20) -> list[EnumerableSet]:
    """W_i at stage s = strings of length <= min(L_i, s // lag - delay).

    The enumeration trails the chain, so a passive guess made at length l is
    refuted only around stage lag * l, by which time the chain is longer. Once
    a guess is made beyond L_i it is never refuted, and an active search
    started beyond L_i waits forever. Which refutation is the last one is
    fixed by the other caps, so exactly one value of n_i gets stuck.
    """
    out = []
    for i in range(count):
        L = trap_length(i, base, spacing)

        def snapshot(s, L=L):
            cut = min(L, s // lag - delay)
            return PredicateSet(lambda q: len(q) <= cut, f"len<={cut}")

        out.append(EnumerableSet(snapshot, f"W{i}"))
    return out


def trap_N(offset: int = 3) -> Callable[[int], int]:
    return lambda i: 1 << (i + offset)


def trap_budget(count: int, lag: int = 2, base: int = 10, spacing: int = 3,
                delay: int = 20) -> int:
    return 2 * lag * (trap_length(count - 1, base, spacing) + delay + count)


def trap_trial(seed: int, count: int = 20, offset: int = 3, budget: int | None = None,
               cap_override: dict[int, int] | None = None, **trap) -> FireworksOutcome:
    """One seeded run against the length trap; caps and steps use separate streams."""
    plan = draw_plan(trap_N(offset), count, random.Random(f"{seed}/caps"))
    for i, v in (cap_override or {}).items():
        plan = plan.with_cap(i, v)
    if budget is None:
        budget = trap_budget(count, **trap)
    return run(StringPoset(search_depth=1), length_trap_family(count, **trap), plan,
               RoundRobin(count), budget, random.Random(f"{seed}/steps"))
