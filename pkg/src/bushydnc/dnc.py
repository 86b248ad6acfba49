"""The bounded and unbounded DNC constructions, with traces and trace audits.

Both algorithms grow a string sigma one value per loop iteration. Each
iteration either advances a restricted walk, continues a wait, attends one
requirement, or (when no requirement may act) draws sigma(k) freely. The loop
counter is the stage: functionals and partial functions get
``stage * step_rate`` steps. Every decision about bigness is made inside the
grid ``|tau| <= |stem| + search_depth`` with entries below ``width_cap``.

Randomness comes from independent named streams: one per cap and one per
depth of sigma. Changing one cap therefore leaves every other random choice
unchanged, which is what makes replay experiments meaningful.
"""
from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .bushy import GrowthFn, OmegaString, WitnessTree, is_big_bounded, is_prefix, verify_witness
from .computation import Functional, ToyEnumeration, is_dnc_prefix, make_functional, output_set
from .growth import GrowthFamily, first_allowed_stage, requirement_threshold, triple
from .kolmogorov import PrefixFreeMachine, description_bound, k_approx
from .vm import ToyProgram, execute, format_program

PENDING = "pending"
ACTIVE = "satisfied-actively"
PASSIVE = "satisfied-passively"
STUCK = "stuck"
UNMET = "unmet"
UNATTENDED = "unattended"
MET = (ACTIVE, PASSIVE)


@dataclass
class Budgets:
    iterations: int = 4000
    step_rate: int = 16
    search_depth: int = 1
    width_cap: int = 16
    enum_steps: int = 10_000


@dataclass(frozen=True)
class SearchCaps:
    search_depth: int = 1
    width_cap: int = 16
    child_bound: GrowthFn | None = None


def _rng(seed, *parts) -> random.Random:
    return random.Random("/".join(str(p) for p in (seed,) + parts))


def gamma_complexity(gamma: Functional) -> int:
    return description_bound(format_program(gamma.program))


# ---------------------------------------------------------------------------
# rho* search


def rho_labels(sigma: OmegaString, gamma: Functional, target_len: int, g: GrowthFn,
               caps: SearchCaps, steps: int) -> frozenset:
    """The strings rho of length target_len with S_rho g-big above sigma within caps.

    One backward induction labels every grid node with the set of rho that
    are big above it; a node's label is its own rho (when its output is long
    enough) plus every rho carried by at least max(g, 1) children.
    """
    depth_cap = len(sigma) + caps.search_depth

    def width(d):
        w = caps.width_cap
        if caps.child_bound is not None:
            w = min(w, caps.child_bound(d))
        return w

    def label(tau: OmegaString) -> frozenset:
        out, wants = gamma.probe(tau, steps)
        own = frozenset((out[:target_len],)) if len(out) >= target_len else frozenset()
        if len(tau) >= depth_cap or not wants:
            return own
        d = len(tau)
        need = max(g(d), 1)
        w = width(d)
        if need > w:
            return own
        counts: Counter = Counter()
        for c in range(w):
            counts.update(label(tau + (c,)))
        return own | frozenset(r for r, n in counts.items() if n >= need)

    return label(tuple(sigma))


def find_rho_star(sigma: Sequence[int], gamma: Functional, target_len: int, g_search: GrowthFn,
                  caps: SearchCaps, steps: int) -> tuple[tuple[int, ...], WitnessTree] | None:
    """Lexicographically least rho with S_rho g_search-big above sigma, and its witness."""
    if target_len < 1:
        raise ValueError("target_len must be >= 1")
    sigma = tuple(sigma)
    found = rho_labels(sigma, gamma, target_len, g_search, caps, steps)
    if not found:
        return None
    rho = min(found)
    tree = is_big_bounded(output_set(gamma, target_len, steps, rho), sigma, g_search,
                          len(sigma) + caps.search_depth, caps.width_cap,
                          child_bound=caps.child_bound)
    if tree is None:  # pragma: no cover - the two searches agree by construction
        raise AssertionError(f"label search found {rho} but no witness exists")
    return rho, tree


# ---------------------------------------------------------------------------
# traces


@dataclass
class Choice:
    depth: int
    bound: int
    value: int
    restriction: int | None = None  # index into RunTrace.rho
    assumptions: list | None = None  # unbounded: ids in the list when the bound was computed


@dataclass
class RhoRecord:
    req: int
    k: int
    stage: int
    steps: int
    rho: tuple
    tree: WitnessTree
    g_values: list  # g_search at depths |stem| .. |stem| + height
    threshold: int  # rho length (bounded: target length; unbounded: phi value)
    bound: int  # complexity bound the construction promises for rho

    def to_json(self) -> dict:
        return {"req": self.req, "k": self.k, "stage": self.stage, "steps": self.steps,
                "rho": list(self.rho), "tree": self.tree.to_json(), "g_values": self.g_values,
                "threshold": self.threshold, "bound": self.bound}

    @classmethod
    def from_json(cls, d: dict) -> "RhoRecord":
        return cls(d["req"], d["k"], d["stage"], d["steps"], tuple(d["rho"]),
                   WitnessTree.from_json(d["tree"]), d["g_values"], d["threshold"], d["bound"])

    def g_fn(self) -> GrowthFn:
        base = len(self.tree.stem)
        vals = self.g_values
        return GrowthFn(lambda i: vals[i - base] if 0 <= i - base < len(vals) else 0,
                        "table", "recorded")


@dataclass
class RunTrace:
    algorithm: str
    seed: object
    params: dict
    requirements: list[dict]
    caps: dict
    path: tuple = ()
    choices: list[Choice] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)
    assumptions: dict = field(default_factory=dict)  # unbounded: id -> assumption record
    rho: list[RhoRecord] = field(default_factory=list)
    statuses: list[str] = field(default_factory=list)
    stuck: tuple | None = None
    halt: str = "depth"
    final_stage: int = 0
    dnc: bool | None = None

    @property
    def is_stuck(self) -> bool:
        return self.stuck is not None

    def all_met(self) -> bool:
        return all(s in MET for s in self.statuses)

    def branches(self) -> Counter:
        return Counter(ev["branch"] for ev in self.events if "branch" in ev)

    def header(self) -> dict:
        return {"type": "run", "algorithm": self.algorithm, "seed": self.seed,
                "params": self.params, "requirements": self.requirements, "caps": self.caps,
                "path": list(self.path), "statuses": self.statuses,
                "stuck": list(self.stuck) if self.stuck else None, "halt": self.halt,
                "final_stage": self.final_stage, "dnc": self.dnc}

    def to_jsonl(self) -> str:
        lines = [self.header()]
        lines += [{"type": "choice", **{k: v for k, v in asdict(c).items() if v is not None}}
                  for c in self.choices]
        lines += [{"type": "event", **ev} for ev in self.events]
        lines += [{"type": "assumption", **a} for a in self.assumptions.values()]
        lines += [{"type": "rho", **r.to_json()} for r in self.rho]
        return "".join(json.dumps(x, sort_keys=True) + "\n" for x in lines)

    @classmethod
    def from_jsonl(cls, text: str) -> "RunTrace":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        head = rows[0]
        if head.get("type") != "run":
            raise ValueError("trace must start with a run header")
        tr = cls(head["algorithm"], head["seed"], head["params"], head["requirements"],
                 head["caps"], tuple(head["path"]), statuses=head["statuses"],
                 stuck=tuple(head["stuck"]) if head["stuck"] else None, halt=head["halt"],
                 final_stage=head["final_stage"], dnc=head["dnc"])
        for row in rows[1:]:
            kind = row.pop("type")
            if kind == "choice":
                tr.choices.append(Choice(**row))
            elif kind == "event":
                tr.events.append(row)
            elif kind == "assumption":
                tr.assumptions[row["id"]] = row
            elif kind == "rho":
                tr.rho.append(RhoRecord.from_json(row))
        return tr


def _freeze_keys(caps: dict) -> dict:
    return {str(k): v for k, v in caps.items()}


# ---------------------------------------------------------------------------
# shared loop machinery


class _Walker:
    """sigma, its choice log, and the restricted walk in progress."""

    def __init__(self, seed, trace: RunTrace):
        self.seed = seed
        self.trace = trace
        self.sigma: list[int] = []
        self.walk: tuple[int, int, WitnessTree] | None = None  # (req, rho index, tree)

    @property
    def k(self) -> int:
        return len(self.sigma)

    def draw(self, bound: int, assumptions=None) -> None:
        k = self.k
        v = _rng(self.seed, "path", k).randrange(bound)
        self.sigma.append(v)
        self.trace.choices.append(Choice(k, bound, v, None, assumptions))

    def start_walk(self, req: int, rid: int, tree: WitnessTree) -> bool:
        """Begin a restricted walk; True if sigma is already a leaf."""
        if tree.is_leaf(tuple(self.sigma)):
            return True
        self.walk = (req, rid, tree)
        return False

    def walk_step(self) -> int | None:
        """One restricted draw; returns the requirement whose walk just ended."""
        req, rid, tree = self.walk
        kids = tree.children(tuple(self.sigma))
        k = self.k
        j = _rng(self.seed, "path", k).randrange(len(kids))
        v = kids[j][-1]
        self.sigma.append(v)
        self.trace.choices.append(Choice(k, len(kids), v, rid))
        if tree.is_leaf(tuple(self.sigma)):
            self.walk = None
            return req
        return None


class _Scheduler:
    """Round robin over eligible requirements; requirement i waits until |sigma| >= first[i]."""

    def __init__(self, first: Sequence[int | None]):
        self.first = list(first)
        self.next = 0

    def pick(self, k: int, eligible) -> int | None:
        n = len(self.first)
        for off in range(n):
            i = (self.next + off) % n
            f = self.first[i]
            if f is not None and k >= f and eligible(i):
                self.next = (i + 1) % n
                return i
        return None


# ---------------------------------------------------------------------------
# bounded algorithm


@dataclass
class _BoundedState:
    cap: int
    count: int = 0
    stem: tuple | None = None  # stem of the standing smallness assumption
    k_at: int = 0
    attended: bool = False
    status: str = PENDING


def _bounded_set(gamma: Functional, family: GrowthFamily, k: int, steps: int):
    return output_set(gamma, family.target_len(k), steps)


def run_bounded_dnc(family: GrowthFamily, gammas: Sequence[Functional], d_list: Sequence[int],
                    enum: ToyEnumeration | None = None, depth: int = 24,
                    budgets: Budgets | None = None, rng: int | str = 0, *,
                    first_depths: Sequence[int | None] | None = None,
                    caps: Sequence[int] | None = None) -> RunTrace:
    """One run of the bounded construction.

    ``caps`` overrides the random n_i; ``first_depths`` overrides the
    late-start rule (default: the first k whose margin is below -d in exact
    mode, depth 1 in scaled mode).
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    budgets = budgets or Budgets()
    seed = rng
    m = family.m
    gammas = list(gammas)
    count = len(gammas)
    if len(d_list) != count:
        raise ValueError("one d per functional")
    c2 = PrefixFreeMachine.literal_overhead
    k_gammas = [gamma_complexity(g) for g in gammas]
    if first_depths is None:
        if family.mode == "exact":
            first_depths = [first_allowed_stage(family, kg, c2, d, family.k_max)
                            for kg, d in zip(k_gammas, d_list)]
        else:
            first_depths = [1] * count
    first_depths = [None if f is None else max(int(f), 1) for f in first_depths]
    if caps is None:
        caps = [_rng(seed, "cap", i).randint(1, 1 << (i + m)) for i in range(count)]
    states = [_BoundedState(int(c)) for c in caps]
    h = family.h_fn()
    search = SearchCaps(budgets.search_depth, budgets.width_cap, h)

    trace = RunTrace(
        "bounded", seed,
        {"family": family.describe(), "depth": depth, "budgets": asdict(budgets),
         "first_depths": first_depths},
        [{"name": g.name, "code": format_program(g.program), "d": d, "k_gamma": kg}
         for g, d, kg in zip(gammas, d_list, k_gammas)],
        _freeze_keys({i: s.cap for i, s in enumerate(states)}))
    walker = _Walker(seed, trace)
    sched = _Scheduler(first_depths)
    waiting: int | None = None

    def event(branch, i, stage, **extra):
        trace.events.append({"branch": branch, "req": i, "stage": stage, "depth": walker.k,
                             **extra})

    def try_rho(i: int, stage: int, steps: int) -> bool:
        k = walker.k
        t = family.target_len(k)
        g_search = family.restriction_fn(k)
        hit = find_rho_star(tuple(walker.sigma), gammas[i], t, g_search, search, steps)
        if hit is None:
            return False
        rho, tree = hit
        rid = len(trace.rho)
        g_vals = [g_search(d) for d in range(k, k + tree.height + 1)]
        bound = requirement_threshold(k, family, k_gammas[i], c2) + t if k >= 1 else t
        trace.rho.append(RhoRecord(i, k, stage, steps, rho, tree, g_vals, t, bound))
        event("rho-found", i, stage, rho=rid)
        if walker.start_walk(i, rid, tree):
            finish(i, stage)
        return True

    def finish(i, stage):
        states[i].status = ACTIVE
        states[i].stem = None
        event("satisfied", i, stage)

    stage = 0
    while stage < budgets.iterations:
        stage += 1
        steps = stage * budgets.step_rate
        if walker.walk is not None:
            done = walker.walk_step()
            if done is not None:
                finish(done, stage)
            continue
        if waiting is not None:
            if try_rho(waiting, stage, steps):
                waiting = None
            continue
        k = walker.k
        if k >= depth:
            break
        i = sched.pick(k, lambda j: states[j].status == PENDING)
        if i is None:
            walker.draw(h(k))
            continue
        st = states[i]
        if not st.attended:
            st.attended = True
            st.stem, st.k_at = tuple(walker.sigma), k
            event("a", i, stage, threshold=family.target_len(k))
            continue
        S = _bounded_set(gammas[i], family, st.k_at, steps)
        refuter = is_big_bounded(S, st.stem, family.g_fn(st.k_at),
                                 len(st.stem) + budgets.search_depth, budgets.width_cap,
                                 child_bound=h)
        if refuter is None:
            event("b.1", i, stage)
            walker.draw(h(k))
            continue
        st.count += 1
        event("refuted", i, stage, count=st.count, stem=list(st.stem), k_at=st.k_at,
              witness=refuter.to_json())
        if st.count < st.cap:
            st.stem, st.k_at = tuple(walker.sigma), k
            event("b.2.i", i, stage, threshold=family.target_len(k))
            continue
        st.stem = None
        event("b.2.ii", i, stage)
        if not try_rho(i, stage, steps):
            waiting = i

    trace.path = tuple(walker.sigma)
    trace.final_stage = stage
    final_steps = stage * budgets.step_rate
    if waiting is not None:
        trace.stuck = (waiting, stage)
        trace.halt = "stuck"
        states[waiting].status = STUCK
    elif walker.walk is not None or walker.k < depth:
        trace.halt = "budget"
    for i, st in enumerate(states):
        if st.status != PENDING:
            continue
        if not st.attended:
            st.status = UNATTENDED
        elif st.stem is not None:
            S = _bounded_set(gammas[i], family, st.k_at, final_steps)
            small = is_big_bounded(S, st.stem, family.g_fn(st.k_at),
                                   len(st.stem) + budgets.search_depth, budgets.width_cap,
                                   child_bound=h) is None
            avoided = gammas[i].output_len(trace.path, final_steps) < family.target_len(st.k_at)
            st.status = PASSIVE if small and avoided else UNMET
            trace.events.append({"branch": "final", "req": i, "stage": stage,
                                 "depth": walker.k, "small": small, "avoided": avoided})
        else:
            st.status = UNMET
    trace.statuses = [st.status for st in states]
    if enum is not None:
        trace.dnc = is_dnc_prefix(trace.path, enum, budgets.enum_steps)
    return trace


# ---------------------------------------------------------------------------
# unbounded algorithm


class AssumptionList:
    """The list L of standing assumptions and the function G it induces.

    G(u) = 2^(u+m) * (g_0(u) + sum of the listed smallness functions), where
    g_0(u) = 2^(u+m). A smallness assumption made with value v under list
    contents ``base`` carries the function 2^v * G_base.
    """

    def __init__(self, m: int):
        self.m = m
        self.order: list[int] = []
        self.records: dict[int, dict] = {}
        self._memo: dict = {}

    def add(self, req: int, kind: str, **data) -> int:
        if any(self.records[a]["req"] == req for a in self.order):
            raise ValueError(f"requirement {req} already has a listed assumption")
        aid = len(self.records)
        rec = {"id": aid, "req": req, "kind": kind, **data}
        if kind == "small":
            rec["base"] = self.smallness_ids()
        self.records[aid] = rec
        self.order.append(aid)
        return aid

    def remove(self, aid: int) -> None:
        self.order.remove(aid)

    def smallness_ids(self) -> list[int]:
        return [a for a in self.order if self.records[a]["kind"] == "small"]

    def snapshot(self) -> list[int]:
        return list(self.order)

    def fn_value(self, aid: int, u: int) -> int:
        key = (aid, u)
        hit = self._memo.get(key)
        if hit is None:
            rec = self.records[aid]
            hit = self.G_value(rec["base"], u) << rec["v"]
            self._memo[key] = hit
        return hit

    def G_value(self, ids: Sequence[int], u: int) -> int:
        m = self.m
        return (1 << (u + m)) * ((1 << (u + m)) + sum(self.fn_value(a, u) for a in ids))

    def G(self, ids: Sequence[int] | None = None) -> GrowthFn:
        ids = tuple(self.smallness_ids() if ids is None else ids)
        return GrowthFn(lambda u: self.G_value(ids, u), "sum-of", f"G{list(ids)}")

    def fn(self, aid: int) -> GrowthFn:
        return GrowthFn(lambda u: self.fn_value(aid, u), "scaled", f"f{aid}")


def phi_value(phi: ToyProgram, n: int, steps: int) -> int | None:
    ex = execute(phi, steps, n=n)
    return ex.value if ex.status == "halted" else None


@dataclass
class _UnboundedState:
    c: int = 0  # wrong smallness assumptions
    c1: int = 0  # wrong undefinedness assumptions in the current run
    current: int | None = None  # id of the listed assumption
    attended: bool = False
    phi_wait: int | None = None  # argument r + d being waited on
    status: str = PENDING


def unbounded_caps(seed, i: int, m: int, override: dict | None = None):
    """Lazy caps n(i, 1) and n(i, 2, b), each from its own stream."""
    override = override or {}
    cache: dict = {}

    def cap(a: int, b: int = 0) -> int:
        key = f"{a}/{b}"
        if key not in cache:
            if f"{i}/{a}/{b}" in override:
                cache[key] = int(override[f"{i}/{a}/{b}"])
            else:
                top = 1 << (triple(i, a, b) + m)
                cache[key] = _rng(seed, "cap", i, a, b).randint(1, top)
        return cache[key]

    cap.cache = cache
    return cap


def run_unbounded_dnc(gammas: Sequence[Functional], phis: Sequence[ToyProgram],
                      d_list: Sequence[int], m: int, enum: ToyEnumeration | None = None,
                      depth: int = 12, budgets: Budgets | None = None, rng: int | str = 0, *,
                      caps: dict | None = None,
                      first_depths: Sequence[int] | None = None) -> RunTrace:
    """One run of the unbounded construction.

    ``caps`` maps ``"i/a/b"`` to a fixed value of n(i, a, b) (a = 1: wrong
    smallness cap, b = 0; a = 2: wrong undefinedness cap of run b).
    """
    budgets = budgets or Budgets()
    seed = rng
    gammas, phis = list(gammas), list(phis)
    count = len(gammas)
    if not len(phis) == len(d_list) == count:
        raise ValueError("gammas, phis and d_list must have equal length")
    cap_fns = [unbounded_caps(seed, i, m, caps) for i in range(count)]
    states = [_UnboundedState() for _ in range(count)]
    L = AssumptionList(m)
    search = SearchCaps(budgets.search_depth, budgets.width_cap, None)
    codes = [(format_program(g.program), format_program(p)) for g, p in zip(gammas, phis)]

    trace = RunTrace(
        "unbounded", seed,
        {"m": m, "depth": depth, "budgets": asdict(budgets),
         "first_depths": list(first_depths) if first_depths else None},
        [{"name": g.name, "code": gc, "phi": pc, "d": d}
         for g, (gc, pc), d in zip(gammas, codes, d_list)],
        {})
    walker = _Walker(seed, trace)
    sched = _Scheduler(list(first_depths) if first_depths else [0] * count)
    rho_wait: tuple[int, int] | None = None  # (req, rho length)

    def event(branch, i, stage, **extra):
        trace.events.append({"branch": branch, "req": i, "stage": stage, "depth": walker.k,
                             "list": L.snapshot(), **extra})

    def r_bound(i: int) -> int:
        gc, pc = codes[i]
        rows = [[L.records[a]["req"], L.records[a]["kind"], L.records[a].get("v")]
                for a in L.order]
        return description_bound([list(walker.sigma), gc, pc, d_list[i], rows])

    def assume_undefined(i, stage, r, branch):
        st = states[i]
        st.current = L.add(i, "undefined", arg=r + d_list[i], stage=stage, r=r)
        event(branch, i, stage, assumption=st.current)

    def assume_small(i, stage, v, branch):
        st = states[i]
        st.current = L.add(i, "small", v=v, stem=list(walker.sigma), stage=stage)
        event(branch, i, stage, assumption=st.current)

    def refuted(i: int, aid: int, steps: int) -> bool:
        rec = L.records[aid]
        if rec["kind"] == "undefined":
            return phi_value(phis[i], rec["arg"], steps) is not None
        stem = tuple(rec["stem"])
        S = output_set(gammas[i], rec["v"], steps)
        return is_big_bounded(S, stem, L.fn(aid), len(stem) + budgets.search_depth,
                              budgets.width_cap) is not None

    def try_rho(i: int, length: int, stage: int, steps: int) -> bool:
        ids = L.smallness_ids()
        G = L.G(ids)
        hit = find_rho_star(tuple(walker.sigma), gammas[i], length, G, search, steps)
        if hit is None:
            return False
        rho, tree = hit
        rid = len(trace.rho)
        k = walker.k
        g_vals = [G(d) for d in range(k, k + tree.height + 1)]
        trace.rho.append(RhoRecord(i, k, stage, steps, rho, tree, g_vals, length, r_bound(i)))
        event("rho-found", i, stage, rho=rid)
        if walker.start_walk(i, rid, tree):
            finish(i, stage)
        return True

    def finish(i, stage):
        states[i].status = ACTIVE
        event("satisfied", i, stage)

    stage = 0
    while stage < budgets.iterations:
        stage += 1
        steps = stage * budgets.step_rate
        if walker.walk is not None:
            done = walker.walk_step()
            if done is not None:
                finish(done, stage)
            continue
        if rho_wait is not None:
            if try_rho(rho_wait[0], rho_wait[1], stage, steps):
                rho_wait = None
            continue
        k = walker.k
        if k >= depth:
            break
        i = sched.pick(k, lambda j: states[j].status == PENDING)
        if i is None:
            walker.draw(L.G()(k), L.snapshot())
            continue
        st = states[i]
        r = r_bound(i)
        if not st.attended:
            st.attended = True
            assume_undefined(i, stage, r, "a")
            continue
        if st.phi_wait is not None:
            v = phi_value(phis[i], st.phi_wait, steps)
            if v is None:
                event("phi-wait", i, stage, arg=st.phi_wait)
                continue
            st.phi_wait = None
            assume_small(i, stage, v, "b.2.ii")
            continue
        aid = st.current
        if not refuted(i, aid, steps):
            event("b.1", i, stage)
            walker.draw(L.G()(k), L.snapshot())
            continue
        rec = L.records[aid]
        L.remove(aid)
        st.current = None
        if rec["kind"] == "undefined":
            st.c1 += 1
            event("refuted", i, stage, assumption=aid, count=st.c1)
            if st.c1 < cap_fns[i](2, st.c):
                assume_undefined(i, stage, r, "b.2.i")
                continue
            arg = r + d_list[i]
            v = phi_value(phis[i], arg, steps)
            if v is None:
                st.phi_wait = arg
                event("phi-wait", i, stage, arg=arg)
                continue
            assume_small(i, stage, v, "b.2.ii")
            continue
        st.c += 1
        event("refuted", i, stage, assumption=aid, count=st.c)
        if st.c < cap_fns[i](1, 0):
            st.c1 = 0
            assume_undefined(i, stage, r, "b.3.i")
            continue
        event("b.3.ii", i, stage, length=rec["v"])
        if rec["v"] < 1:
            finish(i, stage)  # the empty rho is trivially compressible
        elif not try_rho(i, rec["v"], stage, steps):
            rho_wait = (i, rec["v"])

    trace.path = tuple(walker.sigma)
    trace.final_stage = stage
    final_steps = stage * budgets.step_rate
    stuck_req = None
    if rho_wait is not None:
        stuck_req = rho_wait[0]
    else:
        for i, st in enumerate(states):
            if st.status == PENDING and st.phi_wait is not None:
                stuck_req = i
                break
    if stuck_req is not None:
        trace.stuck = (stuck_req, stage)
        trace.halt = "stuck"
        states[stuck_req].status = STUCK
    elif walker.walk is not None or walker.k < depth:
        trace.halt = "budget"
    for i, st in enumerate(states):
        if st.status != PENDING:
            continue
        if not st.attended:
            st.status = UNATTENDED
            continue
        if st.current is None:
            st.status = UNMET
            continue
        rec = L.records[st.current]
        if rec["kind"] == "undefined":
            ok = phi_value(phis[i], rec["arg"], final_steps) is None
        else:
            small = not refuted(i, st.current, final_steps)
            avoided = gammas[i].output_len(trace.path, final_steps) < rec["v"]
            ok = small and avoided
            event("final", i, stage, small=small, avoided=avoided)
        st.status = PASSIVE if ok else UNMET
    trace.statuses = [st.status for st in states]
    trace.assumptions = {a: dict(rec) for a, rec in L.records.items()}
    trace.caps = {f"{i}/{key}": v for i, f in enumerate(cap_fns) for key, v in
                  sorted(f.cache.items())}
    if enum is not None:
        trace.dnc = is_dnc_prefix(trace.path, enum, budgets.enum_steps)
    return trace


# ---------------------------------------------------------------------------
# audits


@dataclass
class AuditReport:
    valid: bool
    problems: list[str]
    dnc: bool | None
    restrictions: int
    rho: list[dict]
    true_small_hits: list[int]
    branches: dict

    def to_json(self) -> dict:
        return asdict(self)


def _functional_from(req: dict) -> Functional:
    return make_functional("code:" + req["code"])


def audit_trace(trace: RunTrace, enum: ToyEnumeration | None = None,
                gammas: Sequence[Functional] | None = None, k_budget: int = 100_000,
                machine: PrefixFreeMachine | None = None) -> AuditReport:
    """Recompute the ground truth behind a trace and flag any inconsistency."""
    machine = machine or PrefixFreeMachine()
    problems: list[str] = []
    if gammas is None:
        gammas = [_functional_from(r) for r in trace.requirements]
    budgets = trace.params["budgets"]
    if trace.algorithm == "bounded":
        family = GrowthFamily.from_description(trace.params["family"])
        m = family.m
    else:
        family = None
        m = trace.params["m"]

    # choices replay the path, stay below their bounds, respect the floor
    path = trace.path
    if len(trace.choices) != len(path):
        problems.append(f"{len(trace.choices)} choices for a path of length {len(path)}")
    for n, ch in enumerate(trace.choices):
        if ch.depth != n:
            problems.append(f"choice {n} recorded at depth {ch.depth}")
        if not 0 <= ch.value < ch.bound:
            problems.append(f"depth {ch.depth}: value {ch.value} not below bound {ch.bound}")
        if n < len(path) and path[n] != ch.value:
            problems.append(f"depth {n}: path has {path[n]}, choice says {ch.value}")
        if ch.bound < 1 << (ch.depth + m):
            problems.append(f"depth {ch.depth}: bound {ch.bound} below 2^(n+m)")
        if ch.restriction is None and family is not None and ch.bound != family.h(ch.depth):
            problems.append(f"depth {ch.depth}: free draw bound {ch.bound} differs from h")

    # witnesses
    rho_rows = []
    for rid, rec in enumerate(trace.rho):
        tree = rec.tree
        if not is_prefix(tree.stem, path) and not is_prefix(path, tree.stem):
            problems.append(f"rho {rid}: stem {tree.stem} is not on the path")
        S = output_set(gammas[rec.req], rec.threshold, rec.steps, rec.rho)
        if not verify_witness(tree, S, rec.g_fn()):
            problems.append(f"rho {rid}: witness does not verify")
        for ch in trace.choices:
            if ch.restriction == rid:
                node = tuple(path[: ch.depth])
                if ch.bound != len(tree.children(node)):
                    problems.append(f"rho {rid}: depth {ch.depth} bound {ch.bound} is not the "
                                    f"child count of the witness")
                if tuple(path[: ch.depth + 1]) not in tree.nodes:
                    problems.append(f"rho {rid}: walk left the witness at depth {ch.depth}")
        ka = k_approx(rec.rho, machine, k_budget)
        rho_rows.append({"req": rec.req, "rho": "".join(map(str, rec.rho)), "length": len(rec.rho),
                         "k_approx": ka, "margin": ka - len(rec.rho), "bound": rec.bound,
                         "within_bound": ka <= rec.bound, "k": rec.k,
                         "leaves": len(tree.leaves), "height": tree.height})

    # each requirement satisfied at most once, and only after a switch
    sat = Counter(ev["req"] for ev in trace.events if ev["branch"] == "satisfied")
    for i, n in sat.items():
        if n > 1:
            problems.append(f"requirement {i} satisfied {n} times")
    switched = {ev["req"] for ev in trace.events if ev["branch"] in ("b.2.ii", "b.3.ii")}
    for i in sat:
        if i not in switched:
            problems.append(f"requirement {i} satisfied without a switch")
    for i, s in enumerate(trace.statuses):
        if s == ACTIVE and sat.get(i, 0) != 1:
            problems.append(f"requirement {i} marked active without a satisfaction event")

    # unbounded: list discipline and recomputed draw bounds
    if trace.algorithm == "unbounded":
        L = AssumptionList(m)
        L.records = {int(a): rec for a, rec in trace.assumptions.items()}
        known = set(L.records)
        phis = [ToyProgram.parse(r["phi"]) for r in trace.requirements]
        for ev in trace.events:
            if not set(ev["list"]) <= known:
                problems.append(f"stage {ev['stage']}: list names unknown assumptions")
                continue
            reqs = [L.records[a]["req"] for a in ev["list"]]
            if len(reqs) != len(set(reqs)):
                problems.append(f"stage {ev['stage']}: two listed assumptions for one requirement")
            if ev["branch"] == "refuted" and ev.get("assumption") in known:
                rec = L.records[ev["assumption"]]
                steps = ev["stage"] * budgets["step_rate"]
                if rec["kind"] == "undefined" and phi_value(phis[rec["req"]], rec["arg"],
                                                            steps) is None:
                    problems.append(f"stage {ev['stage']}: assumption {rec['id']} refuted "
                                    f"but phi({rec['arg']}) is undefined")
        for a, rec in L.records.items():
            if rec["kind"] == "undefined":
                d = trace.requirements[rec["req"]]["d"]
                if rec["arg"] != rec["r"] + d:
                    problems.append(f"assumption {a}: argument {rec['arg']} is not r + d")
            if rec["kind"] == "small":
                if any(b not in known or L.records[b]["kind"] != "small" for b in rec["base"]):
                    problems.append(f"assumption {a}: base lists a non-smallness assumption")
        for ch in trace.choices:
            if ch.restriction is None:
                listed = ch.assumptions or []
                if not set(listed) <= known:
                    problems.append(f"depth {ch.depth}: unknown assumptions {listed}")
                    continue
                ids = [a for a in listed if L.records[a]["kind"] == "small"]
                if ch.bound != L.G_value(ids, ch.depth):
                    problems.append(f"depth {ch.depth}: bound {ch.bound} differs from G")

    # did the path enter a set whose smallness assumption is still true at the end?
    hits = [ev["req"] for ev in trace.events
            if ev["branch"] == "final" and ev["small"] and not ev["avoided"]]

    dnc = is_dnc_prefix(path, enum, budgets["enum_steps"]) if enum is not None else trace.dnc
    return AuditReport(not problems, problems, dnc, len(trace.rho), rho_rows, hits,
                       dict(sorted(trace.branches().items())))
