"""Seeded batch experiments and their statistics reports.

Trial i of an experiment with base seed s runs with seed
``int.from_bytes(sha256(f"{s}:{i}").digest()[:8], "big")``. Trials are
independent, so they may be dispatched to worker processes; the aggregation
sums per-trial counts in trial order and is identical for any worker count.
"""
from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
import random
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Literal, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from . import fireworks as fw
from .bushy import (GrowthFn, PredicateSet, UnionSet, avoidance_lower_bound, closure,
                    exact_avoid_probability, exhaustive_witness_search, glue, grid,
                    is_big_bounded, planted_closed_set, random_walk, verify_witness)
from .computation import default_enumeration, make_functional
from .dnc import Budgets, audit_trace, run_bounded_dnc, run_unbounded_dnc
from .growth import GrowthFamily, requirement_threshold
from .kolmogorov import PrefixFreeMachine
from .vm import ToyProgram

Kind = Literal["walk-bound", "fireworks-trap", "dnc-bounded", "dnc-unbounded", "family-audit",
               "lemma-suite"]


def derive_seed(base: int, index: int) -> int:
    return int.from_bytes(hashlib.sha256(f"{base}:{index}".encode()).digest()[:8], "big")


# ---------------------------------------------------------------------------
# configuration models


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class WalkBoundConfig(_Strict):
    g: Union[int, list[int]] = Field(2, description="constant g, or a table g(0), g(1), ...")
    h_offset: int = Field(4, ge=0, description="h(i) = 2^(i + h_offset)")
    depth: int = Field(3, ge=1, le=12)
    planted: bool = Field(True, description="avoid the planted maximal g-closed small set")

    def g_fn(self) -> GrowthFn:
        if isinstance(self.g, int):
            return GrowthFn.constant(self.g)
        if len(self.g) < self.depth:
            raise ValueError("g table shorter than depth")
        return GrowthFn.table(self.g)


class FireworksConfig(_Strict):
    count: int = Field(20, ge=1)
    offset: int = Field(3, ge=0, description="N(i) = 2^(i + offset)")
    lag: int = Field(2, ge=1)
    base: int = Field(10, ge=0)
    spacing: int = Field(3, ge=0)
    delay: int = Field(20, ge=0)
    budget: int | None = Field(None, ge=1)
    replay_seeds: int = Field(100, ge=0, description="trials re-run for the one-bad-cap check")
    replay_span: int = Field(32, ge=1, description="alternative caps tried on each side")

    def trap(self) -> dict:
        return {"lag": self.lag, "base": self.base, "spacing": self.spacing, "delay": self.delay}


class RequirementConfig(_Strict):
    functional: str
    params: dict = Field(default_factory=dict)
    d: int = Field(0, ge=0)
    phi: str = Field("PUSH 1 HALT", description="toy program for phi (unbounded runs)")
    first_depth: int | None = None


class BudgetConfig(_Strict):
    iterations: int = Field(1000, ge=1)
    step_rate: int = Field(16, ge=1)
    search_depth: int = Field(1, ge=0)
    width_cap: int = Field(16, ge=1)
    enum_steps: int = Field(10_000, ge=1)

    def budgets(self) -> Budgets:
        return Budgets(**self.model_dump())


def _default_roster() -> list[RequirementConfig]:
    return [RequirementConfig(functional="slow-emitter", params={"length": n, "delay": 5, "lead": 20})
            for n in (3, 7, 9)]


class DncBoundedConfig(_Strict):
    m: int = Field(3, ge=1)
    mode: Literal["scaled", "exact"] = "scaled"
    k_max: int = Field(40, ge=1)
    h0: str | None = None
    depth: int = Field(24, ge=1)
    roster: list[RequirementConfig] = Field(default_factory=_default_roster)
    budgets: BudgetConfig = Field(default_factory=BudgetConfig)
    caps: list[int] | None = None


def _default_unbounded_roster() -> list[RequirementConfig]:
    # with a total phi, requirement 0 alone may see up to 2^18 refutations before
    # its first smallness guess at m = 3; the default roster keeps phi nowhere defined
    return [RequirementConfig(functional=name, phi="JMP 0")
            for name in ("copy-parity", "use-all-input")]


class DncUnboundedConfig(_Strict):
    m: int = Field(3, ge=1)
    depth: int = Field(10, ge=1)
    roster: list[RequirementConfig] = Field(default_factory=_default_unbounded_roster)
    budgets: BudgetConfig = Field(default_factory=BudgetConfig)
    caps: dict[str, int] | None = None


class FamilyAuditConfig(_Strict):
    m_values: list[int] = Field(default_factory=lambda: [1, 2, 3, 4])
    k_max: int = Field(2, ge=0, le=2)


class LemmaConfig(_Strict):
    width_cap: int = Field(3, ge=2, le=3)
    depth_cap: int = Field(4, ge=1, le=4)


CONFIG_MODELS = {
    "walk-bound": WalkBoundConfig,
    "fireworks-trap": FireworksConfig,
    "dnc-bounded": DncBoundedConfig,
    "dnc-unbounded": DncUnboundedConfig,
    "family-audit": FamilyAuditConfig,
    "lemma-suite": LemmaConfig,
}


class ExperimentSpec(_Strict):
    kind: Kind
    trials: int = Field(1000, ge=1)
    seed: int = Field(0, ge=0, lt=1 << 64)
    config: dict = Field(default_factory=dict)
    sigma: float = Field(3.0, gt=0, description="confidence multiplier")
    workers: int = Field(1, ge=1)

    @field_validator("config")
    @classmethod
    def _payload_is_object(cls, v):
        if not isinstance(v, dict):
            raise ValueError("config must be an object")
        return v

    def parsed(self) -> BaseModel:
        return CONFIG_MODELS[self.kind].model_validate(self.config)


# ---------------------------------------------------------------------------
# reports


class CheckResult(BaseModel):
    name: str
    direction: Literal["at_least", "at_most", "zero_failures"]
    trials: int
    successes: int
    frequency: float
    bound: str
    bound_value: float
    margin: float
    passed: bool


class StatsReport(BaseModel):
    kind: str
    trials: int
    seed: int
    sigma: float
    checks: list[CheckResult]
    passed: bool
    details: dict = Field(default_factory=dict)
    wall_clock: float = 0.0

    def canonical(self) -> dict:
        data = self.model_dump()
        data.pop("wall_clock")
        return data

    def to_json(self, with_clock: bool = True) -> str:
        data = self.model_dump() if with_clock else self.canonical()
        return json.dumps(data, sort_keys=True, indent=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        fields = list(CheckResult.model_fields)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "seed"] + fields)
        for c in self.checks:
            row = c.model_dump()
            w.writerow([self.kind, self.seed] + [json.dumps(row[f]) if not isinstance(row[f], str)
                                                 else row[f] for f in fields])
        return buf.getvalue()


def bernoulli_margin(p: float, n: int, sigma: float) -> float:
    p = min(max(p, 0.0), 1.0)
    return sigma * math.sqrt(p * (1 - p) / n) if n else 0.0


def check(name: str, direction: str, successes: int, trials: int, bound: Fraction,
          sigma: float) -> CheckResult:
    freq = successes / trials if trials else 0.0
    bv = float(bound)
    margin = bernoulli_margin(bv, trials, sigma)
    if direction == "at_least":
        ok = freq >= bv - margin
    elif direction == "at_most":
        ok = freq <= bv + margin
    else:
        ok = successes == 0
    return CheckResult(name=name, direction=direction, trials=trials, successes=successes,
                       frequency=freq, bound=str(bound), bound_value=bv, margin=margin,
                       passed=ok)


# ---------------------------------------------------------------------------
# per-trial work (top level so worker processes can import it)


_CACHE: dict = {}


def _cached(key, make):
    hit = _CACHE.get(key)
    if hit is None:
        hit = _CACHE[key] = make()
    return hit


def _trial_walk(cfg: WalkBoundConfig, seed: int) -> dict:
    g = cfg.g_fn()
    h = GrowthFn.power2(cfg.h_offset)
    avoid = planted_closed_set(g) if cfg.planted else PredicateSet(lambda t: False, "empty")
    res = random_walk(h, avoid, cfg.depth, rng=random.Random(seed))
    return {"avoided": int(not res.hit_set)}


def _trial_fireworks(cfg: FireworksConfig, seed: int) -> dict:
    out = fw.trap_trial(seed, cfg.count, cfg.offset, cfg.budget, **cfg.trap())
    return {"stuck": int(out.is_stuck), "stuck_req": out.stuck[0] if out.stuck else -1,
            "cap": out.caps[out.stuck[0]] if out.stuck else 0}


def _functionals(roster):
    return [make_functional(r.functional, r.params) for r in roster]


def _trial_dnc(cfg: DncBoundedConfig, seed: int) -> dict:
    family = _cached(("family", cfg.m, cfg.mode, cfg.k_max, cfg.h0),
                     lambda: GrowthFamily(cfg.m, cfg.mode, cfg.k_max, h0=cfg.h0))
    enum = _cached("enum", default_enumeration)
    firsts = [r.first_depth for r in cfg.roster]
    tr = run_bounded_dnc(family, _functionals(cfg.roster), [r.d for r in cfg.roster], enum,
                         cfg.depth, cfg.budgets.budgets(), seed,
                         first_depths=firsts if any(f is not None for f in firsts) else None,
                         caps=cfg.caps)
    return {"dnc": int(bool(tr.dnc)), "stuck": int(tr.is_stuck),
            "met": int(tr.all_met() and not tr.is_stuck), "budget": int(tr.halt == "budget"),
            "restrictions": len(tr.rho)}


def _trial_unbounded(cfg: DncUnboundedConfig, seed: int) -> dict:
    enum = _cached("enum", default_enumeration)
    phis = [ToyProgram.parse(r.phi) for r in cfg.roster]
    firsts = [r.first_depth or 0 for r in cfg.roster]
    tr = run_unbounded_dnc(_functionals(cfg.roster), phis, [r.d for r in cfg.roster], cfg.m,
                           enum, cfg.depth, cfg.budgets.budgets(), seed, caps=cfg.caps,
                           first_depths=firsts)
    rep = audit_trace(tr, enum)
    return {"dnc": int(bool(tr.dnc)), "stuck": int(tr.is_stuck),
            "met": int(tr.all_met() and not tr.is_stuck), "budget": int(tr.halt == "budget"),
            "invalid": int(not rep.valid), "restrictions": len(tr.rho)}


TRIALS = {
    "walk-bound": _trial_walk,
    "fireworks-trap": _trial_fireworks,
    "dnc-bounded": _trial_dnc,
    "dnc-unbounded": _trial_unbounded,
}


def _run_chunk(kind: str, payload: dict, seeds: list[int]) -> list[dict]:
    cfg = CONFIG_MODELS[kind].model_validate(payload)
    fn = TRIALS[kind]
    return [fn(cfg, s) for s in seeds]


def _run_trials(spec: ExperimentSpec, cfg: BaseModel) -> list[dict]:
    seeds = [derive_seed(spec.seed, i) for i in range(spec.trials)]
    payload = cfg.model_dump()
    if spec.workers == 1:
        return _run_chunk(spec.kind, payload, seeds)
    size = math.ceil(len(seeds) / spec.workers)
    chunks = [seeds[i:i + size] for i in range(0, len(seeds), size)]
    out: list[dict] = []
    with ProcessPoolExecutor(spec.workers) as pool:
        for part in pool.map(_run_chunk, itertools.repeat(spec.kind), itertools.repeat(payload),
                             chunks):
            out.extend(part)
    return out


def _total(rows: list[dict], key: str) -> int:
    return sum(r[key] for r in rows)


# ---------------------------------------------------------------------------
# experiment kinds


def _walk_report(spec, cfg: WalkBoundConfig) -> tuple[list[CheckResult], dict]:
    rows = _run_trials(spec, cfg)
    g = cfg.g_fn()
    h = GrowthFn.power2(cfg.h_offset)
    bound = avoidance_lower_bound(g, h, cfg.depth)
    avoid = planted_closed_set(g) if cfg.planted else PredicateSet(lambda t: False, "empty")
    exact = exact_avoid_probability(h, avoid, cfg.depth)
    checks = [check("avoidance", "at_least", _total(rows, "avoided"), len(rows), bound,
                    spec.sigma)]
    return checks, {"exact_avoid_probability": str(exact), "exact_float": float(exact)}


def _fireworks_report(spec, cfg: FireworksConfig) -> tuple[list[CheckResult], dict]:
    rows = _run_trials(spec, cfg)
    N = fw.trap_N(cfg.offset)
    bound = fw.stuck_bound(N, cfg.count)
    checks = [check("stuck", "at_most", _total(rows, "stuck"), len(rows), bound, spec.sigma)]
    # one-bad-cap replay on the stuck runs among the first replay_seeds trials
    failures = tried = 0
    for idx in range(min(cfg.replay_seeds, len(rows))):
        r = rows[idx]
        if not r["stuck"]:
            continue
        seed = derive_seed(spec.seed, idx)
        i, n = r["stuck_req"], r["cap"]
        lo = max(1, n - cfg.replay_span)
        hi = min(N(i), n + cfg.replay_span)
        for v in range(lo, hi + 1):
            if v == n:
                continue
            out = fw.trap_trial(seed, cfg.count, cfg.offset, cfg.budget, {i: v}, **cfg.trap())
            tried += 1
            if out.is_stuck:
                # another requirement may now hit its own bad cap; only i matters here
                failures += out.stuck[0] == i
            else:
                failures += out.status[i] != (fw.ACTIVE if v < n else fw.PASSIVE)
    checks.append(check("one-bad-cap", "zero_failures", failures, max(tried, 1), Fraction(0),
                        spec.sigma))
    by_req: dict = {}
    for r in rows:
        if r["stuck"]:
            by_req[str(r["stuck_req"])] = by_req.get(str(r["stuck_req"]), 0) + 1
    return checks, {"replays": tried, "stuck_by_requirement": by_req}


def _dnc_report(spec, cfg, unbounded: bool) -> tuple[list[CheckResult], dict]:
    rows = _run_trials(spec, cfg)
    m = cfg.m
    n = len(rows)
    stuck = _total(rows, "stuck")
    free = n - stuck
    met = _total(rows, "met")
    checks = [
        check("dnc-prefix", "at_least", _total(rows, "dnc"), n, 1 - Fraction(1, 2 ** (m - 1)),
              spec.sigma),
        check("stuck", "at_most", stuck, n, Fraction(1, 2 ** (m - 1)), spec.sigma),
        check("requirements-met", "at_least", met, max(free, 1),
              max(Fraction(0), 1 - Fraction(1, 2 ** (m - 2)) if m >= 2 else Fraction(0)),
              spec.sigma),
    ]
    details = {"budget_exhausted": _total(rows, "budget"),
               "restrictions": _total(rows, "restrictions")}
    if unbounded:
        checks.append(check("trace-audit", "zero_failures", _total(rows, "invalid"), n,
                            Fraction(0), spec.sigma))
    return checks, details


def reference_g(m: int, k: int, i: int) -> int:
    """Direct big-integer evaluation of the recurrence, independent of GrowthFamily."""
    if k == 0:
        return 2 ** (i + m)
    if i < k:
        return 1
    return reference_g(m, k - 1, i) * 2 ** (reference_g(m, k - 1, k - 1) + i + m)


def _family_report(spec, cfg: FamilyAuditConfig) -> tuple[list[CheckResult], dict]:
    mismatches = audits = decreasing_bad = 0
    cells = 0
    c2 = PrefixFreeMachine.literal_overhead
    thresholds = {}
    for m in cfg.m_values:
        fam = GrowthFamily(m, "exact", cfg.k_max)
        for k in range(cfg.k_max + 1):
            for i in range(cfg.k_max + 1):
                cells += 1
                mismatches += fam.g(k, i) != reference_g(m, k, i)
            cells += 1
            mismatches += fam.h(k) != reference_g(m, k, k)
        audits += len(fam.audit(cfg.k_max))
        ts = [requirement_threshold(k, fam, 0, c2) for k in range(1, cfg.k_max + 2)]
        thresholds[str(m)] = [t if abs(t) < 10 ** 12 else f"-2^{(-t).bit_length() - 1}+"
                              for t in ts]
        # eventually decreasing: strictly decreasing from the first negative value on
        start = next((j for j, t in enumerate(ts) if t < 0), len(ts))
        decreasing_bad += any(ts[j + 1] >= ts[j] for j in range(start, len(ts) - 1))
        decreasing_bad += start == len(ts)
    checks = [
        check("recurrence", "zero_failures", mismatches, cells, Fraction(0), spec.sigma),
        check("inequalities", "zero_failures", audits, len(cfg.m_values), Fraction(0),
              spec.sigma),
        check("threshold-decreasing", "zero_failures", decreasing_bad, len(cfg.m_values),
              Fraction(0), spec.sigma),
    ]
    return checks, {"thresholds": thresholds, "g_1(1) at m=3": str(reference_g(3, 1, 1))}


# lemma suite ---------------------------------------------------------------


def _random_set(rng: random.Random, nodes: list, p: float) -> frozenset:
    return frozenset(t for t in nodes if rng.random() < p)


def lemma_instance(rng: random.Random, width: int, depth_cap: int) -> dict:
    """One randomized instance of the four properties; returns failure flags."""
    nodes = list(grid(depth_cap, width))
    span = rng.randint(1, 2 if width == 3 else 3)
    stem_len = rng.randint(0, max(0, depth_cap - span))
    sigma = tuple(rng.randrange(width) for _ in range(stem_len))
    top = stem_len + span
    g = GrowthFn.table([rng.randint(0, width) for _ in range(depth_cap + 1)])
    f1 = GrowthFn.table([rng.randint(0, 2) for _ in range(depth_cap + 1)])
    f2 = GrowthFn.table([rng.randint(0, 2) for _ in range(depth_cap + 1)])
    B = _random_set(rng, nodes, rng.choice((0.2, 0.4, 0.6)))
    C = _random_set(rng, nodes, rng.choice((0.3, 0.5, 0.7)))
    fail = {"concatenation": 0, "additivity": 0, "closure": 0, "exhaustive": 0}

    # exhaustive agreement
    fast = is_big_bounded(B, sigma, g, top, width)
    slow = exhaustive_witness_search(B, sigma, g, top, width)
    if (fast is None) != (slow is None) or (fast is not None and not verify_witness(fast, B, g)):
        fail["exhaustive"] = 1

    # concatenation: a B-witness whose leaves all carry C-witnesses glues to a C-witness
    base = is_big_bounded(B, sigma, g, top, width)
    if base is not None:
        tops = {}
        for leaf in base.leaves:
            if len(leaf) < len(sigma):
                continue
            w = is_big_bounded(C, leaf, g, depth_cap, width) if len(leaf) <= depth_cap else None
            if w is None:
                break
            tops[leaf] = w
        else:
            if not verify_witness(glue(base, tops), C, g):
                fail["concatenation"] = 1

    # additivity contrapositive
    both = f1 + f2
    if is_big_bounded(UnionSet(B, C), sigma, both, depth_cap, width) is not None:
        if (is_big_bounded(B, sigma, f1, depth_cap, width) is None
                and is_big_bounded(C, sigma, f2, depth_cap, width) is None):
            fail["additivity"] = 1

    # closure: idempotent, and small stays small
    cl = closure(B, g, depth_cap, width)
    if closure(cl, g, depth_cap, width) != cl:
        fail["closure"] = 1
    if is_big_bounded(B, sigma, g, depth_cap, width) is None:
        if is_big_bounded(cl, sigma, g, depth_cap, width) is not None:
            fail["closure"] = 1
    return fail


def _lemma_report(spec, cfg: LemmaConfig) -> tuple[list[CheckResult], dict]:
    totals = {"concatenation": 0, "additivity": 0, "closure": 0, "exhaustive": 0}
    for t in range(spec.trials):
        rng = random.Random(derive_seed(spec.seed, t))
        width = rng.randint(2, cfg.width_cap)
        res = lemma_instance(rng, width, cfg.depth_cap)
        for k, v in res.items():
            totals[k] += v
    checks = [check(name, "zero_failures", n, spec.trials, Fraction(0), spec.sigma)
              for name, n in totals.items()]
    return checks, {}


def run_experiment(spec: ExperimentSpec) -> StatsReport:
    cfg = spec.parsed()
    t0 = time.perf_counter()
    if spec.kind == "walk-bound":
        checks, details = _walk_report(spec, cfg)
    elif spec.kind == "fireworks-trap":
        checks, details = _fireworks_report(spec, cfg)
    elif spec.kind == "dnc-bounded":
        checks, details = _dnc_report(spec, cfg, unbounded=False)
    elif spec.kind == "dnc-unbounded":
        checks, details = _dnc_report(spec, cfg, unbounded=True)
    elif spec.kind == "family-audit":
        checks, details = _family_report(spec, cfg)
    else:
        checks, details = _lemma_report(spec, cfg)
    return StatsReport(kind=spec.kind, trials=spec.trials, seed=spec.seed, sigma=spec.sigma,
                       checks=checks, passed=all(c.passed for c in checks), details=details,
                       wall_clock=time.perf_counter() - t0)


def config_schema() -> dict:
    """JSON schema of an experiment file; the payload schema depends on ``kind``."""
    defs: dict = {}
    branches = []
    for kind, model in CONFIG_MODELS.items():
        sub = model.model_json_schema(ref_template="#/$defs/{model}")
        defs.update(sub.pop("$defs", {}))
        defs[model.__name__] = sub
        branches.append({"if": {"properties": {"kind": {"const": kind}}},
                         "then": {"properties": {"config": {"$ref": f"#/$defs/{model.__name__}"}}}})
    top = ExperimentSpec.model_json_schema()
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "bushydnc experiment",
        "type": "object",
        "properties": top["properties"],
        "additionalProperties": False,
        "allOf": branches,
        "$defs": dict(sorted(defs.items())),
    }
