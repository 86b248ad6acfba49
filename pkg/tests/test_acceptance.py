"""Acceptance criteria 1-7, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` (the lines are also written
through the terminal reporter without ``-s``). The full suite takes about a
minute and a half on one core.
"""
import time

import pytest

from bushydnc import fireworks as fw
from bushydnc.computation import copy_parity, default_enumeration
from bushydnc.dnc import Budgets, RunTrace, audit_trace, run_unbounded_dnc
from bushydnc.growth import GrowthFamily
from bushydnc.harness import ExperimentSpec, reference_g, run_experiment
from bushydnc.vm import ToyProgram

SEED = 20240101
REPORTS: dict = {}


def _line(capsys, number, ok, text, seconds):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {text} ({seconds:.1f} s)")


def _describe(report):
    return "; ".join(f"{c.name} {c.successes}/{c.trials}={c.frequency:.4f} vs {c.bound} "
                     f"(margin {c.margin:.4f})" for c in report.checks)


def _timed(spec):
    t0 = time.perf_counter()
    rep = run_experiment(spec)
    return rep, time.perf_counter() - t0


def test_criterion_1_lemma_suite(capsys):
    spec = ExperimentSpec(kind="lemma-suite", trials=1000, seed=SEED,
                          config={"width_cap": 3, "depth_cap": 4})
    rep, secs = _timed(spec)
    REPORTS[1] = (spec, rep)
    ok = rep.passed and secs < 10
    _line(capsys, 1, ok, "lemma suite, 1000 instances, zero failures; " + _describe(rep), secs)
    assert ok


def test_criterion_2_walk_bound(capsys):
    spec = ExperimentSpec(kind="walk-bound", trials=100_000, seed=SEED,
                          config={"g": 2, "h_offset": 4, "depth": 3, "planted": True})
    rep, secs = _timed(spec)
    REPORTS[2] = (spec, rep)
    assert rep.checks[0].bound == "3255/4096"
    ok = rep.passed and secs < 30
    _line(capsys, 2, ok, "walk avoidance >= 3255/4096 - 3 sigma; " + _describe(rep), secs)
    assert ok


def test_criterion_3_fireworks(capsys):
    spec = ExperimentSpec(kind="fireworks-trap", trials=10_000, seed=SEED,
                          config={"count": 20, "offset": 3, "replay_seeds": 100})
    rep, secs = _timed(spec)
    bound = fw.stuck_bound(fw.trap_N(3), 20)
    assert rep.checks[0].bound == str(bound) and bound < 0.25
    ok = rep.passed and rep.details["replays"] > 0 and secs < 60
    _line(capsys, 3, ok, f"stuck <= sum 1/N(i) + 3 sigma, one-bad-cap replay over 100 seeds "
          f"({rep.details['replays']} replays); " + _describe(rep), secs)
    assert ok


def test_criterion_4_dnc_claims(capsys):
    spec = ExperimentSpec(kind="dnc-bounded", trials=10_000, seed=SEED,
                          config={"m": 3, "mode": "scaled", "depth": 24})
    rep, secs = _timed(spec)
    names = {c.name: c for c in rep.checks}
    assert names["dnc-prefix"].bound == "3/4" and names["stuck"].bound == "1/4"
    assert names["requirements-met"].bound == "1/2"
    ok = rep.passed and secs < 300
    _line(capsys, 4, ok, "m=3: dnc >= 3/4, stuck <= 1/4, met among non-stuck >= 1/2; "
          + _describe(rep), secs)
    assert ok


def test_criterion_5_family_audit(capsys):
    t0 = time.perf_counter()
    spec = ExperimentSpec(kind="family-audit", trials=1, seed=SEED,
                          config={"m_values": [1, 2, 3, 4], "k_max": 2})
    rep = run_experiment(spec)
    fam = GrowthFamily(3, "exact", 2)
    spot = fam.g(1, 1) == 65536 == reference_g(3, 1, 1)
    secs = time.perf_counter() - t0
    ok = rep.passed and spot and secs < 5
    _line(capsys, 5, ok, f"exact family m<=4, k<=2, g_1(1)={fam.g(1, 1)} at m=3; "
          + _describe(rep), secs)
    assert ok


ADVERSARY = dict(gammas=[copy_parity()], phis=[ToyProgram.parse("PUSH 1 HALT")], d_list=[0],
                 m=1, depth=8, budgets=Budgets(iterations=200, width_cap=16), rng=5,
                 caps={"0/1/0": 2, "0/2/0": 2, "0/2/1": 1})
BRANCHES = ("a", "b.2.i", "b.2.ii", "b.3.i", "b.3.ii")


def test_criterion_6_unbounded_adversary(capsys):
    t0 = time.perf_counter()
    enum = default_enumeration()
    tr = run_unbounded_dnc(enum=enum, **ADVERSARY)
    again = run_unbounded_dnc(enum=enum, **ADVERSARY)
    counts = tr.branches()
    audit = audit_trace(RunTrace.from_jsonl(tr.to_jsonl()), enum)
    secs = time.perf_counter() - t0
    covered = all(counts[b] >= 1 for b in BRANCHES)
    ok = covered and audit.valid and tr.to_jsonl() == again.to_jsonl() and secs < 10
    seen = ", ".join(f"{b}x{counts[b]}" for b in BRANCHES)
    _line(capsys, 6, ok, f"branches {seen}; audit valid={audit.valid} "
          f"({len(audit.problems)} problems); deterministic", secs)
    assert ok, audit.problems


def test_criterion_7_determinism(capsys):
    missing = [k for k in (1, 2) if k not in REPORTS]
    if missing:
        pytest.skip(f"criteria {missing} did not run in this session")
    t0 = time.perf_counter()
    same = []
    for k in (1, 2):
        spec, first = REPORTS[k]
        second = run_experiment(spec)
        same.append(first.to_json(with_clock=False) == second.to_json(with_clock=False))
    secs = time.perf_counter() - t0
    ok = all(same)
    _line(capsys, 7, ok, f"re-run reports byte-identical without wall-clock: lemma-suite "
          f"{same[0]}, walk-bound {same[1]}", secs)
    assert ok
