import json
import random
from collections import Counter
from fractions import Fraction

import pytest
from scipy.stats import chisquare

from bushydnc import fireworks as fw
from bushydnc.bushy import EnumerableSet


def test_stuck_bound_partial_sum():
    # sum_{i<20} 2^-(i+3) = (1/4)(1 - 2^-20)
    bound = fw.stuck_bound(fw.trap_N(3), 20)
    assert bound == Fraction(1, 4) * (1 - Fraction(1, 2 ** 20))
    assert bound == Fraction(1048575, 4194304)


def test_draw_plan_is_uniform():
    rng = random.Random(11)
    counts = Counter(fw.draw_plan(lambda i: 8, 1, rng).caps[0] for _ in range(8000))
    assert sorted(counts) == list(range(1, 9))
    assert chisquare([counts[v] for v in range(1, 9)]).pvalue > 1e-3


def test_plan_validation():
    with pytest.raises(ValueError):
        fw.FireworksPlan([0], [4])
    with pytest.raises(ValueError):
        fw.draw_plan(lambda i: 0, 1, 0)
    plan = fw.FireworksPlan([2, 3], [4, 8])
    assert plan.with_cap(1, 8).caps == [2, 8]


def test_string_poset_search_order():
    poset = fw.StringPoset(search_depth=2)
    W = EnumerableSet.static([(0, 1, 1), (0, 1, 0), (0, 0, 0, 0)])
    assert poset.search((0,), W, 0) == (0, 1, 0)
    assert poset.search((1,), W, 0) is None
    assert poset.leq((0, 1), (0,)) and not poset.leq((0,), (0, 1))


def test_round_robin_respects_delays():
    rr = fw.RoundRobin(3, delays=[0, 2, 0])
    picks = [rr.pick(s, lambda i: True) for s in range(5)]
    assert picks == [0, 2, 0, 1, 2]
    assert fw.RoundRobin(2).pick(0, lambda i: False) is None


def test_empty_family_is_passively_satisfied():
    out = fw.run(fw.StringPoset(1), [EnumerableSet.empty()], fw.FireworksPlan([1], [1]),
                 global_budget=20, rng=3)
    assert out.status == [fw.PASSIVE] and not out.is_stuck
    assert len(out.chain) == 20  # one guess, then a random step every iteration


def test_dense_set_is_satisfied_actively_after_cap_refutations():
    W = EnumerableSet(lambda s: fw.PredicateSet(lambda q: True))
    out = fw.run(fw.StringPoset(1), [W], fw.FireworksPlan([3], [8]), global_budget=50, rng=0)
    assert out.status == [fw.ACTIVE]
    assert out.counters == [3]
    kinds = [ev["event"] for ev in out.log]
    assert kinds[:7] == ["guess", "refutation", "guess", "refutation", "guess", "refutation",
                         "switch"]
    assert kinds[7] == "extension"


def test_trap_outcome_and_log_are_json():
    out = fw.trap_trial(5)
    lines = out.to_jsonl().splitlines()
    assert all(json.loads(line)["event"] for line in lines)
    summary = out.summary()
    assert summary["chain_length"] == len(out.chain)
    assert set(out.status) <= {fw.PASSIVE, fw.ACTIVE, fw.PENDING}


def test_trap_is_deterministic():
    a, b = fw.trap_trial(123), fw.trap_trial(123)
    assert a.log == b.log and a.chain == b.chain


def test_one_bad_cap_replay():
    """With every other choice fixed, only one value of n_i gets stuck on requirement i."""
    stuck_runs = 0
    for seed in range(60):
        out = fw.trap_trial(seed)
        if not out.is_stuck:
            continue
        stuck_runs += 1
        i = out.stuck[0]
        n = out.caps[i]
        for v in range(max(1, n - 6), min(fw.trap_N(3)(i), n + 6) + 1):
            if v == n:
                continue
            alt = fw.trap_trial(seed, cap_override={i: v})
            assert alt.stuck is None or alt.stuck[0] != i
            if not alt.is_stuck:
                assert alt.status[i] == (fw.ACTIVE if v < n else fw.PASSIVE)
    assert stuck_runs >= 5


def test_trap_stuck_rate_near_bound():
    # a small sample only; the full 10^4-trial check lives in the acceptance suite
    stuck = sum(fw.trap_trial(s).is_stuck for s in range(400))
    assert stuck / 400 < 0.25 + 3 * (0.25 * 0.75 / 400) ** 0.5
    assert stuck > 0
