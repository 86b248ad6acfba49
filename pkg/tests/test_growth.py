import pytest
from hypothesis import given, strategies as st

from bushydnc.growth import (GrowthFamily, cantor, first_allowed_stage, growth_family,
                             log2_ceil, requirement_threshold, triple)
from bushydnc.harness import reference_g


def test_exact_table_m3():
    fam = GrowthFamily(3, "exact", 2)
    assert [fam.g(0, i) for i in range(3)] == [8, 16, 32]
    assert [fam.g(1, i) for i in range(3)] == [1, 65536, 262144]
    assert fam.g(2, 2) == 2 ** 65559
    assert [fam.h(k) for k in range(2)] == [8, 65536]
    assert fam.h_log2(2) == 65559


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_exact_matches_reference_recurrence(m):
    fam = GrowthFamily(m, "exact", 2)
    for k in range(3):
        for i in range(3):
            assert fam.g(k, i) == reference_g(m, k, i)
        assert fam.h(k) == reference_g(m, k, k)
    assert fam.audit(2) == []


def test_h0_enters_the_exponent():
    # g_1(1) = g_0(1) * 2^(h0(g_0(0)) + 1 + m) with h0 = square, m = 3
    fam = GrowthFamily(3, "exact", 2, h0="square")
    assert fam.g(1, 1) == 16 * 2 ** (64 + 4)
    assert fam.h0_name == "square"
    with pytest.raises(ValueError):
        GrowthFamily(3, "exact", 2, h0="cube")


def test_thresholds_frozen():
    fam = GrowthFamily(3, "exact", 2)
    # 2 * sum_{i<k} log h(i) + K(Gamma) - h(k-1) + c''
    assert requirement_threshold(1, fam, 40, 17) == 2 * 3 + 40 - 8 + 17
    assert requirement_threshold(2, fam, 40, 17) == 2 * (3 + 16) + 40 - 65536 + 17
    assert first_allowed_stage(fam, 40, 17, 0, 2) == 2
    with pytest.raises(ValueError):
        requirement_threshold(0, fam, 0, 0)


def test_scaled_family_keeps_both_inequalities():
    fam = GrowthFamily(3, "scaled", 40)
    assert fam.audit() == []
    assert [fam.h_log2(k) for k in range(6)] == [6, 13, 23, 36, 52, 71]
    assert fam.target_len(5) == 5


def test_exact_mode_draw_safety_fails_on_the_diagonal():
    # h(i) = g_i(i) leaves no room for the 2^(i+m) factor at k = i; the audit skips it
    fam = GrowthFamily(3, "exact", 2)
    assert fam.h_log2(1) < 1 + 3 + fam.g_log2(1, 1)


def test_bad_parameters():
    with pytest.raises(ValueError):
        GrowthFamily(3, "weird")
    with pytest.raises(ValueError):
        GrowthFamily(-1)
    with pytest.raises(ValueError):
        GrowthFamily(3, "scaled", 10, restriction_slack=-20)


def test_restriction_fn_divides_out_target():
    fam = GrowthFamily(3, "scaled", 10)
    r = fam.restriction_fn(2)
    assert r(4) == 2 ** (fam.g_log2(2, 4) - 2)
    assert r(0) == 1


def test_description_round_trip():
    fam = growth_family(2, "scaled", 12, h0="double")
    again = GrowthFamily.from_description(fam.describe())
    assert again.describe() == fam.describe()
    assert [again.h_log2(k) for k in range(12)] == [fam.h_log2(k) for k in range(12)]


def test_table_rows():
    rows = GrowthFamily(1, "exact", 1).table(1)
    assert rows == [{"k": 0, "g": [2, 4], "h": 2}, {"k": 1, "g": [1, 4 * 2 ** 4], "h": 64}]


def test_pairing_frozen():
    assert [cantor(0, 0), cantor(1, 0), cantor(0, 1), cantor(2, 3)] == [0, 1, 2, 18]
    assert [triple(0, 1, 0), triple(0, 2, 0), triple(0, 2, 1), triple(1, 1, 0)] == [3, 15, 22, 10]


@given(st.integers(0, 60), st.integers(0, 60), st.integers(0, 60), st.integers(0, 60))
def test_cantor_is_injective(a, b, c, d):
    assert (cantor(a, b) == cantor(c, d)) == ((a, b) == (c, d))


def test_cantor_is_onto_an_initial_segment():
    values = {cantor(a, b) for a in range(30) for b in range(30) if a + b < 30}
    assert values == set(range(30 * 31 // 2))


def test_triples_are_distinct():
    seen = {triple(i, a, b) for i in range(8) for a in (1, 2) for b in range(8)}
    assert len(seen) == 8 * 2 * 8


@given(st.integers(0, 10**6))
def test_log2_ceil(v):
    c = log2_ceil(v)
    assert (1 << c) >= v and (c == 0 or (1 << (c - 1)) < v)
