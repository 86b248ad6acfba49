import pytest
from hypothesis import given, settings, strategies as st

from bushydnc.computation import (DiagonalBadSet, Functional, ToyEnumeration, b_dnc_set,
                                  b_dnc_stage, constant_functional, copy_parity,
                                  default_enumeration, everywhere_partial, fixed_emitter,
                                  functional_library, gated_parity, is_dnc_prefix,
                                  make_functional, output_set, slow_emitter, small_trap,
                                  use_all_input)
from bushydnc.kolmogorov import (Description, PrefixFreeMachine, canonical_bytes,
                                 description_bound, is_h_complex_prefix, k_approx)
from bushydnc.vm import ToyProgram

bitstrings = st.lists(st.integers(0, 1), max_size=24).map(tuple)
omega = st.lists(st.integers(0, 6), max_size=6).map(tuple)
LIBRARY = list(functional_library().values()) + [slow_emitter(4, 3, 2), small_trap(1, 5),
                                                 gated_parity(2)]


# enumeration and B_DNC --------------------------------------------------------


def test_enumeration_is_monotone_in_steps():
    enum = default_enumeration()
    small, big = enum.diagonal(200), enum.diagonal(10_000)
    assert small.items() <= big.items()
    assert len(enum) == 64


def test_corpus_round_trip(tmp_path):
    enum = default_enumeration()
    path = tmp_path / "c.txt"
    enum.dump_corpus(path)
    again = ToyEnumeration.load(path)
    assert [p.code for p in again.programs] == [p.code for p in enum.programs]
    assert ToyEnumeration.from_manifest(enum.manifest()).diagonal(500) == enum.diagonal(500)


def test_oracle_programs():
    enum = ToyEnumeration([ToyProgram.parse("IN ORC HALT")], oracle=(0, 1, 1))
    assert enum.phi(0, 1, 10) == 1
    assert enum.phi(0, 0, 10, oracle=(1,)) == 1


def test_bad_set_membership():
    bad = DiagonalBadSet({0: 0, 2: 5}, length_cap=3)
    assert (0,) in bad and (1, 1, 5) in bad
    assert (1, 1, 4) not in bad
    assert (0, 0, 0, 0) not in bad  # beyond the cap
    assert bad.settled((1, 1, 4)) and not bad.settled((1,))


def test_b_dnc_enumeration_is_monotone():
    enum = default_enumeration()
    es = b_dnc_set(enum, 3)
    members = [b_dnc_stage(enum, s, 3).members(4) for s in (0, 5, 50)]
    assert members[0] <= members[1] <= members[2]
    assert es.contains((0,), 50)  # phi_0(0) = 0


@given(st.lists(st.integers(0, 200), max_size=40))
def test_dnc_prefix_matches_definition(sigma):
    enum = default_enumeration()
    table = enum.diagonal(10_000)
    expect = all(table.get(e) != v for e, v in enumerate(sigma) if e < len(enum))
    assert is_dnc_prefix(sigma, enum, 10_000) == expect


# functionals ------------------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(LIBRARY), omega, omega, st.integers(0, 300), st.integers(0, 300))
def test_functionals_are_monotone(gamma, sigma, ext, s, extra):
    tau = sigma + ext
    a = gamma.output(sigma, s)
    assert gamma.output(tau, s)[: len(a)] == a
    assert gamma.output(sigma, s + extra)[: len(a)] == a


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(LIBRARY), omega, st.integers(0, 400))
def test_cache_matches_fresh_functional(gamma, tau, s):
    fresh = Functional(gamma.program, gamma.name)
    for t in (tau[:1], tau[:3], tau):  # warm the shared cache with prefixes first
        gamma.output(t, s)
    assert gamma.probe(tau, s) == fresh.probe(tau, s)


def test_library_behaviour():
    assert everywhere_partial().output((1, 2, 3), 10_000) == ()
    assert copy_parity().output((3, 4, 5), 100) == (1, 0, 1)
    assert use_all_input().output((1, 1, 0, 1), 1000) == (1, 0, 0, 1)
    assert constant_functional((1, 0)).output((), 100) == ()
    assert constant_functional((1, 0)).output((7,), 100) == (1, 0)
    assert fixed_emitter((0, 1, 1)).output((), 100) == (0, 1, 1)
    assert small_trap(1, 5).output((3, 2, 0, 4), 1000) == (1,) * 5
    assert gated_parity(1).output((0,), 1000) == ()
    assert gated_parity(1).output((0, 3, 4), 1000) == (1, 0)


def test_slow_emitter_timing_frozen():
    # lead-in of 20 rounds, then one bit per 5-round loop, observed at 16 steps per stage
    f = slow_emitter(6, 5, 20)
    assert [f.output_len((), s * 16) for s in range(0, 30, 2)] == \
        [0, 0, 0, 0, 0, 1, 2, 3, 4, 5, 6, 6, 6, 6, 6]


def test_settled_and_wants_more():
    c = copy_parity()
    assert c.probe((3, 4, 5), 100) == ((1, 0, 1), True)
    assert c.settled((3, 4, 5), 5)  # has not asked for input beyond tau yet
    assert not c.settled((3, 4, 5), 100)
    assert fixed_emitter((1,)).settled((), 100)


def test_output_set_with_prefix():
    S = output_set(copy_parity(), 2, 100, rho=(1, 0))
    assert (1, 2) in S and (3, 0, 9) in S
    assert (2, 1) not in S and (1,) not in S


def test_make_functional():
    assert make_functional("slow-emitter", {"length": 3, "delay": 5, "lead": 20}).name == \
        "slow[3,5,20]"
    inline = make_functional("code:PUSH 0 READ EMIT PUSH 0 HALT")
    assert inline.output((5,), 100) == (1,)
    with pytest.raises(KeyError):
        make_functional("nope")


# complexity -------------------------------------------------------------------


M = PrefixFreeMachine()


def test_k_approx_frozen_values():
    assert k_approx((0,) * 40, M, 10**5) == 3 + 16  # repeat form
    assert k_approx((0, 1) * 20, M, 10**5) == 2 + 8 + 2 + 16  # period form
    assert k_approx((1, 0, 0, 1, 1), M, 10**5) == 1 + 16 + 5  # literal


@given(bitstrings)
def test_k_approx_bounded_by_literal(x):
    assert k_approx(x, M, 10**5) <= len(x) + 17


@given(bitstrings, st.integers(0, 200), st.integers(0, 5000))
def test_k_approx_non_increasing_in_time(x, t, extra):
    assert k_approx(x, M, t + extra) <= k_approx(x, M, t)


@given(bitstrings)
def test_descriptions_decode_and_run(x):
    for desc in [Description("literal", (x,))] + list(M.candidates(x)):
        bits = desc.bits()
        assert M.parse(bits) == desc or desc.kind != "literal"
        assert M.run(bits, 10**6) == x
        assert all(M.parse(bits[:j]) is None for j in range(len(bits)))
        assert M.parse(bits + (0,)) is None


@settings(max_examples=200)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=40))
def test_domain_is_prefix_free(bits):
    # no proper prefix of a valid description is itself valid
    if M.parse(bits) is not None:
        assert all(M.parse(bits[:j]) is None for j in range(len(bits)))


def test_h_complex_prefix():
    assert not is_h_complex_prefix((0,) * 64, lambda n: n, 0, M, 10**5)
    assert is_h_complex_prefix((1, 0, 1), lambda n: 2 ** n, 20, M, 10**5)


def test_description_bound_is_canonical():
    assert canonical_bytes({"b": 1, "a": [1, 2]}) == b'{"a":[1,2],"b":1}'
    assert description_bound({"a": 1}) == 8 * 7 + 17
