"""Finite-field X channel: signatures, stream matching, encode/decode."""

from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from xalign.errors import DegenerateSetError, InvalidOperandsError, PreconditionError
from xalign.ff_align import (
    FFComplementarySet,
    FFPrecoders,
    FFSlot,
    StreamMatcher,
    alignment_constants,
    expected_delay_scaling,
    ff_decode,
    ff_encode,
    ff_transmit_set,
    match_stream,
    random_precoders,
    random_slots,
    run_ff_demo,
    signature_samples,
    slot_signature,
    triple_match_probability,
)
from xalign.gf import GF, GFElement, inv_int

F5 = GF(5)


def pre5() -> FFPrecoders:
    return FFPrecoders(
        v11=F5.vector((1, 2, 4)),
        v12=F5.vector((3, 3, 1)),
        v21=F5.vector((1, 2, 3)),
        v22=F5.vector((2, 1, 4)),
    )


def slot(t, gains, q=5):
    return FFSlot(t, *(GFElement(g % q, q) for g in gains))


def slot_for(pre: FFPrecoders, c: tuple[int, int], l: int, t: int) -> FFSlot:
    """A slot whose signature at position ``l`` is ``c`` (h12 = h22 = 1)."""
    q = pre.q
    r1, r2 = pre.rho(l)
    return slot(t, (c[0] * inv_int(r1, q), 1, c[1] * inv_int(r2, q), 1), q)


def reference_match(slots, pre):
    """Linear-scan first-fit matcher: each slot joins the oldest open set
    whose label it reproduces at that set's next position."""
    open_sets: list[list] = []
    matched = []
    for s in slots:
        for entry in open_sets:
            label, members = entry
            if slot_signature(s, pre, len(members) + 1) == label:
                members.append(s.t)
                if len(members) == 3:
                    open_sets.remove(entry)
                    matched.append((label, tuple(members)))
                break
        else:
            open_sets.append([slot_signature(s, pre, 1), [s.t]])
    return matched, [(lab, tuple(m)) for lab, m in open_sets]


def test_signature_worked_example():
    c1, _ = slot_signature(slot(1, (2, 4, 1, 1)), pre5(), 1)
    assert c1 == F5(4)


def test_signature_equal_ratios_give_one():
    pre = FFPrecoders(
        v11=F5.vector((1, 2, 4)),
        v12=F5.vector((3, 3, 1)),
        v21=F5.vector((2, 2, 3)),
        v22=F5.vector((2, 1, 4)),
    )
    c1, _ = slot_signature(slot(1, (3, 3, 1, 2)), pre, 1)
    assert c1 == F5.one


def test_signature_swaps_with_receiver_roles():
    p = pre5()
    swapped = FFPrecoders(v11=p.v21, v12=p.v22, v21=p.v11, v22=p.v12)
    s = slot(1, (2, 4, 3, 1))
    s_sw = slot(1, (3, 1, 2, 4))
    for l in (1, 2, 3):
        c1, c2 = slot_signature(s, p, l)
        assert slot_signature(s_sw, swapped, l) == (c2, c1)


def test_zero_gain_slot_rejected_and_generator_discards():
    with pytest.raises(InvalidOperandsError):
        slot(1, (0, 1, 1, 1))
    slots = random_slots(3, np.random.default_rng(0), 50)
    assert len(slots) == 50
    assert all(all(g.value for g in s.gains) for s in slots)
    ts = [s.t for s in slots]
    assert ts == sorted(ts) and len(set(ts)) == 50
    assert ts[-1] > 50  # discarded draws still advance time


def test_precoder_invariants():
    with pytest.raises(InvalidOperandsError):
        FFPrecoders(F5.vector((1, 0, 1)), F5.vector((1, 2, 1)), F5.vector((1, 1, 2)), F5.vector((3, 1, 1)))
    with pytest.raises(InvalidOperandsError):  # v12 = 2 * v11
        FFPrecoders(F5.vector((1, 2, 3)), F5.vector((2, 4, 1)), F5.vector((1, 1, 2)), F5.vector((3, 1, 1)))


def test_single_slot_leaves_one_open_set():
    matched, open_sets = match_stream([slot(1, (1, 2, 3, 4))], pre5())
    assert matched == [] and len(open_sets) == 1
    assert open_sets[0].state == "open"


def test_constructed_triple_matches():
    p = pre5()
    c = (2, 3)
    slots = [slot_for(p, c, l, t) for l, t in zip((1, 2, 3), (4, 7, 9))]
    matched, open_sets = match_stream(slots, p)
    assert len(matched) == 1 and open_sets == []
    s = matched[0]
    assert s.members == [(4, 1), (7, 2), (9, 3)]
    assert (s.label[0].value, s.label[1].value) == c


@pytest.mark.parametrize("q,seed", [(3, 1), (5, 2), (7, 3)])
def test_matcher_agrees_with_linear_scan(q, seed):
    rng = np.random.default_rng(seed)
    pre = random_precoders(q, rng, decodable=False)
    slots = random_slots(q, rng, 3000)
    matched, open_sets = match_stream(slots, pre)
    ref_matched, ref_open = reference_match(slots, pre)
    assert [(s.label, tuple(t for t, _ in s.members)) for s in matched] == ref_matched
    assert [(s.label, tuple(t for t, _ in s.members)) for s in open_sets] == ref_open


@pytest.mark.parametrize("q", [5, 7, 11])
def test_matched_sets_satisfy_label_invariant(q):
    rng = np.random.default_rng(q)
    pre = random_precoders(q, rng)
    matched, _ = match_stream(random_slots(q, rng, 4000), pre)
    assert matched
    for s in matched:
        assert [l for _, l in s.members] == [1, 2, 3]
        for sl, (_, l) in zip(s.slots, s.members):
            assert slot_signature(sl, pre, l) == s.label
        assert alignment_constants(s, pre) == (s.label[0].value, s.label[1].value)


def test_open_sets_are_never_expired():
    # Sets sharing a label but waiting at different positions coexist, so the
    # open-set count is not limited by the number of labels.
    q = 3
    rng = np.random.default_rng(5)
    pre = random_precoders(q, rng, decodable=False)
    m = StreamMatcher(pre)
    for s in random_slots(q, rng, 20000):
        m.push(s)
    assert len(m.open_sets()) > (q - 1) ** 2
    labels = {s.label for s in m.open_sets()}
    assert len(labels) <= (q - 1) ** 2


def test_encode_examples():
    p = FFPrecoders(
        v11=F5.vector((1, 2, 4)),
        v12=F5.vector((3, 3, 1)),
        v21=F5.vector((2, 1, 3)),
        v22=F5.vector((4, 1, 3)),
    )
    zero, one = F5.zero, F5.one
    assert ff_encode((zero,) * 4, p, 1) == (zero, zero)
    assert ff_encode((one, zero, zero, zero), p, 2) == (p.v11[1], zero)
    assert ff_encode((one,) * 4, p, 1) == (F5(3), F5(2))


def test_encode_rejects_bad_position():
    with pytest.raises(InvalidOperandsError):
        ff_encode((F5.zero,) * 4, pre5(), 4)


def _matched_set(q, seed):
    rng = np.random.default_rng(seed)
    pre = random_precoders(q, rng)
    m = StreamMatcher(pre)
    while not m.matched:
        for s in random_slots(q, rng, 256):
            m.push(s)
    return pre, m.matched[0]


def test_decode_all_data_tuples_gf5():
    pre, s = _matched_set(5, 11)
    F = GF(5)
    for d in itertools.product(range(5), repeat=4):
        tx = tuple(F(v) for v in d)
        assert ff_decode(s, ff_transmit_set(s, pre, tx), pre) == tx


def test_transmit_matches_per_slot_encoding():
    pre, s = _matched_set(7, 4)
    F = GF(7)
    tx = (F(1), F(5), F(2), F(6))
    y1, y2 = ff_transmit_set(s, pre, tx)
    for k, (sl, (_, l)) in enumerate(zip(s.slots, s.members)):
        x1, x2 = ff_encode(tx, pre, l)
        assert y1[k] == sl.h11 * x1 + sl.h12 * x2
        assert y2[k] == sl.h21 * x1 + sl.h22 * x2


def test_decode_requires_matched_set():
    p = pre5()
    s = FFComplementarySet(slot_signature(slot(1, (1, 1, 1, 1)), p, 1))
    s.add(slot(1, (1, 1, 1, 1)))
    with pytest.raises(PreconditionError):
        ff_decode(s, (F5.vector((0, 0, 0)), F5.vector((0, 0, 0))), p)


def test_gf3_has_no_decodable_precoders():
    with pytest.raises(DegenerateSetError):
        random_precoders(3, np.random.default_rng(0))


def test_degenerate_precoders_raise_on_decode():
    q = 5
    rng = np.random.default_rng(0)
    while True:
        pre = random_precoders(q, rng, decodable=False)
        if not pre.decodable():
            break
    m = StreamMatcher(pre)
    while not m.matched:
        for s in random_slots(q, rng, 256):
            m.push(s)
    s = m.matched[0]
    with pytest.raises(DegenerateSetError):
        ff_decode(s, ff_transmit_set(s, pre, (GF(q).one,) * 4), pre)


@pytest.mark.parametrize("q", [5, 7, 11])
def test_demo_decodes_without_error(q):
    res = run_ff_demo(q, 2000, np.random.default_rng(q))
    assert res.sets == 2000 and res.errors == 0 and res.degenerate == 0
    assert res.decoded == 2000


@pytest.mark.parametrize("l", [1, 2, 3])
def test_signature_uniformity_chi2(l):
    q = 7
    rng = np.random.default_rng(20 + l)
    pre = random_precoders(q, rng)
    c1, c2 = signature_samples(q, pre, rng, 10**5, l)
    for c in (c1, c2):
        counts = np.bincount(c, minlength=q)
        assert counts[0] == 0
        assert sps.chisquare(counts[1:]).pvalue > 0.001


def test_triple_match_probability_gf5():
    rng = np.random.default_rng(8)
    est = triple_match_probability(5, 10**5, rng)
    assert abs(est.mean - 1 / 256) <= 3 * est.stderr


def test_delay_scaling_examples():
    assert expected_delay_scaling(5, 1.0) == 13
    assert expected_delay_scaling(5, 1e-9) == 3
    ratio = expected_delay_scaling(11, 1.0) / expected_delay_scaling(5, 1.0)
    target = (10 / 4) ** (4 / 3)
    assert abs(ratio / target - 1) <= 0.25
    with pytest.raises(InvalidOperandsError):
        expected_delay_scaling(2, 1.0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), q=st.sampled_from([3, 5, 7]))
def test_matcher_property_agrees_with_reference(seed, q):
    rng = np.random.default_rng(seed)
    pre = random_precoders(q, rng, decodable=False)
    slots = random_slots(q, rng, 300)
    matched, _ = match_stream(slots, pre)
    ref, _ = reference_match(slots, pre)
    assert [(s.label, tuple(t for t, _ in s.members)) for s in matched] == ref
