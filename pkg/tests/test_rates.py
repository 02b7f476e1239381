"""Two-stage projection receiver, powers, rates and DoF estimation."""

from __future__ import annotations

import math

import numpy as np
import pytest

from xalign.cgeom import complex_normal, inner, norm2, normalize, sample_isotropic
from xalign.errors import DegenerateGeometryError, DomainError, InvalidOperandsError, PreconditionError
from xalign.rates import (
    batch_geometry,
    bits_for_power,
    db_to_linear,
    dof_estimate,
    dof_report,
    dof_sweep,
    gap_bound,
    geometry_from_vectors,
    interference_power,
    normalized_total,
    power_samples,
    project_two_stage,
    rate_gap,
    rate_hat,
    rate_ideal,
    rate_report,
    receiver_geometry,
    second_stage_direction,
    signal_power,
    vanishing_gap_bits,
)
from xalign.rng import substream
from xalign.rvq import generate_codebook, lemma1_bound
from xalign.stats import Estimate, mean_se
from xalign.xsim import XRealization, draw_precoders, is_matched, sample_matched_ensemble, sample_matched_rejection

E = np.eye(3, dtype=complex)


def pre3(seed=0):
    return draw_precoders(substream(seed, "precoders", 3), 3)


def test_geometry_synthetic_errors():
    g = geometry_from_vectors(E[2], E[1], 2 * E[0], E[1], E[0])
    assert g.a1 == pytest.approx(0.0) and g.a2 == pytest.approx(1.0)
    assert abs(inner(g.q_hat, g.q22_perp)) < 1e-12


def test_geometry_orthogonality_on_samples():
    p = pre3(1)
    b = sample_matched_ensemble(np.random.default_rng(1), p, 8, 5000)
    g = batch_geometry(b, p)
    for perp, a in ((g.q21_perp, g.a1), (g.q22_perp, g.a2)):
        assert np.max(np.abs(inner(g.q_hat, perp))) < 1e-12
        assert np.allclose(norm2(perp)[a > 0], 1.0)


def test_receiver_geometry_requires_match():
    p = pre3(2)
    cb = generate_codebook(2, 3, 6)
    rng = np.random.default_rng(2)
    while True:
        x = XRealization.from_gains(complex_normal(rng, (4, 3)))
        from xalign.xsim import interference_directions
        from xalign.rvq import quantize

        q21, q22, _, _ = interference_directions(x, p)
        if quantize(cb, q21) != quantize(cb, q22):
            break
    with pytest.raises(PreconditionError):
        receiver_geometry(x, p, cb)
    b = sample_matched_rejection(rng, p, cb, 1)
    g = receiver_geometry(b.realization(0), p, cb)
    assert np.array_equal(g.q_hat, cb.vectors[b.idx1[0]])


def test_project_two_stage_examples():
    rng = np.random.default_rng(3)
    q11, q12, q21, q22 = complex_normal(rng, (4, 3))
    w = normalize(complex_normal(rng, 3))
    g = geometry_from_vectors(q11, q12, q21, q22, w)
    assert np.sqrt(norm2(project_two_stage(g, 3j * w))) < 1e-12
    assert np.sqrt(norm2(project_two_stage(g, q12))) <= 1e-12 * np.sqrt(norm2(q12))
    y = complex_normal(rng, 3)
    out = project_two_stage(g, y)
    u, _ = second_stage_direction(g)
    assert abs(inner(w, out)) <= 1e-12 * np.sqrt(norm2(y))
    assert abs(inner(u, out)) <= 1e-12 * np.sqrt(norm2(y))


def test_project_two_stage_degenerate():
    g = geometry_from_vectors(E[2], E[0], E[1], E[1], E[0])
    with pytest.raises(DegenerateGeometryError):
        project_two_stage(g, E[2])
    S, I, deg = power_samples(g, 10.0, 3)
    assert deg == 1 and S.size == 0


def test_perfect_alignment_kills_interference():
    rng = np.random.default_rng(4)
    w = normalize(complex_normal(rng, 3))
    q11, q12 = complex_normal(rng, (2, 3))
    g = geometry_from_vectors(q11, q12, 2.0 * w, -1j * w, w)
    assert interference_power(g, 100.0, 3) == 0.0
    out = project_two_stage(g, 2.0 * w - 1j * w)
    assert np.all(out == 0) or np.sqrt(norm2(out)) < 1e-15


def test_signal_power_examples():
    g = geometry_from_vectors(E[2], E[1], E[0], E[0], E[0])
    assert signal_power(g, 4.0, 3) == pytest.approx(3.0)
    g = geometry_from_vectors(2 * E[2], E[1], E[0], E[0], E[0])
    assert signal_power(g, 4.0, 3) == pytest.approx(12.0)
    g = geometry_from_vectors(E[0], E[1], E[0], E[0], E[0])
    assert signal_power(g, 4.0, 3) == 0.0


def test_powers_agree_with_direct_projection():
    # S and I from the decomposition formula against the projector applied
    # to the actual effective vectors.
    p = pre3(5)
    b = sample_matched_ensemble(np.random.default_rng(5), p, 6, 3000)
    g = batch_geometry(b, p)
    P, M = 50.0, 3
    S, I, deg = power_samples(g, P, M)
    assert deg == 0
    scale = M * P / 4
    S_direct = scale * norm2(project_two_stage(g, g.q11))
    I_direct = scale * (norm2(project_two_stage(g, g.q21)) + norm2(project_two_stage(g, g.q22)))
    assert np.allclose(S, S_direct, rtol=1e-10, atol=1e-12)
    assert np.allclose(I, I_direct, rtol=1e-9, atol=1e-12)


def test_interference_linear_in_power():
    p = pre3(6)
    g = batch_geometry(sample_matched_ensemble(np.random.default_rng(6), p, 4, 100), p)
    assert np.allclose(interference_power(g, 30.0, 3), 3 * interference_power(g, 10.0, 3))


def test_single_codeword_mean_interference():
    # With independent isotropic effective vectors of unit mean power, and
    # B = 0: E[I] = 2 (Mp/4) E|Phi12 q_perp|^2 E[a] = (Mp/4)(M-2)/(M-1) 2 (M-1)/M.
    rng = np.random.default_rng(7)
    M, P, n = 3, 10.0, 200000
    q = complex_normal(rng, (4, n, M)) / math.sqrt(M)
    w = np.broadcast_to(sample_isotropic(rng, M), (n, M))
    _, I, _ = power_samples(geometry_from_vectors(*q, w), P, M)
    expected = (M * P / 2) * (M - 2) / (M - 1) * (M - 1) / M
    assert mean_se(I).within(expected)


def test_rate_examples():
    assert rate_hat([0.0, 0.0], [1.0, 5.0], 3).mean == 0.0
    assert rate_hat([7.0], [0.0], 3).mean == pytest.approx(1.0)
    assert rate_ideal([7.0], 3).mean == pytest.approx(1.0)
    with pytest.raises(InvalidOperandsError):
        rate_hat([], [], 3)
    rng = np.random.default_rng(8)
    S, I = rng.exponential(5.0, 1000), rng.exponential(1.0, 1000)
    assert rate_hat(S, I, 3).mean <= rate_ideal(S, 3).mean
    assert rate_gap(S, I, 3).mean == pytest.approx(rate_ideal(S, 3).mean - rate_hat(S, I, 3).mean)


def test_rate_increases_with_power():
    p = pre3(9)
    g = batch_geometry(sample_matched_ensemble(np.random.default_rng(9), p, 6, 2000), p)
    vals = [rate_hat(*power_samples(g, db_to_linear(d), 3)[:2], 3).mean for d in (0, 10, 20, 30)]
    assert vals == sorted(vals)


def test_gap_bound_examples():
    assert gap_bound(100, 10, 3) == pytest.approx(math.log2(3.34375) / 3, rel=1e-12)
    assert gap_bound(100, 10, 3) == pytest.approx(0.5805, abs=1e-4)
    for p in (10.0, 1e3, 1e5):
        assert gap_bound(p, 2 * math.log2(p), 3) == pytest.approx(math.log2(1.75) / 3, rel=1e-12)
    assert gap_bound(100, 200, 3) < 1e-25
    with pytest.raises(DomainError):
        gap_bound(100, 4, 2)


def test_rate_report_gap_within_bound():
    p = pre3(10)
    g = batch_geometry(sample_matched_ensemble(np.random.default_rng(10), p, 10, 5000), p)
    rep = rate_report(g, 100.0, 10, 3)
    assert rep.trials == 5000 and rep.gap_ok
    assert rep.gap.mean >= 0 and rep.S.mean > 0


def test_bits_schedules():
    assert bits_for_power(1.0, 100.0) == 7
    assert bits_for_power(2.0, 1000.0) == 20
    assert vanishing_gap_bits(100.0) == round(2 * math.log2(100) + 4 * math.log2(math.log2(100)))
    assert vanishing_gap_bits(1e4) == 42


def test_dof_estimate_oracles():
    ps = [10.0**k for k in range(1, 7)]
    assert dof_estimate([(p, math.log2(p)) for p in ps]) == pytest.approx(1.0)
    assert dof_estimate([(p, 2.5) for p in ps]) == pytest.approx(0.0, abs=1e-12)
    rng = np.random.default_rng(11)
    pts = [(p, math.log2(p) / 3 + rng.normal(0, 0.01)) for p in np.logspace(1, 8, 30)]
    assert abs(dof_estimate(pts) - 1 / 3) <= 0.02
    with pytest.raises(InvalidOperandsError):
        dof_estimate([(10.0, 1.0)])
    with pytest.raises(InvalidOperandsError):
        dof_estimate([(10.0, 1.0), (10.0, 2.0)])


def test_dof_estimate_uses_top_half():
    # Bend below the midpoint must not affect the slope.
    pts = [(2.0**k, (k if k >= 5 else 0.0)) for k in range(0, 11)]
    assert dof_estimate(pts) == pytest.approx(1.0)


def test_dof_report_normalizations():
    est = [Estimate(v, 0.0, 1) for v in (1.0, 2.0, 3.0)]
    rep = dof_report(1.0, 3, [0.0, 10 * math.log10(2), 10 * math.log10(4)], [0, 1, 2], est)
    assert rep.slope == pytest.approx(1.0)
    assert rep.per_slot == pytest.approx(1 / 3)
    assert rep.total == pytest.approx(4 / 3)
    assert rep.total_per_slot == pytest.approx(4 / 3)
    half = dof_report(1.0, 3, rep.p_db, rep.B, [Estimate(v / 2, 0.0, 1) for v in (1.0, 2.0, 3.0)])
    assert normalized_total(half, rep) == pytest.approx(2 / 3)


def test_dof_sweep_alpha_range():
    with pytest.raises(DomainError):
        dof_sweep(0.0, 3, [20, 30], 10, 1)
    with pytest.raises(DomainError):
        dof_sweep(2.5, 3, [20, 30], 10, 1)


def test_dof_sweep_full_feedback_slope():
    rep = dof_sweep(2.0, 3, [20.0, 30.0, 40.0], 3000, [1, 2, 3])
    assert rep.B == (13, 20, 27)
    assert rep.log_sinr[0].n == 9000
    assert abs(rep.slope - 1.0) <= 0.1


def test_dof_sweep_small_alpha_slope_near_zero():
    rep = dof_sweep(0.03, 3, [20.0, 30.0, 40.0], 3000, 4)
    assert rep.B == (0, 0, 0)
    assert abs(rep.slope) <= 0.1


def test_dof_sweep_seed_list_pools():
    one = dof_sweep(1.0, 3, [20.0, 30.0], 500, 7)
    listed = dof_sweep(1.0, 3, [20.0, 30.0], 500, [7])
    assert one == listed
    pooled = dof_sweep(1.0, 3, [20.0, 30.0], 500, [7, 8])
    assert pooled.log_sinr[0].n == 1000
