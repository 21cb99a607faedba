import numpy as np
import pytest

import proxilab as px
from proxilab.audit import (
    PairSample,
    audit_cyclic_floor,
    audit_gain,
    audit_inner_contraction,
    audit_strict,
    estimate_eps0,
    estimate_khat,
    probe_orbits_for,
    run_audit,
    sample_adjacent_pairs,
)

import oracles
from conftest import make_e1_mapping, make_intersecting_mapping


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def test_samples_member_and_counted(e1):
    samples = sample_adjacent_pairs(e1.partition, 3, seed=7)
    assert len(samples) == 6  # 3 per adjacency, both adjacencies of p = 2
    for s in samples:
        assert px.contains(e1.partition.regions[s.i - 1], s.x, 1e-9)
        j = px.cyclic_successor(s.i, 2)
        assert px.contains(e1.partition.regions[j - 1], s.y, 1e-9)
        assert s.d_xy == e1.partition.norm.distance(s.x, s.y)


def test_sampling_deterministic(e1):
    a = sample_adjacent_pairs(e1.partition, 10, seed=5)
    b = sample_adjacent_pairs(e1.partition, 10, seed=5)
    for s, t in zip(a, b):
        assert np.array_equal(s.x, t.x) and np.array_equal(s.y, t.y)


def test_sampling_covers_wraparound_adjacency():
    part = px.build_partition(
        [px.Box([-1.0, -1.0], [1.0, 1.0]), px.Box([-1.5, -0.8], [1.5, 0.8]), px.Box([-0.9, -1.2], [0.9, 1.2])]
    )
    samples = sample_adjacent_pairs(part, 2, seed=1)
    assert sorted({s.i for s in samples}) == [1, 2, 3]


# ---------------------------------------------------------------------------
# inner contraction
# ---------------------------------------------------------------------------


def test_inner_contraction_equality_case(e1):
    samples = sample_adjacent_pairs(e1.partition, 200, seed=2)
    v = audit_inner_contraction(e1, samples)
    assert v.holds
    assert abs(v.worst_slack) <= 1e-12  # 1-D equality case


def test_inner_contraction_fails_for_understated_K(e1):
    samples = sample_adjacent_pairs(e1.partition, 200, seed=2)
    v = audit_inner_contraction(e1, samples, K=0.4)
    assert not v.holds
    assert v.worst_slack > 0
    w = v.witness
    # slack for the witness pair is 0.1 * (d(x,y) - D) by the scalar algebra
    assert v.worst_slack == pytest.approx(0.1 * (w["d_xy"] - 2.0), abs=1e-12)


def test_inner_contraction_reduces_to_plain_when_gap_zero(intersecting):
    samples = sample_adjacent_pairs(intersecting.partition, 200, seed=3)
    v = audit_inner_contraction(intersecting, samples)
    assert v.holds


def test_inner_contraction_per_set_mode(e1):
    samples = sample_adjacent_pairs(e1.partition, 100, seed=4)
    v = audit_inner_contraction(e1, samples, mode="per_set_K")
    assert v.name == "inner_contraction_per_set"
    assert v.holds


# ---------------------------------------------------------------------------
# gains
# ---------------------------------------------------------------------------


def test_gain_identity_impulse_is_one(e1):
    samples = sample_adjacent_pairs(e1.partition, 100, seed=5)
    le_one, floor = audit_gain(e1, samples)
    assert le_one.holds and abs(le_one.worst_slack) <= 1e-12
    assert floor.holds


def test_gain_closed_form_and_floor_values(e1_damped):
    # widest pair: pre-impulse distance 3, gain (0.8*3 + 0.2*2)/3
    part = e1_damped.partition
    s = PairSample(x=np.array([2.0]), y=np.array([-2.0]), i=1, d_xy=4.0)
    le_one, floor = audit_gain(e1_damped, [s])
    m_hat = 1.0 + le_one.worst_slack
    assert m_hat == pytest.approx((0.8 * 3.0 + 0.2 * 2.0) / 3.0, abs=1e-12)
    # the published floor example: D / (D + K (d - D)) at d = 3 is 0.8
    assert 2.0 / (2.0 + 0.5 * (3.0 - 2.0)) == pytest.approx(0.8, abs=0)
    assert floor.holds


def test_gain_equals_one_at_best_proximity_pair(e1_damped):
    s = PairSample(x=np.array([1.0]), y=np.array([-1.0]), i=1, d_xy=2.0)
    le_one, _ = audit_gain(e1_damped, [s])
    assert le_one.worst_slack == pytest.approx(0.0, abs=1e-12)  # gain exactly 1


def test_gain_floor_holds_on_damped_scenario(e1_damped):
    samples = sample_adjacent_pairs(e1_damped.partition, 500, seed=6)
    le_one, floor = audit_gain(e1_damped, samples)
    assert le_one.holds and floor.holds


# ---------------------------------------------------------------------------
# strict bound
# ---------------------------------------------------------------------------


def test_strict_equality_for_identity_impulse(e1):
    samples = sample_adjacent_pairs(e1.partition, 200, seed=7)
    comp, seg = audit_strict(e1, samples)
    assert comp.holds and abs(comp.worst_slack) <= 1e-12
    assert seg.holds


def test_strict_violated_by_expansive_impulse():
    m = make_e1_mapping(pattern=(1.5,))
    samples = sample_adjacent_pairs(m.partition, 200, seed=8)
    comp, _ = audit_strict(m, samples)
    assert not comp.holds
    assert comp.worst_slack > 0
    assert comp.witness["d_xy"] > 2.0  # violation needs d(x,y) > D


def test_strict_follows_from_gain_when_gap_zero(intersecting):
    samples = sample_adjacent_pairs(intersecting.partition, 200, seed=9)
    le_one, _ = audit_gain(intersecting, samples)
    comp, _ = audit_strict(intersecting, samples)
    assert le_one.holds
    assert comp.holds


# ---------------------------------------------------------------------------
# cyclic floor
# ---------------------------------------------------------------------------


def test_cyclic_floor_holds_e1(e1):
    samples = sample_adjacent_pairs(e1.partition, 200, seed=10)
    assert audit_cyclic_floor(e1, samples).holds


def test_cyclic_floor_vacuous_when_intersecting(intersecting):
    samples = sample_adjacent_pairs(intersecting.partition, 200, seed=11)
    assert audit_cyclic_floor(intersecting, samples).holds


def test_cyclic_floor_fails_on_unequal_gaps():
    part = px.build_partition(
        [px.Box([0.0, 0.0], [1.0, 1.0]), px.Box([2.0, 0.0], [3.0, 1.0]), px.Box([5.0, 0.0], [6.0, 1.0])]
    )
    inner = px.build_projection_inner(part, 0.5)
    m = px.SemiCyclicMapping(part, inner, px.identity_impulse())
    samples = sample_adjacent_pairs(part, 100, seed=12)
    v = audit_cyclic_floor(m, samples)
    assert not v.holds
    assert v.witness["i"] == 3  # the wide wrap adjacency provides the witness


# ---------------------------------------------------------------------------
# contraction aggregates
# ---------------------------------------------------------------------------


def test_khat_identity_impulse_collapses_to_kbar(e1):
    probes = probe_orbits_for(e1, 4, seed=2)
    prof = estimate_khat(e1, probes)
    assert prof.K_bar == 0.5
    assert prof.K_hat == 0.5
    assert prof.K_hat_lt_1


def test_khat_transient_pattern_below_one(e1_transient):
    probes = probe_orbits_for(e1_transient, 8, seed=3)
    prof = estimate_khat(e1_transient, probes)
    assert prof.K_hat < 1.0
    # the excess itself contracts by 0.5*1.5*0.5*0.4 = 0.15 per period
    es = oracles.excess_recursion(1.0, 0.5, (1.5, 0.4), 10)
    assert es[2] / es[0] == pytest.approx(0.15, abs=1e-15)


def test_khat_zero_schedule_annihilates():
    m = make_intersecting_mapping(pattern=(0.0,))
    probes = probe_orbits_for(m, 4, seed=4)
    prof = estimate_khat(m, probes)
    assert prof.K_hat == 0.0


def test_khat_rejects_short_orbits(e1):
    short = px.iterate(e1, [2.0], 1, 3)
    with pytest.raises(px.InvalidSpecError):
        estimate_khat(e1, [short])


def test_khat_seq_telescopes(e1_transient):
    probes = probe_orbits_for(e1_transient, 2, seed=5)
    prof = estimate_khat(e1_transient, probes)
    for orb, seq in zip(probes, prof.K_hat_seq):
        # independent direct product of the per-period blocks
        p, Ks = 2, e1_transient.inner.K_per_set
        direct = []
        acc = 1.0
        for j in range(len(seq)):
            block = 1.0
            for i in range(1, p):
                t = i + j * p
                block *= orb.gains[t] * Ks[orb.set_indices[t - 1] - 1]
            acc *= block
            direct.append(acc)
        assert np.allclose(seq, direct, atol=1e-9)


def test_eps0_identity_impulse_zero(e1):
    probes = probe_orbits_for(e1, 4, seed=6)
    eps0, tends = estimate_eps0(e1, probes)
    assert eps0 == 0.0
    assert tends


def test_eps0_damped_nonpositive_and_convergent(e1_damped):
    orb = px.iterate(e1_damped, [2.0], 1, 200)
    eps0, tends = estimate_eps0(e1_damped, [orb])
    assert eps0 <= 0.0
    assert tends
    # scalar oracle: rebuild the weighted sums from the measured gains
    sums = oracles.weighted_gain_sums(orb.gains, 0.5, 199)
    assert max(sums[-50:]) <= 1e-9
    assert eps0 == pytest.approx(max(sums[len(sums) // 2 :]), abs=1e-9)


def test_eps0_transient_finite(e1_transient):
    orb = px.iterate(e1_transient, [2.0], 1, 200)
    eps0, _ = estimate_eps0(e1_transient, [orb])
    assert np.isfinite(eps0)


def test_limsup_ceiling_bounds_the_tail(e1_transient):
    probes = probe_orbits_for(e1_transient, 8, seed=7)
    prof = estimate_khat(e1_transient, probes)
    assert prof.sup_gain >= 1.0  # the expansive phase is visible
    orb = px.iterate(e1_transient, [2.0], 1, 200)
    tr = px.distance_trace(orb, e1_transient.partition.norm)
    assert px.tail_limsup(tr, 10) <= prof.limsup_ceiling(2.0) + 1e-6


# ---------------------------------------------------------------------------
# the assembled report
# ---------------------------------------------------------------------------


def test_report_deterministic(e1_damped):
    a = run_audit(e1_damped, count=60, seed=17, probe_orbit_count=6)
    b = run_audit(e1_damped, count=60, seed=17, probe_orbit_count=6)
    assert a.to_dict() == b.to_dict()


def test_chained_consistency(e1_damped):
    # gain <= 1 plus the inner contraction chain to the composite bound
    part = e1_damped.partition
    samples = sample_adjacent_pairs(part, 300, seed=18)
    le_one, _ = audit_gain(e1_damped, samples)
    inner_v = audit_inner_contraction(e1_damped, samples)
    assert le_one.holds and inner_v.holds
    K, D = 0.5, 2.0
    from proxilab.audit import _images

    for s in samples:
        _, _, Tx, Ty = _images(e1_damped, s, 0)
        assert part.norm.distance(Tx, Ty) <= K * s.d_xy + (1 - K) * D + 1e-9


def test_prop_210_meta_on_gap_zero_and_bounded_gain(intersecting, e1, e1_damped):
    for m in (intersecting, e1, e1_damped):
        report = run_audit(m, count=120, seed=19, probe_orbit_count=4)
        klass = px.classify(m, report)
        assert klass.prop_210_hypotheses_hold(m.partition, report)
        assert klass.strict_matches_plain()


def test_report_survives_all_probe_escapes():
    # every probe orbit of this spec escapes; the report must still assemble
    from proxilab.impulsive import ImpulsiveSystemSpec, build_impulsive_system

    m = build_impulsive_system(ImpulsiveSystemSpec(0.9, (1.5, 1.5), halfwidth=0.5))
    report = run_audit(m, count=30, seed=20, probe_orbit_count=6)
    assert report.profile is None
    assert report.probe_escapes == 6
    assert not report.verdicts["composite_membership"].holds  # images overflow the thin regions
