import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import proxilab as px
from proxilab.spaces import sample_region

import oracles

EUCLID = px.NormSpec()


# ---------------------------------------------------------------------------
# metric_distance
# ---------------------------------------------------------------------------


def test_metric_pythagorean():
    assert px.metric_distance(EUCLID, [0.0, 0.0], [3.0, 4.0]) == 5.0


def test_metric_identity_case():
    assert px.metric_distance(EUCLID, [1.7, -2.0], [1.7, -2.0]) == 0.0


def test_metric_lp_one_dimensional():
    assert px.metric_distance(px.NormSpec("lp", 3.0), [0.0], [2.0]) == pytest.approx(2.0, abs=1e-15)


def test_metric_dimension_mismatch():
    with pytest.raises(px.DimensionMismatchError):
        px.metric_distance(EUCLID, [0.0], [1.0, 2.0])


def test_point_rejects_nonfinite():
    with pytest.raises(px.InvalidSpecError):
        px.metric_distance(EUCLID, [np.nan], [0.0])


@pytest.mark.parametrize("norm", [EUCLID, px.NormSpec("lp", 3.0), px.NormSpec("lp", 1.5)])
@pytest.mark.parametrize("dim", [1, 2, 3])
def test_metric_axioms_seeded(norm, dim):
    rng = np.random.default_rng(42)
    for _ in range(1000):
        x, y, z = rng.uniform(-10, 10, (3, dim))
        dxy = norm.distance(x, y)
        assert dxy >= 0.0
        assert dxy == norm.distance(y, x)
        assert norm.distance(x, x) <= 1e-12
        assert norm.distance(x, z) <= dxy + norm.distance(y, z) + 1e-12


def test_lp_requires_uniform_convexity_range():
    with pytest.raises(px.InvalidSpecError):
        px.NormSpec("lp", 1.0)
    with pytest.raises(px.InvalidSpecError):
        px.NormSpec("lp", float("inf"))


@settings(deadline=None, max_examples=60)
@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50))
def test_metric_symmetry_property(a, b, c, d):
    x, y = np.array([a, b]), np.array([c, d])
    assert EUCLID.distance(x, y) == EUCLID.distance(y, x)


# ---------------------------------------------------------------------------
# projection
# ---------------------------------------------------------------------------


def test_project_box_clamps():
    box = px.Box([1.0], [2.0])
    assert px.project(EUCLID, box, [0.0])[0] == 1.0


def test_project_ball_analytic():
    ball = px.Ball([0.0, 0.0], 1.0)
    got = px.project(EUCLID, ball, [3.0, 4.0])
    assert np.allclose(got, [0.6, 0.8], atol=1e-12)
    # dense boundary sampling oracle: no boundary point is closer
    best = min(oracles.euclid((3.0, 4.0), q) for q in oracles.ball_boundary_points((0.0, 0.0), 1.0, 4000))
    assert EUCLID.distance(np.array([3.0, 4.0]), got) <= best + 1e-6


def test_project_member_is_identity():
    ball = px.Ball([0.0, 0.0], 1.0)
    x = np.array([0.3, -0.2])
    assert np.array_equal(px.project(EUCLID, ball, x), x)


def test_project_unsupported_combinations():
    lp = px.NormSpec("lp", 3.0)
    with pytest.raises(px.UnsupportedCapabilityError):
        px.project(lp, px.Ball([0.0], 1.0), [2.0])
    with pytest.raises(px.UnsupportedCapabilityError):
        px.project(lp, _triangle(), [2.0, 2.0])


def _triangle():
    return px.Polytope(
        np.array([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]]),
        np.array([0.0, 0.0, 1.0]),
        interior_point=[0.2, 0.2],
    )


def test_project_polytope_vertex_case():
    got = px.project(EUCLID, _triangle(), [1.0, 1.0])
    assert np.allclose(got, [0.5, 0.5], atol=1e-9)


def test_polytope_requires_feasible_certificate():
    with pytest.raises(px.InvalidSpecError):
        px.Polytope(np.array([[1.0, 0.0]]), np.array([0.0]), interior_point=[1.0, 0.0])


@pytest.mark.parametrize("seed", range(4))
def test_projection_optimality_sampled(seed):
    rng = np.random.default_rng(seed)
    regions = [
        px.Box(rng.uniform(-2, 0, 2), rng.uniform(0.5, 2, 2)),
        px.Ball(rng.uniform(-1, 1, 2), float(rng.uniform(0.5, 2))),
        _triangle(),
    ]
    for region in regions:
        for _ in range(8):
            x = rng.uniform(-4, 4, 2)
            p = px.project(EUCLID, region, x)
            dp = EUCLID.distance(x, p)
            for _ in range(40):
                s = sample_region(region, rng)
                assert dp <= EUCLID.distance(x, s) + 1e-9


def test_project_box_under_lp_norm_is_clamp():
    lp = px.NormSpec("lp", 3.0)
    box = px.Box([1.0, -1.0], [2.0, 1.0])
    x = np.array([0.0, 2.0])
    p = px.project(lp, box, x)
    assert np.allclose(p, [1.0, 1.0])
    rng = np.random.default_rng(1)
    for _ in range(300):
        s = sample_region(box, rng)
        assert lp.distance(x, p) <= lp.distance(x, s) + 1e-9


# ---------------------------------------------------------------------------
# region distance
# ---------------------------------------------------------------------------


def test_region_distance_two_intervals_matches_brute_force():
    a = px.Box([1.0], [2.0])
    b = px.Box([-2.0], [-1.0])
    got = px.region_distance(EUCLID, a, b)
    brute = oracles.brute_force_box_gap([1.0], [2.0], [-2.0], [-1.0], 1e-4)
    assert abs(got - brute) <= 1e-9
    assert abs(got - 2.0) <= 1e-12  # closed-form gap


def test_region_distance_identical_regions_zero():
    a = px.Box([1.0], [2.0])
    assert px.region_distance(EUCLID, a, a) == 0.0


def test_region_distance_balls():
    a = px.Ball([0.0, 0.0], 1.0)
    b = px.Ball([5.0, 0.0], 1.0)
    got = px.region_distance(EUCLID, a, b)
    assert abs(got - 3.0) <= 1e-9
    rng = np.random.default_rng(2)
    brute = min(
        oracles.euclid(sample_region(a, rng), sample_region(b, rng)) for _ in range(4000)
    )
    assert got <= brute + 1e-9


def test_region_distance_exact_symmetry():
    pairs = [
        (px.Box([1.0], [2.0]), px.Box([-2.0], [-1.0])),
        (px.Ball([0.0, 0.0], 1.0), px.Box([2.0, -1.0], [3.0, 1.0])),
    ]
    for a, b in pairs:
        assert px.region_distance(EUCLID, a, b) == px.region_distance(EUCLID, b, a)


def test_proximity_pair_realizes_gap():
    a, b, gap = px.proximity_pair(EUCLID, px.Box([1.0], [2.0]), px.Box([-2.0], [-1.0]))
    assert a[0] == 1.0 and b[0] == -1.0 and gap == 2.0


# ---------------------------------------------------------------------------
# contains / cyclic successor / partition
# ---------------------------------------------------------------------------


def test_contains_examples():
    box = px.Box([1.0], [2.0])
    assert px.contains(box, [1.5], tol=0.0)
    assert px.contains(box, [2.0 + 1e-12], tol=1e-9)
    assert not px.contains(px.Ball([0.0, 0.0], 1.0), [2.0, 0.0], tol=1e-9)


def test_cyclic_successor_examples():
    assert px.cyclic_successor(1, 3) == 2
    assert px.cyclic_successor(3, 3) == 1  # wraparound convention
    assert px.cyclic_successor(2, 2) == 1
    with pytest.raises(px.InvalidSpecError):
        px.cyclic_successor(0, 3)
    with pytest.raises(px.InvalidSpecError):
        px.cyclic_successor(4, 3)


@settings(deadline=None, max_examples=80)
@given(st.integers(1, 50), st.integers(1, 50))
def test_cyclic_successor_wraps(i, p):
    if i > p:
        return
    succ = px.cyclic_successor(i, p)
    assert 1 <= succ <= p
    assert succ == (i % p) + 1


def test_partition_matrix_and_adjacency(e1):
    part = e1.partition
    assert part.dist_matrix.shape == (2, 2)
    assert part.dist_matrix[0, 0] == 0.0
    assert part.dist_matrix[0, 1] == part.dist_matrix[1, 0]
    assert part.D_adjacent == (2.0, 2.0)
    assert not part.intersecting
    assert part.uniform_gap() == 2.0


def test_partition_intersecting_flag(intersecting):
    assert intersecting.partition.intersecting
    assert intersecting.partition.D_adjacent == (0.0, 0.0)


def test_partition_needs_two_regions():
    with pytest.raises(px.InvalidSpecError):
        px.build_partition([px.Box([0.0], [1.0])])


def test_box_invariant_lo_le_hi():
    with pytest.raises(px.InvalidSpecError):
        px.Box([2.0], [1.0])


@settings(deadline=None, max_examples=60)
@given(st.floats(-5, 5), st.floats(-5, 5))
def test_box_projection_idempotent_and_member(a, b):
    box = px.Box([-1.0, -1.0], [1.0, 1.0])
    x = np.array([a, b])
    p = px.project(EUCLID, box, x)
    assert px.contains(box, p, tol=0.0)
    assert np.array_equal(px.project(EUCLID, box, p), p)


def test_region_distance_lp_norm_boxes():
    lp = px.NormSpec("lp", 3.0)
    a = px.Box([1.0, -1.0], [2.0, 1.0])
    b = px.Box([-2.0, -1.0], [-1.0, 1.0])
    assert px.region_distance(lp, a, b) == pytest.approx(2.0, abs=1e-12)
    # oblique offset: the gap picks up both axes under the l_3 metric
    c = px.Box([3.0, 4.0], [4.0, 5.0])
    got = px.region_distance(lp, a, c)
    import oracles as orc

    brute = orc.brute_force_box_gap_lp([1.0, -1.0], [2.0, 1.0], [3.0, 4.0], [4.0, 5.0], 0.05, 3.0)
    assert got <= brute + 1e-9
    assert abs(got - orc.lp_distance((2.0, 1.0), (3.0, 4.0), 3.0)) <= 1e-6


def test_ball_partition_with_projection_inner():
    part = px.build_partition([px.Ball([0.0, 0.0], 1.0), px.Ball([5.0, 0.0], 1.0)])
    assert part.D_adjacent == (3.0, 3.0)
    inner = px.build_projection_inner(part, 0.4)
    m = px.SemiCyclicMapping(part, inner, px.identity_impulse())
    orb = px.iterate(m, [0.0, 0.0], 1, 60)
    tr = px.distance_trace(orb, part.norm)
    v = px.detect_limit(tr, 3.0)
    assert v.limit_class == "to_D"
    ls = px.extract_limiting_set([orb], m)
    assert np.allclose(ls.terminal[1], [1.0, 0.0], atol=1e-6)
    assert np.allclose(ls.terminal[2], [4.0, 0.0], atol=1e-6)


def test_sampling_failure_on_degenerate_budget(monkeypatch):
    from proxilab import spaces as sp

    monkeypatch.setattr(sp, "_REJECTION_BUDGET", 500)
    needle = px.Polytope(
        np.array([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]]),
        np.array([0.0, 0.0, 1e-4]),
        interior_point=[2e-5, 2e-5],
        bbox=([-50.0, -50.0], [50.0, 50.0]),
    )
    with pytest.raises(px.SamplingFailureError):
        sample_region(needle, np.random.default_rng(0))


def test_region_distance_convergence_failure_carries_gap(monkeypatch):
    from proxilab import spaces as sp

    monkeypatch.setattr(sp, "_GAP_MAX_ROUNDS", 0)
    with pytest.raises(px.ConvergenceFailureError) as err:
        px.region_distance(EUCLID, px.Box([1.0], [2.0]), px.Box([-2.0], [-1.0]))
    assert hasattr(err.value, "last_gap")
