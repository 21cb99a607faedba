import pytest

import proxilab as px


def make_e1_mapping(K=0.5, pattern=None):
    """Two intervals [1,2] and [-2,-1] with proximal anchors at +-1."""
    part = px.build_partition([px.Box([1.0], [2.0]), px.Box([-2.0], [-1.0])])
    inner = px.build_anchor_inner(part, [[1.0], [-1.0]], K)
    if pattern is None:
        impulse = px.identity_impulse()
    else:
        impulse = px.build_anchor_impulse(part, [[1.0], [-1.0]], px.GainSchedule(tuple(pattern)))
    return px.SemiCyclicMapping(part, inner, impulse)


def make_intersecting_mapping(K=0.5, pattern=None):
    """Overlapping intervals [0,2] and [-2,0] with a common anchor at 0."""
    part = px.build_partition([px.Box([0.0], [2.0]), px.Box([-2.0], [0.0])])
    inner = px.build_anchor_inner(part, [[0.0], [0.0]], K)
    if pattern is None:
        impulse = px.identity_impulse()
    else:
        impulse = px.build_anchor_impulse(part, [[0.0], [0.0]], px.GainSchedule(tuple(pattern)))
    return px.SemiCyclicMapping(part, inner, impulse)


def make_strips_mapping(norm=None, K=0.5):
    """Parallel strips in the plane, gap 2 along the first axis."""
    norm = norm or px.NormSpec()
    part = px.build_partition(
        [px.Box([1.0, -1.0], [2.0, 1.0]), px.Box([-2.0, -1.0], [-1.0, 1.0])], norm
    )
    inner = px.build_anchor_inner(part, [[1.0, 0.0], [-1.0, 0.0]], K)
    return px.SemiCyclicMapping(part, inner, px.identity_impulse())


@pytest.fixture
def e1():
    return make_e1_mapping()


@pytest.fixture
def e1_k1():
    return make_e1_mapping(K=1.0)


@pytest.fixture
def e1_damped():
    return make_e1_mapping(pattern=(0.8,))


@pytest.fixture
def e1_transient():
    return make_e1_mapping(pattern=(1.5, 0.4))


@pytest.fixture
def intersecting():
    return make_intersecting_mapping()


@pytest.fixture
def strips():
    return make_strips_mapping()
