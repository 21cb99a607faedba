"""Constructive builders for the inner cyclic map, the impulsive map, and
their composite, plus classification of a built mapping against the audited
inequality families.

The inner builders send a point of A_i to the successor region by reflecting
its displacement from the region anchor through the anchor chain:

    x in A_i  ->  project(A_{i+1}, anchors[i+1] - K_i * (x - anchors[i]))

For proximal anchor chains this realizes the contraction inequality with
equality in the collinear case; in higher dimensions the builders are audited
rather than proven.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ImageEscapeError, InvalidSpecError, MembershipError
from .spaces import (
    CyclePartition,
    as_point,
    contains,
    cyclic_successor,
    project,
    proximity_pair,
    region_index_of,
)

ANCHOR_PROXIMAL_TOL = 1e-6


@dataclass(frozen=True)
class GainSchedule:
    """Cyclic step-indexed impulse gains: gain(k) = pattern[k mod len(pattern)].

    Entries above 1 are permitted; they model transiently expansive impulses.
    """

    pattern: tuple

    def __post_init__(self):
        pat = tuple(float(v) for v in self.pattern)
        if len(pat) < 1:
            raise InvalidSpecError("gain schedule needs at least one entry")
        if any(not np.isfinite(v) or v < 0 for v in pat):
            raise InvalidSpecError("gain schedule entries must be finite and >= 0")
        object.__setattr__(self, "pattern", pat)

    def gain(self, k: int) -> float:
        return self.pattern[k % len(self.pattern)]

    @property
    def period(self) -> int:
        return len(self.pattern)


IDENTITY_SCHEDULE = GainSchedule((1.0,))


@dataclass(frozen=True, eq=False)
class InnerMapSpec:
    """Inner cyclic map: anchor_segment (explicit anchors) or
    projection_contraction (per-adjacency closest pairs computed at build time)."""

    kind: str
    K_per_set: tuple
    anchors: Optional[tuple] = None        # anchor_segment: one point per region
    pair_anchors: Optional[tuple] = None   # projection_contraction: (u_i, v_{i+1}) per adjacency

    def uniform_K(self) -> float:
        """The single constant the uniform inequality is audited with."""
        return max(self.K_per_set)

    def K_of(self, i: int) -> float:
        return self.K_per_set[i - 1]


@dataclass(frozen=True, eq=False)
class ImpulseSpec:
    """Impulse map applied after the inner map: identity or anchor_scaling.

    anchor_scaling rescales the displacement from the region anchor by the
    step gain: u in A_j -> anchors[j] + gain(k) * (u - anchors[j]).
    """

    kind: str
    schedule: GainSchedule = IDENTITY_SCHEDULE
    anchors: Optional[tuple] = None


@dataclass(frozen=True, eq=False)
class SemiCyclicMapping:
    """Composite self-mapping: inner cyclic step followed by the impulse."""

    partition: CyclePartition
    inner: InnerMapSpec
    impulse: ImpulseSpec

    @property
    def p(self) -> int:
        return self.partition.p

    def step(self, x, i: int, k: int):
        return apply_composite(self, x, i, k)


def _validate_anchors(partition: CyclePartition, anchors: Sequence, label: str) -> tuple:
    pts = tuple(as_point(a) for a in anchors)
    if len(pts) != partition.p:
        raise InvalidSpecError(f"{label} needs exactly one anchor per region ({partition.p}), got {len(pts)}")
    for r, a in enumerate(pts):
        if a.size != partition.dimension:
            raise InvalidSpecError(f"{label} anchor {r + 1} has dimension {a.size}, expected {partition.dimension}")
        if not contains(partition.regions[r], a, partition.membership_tol, partition.norm):
            raise InvalidSpecError(f"{label} anchor {r + 1} = {a.tolist()} lies outside region {r + 1}")
    return pts


def _normalize_K(partition: CyclePartition, K_per_set) -> tuple:
    if np.isscalar(K_per_set):
        Ks = (float(K_per_set),) * partition.p
    else:
        Ks = tuple(float(v) for v in K_per_set)
    if len(Ks) != partition.p:
        raise InvalidSpecError(f"need one contraction constant per region ({partition.p}), got {len(Ks)}")
    for v in Ks:
        if not (np.isfinite(v) and 0.0 <= v <= 1.0):
            raise InvalidSpecError(f"contraction constants must lie in [0, 1], got {v}")
    return Ks


def build_anchor_inner(partition: CyclePartition, anchors: Sequence, K_per_set) -> InnerMapSpec:
    """Inner map from an explicit anchor chain.

    Anchors must lie in their regions and adjacent anchor pairs must realize
    the set gap (a best-proximity chain), so anchors map to anchors.
    """
    pts = _validate_anchors(partition, anchors, "inner map")
    Ks = _normalize_K(partition, K_per_set)
    for r in range(partition.p):
        s = r + 1 if r + 1 < partition.p else 0
        gap = partition.norm.distance(pts[r], pts[s])
        want = partition.D_adjacent[r]
        if abs(gap - want) > ANCHOR_PROXIMAL_TOL:
            raise InvalidSpecError(
                f"anchor pair ({r + 1}, {s + 1}) at distance {gap:.9g} does not realize "
                f"the set gap {want:.9g}; anchors must form a best-proximity chain"
            )
    return InnerMapSpec(kind="anchor_segment", K_per_set=Ks, anchors=pts)


def build_projection_inner(partition: CyclePartition, K_per_set) -> InnerMapSpec:
    """Inner map whose anchors are the per-adjacency closest pairs, computed
    by alternating projections; no user anchors required."""
    Ks = _normalize_K(partition, K_per_set)
    pairs = []
    for r in range(partition.p):
        s = r + 1 if r + 1 < partition.p else 0
        u, v, _ = proximity_pair(partition.norm, partition.regions[r], partition.regions[s])
        pairs.append((u, v))
    return InnerMapSpec(kind="projection_contraction", K_per_set=Ks, pair_anchors=tuple(pairs))


def build_anchor_impulse(partition: CyclePartition, anchors: Sequence, schedule: GainSchedule) -> ImpulseSpec:
    """Impulse scaling displacements from per-region anchors by the step gain."""
    pts = _validate_anchors(partition, anchors, "impulse")
    return ImpulseSpec(kind="anchor_scaling", schedule=schedule, anchors=pts)


def identity_impulse() -> ImpulseSpec:
    return ImpulseSpec(kind="identity", schedule=IDENTITY_SCHEDULE)


def _inner_step(inner: InnerMapSpec, partition: CyclePartition, x: np.ndarray, i: int):
    """Inner map application without the membership precondition check."""
    j = cyclic_successor(i, partition.p)
    K = inner.K_per_set[i - 1]
    if inner.kind == "anchor_segment":
        a_cur = inner.anchors[i - 1]
        a_next = inner.anchors[j - 1]
    elif inner.kind == "projection_contraction":
        a_cur, a_next = inner.pair_anchors[i - 1]
    else:
        raise InvalidSpecError(f"unknown inner map kind {inner.kind!r}")
    raw = a_next - K * (x - a_cur)
    y = project(partition.norm, partition.regions[j - 1], raw)
    return y, j


def apply_inner(inner: InnerMapSpec, partition: CyclePartition, x, i: int):
    """One inner step from region i; the result lands in the successor region."""
    x = as_point(x)
    if not contains(partition.regions[i - 1], x, partition.membership_tol, partition.norm):
        raise MembershipError(f"point {x.tolist()} is not in region {i} within tolerance")
    return _inner_step(inner, partition, x, i)


def apply_impulse(impulse: ImpulseSpec, partition: CyclePartition, u, j: int, k: int) -> np.ndarray:
    """Impulse at step k applied to a point of region j (membership is the caller's)."""
    u = as_point(u)
    if impulse.kind == "identity":
        return u
    if impulse.kind == "anchor_scaling":
        lam = impulse.schedule.gain(k)
        a = impulse.anchors[j - 1]
        return a + lam * (u - a)
    raise InvalidSpecError(f"unknown impulse kind {impulse.kind!r}")


def _composite_step(mapping: SemiCyclicMapping, x: np.ndarray, i: int, k: int):
    y, j = _inner_step(mapping.inner, mapping.partition, x, i)
    w = apply_impulse(mapping.impulse, mapping.partition, y, j, k)
    if not np.all(np.isfinite(w)):
        raise ImageEscapeError(f"non-finite image at step {k}", step=k, point=w)
    idx = region_index_of(mapping.partition, w, prefer=j)
    if idx is None:
        raise ImageEscapeError(
            f"image {w.tolist()} left every region at step {k} (impulse gain "
            f"{mapping.impulse.schedule.gain(k):g})",
            step=k,
            point=w,
        )
    return w, idx


def apply_composite(mapping: SemiCyclicMapping, x, i: int, k: int):
    """One composite step at iteration index k: inner map, then impulse.

    Returns the image and the index of the region actually containing it
    (preferring the cyclic successor on ties). An image in no region raises,
    which falsifies the semi-cyclic hypothesis for the scenario.
    """
    x = as_point(x)
    if not contains(mapping.partition.regions[i - 1], x, mapping.partition.membership_tol, mapping.partition.norm):
        raise MembershipError(f"point {x.tolist()} is not in region {i} within tolerance")
    return _composite_step(mapping, x, i, k)


# ---------------------------------------------------------------------------
# Classification against the definition families
# ---------------------------------------------------------------------------

CLASS_FLAGS = (
    "semi_cyclic",
    "cyclic",
    "nonexpansive",
    "contractive",
    "strict_semi_cyclic",
    "strict_cyclic",
    "strict_nonexpansive",
    "strict_contractive",
)

_MIN_CONCLUSIVE_SAMPLES = 10


@dataclass(frozen=True)
class FlagEvidence:
    """Outcome of one classification flag: holds (None = inconclusive),
    number of audited samples behind it, and the worst slack observed."""

    holds: Optional[bool]
    samples: int
    worst_slack: float


@dataclass(frozen=True)
class MappingClass:
    """Classification flags with their audit evidence."""

    flags: dict

    def is_(self, name: str) -> Optional[bool]:
        return self.flags[name].holds

    def prop_210_hypotheses_hold(self, partition: CyclePartition, report) -> bool:
        """Common-point partition, or audited gains never above one."""
        if all(d <= partition.membership_tol for d in partition.D_adjacent):
            return True
        gain = report.verdicts.get("gain_le_one")
        return bool(gain is not None and gain.holds)

    def strict_matches_plain(self) -> bool:
        pairs = (
            ("strict_semi_cyclic", "semi_cyclic"),
            ("strict_cyclic", "cyclic"),
            ("strict_nonexpansive", "nonexpansive"),
            ("strict_contractive", "contractive"),
        )
        return all(self.flags[s].holds == self.flags[n].holds for s, n in pairs)


def _and_evidence(*parts) -> FlagEvidence:
    if any(p.holds is None for p in parts):
        holds = None
    else:
        holds = all(p.holds for p in parts)
    return FlagEvidence(
        holds=holds,
        samples=min(p.samples for p in parts),
        worst_slack=max(p.worst_slack for p in parts),
    )


def _const_evidence(value: bool, like: FlagEvidence) -> FlagEvidence:
    return FlagEvidence(holds=value, samples=like.samples, worst_slack=0.0)


def classify(mapping: SemiCyclicMapping, report) -> MappingClass:
    """Set classification flags from an audit report of this mapping.

    Each flag holds exactly when the corresponding audited inequality held on
    every sample within the slack tolerance; too few usable samples marks a
    flag inconclusive rather than guessing.
    """

    def ev(name: str) -> FlagEvidence:
        v = report.verdicts[name]
        usable = v.checked - v.skipped
        holds = v.holds if usable >= _MIN_CONCLUSIVE_SAMPLES else None
        return FlagEvidence(holds=holds, samples=usable, worst_slack=v.worst_slack)

    cond1 = ev("inner_membership")
    cond2 = ev("composite_membership")
    cond3 = ev("inner_contraction")
    gain1 = ev("gain_le_one")
    floor = ev("cyclic_floor")
    strict = ev("strict_composite")

    K = mapping.inner.uniform_K()
    k_le_1 = _const_evidence(K <= 1.0, cond3)
    k_lt_1 = _const_evidence(K < 1.0, cond3)

    semi = _and_evidence(cond1, cond2, cond3)
    flags = {
        "semi_cyclic": semi,
        "cyclic": _and_evidence(semi, floor),
        "nonexpansive": _and_evidence(semi, gain1, k_le_1),
        "contractive": _and_evidence(semi, gain1, k_lt_1),
    }
    strict_semi = _and_evidence(cond1, cond2, strict)
    flags["strict_semi_cyclic"] = strict_semi
    flags["strict_cyclic"] = _and_evidence(strict_semi, floor)
    flags["strict_nonexpansive"] = _and_evidence(strict_semi, gain1, k_le_1)
    flags["strict_contractive"] = _and_evidence(strict_semi, gain1, k_lt_1)
    return MappingClass(flags=flags)
