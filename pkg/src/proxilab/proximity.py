"""Asymptotic classification of orbits: limit class of the step-distance
trace, extraction of the limiting set, start-independence of the limits, the
uniform-convexity squeezing property, and fixed-point collapse for
intersecting partitions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidSpecError
from .mappings import SemiCyclicMapping, apply_composite
from .orbit import DistanceTrace, Orbit, iterate
from .spaces import NormSpec, as_point, contains, cyclic_successor, region_index_of

DEFAULT_LIMIT_TOL = 1e-6
DEFAULT_UNIQUENESS_TOL = 1e-6
DEFAULT_FIXED_POINT_TOL = 1e-8
DEFAULT_DIVERGENCE_CAP = 1e9


@dataclass(frozen=True)
class ProximityVerdict:
    """Detected limit class of a step-distance trace.

    limit_estimate is the tail-window max; residual is its distance to the
    detected target (D for to_D, 0 for to_zero, NaN otherwise).
    """

    limit_class: str
    limit_estimate: float
    residual: float
    target: float
    window: int

    def to_dict(self) -> dict:
        return {
            "limit_class": self.limit_class,
            "limit_estimate": float(self.limit_estimate),
            "residual": float(self.residual) if np.isfinite(self.residual) else None,
            "target": float(self.target) if np.isfinite(self.target) else None,
            "window": int(self.window),
        }


def detect_limit(
    trace: DistanceTrace,
    D: float,
    tol: float = DEFAULT_LIMIT_TOL,
    window: int = 10,
    cap: float = DEFAULT_DIVERGENCE_CAP,
) -> ProximityVerdict:
    """Classify the tail of a trace: to_D, to_zero, bounded, or divergent.

    to_zero needs the set gap itself to sit inside the tolerance; a finite
    tail that settles away from both targets is reported bounded. A trace
    shorter than four windows is inconclusive.
    """
    d = trace.d
    if window < 1:
        raise InvalidSpecError("window must be >= 1")
    if d.size < 4 * window:
        return ProximityVerdict("inconclusive", float("nan"), float("nan"), float("nan"), window)
    if not np.all(np.isfinite(d)) or float(np.max(d)) > cap:
        return ProximityVerdict("divergent", float(np.max(d[np.isfinite(d)], initial=0.0)), float("nan"), float("nan"), window)
    est = float(np.max(d[-window:]))
    if D <= tol and est <= tol:
        return ProximityVerdict("to_zero", est, est, 0.0, window)
    if abs(est - D) <= tol:
        return ProximityVerdict("to_D", est, abs(est - D), float(D), window)
    return ProximityVerdict("bounded", est, float("nan"), float("nan"), window)


@dataclass(eq=False)
class LimitingSet:
    """Terminal subsequence points of an orbit, one per region.

    settle_step is the first index after which the recorded region indices
    follow the strict cyclic pattern to the end of the orbit; residuals hold
    the final within-subsequence displacement per region.
    """

    terminal: dict            # region index -> point
    intermediate: dict        # region index -> list of points (same-region extras)
    cycle_order: list
    residuals: dict
    settle_step: int
    conclusive: bool
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "terminal": {str(i): z.tolist() for i, z in sorted(self.terminal.items())},
            "intermediate": {str(i): [p.tolist() for p in pts] for i, pts in sorted(self.intermediate.items())},
            "cycle_order": [int(i) for i in self.cycle_order],
            "residuals": {str(i): float(r) for i, r in sorted(self.residuals.items())},
            "settle_step": int(self.settle_step),
            "conclusive": bool(self.conclusive),
            "reason": self.reason,
        }


def _settle_step(orbit: Orbit, p: int) -> int:
    idx = orbit.set_indices
    settle = 0
    for t in range(idx.size - 1):
        if idx[t + 1] != cyclic_successor(int(idx[t]), p):
            settle = t + 1
    return settle


def _extract_single(orbit: Orbit, mapping: SemiCyclicMapping, tol: float) -> LimitingSet:
    part = mapping.partition
    p = part.p
    settle = _settle_step(orbit, p)
    n_pts = orbit.points.shape[0]
    if n_pts - settle < 3 * p + 1:
        return LimitingSet({}, {}, [], {}, settle, False, "orbit does not hold the cyclic pattern long enough")
    terminal, residuals = {}, {}
    intermediate: dict = {}
    for j in range(p):
        steps = np.arange(settle + j, n_pts, p)
        if steps.size < 2:
            return LimitingSet({}, {}, [], {}, settle, False, "subsequence too short")
        last, prev = orbit.points[steps[-1]], orbit.points[steps[-2]]
        gap = part.norm.distance(last, prev)
        if gap > tol:
            return LimitingSet({}, {}, [], {}, settle, False, f"subsequence for residue {j} not settling (gap {gap:.3g})")
        region = int(orbit.set_indices[steps[-1]])
        if region in terminal:
            intermediate.setdefault(region, []).append(last)
        else:
            terminal[region] = last
            residuals[region] = gap
    cycle_order = [int(v) for v in orbit.set_indices[settle : settle + p]]
    return LimitingSet(terminal, intermediate, cycle_order, residuals, settle, True)


def extract_limiting_set(orbits: Sequence[Orbit], mapping: SemiCyclicMapping, tol: float = DEFAULT_LIMIT_TOL) -> LimitingSet:
    """Limiting set extracted from the first orbit, cross-checked against the rest.

    Disagreement across orbits beyond tol marks the result inconclusive
    rather than fabricating points.
    """
    if not orbits:
        raise InvalidSpecError("extract_limiting_set needs at least one orbit")
    base = _extract_single(orbits[0], mapping, tol)
    if not base.conclusive:
        return base
    worst = 0.0
    for other in orbits[1:]:
        ls = _extract_single(other, mapping, tol)
        if not ls.conclusive:
            return LimitingSet(base.terminal, base.intermediate, base.cycle_order, base.residuals, base.settle_step, False, ls.reason)
        for region, z in base.terminal.items():
            if region in ls.terminal:
                worst = max(worst, mapping.partition.norm.distance(z, ls.terminal[region]))
    if worst > tol:
        return LimitingSet(
            base.terminal, base.intermediate, base.cycle_order, base.residuals, base.settle_step,
            False, f"orbits disagree on the limiting set by {worst:.3g}",
        )
    return base


@dataclass(frozen=True)
class UniquenessResult:
    """Start-independence of the limiting set across several orbits."""

    unique: Optional[bool]
    spread: float
    count: int

    def to_dict(self) -> dict:
        return {
            "unique": self.unique,
            "spread": float(self.spread) if np.isfinite(self.spread) else None,
            "count": int(self.count),
        }


def uniqueness_check(
    mapping: SemiCyclicMapping,
    x0_list: Sequence,
    N: int,
    tol: float = DEFAULT_UNIQUENESS_TOL,
) -> UniquenessResult:
    """Run orbits from every start and compare the corresponding limit points.

    spread is the max pairwise distance between matching terminal points;
    unique iff spread < tol. Any inconclusive extraction makes the whole
    check inconclusive.
    """
    if len(x0_list) < 2:
        raise InvalidSpecError("uniqueness check needs at least two starting points")
    sets = []
    for x0 in x0_list:
        orb = iterate(mapping, x0, None, N)
        ls = _extract_single(orb, mapping, tol)
        if not ls.conclusive:
            return UniquenessResult(unique=None, spread=float("nan"), count=len(x0_list))
        sets.append(ls)
    spread = 0.0
    norm = mapping.partition.norm
    for a in range(len(sets)):
        for b in range(a + 1, len(sets)):
            shared = set(sets[a].terminal) & set(sets[b].terminal)
            for region in shared:
                spread = max(spread, norm.distance(sets[a].terminal[region], sets[b].terminal[region]))
    return UniquenessResult(unique=bool(spread < tol), spread=spread, count=len(x0_list))


@dataclass(frozen=True)
class SqueezeVerdict:
    """Outcome of the two-sequence squeezing property check."""

    status: str  # holds | fails | inconclusive
    tail_gap_x: float
    tail_gap_z: float
    tail_distance: float

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "tail_gap_x": float(self.tail_gap_x),
            "tail_gap_z": float(self.tail_gap_z),
            "tail_distance": float(self.tail_distance),
        }


def result4_check(
    norm: NormSpec,
    region_a,
    region_b,
    x_seq,
    z_seq,
    y_seq,
    D: float,
    gap_tol: float = 1e-4,
    tol: float = DEFAULT_LIMIT_TOL,
    tail: int = 8,
) -> SqueezeVerdict:
    """Uniform-convexity squeezing: once both gap sequences reach D, the two
    same-side sequences must collapse onto each other.

    x_seq and z_seq live in region_a, y_seq in region_b; the check is
    inconclusive unless the tails of |x_n - y_n| and |z_n - y_n| sit within
    gap_tol of D.
    """
    xs = np.asarray([as_point(v) for v in x_seq])
    zs = np.asarray([as_point(v) for v in z_seq])
    ys = np.asarray([as_point(v) for v in y_seq])
    n = min(len(xs), len(zs), len(ys))
    if n < tail:
        return SqueezeVerdict("inconclusive", float("nan"), float("nan"), float("nan"))
    xs, zs, ys = xs[-tail:], zs[-tail:], ys[-tail:]
    for seq, region in ((xs, region_a), (zs, region_a), (ys, region_b)):
        if region is not None and not all(contains(region, v, norm=norm) for v in seq):
            return SqueezeVerdict("inconclusive", float("nan"), float("nan"), float("nan"))
    gap_x = float(np.max(np.abs(norm.norms_of_rows(xs - ys) - D)))
    gap_z = float(np.max(np.abs(norm.norms_of_rows(zs - ys) - D)))
    dist = float(np.max(norm.norms_of_rows(zs - xs)))
    if gap_x > gap_tol or gap_z > gap_tol:
        return SqueezeVerdict("inconclusive", gap_x, gap_z, dist)
    return SqueezeVerdict("holds" if dist < tol else "fails", gap_x, gap_z, dist)


@dataclass(frozen=True)
class FixedPointResult:
    """Collapsed limit point and its one-step displacement."""

    point: np.ndarray
    residual: float

    def to_dict(self) -> dict:
        return {"point": self.point.tolist(), "residual": float(self.residual)}


def fixed_point_check(mapping: SemiCyclicMapping, limiting: LimitingSet, tol: float = DEFAULT_FIXED_POINT_TOL) -> FixedPointResult:
    """Collapse the limiting set of an intersecting partition to one point z
    and report d(z, Tz) (impulse phase 0)."""
    part = mapping.partition
    if not all(d <= part.membership_tol for d in part.D_adjacent):
        raise InvalidSpecError("fixed-point check requires an intersecting partition (D = 0 on all adjacencies)")
    if not limiting.conclusive or not limiting.terminal:
        raise InvalidSpecError("fixed-point check needs a conclusive limiting set")
    points = list(limiting.terminal.values())
    z = points[0]
    for other in points[1:]:
        if part.norm.distance(z, other) > max(tol, 10 * DEFAULT_LIMIT_TOL):
            raise InvalidSpecError("limiting set did not collapse to a single point")
    region = region_index_of(part, z)
    Tz, _ = apply_composite(mapping, z, region, 0)
    return FixedPointResult(point=z, residual=part.norm.distance(z, Tz))
