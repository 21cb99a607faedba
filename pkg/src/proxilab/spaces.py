"""Finite-dimensional normed-space geometry.

Points, norms, closed convex regions (boxes, balls, halfspace polytopes),
metric projection, inter-set distances via alternating projections, and the
cyclic successor convention for region indices (1-based, wrapping at p).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ConvergenceFailureError,
    DimensionMismatchError,
    InvalidSpecError,
    SamplingFailureError,
    UnsupportedCapabilityError,
)

MEMBERSHIP_TOL = 1e-9

_GAP_CHANGE_TOL = 1e-12
_GAP_MAX_ROUNDS = 100_000
_DYKSTRA_MAX_SWEEPS = 10_000
_REJECTION_BUDGET = 1_000_000


def as_point(coords) -> np.ndarray:
    """Validate and normalize a coordinate sequence into a 1-D float array."""
    x = np.asarray(coords, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.ndim != 1 or x.size < 1:
        raise InvalidSpecError(f"a point must be a 1-D coordinate vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidSpecError("point coordinates must all be finite")
    return x


@dataclass(frozen=True)
class NormSpec:
    """Norm of the ambient space: euclidean, or an l_q norm with 1 < q < inf.

    The l_q restriction keeps the space uniformly convex, which the
    best-proximity limit machinery relies on.
    """

    kind: str = "euclidean"
    q: float = 2.0

    def __post_init__(self):
        if self.kind not in ("euclidean", "lp"):
            raise InvalidSpecError(f"unknown norm kind {self.kind!r}")
        if self.kind == "lp":
            if not (np.isfinite(self.q) and 1.0 < self.q):
                raise InvalidSpecError("lp norm requires a finite exponent q with 1 < q")

    def norm(self, v) -> float:
        v = np.asarray(v, dtype=float)
        if self.kind == "euclidean":
            return float(np.sqrt(np.dot(v, v)))
        return float(np.sum(np.abs(v) ** self.q) ** (1.0 / self.q))

    def distance(self, x, y) -> float:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape:
            raise DimensionMismatchError(f"points of dimension {x.shape} vs {y.shape}")
        return self.norm(x - y)

    def norms_of_rows(self, diffs: np.ndarray) -> np.ndarray:
        if self.kind == "euclidean":
            return np.sqrt(np.einsum("ij,ij->i", diffs, diffs))
        return np.sum(np.abs(diffs) ** self.q, axis=1) ** (1.0 / self.q)


def metric_distance(norm: NormSpec, x, y) -> float:
    """Distance induced by the norm; rejects dimension mismatches."""
    return norm.distance(as_point(x), as_point(y))


# ---------------------------------------------------------------------------
# Convex regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box {x : lo <= x <= hi} (componentwise)."""

    lo: np.ndarray
    hi: np.ndarray
    tolerance: float = MEMBERSHIP_TOL

    def __post_init__(self):
        object.__setattr__(self, "lo", as_point(self.lo))
        object.__setattr__(self, "hi", as_point(self.hi))
        if self.lo.shape != self.hi.shape:
            raise InvalidSpecError("box lo/hi must have equal dimension")
        if np.any(self.lo > self.hi):
            raise InvalidSpecError("box requires lo <= hi componentwise")
        if self.tolerance < 0:
            raise InvalidSpecError("membership tolerance must be >= 0")

    @property
    def dimension(self) -> int:
        return self.lo.size

    def content_key(self):
        return ("box", self.dimension, tuple(self.lo), tuple(self.hi))

    def project_point(self, x: np.ndarray, norm: NormSpec) -> np.ndarray:
        # componentwise clamp minimizes every l_q distance separably
        return np.clip(x, self.lo, self.hi)

    def _exactly_inside(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))

    def bounding_box(self):
        return self.lo, self.hi

    def reference_point(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True, eq=False)
class Ball:
    """Euclidean ball of positive radius."""

    center: np.ndarray
    radius: float
    tolerance: float = MEMBERSHIP_TOL

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise InvalidSpecError("ball radius must be positive and finite")
        if self.tolerance < 0:
            raise InvalidSpecError("membership tolerance must be >= 0")

    @property
    def dimension(self) -> int:
        return self.center.size

    def content_key(self):
        return ("ball", self.dimension, tuple(self.center), (float(self.radius),))

    def project_point(self, x: np.ndarray, norm: NormSpec) -> np.ndarray:
        if norm.kind != "euclidean":
            raise UnsupportedCapabilityError("ball projection is implemented for the euclidean norm only")
        v = x - self.center
        r = float(np.sqrt(np.dot(v, v)))
        if r <= self.radius:
            return x.copy()
        return self.center + (self.radius / r) * v

    def _exactly_inside(self, x: np.ndarray) -> bool:
        v = x - self.center
        return bool(np.dot(v, v) <= self.radius * self.radius)

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def reference_point(self) -> np.ndarray:
        return self.center.copy()


@dataclass(frozen=True, eq=False)
class Polytope:
    """Intersection of halfspaces {x : A x <= b}, certified nonempty by an interior point.

    `bbox` (lo, hi) bounds the region for rejection sampling; when omitted it
    is estimated by projecting distant points along each axis, slightly
    inflated so the estimate stays a superset at desk scale.
    """

    halfspace_normals: np.ndarray  # (m, n)
    halfspace_offsets: np.ndarray  # (m,)
    interior_point: np.ndarray
    tolerance: float = MEMBERSHIP_TOL
    bbox: Optional[tuple] = None
    _bbox_cache: Optional[tuple] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        A = np.asarray(self.halfspace_normals, dtype=float)
        b = np.asarray(self.halfspace_offsets, dtype=float)
        ip = as_point(self.interior_point)
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] != ip.size or b.shape != (A.shape[0],):
            raise InvalidSpecError("polytope requires A of shape (m, n), b of shape (m,) and an n-dim interior point")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise InvalidSpecError("halfspace data must be finite")
        row_norms = np.sqrt(np.einsum("ij,ij->i", A, A))
        if np.any(row_norms <= 0):
            raise InvalidSpecError("halfspace normals must be nonzero")
        if np.any(A @ ip > b + 1e-12):
            raise InvalidSpecError("the certifying interior point violates a halfspace")
        object.__setattr__(self, "halfspace_normals", A)
        object.__setattr__(self, "halfspace_offsets", b)
        object.__setattr__(self, "interior_point", ip)
        if self.tolerance < 0:
            raise InvalidSpecError("membership tolerance must be >= 0")
        if self.bbox is not None:
            lo, hi = as_point(self.bbox[0]), as_point(self.bbox[1])
            if np.any(lo > hi):
                raise InvalidSpecError("polytope bbox requires lo <= hi")
            object.__setattr__(self, "bbox", (lo, hi))

    @property
    def dimension(self) -> int:
        return self.interior_point.size

    def content_key(self):
        return (
            "polytope",
            self.dimension,
            tuple(self.halfspace_normals.ravel()),
            tuple(self.halfspace_offsets),
        )

    def project_point(self, x: np.ndarray, norm: NormSpec) -> np.ndarray:
        if norm.kind != "euclidean":
            raise UnsupportedCapabilityError("polytope projection is implemented for the euclidean norm only")
        A, b = self.halfspace_normals, self.halfspace_offsets
        if np.all(A @ x <= b):
            return x.copy()
        # Dykstra over the halfspaces: converges to the exact metric projection
        # onto the intersection, no step-size tuning required. Stopping
        # tolerances scale with the input magnitude so far points terminate.
        m = A.shape[0]
        sq = np.einsum("ij,ij->i", A, A)
        scale = 1.0 + float(np.max(np.abs(x)))
        y = x.copy()
        corrections = np.zeros((m, x.size))
        for _ in range(_DYKSTRA_MAX_SWEEPS):
            y_prev = y.copy()
            for i in range(m):
                w = y + corrections[i]
                viol = float(A[i] @ w - b[i])
                if viol > 0.0:
                    y = w - (viol / sq[i]) * A[i]
                else:
                    y = w
                corrections[i] = w - y
            if float(np.max(np.abs(y - y_prev))) < 1e-13 * scale and np.all(A @ y <= b + 1e-10 * scale):
                return y
        raise ConvergenceFailureError(
            "polytope projection did not converge within the sweep cap",
            last_gap=float(np.max(A @ y - b)),
        )

    def _exactly_inside(self, x: np.ndarray) -> bool:
        return bool(np.all(self.halfspace_normals @ x <= self.halfspace_offsets))

    def bounding_box(self):
        if self.bbox is not None:
            return self.bbox
        if self._bbox_cache is not None:
            return self._bbox_cache
        norm = NormSpec()
        ip = self.interior_point
        scale = 1.0 + float(np.max(np.abs(ip)))
        reach = 1e3 * scale
        lo = np.empty(self.dimension)
        hi = np.empty(self.dimension)
        for j in range(self.dimension):
            far = ip.copy()
            far[j] += reach
            hi[j] = self.project_point(far, norm)[j]
            far[j] -= 2.0 * reach
            lo[j] = self.project_point(far, norm)[j]
        margin = 1e-3 * (hi - lo + 1.0)
        box = (lo - margin, hi + margin)
        object.__setattr__(self, "_bbox_cache", box)
        return box

    def reference_point(self) -> np.ndarray:
        return self.interior_point.copy()


ConvexRegion = (Box, Ball, Polytope)


def project(norm: NormSpec, region, x) -> np.ndarray:
    """Metric projection of x onto a closed convex region.

    Boxes support every l_q norm (the clamp is separable); balls and
    polytopes are euclidean-only and raise otherwise.
    """
    x = as_point(x)
    if x.size != region.dimension:
        raise DimensionMismatchError(f"point of dimension {x.size} vs region of dimension {region.dimension}")
    return region.project_point(x, norm)


def region_point_distance(norm: NormSpec, region, x) -> float:
    """Distance from a point to a region (0 inside)."""
    x = as_point(x)
    if region._exactly_inside(x):
        return 0.0
    return norm.distance(x, project(norm, region, x))


def contains(region, x, tol: Optional[float] = None, norm: Optional[NormSpec] = None) -> bool:
    """Whether x lies within distance tol of the region.

    The tolerance band is measured with the euclidean metric unless a norm is
    passed; exact membership short-circuits without a projection.
    """
    x = as_point(x)
    if x.size != region.dimension:
        raise DimensionMismatchError(f"point of dimension {x.size} vs region of dimension {region.dimension}")
    if tol is None:
        tol = region.tolerance
    if tol < 0:
        raise InvalidSpecError("membership tolerance must be >= 0")
    if region._exactly_inside(x):
        return True
    if tol == 0.0:
        return False
    return region_point_distance(norm or NormSpec(), region, x) <= tol


def sample_region(region, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample from a region via rejection in its bounding box."""
    lo, hi = region.bounding_box()
    for _ in range(_REJECTION_BUDGET):
        cand = rng.uniform(lo, hi)
        if region._exactly_inside(cand):
            return cand
    raise SamplingFailureError("rejection sampling exceeded its budget; region is degenerate for its bounding box")


# ---------------------------------------------------------------------------
# Inter-set distance and cycle partitions
# ---------------------------------------------------------------------------


def proximity_pair(norm: NormSpec, region_a, region_b):
    """Closest pair (a, b, gap) between two convex regions via alternating projections.

    The iteration is run in a canonical region order so the computed gap is
    exactly symmetric in its arguments.
    """
    if region_a.dimension != region_b.dimension:
        raise DimensionMismatchError("regions of different dimension")
    swapped = region_b.content_key() < region_a.content_key()
    first, second = (region_b, region_a) if swapped else (region_a, region_b)
    a = first.reference_point()
    prev_gap = np.inf
    for _ in range(_GAP_MAX_ROUNDS):
        b = project(norm, second, a)
        a = project(norm, first, b)
        gap = norm.distance(a, b)
        if abs(prev_gap - gap) < _GAP_CHANGE_TOL:
            if swapped:
                return b, a, gap
            return a, b, gap
        prev_gap = gap
    raise ConvergenceFailureError(
        "alternating projections did not converge within the round cap", last_gap=prev_gap
    )


def region_distance(norm: NormSpec, region_a, region_b) -> float:
    """inf over a in A, b in B of d(a, b); zero when the regions intersect."""
    return proximity_pair(norm, region_a, region_b)[2]


def cyclic_successor(i: int, p: int) -> int:
    """Next region index in the cycle: i+1 for i < p, wrapping p -> 1."""
    if not (isinstance(i, (int, np.integer)) and isinstance(p, (int, np.integer))):
        raise InvalidSpecError("region indices must be integers")
    if p < 1 or not (1 <= i <= p):
        raise InvalidSpecError(f"region index {i} outside 1..{p}")
    return int(i % p + 1)


@dataclass(frozen=True, eq=False)
class CyclePartition:
    """Ordered regions A_1..A_p with pairwise distances and the wrap adjacency."""

    regions: tuple
    norm: NormSpec
    dist_matrix: np.ndarray
    D_adjacent: tuple  # D_adjacent[r] = d(A_{r+1}, A_{succ})
    intersecting: bool
    membership_tol: float = MEMBERSHIP_TOL

    @property
    def p(self) -> int:
        return len(self.regions)

    @property
    def dimension(self) -> int:
        return self.regions[0].dimension

    def region(self, i: int):
        """Region by 1-based index."""
        if not 1 <= i <= self.p:
            raise InvalidSpecError(f"region index {i} outside 1..{self.p}")
        return self.regions[i - 1]

    def adjacent_gap(self, i: int) -> float:
        """D for adjacency (A_i, A_{i+1})."""
        if not 1 <= i <= self.p:
            raise InvalidSpecError(f"region index {i} outside 1..{self.p}")
        return self.D_adjacent[i - 1]

    def uniform_gap(self) -> Optional[float]:
        """The common adjacent gap when all adjacencies agree to 1e-9, else None."""
        d0 = self.D_adjacent[0]
        if all(abs(d - d0) <= 1e-9 for d in self.D_adjacent):
            return d0
        return None


def build_partition(regions: Sequence, norm: NormSpec = NormSpec(), membership_tol: float = MEMBERSHIP_TOL) -> CyclePartition:
    """Assemble a cycle partition, computing every pairwise set distance."""
    regions = tuple(regions)
    p = len(regions)
    if p < 2:
        raise InvalidSpecError("a cycle partition needs at least two regions")
    dim = regions[0].dimension
    if any(r.dimension != dim for r in regions):
        raise DimensionMismatchError("all regions of a partition must share one dimension")
    dist = np.zeros((p, p))
    for a in range(p):
        for b in range(a + 1, p):
            d = region_distance(norm, regions[a], regions[b])
            dist[a, b] = d
            dist[b, a] = d
    adjacent = tuple(float(dist[r, (r + 1) % p]) for r in range(p))
    intersecting = min(adjacent) <= membership_tol
    return CyclePartition(
        regions=regions,
        norm=norm,
        dist_matrix=dist,
        D_adjacent=adjacent,
        intersecting=intersecting,
        membership_tol=membership_tol,
    )


def region_index_of(partition: CyclePartition, x, prefer: Optional[int] = None) -> Optional[int]:
    """1-based index of a region containing x, or None.

    When several regions contain the point the preferred index wins, then the
    lowest index; this keeps recorded orbits deterministic.
    """
    x = as_point(x)
    if prefer is not None and 1 <= prefer <= partition.p:
        if contains(partition.regions[prefer - 1], x, partition.membership_tol, partition.norm):
            return prefer
    for r, region in enumerate(partition.regions):
        if contains(region, x, partition.membership_tol, partition.norm):
            return r + 1
    return None
