"""Orbit iteration with per-step traces and the one-step bound recursions.

The bound ledger literally unrolls the one-step inequality

    d_k <= K * d_{k-1} + (1 - K) * D + delta_k,
    delta_k = (m_k - 1) * (K * d_{k-1} + (1 - K) * D)

with empirically measured impulse gains m_k. Closed-form exponent
expressions are evaluated separately as cross-checks only; the recursion is
authoritative, and the ledger reports both so any index-arithmetic
discrepancy surfaces as data rather than a failure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ImageEscapeError, InvalidSpecError, MembershipError
from .mappings import SemiCyclicMapping, _inner_step, apply_impulse
from .spaces import NormSpec, as_point, contains, region_index_of

GAIN_DENOM_FLOOR = 1e-12


@dataclass(eq=False)
class Orbit:
    """Iterates of a composite mapping.

    points[k] is the k-th iterate; pre_points[k] is its pre-impulse companion
    (pre_points[0] = points[0] by the step-0 identity convention); gains[k] is
    the measured impulse gain ratio d(x_{k+1}, x_k) / d(u_{k+1}, u_k), NaN
    where the denominator is below the floor.
    """

    x0: np.ndarray
    start_index: int
    points: np.ndarray       # (N+1, n)
    pre_points: np.ndarray   # (N+1, n)
    set_indices: np.ndarray  # (N+1,) 1-based
    gains: np.ndarray        # (N,)
    requested_steps: int

    @property
    def steps(self) -> int:
        return self.points.shape[0] - 1


def _measure_gains(norm: NormSpec, points: np.ndarray, pre_points: np.ndarray) -> np.ndarray:
    post = norm.norms_of_rows(np.diff(points, axis=0))
    pre = norm.norms_of_rows(np.diff(pre_points, axis=0))
    gains = np.full(post.shape, np.nan)
    ok = pre >= GAIN_DENOM_FLOOR
    gains[ok] = post[ok] / pre[ok]
    return gains


def iterate(
    mapping: SemiCyclicMapping,
    x0,
    i0: Optional[int] = None,
    N: int = 1,
    settle_to: Optional[float] = None,
    settle_tol: float = 0.0,
    settle_window: int = 0,
    min_steps: int = 0,
) -> Orbit:
    """Iterate the composite mapping N times from x0 in region i0.

    i0 defaults to the lowest region containing x0. Raises ImageEscapeError
    (carrying the partial orbit) if an image leaves all regions. The optional
    settle arguments stop early once the last `settle_window` step distances
    all sit within settle_tol of settle_to; they are a convergence shortcut
    for sweeps and leave at least min_steps steps in place.
    """
    if N < 1:
        raise InvalidSpecError("orbit length N must be >= 1")
    part = mapping.partition
    x = as_point(x0)
    if i0 is None:
        i0 = region_index_of(part, x)
        if i0 is None:
            raise MembershipError(f"starting point {x.tolist()} is in no region of the partition")
    elif not contains(part.regions[i0 - 1], x, part.membership_tol, part.norm):
        raise MembershipError(f"starting point {x.tolist()} is not in region {i0} within tolerance")

    points = [x]
    pre_points = [x]
    idxs = [int(i0)]
    recent: list = []
    cur, cur_i = x, int(i0)
    for k in range(N):
        u, j = _inner_step(mapping.inner, part, cur, cur_i)
        w = apply_impulse(mapping.impulse, part, u, j, k)
        idx = region_index_of(part, w, prefer=j) if np.all(np.isfinite(w)) else None
        if idx is None:
            raise ImageEscapeError(
                f"image {np.asarray(w).tolist()} left every region at step {k} (impulse gain "
                f"{mapping.impulse.schedule.gain(k):g})",
                step=k,
                point=w,
                partial_orbit=_finish_orbit(mapping, x, i0, points, pre_points, idxs, N),
            )
        points.append(w)
        pre_points.append(u)
        idxs.append(int(idx))
        if settle_window > 0 and settle_to is not None:
            recent.append(part.norm.distance(w, cur))
            if len(recent) > settle_window:
                recent.pop(0)
            if (
                k + 1 >= max(min_steps, settle_window)
                and len(recent) == settle_window
                and all(abs(d - settle_to) <= settle_tol for d in recent)
            ):
                cur, cur_i = w, idx
                break
        cur, cur_i = w, idx
    return _finish_orbit(mapping, x, i0, points, pre_points, idxs, N)


def _finish_orbit(mapping, x0, i0, points, pre_points, idxs, requested) -> Orbit:
    pts = np.asarray(points)
    pre = np.asarray(pre_points)
    return Orbit(
        x0=x0,
        start_index=int(i0),
        points=pts,
        pre_points=pre,
        set_indices=np.asarray(idxs, dtype=int),
        gains=_measure_gains(mapping.partition.norm, pts, pre) if len(points) > 1 else np.zeros(0),
        requested_steps=requested,
    )


@dataclass(eq=False)
class DistanceTrace:
    """Consecutive-iterate distances: d[k] = d(x_{k+1}, x_k)."""

    d: np.ndarray

    def __len__(self):
        return self.d.size


def distance_trace(orbit: Orbit, norm: NormSpec) -> DistanceTrace:
    if orbit.points.shape[0] < 2:
        raise InvalidSpecError("distance trace needs an orbit of length >= 2")
    d = norm.norms_of_rows(np.diff(orbit.points, axis=0))
    if not np.all(np.isfinite(d)):
        raise InvalidSpecError("orbit contains non-finite displacements")
    return DistanceTrace(d=d)


@dataclass(eq=False)
class DeltaTrace:
    """Per-step correction terms of the bound recursion.

    delta[k] = m_prime[k] * base[k] with base[k] = K*d[k-1] + (1-K)*D_k for
    k >= 1 (delta[0] = 0 by convention: the recursion anchors at the observed
    d[0]). Steps whose gain was unmeasurable are flagged in `skipped` and
    contribute delta = 0.
    """

    delta: np.ndarray
    m_prime: np.ndarray
    base: np.ndarray
    skipped: np.ndarray  # bool mask


def _step_gaps(orbit: Orbit, mapping: SemiCyclicMapping) -> np.ndarray:
    """D entering the bound at step k: the adjacent gap of the region of x_{k-1}."""
    gaps = np.asarray(mapping.partition.D_adjacent)
    return gaps[orbit.set_indices[:-1] - 1]


def _delta_with(orbit: Orbit, mapping: SemiCyclicMapping, trace: DistanceTrace, K_step: np.ndarray) -> DeltaTrace:
    n = trace.d.size
    gaps = _step_gaps(orbit, mapping)
    delta = np.zeros(n)
    base = np.zeros(n)
    m_prime = np.zeros(n)
    skipped = np.zeros(n, dtype=bool)
    gains = orbit.gains
    for k in range(1, n):
        base[k] = K_step[k] * trace.d[k - 1] + (1.0 - K_step[k]) * gaps[k]
        if np.isnan(gains[k]):
            skipped[k] = True
            continue
        m_prime[k] = gains[k] - 1.0
        delta[k] = m_prime[k] * base[k]
    return DeltaTrace(delta=delta, m_prime=m_prime, base=base, skipped=skipped)


def delta_trace(orbit: Orbit, mapping: SemiCyclicMapping, K: Optional[float] = None) -> DeltaTrace:
    """Correction-trace with a uniform contraction constant (default: the
    mapping's audited uniform K)."""
    trace = distance_trace(orbit, mapping.partition.norm)
    if K is None:
        K = mapping.inner.uniform_K()
    K_step = np.full(trace.d.size, float(K))
    return _delta_with(orbit, mapping, trace, K_step)


@dataclass(frozen=True)
class IndicatorSets:
    """Window indices split by the sign of the gain deviation m - 1."""

    S_plus: frozenset
    S_minus: frozenset


def indicator_sets(dtr: DeltaTrace, k: int, n: int, j: int, p: int) -> IndicatorSets:
    """Split window offsets i in 1..(n*p + j) by the sign of m'[k + n*p + j - i].

    Offsets whose gain was unmeasurable belong to neither set.
    """
    if k < 0 or n < 0 or j < 0:
        raise InvalidSpecError("window parameters must be nonnegative")
    width = n * p + j
    end = k + width
    if end >= dtr.m_prime.size:
        raise InvalidSpecError("indicator window exceeds the trace length")
    plus, minus = [], []
    for i in range(1, width + 1):
        t = end - i
        if dtr.skipped[t]:
            continue
        mp = dtr.m_prime[t]
        if mp > 0.0:
            plus.append(i)
        elif -1.0 <= mp < 0.0:
            minus.append(i)
    return IndicatorSets(S_plus=frozenset(plus), S_minus=frozenset(minus))


@dataclass(eq=False)
class BoundLedger:
    """Per-step evaluation of a bound chain against an observed trace.

    slack = bound - observed; under the chain hypotheses it stays above
    -1e-9. `closed_form` re-derives the unrolled bound from the explicit
    exponent formula; `closed_shifted` evaluates the variant whose correction
    sum is shifted by one index. Both are reported, never asserted.
    """

    chain: str
    k: np.ndarray
    set_index: np.ndarray
    d: np.ndarray
    delta: np.ndarray
    bound: np.ndarray
    slack: np.ndarray
    lower: np.ndarray
    closed_form: Optional[np.ndarray] = None
    closed_shifted: Optional[np.ndarray] = None

    def min_slack(self) -> float:
        return float(np.min(self.slack))

    def rows(self):
        for t in range(self.d.size):
            yield (
                int(self.k[t]),
                int(self.set_index[t]),
                float(self.d[t]),
                float(self.delta[t]),
                float(self.bound[t]),
                float(self.slack[t]),
            )


def bound_unroll(
    orbit: Orbit,
    mapping: SemiCyclicMapping,
    chain: str = "uniform",
    K: Optional[float] = None,
    cyclic_lower: Optional[bool] = None,
) -> BoundLedger:
    """Evaluate a bound chain along an orbit.

    chain = "uniform" needs a single K < 1; "nonexpansive" is the K = 1 case;
    "variable" applies the per-set constant of the region each step leaves.
    The lower bound column is D when the scenario is audited cyclic, else 0.
    """
    part = mapping.partition
    trace = distance_trace(orbit, part.norm)
    n = trace.d.size
    gaps = _step_gaps(orbit, mapping)

    if chain == "uniform":
        Ku = float(mapping.inner.uniform_K() if K is None else K)
        if not Ku < 1.0:
            raise InvalidSpecError("uniform chain requires K < 1; use the nonexpansive chain for K = 1")
        K_step = np.full(n, Ku)
    elif chain == "nonexpansive":
        Ku = float(mapping.inner.uniform_K() if K is None else K)
        if Ku != 1.0:
            raise InvalidSpecError("nonexpansive chain is the K = 1 case")
        K_step = np.ones(n)
    elif chain == "variable":
        Ks = np.asarray(mapping.inner.K_per_set)
        K_step = Ks[orbit.set_indices[:-1] - 1]
        Ku = None
    else:
        raise InvalidSpecError(f"unknown bound chain {chain!r}")

    dtr = _delta_with(orbit, mapping, trace, K_step)
    bound = np.empty(n)
    bound[0] = trace.d[0]
    for k in range(1, n):
        bound[k] = K_step[k] * bound[k - 1] + (1.0 - K_step[k]) * gaps[k] + dtr.delta[k]
    slack = bound - trace.d

    if cyclic_lower is None:
        cyclic_lower = not part.intersecting
    lower = gaps.copy() if cyclic_lower else np.zeros(n)

    closed_form = closed_shifted = None
    D_uniform = part.uniform_gap()
    if chain in ("uniform", "nonexpansive") and D_uniform is not None:
        closed_form = np.empty(n)
        closed_shifted = np.empty(n)
        closed_form[0] = closed_shifted[0] = trace.d[0]
        d0, D = trace.d[0], D_uniform
        for m in range(1, n):
            if chain == "uniform":
                Km = Ku ** m
                s_nat = sum(Ku ** i * dtr.delta[m - i] for i in range(0, m))
                s_pap = sum(Ku ** i * dtr.delta[m - i] for i in range(1, m + 1))
                closed_form[m] = Km * d0 + (1.0 - Km) * D + s_nat
                closed_shifted[m] = Km * d0 + (1.0 - Km) * D + s_pap
            else:
                closed_form[m] = d0 + float(np.sum(dtr.delta[1 : m + 1]))
                sets = indicator_sets(dtr, 0, 0, m, part.p)
                up = sum(dtr.delta[m - i] for i in sets.S_plus)
                dn = sum(dtr.delta[m - i] for i in sets.S_minus)
                closed_shifted[m] = d0 + up - dn

    return BoundLedger(
        chain=chain,
        k=np.arange(n),
        set_index=orbit.set_indices[:-1].copy(),
        d=trace.d,
        delta=dtr.delta,
        bound=bound,
        slack=slack,
        lower=lower,
        closed_form=closed_form,
        closed_shifted=closed_shifted,
    )


def tail_limsup(trace: DistanceTrace, window: int) -> float:
    """limsup estimate: the maximum over the final `window` trace entries."""
    if window < 1:
        raise InvalidSpecError("tail window must be >= 1")
    if len(trace) < 2 * window:
        raise InvalidSpecError(f"trace of length {len(trace)} is too short for a window of {window}")
    return float(np.max(trace.d[-window:]))
