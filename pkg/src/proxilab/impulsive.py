"""Scalar impulsive difference equation cast into the cyclic framework.

A plant contracting toward an operating point at rate a, disturbed every step
by an impulse that rescales the offset by a scheduled gain (possibly above
one), becomes a 2-cyclic mapping on two sign-symmetric intervals. Stability
despite transient expansion reduces to the per-period excess factor
prod(a * gain) staying below one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ImageEscapeError, InvalidSpecError
from .mappings import (
    GainSchedule,
    SemiCyclicMapping,
    build_anchor_impulse,
    build_anchor_inner,
    identity_impulse,
)
from .orbit import distance_trace, iterate
from .proximity import ProximityVerdict, detect_limit
from .spaces import Box, NormSpec, build_partition

DEFAULT_SWEEP_STEPS = 3000
_SETTLE_EXCESS = 1e-8


@dataclass(frozen=True)
class ImpulsiveSystemSpec:
    """Plant gain a in (0, 1], impulse pattern, gap between the two operating
    regions, and the region halfwidth that bounds how much transient
    expansion the state can absorb before escaping."""

    base_gain: float
    pattern: tuple
    target_gap: float = 2.0
    halfwidth: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.base_gain) and 0.0 < self.base_gain <= 1.0):
            raise InvalidSpecError("base gain must lie in (0, 1]")
        if not (np.isfinite(self.target_gap) and self.target_gap >= 0.0):
            raise InvalidSpecError("target gap must be >= 0")
        if not (np.isfinite(self.halfwidth) and self.halfwidth > 0.0):
            raise InvalidSpecError("region halfwidth must be > 0")
        object.__setattr__(self, "pattern", tuple(float(v) for v in self.pattern))
        GainSchedule(self.pattern)  # validates entries

    @property
    def per_period_factor(self) -> float:
        """Excess multiplier over one full pattern period: prod(a * lambda_k)."""
        return float(np.prod([self.base_gain * lam for lam in self.pattern]))

    @property
    def stable_regime(self) -> bool:
        return self.per_period_factor < 1.0

    def max_safe_excess(self, horizon_periods: int = 64) -> float:
        """Largest starting excess whose whole trajectory stays inside the region.

        Zero when the per-period factor is >= 1 and some impulse amplifies
        (every interior start other than the anchor escapes eventually).
        """
        worst = 0.0
        prefix = 1.0
        for k in range(horizon_periods * len(self.pattern)):
            lam = self.pattern[k % len(self.pattern)]
            amp = prefix * self.base_gain * lam  # excess multiplier at the step-k impulse
            worst = max(worst, amp)
            prefix *= self.base_gain * lam
        if self.per_period_factor > 1.0:
            return 0.0
        return self.halfwidth / max(worst, 1.0)


def build_impulsive_system(spec: ImpulsiveSystemSpec) -> SemiCyclicMapping:
    """2-cyclic mapping on [D/2, D/2 + h] and its mirror image, with the plant
    contraction as inner map and the scheduled impulse about the anchors."""
    half_gap = spec.target_gap / 2.0
    a1 = Box(lo=[half_gap], hi=[half_gap + spec.halfwidth])
    a2 = Box(lo=[-half_gap - spec.halfwidth], hi=[-half_gap])
    partition = build_partition([a1, a2], NormSpec())
    anchors = [[half_gap], [-half_gap]]
    inner = build_anchor_inner(partition, anchors, spec.base_gain)
    if all(lam == 1.0 for lam in spec.pattern):
        impulse = identity_impulse()
    else:
        impulse = build_anchor_impulse(partition, anchors, GainSchedule(spec.pattern))
    return SemiCyclicMapping(partition=partition, inner=inner, impulse=impulse)


@dataclass(eq=False)
class StabilityResult:
    """Outcome of one impulsive-system simulation."""

    verdict: ProximityVerdict
    escape_step: Optional[int]
    orbit: object
    spec: ImpulsiveSystemSpec

    @property
    def escaped(self) -> bool:
        return self.escape_step is not None


def simulate_stability(
    spec: ImpulsiveSystemSpec,
    x0: float,
    N: int,
    window: int = 10,
    limit_tol: float = 1e-6,
    early_settle: bool = False,
) -> StabilityResult:
    """Iterate the built system and classify the step-distance limit.

    Escape is an outcome, not a crash: the verdict degrades to divergent and
    the offending step is reported. early_settle stops once the trace has
    verifiably converged to the target gap, keeping sweeps cheap.
    """
    mapping = build_impulsive_system(spec)
    settle_kwargs = {}
    if early_settle:
        settle_kwargs = dict(
            settle_to=spec.target_gap,
            settle_tol=min(_SETTLE_EXCESS, 0.3 * limit_tol),
            settle_window=window,
            min_steps=4 * window,
        )
    try:
        orb = iterate(mapping, [float(x0)], None, N, **settle_kwargs)
    except ImageEscapeError as err:
        orb = err.partial_orbit
        verdict = ProximityVerdict("divergent", float("nan"), float("nan"), float("nan"), window)
        if orb is not None and orb.steps >= 4 * window:
            trace = distance_trace(orb, mapping.partition.norm)
            est = float(np.max(trace.d[-window:]))
            verdict = ProximityVerdict("divergent", est, float("nan"), float("nan"), window)
        return StabilityResult(verdict=verdict, escape_step=err.step, orbit=orb, spec=spec)
    trace = distance_trace(orb, mapping.partition.norm)
    verdict = detect_limit(trace, spec.target_gap, tol=limit_tol, window=window)
    return StabilityResult(verdict=verdict, escape_step=None, orbit=orb, spec=spec)


def stability_sweep(
    a_values,
    lam1_values,
    lam2_values,
    target_gap: float = 2.0,
    halfwidth: float = 1.0,
    x0: Optional[float] = None,
    N: int = DEFAULT_SWEEP_STEPS,
    window: int = 10,
    limit_tol: float = 1e-6,
) -> list:
    """Grid sweep over (a, lambda_1, lambda_2): one row per cell with the
    predicted factor a^2 lambda_1 lambda_2, the observed verdict, the escape
    step if any, and whether verdict and prediction agree (escapes excluded).
    """
    if x0 is None:
        x0 = target_gap / 2.0 + halfwidth / 2.0
    rows = []
    for a in a_values:
        for l1 in lam1_values:
            for l2 in lam2_values:
                spec = ImpulsiveSystemSpec(
                    base_gain=float(a),
                    pattern=(float(l1), float(l2)),
                    target_gap=target_gap,
                    halfwidth=halfwidth,
                )
                factor = float(a) * float(a) * float(l1) * float(l2)
                res = simulate_stability(spec, x0, N, window=window, limit_tol=limit_tol, early_settle=True)
                if res.escaped:
                    agrees = None
                else:
                    agrees = bool((res.verdict.limit_class == "to_D") == (factor < 1.0))
                rows.append(
                    {
                        "a": float(a),
                        "lambda_1": float(l1),
                        "lambda_2": float(l2),
                        "factor": factor,
                        "verdict": "escape" if res.escaped else res.verdict.limit_class,
                        "escape_step": res.escape_step,
                        "agrees": agrees,
                    }
                )
    return rows
