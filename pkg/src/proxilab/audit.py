"""Sampling-based verification of the mapping inequalities and estimation of
the per-period contraction aggregates.

Every audit draws seeded pairs (x, y) from adjacent regions, evaluates the
built maps on them, and reports a verdict with the worst observed slack
(slack = lhs - rhs, so positive means violated). Gains are measured as
ratios along actual images; pairs whose pre-impulse displacement is below
the denominator floor are skipped and counted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ImageEscapeError, InvalidSpecError
from .mappings import SemiCyclicMapping, _inner_step, apply_impulse
from .orbit import GAIN_DENOM_FLOOR, Orbit, iterate
from .spaces import (
    CyclePartition,
    cyclic_successor,
    region_point_distance,
    sample_region,
)

SLACK_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PairSample:
    """One audited pair: x in A_i, y in A_{i+1}, with their distance."""

    x: np.ndarray
    y: np.ndarray
    i: int
    d_xy: float


@dataclass(eq=False)
class Verdict:
    """Outcome of one audited inequality."""

    name: str
    holds: bool
    worst_slack: float
    witness: Optional[dict] = None
    checked: int = 0
    skipped: int = 0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "holds": bool(self.holds),
            "worst_slack": float(self.worst_slack),
            "witness": self.witness,
            "checked": int(self.checked),
            "skipped": int(self.skipped),
        }


def _verdict(name: str, slacks, witnesses, skipped: int, tol: float = SLACK_TOL) -> Verdict:
    if len(slacks) == 0:
        return Verdict(name=name, holds=True, worst_slack=float("-inf"), witness=None, checked=0, skipped=skipped)
    worst = int(np.argmax(slacks))
    return Verdict(
        name=name,
        holds=bool(slacks[worst] <= tol),
        worst_slack=float(slacks[worst]),
        witness=witnesses[worst],
        checked=len(slacks) + skipped,
        skipped=skipped,
    )


def _pair_witness(s: PairSample) -> dict:
    return {"kind": "pair", "i": int(s.i), "x": s.x.tolist(), "y": s.y.tolist(), "d_xy": float(s.d_xy)}


def sample_adjacent_pairs(partition: CyclePartition, count: int, seed: int) -> list:
    """count seeded uniform pairs per adjacency (i, i+1), wrap included."""
    if count < 1:
        raise InvalidSpecError("sample count must be >= 1")
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(1, partition.p + 1):
        j = cyclic_successor(i, partition.p)
        A = partition.regions[i - 1]
        B = partition.regions[j - 1]
        for _ in range(count):
            x = sample_region(A, rng)
            y = sample_region(B, rng)
            samples.append(PairSample(x=x, y=y, i=i, d_xy=partition.norm.distance(x, y)))
    return samples


def _images(mapping: SemiCyclicMapping, s: PairSample, phase: int):
    """Pre- and post-impulse images of both sample points at one step index."""
    part = mapping.partition
    u, ju = _inner_step(mapping.inner, part, s.x, s.i)
    v, jv = _inner_step(mapping.inner, part, s.y, cyclic_successor(s.i, part.p))
    Tx = apply_impulse(mapping.impulse, part, u, ju, phase)
    Ty = apply_impulse(mapping.impulse, part, v, jv, phase)
    return u, v, Tx, Ty


def audit_inner_contraction(
    mapping: SemiCyclicMapping,
    samples: Sequence[PairSample],
    mode: str = "uniform_K",
    K: Optional[float] = None,
    phase: int = 0,
) -> Verdict:
    """Inner contraction inequality.

    uniform_K checks d(T-x, T-y) <= K d(x,y) + (1-K) D on the sampled cross
    pairs; per_set_K checks the set-dependent form along one-step orbit
    segments grown from each sample's x.
    """
    part = mapping.partition
    slacks, wits = [], []
    if mode == "uniform_K":
        Ku = float(mapping.inner.uniform_K() if K is None else K)
        for s in samples:
            u, v, _, _ = _images(mapping, s, phase)
            lhs = part.norm.distance(u, v)
            rhs = Ku * s.d_xy + (1.0 - Ku) * part.adjacent_gap(s.i)
            slacks.append(lhs - rhs)
            wits.append(_pair_witness(s))
        return _verdict("inner_contraction", slacks, wits, 0)
    if mode == "per_set_K":
        for s in samples:
            Ki = mapping.inner.K_of(s.i)
            u1, j1 = _inner_step(mapping.inner, part, s.x, s.i)
            x1 = apply_impulse(mapping.impulse, part, u1, j1, phase)
            u2, _ = _inner_step(mapping.inner, part, x1, j1)
            lhs = part.norm.distance(u2, u1)
            rhs = Ki * part.norm.distance(x1, s.x) + (1.0 - Ki) * part.adjacent_gap(s.i)
            slacks.append(lhs - rhs)
            wits.append(_pair_witness(s))
        return _verdict("inner_contraction_per_set", slacks, wits, 0)
    raise InvalidSpecError(f"unknown contraction audit mode {mode!r}")


def audit_gain(mapping: SemiCyclicMapping, samples: Sequence[PairSample], phase: int = 0):
    """Empirical impulse gains: the nonexpansive ceiling and the cyclic floor.

    Returns (gain_le_one, gain_floor) verdicts. The floor compares each
    measured gain against D / (D + K (d(x,y) - D)); with D = 0 it is vacuous.
    """
    part = mapping.partition
    Ku = mapping.inner.uniform_K()
    ceil_slacks, ceil_wits = [], []
    floor_slacks, floor_wits = [], []
    skipped = 0
    for s in samples:
        u, v, Tx, Ty = _images(mapping, s, phase)
        den = part.norm.distance(u, v)
        if den < GAIN_DENOM_FLOOR:
            skipped += 1
            continue
        m_hat = part.norm.distance(Tx, Ty) / den
        ceil_slacks.append(m_hat - 1.0)
        ceil_wits.append(_pair_witness(s))
        D = part.adjacent_gap(s.i)
        denom = D + Ku * (s.d_xy - D)
        floor = 0.0 if D <= 0.0 or denom <= 1e-15 else D / denom
        floor_slacks.append(floor - m_hat)
        floor_wits.append(_pair_witness(s))
    return (
        _verdict("gain_le_one", ceil_slacks, ceil_wits, skipped),
        _verdict("gain_floor", floor_slacks, floor_wits, skipped),
    )


def audit_strict(mapping: SemiCyclicMapping, samples: Sequence[PairSample], phase: int = 0):
    """Strict composite bound and its one-step orbit-segment form.

    Composite: d(Tx, Ty) <= K m d(x,y) + (1 - K m) D with the measured gain m.
    Segment: d(T^2 x, Tx) <= K_i m d(x, Tx) + m (1 - K_i) D from each sample's x.
    Returns (strict_composite, strict_segment).
    """
    part = mapping.partition
    Ku = mapping.inner.uniform_K()
    comp_slacks, comp_wits = [], []
    seg_slacks, seg_wits = [], []
    comp_skip = seg_skip = 0
    for s in samples:
        u, v, Tx, Ty = _images(mapping, s, phase)
        den = part.norm.distance(u, v)
        D = part.adjacent_gap(s.i)
        if den < GAIN_DENOM_FLOOR:
            comp_skip += 1
        else:
            m_hat = part.norm.distance(Tx, Ty) / den
            lhs = part.norm.distance(Tx, Ty)
            rhs = Ku * m_hat * s.d_xy + (1.0 - Ku * m_hat) * D
            comp_slacks.append(lhs - rhs)
            comp_wits.append(_pair_witness(s))
        Ki = mapping.inner.K_of(s.i)
        u1, j1 = _inner_step(mapping.inner, part, s.x, s.i)
        x1 = apply_impulse(mapping.impulse, part, u1, j1, phase)
        u2, j2 = _inner_step(mapping.inner, part, x1, j1)
        x2 = apply_impulse(mapping.impulse, part, u2, j2, phase + 1)
        seg_den = part.norm.distance(u2, u1)
        if seg_den < GAIN_DENOM_FLOOR:
            seg_skip += 1
            continue
        m_seg = part.norm.distance(x2, x1) / seg_den
        lhs = part.norm.distance(x2, x1)
        rhs = Ki * m_seg * part.norm.distance(x1, s.x) + m_seg * (1.0 - Ki) * D
        seg_slacks.append(lhs - rhs)
        seg_wits.append(_pair_witness(s))
    return (
        _verdict("strict_composite", comp_slacks, comp_wits, comp_skip),
        _verdict("strict_segment", seg_slacks, seg_wits, seg_skip),
    )


def audit_cyclic_floor(mapping: SemiCyclicMapping, samples: Sequence[PairSample], phase: int = 0) -> Verdict:
    """d(Tx, Ty) >= D of the sample's adjacency: cyclic versus merely semi-cyclic."""
    part = mapping.partition
    slacks, wits = [], []
    for s in samples:
        _, _, Tx, Ty = _images(mapping, s, phase)
        slacks.append(part.adjacent_gap(s.i) - part.norm.distance(Tx, Ty))
        wits.append(_pair_witness(s))
    return _verdict("cyclic_floor", slacks, wits, 0)


def audit_membership(mapping: SemiCyclicMapping, samples: Sequence[PairSample], phase: int = 0):
    """Region membership of the inner image (successor region) and of the
    composite image (the sample's region or its successor).

    Returns (inner_membership, composite_membership); slack is the distance
    to the allowed set, judged against the partition's membership tolerance.
    """
    part = mapping.partition
    inner_slacks, inner_wits = [], []
    comp_slacks, comp_wits = [], []
    for s in samples:
        j = cyclic_successor(s.i, part.p)
        u, ju = _inner_step(mapping.inner, part, s.x, s.i)
        inner_slacks.append(region_point_distance(part.norm, part.regions[j - 1], u))
        inner_wits.append(_pair_witness(s))
        w = apply_impulse(mapping.impulse, part, u, ju, phase)
        dist_own = region_point_distance(part.norm, part.regions[s.i - 1], w)
        dist_next = region_point_distance(part.norm, part.regions[j - 1], w)
        comp_slacks.append(min(dist_own, dist_next))
        comp_wits.append(_pair_witness(s))
    tol = part.membership_tol
    return (
        _verdict("inner_membership", inner_slacks, inner_wits, 0, tol=tol),
        _verdict("composite_membership", comp_slacks, comp_wits, 0, tol=tol),
    )


# ---------------------------------------------------------------------------
# Contraction aggregates from probe orbits
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class ContractionProfile:
    """Aggregate contraction diagnostics estimated over probe orbits."""

    K_bar: float
    K_hat: float
    K_hat_lt_1: bool
    K_hat_seq: list            # one recursion sequence per probe orbit
    eps0: float
    eps0_sums_tend_to_zero: bool
    gain_windows_used: int
    gain_windows_skipped: int
    sup_gain: float = float("nan")

    def limsup_ceiling(self, D: float) -> float:
        """Ceiling on the tail limsup when the aggregate factor is below one:
        (1 + sup measured gain / (1 - K_hat)) * D."""
        if not (self.K_hat_lt_1 and np.isfinite(self.sup_gain)):
            return float("inf")
        return (1.0 + self.sup_gain / (1.0 - self.K_hat)) * D

    def to_dict(self) -> dict:
        return {
            "K_bar": float(self.K_bar),
            "K_hat": float(self.K_hat),
            "K_hat_lt_1": bool(self.K_hat_lt_1),
            "K_hat_seq": [[float(v) for v in seq] for seq in self.K_hat_seq],
            "eps0": float(self.eps0),
            "eps0_sums_tend_to_zero": bool(self.eps0_sums_tend_to_zero),
            "gain_windows_used": int(self.gain_windows_used),
            "gain_windows_skipped": int(self.gain_windows_skipped),
            "sup_gain": float(self.sup_gain),
        }


def _khat_blocks(mapping: SemiCyclicMapping, orb: Orbit) -> list:
    """Per-period factors prod_{i=1..p-1} m_{i+jp} K(region of x_{i+jp-1})."""
    p = mapping.partition.p
    Ks = mapping.inner.K_per_set
    blocks = []
    j = 0
    while (j + 1) * p - 1 < orb.gains.size:
        prod = 1.0
        ok = True
        for i in range(1, p):
            t = i + j * p
            g = orb.gains[t]
            if np.isnan(g):
                ok = False
                break
            prod *= g * Ks[orb.set_indices[t - 1] - 1]
        if not ok:
            break
        blocks.append(prod)
        j += 1
    return blocks


def estimate_khat(mapping: SemiCyclicMapping, probe_orbits: Sequence[Orbit], periods: int = 16) -> ContractionProfile:
    """Aggregate factor: K_bar times the worst observed per-period gain product.

    The sup over all points is approximated by the max over the probe orbits
    and their first `periods` period windows; windows containing an
    unmeasurable gain are skipped and counted.
    """
    p = mapping.partition.p
    if not probe_orbits:
        raise InvalidSpecError("estimate_khat needs at least one probe orbit")
    for orb in probe_orbits:
        if orb.steps < 3 * p:
            raise InvalidSpecError(f"probe orbits must have at least {3 * p} steps")
    Ks = mapping.inner.K_per_set
    K_bar = float(np.prod(Ks[: p - 1]))
    best = None
    sup_gain = None
    used = skipped = 0
    seqs = []
    for orb in probe_orbits:
        g = orb.gains
        finite = g[~np.isnan(g)]
        if finite.size:
            peak = float(np.max(np.abs(finite)))
            sup_gain = peak if sup_gain is None else max(sup_gain, peak)
        for n in range(periods):
            lo, hi = n * p + 1, (n + 1) * p - 1
            if hi >= g.size:
                break
            window = g[lo : hi + 1]
            if np.any(np.isnan(window)):
                skipped += 1
                continue
            prod = float(np.prod(window))
            best = prod if best is None else max(best, prod)
            used += 1
        blocks = _khat_blocks(mapping, orb)
        seqs.append(list(np.cumprod(blocks)) if blocks else [])
    K_hat = K_bar * best if best is not None else K_bar
    return ContractionProfile(
        K_bar=K_bar,
        K_hat=float(K_hat),
        K_hat_lt_1=bool(K_hat < 1.0),
        K_hat_seq=seqs,
        eps0=float("nan"),
        eps0_sums_tend_to_zero=False,
        gain_windows_used=used,
        gain_windows_skipped=skipped,
        sup_gain=float(sup_gain) if sup_gain is not None else float("nan"),
    )


def estimate_eps0(mapping: SemiCyclicMapping, probe_orbits: Sequence[Orbit], zero_tol: float = 1e-6):
    """Weighted partial sums of the gain deviations along each probe orbit.

    S(M) = sum_{k=1..M} (prod_{l=k+1..M} K_l) (m_k - 1), with K_l the
    constant of the region step l leaves; newer terms carry weight one and
    older ones are discounted. Returns (eps0, tends_to_zero) where eps0 is
    the sup of S over the tail windows of every orbit.
    """
    p = mapping.partition.p
    if not probe_orbits:
        raise InvalidSpecError("estimate_eps0 needs at least one probe orbit")
    for orb in probe_orbits:
        if orb.steps < 10 * p:
            raise InvalidSpecError(f"eps0 probes must have at least {10 * p} steps")
    Ks = np.asarray(mapping.inner.K_per_set)
    sup = -np.inf
    tails_small = True
    for orb in probe_orbits:
        g = orb.gains
        n = g.size
        K_step = Ks[orb.set_indices[:-1] - 1]
        # running form: S(M) = K_M * S(M-1) + (m_M - 1)
        S = 0.0
        values = np.zeros(n)
        for k in range(1, n):
            term = 0.0 if np.isnan(g[k]) else g[k] - 1.0
            S = K_step[k] * S + term
            values[k] = S
        tail = values[max(1, n - max(p, n // 4)) :]
        sup = max(sup, float(np.max(tail)))
        if abs(values[n - 1]) > zero_tol:
            tails_small = False
    return float(sup), tails_small


def probe_orbits_for(
    mapping: SemiCyclicMapping,
    n_orbits: int = 32,
    steps: Optional[int] = None,
    periods: int = 16,
    seed: int = 0,
) -> list:
    """Seeded probe orbits cycling the regions as starting sets.

    Escaping probes are truncated to their usable prefix; probes too short
    for the aggregate estimators are dropped.
    """
    part = mapping.partition
    p = part.p
    if steps is None:
        steps = max(10 * p, periods * p + p + 2)
    rng = np.random.default_rng(seed)
    orbits = []
    for t in range(n_orbits):
        r = t % p
        start = part.regions[r].reference_point() if t < p else sample_region(part.regions[r], rng)
        try:
            orbits.append(iterate(mapping, start, r + 1, steps))
        except ImageEscapeError as err:
            if err.partial_orbit is not None and err.partial_orbit.steps >= 10 * p:
                orbits.append(err.partial_orbit)
    return orbits


@dataclass(eq=False)
class AuditReport:
    """All verdicts for one mapping at one seed, plus the contraction profile."""

    verdicts: dict
    sample_count: int
    seed: int
    phase: int
    profile: Optional[ContractionProfile]
    probe_escapes: int = 0

    def holds(self, *names: str) -> bool:
        return all(self.verdicts[n].holds for n in names)

    def to_dict(self) -> dict:
        return {
            "sample_count": int(self.sample_count),
            "seed": int(self.seed),
            "phase": int(self.phase),
            "verdicts": {k: v.to_dict() for k, v in sorted(self.verdicts.items())},
            "profile": self.profile.to_dict() if self.profile is not None else None,
            "probe_escapes": int(self.probe_escapes),
        }


def run_audit(
    mapping: SemiCyclicMapping,
    count: int = 200,
    seed: int = 0,
    phase: int = 0,
    probe_orbit_count: int = 32,
    probe_periods: int = 16,
) -> AuditReport:
    """Full audit: every inequality verdict plus the contraction profile."""
    samples = sample_adjacent_pairs(mapping.partition, count, seed)
    inner_mem, comp_mem = audit_membership(mapping, samples, phase)
    gain_le_one, gain_floor = audit_gain(mapping, samples, phase)
    strict_comp, strict_seg = audit_strict(mapping, samples, phase)
    verdicts = {
        "inner_membership": inner_mem,
        "composite_membership": comp_mem,
        "inner_contraction": audit_inner_contraction(mapping, samples, "uniform_K", phase=phase),
        "inner_contraction_per_set": audit_inner_contraction(mapping, samples, "per_set_K", phase=phase),
        "gain_le_one": gain_le_one,
        "gain_floor": gain_floor,
        "strict_composite": strict_comp,
        "strict_segment": strict_seg,
        "cyclic_floor": audit_cyclic_floor(mapping, samples, phase),
    }
    probes = probe_orbits_for(mapping, probe_orbit_count, periods=probe_periods, seed=seed + 1)
    profile = None
    escapes = probe_orbit_count - len(probes)
    usable = [o for o in probes if o.steps >= 3 * mapping.partition.p]
    if usable:
        profile = estimate_khat(mapping, usable, probe_periods)
        eps_orbits = [o for o in usable if o.steps >= 10 * mapping.partition.p]
        if eps_orbits:
            profile.eps0, profile.eps0_sums_tend_to_zero = estimate_eps0(mapping, eps_orbits)
    return AuditReport(
        verdicts=verdicts,
        sample_count=len(samples),
        seed=seed,
        phase=phase,
        profile=profile,
        probe_escapes=escapes,
    )
