"""Scenario pipeline: audits, orbits, bound ledgers, proximity checks, and the
machine-readable run report.

The JSON report is deterministic for a fixed scenario document and seed
(sorted keys, no timestamps, NaN serialized as null); the CSV traces carry
the exact header `k,set_index,d_k,delta_k,bound,slack`.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .audit import run_audit
from .errors import ImageEscapeError, InvalidSpecError
from .mappings import classify
from .orbit import bound_unroll, distance_trace, iterate, tail_limsup
from .proximity import (
    SqueezeVerdict,
    detect_limit,
    extract_limiting_set,
    fixed_point_check,
    result4_check,
    uniqueness_check,
)
from .scenario import ScenarioConfig, parse_scenario, resolve_scenario_path
from .spaces import cyclic_successor

TRACE_HEADER = ["k", "set_index", "d_k", "delta_k", "bound", "slack"]
NON_UNIQUE_SPREAD_FLOOR = 0.1


def _sanitize(obj):
    """Make a report structure strictly JSON-serializable and deterministic."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


@dataclass(eq=False)
class RunReport:
    """Everything one scenario run produced, ready for serialization."""

    scenario: dict
    scenario_hash: str
    audit: dict
    classification: dict
    orbits: list
    limiting_set: Optional[dict]
    uniqueness: Optional[dict]
    fixed_point: Optional[dict]
    squeeze: Optional[dict]
    checks: dict
    all_checks_pass: bool
    version: str = __version__

    def to_dict(self) -> dict:
        return _sanitize(
            {
                "version": self.version,
                "scenario": self.scenario,
                "scenario_hash": self.scenario_hash,
                "audit": self.audit,
                "classification": self.classification,
                "orbits": self.orbits,
                "limiting_set": self.limiting_set,
                "uniqueness": self.uniqueness,
                "fixed_point": self.fixed_point,
                "squeeze": self.squeeze,
                "checks": self.checks,
                "all_checks_pass": self.all_checks_pass,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _primary_chain(mapping) -> str:
    Ks = mapping.inner.K_per_set
    if len(set(Ks)) > 1:
        return "variable"
    return "nonexpansive" if Ks[0] == 1.0 else "uniform"


def _squeeze_from_orbits(cfg: ScenarioConfig, orbits) -> Optional[SqueezeVerdict]:
    """Drive the squeezing check with same-region subsequences of the first
    two orbits and the opposite-region subsequence of the first."""
    usable = [o for o in orbits if o is not None]
    if len(usable) < 2:
        return None
    first = usable[0]
    mate = next((o for o in usable[1:] if o.start_index == first.start_index), None)
    if mate is None:
        return None
    part = cfg.mapping.partition
    p = part.p
    i = first.start_index
    x_seq = first.points[0::p]
    y_seq = first.points[1::p]
    z_seq = mate.points[0::p]
    return result4_check(
        part.norm,
        part.regions[i - 1],
        part.regions[cyclic_successor(i, p) - 1],
        x_seq,
        z_seq,
        y_seq,
        D=part.adjacent_gap(i),
        gap_tol=cfg.tolerances["gap"],
        tol=cfg.tolerances["limit"],
    )


def run_pipeline(cfg: ScenarioConfig) -> RunReport:
    """Execute the configured scenario end to end and assemble the report."""
    mapping = cfg.mapping
    part = mapping.partition
    tol = cfg.tolerances

    audit = run_audit(
        mapping,
        count=cfg.samples,
        seed=cfg.seed,
        probe_orbit_count=cfg.probe_orbits,
        probe_periods=cfg.probe_periods,
    )
    klass = classify(mapping, audit)
    chain = _primary_chain(mapping)

    orbit_objects = []
    orbit_records = []
    D_uniform = part.uniform_gap()
    for x0, i0 in zip(cfg.x0_list, cfg.start_indices):
        record = {"x0": x0.tolist(), "start_index": i0, "escape_step": None}
        orb = None
        try:
            orb = iterate(mapping, x0, i0, cfg.iters)
        except ImageEscapeError as err:
            record["escape_step"] = err.step
            orb = err.partial_orbit if err.partial_orbit is not None and err.partial_orbit.steps >= 1 else None
            record["verdict"] = {"limit_class": "divergent", "limit_estimate": None, "residual": None, "target": None, "window": cfg.window}
        if orb is not None and orb.steps >= 1:
            trace = distance_trace(orb, part.norm)
            if record["escape_step"] is None:
                target_D = D_uniform if D_uniform is not None else float("nan")
                verdict = detect_limit(trace, target_D, tol=tol["limit"], window=cfg.window)
                record["verdict"] = verdict.to_dict()
                if len(trace) >= 2 * cfg.window:
                    record["tail_limsup"] = tail_limsup(trace, cfg.window)
                    if audit.profile is not None and D_uniform is not None:
                        record["limsup_ceiling"] = audit.profile.limsup_ceiling(D_uniform)
            ledger = bound_unroll(orb, mapping, chain=chain)
            record["ledger"] = {
                "chain": chain,
                "min_slack": ledger.min_slack(),
                "floor_min_slack": float(np.min(trace.d - ledger.lower)),
                "steps": int(trace.d.size),
            }
            record["_ledger_obj"] = ledger
            record["start_index"] = orb.start_index
        orbit_objects.append(orb)
        orbit_records.append(record)

    healthy = [o for o, r in zip(orbit_objects, orbit_records) if o is not None and r["escape_step"] is None]
    limiting = extract_limiting_set(healthy, mapping, tol["limit"]) if healthy else None

    uniqueness = None
    if len(cfg.x0_list) >= 2 and all(r["escape_step"] is None for r in orbit_records):
        uniqueness = uniqueness_check(mapping, cfg.x0_list, cfg.iters, tol["uniqueness"])

    fixed = None
    if "fixed_point" in cfg.checks and limiting is not None and limiting.conclusive:
        try:
            fixed = fixed_point_check(mapping, limiting, tol["fixed_point"])
        except InvalidSpecError:
            fixed = None

    squeeze = _squeeze_from_orbits(cfg, orbit_objects) if "squeeze" in cfg.checks else None

    checks = _evaluate_checks(cfg, audit, klass, orbit_records, limiting, uniqueness, fixed, squeeze)
    all_pass = all(c["pass"] for c in checks.values()) if checks else True

    report = RunReport(
        scenario=cfg.document,
        scenario_hash=cfg.content_hash,
        audit=audit.to_dict(),
        classification={
            name: {"holds": ev.holds, "samples": ev.samples, "worst_slack": ev.worst_slack}
            for name, ev in klass.flags.items()
        },
        orbits=[{k: v for k, v in r.items() if not k.startswith("_")} for r in orbit_records],
        limiting_set=limiting.to_dict() if limiting is not None else None,
        uniqueness=uniqueness.to_dict() if uniqueness is not None else None,
        fixed_point=fixed.to_dict() if fixed is not None else None,
        squeeze=squeeze.to_dict() if squeeze is not None else None,
        checks=checks,
        all_checks_pass=all_pass,
    )
    report._ledgers = [r.get("_ledger_obj") for r in orbit_records]  # for emission
    report._mapping = mapping
    return report


def _evaluate_checks(cfg, audit, klass, orbit_records, limiting, uniqueness, fixed, squeeze) -> dict:
    part = cfg.mapping.partition
    tol = cfg.tolerances
    verdicts = audit.verdicts
    out = {}

    def orbit_classes():
        return [r.get("verdict", {}).get("limit_class") for r in orbit_records]

    for name in cfg.checks:
        passed, detail = False, None
        if name == "audit_inner":
            passed = verdicts["inner_contraction"].holds
            detail = verdicts["inner_contraction"].worst_slack
        elif name == "audit_membership":
            passed = verdicts["inner_membership"].holds and verdicts["composite_membership"].holds
        elif name == "audit_gain_le_one":
            passed = verdicts["gain_le_one"].holds
            detail = verdicts["gain_le_one"].worst_slack
        elif name == "audit_gain_floor":
            passed = verdicts["gain_floor"].holds
            detail = verdicts["gain_floor"].worst_slack
        elif name == "audit_strict":
            passed = verdicts["strict_composite"].holds
        elif name == "audit_strict_violated":
            passed = not verdicts["strict_composite"].holds
            detail = verdicts["strict_composite"].worst_slack
        elif name == "audit_cyclic_floor":
            passed = verdicts["cyclic_floor"].holds
        elif name == "audit_cyclic_floor_violated":
            passed = not verdicts["cyclic_floor"].holds
            detail = verdicts["cyclic_floor"].worst_slack
        elif name in ("limit_to_D", "limit_to_zero", "limit_bounded"):
            want = name[len("limit_"):]
            classes = orbit_classes()
            passed = bool(classes) and all(c == want for c in classes)
            detail = classes
        elif name == "ledger_sound":
            slacks = [r["ledger"]["min_slack"] for r in orbit_records if "ledger" in r]
            passed = bool(slacks) and all(s >= -tol["slack"] for s in slacks)
            detail = min(slacks) if slacks else None
        elif name == "cyclic_floor_trace":
            floors = [r["ledger"]["floor_min_slack"] for r in orbit_records if "ledger" in r]
            passed = bool(floors) and all(f >= -tol["slack"] for f in floors)
            detail = min(floors) if floors else None
        elif name == "khat_lt_1":
            prof = audit.profile
            passed = prof is not None and prof.K_hat_lt_1
            detail = prof.K_hat if prof is not None else None
        elif name == "eps0_finite":
            prof = audit.profile
            passed = prof is not None and np.isfinite(prof.eps0)
            detail = prof.eps0 if prof is not None else None
        elif name == "uniqueness":
            passed = uniqueness is not None and uniqueness.unique is True
            detail = uniqueness.spread if uniqueness is not None else None
        elif name == "non_uniqueness":
            passed = (
                uniqueness is not None
                and uniqueness.unique is False
                and uniqueness.spread > NON_UNIQUE_SPREAD_FLOOR
            )
            detail = uniqueness.spread if uniqueness is not None else None
        elif name == "fixed_point":
            passed = fixed is not None and fixed.residual < tol["fixed_point"]
            detail = fixed.residual if fixed is not None else None
        elif name == "strict_meta":
            hyp = klass.prop_210_hypotheses_hold(part, audit)
            passed = klass.strict_matches_plain() if hyp else True
            detail = {"hypotheses": hyp}
        elif name == "squeeze":
            passed = squeeze is not None and squeeze.status == "holds"
            detail = squeeze.to_dict() if squeeze is not None else None
        elif name == "escape_reported":
            steps = [r["escape_step"] for r in orbit_records]
            passed = any(s is not None for s in steps)
            detail = steps
        elif name == "limiting_pair_gap":
            passed = False
            if limiting is not None and limiting.conclusive:
                gaps = []
                for i in sorted(limiting.terminal):
                    j = cyclic_successor(i, part.p)
                    if j in limiting.terminal:
                        got = part.norm.distance(limiting.terminal[i], limiting.terminal[j])
                        gaps.append(abs(got - part.adjacent_gap(i)))
                passed = bool(gaps) and max(gaps) <= tol["limit"]
                detail = max(gaps) if gaps else None
        else:
            raise InvalidSpecError(f"unknown check name {name!r}")
        out[name] = {"pass": bool(passed), "detail": _sanitize(detail)}
    return out


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------


def write_trace_csv(ledger, path: Path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for row in ledger.rows():
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def emit_report(
    report: RunReport,
    out_dir: Path,
    name: str,
    plots: bool = True,
    formats: tuple = ("json", "csv-bundle"),
) -> dict:
    """Write the selected artifact formats: the JSON report, the per-orbit
    CSV bundle, and (unless disabled) one rendered figure per orbit next to
    its CSV. Returns the written paths."""
    for fmt in formats:
        if fmt not in ("json", "csv-bundle"):
            raise InvalidSpecError(f"unknown report format {fmt!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"report": None, "traces": [], "figures": []}
    if "json" in formats:
        paths["report"] = out_dir / f"{name}.report.json"
        paths["report"].write_text(report.to_json())
    if "csv-bundle" in formats:
        ledgers = getattr(report, "_ledgers", [])
        for j, ledger in enumerate(ledgers):
            if ledger is None:
                continue
            csv_path = out_dir / f"{name}.orbit{j:02d}.csv"
            write_trace_csv(ledger, csv_path)
            paths["traces"].append(csv_path)
            if plots:
                from .figures import render_orbit_figure

                fig_path = out_dir / f"{name}.orbit{j:02d}.png"
                render_orbit_figure(ledger, fig_path, title=f"{name} orbit {j}")
                paths["figures"].append(fig_path)
    return paths


def execute(
    scenario_ref,
    out_dir: Optional[Path] = None,
    seed: Optional[int] = None,
    iters: Optional[int] = None,
    plots: bool = True,
):
    """Resolve, run and emit one scenario; returns (report, exit_code, paths).

    Exit code 0 when every configured check passes, 2 on a check failure.
    Parse/validation/runtime errors raise and are mapped to exit 1 by the CLI.
    """
    path = resolve_scenario_path(str(scenario_ref))
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise InvalidSpecError(f"scenario {path} is not valid JSON: {err}") from err
    if not isinstance(raw, dict):
        raise InvalidSpecError(f"scenario {path} must contain a JSON object")
    if seed is not None:
        raw.setdefault("run", {})["seed"] = int(seed)
    if iters is not None:
        raw.setdefault("run", {})["iters"] = int(iters)
    cfg = parse_scenario(raw)
    report = run_pipeline(cfg)
    if out_dir is None:
        out_dir = path.parent
    paths = emit_report(report, Path(out_dir), cfg.name, plots=plots)
    return report, (0 if report.all_checks_pass else 2), paths


def write_sweep_csv(rows, path: Path):
    """Stability-grid CSV with the documented columns a, lambda_1, lambda_2, verdict."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["a", "lambda_1", "lambda_2", "verdict"])
        for row in rows:
            writer.writerow([repr(row["a"]), repr(row["lambda_1"]), repr(row["lambda_2"]), row["verdict"]])
