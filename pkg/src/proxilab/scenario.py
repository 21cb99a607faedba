"""Scenario files: a small JSON schema describing a space, a cycle partition,
a mapping, run parameters and the named checks to evaluate.

Two kinds exist: "generic" scenarios spell the geometry out, "impulsive"
scenarios give the scalar difference-equation parameters and are lowered to
the same machinery. Parsing normalizes the document (defaults filled, keys
ordered) so that parse -> emit -> parse is stable and the content hash is
reproducible.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import InvalidSpecError
from .impulsive import ImpulsiveSystemSpec, build_impulsive_system
from .mappings import (
    GainSchedule,
    SemiCyclicMapping,
    build_anchor_impulse,
    build_anchor_inner,
    build_projection_inner,
    identity_impulse,
)
from .spaces import Ball, Box, NormSpec, Polytope, build_partition

KNOWN_CHECKS = (
    "audit_inner",
    "audit_membership",
    "audit_gain_le_one",
    "audit_gain_floor",
    "audit_strict",
    "audit_strict_violated",
    "audit_cyclic_floor",
    "audit_cyclic_floor_violated",
    "limit_to_D",
    "limit_to_zero",
    "limit_bounded",
    "ledger_sound",
    "cyclic_floor_trace",
    "khat_lt_1",
    "eps0_finite",
    "uniqueness",
    "non_uniqueness",
    "fixed_point",
    "strict_meta",
    "squeeze",
    "limiting_pair_gap",
    "escape_reported",
)

DEFAULT_TOLERANCES = {
    "membership": 1e-9,
    "slack": 1e-9,
    "limit": 1e-6,
    "uniqueness": 1e-6,
    "fixed_point": 1e-8,
    "gap": 1e-4,
}

DEFAULT_RUN = {
    "iters": 100,
    "seed": 0,
    "samples": 200,
    "window": None,  # defaults to 5p at build time
    "probe_orbits": 32,
    "probe_periods": 16,
}


@dataclass(eq=False)
class ScenarioConfig:
    """Validated scenario: the normalized document plus built objects."""

    name: str
    kind: str
    document: dict                 # normalized, JSON-serializable echo
    mapping: SemiCyclicMapping
    x0_list: list                  # list of float arrays
    start_indices: list            # Optional[int] per start
    iters: int
    seed: int
    samples: int
    window: int
    probe_orbits: int
    probe_periods: int
    tolerances: dict
    checks: list
    system: Optional[ImpulsiveSystemSpec] = None

    @property
    def content_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.document).encode()).hexdigest()


def canonical_json(document: dict) -> str:
    return json.dumps(document, sort_keys=True, indent=2, allow_nan=False)


def _require(cond: bool, msg: str):
    if not cond:
        raise InvalidSpecError(msg)


def _parse_norm(doc: dict) -> NormSpec:
    kind = doc.get("kind", "euclidean")
    if kind == "euclidean":
        return NormSpec()
    if kind == "lp":
        _require("q" in doc, "lp norm requires an exponent q")
        return NormSpec(kind="lp", q=float(doc["q"]))
    raise InvalidSpecError(f"unknown norm kind {kind!r}")


def _parse_region(doc: dict, tol: float):
    shape = doc.get("shape")
    if shape == "box":
        return Box(lo=doc["lo"], hi=doc["hi"], tolerance=tol)
    if shape == "ball":
        return Ball(center=doc["center"], radius=float(doc["radius"]), tolerance=tol)
    if shape == "polytope":
        halfspaces = doc.get("halfspaces", [])
        _require(len(halfspaces) > 0, "polytope needs at least one halfspace")
        A = np.asarray([h["a"] for h in halfspaces], dtype=float)
        b = np.asarray([h["b"] for h in halfspaces], dtype=float)
        bbox = None
        if "bbox" in doc:
            bbox = (doc["bbox"]["lo"], doc["bbox"]["hi"])
        return Polytope(
            halfspace_normals=A,
            halfspace_offsets=b,
            interior_point=doc["interior_point"],
            tolerance=tol,
            bbox=bbox,
        )
    raise InvalidSpecError(f"unknown region shape {shape!r}")


def _normalized_document(raw: dict) -> dict:
    try:
        doc = json.loads(json.dumps(raw, allow_nan=False))  # deep copy, rejects non-JSON content
    except (TypeError, ValueError) as err:
        raise InvalidSpecError(f"scenario document is not plain JSON data: {err}") from err
    doc.setdefault("kind", "generic")
    tolerances = dict(DEFAULT_TOLERANCES)
    tolerances.update(doc.get("tolerances", {}))
    doc["tolerances"] = tolerances
    run = dict(DEFAULT_RUN)
    run.update(doc.get("run", {}))
    doc["run"] = run
    doc.setdefault("checks", [])
    return doc


def parse_scenario(source) -> ScenarioConfig:
    """Parse and validate a scenario from a path, JSON text, or a dict."""
    if isinstance(source, dict):
        raw = source
    else:
        path = Path(source)
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as err:
            raise InvalidSpecError(f"scenario {path} is not valid JSON: {err}") from err
    _require(isinstance(raw, dict), "scenario document must be a JSON object")
    doc = _normalized_document(raw)

    name = doc.get("name")
    _require(isinstance(name, str) and name, "scenario needs a nonempty name")
    kind = doc["kind"]
    _require(kind in ("generic", "impulsive"), f"unknown scenario kind {kind!r}")

    checks = doc["checks"]
    _require(isinstance(checks, list), "checks must be a list of names")
    for c in checks:
        _require(c in KNOWN_CHECKS, f"unknown check name {c!r}")

    tol = doc["tolerances"]
    run = doc["run"]
    _require(int(run["iters"]) >= 1, "run.iters must be >= 1")

    system = None
    try:
        mapping, x0_list, system = _build_objects(doc, kind, run, tol)
    except (KeyError, TypeError, IndexError) as err:
        raise InvalidSpecError(f"scenario {name!r} is missing or mistypes a field: {err!r}") from err

    starts = run.get("start_index")
    if starts is None:
        start_indices = [None] * len(x0_list)
    else:
        _require(len(starts) == len(x0_list), "run.start_index must match run.x0 in length")
        start_indices = [int(s) for s in starts]

    p = mapping.partition.p
    window = run["window"]
    window = int(window) if window else 5 * p

    return ScenarioConfig(
        name=name,
        kind=kind,
        document=doc,
        mapping=mapping,
        x0_list=x0_list,
        start_indices=start_indices,
        iters=int(run["iters"]),
        seed=int(run["seed"]),
        samples=int(run["samples"]),
        window=window,
        probe_orbits=int(run["probe_orbits"]),
        probe_periods=int(run["probe_periods"]),
        tolerances=tol,
        checks=list(checks),
        system=system,
    )


def _build_objects(doc, kind, run, tol):
    system = None
    if kind == "impulsive":
        sys_doc = doc.get("system")
        _require(isinstance(sys_doc, dict), "impulsive scenario needs a system block")
        system = ImpulsiveSystemSpec(
            base_gain=float(sys_doc["a"]),
            pattern=tuple(sys_doc["pattern"]),
            target_gap=float(sys_doc.get("D", 2.0)),
            halfwidth=float(sys_doc.get("halfwidth", 1.0)),
        )
        mapping = build_impulsive_system(system)
        x0_raw = run.get("x0", [system.target_gap / 2.0 + system.halfwidth / 2.0])
        x0_list = [np.asarray([float(v)]) if np.isscalar(v) else np.asarray(v, dtype=float) for v in x0_raw]
    else:
        space = doc.get("space", {})
        norm = _parse_norm(space.get("norm", {}))
        dimension = int(space.get("dimension", 0))
        regions_doc = doc.get("regions", [])
        _require(len(regions_doc) >= 2, "generic scenario needs at least two regions")
        regions = [_parse_region(r, tol["membership"]) for r in regions_doc]
        if dimension:
            _require(
                all(r.dimension == dimension for r in regions),
                "regions disagree with the declared space dimension",
            )
        partition = build_partition(regions, norm, tol["membership"])

        map_doc = doc.get("mapping", {})
        inner_doc = map_doc.get("inner", {})
        inner_kind = inner_doc.get("kind", "anchor_segment")
        K = inner_doc.get("K", 0.5)
        if inner_kind == "anchor_segment":
            _require("anchors" in inner_doc, "anchor_segment inner map needs anchors")
            inner = build_anchor_inner(partition, inner_doc["anchors"], K)
        elif inner_kind == "projection_contraction":
            inner = build_projection_inner(partition, K)
        else:
            raise InvalidSpecError(f"unknown inner map kind {inner_kind!r}")

        imp_doc = map_doc.get("impulse", {"kind": "identity"})
        imp_kind = imp_doc.get("kind", "identity")
        if imp_kind == "identity":
            impulse = identity_impulse()
        elif imp_kind == "anchor_scaling":
            anchors = imp_doc.get("anchors", inner_doc.get("anchors"))
            _require(anchors is not None, "anchor_scaling impulse needs anchors")
            impulse = build_anchor_impulse(partition, anchors, GainSchedule(tuple(imp_doc["pattern"])))
        else:
            raise InvalidSpecError(f"unknown impulse kind {imp_kind!r}")
        mapping = SemiCyclicMapping(partition=partition, inner=inner, impulse=impulse)
        x0_raw = run.get("x0")
        _require(isinstance(x0_raw, list) and len(x0_raw) >= 1, "run.x0 must list at least one starting point")
        x0_list = [np.asarray(v, dtype=float).reshape(-1) for v in x0_raw]
    return mapping, x0_list, system


def bundled_scenario_names() -> list:
    names = []
    for entry in resources.files("proxilab").joinpath("scenarios").iterdir():
        if entry.name.endswith(".json"):
            names.append(entry.name[: -len(".json")])
    return sorted(names)


def resolve_scenario_path(ref: str) -> Path:
    """A filesystem path, or the name of a bundled scenario."""
    path = Path(ref)
    if path.exists():
        return path
    name = ref[: -len(".json")] if ref.endswith(".json") else ref
    candidate = resources.files("proxilab").joinpath("scenarios", f"{name}.json")
    if candidate.is_file():
        return Path(str(candidate))
    raise InvalidSpecError(f"scenario {ref!r} is neither a file nor a bundled scenario name")
