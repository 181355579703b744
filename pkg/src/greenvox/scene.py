"""Scene files: parsing, validation, unit conversion, canonical form.

A scene is a single YAML document describing units, materials, geometry
and solver/quadrature controls, plus optional per-subcommand run blocks:

    schema_version: 1
    units: {system: natural, reference_length: 1.0}
    materials:
      - region_id: 1
        poles: [{omega0: 1.5, omegap: 1.0, gamma: 0.4}]
    geometry:
      voxel_edge: 0.2
      shapes:
        - {kind: box, min_corner: [-0.4, -0.4, -0.4],
           max_corner: [0.4, 0.4, 0.4], region_id: 1}
    solver: {tol: 1.0e-10, dense_cap: 1000}
    quadrature: {n_theta: 8, n_phi: 16}
    runs:
      validate: {omega: 1.0}

Validation accumulates every schema error before failing.  For SI
scenes all quantities are converted to internal natural units on load
(the reference length defaults to the bounding-box diagonal of the
geometry), so downstream code never sees SI numbers.  The canonical
dictionary of the resolved, internal-unit scene is hashed into
config_hash; identical hashes guarantee identical numeric payloads.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .constants import UnitSystem
from .geometry import Box, GridError, MaskShape, Sphere, VoxelGrid, build_grid
from .permittivity import LorentzPole, PermittivityModel

SCHEMA_VERSION = 1

_DEFAULTS = {
    "solver": {"tol": 1e-10, "dense_cap": 1000},
    "quadrature": {"n_theta": 8, "n_phi": 16},
}

_KNOWN_TOP = {"schema_version", "units", "materials", "geometry", "solver",
              "quadrature", "runs"}
_KNOWN_RUNS = {"greens", "modes", "purcell", "ldos_check", "validate"}


class SceneError(ValueError):
    """Scene file rejected; .errors lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid scene:\n  - " + "\n  - ".join(self.errors))


@dataclass
class SceneConfig:
    """Fully validated scene, all quantities in internal natural units."""

    units: UnitSystem
    materials: dict[int, PermittivityModel]
    shapes: list
    voxel_edge: float | None
    solver_tol: float
    dense_cap: int
    n_theta: int
    n_phi: int
    runs: dict = field(default_factory=dict)
    config_hash: str = ""
    source_path: str | None = None

    def build_grid(self) -> VoxelGrid:
        return build_grid(self.shapes, self.voxel_edge)


def _number(ctx, raw, errors, positive=False):
    # YAML 1.1 reads "1e-06" (no decimal point) as a string; accept it
    if isinstance(raw, str):
        try:
            raw = float(raw)
        except ValueError:
            pass
    if not isinstance(raw, (int, float)) or isinstance(raw, bool):
        errors.append(f"{ctx}: expected a number, got {raw!r}")
        return None
    v = float(raw)
    if not np.isfinite(v):
        errors.append(f"{ctx}: must be finite, got {v}")
        return None
    if positive and not v > 0.0:
        errors.append(f"{ctx}: must be strictly positive, got {v}")
        return None
    return v


def _vector3(ctx, raw, errors):
    if not isinstance(raw, (list, tuple)) or len(raw) != 3:
        errors.append(f"{ctx}: expected a 3-vector")
        return None
    out = [_number(f"{ctx}[{i}]", v, errors) for i, v in enumerate(raw)]
    return None if any(v is None for v in out) else tuple(out)


def _check_unknown(ctx, block, known, errors):
    for key in block:
        if key not in known:
            errors.append(f"{ctx}: unknown field {key!r}")


def load_scene(path) -> SceneConfig:
    """Load and validate a scene file; raises SceneError listing all defects."""
    path = Path(path)
    if not path.exists():
        raise SceneError([f"scene file {path} does not exist"])
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise SceneError([f"parse error{loc}: {getattr(exc, 'problem', exc)}"]) from exc
    if not isinstance(raw, dict):
        raise SceneError(["scene must be a mapping"])
    return scene_from_dict(raw, source_path=str(path), base_dir=path.parent)


def scene_from_dict(raw: dict, source_path=None, base_dir=None) -> SceneConfig:
    errors: list[str] = []
    _check_unknown("scene", raw, _KNOWN_TOP, errors)

    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        errors.append(f"unsupported schema_version {version!r} (supported: {SCHEMA_VERSION})")

    # units -------------------------------------------------------------
    ublock = raw.get("units", {}) or {}
    _check_unknown("units", ublock, {"system", "reference_length"}, errors)
    system = ublock.get("system", "natural")
    if system not in ("SI", "natural"):
        errors.append(f"units.system: expected 'SI' or 'natural', got {system!r}")
        system = "natural"
    ref_len = ublock.get("reference_length")
    if ref_len is not None:
        ref_len = _number("units.reference_length", ref_len, errors, positive=True)

    # materials ----------------------------------------------------------
    materials_raw = raw.get("materials", [])
    if not isinstance(materials_raw, list):
        errors.append("materials: expected a list")
        materials_raw = []
    parsed_materials = []
    for i, m in enumerate(materials_raw):
        ctx = f"materials[{i}]"
        if not isinstance(m, dict):
            errors.append(f"{ctx}: expected a mapping")
            continue
        _check_unknown(ctx, m, {"region_id", "poles"}, errors)
        rid = m.get("region_id")
        if not isinstance(rid, int) or rid <= 0:
            errors.append(f"{ctx}.region_id: expected a positive integer")
            continue
        poles = []
        for j, p in enumerate(m.get("poles", []) or []):
            pctx = f"{ctx}.poles[{j}]"
            if not isinstance(p, dict):
                errors.append(f"{pctx}: expected a mapping")
                continue
            _check_unknown(pctx, p, {"omega0", "omegap", "gamma"}, errors)
            vals = {k: _number(f"{pctx}.{k}", p.get(k, None), errors) for k in
                    ("omega0", "omegap", "gamma")}
            if None not in vals.values():
                poles.append(vals)
        parsed_materials.append((rid, poles))

    # geometry -----------------------------------------------------------
    gblock = raw.get("geometry", {}) or {}
    _check_unknown("geometry", gblock, {"voxel_edge", "shapes"}, errors)
    voxel_edge = gblock.get("voxel_edge")
    if voxel_edge is not None:
        voxel_edge = _number("geometry.voxel_edge", voxel_edge, errors, positive=True)
    shapes_raw = gblock.get("shapes", [])
    if not isinstance(shapes_raw, list) or not shapes_raw:
        errors.append("geometry.shapes: expected a nonempty list")
        shapes_raw = []
    parsed_shapes = []
    declared_ids = {rid for rid, _ in parsed_materials}
    for i, s in enumerate(shapes_raw):
        ctx = f"geometry.shapes[{i}]"
        if not isinstance(s, dict):
            errors.append(f"{ctx}: expected a mapping")
            continue
        kind = s.get("kind")
        if kind == "sphere":
            _check_unknown(ctx, s, {"kind", "center", "radius", "region_id"}, errors)
            center = _vector3(f"{ctx}.center", s.get("center"), errors)
            radius = _number(f"{ctx}.radius", s.get("radius", None), errors, positive=True)
            rid = s.get("region_id")
            if not isinstance(rid, int):
                errors.append(f"{ctx}.region_id: expected an integer")
            elif rid not in declared_ids:
                errors.append(f"{ctx}.region_id: dangling region id {rid}")
            elif center is not None and radius is not None:
                parsed_shapes.append(("sphere", {"center": center, "radius": radius,
                                                 "region_id": rid}))
        elif kind == "box":
            _check_unknown(ctx, s, {"kind", "min_corner", "max_corner", "region_id"}, errors)
            lo = _vector3(f"{ctx}.min_corner", s.get("min_corner"), errors)
            hi = _vector3(f"{ctx}.max_corner", s.get("max_corner"), errors)
            rid = s.get("region_id")
            if not isinstance(rid, int):
                errors.append(f"{ctx}.region_id: expected an integer")
            elif rid not in declared_ids:
                errors.append(f"{ctx}.region_id: dangling region id {rid}")
            elif lo is not None and hi is not None:
                parsed_shapes.append(("box", {"min_corner": lo, "max_corner": hi,
                                              "region_id": rid}))
        elif kind == "mask":
            _check_unknown(ctx, s, {"kind", "path"}, errors)
            p = s.get("path")
            if not isinstance(p, str):
                errors.append(f"{ctx}.path: expected a string")
            else:
                full = str((Path(base_dir) / p) if base_dir is not None else Path(p))
                parsed_shapes.append(("mask", {"path": full}))
        else:
            errors.append(f"{ctx}.kind: expected sphere, box or mask, got {kind!r}")

    # solver / quadrature --------------------------------------------------
    sblock = {**_DEFAULTS["solver"], **(raw.get("solver", {}) or {})}
    _check_unknown("solver", sblock, {"tol", "dense_cap"}, errors)
    tol = _number("solver.tol", sblock["tol"], errors, positive=True)
    dense_cap = sblock["dense_cap"]
    if not isinstance(dense_cap, int) or dense_cap <= 0:
        errors.append("solver.dense_cap: expected a positive integer")
        dense_cap = _DEFAULTS["solver"]["dense_cap"]

    qblock = {**_DEFAULTS["quadrature"], **(raw.get("quadrature", {}) or {})}
    _check_unknown("quadrature", qblock, {"n_theta", "n_phi"}, errors)
    n_theta, n_phi = qblock["n_theta"], qblock["n_phi"]
    for name, v in (("n_theta", n_theta), ("n_phi", n_phi)):
        if not isinstance(v, int) or v < 2:
            errors.append(f"quadrature.{name}: expected an integer >= 2")

    runs = raw.get("runs", {}) or {}
    if not isinstance(runs, dict):
        errors.append("runs: expected a mapping")
        runs = {}
    _check_unknown("runs", runs, _KNOWN_RUNS, errors)

    if errors:
        raise SceneError(errors)

    # resolve units: build geometric shapes, convert SI -> internal -------
    shapes_internal = []
    if ref_len is None:
        ref_len = _default_reference_length(parsed_shapes)
    units = UnitSystem(mode=system, L0=ref_len)

    def ilen(v):
        return units.to_internal(v, "length")

    def ivec(v):
        return tuple(units.to_internal(x, "length") for x in v)

    try:
        for kind, params in parsed_shapes:
            if kind == "sphere":
                shapes_internal.append(Sphere(center=ivec(params["center"]),
                                              radius=ilen(params["radius"]),
                                              region_id=params["region_id"]))
            elif kind == "box":
                shapes_internal.append(Box(min_corner=ivec(params["min_corner"]),
                                           max_corner=ivec(params["max_corner"]),
                                           region_id=params["region_id"]))
            else:
                if system == "SI":
                    raise SceneError(["mask shapes are not supported in SI scenes"])
                shapes_internal.append(MaskShape(path=params["path"]))
    except GridError as exc:
        raise SceneError([str(exc)]) from None

    materials = {}
    for rid, poles in parsed_materials:
        materials[rid] = PermittivityModel(
            poles=tuple(LorentzPole(omega0=units.to_internal(p["omega0"], "frequency"),
                                    omegap=units.to_internal(p["omegap"], "frequency"),
                                    gamma=units.to_internal(p["gamma"], "frequency"))
                        for p in poles),
            region_id=rid)

    runs_internal = _convert_runs(runs, units)

    cfg = SceneConfig(units=units, materials=materials, shapes=shapes_internal,
                      voxel_edge=None if voxel_edge is None else ilen(voxel_edge),
                      solver_tol=tol, dense_cap=dense_cap,
                      n_theta=n_theta, n_phi=n_phi, runs=runs_internal,
                      source_path=source_path)
    cfg.config_hash = hashlib.sha256(
        json.dumps(scene_to_dict(cfg), sort_keys=True).encode()).hexdigest()
    return cfg


def _default_reference_length(parsed_shapes) -> float:
    """Bounding-box diagonal of the declared geometric shapes (1.0 fallback)."""
    los, his = [], []
    for kind, params in parsed_shapes:
        if kind == "sphere":
            c, r = np.asarray(params["center"]), params["radius"]
            los.append(c - r)
            his.append(c + r)
        elif kind == "box":
            los.append(np.asarray(params["min_corner"]))
            his.append(np.asarray(params["max_corner"]))
    if not los:
        return 1.0
    return float(np.linalg.norm(np.max(his, axis=0) - np.min(los, axis=0)))


#: unit kinds of the recognized run-block fields
_RUN_FIELD_KINDS = {
    "omega": "frequency",
    "omega_min": "frequency",
    "omega_max": "frequency",
    "n_omega": None,
    "source": "length[3]",
    "eval": "length[3]",
    "x": "length[3]",
    "y": "length[3]",
    "emitter": "length[3]",
    "dipole": "dipole[3]",
    "kdir": None,
    "sigma": None,
    "zeta": None,
    "eval_points": None,
    "tol": None,
}


def _convert_runs(runs: dict, units: UnitSystem) -> dict:
    out = {}
    errors = []
    for block_name, block in runs.items():
        if not isinstance(block, dict):
            errors.append(f"runs.{block_name}: expected a mapping")
            continue
        conv = {}
        for key, value in block.items():
            kind = _RUN_FIELD_KINDS.get(key, "unknown")
            if kind == "unknown":
                errors.append(f"runs.{block_name}.{key}: unknown field")
            elif kind is None:
                conv[key] = value
            elif kind.endswith("[3]"):
                vec = _vector3(f"runs.{block_name}.{key}", value, errors)
                if vec is not None:
                    conv[key] = tuple(units.to_internal(v, kind[:-3]) for v in vec)
            else:
                num = _number(f"runs.{block_name}.{key}", value, errors)
                if num is not None:
                    conv[key] = units.to_internal(num, kind)
        out[block_name] = conv
    if errors:
        raise SceneError(errors)
    return out


def scene_to_dict(cfg: SceneConfig) -> dict:
    """Canonical dictionary of the resolved scene in internal units."""
    shapes = []
    for s in cfg.shapes:
        if isinstance(s, Sphere):
            shapes.append({"kind": "sphere", "center": list(s.center),
                           "radius": s.radius, "region_id": s.region_id})
        elif isinstance(s, Box):
            shapes.append({"kind": "box", "min_corner": list(s.min_corner),
                           "max_corner": list(s.max_corner), "region_id": s.region_id})
        else:
            shapes.append({"kind": "mask", "path": s.path})
    return {
        "schema_version": SCHEMA_VERSION,
        # canonical form is always the internal-unit scene; loading it back
        # performs no conversion, which makes serialize(load(.)) idempotent
        "units": {"system": "natural", "reference_length": cfg.units.L0},
        "materials": [
            {"region_id": rid,
             "poles": [{"omega0": p.omega0, "omegap": p.omegap, "gamma": p.gamma}
                       for p in model.poles]}
            for rid, model in sorted(cfg.materials.items())],
        "geometry": {"voxel_edge": cfg.voxel_edge, "shapes": shapes},
        "solver": {"tol": cfg.solver_tol, "dense_cap": cfg.dense_cap},
        "quadrature": {"n_theta": cfg.n_theta, "n_phi": cfg.n_phi},
        "runs": {k: {kk: (list(vv) if isinstance(vv, tuple) else vv)
                     for kk, vv in v.items()}
                 for k, v in sorted(cfg.runs.items())},
    }
