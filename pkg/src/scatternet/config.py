"""Run configuration: JSON network descriptions, sweeps and analyses.

Any numeric field of a network node may be replaced by a parameter binding
``{"param": "omega", "scale": 1.0, "offset": 0.0}`` which evaluates to
``scale * omega + offset``.  Complex fields accept a number, ``[re, im]`` or
``{"re": .., "im": ..}``.  See README.md for the full node catalogue.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

from .cells import (
    ABRingSpec,
    BraggParams,
    FreeSegment,
    PhysicalConstants,
    PTTable,
    ab_ring_arms,
    bragg_matrix,
    free_segment_matrix,
    pt_cell,
)
from .core import PTParams, TransferMatrix
from .network import BranchSpec, Leaf, Parallel, Serial, SerialRepeat, VertexParams

ANALYSIS_KINDS = ("singularities", "exceptional_points", "atr")


class ConfigError(Exception):
    """All validation errors found in a configuration, as ``path: message`` lines."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


class _Invalid(Exception):
    pass


@dataclass
class _Ctx:
    params: dict
    consts: PhysicalConstants
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    refs: set = field(default_factory=set)

    def fail(self, path, msg):
        self.errors.append(f"{path or '/'}: {msg}")
        raise _Invalid


def _is_binding(v):
    return isinstance(v, dict) and "param" in v


def _real(ctx: _Ctx, spec: dict, key: str, path: str, default=None, required=True) -> float:
    p = f"{path}/{key}"
    if key not in spec:
        if required and default is None:
            ctx.fail(p, "required field missing")
        return default
    v = spec[key]
    if _is_binding(v):
        return _bound(ctx, v, p)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        ctx.fail(p, f"expected a number, got {type(v).__name__}")
    if not math.isfinite(v):
        ctx.fail(p, "must be finite")
    return float(v)


def _cplx_value(ctx, v, p):
    if _is_binding(v):
        return complex(_bound(ctx, v, p))
    if isinstance(v, bool):
        ctx.fail(p, "expected a complex number")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    if isinstance(v, dict) and set(v) <= {"re", "im"}:
        return complex(v.get("re", 0.0), v.get("im", 0.0))
    ctx.fail(p, "expected a complex number: number, [re, im] or {re, im}")


def _bound(ctx, v, p):
    name = v["param"]
    ctx.refs.add(name)
    if name not in ctx.params:
        ctx.fail(p, f"parameter {name!r} has no value")
    try:
        return float(v.get("scale", 1.0)) * ctx.params[name] + float(v.get("offset", 0.0))
    except (TypeError, ValueError):
        ctx.fail(p, "binding scale/offset must be numbers")


def _cplx(ctx, spec, key, path, default=None):
    p = f"{path}/{key}"
    if key not in spec:
        if default is None:
            ctx.fail(p, "required field missing")
        return default
    return _cplx_value(ctx, spec[key], p)


def _int(ctx, spec, key, path, default=None, minimum=None):
    p = f"{path}/{key}"
    if key not in spec:
        if default is None:
            ctx.fail(p, "required field missing")
        return default
    v = spec[key]
    if isinstance(v, bool) or not isinstance(v, int):
        ctx.fail(p, "expected an integer")
    if minimum is not None and v < minimum:
        ctx.fail(p, f"must be >= {minimum}")
    return v


def _guard(ctx, path, fn, *args):
    """Run a constructor and turn ValueError into a located config error."""
    try:
        return fn(*args)
    except ValueError as exc:
        ctx.fail(path, str(exc))


def _vertex(ctx, spec, path) -> VertexParams:
    if spec is None:
        return VertexParams(hbar=ctx.consts.hbar, mass=ctx.consts.default_mass)
    if not isinstance(spec, dict):
        ctx.fail(path, "vertex must be an object")
    k = _cplx(ctx, spec, "k", path, 1.0)
    return _guard(ctx, path, VertexParams,
                  _cplx(ctx, spec, "V0", path, 0.0),
                  _real(ctx, spec, "mass", path, ctx.consts.default_mass),
                  k, _cplx(ctx, spec, "kp", path, k), ctx.consts.hbar)


def _matrix_node(ctx, spec, path):
    m = spec.get("m")
    if not (isinstance(m, list) and len(m) == 2 and all(isinstance(r, list) and len(r) == 2 for r in m)):
        ctx.fail(f"{path}/m", "expected a 2x2 nested list")
    entries = [[_cplx_value(ctx, m[i][j], f"{path}/m/{i}/{j}") for j in range(2)] for i in range(2)]
    return Leaf(_guard(ctx, path, TransferMatrix, entries))


def _build(ctx: _Ctx, spec: Any, path: str):
    if not isinstance(spec, dict):
        ctx.fail(path, "node must be an object")
    kind = spec.get("type")
    if kind == "matrix":
        return _matrix_node(ctx, spec, path)
    if kind == "free":
        k = _cplx(ctx, spec, "k", path)
        seg = _guard(ctx, path, FreeSegment, _real(ctx, spec, "length", path), k,
                     _cplx(ctx, spec, "k_backward", path, k),
                     _real(ctx, spec, "mass", path, ctx.consts.default_mass))
        return Leaf(free_segment_matrix(seg))
    if kind == "pt":
        p = PTParams(_cplx(ctx, spec, "a", path), _cplx(ctx, spec, "b", path), _cplx(ctx, spec, "c", path))
        return Leaf(pt_cell(p))
    if kind == "pt_table":
        raw = {}
        for key in ("omega", "a", "b", "c"):
            v = spec.get(key)
            if not isinstance(v, list):
                ctx.fail(f"{path}/{key}", "expected a list")
            raw[key] = v
        w = [float(x) for x in raw["omega"]]
        coeffs = [[_cplx_value(ctx, z, f"{path}/{key}/{i}") for i, z in enumerate(raw[key])] for key in "abc"]
        table = _guard(ctx, path, PTTable, w, *coeffs)
        at = _real(ctx, spec, "at", path)
        return Leaf(_guard(ctx, f"{path}/at", table, at))
    if kind == "bragg":
        k = _real(ctx, spec, "k", path)
        if "delta" in spec:
            beta = k + _real(ctx, spec, "delta", path)
        else:
            beta = _real(ctx, spec, "beta", path)
        p = _guard(ctx, path, BraggParams, _real(ctx, spec, "n0", path), _real(ctx, spec, "n1", path),
                   _real(ctx, spec, "n2", path), beta, _real(ctx, spec, "length", path))
        return Leaf(_guard(ctx, path, bragg_matrix, p, k))
    if kind == "serial":
        children = spec.get("children")
        if not isinstance(children, list) or not children:
            ctx.fail(f"{path}/children", "expected a nonempty list")
        return Serial(_build_list(ctx, children, f"{path}/children"))
    if kind == "repeat":
        count = _int(ctx, spec, "count", path, minimum=1)
        return SerialRepeat(_build(ctx, spec.get("child"), f"{path}/child"), count)
    if kind == "parallel":
        return _parallel(ctx, spec, path)
    if kind == "ab_ring":
        return _ab_ring(ctx, spec, path)
    ctx.fail(f"{path}/type", f"unknown node type {kind!r}")


def _build_list(ctx, items, path):
    out, ok = [], True
    for i, item in enumerate(items):
        try:
            out.append(_build(ctx, item, f"{path}/{i}"))
        except _Invalid:
            ok = False
    if not ok:
        raise _Invalid
    return out


def _parallel(ctx, spec, path):
    branches = spec.get("branches")
    if not isinstance(branches, list) or not branches:
        ctx.fail(f"{path}/branches", "expected a nonempty list")
    if len(branches) == 1:
        ctx.warnings.append(f"{path}/branches: N=1 parallel is a pass-through")
    built, ok = [], True
    for i, b in enumerate(branches):
        bp = f"{path}/branches/{i}"
        try:
            if not isinstance(b, dict):
                ctx.fail(bp, "branch must be an object")
            node = _build(ctx, b.get("node"), f"{bp}/node")
            opt = {key: _cplx(ctx, b, key, bp) for key in ("k", "kp", "q", "qp") if key in b}
            mass = _real(ctx, b, "mass", bp, ctx.consts.default_mass)
            mass_out = _real(ctx, b, "mass_out", bp, mass)
            built.append(_guard(ctx, bp, BranchSpec, node, opt.get("k"), opt.get("kp"),
                                opt.get("q"), opt.get("qp"), mass, mass_out))
        except _Invalid:
            ok = False
    vin = _vertex(ctx, spec.get("vertex_in"), f"{path}/vertex_in")
    vout = _vertex(ctx, spec.get("vertex_out"), f"{path}/vertex_out")
    ref = _int(ctx, spec, "reference", path, 0, minimum=0)
    if not ok:
        raise _Invalid
    if ref >= len(built):
        ctx.fail(f"{path}/reference", f"must be < number of branches ({len(built)})")
    return Parallel(tuple(built), vin, vout, ref)


def _ab_ring(ctx, spec, path):
    k = _real(ctx, spec, "k", path)
    ring = _guard(ctx, path, ABRingSpec.from_flux_phase, k, _real(ctx, spec, "flux_phase", path),
                  _real(ctx, spec, "length", path), _real(ctx, spec, "arm1", path, required=False),
                  None, ctx.consts)
    return ab_ring_node(ring, ctx.consts)


def ab_ring_node(ring: ABRingSpec, consts: PhysicalConstants = PhysicalConstants()) -> Parallel:
    """Two-arm ring as a parallel bundle with Kirchhoff junctions.

    Arm phases carry the flux; junction currents use the kinetic wavevector
    ``k`` on every arm.
    """
    arm1, arm2 = ab_ring_arms(ring, consts)
    k, m = ring.k, consts.default_mass
    branches = [
        BranchSpec(free_segment_matrix(arm), k=k, kp=k, q=k, qp=k, mass=m)
        for arm in (arm1, arm2)
    ]
    lead = VertexParams(mass=m, k=k, hbar=consts.hbar)
    return Parallel(tuple(branches), lead, lead)


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    lo: float
    hi: float
    steps: int


@dataclass
class RunConfig:
    network: dict
    sweep: SweepSpec | None
    analyses: list
    output: dict
    parameters: dict
    constants: PhysicalConstants
    warnings: list

    def build(self, params: dict | None = None):
        values = dict(self.parameters)
        values.update(params or {})
        ctx = _Ctx(values, self.constants)
        try:
            return _build(ctx, self.network, "/network")
        except _Invalid:
            raise ConfigError(ctx.errors) from None

    def family(self):
        if self.sweep is None:
            raise ConfigError(["/sweep: a sweep block is required for this command"])
        name = self.sweep.parameter
        return lambda omega: self.build({name: float(omega)})

    def analysis(self, kind: str) -> dict:
        for a in self.analyses:
            if a.get("kind") == kind:
                return a
        return {}


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration, reporting every error found."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"/: not valid JSON ({exc})"]) from None
    if not isinstance(raw, dict):
        raise ConfigError(["/: top level must be an object"])
    errors: list[str] = []

    consts = PhysicalConstants()
    if "constants" in raw:
        try:
            consts = PhysicalConstants(**raw["constants"])
        except (TypeError, ValueError) as exc:
            errors.append(f"/constants: {exc}")

    parameters = raw.get("parameters", {})
    if not isinstance(parameters, dict) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in parameters.values()
    ):
        errors.append("/parameters: expected an object of numbers")
        parameters = {}
    parameters = {k: float(v) for k, v in parameters.items()}

    sweep = None
    if "sweep" in raw:
        s = raw["sweep"]
        if not isinstance(s, dict):
            errors.append("/sweep: expected an object")
        else:
            ctx = _Ctx({}, consts)
            vals = {}
            for key in ("lo", "hi"):
                try:
                    vals[key] = _real(ctx, s, key, "/sweep")
                except _Invalid:
                    pass
            try:
                vals["steps"] = _int(ctx, s, "steps", "/sweep", 101, minimum=2)
            except _Invalid:
                pass
            name = s.get("parameter", "omega")
            if not isinstance(name, str) or not name:
                ctx.errors.append("/sweep/parameter: expected a parameter name")
            if "lo" in vals and "hi" in vals and not vals["lo"] < vals["hi"]:
                ctx.errors.append("/sweep/hi: must be greater than lo")
            errors.extend(ctx.errors)
            if not ctx.errors:
                sweep = SweepSpec(name, vals["lo"], vals["hi"], vals["steps"])

    analyses = raw.get("analyses", [])
    if not isinstance(analyses, list):
        errors.append("/analyses: expected a list")
        analyses = []
    for i, a in enumerate(analyses):
        if not isinstance(a, dict) or a.get("kind") not in ANALYSIS_KINDS:
            errors.append(f"/analyses/{i}/kind: expected one of {', '.join(ANALYSIS_KINDS)}")

    output = raw.get("output", {})
    if not isinstance(output, dict):
        errors.append("/output: expected an object")
        output = {}
    output = {"directory": str(output.get("directory", ".")), "basename": str(output.get("basename", "run"))}

    warnings: list[str] = []
    network = raw.get("network")
    if network is None:
        errors.append("/network: required field missing")
    else:
        values = dict(parameters)
        if sweep is not None:
            values.setdefault(sweep.parameter, sweep.lo)
        ctx = _Ctx(values, consts)
        try:
            _build(ctx, network, "/network")
        except _Invalid:
            pass
        except Exception as exc:  # numerical failure while validating a node
            ctx.errors.append(f"/network: {exc}")
        errors.extend(ctx.errors)
        warnings.extend(ctx.warnings)
        if sweep is not None and not ctx.errors and sweep.parameter not in ctx.refs:
            errors.append(f"/sweep/parameter: {sweep.parameter!r} is not bound by any network field")

    if errors:
        raise ConfigError(errors)
    return RunConfig(network, sweep, analyses, output, parameters, consts, warnings)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
