"""Machine-readable JSON reports and their schema."""

from __future__ import annotations

import json
import math
from typing import Any

import jsonschema

from .clairaut import FAMILY_KINDS, ClairautReport, DaraResult, Verdict
from .classify import KINDS, SingularPointReport
from .config import Config
from .umbrella import UmbrellaCertificate

REPORT_KEYS = ("input", "point", "kind", "lambda", "k", "resonance", "eigenvalues", "invariants",
               "residuals", "config_digest")

_number = {"type": "number"}
_nullable_number = {"type": ["number", "null"]}

REPORT_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "foldsing singular-point report",
    "type": "object",
    "additionalProperties": False,
    "required": list(REPORT_KEYS),
    "properties": {
        "input": {
            "type": "object",
            "required": ["form", "source"],
            "properties": {"form": {"enum": ["equation", "field", "parametric", "family"]},
                           "source": {"type": "string"}},
        },
        "point": {"type": ["array", "null"], "items": _number, "minItems": 2, "maxItems": 3},
        "kind": {"enum": [*KINDS, *[k for k in FAMILY_KINDS if k not in KINDS], None]},
        "lambda": _nullable_number,
        "k": _nullable_number,
        "resonance": {
            "type": ["object", "null"],
            "required": ["p", "q"],
            "additionalProperties": False,
            "properties": {"p": {"type": "integer", "minimum": 1}, "q": {"type": "integer", "minimum": 1}},
        },
        "eigenvalues": {
            "type": ["array", "null"],
            "minItems": 2, "maxItems": 2,
            "items": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2},
        },
        "invariants": {"type": "object"},
        "residuals": {"type": "object", "additionalProperties": _number},
        "config_digest": {"type": "string", "pattern": "^[0-9a-f]{16}$"},
    },
}


def _clean(v):
    """JSON-safe scalars: floats stay floats, non-finite become null, numpy unwraps."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        v = v.item()
    if isinstance(v, bool) or v is None or isinstance(v, (int, str)):
        return v
    if isinstance(v, float):
        return v if math.isfinite(v) else None
    return str(v)


def _base(form: str, source: str, config: Config) -> dict[str, Any]:
    rep = {key: None for key in REPORT_KEYS}
    rep["input"] = {"form": form, "source": source}
    rep["invariants"] = {}
    rep["residuals"] = {}
    rep["config_digest"] = config.digest()
    return rep


def point_report(r: SingularPointReport, form: str, source: str, config: Config) -> dict[str, Any]:
    rep = _base(form, source, config)
    rep["point"] = list(r.location)
    rep["kind"] = r.kind
    rep["lambda"] = r.exponent
    rep["k"] = r.k
    if r.resonance is not None:
        rep["resonance"] = {"p": r.resonance[0], "q": r.resonance[1]}
    if r.eigenvalues is not None:
        rep["eigenvalues"] = [[m.real, m.imag] for m in r.eigenvalues]
    inv = dict(sorted(r.invariants.items()))
    if r.reason is not None:
        inv["reason"] = r.reason
    rep["invariants"] = inv
    rep["residuals"] = dict(sorted(r.residuals.items()))
    return _clean(rep)


def umbrella_report(c: UmbrellaCertificate, source: str, config: Config) -> dict[str, Any]:
    rep = _base("parametric", source, config)
    rep["point"] = [0.0, 0.0]
    rep["kind"] = c.kind
    inv = {
        "a0": c.a0, "a0p": c.a0p, "b0": c.b0,
        "nondegenerate": c.nondegenerate,
        "X0": c.handle.X0, "H00": c.H.constant_term,
        "flipped": c.flipped, "normalized": c.normalized,
        "normal_form": "(dy/dx)^2 = x*(y - x)^2",
    }
    if not c.nondegenerate:
        inv["reason"] = "umbrella invariants degenerate: needs a(0) = 0 and a'(0) b(0) != 0"
    rep["invariants"] = inv
    return _clean(rep)


def family_report(r: ClairautReport, source: str, config: Config) -> dict[str, Any]:
    rep = _base("family", source, config)
    rep["point"] = [0.0, 0.0]
    rep["kind"] = r.kind
    inv: dict[str, Any] = dict(r.values)
    inv["diagram"] = r.diagram
    inv["diagram_form"] = r.diagram_form
    inv["equation"] = r.equation
    if r.reason is not None:
        inv["reason"] = r.reason
    rep["invariants"] = inv
    return _clean(rep)


def clairaut_equation_report(source: str, base, clairaut: Verdict, reduced: Verdict, dara: DaraResult,
                             config: Config) -> dict[str, Any]:
    rep = _base("equation", source, config)
    rep["point"] = [float(c) for c in base]
    rep["invariants"] = {
        "clairaut_type": clairaut.holds,
        "reduced": reduced.holds,
        "dara": dara.holds,
        "dara_order": dara.order,
        "criminant_samples": clairaut.samples,
        "contact_witness": list(clairaut.witness) if clairaut.witness else None,
        "reduced_witness": list(reduced.witness) if reduced.witness else None,
    }
    rep["residuals"] = {"contact_max": clairaut.worst, "tangential_grad_min": reduced.worst,
                        "dara_residual": dara.residual}
    return _clean(rep)


def validate_report(rep: dict[str, Any]) -> None:
    jsonschema.validate(rep, REPORT_SCHEMA)
    if tuple(rep) != REPORT_KEYS:
        raise jsonschema.ValidationError(f"top-level keys out of order: {list(rep)}")


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"
