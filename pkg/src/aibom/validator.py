"""Validation of AIBOM JSON against the SACRO-specific CycloneDX 1.5 profile.

Two layers run over the raw JSON, never over the typed model, so that a
broken document still yields a full defect list:

* a structural JSON Schema (bomFormat/specVersion/version and the required
  keys of metadata, tools, components, hashes and properties);
* semantic rules: SHA-256 hash format, non-empty hash lists, RFC 3339
  timestamps, component typing, the disclosure-control vocabulary, digest
  formats and, in strict mode, the ``x-sacrospec-`` property prefix.

Every violation is reported; ordering is document order, then rule id.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any

from jsonschema import Draft7Validator

from .errors import ParseError
from .model import (
    COMPONENT_TYPES,
    HASH_UNAVAILABLE,
    SACRO_PREFIX,
    disclosure_controls,
    is_prefixed_digest,
    is_rfc3339,
    is_sha256_hex,
    load_json,
    logical_property_name,
)

RULE_SET_VERSION = "sacro-aibom-cdx1.5/2"

RULES = (
    "json-syntax",
    "type",
    "enum",
    "pattern",
    "required-field",
    "min-items",
    "hash-format",
    "hash-missing",
    "timestamp-format",
    "component-type",
    "vocabulary",
    "digest-format",
    "strict-prefix",
)

_KEYWORD_RULES = {"required": "required-field", "minItems": "min-items"}

_HASH = {
    "type": "object",
    "properties": {"alg": {"type": "string"}, "content": {"type": "string"}},
    "required": ["alg", "content"],
}
_PROPERTY = {
    "type": "object",
    "properties": {"name": {"type": "string"}, "value": {"type": "string"}},
    "required": ["name", "value"],
}
_COMPONENT_FIELDS = {
    "type": {"type": "string"},
    "name": {"type": "string"},
    "version": {"type": "string"},
    "hashes": {"type": "array", "items": {"$ref": "#/definitions/hash"}},
    "properties": {"type": "array", "items": {"$ref": "#/definitions/property"}},
    "components": {"type": "array", "items": {"$ref": "#/definitions/component"}},
}

AIBOM_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "definitions": {
        "hash": _HASH,
        "property": _PROPERTY,
        "component": {
            "type": "object",
            "properties": _COMPONENT_FIELDS,
            "required": ["type", "name", "version", "hashes", "properties"],
        },
        "rootComponent": {
            "type": "object",
            "properties": _COMPONENT_FIELDS,
            "required": ["type", "name", "version", "hashes"],
        },
    },
    "properties": {
        "bomFormat": {"type": "string", "enum": ["CycloneDX"]},
        "specVersion": {"type": "string", "pattern": "^1\\.5$"},
        "version": {"type": "integer"},
        "metadata": {
            "type": "object",
            "properties": {
                "timestamp": {"type": "string"},
                "tools": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "properties": {
                            "vendor": {"type": "string"},
                            "name": {"type": "string"},
                            "version": {"type": "string"},
                        },
                        "required": ["vendor", "name", "version"],
                    },
                },
                "component": {"$ref": "#/definitions/rootComponent"},
            },
            "required": ["timestamp", "tools", "component"],
        },
        "components": {"type": "array", "items": {"$ref": "#/definitions/component"}},
    },
    "required": ["bomFormat", "specVersion", "version", "metadata", "components"],
}


@dataclass(frozen=True)
class Violation:
    path: str
    rule: str
    message: str

    def to_json(self) -> dict:
        return {"path": self.path, "rule": self.rule, "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()
    rule_set_version: str = RULE_SET_VERSION
    strict: bool = False

    @property
    def valid(self) -> bool:
        return not self.violations

    def paths(self) -> set[str]:
        return {v.path for v in self.violations}

    def to_json(self) -> dict:
        return {
            "valid": self.valid,
            "violations": [v.to_json() for v in self.violations],
            "ruleSetVersion": self.rule_set_version,
        }


@lru_cache(maxsize=None)
def _schema_validator() -> Draft7Validator:
    Draft7Validator.check_schema(AIBOM_SCHEMA)
    return Draft7Validator(AIBOM_SCHEMA)


def _escape(segment) -> str:
    return str(segment).replace("~", "~0").replace("/", "~1")


def pointer(segments) -> str:
    return "".join("/" + _escape(s) for s in segments)


@dataclass
class _Collector:
    doc: Any
    found: dict = field(default_factory=dict)

    def add(self, segments: tuple, rule: str, message: str):
        key = (tuple(segments), rule)
        self.found.setdefault(key, message)

    def _order(self, segments: tuple) -> tuple:
        node, key = self.doc, []
        for seg in segments:
            if isinstance(node, dict):
                keys = list(node)
                pos = keys.index(seg) if seg in node else len(keys)
                key.append((pos, str(seg)))
                node = node.get(seg)
            elif isinstance(node, list) and isinstance(seg, int):
                key.append((seg, ""))
                node = node[seg] if seg < len(node) else None
            else:
                key.append((1 << 30, str(seg)))
                node = None
        return tuple(key)

    def report(self, strict: bool) -> ValidationReport:
        ordered = sorted(self.found.items(), key=lambda kv: (self._order(kv[0][0]), kv[0][1]))
        return ValidationReport(
            tuple(Violation(pointer(segs), rule, msg) for (segs, rule), msg in ordered), strict=strict
        )


def _structural(doc: Any, out: _Collector) -> None:
    for err in _schema_validator().iter_errors(doc):
        base = tuple(err.absolute_path)
        rule = _KEYWORD_RULES.get(err.validator, err.validator)
        if err.validator == "required":
            for name in err.validator_value:
                if isinstance(err.instance, dict) and name not in err.instance:
                    out.add(base + (name,), rule, f"required field {name!r} is missing")
        else:
            out.add(base, rule, err.message)


def _check_properties(props: Any, base: tuple, strict: bool, out: _Collector) -> None:
    if not isinstance(props, list):
        return
    vocab = disclosure_controls()
    for i, prop in enumerate(props):
        if not isinstance(prop, dict) or not isinstance(prop.get("name"), str):
            continue
        name, value = prop["name"], prop.get("value")
        logical = logical_property_name(name)
        if logical is None:
            continue
        here = base + (i,)
        if strict and not name.startswith(SACRO_PREFIX):
            out.add(here + ("name",), "strict-prefix", f"{name!r} must be written as {SACRO_PREFIX + name!r}")
        if not isinstance(value, str):
            continue
        if logical == "disclosureControlType" and value not in vocab:
            out.add(here + ("value",), "vocabulary", f"{value!r} is not a registered disclosure control")
        elif logical in ("treContainerHash", "outputDigest") and not is_prefixed_digest(value):
            out.add(here + ("value",), "digest-format", f"{logical} must be 'sha256:' plus 64 lowercase hex")
        elif logical == "modelReference":
            bare = value[7:] if value.startswith("sha256:") else value
            if not is_sha256_hex(bare):
                out.add(here + ("value",), "digest-format", "modelReference must be a SHA-256 hex digest")


def _check_component(comp: Any, base: tuple, strict: bool, out: _Collector) -> None:
    if not isinstance(comp, dict):
        return
    ctype = comp.get("type")
    if isinstance(ctype, str) and ctype not in COMPONENT_TYPES:
        out.add(base + ("type",), "component-type", f"component type {ctype!r} not in {sorted(COMPONENT_TYPES)}")
    props = comp.get("properties")
    hashes = comp.get("hashes")
    if isinstance(hashes, list):
        exempt = isinstance(props, list) and any(
            isinstance(p, dict) and p.get("name") == HASH_UNAVAILABLE and p.get("value") == "true" for p in props
        )
        if not hashes and not exempt:
            out.add(base + ("hashes",), "hash-missing", "component carries no hash entries")
        for i, h in enumerate(hashes):
            if isinstance(h, dict) and h.get("alg") == "SHA-256" and isinstance(h.get("content"), str):
                if not is_sha256_hex(h["content"]):
                    out.add(base + ("hashes", i, "content"), "hash-format",
                            "SHA-256 content must be exactly 64 lowercase hex characters")
    _check_properties(props, base + ("properties",), strict, out)
    children = comp.get("components")
    if isinstance(children, list):
        for i, child in enumerate(children):
            _check_component(child, base + ("components", i), strict, out)


def _semantic(doc: Any, strict: bool, out: _Collector) -> None:
    if not isinstance(doc, dict):
        return
    meta = doc.get("metadata")
    if isinstance(meta, dict):
        ts = meta.get("timestamp")
        if isinstance(ts, str) and not is_rfc3339(ts):
            out.add(("metadata", "timestamp"), "timestamp-format", f"{ts!r} is not an RFC 3339 date-time")
        _check_component(meta.get("component"), ("metadata", "component"), strict, out)
    comps = doc.get("components")
    if isinstance(comps, list):
        for i, comp in enumerate(comps):
            _check_component(comp, ("components", i), strict, out)
    sig = doc.get("signature")
    if isinstance(sig, dict) and isinstance(sig.get("timestamp"), str) and not is_rfc3339(sig["timestamp"]):
        out.add(("signature", "timestamp"), "timestamp-format", "signature timestamp is not RFC 3339")


def validate_object(doc: Any, strict: bool = False) -> ValidationReport:
    """Validate already-decoded JSON."""
    out = _Collector(doc)
    _structural(doc, out)
    _semantic(doc, strict, out)
    return out.report(strict)


def validate_structure(data: bytes | str, strict: bool = False) -> ValidationReport:
    """Validate AIBOM JSON text; malformed JSON is reported as a ``json-syntax`` violation."""
    try:
        doc = load_json(data)
    except ParseError as exc:
        return ValidationReport((Violation("", "json-syntax", str(exc)),), strict=strict)
    return validate_object(doc, strict)


def validate_file(path: str | os.PathLike, strict: bool = False) -> ValidationReport:
    """Read ``path`` and validate it.  I/O failures raise ``OSError``."""
    with open(path, "rb") as fh:
        data = fh.read()
    return validate_structure(data, strict)


def report_json(report: ValidationReport) -> str:
    return json.dumps(report.to_json(), indent=2)
