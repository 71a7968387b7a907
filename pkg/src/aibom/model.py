"""Document model for SACRO-extended CycloneDX 1.5 AI bills of materials.

The model is deliberately small: it types the fields the toolkit reasons
about and keeps everything else in ``extra`` mappings so that documents
survive a parse/serialize round trip untouched.  All records are frozen;
operations that "modify" a document return a new one via
:func:`dataclasses.replace`.
"""

from __future__ import annotations

import base64
import binascii
import json
import re
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any

from .canonical import canonical_bytes
from .errors import AmbiguityError, ParseError, StructuralError

BOM_FORMAT = "CycloneDX"
SPEC_VERSION = "1.5"
SACRO_PREFIX = "x-sacrospec-"

COMPONENT_TYPES = frozenset({"application", "ai-model", "library", "container"})
SIGNATURE_ALGS = frozenset({"Ed25519", "ECDSA"})

# logical name -> attribute on SacroExtensions
SACRO_FIELDS = {
    "modelReference": "model_reference",
    "trainingDataSource": "training_data_source",
    "inferenceContext": "inference_context",
    "treContainerHash": "tre_container_hash",
    "disclosureControlType": "disclosure_control_type",
    "outputDigest": "output_digest",
}

HASH_UNAVAILABLE = SACRO_PREFIX + "hash-unavailable"
UNVERIFIABLE = SACRO_PREFIX + "unverifiable"
UNRESOLVED_VERSION = "unresolved"

_HEX64 = re.compile(r"^[0-9a-f]{64}$")
_HEXISH = re.compile(r"^[0-9A-Fa-f]+$")
_PREFIXED_DIGEST = re.compile(r"^sha256:[0-9a-f]{64}$")
_VOCAB_TOKEN = re.compile(r"^[a-z0-9]+(-[a-z0-9]+)*$")
_RFC3339 = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})[Tt](\d{2}):(\d{2}):(\d{2})(\.\d+)?([Zz]|[+-]\d{2}:\d{2})$"
)

_disclosure_controls = {"cell-suppression", "diff-privacy-laplace", "top-coding"}


def disclosure_controls() -> frozenset[str]:
    """Currently registered disclosure-control vocabulary."""
    return frozenset(_disclosure_controls)


def register_disclosure_control(token: str) -> None:
    """Add a registry-defined token to the disclosure-control vocabulary."""
    if not _VOCAB_TOKEN.match(token):
        raise ValueError(f"disclosure control token must be lowercase kebab-case: {token!r}")
    _disclosure_controls.add(token)


def is_rfc3339(value: str) -> bool:
    m = _RFC3339.match(value)
    if not m:
        return False
    year, month, day, hour, minute, second = (int(g) for g in m.groups()[:6])
    try:
        datetime(year, month, day, hour, minute, second)
    except ValueError:
        return False
    offset = m.group(8)
    if offset not in ("Z", "z"):
        oh, om = int(offset[1:3]), int(offset[4:6])
        if oh > 23 or om > 59:
            return False
    return True


def is_sha256_hex(value: str) -> bool:
    return bool(_HEX64.match(value))


def is_prefixed_digest(value: str) -> bool:
    return bool(_PREFIXED_DIGEST.match(value))


def b64decode_lenient(value: str) -> bytes:
    """Decode standard base64, tolerating missing or extra ``=`` padding."""
    stripped = "".join(value.split()).rstrip("=")
    if len(stripped) % 4 == 1:
        raise ValueError("invalid base64 length")
    padded = stripped + "=" * (-len(stripped) % 4)
    try:
        return base64.b64decode(padded, validate=True)
    except binascii.Error as exc:
        raise ValueError(f"invalid base64: {exc}") from None


def logical_property_name(name: str) -> str | None:
    """Map a property name (bare or prefixed) to its SACRO logical field."""
    bare = name[len(SACRO_PREFIX):] if name.startswith(SACRO_PREFIX) else name
    return bare if bare in SACRO_FIELDS else None


@dataclass(frozen=True)
class HashEntry:
    alg: str
    content: str
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.alg:
            raise StructuralError("/alg", "hash algorithm must be non-empty")
        if self.alg == "SHA-256" and not is_sha256_hex(self.content):
            raise StructuralError("/content", "SHA-256 content must be 64 lowercase hex characters")

    def to_json(self) -> dict:
        return {**self.extra, "alg": self.alg, "content": self.content}


@dataclass(frozen=True)
class PropertyEntry:
    name: str
    value: str
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {**self.extra, "name": self.name, "value": self.value}


@dataclass(frozen=True)
class SacroExtensions:
    model_reference: str | None = None
    training_data_source: str | None = None
    inference_context: str | None = None
    tre_container_hash: str | None = None
    disclosure_control_type: str | None = None
    output_digest: str | None = None

    def inference_parameters(self) -> dict:
        """Decode ``inference_context`` when it carries a JSON object."""
        if self.inference_context is None:
            return {}
        try:
            parsed = json.loads(self.inference_context)
        except json.JSONDecodeError:
            return {}
        return parsed if isinstance(parsed, dict) else {}


@dataclass(frozen=True)
class ComponentRecord:
    type: str
    name: str
    version: str
    hashes: tuple[HashEntry, ...] = ()
    # None means the key was absent in the source document
    properties: tuple[PropertyEntry, ...] | None = None
    purl: str | None = None
    components: tuple[ComponentRecord, ...] | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.type not in COMPONENT_TYPES:
            raise StructuralError("/type", f"component type {self.type!r} not in {sorted(COMPONENT_TYPES)}")
        if not self.hashes and not self.hash_unavailable:
            raise StructuralError("/hashes", "component must carry at least one hash")
        if self.type == "ai-model" and not self.properties:
            raise StructuralError("/properties", "ai-model components need a non-empty properties list")

    @property
    def hash_unavailable(self) -> bool:
        return any(p.name == HASH_UNAVAILABLE and p.value == "true" for p in self.properties or ())

    @property
    def unverifiable(self) -> bool:
        return self.version == UNRESOLVED_VERSION or any(
            p.name == UNVERIFIABLE and p.value == "true" for p in self.properties or ()
        )

    @property
    def ref(self) -> tuple[str, str]:
        return (self.name, self.version)

    def property_values(self, name: str) -> list[str]:
        return [p.value for p in self.properties or () if p.name == name]

    def to_json(self) -> dict:
        out = dict(self.extra)
        out.update(type=self.type, name=self.name, version=self.version)
        out["hashes"] = [h.to_json() for h in self.hashes]
        if self.properties is not None:
            out["properties"] = [p.to_json() for p in self.properties]
        if self.purl is not None:
            out["purl"] = self.purl
        if self.components is not None:
            out["components"] = [c.to_json() for c in self.components]
        return out


@dataclass(frozen=True)
class ToolDescriptor:
    vendor: str
    name: str
    version: str
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {**self.extra, "vendor": self.vendor, "name": self.name, "version": self.version}


@dataclass(frozen=True)
class DocumentMetadata:
    timestamp: str
    tools: tuple[ToolDescriptor, ...]
    component: ComponentRecord
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not is_rfc3339(self.timestamp):
            raise StructuralError("/timestamp", f"not an RFC 3339 date-time: {self.timestamp!r}")
        if not self.tools:
            raise StructuralError("/tools", "at least one tool descriptor is required")

    def to_json(self) -> dict:
        return {
            **self.extra,
            "timestamp": self.timestamp,
            "tools": [t.to_json() for t in self.tools],
            "component": self.component.to_json(),
        }


@dataclass(frozen=True)
class ExternalReference:
    type: str
    url: str
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not re.match(r"^[A-Za-z][A-Za-z0-9+.-]*://[^\s/?#]+[^\s]*$", self.url):
            raise StructuralError("/url", f"not an absolute URL: {self.url!r}")

    def to_json(self) -> dict:
        return {**self.extra, "type": self.type, "url": self.url}


@dataclass(frozen=True)
class SignatureEnvelope:
    alg: str
    public_key: str
    signature: str
    timestamp: str
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.alg not in SIGNATURE_ALGS:
            raise StructuralError("/alg", f"unsupported signature algorithm {self.alg!r}")
        for key, value in (("publicKey", self.public_key), ("signature", self.signature)):
            try:
                b64decode_lenient(value)
            except ValueError as exc:
                raise StructuralError(f"/{key}", str(exc)) from None
        if not is_rfc3339(self.timestamp):
            raise StructuralError("/timestamp", f"not an RFC 3339 date-time: {self.timestamp!r}")

    def to_json(self) -> dict:
        return {
            **self.extra,
            "alg": self.alg,
            "publicKey": self.public_key,
            "signature": self.signature,
            "timestamp": self.timestamp,
        }


@dataclass(frozen=True)
class AibomDocument:
    metadata: DocumentMetadata
    components: tuple[ComponentRecord, ...] = ()
    version: int = 1
    external_references: tuple[ExternalReference, ...] | None = None
    signature: SignatureEnvelope | None = None
    bom_format: str = BOM_FORMAT
    spec_version: str = SPEC_VERSION
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.bom_format != BOM_FORMAT:
            raise StructuralError("/bomFormat", f"expected {BOM_FORMAT!r}")
        if self.spec_version != SPEC_VERSION:
            raise StructuralError("/specVersion", f"expected {SPEC_VERSION!r}")
        if isinstance(self.version, bool) or not isinstance(self.version, int) or self.version < 1:
            raise StructuralError("/version", "version must be a positive integer")

    def to_json(self, include_signature: bool = True) -> dict:
        out = dict(self.extra)
        out.update(
            bomFormat=self.bom_format,
            specVersion=self.spec_version,
            version=self.version,
            metadata=self.metadata.to_json(),
            components=[c.to_json() for c in self.components],
        )
        if self.external_references is not None:
            out["externalReferences"] = [r.to_json() for r in self.external_references]
        if include_signature and self.signature is not None:
            out["signature"] = self.signature.to_json()
        return out


# --------------------------------------------------------------------------
# parsing


@contextmanager
def _under(path: str):
    try:
        yield
    except StructuralError as exc:
        raise StructuralError(path + exc.path, exc.message) from None


def _expect(value: Any, kind: type | tuple, path: str, what: str):
    if isinstance(value, bool) and kind is not bool:
        raise StructuralError(path, f"expected {what}, got boolean")
    if not isinstance(value, kind):
        raise StructuralError(path, f"expected {what}, got {type(value).__name__}")
    return value


def _take(obj: dict, key: str, path: str, kind=str, what="string", required=True):
    if key not in obj:
        if required:
            raise StructuralError(f"{path}/{key}", "required field is missing")
        return None
    return _expect(obj[key], kind, f"{path}/{key}", what)


def _rest(obj: dict, known: tuple[str, ...]) -> dict:
    return {k: v for k, v in obj.items() if k not in known}


def _parse_hash(obj: Any, path: str) -> HashEntry:
    _expect(obj, dict, path, "object")
    alg = _take(obj, "alg", path)
    content = _take(obj, "content", path)
    if _HEXISH.match(content):
        content = content.lower()
    with _under(path):
        return HashEntry(alg, content, _rest(obj, ("alg", "content")))


def _parse_property(obj: Any, path: str) -> PropertyEntry:
    _expect(obj, dict, path, "object")
    return PropertyEntry(_take(obj, "name", path), _take(obj, "value", path), _rest(obj, ("name", "value")))


def _parse_list(obj: dict, key: str, path: str, item_parser, required=True):
    raw = _take(obj, key, path, list, "array", required)
    if raw is None:
        return None
    return tuple(item_parser(item, f"{path}/{key}/{i}") for i, item in enumerate(raw))


def _parse_component(obj: Any, path: str) -> ComponentRecord:
    _expect(obj, dict, path, "object")
    known = ("type", "name", "version", "hashes", "properties", "purl", "components")
    fields = dict(
        type=_take(obj, "type", path),
        name=_take(obj, "name", path),
        version=_take(obj, "version", path),
        hashes=_parse_list(obj, "hashes", path, _parse_hash, required=False) or (),
        properties=_parse_list(obj, "properties", path, _parse_property, required=False),
        purl=_take(obj, "purl", path, required=False),
        components=_parse_list(obj, "components", path, _parse_component, required=False),
    )
    with _under(path):
        return ComponentRecord(**fields, extra=_rest(obj, known))


def _parse_tool(obj: Any, path: str) -> ToolDescriptor:
    _expect(obj, dict, path, "object")
    return ToolDescriptor(
        _take(obj, "vendor", path),
        _take(obj, "name", path),
        _take(obj, "version", path),
        _rest(obj, ("vendor", "name", "version")),
    )


def _parse_reference(obj: Any, path: str) -> ExternalReference:
    _expect(obj, dict, path, "object")
    with _under(path):
        return ExternalReference(_take(obj, "type", path), _take(obj, "url", path), _rest(obj, ("type", "url")))


def _parse_signature(obj: Any, path: str) -> SignatureEnvelope:
    _expect(obj, dict, path, "object")
    known = ("alg", "publicKey", "signature", "timestamp")
    values = [_take(obj, k, path) for k in known]
    with _under(path):
        return SignatureEnvelope(*values, extra=_rest(obj, known))


def _parse_metadata(obj: Any, path: str) -> DocumentMetadata:
    _expect(obj, dict, path, "object")
    timestamp = _take(obj, "timestamp", path)
    tools = _parse_list(obj, "tools", path, _parse_tool)
    component = _parse_component(_take(obj, "component", path, dict, "object"), f"{path}/component")
    with _under(path):
        return DocumentMetadata(timestamp, tools, component, _rest(obj, ("timestamp", "tools", "component")))


def _reject_constant(token: str):
    raise ValueError(f"non-finite number {token} is not valid JSON")


def load_json(data: bytes | str) -> Any:
    """Decode JSON text, raising :class:`ParseError` with a byte offset on failure."""
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not valid UTF-8: {exc.reason}", exc.start) from None
    else:
        text = data
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise ParseError(exc.msg, offset) from None
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def document_from_json(obj: Any) -> AibomDocument:
    """Build an :class:`AibomDocument` from already-decoded JSON."""
    _expect(obj, dict, "", "object")
    known = ("bomFormat", "specVersion", "version", "metadata", "components", "externalReferences", "signature")
    bom_format = _take(obj, "bomFormat", "")
    spec_version = _take(obj, "specVersion", "")
    version = _take(obj, "version", "", int, "integer")
    metadata = _parse_metadata(_take(obj, "metadata", "", dict, "object"), "/metadata")
    components = _parse_list(obj, "components", "", _parse_component)
    refs = _parse_list(obj, "externalReferences", "", _parse_reference, required=False)
    sig_obj = _take(obj, "signature", "", dict, "object", required=False)
    signature = _parse_signature(sig_obj, "/signature") if sig_obj is not None else None
    return AibomDocument(
        metadata=metadata,
        components=components,
        version=version,
        external_references=refs,
        signature=signature,
        bom_format=bom_format,
        spec_version=spec_version,
        extra=_rest(obj, known),
    )


def parse_document(data: bytes | str) -> AibomDocument:
    """Parse UTF-8 JSON text into an :class:`AibomDocument`.

    Raises :class:`ParseError` for malformed JSON and :class:`StructuralError`
    (carrying a JSON-pointer path) when a known field has the wrong shape.
    """
    return document_from_json(load_json(data))


def serialize_canonical(doc: AibomDocument) -> bytes:
    """Deterministic byte form of ``doc``, signature block excluded."""
    return canonical_bytes(doc.to_json(include_signature=False))


def dump_document(doc: AibomDocument, indent: int | None = 2) -> str:
    """Human-readable JSON including the signature block."""
    return json.dumps(doc.to_json(), indent=indent, ensure_ascii=False) + "\n"


# --------------------------------------------------------------------------
# SACRO extensions


def _check_extension(logical: str, value: str) -> str:
    if logical in ("treContainerHash", "outputDigest"):
        value = value.lower()
        if not is_prefixed_digest(value):
            raise StructuralError(f"/{logical}", "expected 'sha256:' followed by 64 hex characters")
    elif logical == "modelReference":
        value = value.lower()
        bare = value[len("sha256:"):] if value.startswith("sha256:") else value
        if not is_sha256_hex(bare):
            raise StructuralError(f"/{logical}", "expected a SHA-256 hex digest")
    elif logical == "disclosureControlType" and value not in _disclosure_controls:
        raise StructuralError(f"/{logical}", f"{value!r} is not a registered disclosure control")
    return value


def extract_sacro_properties(component: ComponentRecord) -> SacroExtensions:
    """Collect the six SACRO extension fields from a component's properties.

    Bare and ``x-sacrospec-`` prefixed names are treated as the same field.
    Repeating a field with a different value raises :class:`AmbiguityError`.
    """
    seen: dict[str, list[PropertyEntry]] = {}
    for prop in component.properties or ():
        logical = logical_property_name(prop.name)
        if logical is not None:
            seen.setdefault(logical, []).append(prop)
    values = {}
    for logical, entries in seen.items():
        distinct = {_check_extension(logical, e.value) for e in entries}
        if len(distinct) > 1:
            raise AmbiguityError(logical, [(e.name, e.value) for e in entries])
        values[SACRO_FIELDS[logical]] = distinct.pop()
    return SacroExtensions(**values)


def iter_components(doc: AibomDocument) -> Iterator[ComponentRecord]:
    """Depth-first walk over ``doc.components`` including nested children."""
    stack = list(reversed(doc.components))
    while stack:
        comp = stack.pop()
        yield comp
        stack.extend(reversed(comp.components or ()))


def find_extension(doc: AibomDocument, logical: str, types: frozenset[str] | None = None) -> str | None:
    """First value of a SACRO field: root component first, then listed components."""
    attr = SACRO_FIELDS[logical]
    candidates = [doc.metadata.component, *iter_components(doc)]
    for comp in candidates:
        if comp is not doc.metadata.component and types is not None and comp.type not in types:
            continue
        value = getattr(extract_sacro_properties(comp), attr)
        if value is not None:
            return value
    return None
