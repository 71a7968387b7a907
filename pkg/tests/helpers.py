"""Document builders shared by the test modules."""

from __future__ import annotations

import hashlib
from pathlib import Path

from aibom.model import (
    AibomDocument,
    ComponentRecord,
    DocumentMetadata,
    HashEntry,
    PropertyEntry,
    ToolDescriptor,
)

DATA = Path(__file__).parent / "data"
VULNS = DATA / "vulns"
TOOL = ToolDescriptor("tests", "fixture builder", "0.0.0")
STAMP = "2025-06-20T14:30:00Z"


def sha(text: str | bytes) -> str:
    if isinstance(text, str):
        text = text.encode()
    return hashlib.sha256(text).hexdigest()


def root(name: str = "pipeline") -> ComponentRecord:
    return ComponentRecord("application", name, "1.0.0", (HashEntry("SHA-256", sha(name)),))


def lib(name: str, version: str, eco: str = "pypi", digest: str | None = None, ctype: str = "library") -> ComponentRecord:
    if eco == "deb":
        purl = f"pkg:deb/debian/{name}@{version}"
    elif eco:
        purl = f"pkg:{eco}/{name}@{version}"
    else:
        purl = None
    return ComponentRecord(
        ctype, name, version, (HashEntry("SHA-256", digest or sha(f"{name}@{version}")),), properties=(), purl=purl
    )


def unpinned(name: str) -> ComponentRecord:
    return ComponentRecord(
        "library", name, "unresolved", (),
        properties=(PropertyEntry("x-sacrospec-unverifiable", "true"),
                    PropertyEntry("x-sacrospec-hash-unavailable", "true")),
    )


def model_component(name: str = "model", digest: str | None = None) -> ComponentRecord:
    digest = digest or sha(name)
    return ComponentRecord(
        "ai-model", name, "1.0.0", (HashEntry("SHA-256", digest),),
        properties=(PropertyEntry("x-sacrospec-modelReference", digest),
                    PropertyEntry("x-sacrospec-disclosureControlType", "cell-suppression")),
    )


def document(components, name: str = "pipeline") -> AibomDocument:
    return AibomDocument(DocumentMetadata(STAMP, (TOOL,), root(name)), tuple(components))


def wide_document(n: int, salt: str = "") -> AibomDocument:
    return document([lib(f"pkg{i:05d}", "1.0.0", digest=sha(f"{salt}{i}")) for i in range(n)])


def nested_document(n: int, depth: int) -> AibomDocument:
    """``n`` components spread over chains ``depth`` levels deep."""
    chains = []
    made = 0
    while made < n:
        size = min(depth, n - made)
        node = None
        for level in reversed(range(size)):
            i = made + level
            node = ComponentRecord(
                "library", f"c{i}", "1.0.0", (HashEntry("SHA-256", sha(str(i))),), properties=(),
                components=(node,) if node is not None else None,
            )
        chains.append(node)
        made += size
    return document(chains)


def depth_of(obj: dict) -> int:
    kids = obj.get("components") or []
    return 1 + max((depth_of(k) for k in kids), default=0)
