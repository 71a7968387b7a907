"""Replay auditing: digest comparison of original vs. recomputed AIBOMs,
container and output verification, and the signed provenance chain."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Iterable

from .canonical import canonical_dumps
from .errors import DomainError, MissingPropertyError
from .model import SACRO_PREFIX, AibomDocument, ComponentRecord, PropertyEntry, ToolDescriptor, find_extension, iter_components
from .provenance import ArtifactDigest, bound_artifacts, build_merkle, digest_output_set

DEVIATION_KINDS = ("digest-mismatch", "missing-in-replay", "extra-in-replay", "unverifiable")
PROVENANCE_CHAIN = SACRO_PREFIX + "provenanceChain"
SOURCE_REFERENCE_TYPES = frozenset({"vcs", "distribution", "source-distribution", "website"})


@dataclass(frozen=True)
class Deviation:
    component_ref: tuple[str, str]
    kind: str
    detail: str = ""

    def to_json(self) -> dict:
        return {
            "component": {"name": self.component_ref[0], "version": self.component_ref[1]},
            "kind": self.kind,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class FidelityReport:
    total: int
    matched: int
    deviations: tuple[Deviation, ...] = ()

    @property
    def fidelity(self) -> Fraction:
        return Fraction(100) if self.total == 0 else Fraction(100 * self.matched, self.total)

    @property
    def fidelity_pct(self) -> Decimal:
        f = self.fidelity
        return (Decimal(f.numerator) / Decimal(f.denominator)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)

    def count(self, kind: str) -> int:
        return sum(1 for d in self.deviations if d.kind == kind)

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "matched": self.matched,
            "fidelityPct": float(self.fidelity_pct),
            "deviations": [d.to_json() for d in self.deviations],
        }


def _is_unverifiable(comp: ComponentRecord) -> bool:
    return comp.unverifiable or not comp.hashes


def _hash_set(comp: ComponentRecord) -> set[tuple[str, str]]:
    return {(h.alg, h.content) for h in comp.hashes}


def replay_compare(original: AibomDocument, recomputed: AibomDocument) -> FidelityReport:
    """Pair components by (type, name) and compare their digests byte for byte.

    Unverifiable components (unresolved version or no hash) stay out of the
    denominator but are always listed among the deviations.
    """
    left: dict[tuple[str, str], list[ComponentRecord]] = {}
    right: dict[tuple[str, str], list[ComponentRecord]] = {}
    for comp in iter_components(original):
        left.setdefault((comp.type, comp.name), []).append(comp)
    for comp in iter_components(recomputed):
        right.setdefault((comp.type, comp.name), []).append(comp)

    total = matched = 0
    deviations: list[Deviation] = []
    for key in list(left) + [k for k in right if k not in left]:
        olds, news = left.get(key, []), right.get(key, [])
        for i in range(max(len(olds), len(news))):
            old = olds[i] if i < len(olds) else None
            new = news[i] if i < len(news) else None
            ref = (old or new).ref
            if any(c is not None and _is_unverifiable(c) for c in (old, new)):
                deviations.append(Deviation(ref, "unverifiable", "no resolvable version or digest"))
                continue
            total += 1
            if new is None:
                deviations.append(Deviation(ref, "missing-in-replay", f"{key[0]} {key[1]} absent from replay"))
            elif old is None:
                deviations.append(Deviation(ref, "extra-in-replay", f"{key[0]} {key[1]} not in original"))
            elif _hash_set(old) <= _hash_set(new):
                matched += 1
            else:
                detail = "digest differs"
                if old.version != new.version:
                    detail += f"; version drift {old.version} -> {new.version}"
                deviations.append(Deviation(ref, "digest-mismatch", detail))
    return FidelityReport(total, matched, tuple(deviations))


def verify_container(doc: AibomDocument, observed_digest: str) -> bool:
    """Compare an observed container image digest with the recorded one."""
    stored = find_extension(doc, "treContainerHash", frozenset({"ai-model"}))
    if stored is None:
        raise MissingPropertyError("document records no treContainerHash")
    return stored == observed_digest.strip().lower()


def verify_outputs(doc: AibomDocument, files: Iterable[tuple], normalize_newlines: bool = False) -> bool:
    """Recompute the output Merkle root (and per-file records, if bound) and compare."""
    stored = find_extension(doc, "outputDigest")
    if stored is None:
        raise MissingPropertyError("document records no outputDigest")
    digests = digest_output_set(files, normalize_newlines)
    if not digests:
        return False
    if "sha256:" + build_merkle(digests).root != stored:
        return False
    records = bound_artifacts(doc)
    if records:
        return records == [d.to_json() for d in digests]
    return True


@dataclass(frozen=True)
class ProvenanceChain:
    source_repositories: tuple[str, ...]
    container_build_context: ArtifactDigest
    execution_agent: ToolDescriptor
    executed_at: str
    transformation_lineage: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "sourceRepositories": list(self.source_repositories),
            "containerBuildContext": self.container_build_context.to_json(),
            "executionAgent": {**self.execution_agent.to_json(), "timestamp": self.executed_at},
            "transformationLineage": list(self.transformation_lineage),
        }

    @classmethod
    def from_json(cls, obj: dict) -> ProvenanceChain:
        ctx = obj["containerBuildContext"]
        agent = obj["executionAgent"]
        digest = ctx["digest"]
        return cls(
            source_repositories=tuple(obj.get("sourceRepositories", ())),
            container_build_context=ArtifactDigest(
                digest[7:] if digest.startswith("sha256:") else digest,
                ctx.get("name", ""),
                ctx.get("byteSize", 0),
                ctx.get("mimeType", "application/octet-stream"),
            ),
            execution_agent=ToolDescriptor(agent["vendor"], agent["name"], agent["version"]),
            executed_at=agent["timestamp"],
            transformation_lineage=tuple(obj.get("transformationLineage", ())),
        )


def _source_urls(doc: AibomDocument) -> list[str]:
    urls = [r.url for r in doc.external_references or () if r.type in SOURCE_REFERENCE_TYPES]
    for comp in [doc.metadata.component, *iter_components(doc)]:
        for ref in comp.extra.get("externalReferences") or []:
            if isinstance(ref, dict) and ref.get("type") in SOURCE_REFERENCE_TYPES and ref.get("url"):
                urls.append(ref["url"])
    return list(dict.fromkeys(urls))


def assemble_chain(doc: AibomDocument, build_context: ArtifactDigest, lineage: Iterable[str] = ()) -> ProvenanceChain:
    if not doc.metadata.tools:
        raise DomainError("document metadata names no tool")
    return ProvenanceChain(
        source_repositories=tuple(_source_urls(doc)),
        container_build_context=build_context,
        execution_agent=doc.metadata.tools[0],
        executed_at=doc.metadata.timestamp,
        transformation_lineage=tuple(lineage),
    )


def embed_chain(doc: AibomDocument, chain: ProvenanceChain) -> AibomDocument:
    """Store ``chain`` on the root component so that a later signature covers it."""
    root = doc.metadata.component
    props = [p for p in root.properties or () if p.name != PROVENANCE_CHAIN]
    props.append(PropertyEntry(PROVENANCE_CHAIN, canonical_dumps(chain.to_json())))
    return replace(doc, metadata=replace(doc.metadata, component=replace(root, properties=tuple(props))))


def extract_chain(doc: AibomDocument) -> ProvenanceChain | None:
    values = doc.metadata.component.property_values(PROVENANCE_CHAIN)
    return ProvenanceChain.from_json(json.loads(values[-1])) if values else None
