"""Artifact digests, canonical output sets and the Merkle binding of outputs."""

from __future__ import annotations

import hashlib
import io
import json
import mimetypes
from collections import Counter
from collections.abc import Iterable
from dataclasses import dataclass, replace
from typing import BinaryIO, Union

from .canonical import canonical_dumps
from .errors import DomainError
from .model import SACRO_PREFIX, AibomDocument, PropertyEntry, is_sha256_hex, logical_property_name

OUTPUT_ARTIFACT = SACRO_PREFIX + "outputArtifact"
OUTPUT_DIGEST = SACRO_PREFIX + "outputDigest"

_CHUNK = 1 << 16

Stream = Union[bytes, bytearray, BinaryIO]


@dataclass(frozen=True)
class ArtifactDigest:
    hex: str
    source_name: str = ""
    byte_size: int = 0
    mime_type: str = "application/octet-stream"
    algorithm: str = "SHA-256"

    def __post_init__(self):
        if not is_sha256_hex(self.hex):
            raise DomainError(f"digest must be 64 lowercase hex characters, got {self.hex!r}")
        if self.byte_size < 0:
            raise DomainError("byte_size must be non-negative")

    @property
    def raw(self) -> bytes:
        return bytes.fromhex(self.hex)

    @property
    def prefixed(self) -> str:
        return "sha256:" + self.hex

    def to_json(self) -> dict:
        return {
            "name": self.source_name,
            "byteSize": self.byte_size,
            "mimeType": self.mime_type,
            "digest": self.prefixed,
        }


@dataclass(frozen=True)
class MerkleTree:
    leaves: tuple[ArtifactDigest, ...]
    levels: tuple[tuple[str, ...], ...]

    @property
    def root(self) -> str:
        return self.levels[-1][0]


@dataclass(frozen=True)
class MerkleProof:
    leaf_index: int
    # (sibling hex, side of the sibling: "left" or "right")
    siblings: tuple[tuple[str, str], ...]


def _chunks(data: Stream) -> Iterable[bytes]:
    if isinstance(data, (bytes, bytearray)):
        data = io.BytesIO(bytes(data))
    while True:
        chunk = data.read(_CHUNK)
        if not chunk:
            return
        yield chunk


def _crlf_to_lf(chunks: Iterable[bytes]) -> Iterable[bytes]:
    pending_cr = False
    for chunk in chunks:
        if pending_cr:
            chunk = b"\r" + chunk
        pending_cr = chunk.endswith(b"\r")
        if pending_cr:
            chunk = chunk[:-1]
        yield chunk.replace(b"\r\n", b"\n")
    if pending_cr:
        yield b"\r"


def hash_stream(
    data: Stream,
    name: str = "",
    mime_type: str | None = None,
    normalize_newlines: bool = False,
) -> ArtifactDigest:
    """SHA-256 of a byte stream, with file metadata attached.

    ``normalize_newlines`` rewrites CRLF to LF before hashing; by default the
    exact bytes are hashed.  ``mime_type`` is guessed from ``name`` if omitted.
    """
    h = hashlib.sha256()
    size = 0
    chunks = _chunks(data)
    if normalize_newlines:
        chunks = _crlf_to_lf(chunks)
    for chunk in chunks:
        h.update(chunk)
        size += len(chunk)
    if mime_type is None:
        mime_type = mimetypes.guess_type(name)[0] or "application/octet-stream"
    return ArtifactDigest(h.hexdigest(), name, size, mime_type)


def digest_output_set(files: Iterable[tuple], normalize_newlines: bool = False) -> list[ArtifactDigest]:
    """Digest ``(name, stream[, mime_type])`` tuples in code-point order of name."""
    files = list(files)
    dupes = sorted(n for n, c in Counter(f[0] for f in files).items() if c > 1)
    if dupes:
        raise DomainError(f"duplicate output names: {', '.join(dupes)}")
    out = []
    for entry in sorted(files, key=lambda f: f[0]):
        name, stream = entry[0], entry[1]
        mime = entry[2] if len(entry) > 2 else None
        out.append(hash_stream(stream, name, mime, normalize_newlines))
    return out


def _parent(left: str, right: str) -> str:
    return hashlib.sha256(bytes.fromhex(left) + bytes.fromhex(right)).hexdigest()


def build_merkle(leaves: Iterable[ArtifactDigest]) -> MerkleTree:
    """Binary SHA-256 tree over raw 32-byte digests; an odd tail node is promoted."""
    leaves = tuple(leaves)
    if not leaves:
        raise DomainError("cannot build a Merkle tree without leaves")
    level = tuple(leaf.hex for leaf in leaves)
    levels = [level]
    while len(level) > 1:
        nxt = [_parent(level[i], level[i + 1]) for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = tuple(nxt)
        levels.append(level)
    return MerkleTree(leaves, tuple(levels))


def prove_leaf(tree: MerkleTree, index: int) -> MerkleProof:
    if not 0 <= index < len(tree.leaves):
        raise DomainError(f"leaf index {index} out of range for {len(tree.leaves)} leaves")
    siblings = []
    pos = index
    for level in tree.levels[:-1]:
        sib = pos ^ 1
        if sib < len(level):
            siblings.append((level[sib], "left" if sib < pos else "right"))
        pos //= 2
    return MerkleProof(index, tuple(siblings))


def verify_proof(root: str, leaf: ArtifactDigest, proof: MerkleProof) -> bool:
    try:
        node = leaf.hex
        for sibling, side in proof.siblings:
            if side == "left":
                node = _parent(sibling, node)
            elif side == "right":
                node = _parent(node, sibling)
            else:
                return False
    except (ValueError, TypeError):
        return False
    return node == root


def _output_properties(outputs: list[ArtifactDigest]) -> list[PropertyEntry]:
    root = build_merkle(outputs).root
    props = [PropertyEntry(OUTPUT_DIGEST, "sha256:" + root)]
    props += [PropertyEntry(OUTPUT_ARTIFACT, canonical_dumps(d.to_json())) for d in outputs]
    return props


def bind_outputs(doc: AibomDocument, outputs: Iterable[ArtifactDigest]) -> AibomDocument:
    """Record the Merkle root of ``outputs`` on the root component.

    Any earlier output binding on the root component (either naming style) is
    replaced.  The per-file records keep name, size, MIME type and digest so
    that a later audit can tell a renamed file from an untouched one.
    """
    outputs = sorted(outputs, key=lambda d: d.source_name)
    if not outputs:
        raise DomainError("no outputs to bind")
    root = doc.metadata.component
    kept = [
        p for p in root.properties or ()
        if logical_property_name(p.name) != "outputDigest" and p.name != OUTPUT_ARTIFACT
    ]
    new_root = replace(root, properties=tuple(kept + _output_properties(outputs)))
    return replace(doc, metadata=replace(doc.metadata, component=new_root))


def bound_artifacts(doc: AibomDocument) -> list[dict]:
    """Per-file output records written by :func:`bind_outputs`."""
    return [json.loads(v) for v in doc.metadata.component.property_values(OUTPUT_ARTIFACT)]
