"""Toolkit for SACRO-extended CycloneDX 1.5 AI bills of materials (AIBOMs)."""

__version__ = "0.1.0"

from .audit import FidelityReport, ProvenanceChain, assemble_chain, embed_chain, extract_chain, replay_compare, verify_container, verify_outputs
from .model import (
    AibomDocument,
    ComponentRecord,
    DocumentMetadata,
    ExternalReference,
    HashEntry,
    PropertyEntry,
    SacroExtensions,
    SignatureEnvelope,
    ToolDescriptor,
    dump_document,
    extract_sacro_properties,
    parse_document,
    serialize_canonical,
)
from .provenance import ArtifactDigest, MerkleProof, MerkleTree, bind_outputs, build_merkle, digest_output_set, hash_stream, prove_leaf, verify_proof
from .signing import JobBinding, KeyPair, bind_job, generate_keypair, sign_document, verify_document
from .validator import ValidationReport, Violation, validate_file, validate_object, validate_structure

__all__ = [
    "AibomDocument",
    "ArtifactDigest",
    "ComponentRecord",
    "DocumentMetadata",
    "ExternalReference",
    "FidelityReport",
    "HashEntry",
    "JobBinding",
    "KeyPair",
    "MerkleProof",
    "MerkleTree",
    "PropertyEntry",
    "ProvenanceChain",
    "SacroExtensions",
    "SignatureEnvelope",
    "ToolDescriptor",
    "ValidationReport",
    "Violation",
    "assemble_chain",
    "bind_job",
    "bind_outputs",
    "build_merkle",
    "digest_output_set",
    "dump_document",
    "embed_chain",
    "extract_chain",
    "extract_sacro_properties",
    "generate_keypair",
    "hash_stream",
    "parse_document",
    "prove_leaf",
    "replay_compare",
    "serialize_canonical",
    "sign_document",
    "validate_file",
    "validate_object",
    "validate_structure",
    "verify_container",
    "verify_document",
    "verify_outputs",
    "verify_proof",
]
