"""Document signatures (Ed25519 / ECDSA P-256) and HMAC job bindings.

The signed payload is always :func:`aibom.model.serialize_canonical`, which
leaves out the signature block itself, so a document can be reformatted or
have its keys reordered without invalidating the signature.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import os
import uuid
from dataclasses import dataclass, replace
from datetime import datetime, timezone

from cryptography.exceptions import InvalidSignature, UnsupportedAlgorithm
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec, ed25519

from .errors import DomainError, KeyMaterialError, MissingPropertyError
from .model import AibomDocument, SignatureEnvelope, b64decode_lenient, serialize_canonical

KEY_ALGS = ("Ed25519", "ECDSA-P256")
ENVELOPE_ALG = {"Ed25519": "Ed25519", "ECDSA-P256": "ECDSA"}


@dataclass(frozen=True)
class KeyPair:
    alg: str
    private_key: bytes = b""  # raw 32-byte seed (Ed25519) or PKCS#8 DER (ECDSA)
    public_key: str = ""  # base64; raw 32 bytes (Ed25519) or SubjectPublicKeyInfo DER (ECDSA)

    def __repr__(self):
        return f"KeyPair(alg={self.alg!r}, public_key={self.public_key!r})"


@dataclass(frozen=True)
class JobBinding:
    job_uuid: uuid.UUID
    mac: str
    key_id: str

    def to_json(self) -> dict:
        return {"jobUuid": str(self.job_uuid), "mac": self.mac, "keyId": self.key_id}


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _load_private(key: KeyPair):
    try:
        if key.alg == "Ed25519":
            return ed25519.Ed25519PrivateKey.from_private_bytes(key.private_key)
        if key.alg == "ECDSA-P256":
            priv = serialization.load_der_private_key(key.private_key, password=None)
            if not isinstance(priv, ec.EllipticCurvePrivateKey) or priv.curve.name != "secp256r1":
                raise KeyMaterialError("ECDSA key is not on curve P-256")
            return priv
    except (ValueError, TypeError, UnsupportedAlgorithm) as exc:
        raise KeyMaterialError(f"cannot load {key.alg} private key: {exc}") from None
    raise DomainError(f"unsupported key algorithm {key.alg!r}; expected one of {KEY_ALGS}")


def _public_b64(priv) -> str:
    if isinstance(priv, ed25519.Ed25519PrivateKey):
        raw = priv.public_key().public_bytes(serialization.Encoding.Raw, serialization.PublicFormat.Raw)
    else:
        raw = priv.public_key().public_bytes(
            serialization.Encoding.DER, serialization.PublicFormat.SubjectPublicKeyInfo
        )
    return _b64(raw)


def keypair_from_private(alg: str, private_key: bytes) -> KeyPair:
    """Rebuild a :class:`KeyPair` (deriving the public half) from private bytes."""
    priv = _load_private(KeyPair(alg, private_key))
    return KeyPair(alg, private_key, _public_b64(priv))


def generate_keypair(alg: str = "Ed25519") -> KeyPair:
    if alg == "Ed25519":
        priv = ed25519.Ed25519PrivateKey.generate()
        secret = priv.private_bytes(
            serialization.Encoding.Raw, serialization.PrivateFormat.Raw, serialization.NoEncryption()
        )
    elif alg == "ECDSA-P256":
        priv = ec.generate_private_key(ec.SECP256R1())
        secret = priv.private_bytes(
            serialization.Encoding.DER, serialization.PrivateFormat.PKCS8, serialization.NoEncryption()
        )
    else:
        raise DomainError(f"unsupported key algorithm {alg!r}; expected one of {KEY_ALGS}")
    return KeyPair(alg, secret, _public_b64(priv))


def load_key_file(path: str | os.PathLike, passphrase: bytes | None = None) -> KeyPair:
    """Load a signing key: a 32-byte raw Ed25519 seed, or a DER/PEM private key."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) == 32:
        return keypair_from_private("Ed25519", data)
    loader = serialization.load_pem_private_key if data.lstrip().startswith(b"-----") else serialization.load_der_private_key
    try:
        priv = loader(data, password=passphrase)
    except (ValueError, TypeError, UnsupportedAlgorithm) as exc:
        raise KeyMaterialError(f"{path}: unreadable private key ({exc})") from None
    if isinstance(priv, ed25519.Ed25519PrivateKey):
        return keypair_from_private("Ed25519", priv.private_bytes(
            serialization.Encoding.Raw, serialization.PrivateFormat.Raw, serialization.NoEncryption()))
    if isinstance(priv, ec.EllipticCurvePrivateKey):
        der = priv.private_bytes(
            serialization.Encoding.DER, serialization.PrivateFormat.PKCS8, serialization.NoEncryption()
        )
        return keypair_from_private("ECDSA-P256", der)
    raise KeyMaterialError(f"{path}: unsupported key type {type(priv).__name__}")


def _ecdsa_sign(priv: ec.EllipticCurvePrivateKey, payload: bytes) -> bytes:
    try:
        return priv.sign(payload, ec.ECDSA(hashes.SHA256(), deterministic_signing=True))
    except UnsupportedAlgorithm:
        return priv.sign(payload, ec.ECDSA(hashes.SHA256()))


def sign_bytes(payload: bytes, key: KeyPair) -> bytes:
    priv = _load_private(key)
    if isinstance(priv, ed25519.Ed25519PrivateKey):
        return priv.sign(payload)
    return _ecdsa_sign(priv, payload)


def _rfc3339(at: datetime | str | None) -> str:
    if at is None:
        at = datetime.now(timezone.utc)
    if isinstance(at, str):
        return at
    if at.tzinfo is None:
        at = at.replace(tzinfo=timezone.utc)
    return at.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def sign_document(doc: AibomDocument, key: KeyPair, at: datetime | str | None = None) -> AibomDocument:
    """Return ``doc`` carrying a signature envelope over its canonical bytes.

    ECDSA signatures use RFC 6979 deterministic nonces where the linked
    OpenSSL supports them; verification accepts randomized ones as well.
    """
    signature = sign_bytes(serialize_canonical(doc), key)
    envelope = SignatureEnvelope(
        alg=ENVELOPE_ALG[key.alg],
        public_key=key.public_key or _public_b64(_load_private(key)),
        signature=_b64(signature),
        timestamp=_rfc3339(at),
    )
    return replace(doc, signature=envelope)


def verify_bytes(payload: bytes, envelope: SignatureEnvelope) -> bool:
    """Check ``envelope`` against an arbitrary payload; never raises."""
    try:
        pub_raw = b64decode_lenient(envelope.public_key)
        sig = b64decode_lenient(envelope.signature)
        if envelope.alg == "Ed25519":
            ed25519.Ed25519PublicKey.from_public_bytes(pub_raw).verify(sig, payload)
        elif envelope.alg == "ECDSA":
            pub = serialization.load_der_public_key(pub_raw)
            if not isinstance(pub, ec.EllipticCurvePublicKey):
                return False
            pub.verify(sig, payload, ec.ECDSA(hashes.SHA256()))
        else:
            return False
    except (InvalidSignature, ValueError, TypeError, UnsupportedAlgorithm):
        return False
    return True


def verify_document(doc: AibomDocument) -> bool:
    """True iff the embedded signature covers the document's canonical bytes.

    Raises :class:`MissingPropertyError` when the document is unsigned.
    """
    if doc.signature is None:
        raise MissingPropertyError("document carries no signature envelope")
    return verify_bytes(serialize_canonical(doc), doc.signature)


def hmac_sha256(key: bytes, data: bytes) -> str:
    return hmac.new(key, data, hashlib.sha256).hexdigest()


def bind_job(
    doc: AibomDocument, job_uuid: uuid.UUID | str, credential_key: bytes, key_id: str | None = None
) -> JobBinding:
    """HMAC-SHA-256 over the canonical document followed by the job UUID text."""
    if not credential_key:
        raise DomainError("credential key must be non-empty")
    job = uuid.UUID(str(job_uuid))
    mac = hmac_sha256(credential_key, serialize_canonical(doc) + str(job).encode("ascii"))
    if key_id is None:
        key_id = hashlib.sha256(credential_key).hexdigest()[:16]
    return JobBinding(job, mac, key_id)
