"""``aibom`` command line.

Exit codes are uniform across commands: 0 clean pass, 1 policy finding
(violations, critical CVEs, fidelity below 100, bad signature), 2
operational error (unreadable input, missing key, unreachable source).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .audit import replay_compare
from .cve import HttpSource, OfflineSource, component_queries, match_components, merge_records, query_nvd, query_osv
from .dependencies import (
    capture_model_state,
    capture_snapshot,
    ingest_runtime_import_log,
    model_to_component,
    parse_conda_env,
    parse_dpkg_status,
    parse_pip_manifest,
    snapshot_digest,
    snapshot_to_components,
)
from .errors import AibomError, KeyMaterialError, MissingPropertyError, SourceUnavailable
from .model import (
    AibomDocument,
    ComponentRecord,
    DocumentMetadata,
    HashEntry,
    ToolDescriptor,
    dump_document,
    parse_document,
)
from .provenance import bind_outputs, digest_output_set
from .signing import load_key_file, sign_document, verify_document
from .validator import validate_file, validate_object

OK, FINDING, FAILURE = 0, 1, 2

GENERATOR = ToolDescriptor("aibom", "AIBOM Generator", __version__)
PASSPHRASE_ENV = "AIBOM_KEY_PASSPHRASE"
NVD_KEY_ENV = "NVD_API_KEY"


class Output:
    """Human text goes to stdout, or to stderr in JSON mode so stdout holds one document."""

    def __init__(self, fmt: str, stdout=None, stderr=None):
        self.json = fmt == "json"
        self.stdout = stdout or sys.stdout
        self.stderr = stderr or sys.stderr

    def say(self, text: str) -> None:
        print(text, file=self.stderr if self.json else self.stdout)

    def warn(self, text: str) -> None:
        print(f"warning: {text}", file=self.stderr)

    def error(self, text: str) -> None:
        print(f"Error: {text}", file=self.stderr)

    def result(self, payload: dict) -> None:
        if self.json:
            json.dump(payload, self.stdout, indent=2)
            self.stdout.write("\n")


def atomic_write(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load(path: str) -> AibomDocument:
    with open(path, "rb") as fh:
        return parse_document(fh.read())


# --------------------------------------------------------------------------
# commands


def cmd_validate(args, out: Output) -> int:
    try:
        report = validate_file(args.file, strict=args.strict)
    except OSError as exc:
        out.error(f"{args.file}: {exc.strerror or exc}")
        out.result({"valid": False, "error": str(exc)})
        return FAILURE
    out.result(report.to_json())
    if any(v.rule == "json-syntax" for v in report.violations):
        out.error(report.violations[0].message)
        return FAILURE
    if report.valid:
        out.say("Validation successful: AIBOM conforms to SACRO-specific schema.")
        return OK
    for v in report.violations:
        out.say(f"Validation failed: {v.path or '/'} [{v.rule}] {v.message}")
    return FINDING


def _read_text(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def cmd_generate(args, out: Output) -> int:
    if not (args.pip or args.conda or args.dpkg or args.import_log or args.model):
        out.error("generate needs at least one manifest, import log or --model file")
        return FAILURE
    at = args.timestamp or datetime.now(timezone.utc).replace(microsecond=0).isoformat().replace("+00:00", "Z")
    try:
        declared = []
        for path in args.pip:
            declared += parse_pip_manifest(_read_text(path), path)
        for path in args.conda:
            declared += parse_conda_env(_read_text(path), path)
        for path in args.dpkg:
            declared += parse_dpkg_status(_read_text(path), path)
        runtime = []
        for path in args.import_log:
            log = ingest_runtime_import_log(_read_text(path), path)
            if log.malformed:
                out.warn(f"{path}: skipped {log.malformed} malformed line(s)")
            runtime += log.dependencies
        model_component = None
        artifacts = []
        if args.model:
            with open(args.model, "rb") as fh:
                state = capture_model_state(fh, Path(args.model).name, args.architecture)
            artifacts.append(state.file_checksum)
            model_component = model_to_component(state, args.model_name or Path(args.model).stem, args.model_version)
    except OSError as exc:
        out.error(f"{exc.filename}: {exc.strerror}")
        return FAILURE
    except AibomError as exc:
        out.error(str(exc))
        return FAILURE

    pre = capture_snapshot("pre-load", declared, at=at)
    merged = capture_snapshot("runtime", list(pre.dependencies) + runtime, at=at)
    post = capture_snapshot("post-execution", merged.dependencies, artifacts, at=at)
    components = snapshot_to_components(post)
    if model_component is not None:
        components.append(model_component)
    root = ComponentRecord(
        type="application",
        name=args.name,
        version=args.app_version,
        hashes=(HashEntry("SHA-256", snapshot_digest(post).hex),),
    )
    doc = AibomDocument(
        metadata=DocumentMetadata(at, (GENERATOR,), root),
        components=tuple(components),
    )
    report = validate_object(doc.to_json())
    if not report.valid:
        for v in report.violations:
            out.warn(f"generated document: {v.path} [{v.rule}] {v.message}")
    text = dump_document(doc)
    if args.output:
        atomic_write(args.output, text)
        out.say(f"wrote {args.output} ({len(components)} components)")
        out.result({"output": args.output, "components": len(components), "valid": report.valid})
    elif out.json:
        out.result(doc.to_json())
    else:
        out.stdout.write(text)
    return OK


def cmd_sign(args, out: Output) -> int:
    if not args.key:
        out.error("sign requires --key <path>")
        return FAILURE
    passphrase = os.environ.get(PASSPHRASE_ENV)
    try:
        doc = _load(args.file)
        key = load_key_file(args.key, passphrase.encode() if passphrase else None)
        signed = sign_document(doc, key)
    except OSError as exc:
        out.error(f"{exc.filename}: {exc.strerror}")
        return FAILURE
    except (AibomError, KeyMaterialError) as exc:
        out.error(str(exc))
        return FAILURE
    atomic_write(args.file, dump_document(signed))
    out.say(f"signed {args.file} ({signed.signature.alg})")
    out.result({"signed": True, "alg": signed.signature.alg, "publicKey": signed.signature.public_key})
    return OK


def cmd_verify(args, out: Output) -> int:
    try:
        doc = _load(args.file)
        ok = verify_document(doc)
    except OSError as exc:
        out.error(f"{exc.filename}: {exc.strerror}")
        return FAILURE
    except MissingPropertyError as exc:
        out.error(f"{args.file}: {exc}")
        out.result({"verified": False, "error": "unsigned"})
        return FAILURE
    except AibomError as exc:
        out.error(str(exc))
        return FAILURE
    out.result({"verified": ok})
    out.say("Signature valid." if ok else "Signature INVALID: document or envelope has been altered.")
    return OK if ok else FINDING


def _sources(token: str):
    """Return (osv client or None, nvd client or None) for a --vuln-source token."""
    if token.startswith("offline:"):
        src = OfflineSource(token[len("offline:"):])
        return src, src
    if token not in ("osv", "nvd", "both"):
        raise ValueError(f"unknown vulnerability source {token!r}")
    live = HttpSource(api_key=os.environ.get(NVD_KEY_ENV))
    return (live if token in ("osv", "both") else None), (live if token in ("nvd", "both") else None)


def cmd_scan(args, out: Output) -> int:
    try:
        doc = _load(args.file)
        osv, nvd = _sources(args.vuln_source)
    except OSError as exc:
        out.error(str(exc))
        return FAILURE
    except (AibomError, ValueError) as exc:
        out.error(str(exc))
        return FAILURE
    purls, cpes = component_queries(doc)
    records, failures = [], []
    for name, client, query, keys in (("osv", osv, query_osv, purls), ("nvd", nvd, query_nvd, cpes)):
        if client is None:
            continue
        try:
            records += query(keys, client)
        except SourceUnavailable as exc:
            failures.append(f"{name}: {exc}")
            records += exc.partial
    if failures and not records:
        for f in failures:
            out.error(f)
        return FAILURE
    for f in failures:
        out.warn(f"{f} (continuing with partial results)")
    report = match_components(doc, merge_records(records))
    out.result(report.to_json())
    for m in report.matches:
        out.say(f"{m.severity_class.upper():9} {m.cve.id:20} {m.component_ref[0]}@{m.component_ref[1]} ({m.basis})")
    for ref in report.unverifiable:
        out.say(f"UNVERIFIABLE {ref[0]}@{ref[1]}")
    for action in report.mitigations:
        out.say(f"mitigation: {action.kind} -> {action.target[0]}: {action.rationale}")
    out.say(f"{len(report.matches)} match(es), {report.critical_alerts} critical alert(s)")
    return FINDING if report.critical_alerts else OK


def cmd_audit(args, out: Output) -> int:
    try:
        original = _load(args.original)
        recomputed = _load(args.recomputed)
    except OSError as exc:
        out.error(f"{exc.filename}: {exc.strerror}")
        return FAILURE
    except AibomError as exc:
        out.error(str(exc))
        return FAILURE
    report = replay_compare(original, recomputed)
    out.result(report.to_json())
    for d in report.deviations:
        out.say(f"{d.kind:18} {d.component_ref[0]}@{d.component_ref[1]}: {d.detail}")
    out.say(f"Reproducibility fidelity: {report.fidelity_pct}% ({report.matched}/{report.total})")
    return OK if report.fidelity == 100 else FINDING


def cmd_bind(args, out: Output) -> int:
    if not args.outputs:
        out.error("bind needs at least one output file")
        return FAILURE
    try:
        doc = _load(args.file)
        handles = [open(p, "rb") for p in args.outputs]
        try:
            digests = digest_output_set(
                [(Path(p).name, fh) for p, fh in zip(args.outputs, handles)],
                normalize_newlines=args.normalize_newlines,
            )
        finally:
            for fh in handles:
                fh.close()
        bound = bind_outputs(doc, digests)
    except OSError as exc:
        out.error(f"{exc.filename}: {exc.strerror}")
        return FAILURE
    except AibomError as exc:
        out.error(str(exc))
        return FAILURE
    if doc.signature is not None:
        out.warn("document was signed; binding outputs invalidates that signature, re-sign it")
    atomic_write(args.file, dump_document(bound))
    root = bound.metadata.component.property_values("x-sacrospec-outputDigest")[0]
    out.say(f"bound {len(digests)} output(s): {root}")
    out.result({"outputDigest": root, "outputs": [d.to_json() for d in digests]})
    return OK


def cmd_keygen(args, out: Output) -> int:
    from .signing import generate_keypair

    key = generate_keypair(args.alg)
    path = Path(args.path)
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(fd, "wb") as fh:
        fh.write(key.private_key)
    out.say(f"wrote {args.alg} private key to {path}")
    out.result({"alg": args.alg, "publicKey": key.public_key, "path": str(path)})
    return OK


# --------------------------------------------------------------------------
# argument parsing


def _global_options(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--strict", action="store_true", default=d(False),
                        help="require x-sacrospec- prefixes on SACRO properties")
    parser.add_argument("--format", choices=("human", "json"), default=d("human"))
    parser.add_argument("--key", default=d(None), help="signing key file")
    parser.add_argument("--vuln-source", default=d("osv"),
                        help="osv | nvd | both | offline:<dir>")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aibom", description="Create, validate, bind, sign and audit AIBOMs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        _global_options(p, suppress=True)
        p.set_defaults(func=func)
        return p

    p = command("validate", cmd_validate, "validate an AIBOM JSON file")
    p.add_argument("file")

    p = command("generate", cmd_generate, "build an AIBOM from manifests and a model file")
    p.add_argument("--pip", action="append", default=[], metavar="PATH")
    p.add_argument("--conda", action="append", default=[], metavar="PATH")
    p.add_argument("--dpkg", action="append", default=[], metavar="PATH")
    p.add_argument("--import-log", action="append", default=[], metavar="PATH")
    p.add_argument("--model", metavar="PATH")
    p.add_argument("--model-name")
    p.add_argument("--model-version", default="0.0.0")
    p.add_argument("--architecture", default="unspecified")
    p.add_argument("--name", default="analytic-application")
    p.add_argument("--app-version", default="0.0.0")
    p.add_argument("--timestamp", help="RFC 3339 timestamp (default: now)")
    p.add_argument("-o", "--output")

    p = command("sign", cmd_sign, "sign an AIBOM in place")
    p.add_argument("file")

    p = command("verify", cmd_verify, "verify an AIBOM signature")
    p.add_argument("file")

    p = command("scan", cmd_scan, "match components against OSV/NVD")
    p.add_argument("file")

    p = command("audit", cmd_audit, "compare an original AIBOM with a replayed one")
    p.add_argument("original")
    p.add_argument("recomputed")

    p = command("bind", cmd_bind, "bind output files to an AIBOM via a Merkle root")
    p.add_argument("file")
    p.add_argument("outputs", nargs="*")
    p.add_argument("--normalize-newlines", action="store_true")

    p = command("keygen", cmd_keygen, "write a new private signing key")
    p.add_argument("path")
    p.add_argument("--alg", choices=("Ed25519", "ECDSA-P256"), default="Ed25519")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return FAILURE if exc.code else OK
    return args.func(args, Output(args.format))


if __name__ == "__main__":
    sys.exit(main())
