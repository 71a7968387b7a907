"""Dependency enumeration, model-state capture and three-stage snapshots.

Parsers are lenient: a bad line never aborts a manifest, it becomes an
``other``-ecosystem declaration (pip) or is counted as malformed (import
logs).  Live process tracing is not done here; an external tracer is
expected to write ``IMPORT <ecosystem> <name> <version>`` lines.
"""

from __future__ import annotations

import io
import re
from collections.abc import Iterable
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import NamedTuple

import yaml
from packaging.requirements import InvalidRequirement, Requirement
from packaging.utils import canonicalize_name

from .canonical import canonical_dumps
from .errors import DomainError, ParseError
from .model import HASH_UNAVAILABLE, SACRO_PREFIX, UNRESOLVED_VERSION, UNVERIFIABLE, ComponentRecord, HashEntry, PropertyEntry
from .provenance import ArtifactDigest, hash_stream

ECOSYSTEMS = ("pypi", "conda", "deb", "other")
STAGES = ("pre-load", "runtime", "post-execution")


@dataclass(frozen=True)
class DependencyDecl:
    ecosystem: str
    name: str
    version: str | None = None
    source: str = ""

    def __post_init__(self):
        if not self.name:
            raise DomainError("dependency name must be non-empty")
        if self.version == "":
            raise DomainError("dependency version, when present, must be non-empty")

    @property
    def key(self) -> tuple[str, str]:
        name = canonicalize_name(self.name) if self.ecosystem == "pypi" else self.name
        return (self.ecosystem, name)


@dataclass(frozen=True)
class ModelStateRecord:
    architecture: str
    file_checksum: ArtifactDigest
    parameter_count: int | None = None
    hyperparameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.parameter_count is not None and self.parameter_count < 0:
            raise DomainError("parameter count must be non-negative")


@dataclass(frozen=True)
class SnapshotCapture:
    stage: str
    timestamp: str
    dependencies: tuple[DependencyDecl, ...] = ()
    artifacts: tuple[ArtifactDigest, ...] = ()

    def to_json(self) -> dict:
        return {
            "stage": self.stage,
            "timestamp": self.timestamp,
            "dependencies": [
                {"ecosystem": d.ecosystem, "name": d.name, "version": d.version, "source": d.source}
                for d in self.dependencies
            ],
            "artifacts": [a.to_json() for a in self.artifacts],
        }


@dataclass(frozen=True)
class SnapshotDiff:
    added: tuple[DependencyDecl, ...] = ()
    removed: tuple[DependencyDecl, ...] = ()
    version_changed: tuple[tuple[str, str | None, str | None], ...] = ()

    @property
    def empty(self) -> bool:
        return not (self.added or self.removed or self.version_changed)


class ImportLog(NamedTuple):
    dependencies: list[DependencyDecl]
    malformed: int


def _logical_lines(text: str):
    """Yield (line number, text) with backslash continuations joined."""
    buf, start = "", None
    for lineno, raw in enumerate(text.splitlines(), 1):
        if start is None:
            start = lineno
        if raw.endswith("\\"):
            buf += raw[:-1] + " "
            continue
        yield start, buf + raw
        buf, start = "", None
    if buf:
        yield start, buf


def _strip_comment(line: str) -> str:
    if line.lstrip().startswith("#"):
        return ""
    return re.split(r"\s+#", line, maxsplit=1)[0].strip()


def parse_pip_manifest(text: str, source: str = "requirements.txt", ecosystem: str = "pypi") -> list[DependencyDecl]:
    """One declaration per requirement line; only ``==``/``===`` pins carry a version."""
    out = []
    for lineno, line in _logical_lines(text):
        line = _strip_comment(line)
        if not line or line.startswith("-"):
            continue
        where = f"{source}:{lineno}"
        # drop pip's per-requirement options such as --hash=...
        req_text = re.split(r"\s+--", line, maxsplit=1)[0]
        try:
            req = Requirement(req_text)
        except InvalidRequirement:
            out.append(DependencyDecl("other", line, None, f"{where} (unparseable)"))
            continue
        specs = list(req.specifier)
        if req.url:
            out.append(DependencyDecl(ecosystem, req.name, None, f"{where} (unpinned: url)"))
        elif len(specs) == 1 and specs[0].operator in ("==", "===") and "*" not in specs[0].version:
            out.append(DependencyDecl(ecosystem, req.name, specs[0].version, where))
        elif specs:
            out.append(DependencyDecl(ecosystem, req.name, None, f"{where} (unpinned: {req.specifier})"))
        else:
            out.append(DependencyDecl(ecosystem, req.name, None, f"{where} (unpinned)"))
    return out


_CONDA_SPEC = re.compile(r"^(?:[^:\s]+::)?([A-Za-z0-9_.\-]+)\s*(.*)$")


def _conda_decl(spec: str, where: str) -> DependencyDecl:
    m = _CONDA_SPEC.match(spec.strip())
    if not m:
        return DependencyDecl("other", spec.strip() or "?", None, f"{where} (unparseable)")
    name, rest = m.group(1), m.group(2).strip()
    if not rest:
        return DependencyDecl("conda", name, None, f"{where} (unpinned)")
    if rest.startswith("=="):
        version = rest[2:].split("=")[0].strip()
    elif rest.startswith("=") and not re.search(r"[<>!*|,]", rest):
        version = rest[1:].split("=")[0].strip()
    else:
        return DependencyDecl("conda", name, None, f"{where} (unpinned: {rest})")
    return DependencyDecl("conda", name, version or None, where)


def parse_conda_env(text: str, source: str = "environment.yml") -> list[DependencyDecl]:
    """Declarations from a conda environment file; nested ``pip:`` lists become pypi entries."""
    try:
        env = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"{source}: invalid YAML ({exc})") from None
    if env is None:
        return []
    if not isinstance(env, dict):
        raise ParseError(f"{source}: environment file must be a mapping")
    deps = env.get("dependencies")
    if deps is None:
        return []
    if not isinstance(deps, list):
        raise ParseError(f"{source}: 'dependencies' must be a list")
    out = []
    for i, entry in enumerate(deps):
        where = f"{source}:dependencies[{i}]"
        if isinstance(entry, dict) and "pip" in entry:
            pips = entry["pip"]
            if not isinstance(pips, list):
                raise ParseError(f"{where}: 'pip' must be a list")
            out.extend(parse_pip_manifest("\n".join(str(p) for p in pips), f"{where}.pip"))
        elif isinstance(entry, (str, int, float)):
            out.append(_conda_decl(str(entry), where))
        else:
            raise ParseError(f"{where}: unsupported dependency entry {entry!r}")
    return out


def parse_dpkg_status(text: str, source: str = "/var/lib/dpkg/status") -> list[DependencyDecl]:
    """Installed packages from a dpkg status database."""
    out = []
    for n, stanza in enumerate(re.split(r"\n[ \t]*\n", text.strip())):
        fields: dict[str, str] = {}
        last = None
        for line in stanza.splitlines():
            if line[:1] in (" ", "\t") and last:
                fields[last] += "\n" + line.strip()
            elif ":" in line:
                last, _, value = line.partition(":")
                fields[last] = value.strip()
        if fields.get("Status") != "install ok installed":
            continue
        name, version = fields.get("Package"), fields.get("Version")
        if not name:
            continue
        out.append(DependencyDecl("deb", name, version or None, f"{source}#{n}"))
    return out


def ingest_runtime_import_log(text: str, source: str = "runtime-log") -> ImportLog:
    """Parse ``IMPORT <ecosystem> <name> <version>`` lines, first occurrence wins."""
    seen: dict[tuple[str, str], DependencyDecl] = {}
    malformed = 0
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != 4 or parts[0] != "IMPORT" or parts[1] not in ECOSYSTEMS:
            malformed += 1
            continue
        decl = DependencyDecl(parts[1], parts[2], parts[3], f"{source}:{lineno}")
        seen.setdefault(decl.key, decl)
    return ImportLog(list(seen.values()), malformed)


def _timestamp(at) -> str:
    if at is None:
        at = datetime.now(timezone.utc)
    if isinstance(at, datetime):
        if at.tzinfo is None:
            at = at.replace(tzinfo=timezone.utc)
        return at.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")
    return str(at)


def _dedupe(deps: Iterable[DependencyDecl]) -> list[DependencyDecl]:
    kept: dict[tuple[str, str], DependencyDecl] = {}
    for dep in deps:
        first = kept.get(dep.key)
        if first is None:
            kept[dep.key] = dep
        elif first.version != dep.version:
            note = f"conflict: {dep.version or 'unpinned'} from {dep.source or '?'}"
            kept[dep.key] = replace(first, source=f"{first.source}; {note}")
    return sorted(kept.values(), key=lambda d: (d.key[1].lower(), d.ecosystem))


def capture_snapshot(
    stage: str,
    deps: Iterable[DependencyDecl] = (),
    artifacts: Iterable[ArtifactDigest] = (),
    at: datetime | str | None = None,
) -> SnapshotCapture:
    if stage not in STAGES:
        raise DomainError(f"unknown stage {stage!r}; expected one of {STAGES}")
    arts = sorted(artifacts, key=lambda a: (a.source_name, a.hex))
    return SnapshotCapture(stage, _timestamp(at), tuple(_dedupe(deps)), tuple(arts))


def diff_snapshots(before: SnapshotCapture, after: SnapshotCapture) -> SnapshotDiff:
    old = {d.key: d for d in before.dependencies}
    new = {d.key: d for d in after.dependencies}
    added = tuple(new[k] for k in sorted(new.keys() - old.keys()))
    removed = tuple(old[k] for k in sorted(old.keys() - new.keys()))
    changed = tuple(
        (new[k].name, old[k].version, new[k].version)
        for k in sorted(old.keys() & new.keys())
        if old[k].version != new[k].version
    )
    return SnapshotDiff(added, removed, changed)


def capture_model_state(
    data,
    name: str,
    architecture: str,
    parameter_count: int | None = None,
    hyperparameters: dict | None = None,
) -> ModelStateRecord:
    """Hash a serialized model and attach the caller-declared description."""
    checksum = hash_stream(data, name)
    params = {str(k): str(v) for k, v in (hyperparameters or {}).items()}
    return ModelStateRecord(architecture, checksum, parameter_count, params)


def model_to_component(state: ModelStateRecord, name: str, version: str) -> ComponentRecord:
    props = [
        PropertyEntry(SACRO_PREFIX + "modelReference", state.file_checksum.hex),
        PropertyEntry(SACRO_PREFIX + "architecture", state.architecture),
    ]
    if state.parameter_count is not None:
        props.append(PropertyEntry(SACRO_PREFIX + "parameterCount", str(state.parameter_count)))
    if state.hyperparameters:
        props.append(PropertyEntry(SACRO_PREFIX + "hyperparameters", canonical_dumps(state.hyperparameters)))
    return ComponentRecord(
        type="ai-model",
        name=name,
        version=version,
        hashes=(HashEntry("SHA-256", state.file_checksum.hex),),
        properties=tuple(props),
    )


def _artifact_for(dep: DependencyDecl, artifacts: tuple[ArtifactDigest, ...]) -> ArtifactDigest | None:
    # exact file name, or the wheel/sdist convention "<name>-<version>..."
    norm = re.sub(r"[-_.]+", "_", dep.name).lower()
    for art in artifacts:
        stem = art.source_name.rsplit("/", 1)[-1]
        if stem == dep.name:
            return art
        if dep.version and re.sub(r"[-_.]+", "_", stem).lower().startswith(
            f"{norm}_{re.sub(r'[-_.]+', '_', dep.version).lower()}"
        ):
            return art
    return None


def snapshot_to_components(snapshot: SnapshotCapture) -> list[ComponentRecord]:
    """One ``library`` component per dependency.

    Unpinned dependencies get version ``unresolved`` and an unverifiable
    marker; dependencies without a matching artifact get the
    hash-unavailable marker instead of a hash.
    """
    from .cve import to_purl  # cve imports this module

    out = []
    for dep in snapshot.dependencies:
        props = [PropertyEntry(SACRO_PREFIX + "ecosystem", dep.ecosystem)]
        if dep.source:
            props.append(PropertyEntry(SACRO_PREFIX + "source", dep.source))
        purl = None
        if dep.version is None:
            props.append(PropertyEntry(UNVERIFIABLE, "true"))
        elif dep.ecosystem != "other":
            purl = str(to_purl(dep))
        art = _artifact_for(dep, snapshot.artifacts)
        hashes = (HashEntry("SHA-256", art.hex),) if art else ()
        if art is None:
            props.append(PropertyEntry(HASH_UNAVAILABLE, "true"))
        out.append(
            ComponentRecord(
                type="library",
                name=dep.name,
                version=dep.version or UNRESOLVED_VERSION,
                hashes=hashes,
                properties=tuple(props),
                purl=purl,
            )
        )
    return out


def snapshot_digest(snapshot: SnapshotCapture) -> ArtifactDigest:
    """Digest of a snapshot's canonical JSON form (used as an application hash)."""
    body = canonical_dumps(snapshot.to_json()).encode("utf-8")
    return hash_stream(io.BytesIO(body), f"snapshot-{snapshot.stage}.json", "application/json")


__all__ = [
    "DependencyDecl",
    "ImportLog",
    "ModelStateRecord",
    "SnapshotCapture",
    "SnapshotDiff",
    "capture_model_state",
    "capture_snapshot",
    "diff_snapshots",
    "ingest_runtime_import_log",
    "model_to_component",
    "parse_conda_env",
    "parse_dpkg_status",
    "parse_pip_manifest",
    "snapshot_digest",
    "snapshot_to_components",
]
