"""Package identifiers, OSV/NVD vulnerability lookup and component matching."""

from __future__ import annotations

import json
import logging
import os
import time
import urllib.parse
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from decimal import Decimal
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Protocol

from cvss import CVSS2, CVSS3, CVSS4
from packageurl import PackageURL
from packaging.utils import canonicalize_name

from .dependencies import DependencyDecl
from .errors import DomainError, SourceUnavailable, UnresolvableError
from .model import AibomDocument, ComponentRecord, iter_components
from .versions import version_in_range

log = logging.getLogger(__name__)

OSV_BATCH_LIMIT = 1000
SEVERITY_CLASSES = ("critical", "high", "medium", "low", "unscored")
MITIGATION_KINDS = ("dependency-freeze", "container-patch", "environment-fork")
# ecosystems whose version strings are compared for equality only
EXACT_ONLY_ECOSYSTEMS = frozenset({"deb"})

_OSV_ECOSYSTEMS = {"pypi": "pypi", "debian": "deb", "ubuntu": "deb", "conda": "conda"}


# --------------------------------------------------------------------------
# identifiers


@dataclass(frozen=True)
class Purl:
    type: str
    name: str
    version: str | None = None
    namespace: str | None = None

    def __str__(self) -> str:
        return PackageURL(type=self.type, namespace=self.namespace, name=self.name, version=self.version).to_string()


def parse_purl(text: str) -> Purl:
    p = PackageURL.from_string(text)
    return Purl(p.type, p.name, p.version, p.namespace)


def normalize_name(ecosystem: str, name: str) -> str:
    return canonicalize_name(name) if ecosystem == "pypi" else name.lower()


def to_purl(dep: DependencyDecl) -> Purl:
    if not dep.version:
        raise UnresolvableError(f"{dep.name}: no resolved version, cannot build a PURL")
    if dep.ecosystem == "pypi":
        return Purl("pypi", canonicalize_name(dep.name), dep.version)
    if dep.ecosystem == "conda":
        return Purl("conda", dep.name, dep.version)
    if dep.ecosystem == "deb":
        return Purl("deb", dep.name, dep.version, "debian")
    return Purl("generic", dep.name, dep.version)


def _cpe_escape(value: str) -> str:
    if value in ("*", "-"):
        return value
    return "".join(c if c.isalnum() or c in "._-" else "\\" + c for c in value)


def _cpe_split(text: str) -> list[str]:
    parts, buf, escaped = [], "", False
    for ch in text:
        if escaped:
            buf += ch
            escaped = False
        elif ch == "\\":
            escaped = True
        elif ch == ":":
            parts.append(buf)
            buf = ""
        else:
            buf += ch
    parts.append(buf)
    return parts


@dataclass(frozen=True)
class CpeId:
    vendor: str
    product: str
    version: str = "*"
    part: str = "a"

    def __str__(self) -> str:
        fields = [self.part, self.vendor, self.product, self.version] + ["*"] * 7
        return "cpe:2.3:" + ":".join(_cpe_escape(f) for f in fields)

    @property
    def product_key(self) -> str:
        return f"{self.vendor}:{self.product}"


def parse_cpe(text: str) -> CpeId:
    parts = _cpe_split(text)
    if len(parts) != 13 or parts[:2] != ["cpe", "2.3"]:
        raise ValueError(f"not a CPE 2.3 formatted string: {text!r}")
    return CpeId(vendor=parts[3], product=parts[4], version=parts[5], part=parts[2])


@lru_cache(maxsize=1)
def default_aliases() -> dict:
    return json.loads(resources.files("aibom").joinpath("data/cpe_aliases.json").read_text("utf-8"))


def cpe_alias(ecosystem: str, name: str, aliases: Mapping | None = None) -> tuple[str, str] | None:
    table = (aliases if aliases is not None else default_aliases()).get(ecosystem, {})
    hit = table.get(normalize_name(ecosystem, name))
    return tuple(hit) if hit else None


def to_cpe(dep: DependencyDecl, aliases: Mapping | None = None) -> CpeId | None:
    """CPE for ``dep`` if the alias table knows its vendor/product, else ``None``."""
    hit = cpe_alias(dep.ecosystem, dep.name, aliases)
    if hit is None:
        return None
    return CpeId(hit[0], hit[1], dep.version or "*")


# --------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class AffectedRange:
    ecosystem: str  # pypi / conda / deb / cpe
    name: str  # package name, or "vendor:product" for cpe
    range: str = "*"


@dataclass(frozen=True)
class CveRecord:
    id: str
    summary: str = ""
    cvss_score: float | None = None
    affected: tuple[AffectedRange, ...] = ()
    source: str = "osv"
    aliases: tuple[str, ...] = ()
    # SHA-256 digests of artifacts known to carry this vulnerability
    affected_digests: tuple[str, ...] = ()

    def __post_init__(self):
        if self.cvss_score is not None and not 0 <= self.cvss_score <= 10:
            raise DomainError(f"{self.id}: CVSS score {self.cvss_score} outside [0, 10]")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "summary": self.summary,
            "cvssScore": self.cvss_score,
            "affected": [{"ecosystem": a.ecosystem, "name": a.name, "range": a.range} for a in self.affected],
            "source": self.source,
            "aliases": list(self.aliases),
            "affectedDigests": list(self.affected_digests),
        }


def _vector_score(kind: str, vector: str) -> float | None:
    try:
        if kind == "CVSS_V4":
            return float(CVSS4(vector).base_score)
        if kind == "CVSS_V3":
            return float(CVSS3(vector).base_score)
        if kind == "CVSS_V2":
            return float(CVSS2(vector).base_score)
    except Exception:  # the cvss package raises several unrelated types
        pass
    try:
        return float(vector)
    except (TypeError, ValueError):
        return None


def _osv_score(vuln: dict) -> float | None:
    by_kind = {s.get("type"): s.get("score") for s in vuln.get("severity") or [] if isinstance(s, dict)}
    for kind in ("CVSS_V4", "CVSS_V3", "CVSS_V2"):
        if kind in by_kind:
            score = _vector_score(kind, by_kind[kind])
            if score is not None:
                return score
    numeric = (vuln.get("database_specific") or {}).get("cvss_score")
    return float(numeric) if isinstance(numeric, (int, float)) else None


def _osv_ranges(affected: dict) -> list[str]:
    out = []
    for rng in affected.get("ranges") or []:
        if rng.get("type") not in ("ECOSYSTEM", "SEMVER"):
            continue
        spans, lower, open_span = [], None, False
        for event in rng.get("events") or []:
            if "introduced" in event:
                lower = None if event["introduced"] == "0" else event["introduced"]
                open_span = True
            elif open_span and ("fixed" in event or "last_affected" in event):
                upper = f"<{event['fixed']}" if "fixed" in event else f"<={event['last_affected']}"
                spans.append(f">={lower} {upper}" if lower else upper)
                open_span = False
        if open_span:
            spans.append(f">={lower}" if lower else "*")
        out += spans
    out += [f"=={v}" for v in affected.get("versions") or []]
    return out


def osv_to_records(vulns: Iterable[dict]) -> list[CveRecord]:
    """Normalize OSV vulnerability objects."""
    out = []
    for vuln in vulns:
        vid = vuln["id"]
        aliases = tuple(vuln.get("aliases") or ())
        cves = [a for a in aliases if a.startswith("CVE-")]
        rid = vid if vid.startswith("CVE-") or not cves else cves[0]
        if rid != vid:
            aliases = (vid,) + tuple(a for a in aliases if a != rid)
        affected, digests = [], []
        for aff in vuln.get("affected") or []:
            pkg = aff.get("package") or {}
            eco = pkg.get("ecosystem", "")
            eco = _OSV_ECOSYSTEMS.get(eco.split(":")[0].lower(), eco.lower())
            name = pkg.get("name")
            if not name and pkg.get("purl"):
                name = parse_purl(pkg["purl"]).name
            if name:
                affected += [AffectedRange(eco, name, r) for r in _osv_ranges(aff)]
            digests += (aff.get("database_specific") or {}).get("artifact_sha256") or []
        out.append(
            CveRecord(
                id=rid,
                summary=vuln.get("summary") or (vuln.get("details") or "")[:200],
                cvss_score=_osv_score(vuln),
                affected=tuple(affected),
                source="osv",
                aliases=aliases,
                affected_digests=tuple(d.lower() for d in digests),
            )
        )
    return out


_NVD_METRICS = ("cvssMetricV40", "cvssMetricV31", "cvssMetricV30", "cvssMetricV2")


def _nvd_score(metrics: dict) -> float | None:
    for key in _NVD_METRICS:
        entries = metrics.get(key) or []
        if entries:
            primary = next((e for e in entries if e.get("type") == "Primary"), entries[0])
            return float(primary["cvssData"]["baseScore"])
    return None


def _nvd_range(match: dict, cpe: CpeId) -> str:
    if cpe.version not in ("*", "-", ""):
        return f"=={cpe.version}"
    terms = []
    for key, op in (
        ("versionStartIncluding", ">="),
        ("versionStartExcluding", ">"),
        ("versionEndIncluding", "<="),
        ("versionEndExcluding", "<"),
    ):
        if match.get(key):
            terms.append(f"{op}{match[key]}")
    return " ".join(terms) or "*"


def nvd_to_records(items: Iterable[dict]) -> list[CveRecord]:
    """Normalize NVD CVE API 2.0 ``vulnerabilities[]`` entries (or bare ``cve`` objects)."""
    out = []
    for item in items:
        cve = item.get("cve", item)
        summary = next((d["value"] for d in cve.get("descriptions") or [] if d.get("lang") == "en"), "")
        affected = []
        for config in cve.get("configurations") or []:
            for node in config.get("nodes") or []:
                for match in node.get("cpeMatch") or []:
                    if not match.get("vulnerable"):
                        continue
                    try:
                        cpe = parse_cpe(match["criteria"])
                    except (KeyError, ValueError):
                        continue
                    affected.append(AffectedRange("cpe", cpe.product_key, _nvd_range(match, cpe)))
        out.append(
            CveRecord(
                id=cve["id"],
                summary=summary,
                cvss_score=_nvd_score(cve.get("metrics") or {}),
                affected=tuple(affected),
                source="nvd",
            )
        )
    return out


def merge_records(records: Iterable[CveRecord]) -> list[CveRecord]:
    """Merge same-id records from both sources.

    The score comes from whichever entry has one (NVD on a tie); affected
    ranges come from OSV when it has any.
    """
    grouped: dict[str, list[CveRecord]] = {}
    for rec in records:
        grouped.setdefault(rec.id, []).append(rec)
    out = []
    for rid in sorted(grouped):
        group = grouped[rid]
        if len(group) == 1:
            out.append(group[0])
            continue
        scored = [r for r in group if r.cvss_score is not None]
        scorer = next((r for r in scored if r.source == "nvd"), scored[0] if scored else group[0])
        ranged = next((r for r in group if r.source == "osv" and r.affected), None) or next(
            (r for r in group if r.affected), group[0]
        )
        out.append(
            replace(
                ranged,
                cvss_score=scorer.cvss_score,
                summary=ranged.summary or scorer.summary,
                aliases=tuple(sorted({a for r in group for a in r.aliases})),
                affected_digests=tuple(sorted({d for r in group for d in r.affected_digests})),
            )
        )
    return out


# --------------------------------------------------------------------------
# sources


class VulnerabilitySource(Protocol):
    def osv_query_batch(self, purls: Sequence[str]) -> list[list[dict]]:
        """Full OSV vulnerability objects for each purl, in input order."""

    def nvd_query(self, cpe: str) -> list[dict]:
        """NVD ``vulnerabilities[]`` items matching ``cpe``."""


def fixture_filename(key: str) -> str:
    return urllib.parse.quote(key, safe="") + ".json"


def write_fixture(directory: str | os.PathLike, key: str, payload: dict) -> Path:
    """Store an offline response under the rendered PURL/CPE ``key``."""
    path = Path(directory) / fixture_filename(key)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


class OfflineSource:
    """Reads canned OSV/NVD responses from a directory keyed by PURL/CPE string.

    A versioned key is looked up first, then the versionless one, so a
    fixture can either pin exact answers or hold every record for a package
    and leave the range check to the matcher.
    """

    def __init__(self, directory: str | os.PathLike):
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise FileNotFoundError(f"offline fixture directory not found: {self.directory}")

    def _load(self, key: str) -> dict | None:
        path = self.directory / fixture_filename(key)
        if not path.is_file():
            return None
        return json.loads(path.read_text("utf-8"))

    def osv_query_batch(self, purls: Sequence[str]) -> list[list[dict]]:
        out = []
        for text in purls:
            keys = [text]
            purl = parse_purl(text)
            if purl.version:
                keys.append(str(replace(purl, version=None)))
            vulns: dict[str, dict] = {}
            for key in keys:
                for vuln in (self._load(key) or {}).get("vulns", []):
                    vulns.setdefault(vuln["id"], vuln)
            out.append(list(vulns.values()))
        return out

    def nvd_query(self, cpe: str) -> list[dict]:
        parsed = parse_cpe(cpe)
        items: dict[str, dict] = {}
        for key in dict.fromkeys([cpe, str(replace(parsed, version="*"))]):
            for item in (self._load(key) or {}).get("vulnerabilities", []):
                items.setdefault(item["cve"]["id"], item)
        return list(items.values())

    def osv_get(self, vuln_id: str) -> dict | None:
        """Look a vulnerability up by id or alias across every fixture file."""
        for path in sorted(self.directory.glob("*.json")):
            for vuln in json.loads(path.read_text("utf-8")).get("vulns", []):
                if vuln.get("id") == vuln_id or vuln_id in (vuln.get("aliases") or []):
                    return vuln
        return None


class HttpSource:
    """Live OSV (``/v1/querybatch``) and NVD (CVE API 2.0) client.

    Transient failures (connection errors, 429, 5xx, and NVD's 403 rate
    limit) are retried with exponential backoff; exhausting the retries
    raises :class:`SourceUnavailable`.
    """

    def __init__(
        self,
        session=None,
        osv_url: str = "https://api.osv.dev",
        nvd_url: str = "https://services.nvd.nist.gov/rest/json/cves/2.0",
        api_key: str | None = None,
        retries: int = 4,
        backoff: float = 0.5,
        max_in_flight: int = 4,
        timeout: float = 30.0,
        sleep=time.sleep,
    ):
        if session is None:
            import requests

            session = requests.Session()
        self.session = session
        self.osv_url = osv_url.rstrip("/")
        self.nvd_url = nvd_url
        self.api_key = api_key if api_key is not None else os.environ.get("NVD_API_KEY")
        self.retries = retries
        self.backoff = backoff
        self.max_in_flight = max_in_flight
        self.timeout = timeout
        self.sleep = sleep

    def _request(self, method: str, url: str, **kwargs) -> dict:
        last = None
        for attempt in range(self.retries + 1):
            if attempt:
                self.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self.session.request(method, url, timeout=self.timeout, **kwargs)
            except OSError as exc:  # requests' exceptions derive from IOError
                last = str(exc)
                continue
            if resp.status_code in (403, 429) or resp.status_code >= 500:
                last = f"HTTP {resp.status_code}"
                continue
            if resp.status_code >= 400:
                raise SourceUnavailable(f"{url}: HTTP {resp.status_code}")
            return resp.json()
        raise SourceUnavailable(f"{url}: giving up after {self.retries + 1} attempts ({last})")

    def osv_get(self, vuln_id: str) -> dict:
        return self._request("GET", f"{self.osv_url}/v1/vulns/{urllib.parse.quote(vuln_id)}")

    def osv_query_batch(self, purls: Sequence[str]) -> list[list[dict]]:
        ids: list[list[str]] = [[] for _ in purls]
        queries = [{"package": {"purl": p}} for p in purls]
        pending = list(range(len(purls)))
        while pending:
            body = {"queries": [queries[i] for i in pending]}
            results = self._request("POST", f"{self.osv_url}/v1/querybatch", json=body).get("results", [])
            again = []
            for i, result in zip(pending, results):
                ids[i] += [v["id"] for v in result.get("vulns") or []]
                token = result.get("next_page_token")
                if token:
                    queries[i] = {**queries[i], "page_token": token}
                    again.append(i)
            pending = again
        unique = sorted({vid for group in ids for vid in group})
        with ThreadPoolExecutor(self.max_in_flight) as pool:
            details = dict(zip(unique, pool.map(self.osv_get, unique)))
        return [[details[vid] for vid in group] for group in ids]

    def nvd_query(self, cpe: str) -> list[dict]:
        headers = {"apiKey": self.api_key} if self.api_key else {}
        items, start = [], 0
        while True:
            params = {"virtualMatchString": cpe, "startIndex": start, "resultsPerPage": 2000}
            page = self._request("GET", self.nvd_url, params=params, headers=headers)
            batch = page.get("vulnerabilities") or []
            items += batch
            start += len(batch)
            if not batch or start >= page.get("totalResults", 0):
                return items


def query_osv(purls: Sequence[Purl | str], client: VulnerabilitySource) -> list[CveRecord]:
    """Batched OSV lookup (at most 1000 purls per request)."""
    keys = [str(p) for p in purls]
    records: list[CveRecord] = []
    for start in range(0, len(keys), OSV_BATCH_LIMIT):
        try:
            groups = client.osv_query_batch(keys[start:start + OSV_BATCH_LIMIT])
        except SourceUnavailable as exc:
            raise SourceUnavailable(str(exc), partial=merge_records(records)) from exc
        for group in groups:
            records += osv_to_records(group)
    return merge_records(records)


def query_nvd(cpes: Sequence[CpeId | str], client: VulnerabilitySource, max_in_flight: int = 4) -> list[CveRecord]:
    keys = [str(c) for c in cpes]
    records: list[CveRecord] = []
    failure = None
    with ThreadPoolExecutor(max_in_flight) as pool:
        futures = [pool.submit(client.nvd_query, k) for k in keys]
        for fut in futures:
            try:
                records += nvd_to_records(fut.result())
            except SourceUnavailable as exc:
                failure = failure or exc
    if failure is not None:
        raise SourceUnavailable(str(failure), partial=merge_records(records))
    return merge_records(records)


# --------------------------------------------------------------------------
# matching


def classify_severity(score: float | Decimal | None) -> str:
    """Severity class of a CVSS base score; critical is strictly above 8.9."""
    if score is None:
        return "unscored"
    value = Decimal(str(score))
    if not Decimal(0) <= value <= Decimal(10):
        raise DomainError(f"CVSS score {score} outside [0, 10]")
    if value > Decimal("8.9"):
        return "critical"
    if value >= 7:
        return "high"
    if value >= 4:
        return "medium"
    return "low"


@dataclass(frozen=True)
class MatchResult:
    component_ref: tuple[str, str]
    cve: CveRecord
    basis: str  # purl / cpe / hash-confirmed
    severity_class: str
    component_type: str = "library"

    def to_json(self) -> dict:
        return {
            "component": {"name": self.component_ref[0], "version": self.component_ref[1]},
            "componentType": self.component_type,
            "cve": self.cve.to_json(),
            "basis": self.basis,
            "severityClass": self.severity_class,
        }


@dataclass(frozen=True)
class MitigationAction:
    kind: str
    target: tuple[str, str]
    rationale: str

    def __post_init__(self):
        if self.kind not in MITIGATION_KINDS:
            raise DomainError(f"unknown mitigation kind {self.kind!r}")

    def to_json(self) -> dict:
        return {"kind": self.kind, "target": {"name": self.target[0], "version": self.target[1]},
                "rationale": self.rationale}


@dataclass(frozen=True)
class CveMatchReport:
    matches: tuple[MatchResult, ...] = ()
    critical_alerts: int = 0
    unverifiable: tuple[tuple[str, str], ...] = ()
    mitigations: tuple[MitigationAction, ...] = ()
    clean: tuple[tuple[str, str], ...] = ()

    def to_json(self) -> dict:
        return {
            "matches": [m.to_json() for m in self.matches],
            "criticalAlerts": self.critical_alerts,
            "unverifiable": [{"name": n, "version": v} for n, v in self.unverifiable],
            "mitigations": [m.to_json() for m in self.mitigations],
            "clean": [{"name": n, "version": v} for n, v in self.clean],
        }


def component_identity(comp: ComponentRecord) -> tuple[str, str, str] | None:
    """``(ecosystem, normalized name, version)`` from the component's PURL."""
    if comp.unverifiable or not comp.purl:
        return None
    try:
        purl = parse_purl(comp.purl)
    except ValueError:
        return None
    if not purl.version:
        return None
    return (purl.type, normalize_name(purl.type, purl.name), purl.version)


def _basis(ident: tuple[str, str, str], rec: CveRecord, aliases: Mapping | None) -> str | None:
    eco, name, version = ident
    exact = eco in EXACT_ONLY_ECOSYSTEMS
    cpe = cpe_alias(eco, name, aliases)
    for aff in rec.affected:
        if aff.ecosystem == "cpe":
            if cpe and aff.name == f"{cpe[0]}:{cpe[1]}" and version_in_range(version, aff.range, exact):
                return "cpe"
        elif aff.ecosystem == eco and normalize_name(eco, aff.name) == name:
            if version_in_range(version, aff.range, exact):
                return "purl"
    return None


def _mitigations(doc: AibomDocument, matches: list[MatchResult]) -> list[MitigationAction]:
    actions: dict[tuple[str, tuple], MitigationAction] = {}
    critical = [m for m in matches if m.severity_class == "critical"]
    for m in critical:
        if m.component_type == "library":
            kind, why = "dependency-freeze", f"pin or replace {m.component_ref[0]}: {m.cve.id} is critical"
        elif m.component_type == "container":
            kind, why = "container-patch", f"rebuild container base: {m.cve.id} is critical"
        else:
            continue
        actions.setdefault((kind, m.component_ref), MitigationAction(kind, m.component_ref, why))
    if len(critical) >= 3:
        root = doc.metadata.component.ref
        actions[("environment-fork", root)] = MitigationAction(
            "environment-fork", root, f"{len(critical)} critical matches; fork a patched environment"
        )
    return list(actions.values())


def match_components(
    doc: AibomDocument, records: Iterable[CveRecord], aliases: Mapping | None = None
) -> CveMatchReport:
    """Match every component of ``doc`` against ``records``.

    A digest listed in a record's ``affected_digests`` confirms the match
    outright, whatever the name/version comparison says.  Components with
    no usable PURL or version and no digest hit are listed as unverifiable.
    """
    records = list(records)
    matches: list[MatchResult] = []
    unverifiable, clean = [], []
    for comp in iter_components(doc):
        digests = {h.content for h in comp.hashes if h.alg == "SHA-256"}
        ident = component_identity(comp)
        found = []
        for rec in records:
            if digests & set(rec.affected_digests):
                basis = "hash-confirmed"
            elif ident is not None:
                basis = _basis(ident, rec, aliases)
            else:
                basis = None
            if basis:
                found.append(MatchResult(comp.ref, rec, basis, classify_severity(rec.cvss_score), comp.type))
        if found:
            matches += sorted(found, key=lambda m: m.cve.id)
        elif ident is None:
            unverifiable.append(comp.ref)
        else:
            clean.append(comp.ref)
    critical = sum(1 for m in matches if m.severity_class == "critical")
    return CveMatchReport(
        tuple(matches), critical, tuple(unverifiable), tuple(_mitigations(doc, matches)), tuple(clean)
    )


def component_queries(doc: AibomDocument, aliases: Mapping | None = None) -> tuple[list[Purl], list[CpeId]]:
    """PURLs and CPEs to look up for ``doc``'s verifiable components."""
    purls: dict[str, Purl] = {}
    cpes: dict[str, CpeId] = {}
    for comp in iter_components(doc):
        ident = component_identity(comp)
        if ident is None:
            continue
        purl = parse_purl(comp.purl)
        purls.setdefault(str(purl), purl)
        hit = cpe_alias(ident[0], ident[1], aliases)
        if hit:
            cpe = CpeId(hit[0], hit[1], ident[2])
            cpes.setdefault(str(cpe), cpe)
    return list(purls.values()), list(cpes.values())


# --------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class MatchMetrics:
    tp: int
    fp: int
    fn: int
    precision: Fraction = field(init=False)
    recall: Fraction = field(init=False)
    f1: Fraction = field(init=False)

    def __post_init__(self):
        p = Fraction(self.tp, self.tp + self.fp) if self.tp + self.fp else Fraction(int(self.fn == 0))
        r = Fraction(self.tp, self.tp + self.fn) if self.tp + self.fn else Fraction(1)
        f1 = 2 * p * r / (p + r) if p + r else Fraction(0)
        object.__setattr__(self, "precision", p)
        object.__setattr__(self, "recall", r)
        object.__setattr__(self, "f1", f1)

    def rendered(self, places: int = 3) -> dict[str, str]:
        q = Decimal(1).scaleb(-places)
        return {
            k: str((Decimal(v.numerator) / Decimal(v.denominator)).quantize(q))
            for k, v in (("precision", self.precision), ("recall", self.recall), ("f1", self.f1))
        }


def evaluate_matching(report: CveMatchReport, truth: Mapping[tuple[str, str, str], bool]) -> MatchMetrics:
    """Precision/recall/F1 of ``report`` against labels keyed by ``(name, version, cve id)``."""
    if not truth:
        raise DomainError("ground truth is empty")
    predicted = {(m.component_ref[0], m.component_ref[1], m.cve.id) for m in report.matches}
    positive = {k for k, label in truth.items() if label}
    tp = len(predicted & positive)
    return MatchMetrics(tp=tp, fp=len(predicted - positive), fn=len(positive - predicted))
