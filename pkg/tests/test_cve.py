from fractions import Fraction

import pytest

from aibom.cve import (
    AffectedRange,
    CpeId,
    CveRecord,
    MatchMetrics,
    OfflineSource,
    classify_severity,
    component_queries,
    cpe_alias,
    evaluate_matching,
    match_components,
    merge_records,
    normalize_name,
    nvd_to_records,
    osv_to_records,
    parse_cpe,
    parse_purl,
    query_nvd,
    query_osv,
    to_cpe,
    to_purl,
)
from aibom.dependencies import DependencyDecl
from aibom.errors import DomainError, SourceUnavailable, UnresolvableError

from cve_corpus import BAD_IMAGE, corpus_document, oracle_matches
from helpers import VULNS, document, lib


def scan(doc):
    source = OfflineSource(VULNS)
    purls, cpes = component_queries(doc)
    return match_components(doc, merge_records(query_osv(purls, source) + query_nvd(cpes, source)))


def test_purl_round_trip_and_normalization():
    p = parse_purl("pkg:deb/debian/openldap@2.5.13%2Bdfsg-5")
    assert (p.type, p.namespace, p.name, p.version) == ("deb", "debian", "openldap", "2.5.13+dfsg-5")
    assert str(p) == "pkg:deb/debian/openldap@2.5.13%2Bdfsg-5"
    assert normalize_name("pypi", "Zope.Interface_X") == "zope-interface-x"
    assert str(to_purl(DependencyDecl("pypi", "Pillow", "9.0.0"))) == "pkg:pypi/pillow@9.0.0"
    with pytest.raises(UnresolvableError):
        to_purl(DependencyDecl("pypi", "x"))


def test_cpe_format_and_escaping():
    c = CpeId("google", "tensorflow", "2.5.0")
    assert str(c) == "cpe:2.3:a:google:tensorflow:2.5.0:*:*:*:*:*:*:*"
    odd = CpeId("acme", "a:b", "1+2")
    assert parse_cpe(str(odd)) == odd
    with pytest.raises(ValueError):
        parse_cpe("cpe:/a:google:tensorflow")
    assert cpe_alias("pypi", "TensorFlow_CPU") == ("google", "tensorflow")
    assert to_cpe(DependencyDecl("pypi", "left-pad", "1")) is None
    assert to_cpe(DependencyDecl("pypi", "torch", "1.12.0")) == CpeId("linuxfoundation", "pytorch", "1.12.0")


def test_osv_normalization():
    source = OfflineSource(VULNS)
    [torch] = osv_to_records(source.osv_query_batch(["pkg:pypi/torch@1.12.0"])[0])
    assert torch.id == "CVE-2022-45907"
    assert torch.aliases == ("GHSA-47fc-vmwq-366v",)
    assert torch.cvss_score == 9.8
    assert torch.affected == (AffectedRange("pypi", "torch", "<1.13.1"),)
    [jinja] = osv_to_records(source.osv_query_batch(["pkg:pypi/jinja2"])[0])
    assert [a.range for a in jinja.affected] == [">=2.0 <2.11.3", ">=3.0.0 <=3.0.2", "==3.1.0-rc.1"]
    assert source.osv_get("CVE-2023-2953")["id"] == "DSA-5436-1"


def test_nvd_normalization():
    items = OfflineSource(VULNS).nvd_query("cpe:2.3:a:google:tensorflow:2.5.0:*:*:*:*:*:*:*")
    recs = {r.id: r for r in nvd_to_records(items)}
    assert recs["CVE-2021-37678"].affected == (AffectedRange("cpe", "google:tensorflow", ">=2.0.0 <2.6.0"),)
    assert recs["CVE-2021-37678"].cvss_score == 9.0
    assert recs["CVE-2099-0003"].affected[0].range == "<=1.15.5"


def test_merge_prefers_osv_ranges_and_nvd_score():
    osv = CveRecord("CVE-1", "o", 5.0, (AffectedRange("pypi", "x", "<2"),), "osv", ("GHSA-1",))
    nvd = CveRecord("CVE-1", "n", 7.5, (AffectedRange("cpe", "v:x", "*"),), "nvd", ("X-1",))
    [m] = merge_records([nvd, osv])
    assert m.affected == osv.affected and m.cvss_score == 7.5
    assert m.aliases == ("GHSA-1", "X-1")
    [only] = merge_records([CveRecord("CVE-2", cvss_score=None, source="osv"), CveRecord("CVE-2", cvss_score=3.1, source="osv")])
    assert only.cvss_score == 3.1


def test_record_score_bounds():
    with pytest.raises(DomainError):
        CveRecord("CVE-0", cvss_score=10.5)


@pytest.mark.parametrize("score,label", [
    (None, "unscored"), (0, "low"), (3.9, "low"), (4.0, "medium"), (6.9, "medium"),
    (7.0, "high"), (8.9, "high"), (8.91, "critical"), (9.0, "critical"), (10, "critical"),
])
def test_severity_boundaries(score, label):
    assert classify_severity(score) == label


def test_severity_out_of_range():
    with pytest.raises(DomainError):
        classify_severity(-0.1)


def test_corpus_matches_oracle():
    report = scan(corpus_document())
    got = {(m.component_ref[0], m.component_ref[1], m.cve.id) for m in report.matches}
    assert got == oracle_matches()
    assert report.unverifiable == (("mystery", "unresolved"),)
    assert ("torch", "1.13.1") in report.clean


def test_hash_confirmed_overrides_identity():
    report = scan(corpus_document())
    [img] = [m for m in report.matches if m.component_ref[0] == "job-image"]
    assert img.basis == "hash-confirmed"
    # even a component with a "clean" purl is flagged when its digest is known bad
    bad = CveRecord("CVE-2099-0002", cvss_score=9.8, affected_digests=(BAD_IMAGE,))
    doc = document([lib("requests", "2.31.0", digest=BAD_IMAGE)])
    assert [m.basis for m in match_components(doc, [bad]).matches] == ["hash-confirmed"]


def test_mitigations():
    report = scan(corpus_document())
    kinds = sorted((a.kind, a.target[0]) for a in report.mitigations)
    assert kinds == [
        ("container-patch", "job-image"),
        ("dependency-freeze", "Pillow"),
        ("dependency-freeze", "tensorflow"),
        ("dependency-freeze", "torch"),
        ("environment-fork", "cve-corpus"),
    ]
    assert report.critical_alerts == 4
    two = scan(document([lib("torch", "1.12.0"), lib("Pillow", "9.0.0")]))
    assert "environment-fork" not in {a.kind for a in two.mitigations}


def test_evaluate_matching_metrics():
    from cve_corpus import EXPECTED_FN, EXPECTED_FP, EXPECTED_TP, TRUTH

    metrics = evaluate_matching(scan(corpus_document()), TRUTH)
    assert (metrics.tp, metrics.fp, metrics.fn) == (EXPECTED_TP, EXPECTED_FP, EXPECTED_FN)
    assert metrics.precision == Fraction(11, 12)
    assert metrics.recall == Fraction(11, 12)
    assert metrics.f1 == Fraction(11, 12)
    assert metrics.rendered() == {"precision": "0.917", "recall": "0.917", "f1": "0.917"}
    with pytest.raises(DomainError):
        evaluate_matching(scan(corpus_document()), {})


@pytest.mark.parametrize("tp,fp,fn,p,r", [
    (0, 0, 0, 1, 1),
    (0, 0, 3, 0, 0),
    (0, 2, 0, 0, 1),
    (3, 1, 2, Fraction(3, 4), Fraction(3, 5)),
])
def test_metric_edge_cases(tp, fp, fn, p, r):
    m = MatchMetrics(tp, fp, fn)
    assert (m.precision, m.recall) == (p, r)
    assert m.f1 == (2 * p * r / (p + r) if p + r else 0)


class Flaky:
    def __init__(self, fail_after):
        self.calls = 0
        self.fail_after = fail_after
        self.inner = OfflineSource(VULNS)

    def osv_query_batch(self, purls):
        self.calls += 1
        if self.calls > self.fail_after:
            raise SourceUnavailable("503 from upstream")
        return self.inner.osv_query_batch(purls)

    def nvd_query(self, cpe):
        raise SourceUnavailable("timeout")


def test_partial_results_survive_outage(monkeypatch):
    from aibom import cve

    monkeypatch.setattr(cve, "OSV_BATCH_LIMIT", 1)
    purls = ["pkg:pypi/torch@1.12.0", "pkg:pypi/numpy@1.21.0"]
    with pytest.raises(SourceUnavailable) as info:
        query_osv(purls, Flaky(fail_after=1))
    assert [r.id for r in info.value.partial] == ["CVE-2022-45907"]
    with pytest.raises(SourceUnavailable) as info:
        query_nvd(["cpe:2.3:a:google:tensorflow:2.5.0:*:*:*:*:*:*:*"], Flaky(0))
    assert info.value.partial == []


def test_offline_source_missing_dir(tmp_path):
    with pytest.raises(FileNotFoundError):
        OfflineSource(tmp_path / "absent")
