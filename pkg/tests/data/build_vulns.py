"""Regenerate the offline OSV/NVD fixture directory tests/data/vulns/.

Records are trimmed to the fields the matcher reads.  Scores are given as
CVSS vectors so the score path goes through the vector calculator.
"""

import json
import urllib.parse
from pathlib import Path

OUT = Path(__file__).parent / "vulns"

CRIT_98 = "CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H"  # 9.8
HIGH_81 = "CVSS:3.1/AV:N/AC:H/PR:N/UI:N/S:U/C:H/I:H/A:H"  # 8.1
MED_53 = "CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:N/I:N/A:L"  # 5.3
MED_61 = "CVSS:3.1/AV:N/AC:H/PR:N/UI:R/S:C/C:H/I:N/A:N"  # 6.1

# artifact digest of a container image known to ship the vulnerable openssl
BAD_IMAGE = "5f1d7a0c0f0e1b2e3c4d5a6b7c8d9e0f112233445566778899aabbccddeeff00"


def osv(vid, pkg, eco, ranges=(), versions=(), vector=None, aliases=(), digests=()):
    affected = {"package": {"ecosystem": eco, "name": pkg}}
    if ranges:
        affected["ranges"] = [{"type": "ECOSYSTEM", "events": list(r)} for r in ranges]
    if versions:
        affected["versions"] = list(versions)
    if digests:
        affected["database_specific"] = {"artifact_sha256": list(digests)}
    out = {"id": vid, "summary": f"{pkg} advisory {vid}", "aliases": list(aliases), "affected": [affected]}
    if vector:
        out["severity"] = [{"type": "CVSS_V3", "score": vector}]
    return out


OSV = {
    "pkg:pypi/torch": [
        osv("GHSA-47fc-vmwq-366v", "torch", "PyPI", [[{"introduced": "0"}, {"fixed": "1.13.1"}]],
            vector=CRIT_98, aliases=["CVE-2022-45907"]),
    ],
    "pkg:pypi/numpy": [
        osv("CVE-2021-41495", "numpy", "PyPI", [[{"introduced": "0"}, {"fixed": "1.22.0"}]], vector=MED_53),
    ],
    "pkg:pypi/pillow": [
        osv("CVE-2022-22817", "Pillow", "PyPI", [[{"introduced": "0"}, {"fixed": "9.0.1"}]], vector=CRIT_98),
        osv("CVE-2023-50447", "Pillow", "PyPI", [[{"introduced": "0"}, {"fixed": "10.2.0"}]], vector=HIGH_81),
    ],
    "pkg:pypi/requests": [
        osv("CVE-2023-32681", "requests", "PyPI", [[{"introduced": "2.3.0"}, {"fixed": "2.31.0"}]], vector=MED_61),
    ],
    "pkg:pypi/jinja2": [
        # two disjoint spans in one range plus an explicit version list
        osv("CVE-2099-0001", "Jinja2", "PyPI",
            [[{"introduced": "2.0"}, {"fixed": "2.11.3"}, {"introduced": "3.0.0"}, {"last_affected": "3.0.2"}]],
            versions=["3.1.0-rc.1"], vector=MED_53),
    ],
    "pkg:deb/debian/openldap": [
        osv("DSA-5436-1", "openldap", "Debian:12", versions=["2.5.13+dfsg-5"], vector=HIGH_81,
            aliases=["CVE-2023-2953"]),
    ],
    "pkg:generic/job-image": [
        osv("CVE-2099-0002", "job-image", "generic", vector=CRIT_98, digests=[BAD_IMAGE]),
    ],
}


def nvd(cid, criteria, score, vulnerable=True, **bounds):
    match = {"vulnerable": vulnerable, "criteria": criteria, **bounds}
    return {"cve": {
        "id": cid,
        "descriptions": [{"lang": "en", "value": f"{cid} fixture"}],
        "metrics": {"cvssMetricV31": [{"type": "Primary", "cvssData": {"baseScore": score}}]},
        "configurations": [{"nodes": [{"cpeMatch": [match]}]}],
    }}


TF = "cpe:2.3:a:google:tensorflow:*:*:*:*:*:*:*:*"
NVD = {
    TF: [
        nvd("CVE-2021-37678", TF, 9.0, versionStartIncluding="2.0.0", versionEndExcluding="2.6.0"),
        nvd("CVE-2099-0003", TF, 4.0, versionEndIncluding="1.15.5"),
    ],
    # same id as the OSV numpy record: the merge keeps OSV ranges, takes the NVD score
    "cpe:2.3:a:numpy:numpy:*:*:*:*:*:*:*:*": [
        nvd("CVE-2021-41495", "cpe:2.3:a:numpy:numpy:*:*:*:*:*:*:*:*", 5.3, versionEndExcluding="1.22.0"),
    ],
}


def main():
    OUT.mkdir(exist_ok=True)
    for key, vulns in OSV.items():
        (OUT / (urllib.parse.quote(key, safe="") + ".json")).write_text(
            json.dumps({"vulns": vulns}, indent=2, sort_keys=True) + "\n")
    for key, items in NVD.items():
        (OUT / (urllib.parse.quote(key, safe="") + ".json")).write_text(
            json.dumps({"vulnerabilities": items}, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
