"""Match components against canned OSV/NVD responses and score the matcher."""

import sys

from _paths import DATA, ROOT

sys.path.insert(0, str(ROOT / "tests"))

from aibom.cve import OfflineSource, component_queries, evaluate_matching, match_components, merge_records, query_nvd, query_osv
from cve_corpus import TRUTH, corpus_document

doc = corpus_document()
source = OfflineSource(DATA / "vulns")
purls, cpes = component_queries(doc)
records = merge_records(query_osv(purls, source) + query_nvd(cpes, source))
report = match_components(doc, records)

for m in report.matches:
    print(f"{m.severity_class:9} {m.cve.id:16} {m.component_ref[0]}@{m.component_ref[1]} via {m.basis}")
print("unverifiable:", report.unverifiable)
for action in report.mitigations:
    print("mitigation:", action.kind, "->", action.target[0])

metrics = evaluate_matching(report, TRUTH)
print(f"tp={metrics.tp} fp={metrics.fp} fn={metrics.fn}", metrics.rendered())
