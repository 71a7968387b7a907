"""Replay a 300-component environment with a few drifted digests."""

import hashlib
from dataclasses import replace

from aibom import AibomDocument
from aibom.audit import replay_compare
from aibom.model import ComponentRecord, DocumentMetadata, HashEntry, ToolDescriptor


def h(text):
    return hashlib.sha256(text.encode()).hexdigest()


root = ComponentRecord("application", "replay-demo", "1.0.0", (HashEntry("SHA-256", h("root")),))
comps = tuple(
    ComponentRecord("library", f"lib{i:03d}", "1.0.0", (HashEntry("SHA-256", h(str(i))),), properties=())
    for i in range(300)
)
original = AibomDocument(DocumentMetadata("2025-06-20T14:30:00Z", (ToolDescriptor("demo", "demo", "0"),), root), comps)

# four libraries rebuilt with a newer patch release
drifted = list(comps)
for i in (3, 77, 150, 299):
    drifted[i] = replace(comps[i], version="1.0.1", hashes=(HashEntry("SHA-256", h(f"{i}-rebuilt")),))
replay = replace(original, components=tuple(drifted))

report = replay_compare(original, replay)
print(f"fidelity {report.fidelity_pct}% ({report.matched}/{report.total})")
for d in report.deviations:
    print(" ", d.kind, d.component_ref, d.detail)
