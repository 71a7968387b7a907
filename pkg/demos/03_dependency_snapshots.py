"""Capture dependencies at three execution stages and diff them."""

from _paths import DATA
from aibom.dependencies import (
    capture_snapshot,
    diff_snapshots,
    ingest_runtime_import_log,
    parse_conda_env,
    parse_dpkg_status,
    snapshot_to_components,
)

M = DATA / "manifests"
declared = parse_conda_env((M / "environment.yml").read_text())
system = parse_dpkg_status((M / "dpkg-status").read_text())
log = ingest_runtime_import_log((M / "imports.log").read_text())
print(f"declared {len(declared)}, system {len(system)}, imported {len(log.dependencies)} ({log.malformed} malformed)")

pre = capture_snapshot("pre-load", declared + system, at="2025-06-20T14:00:00Z")
runtime = capture_snapshot("runtime", list(pre.dependencies) + log.dependencies, at="2025-06-20T14:10:00Z")

diff = diff_snapshots(pre, runtime)
print("appeared at runtime:", [d.name for d in diff.added])

# unpinned entries become unverifiable components rather than guesses
comps = snapshot_to_components(runtime)
print("unverifiable:", [c.name for c in comps if c.unverifiable])
