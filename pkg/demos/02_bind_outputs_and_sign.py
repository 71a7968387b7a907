"""Bind disclosure outputs to an AIBOM with a Merkle root, sign it, then tamper with it."""

import json
from dataclasses import replace

from _paths import DATA
from aibom import parse_document
from aibom.audit import verify_outputs
from aibom.provenance import bind_outputs, build_merkle, digest_output_set, prove_leaf, verify_proof
from aibom.signing import generate_keypair, sign_document, verify_document

raw = json.loads((DATA / "template.json").read_text())
del raw["signature"]  # placeholder values, not a real signature
doc = parse_document(json.dumps(raw))

outputs = [
    ("table1.csv", b"age_band,count\n40-49,12\n50-59,17\n"),
    ("table2.csv", b"region,count\nnorth,31\nsouth,28\n"),
    ("model_card.md", b"# Risk model\nSuppressed cells: 2\n"),
]
digests = digest_output_set(outputs)
tree = build_merkle(digests)
print("merkle root:", tree.root)

# an inclusion proof for one file, checked against the root alone
proof = prove_leaf(tree, 1)
print("proof for", digests[1].source_name, "verifies:", verify_proof(tree.root, digests[1], proof))

doc = bind_outputs(doc, digests)
key = generate_keypair("Ed25519")
signed = sign_document(doc, key)
print("signature valid:", verify_document(signed))

# released files still match, an edited table does not
print("outputs match:", verify_outputs(signed, outputs))
edited = [outputs[0], ("table2.csv", b"region,count\nnorth,31\nsouth,29\n"), outputs[2]]
print("edited outputs match:", verify_outputs(signed, edited))

# any change to the document body breaks the signature
model = signed.components[0]
forged = replace(signed, components=(replace(model, version="9.9.9"),))
print("forged signature valid:", verify_document(forged))
