"""Validate the reference template, then break it a few ways."""

import json

from _paths import DATA
from aibom import parse_document, validate_object
from aibom.model import extract_sacro_properties

raw = json.loads((DATA / "template.json").read_text())

report = validate_object(raw)
print("lenient:", "valid" if report.valid else report.violations)

# strict mode wants every SACRO property prefixed
strict = validate_object(raw, strict=True)
for v in strict.violations:
    print("strict:", v.path, v.rule)

# the typed view of the model component
doc = parse_document(json.dumps(raw))
ext = extract_sacro_properties(doc.components[0])
print("disclosure control:", ext.disclosure_control_type)
print("inference parameters:", ext.inference_parameters())

# seeded defects come back as (path, rule) pairs in document order
raw["metadata"]["timestamp"] = "20/06/2025"
raw["components"][0]["type"] = "model"
raw["components"][0]["hashes"] = []
for v in validate_object(raw).violations:
    print("defect:", v.path, v.rule)
