"""Semantic-version ordering and range containment.

Versions that do not look like semver (``1``, ``1.2``, ``1.2.3``, optional
``-prerelease`` / ``+build``) are never ordered: they can only satisfy an
``==`` comparator, by exact string equality.  That under-claims matches for
exotic version schemes instead of guessing.
"""

from __future__ import annotations

import re
from functools import total_ordering

_SEMVER = re.compile(
    r"^v?(?P<core>\d+(?:\.\d+){0,3})"
    r"(?:-(?P<pre>[0-9A-Za-z-]+(?:\.[0-9A-Za-z-]+)*))?"
    r"(?:\+(?P<build>[0-9A-Za-z-]+(?:\.[0-9A-Za-z-]+)*))?$"
)
_COMPARATOR = re.compile(r"^(==|=|>=|<=|>|<|!=)?\s*(\S+)$")


@total_ordering
class SemVer:
    __slots__ = ("core", "pre", "text")

    def __init__(self, core: tuple[int, ...], pre: tuple, text: str):
        self.core = core
        self.pre = pre
        self.text = text

    def _key(self):
        # a release sorts after all of its prereleases
        pre = tuple((0, p, "") if isinstance(p, int) else (1, 0, p) for p in self.pre)
        return (self.core, 0 if self.pre else 1, pre)

    def __eq__(self, other):
        return isinstance(other, SemVer) and self._key() == other._key()

    def __lt__(self, other):
        return self._key() < other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"SemVer({self.text!r})"


def parse_semver(text: str) -> SemVer | None:
    m = _SEMVER.match(text.strip())
    if not m:
        return None
    core = [int(x) for x in m.group("core").split(".")]
    core += [0] * (4 - len(core))
    pre = ()
    if m.group("pre"):
        pre = tuple(int(p) if p.isdigit() else p for p in m.group("pre").split("."))
    return SemVer(tuple(core), pre, text)


def parse_range(spec: str) -> list[list[tuple[str, str]]]:
    """``">=1.0 <2.0 || ==3.1"`` -> ``[[(">=", "1.0"), ("<", "2.0")], [("==", "3.1")]]``.

    ``*`` or an empty string means "any version".
    """
    alternatives = []
    for alt in spec.split("||"):
        terms = []
        for token in re.findall(r"(?:==|=|>=|<=|>|<|!=)?\s*[^\s,|<>=!]+", alt):
            token = token.strip()
            if token == "*":
                continue
            m = _COMPARATOR.match(token)
            if not m:
                raise ValueError(f"bad comparator {token!r} in range {spec!r}")
            op = m.group(1) or "=="
            terms.append(("==" if op == "=" else op, m.group(2)))
        alternatives.append(terms)
    return alternatives


def _satisfies(version: str, op: str, bound: str, exact_only: bool) -> bool:
    if op == "==" and version == bound:
        return True
    if exact_only:
        return op == "!=" and version != bound
    v, b = parse_semver(version), parse_semver(bound)
    if v is None or b is None:
        return op == "!=" and version != bound
    return {
        "==": v == b,
        "!=": v != b,
        ">=": v >= b,
        "<=": v <= b,
        ">": v > b,
        "<": v < b,
    }[op]


def version_in_range(version: str, spec: str, exact_only: bool = False) -> bool:
    """True iff ``version`` satisfies every comparator of some ``||`` alternative."""
    return any(
        all(_satisfies(version, op, bound, exact_only) for op, bound in terms)
        for terms in parse_range(spec)
    )
