"""The three-key patch protocol and its application to marker regions.

A patch is a JSON object whose only allowed keys are ``DELETE CONSTRAINT``,
``ADD CONSTRAINT``, and ``ADD DATA``; each value is a snippet of DSL lines
(``#`` comments permitted).  Additions are inserted immediately before the
closing marker of their region; deletions remove a whitespace-normalized
line sequence from within the constraint region only.  A patch either
applies completely or not at all.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .model import CONSTRAINT_BEGIN, CONSTRAINT_END, DATA_BEGIN, DATA_END, MARKERS, LinearModel
from .parser import ParseError, parse_model

DELETE_CONSTRAINT = "DELETE CONSTRAINT"
ADD_CONSTRAINT = "ADD CONSTRAINT"
ADD_DATA = "ADD DATA"
PATCH_KEYS = (DELETE_CONSTRAINT, ADD_CONSTRAINT, ADD_DATA)

VIOLATION_KINDS = (
    "unknown-key",
    "malformed-document",
    "snippet-parse-error",
    "new-variable-introduced",
    "delete-target-missing",
    "marker-corruption",
)


@dataclass(frozen=True)
class PatchViolation:
    kind: str
    detail: str


class PatchError(ValueError):
    """A patch could not be parsed or applied; carries the violation."""

    def __init__(self, kind: str, detail: str):
        assert kind in VIOLATION_KINDS
        self.violation = PatchViolation(kind, detail)
        super().__init__(f"{kind}: {detail}")


@dataclass(frozen=True)
class QueryPatch:
    delete_constraint: str | None = None
    add_constraint: str | None = None
    add_data: str | None = None
    raw: str = ""

    def snippets(self) -> dict[str, str]:
        out = {}
        if self.delete_constraint is not None:
            out[DELETE_CONSTRAINT] = self.delete_constraint
        if self.add_constraint is not None:
            out[ADD_CONSTRAINT] = self.add_constraint
        if self.add_data is not None:
            out[ADD_DATA] = self.add_data
        return out

    def keys(self) -> tuple[str, ...]:
        return tuple(self.snippets())

    def to_dict(self) -> dict:
        return {"raw": self.raw, **self.snippets()}


def parse_patch(document: str) -> QueryPatch:
    """Strictly validate a serialized patch: a JSON object, exact key
    names, string values, at least one key."""
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise PatchError("malformed-document", f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise PatchError("malformed-document", "top level is not an object")
    if not data:
        raise PatchError("malformed-document", "no recognized keys present")
    unknown = [key for key in data if key not in PATCH_KEYS]
    if unknown:
        raise PatchError(
            "unknown-key",
            f"only {', '.join(PATCH_KEYS)} are allowed; got {', '.join(unknown)}",
        )
    for key, value in data.items():
        if not isinstance(value, str):
            raise PatchError("malformed-document", f"value of {key!r} is not a string")
    return QueryPatch(
        delete_constraint=data.get(DELETE_CONSTRAINT),
        add_constraint=data.get(ADD_CONSTRAINT),
        add_data=data.get(ADD_DATA),
        raw=document,
    )


_FENCE_RE = re.compile(r"```[a-zA-Z0-9_-]*\n(.*?)```", re.DOTALL)


def extract_patch(text: str) -> QueryPatch:
    """Pull the first well-formed patch document out of provider output.

    Fenced code blocks are searched first, then the bare text; the first
    parseable JSON object found is taken as the patch document and
    validated strictly."""
    candidates = [m.group(1) for m in _FENCE_RE.finditer(text)]
    candidates.append(text)
    decoder = json.JSONDecoder()
    for candidate in candidates:
        for start in _object_starts(candidate):
            try:
                value, end = decoder.raw_decode(candidate[start:])
            except json.JSONDecodeError:
                continue
            if isinstance(value, dict):
                return parse_patch(candidate[start : start + end])
    raise PatchError("malformed-document", "no JSON object found in response")


def _object_starts(text: str):
    for i, ch in enumerate(text):
        if ch == "{":
            yield i


def _snippet_lines(snippet: str) -> list[str]:
    return snippet.splitlines()


def _normalize(line: str) -> str:
    # deletion matches on content only: all whitespace differences forgiven
    return "".join(line.split())


def _marker_indices(lines: list[str]) -> dict[str, int]:
    found: dict[str, list[int]] = {m: [] for m in MARKERS}
    for i, line in enumerate(lines):
        stripped = line.strip()
        if stripped in found:
            found[stripped].append(i)
    for marker, positions in found.items():
        if len(positions) != 1:
            state = "missing" if not positions else "duplicated"
            raise PatchError("marker-corruption", f"{state} marker line {marker!r}")
    order = [found[m][0] for m in MARKERS]
    if order != sorted(order):
        raise PatchError("marker-corruption", "marker lines out of order")
    return {m: found[m][0] for m in MARKERS}


def apply_patch(source: str, patch: QueryPatch) -> str:
    """Apply a patch to model source text.

    Deletion happens before addition; text outside the marker regions is
    never touched.  The patched source must re-parse, otherwise the whole
    application is rejected."""
    for key, snippet in patch.snippets().items():
        for line in _snippet_lines(snippet):
            if line.strip() in MARKERS:
                raise PatchError(
                    "marker-corruption", f"snippet under {key!r} contains a marker line"
                )

    lines = source.split("\n")
    if patch.delete_constraint is not None:
        markers = _marker_indices(lines)
        begin, end = markers[CONSTRAINT_BEGIN], markers[CONSTRAINT_END]
        target = [
            _normalize(l) for l in _snippet_lines(patch.delete_constraint) if _normalize(l)
        ]
        if not target:
            raise PatchError("delete-target-missing", "empty deletion snippet")
        region = [
            (i, _normalize(lines[i]))
            for i in range(begin + 1, end)
            if _normalize(lines[i])
        ]
        hit: list[int] | None = None
        for k in range(len(region) - len(target) + 1):
            if [norm for _, norm in region[k : k + len(target)]] == target:
                hit = [i for i, _ in region[k : k + len(target)]]
                break
        if hit is None:
            raise PatchError(
                "delete-target-missing",
                "deletion snippet not found in the constraint region",
            )
        for i in reversed(hit):
            del lines[i]

    if patch.add_data is not None:
        markers = _marker_indices(lines)
        at = markers[DATA_END]
        lines[at:at] = _snippet_lines(patch.add_data)
    if patch.add_constraint is not None:
        markers = _marker_indices(lines)
        at = markers[CONSTRAINT_END]
        lines[at:at] = _snippet_lines(patch.add_constraint)

    result = "\n".join(lines)
    try:
        parse_model(result)
    except ParseError as exc:
        raise PatchError("snippet-parse-error", str(exc)) from exc
    return result


def validate_patch(original: LinearModel, updated: LinearModel) -> list[PatchViolation]:
    """Check the decision variables survived an update unchanged.

    Returns an empty list iff variable name sets and integrality flags are
    identical; params are data, not decision variables, so they may change
    freely."""
    violations: list[PatchViolation] = []
    before = {v.name: v.is_integer for v in original.variables}
    after = {v.name: v.is_integer for v in updated.variables}
    for name in sorted(set(after) - set(before)):
        violations.append(
            PatchViolation("new-variable-introduced", f"variable {name!r} introduced")
        )
    for name in sorted(set(before) - set(after)):
        violations.append(
            PatchViolation("new-variable-introduced", f"variable {name!r} removed")
        )
    for name in sorted(set(before) & set(after)):
        if before[name] != after[name]:
            violations.append(
                PatchViolation(
                    "new-variable-introduced",
                    f"integrality of variable {name!r} changed",
                )
            )
    return violations
