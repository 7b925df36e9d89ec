"""Term-attitude license model.

A license is represented as a map from legal terms (a fixed 23-entry
catalog of rights and obligations) to attitudes (can / cannot / must),
each backed by evidence sentences from the license text. Terms a license
does not mention are filled in by a default rule: rights default to
cannot, obligations to can.

Profiles are immutable values; every transformation returns a new profile.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

TAXONOMY_SIZE = 23

# Sentinel license ids: a license file that deviates from known templates,
# and a missing license file, respectively.
NOASSERTION = "NOASSERTION"
NOT_FOUND = "Not Found"
SENTINEL_IDS = frozenset({NOASSERTION, NOT_FOUND})


def is_sentinel(license_id: str) -> bool:
    return license_id in SENTINEL_IDS


class Attitude(str, Enum):
    CAN = "can"
    CANNOT = "cannot"
    MUST = "must"

    @classmethod
    def parse(cls, value: str) -> "Attitude":
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise ValueError(f"unknown attitude: {value!r}") from None

    def render(self) -> str:
        return self.value


# Ordering used when a single attitude must be chosen among conflicting
# extractions: cannot > must > can (most restrictive wins).
RESTRICTIVENESS = {Attitude.CANNOT: 2, Attitude.MUST: 1, Attitude.CAN: 0}


def most_restrictive(attitudes: Iterable[Attitude]) -> Attitude:
    items = list(attitudes)
    if not items:
        raise ValueError("most_restrictive() needs at least one attitude")
    return max(items, key=lambda a: RESTRICTIVENESS[a])


class TermKind(str, Enum):
    RIGHT = "right"
    OBLIGATION = "obligation"


class Provenance(str, Enum):
    DECLARED = "declared"
    DEFAULTED = "defaulted"


class ProfileSource(str, Enum):
    TEMPLATE_MATCH = "template_match"
    GROUND_TRUTH = "ground_truth"
    EXTRACTED = "extracted"
    SYNTHETIC = "synthetic"


# Default attitude per term kind for terms the license does not mention.
DEFAULT_ATTITUDE = {TermKind.RIGHT: Attitude.CANNOT, TermKind.OBLIGATION: Attitude.CAN}


@dataclass(frozen=True)
class LegalTerm:
    id: str
    kind: TermKind
    description: str


class CatalogError(ValueError):
    """Malformed or wrong-sized term catalog."""


class UnknownTermError(KeyError):
    """An assignment references a term outside the taxonomy."""


def load_taxonomy(path: str | Path) -> list[LegalTerm]:
    """Load the legal-term catalog from a tab-separated file.

    The file must contain exactly 23 records with unique ids; '#' lines are
    comments. Order of the returned list follows the file and is the
    canonical term order everywhere downstream.
    """
    terms: list[LegalTerm] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise CatalogError(f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}")
        term_id, kind_raw, description = (p.strip() for p in parts)
        if not term_id or not description:
            raise CatalogError(f"{path}:{lineno}: empty id or description")
        if term_id in seen:
            raise CatalogError(f"{path}:{lineno}: duplicate term id {term_id!r}")
        try:
            kind = TermKind(kind_raw.lower())
        except ValueError:
            raise CatalogError(f"{path}:{lineno}: unknown kind {kind_raw!r} for {term_id!r}") from None
        seen.add(term_id)
        terms.append(LegalTerm(id=term_id, kind=kind, description=description))
    if len(terms) != TAXONOMY_SIZE:
        raise CatalogError(f"{path}: expected {TAXONOMY_SIZE} terms, found {len(terms)}")
    return terms


def taxonomy_index(taxonomy: Sequence[LegalTerm]) -> dict[str, LegalTerm]:
    return {t.id: t for t in taxonomy}


@dataclass(frozen=True)
class TermAssignment:
    term: str
    attitude: Attitude
    evidence: tuple[str, ...] = ()
    provenance: Provenance = Provenance.DECLARED


@dataclass(frozen=True)
class LicenseProfile:
    license_id: str
    assignments: Mapping[str, TermAssignment] = field(default_factory=dict)
    source: ProfileSource = ProfileSource.EXTRACTED

    def declared(self) -> dict[str, TermAssignment]:
        return {t: a for t, a in self.assignments.items() if a.provenance is Provenance.DECLARED}

    def attitude(self, term_id: str) -> Attitude:
        return self.assignments[term_id].attitude

    def is_complete(self, taxonomy: Sequence[LegalTerm]) -> bool:
        return set(self.assignments) == {t.id for t in taxonomy}

    def pairs(self) -> set[tuple[str, Attitude]]:
        return {(t, a.attitude) for t, a in self.assignments.items()}


def make_profile(
    license_id: str,
    declared: Iterable[TermAssignment],
    source: ProfileSource = ProfileSource.EXTRACTED,
) -> LicenseProfile:
    """Build a partial profile from declared assignments (one per term)."""
    assignments: dict[str, TermAssignment] = {}
    for a in declared:
        if a.term in assignments:
            raise ValueError(f"duplicate assignment for term {a.term!r}")
        assignments[a.term] = a
    return LicenseProfile(license_id=license_id, assignments=assignments, source=source)


def complete_profile(partial: LicenseProfile, taxonomy: Sequence[LegalTerm]) -> LicenseProfile:
    """Fill in unmentioned terms with their kind-driven defaults.

    Rights default to cannot, obligations to can; declared assignments pass
    through untouched, so completion is idempotent and monotone.
    """
    by_id = taxonomy_index(taxonomy)
    for term_id in partial.assignments:
        if term_id not in by_id:
            raise UnknownTermError(f"profile {partial.license_id!r} assigns unknown term {term_id!r}")
    completed: dict[str, TermAssignment] = {}
    for term in taxonomy:
        existing = partial.assignments.get(term.id)
        if existing is not None:
            completed[term.id] = existing
        else:
            completed[term.id] = TermAssignment(
                term=term.id,
                attitude=DEFAULT_ATTITUDE[term.kind],
                evidence=(),
                provenance=Provenance.DEFAULTED,
            )
    return replace(partial, assignments=completed)


def all_defaults_profile(license_id: str, taxonomy: Sequence[LegalTerm]) -> LicenseProfile:
    """Profile for a license with no analyzable text: every term defaulted."""
    return complete_profile(
        LicenseProfile(license_id=license_id, assignments={}, source=ProfileSource.SYNTHETIC),
        taxonomy,
    )


def validate_profile(
    profile: LicenseProfile,
    taxonomy: Sequence[LegalTerm],
    source_text: str | None = None,
) -> list[str]:
    """Check profile invariants; returns one message per violation.

    The evidence-substring check only runs when the source license text is
    supplied, since defaulted profiles and interchange documents may travel
    without their text.
    """
    violations: list[str] = []
    by_id = taxonomy_index(taxonomy)
    for term_id, a in profile.assignments.items():
        if term_id not in by_id:
            violations.append(f"unknown term {term_id!r}")
        if a.term != term_id:
            violations.append(f"assignment key {term_id!r} disagrees with its term field {a.term!r}")
        if a.provenance is Provenance.DECLARED and not a.evidence:
            violations.append(f"declared term {term_id!r} has no evidence")
        if a.provenance is Provenance.DEFAULTED and a.evidence:
            violations.append(f"defaulted term {term_id!r} carries evidence")
        if source_text is not None:
            for sentence in a.evidence:
                if sentence not in source_text:
                    violations.append(f"evidence for {term_id!r} is not a substring of the source text")
    missing = [t.id for t in taxonomy if t.id not in profile.assignments]
    if profile.assignments and missing:
        violations.extend(f"missing assignment for term {m!r}" for m in missing)
    if is_sentinel(profile.license_id):
        if any(a.provenance is Provenance.DECLARED for a in profile.assignments.values()):
            violations.append(f"sentinel profile {profile.license_id!r} carries declared assignments")
    return violations


# ---------------------------------------------------------------------------
# Profile interchange documents
#
# The JSON document below is the contract between extraction, the benchmark
# generator, and the evaluation harness: license_id, source, and the
# assignment list (term, attitude, provenance, evidence sentences).
# ---------------------------------------------------------------------------


def profile_to_document(profile: LicenseProfile) -> dict:
    return {
        "license_id": profile.license_id,
        "source": profile.source.value,
        "assignments": [
            {
                "term": a.term,
                "attitude": a.attitude.value,
                "provenance": a.provenance.value,
                "evidence": list(a.evidence),
            }
            for a in profile.assignments.values()
        ],
    }


def profile_from_document(doc: Mapping) -> LicenseProfile:
    assignments = [
        TermAssignment(
            term=entry["term"],
            attitude=Attitude.parse(entry["attitude"]),
            evidence=tuple(entry.get("evidence", ())),
            provenance=Provenance(entry.get("provenance", "declared")),
        )
        for entry in doc.get("assignments", ())
    ]
    return make_profile(
        doc["license_id"],
        assignments,
        source=ProfileSource(doc.get("source", "extracted")),
    )


def dump_json_document(doc: dict, path: str | Path) -> None:
    """Write a JSON document deterministically (sorted keys, trailing newline)."""
    Path(path).write_text(render_json_document(doc), encoding="utf-8")


def render_json_document(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def save_profile(profile: LicenseProfile, path: str | Path) -> None:
    dump_json_document(profile_to_document(profile), path)


def load_profile(path: str | Path) -> LicenseProfile:
    return profile_from_document(json.loads(Path(path).read_text(encoding="utf-8")))
