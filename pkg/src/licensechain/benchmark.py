"""Mutated-license benchmark generation.

Each mutant flips exactly one declared term's attitude to one of the two
alternatives and rewrites that term's evidence sentences consistently via a
modal-phrase substitution table; everything else in the text and profile
stays untouched. With the default selection (all declared terms) a license
with n declared terms yields 2n mutants.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from .model import (
    Attitude,
    LicenseProfile,
    ProfileSource,
    Provenance,
    TermAssignment,
    dump_json_document,
    load_profile,
    profile_to_document,
    save_profile,
)
from .rules import split_sentences


@dataclass(frozen=True)
class CueGroup:
    phrases: dict[Attitude, str]

    def phrase(self, attitude: Attitude) -> str:
        return self.phrases[attitude]


def load_cue_table(path: str | Path) -> list[CueGroup]:
    groups = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 tab-separated phrases")
        can, cannot, must = (p.strip() for p in parts)
        groups.append(CueGroup({Attitude.CAN: can, Attitude.CANNOT: cannot, Attitude.MUST: must}))
    if not groups:
        raise ValueError(f"{path}: empty cue table")
    return groups


class RewriteGapError(ValueError):
    """No cue phrase in the sentence matches the source attitude."""

    def __init__(self, sentence: str, attitude: Attitude):
        self.sentence = sentence
        self.attitude = attitude
        super().__init__(f"no {attitude.value!r} cue found in sentence: {sentence!r}")


class NoAnchorError(ValueError):
    """Selected term is defaulted: no evidence sentence to rewrite."""


class SharedEvidenceError(ValueError):
    """Target term's evidence sentence also backs another term, so a
    rewrite could not stay local to one term."""


def _cue_pattern(phrase: str) -> re.Pattern:
    return re.compile(r"\b" + r"\s+".join(map(re.escape, phrase.split())) + r"\b", re.IGNORECASE)


def _match_case(replacement: str, matched: str) -> str:
    if matched.isupper():
        return replacement.upper()
    if matched[:1].isupper():
        return replacement[:1].upper() + replacement[1:]
    return replacement


def rewrite_sentence(
    sentence: str,
    from_attitude: Attitude,
    to_attitude: Attitude,
    cues: Sequence[CueGroup],
) -> str:
    """Swap the sentence's modal cue from one attitude to another.

    The first cue group whose source-attitude phrase occurs wins; only that
    occurrence is replaced. Deterministic, and the result always differs
    from the input.
    """
    if from_attitude is to_attitude:
        raise ValueError("source and target attitudes are identical")
    for group in cues:
        pattern = _cue_pattern(group.phrase(from_attitude))
        match = pattern.search(sentence)
        if match is None:
            continue
        replacement = _match_case(group.phrase(to_attitude), match.group(0))
        return sentence[: match.start()] + replacement + sentence[match.end() :]
    raise RewriteGapError(sentence, from_attitude)


@dataclass(frozen=True)
class MutationSpec:
    base_license_id: str
    term: str
    original_attitude: Attitude
    mutated_attitude: Attitude
    rewrites: tuple[tuple[str, str], ...]

    def to_document(self) -> dict:
        return {
            "base_license_id": self.base_license_id,
            "term": self.term,
            "original_attitude": self.original_attitude.value,
            "mutated_attitude": self.mutated_attitude.value,
            "rewrites": [list(pair) for pair in self.rewrites],
        }


@dataclass(frozen=True)
class MutatedLicense:
    license_id: str
    text: str
    profile: LicenseProfile
    spec: MutationSpec


def mutant_id(base_license_id: str, term: str, to_attitude: Attitude) -> str:
    # Spaces in term ids are dashed so mutant ids stay greppable filenames.
    return f"{base_license_id}--mut-{term.replace(' ', '-')}-{to_attitude.value}"


def generate_mutants(
    base_text: str,
    base_profile: LicenseProfile,
    terms: Sequence[str] | None = None,
    cues: Sequence[CueGroup] | None = None,
) -> list[MutatedLicense]:
    """Generate 2 mutants (one per alternative attitude) for each selected
    declared term of the base license.

    Selection defaults to every declared term. Terms must be declared (a
    defaulted term has no textual anchor) and their evidence must not be
    shared with another term, otherwise the rewrite could not modify
    exactly one term.
    """
    if cues is None:
        from .bundled import bundled_cue_table

        cues = bundled_cue_table()
    declared = base_profile.declared()
    selected = list(terms) if terms is not None else list(declared)
    evidence_owners: dict[str, set[str]] = {}
    for term_id, assignment in declared.items():
        for sentence in assignment.evidence:
            evidence_owners.setdefault(sentence, set()).add(term_id)
    mutants: list[MutatedLicense] = []
    for term_id in selected:
        assignment = base_profile.assignments.get(term_id)
        if assignment is None or assignment.provenance is not Provenance.DECLARED:
            raise NoAnchorError(f"term {term_id!r} is not declared in {base_profile.license_id!r}")
        for sentence in assignment.evidence:
            owners = evidence_owners.get(sentence, set())
            if owners - {term_id}:
                raise SharedEvidenceError(
                    f"evidence of {term_id!r} is shared with {sorted(owners - {term_id})} "
                    f"in {base_profile.license_id!r}"
                )
            if sentence not in base_text:
                raise ValueError(
                    f"evidence of {term_id!r} is not a substring of the base text"
                )
        for target in Attitude:
            if target is assignment.attitude:
                continue
            rewrites = tuple(
                (sentence, rewrite_sentence(sentence, assignment.attitude, target, cues))
                for sentence in assignment.evidence
            )
            text = base_text
            for original, rewritten in rewrites:
                text = text.replace(original, rewritten)
            new_id = mutant_id(base_profile.license_id, term_id, target)
            mutated_assignment = TermAssignment(
                term=term_id,
                attitude=target,
                evidence=tuple(new for _, new in rewrites),
                provenance=Provenance.DECLARED,
            )
            assignments = dict(base_profile.assignments)
            assignments[term_id] = mutated_assignment
            profile = replace(
                base_profile,
                license_id=new_id,
                assignments=assignments,
                source=ProfileSource.SYNTHETIC,
            )
            spec = MutationSpec(
                base_license_id=base_profile.license_id,
                term=term_id,
                original_attitude=assignment.attitude,
                mutated_attitude=target,
                rewrites=rewrites,
            )
            mutants.append(MutatedLicense(license_id=new_id, text=text, profile=profile, spec=spec))
    return mutants


def verify_mutant(base_text: str, base_profile: LicenseProfile, mutant: MutatedLicense) -> bool:
    """Independent self-check of a mutant.

    True iff the profile differs from the base in exactly the declared
    mutation and the sentence multisets of the two texts differ exactly by
    the rewrite pairs. Deliberately avoids the generator's replace logic:
    texts are compared by re-splitting into sentences.
    """
    spec = mutant.spec
    if spec.original_attitude is spec.mutated_attitude:
        return False
    diff_terms = []
    for term_id, base_assignment in base_profile.assignments.items():
        mutated = mutant.profile.assignments.get(term_id)
        if mutated is None:
            return False
        if mutated.attitude is not base_assignment.attitude:
            diff_terms.append(term_id)
        elif term_id != spec.term and mutated.evidence != base_assignment.evidence:
            return False
    if set(mutant.profile.assignments) != set(base_profile.assignments):
        return False
    if diff_terms != [spec.term]:
        return False
    target = mutant.profile.assignments[spec.term]
    if target.attitude is not spec.mutated_attitude:
        return False
    if base_profile.assignments[spec.term].attitude is not spec.original_attitude:
        return False
    if target.evidence != tuple(new for _, new in spec.rewrites):
        return False
    removed = Counter(split_sentences(base_text)) - Counter(split_sentences(mutant.text))
    added = Counter(split_sentences(mutant.text)) - Counter(split_sentences(base_text))
    expected_removed = Counter(orig for orig, _ in spec.rewrites)
    expected_added = Counter(new for _, new in spec.rewrites)
    return removed == expected_removed and added == expected_added


# ---------------------------------------------------------------------------
# Benchmark bundle layout: one directory per collection, per license a text
# file plus its ground-truth profile document; mutated collections add a
# manifest listing every mutation.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchmarkEntry:
    license_id: str
    text: str
    profile: LicenseProfile


def load_collection(directory: str | Path) -> list[BenchmarkEntry]:
    directory = Path(directory)
    entries = []
    for text_path in sorted(directory.glob("*.txt")):
        profile_path = text_path.with_suffix(".json")
        if not profile_path.exists():
            raise FileNotFoundError(f"profile document missing for {text_path.name}: {profile_path}")
        profile = load_profile(profile_path)
        entries.append(
            BenchmarkEntry(
                license_id=profile.license_id,
                text=text_path.read_text(encoding="utf-8"),
                profile=profile,
            )
        )
    if not entries:
        raise FileNotFoundError(f"no *.txt licenses under {directory}")
    return entries


def _entry_filename(license_id: str) -> str:
    return license_id.replace("/", "_")


def write_collection(directory: str | Path, entries: Iterable[BenchmarkEntry]) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for entry in entries:
        stem = _entry_filename(entry.license_id)
        (directory / f"{stem}.txt").write_text(entry.text, encoding="utf-8")
        save_profile(entry.profile, directory / f"{stem}.json")


def mutate_collection(
    entries: Sequence[BenchmarkEntry],
    cues: Sequence[CueGroup] | None = None,
) -> tuple[list[MutatedLicense], dict]:
    """Mutate every entry over all its declared terms; returns the mutants
    plus a manifest document listing every MutationSpec."""
    mutants: list[MutatedLicense] = []
    for entry in entries:
        mutants.extend(generate_mutants(entry.text, entry.profile, cues=cues))
    manifest = {
        "mutants": [
            {"license_id": m.license_id, **m.spec.to_document()} for m in mutants
        ],
    }
    return mutants, manifest


def write_mutant_collection(
    directory: str | Path, mutants: Sequence[MutatedLicense], manifest: dict
) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for mutant in mutants:
        stem = _entry_filename(mutant.license_id)
        (directory / f"{stem}.txt").write_text(mutant.text, encoding="utf-8")
        save_profile(mutant.profile, directory / f"{stem}.json")
    dump_json_document(manifest, directory / "manifest.json")


def load_manifest(directory: str | Path) -> dict:
    return json.loads((Path(directory) / "manifest.json").read_text(encoding="utf-8"))
