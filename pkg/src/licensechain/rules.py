"""Deterministic keyword/modal extraction of term attitudes from license text.

This is the offline fallback route: it sentence-splits the text, looks for
per-term keyword hits, and reads the stance from modal cues in the same
sentence ("may"/"are allowed" -> can, "must not"/"shall not" -> cannot,
"must"/"shall" -> must). It is intentionally shallow: it returns fewer
assignments on hard texts rather than failing.
"""

from __future__ import annotations

import re
from typing import Sequence

from .model import (
    Attitude,
    LegalTerm,
    LicenseProfile,
    ProfileSource,
    TermAssignment,
    make_profile,
    most_restrictive,
)

# Sentence boundary: terminator followed by whitespace. Numbered-clause
# license layouts also break at blank lines.
_SENTENCE_BOUNDARY = re.compile(r"(?<=[.!?;])\s+|\n\s*\n")


def split_sentences(text: str) -> list[str]:
    parts = _SENTENCE_BOUNDARY.split(text)
    return [p.strip() for p in parts if p and p.strip()]


def _phrase_pattern(phrase: str) -> re.Pattern:
    return re.compile(r"\b" + r"\s+".join(map(re.escape, phrase.split())) + r"\b", re.IGNORECASE)


# Modal cue lexicons, checked in precedence order cannot > must > can so a
# prohibition is never misread as its embedded weaker modal ("must not"
# contains "must", "may not" contains "may").
_MODAL_CUES: list[tuple[Attitude, list[re.Pattern]]] = [
    (
        Attitude.CANNOT,
        [
            _phrase_pattern(p)
            for p in (
                "must not", "shall not", "may not", "cannot", "can not",
                "are not allowed", "is not allowed", "are not permitted",
                "is not permitted", "is prohibited", "are prohibited",
                "is forbidden", "are forbidden", "in no event",
                "is hereby denied", "not be used",
            )
        ],
    ),
    (
        Attitude.MUST,
        [
            _phrase_pattern(p)
            for p in (
                "must", "shall", "is required", "are required",
                "is obligated", "are obligated", "you agree to",
                "is hereby mandated",
            )
        ],
    ),
    (
        Attitude.CAN,
        [
            _phrase_pattern(p)
            for p in (
                "may", "can", "are allowed", "is allowed", "are permitted",
                "is permitted", "are free to", "is free to",
                "is hereby granted", "hereby grants", "grants you",
                "grants to you", "free of charge", "without restriction",
                "for any purpose",
            )
        ],
    ),
]

# Per-term keyword phrases. A sentence is evidence for a term when any of
# its phrases occur; phrase lists are kept narrow to limit cross-term hits.
TERM_KEYWORDS: dict[str, tuple[str, ...]] = {
    "Distribute": ("distribute", "distribution", "redistribute", "redistributions", "convey", "publish"),
    "Modify": ("modify", "modification", "modifications", "modified", "derivative works"),
    "Commercial Use": ("commercial", "commercially", "sell", "selling", "for profit"),
    "Sublicense": ("sublicense", "sub-license", "sublicensing", "sublicensable"),
    "Private Use": ("private use", "personal use", "privately", "internal use"),
    "Statically Link": ("statically link", "static linking", "statically linked"),
    "Use Patent Claims": ("patent",),
    "Place Warranty": ("offer warranty", "warranty or support", "offer support", "fee for warranty"),
    "Relicense": ("relicense", "relicensing", "under a different license", "change the license"),
    "Hold Liable": ("liable", "liability"),
    "Use Trademark": ("trademark", "trade names", "service marks", "endorse or promote", "logo"),
    "Include Copyright": ("copyright notice",),
    "Include License": (
        "copy of this license", "license text", "this list of conditions",
        "permission notice", "include the license", "copy of the license",
    ),
    "Include Notice": ("notice file", "attribution notices", "notice text"),
    "Include Original": ("original version", "unmodified copy", "original work alongside"),
    "Disclose Source": ("source code", "corresponding source", "disclose source", "source form"),
    "State Changes": (
        "state changes", "changed the files", "you modified", "document the changes",
        "indicate any changes", "carry prominent notices",
    ),
    "Give Credit": ("credit", "acknowledge", "attribution", "acknowledgement"),
    "Rename": ("rename", "different name", "change the name", "another name"),
    "Contact Author": ("contact the author", "notify the author", "contact the copyright holder"),
    "Include Install Instructions": ("installation instructions", "install instructions", "installation information"),
    "Compensate for Damages": ("compensate", "compensation", "indemnify", "indemnity", "indemnification"),
    "Pay Above Use Threshold": ("royalty payment", "pay a fee", "usage threshold", "exceeds the threshold"),
}

_KEYWORD_PATTERNS = {
    term: [_phrase_pattern(p) for p in phrases] for term, phrases in TERM_KEYWORDS.items()
}


def sentence_attitude(sentence: str) -> Attitude | None:
    """Modal stance of a sentence, or None when no cue is present."""
    for attitude, patterns in _MODAL_CUES:
        if any(p.search(sentence) for p in patterns):
            return attitude
    return None


def extract_rules(text: str, taxonomy: Sequence[LegalTerm]) -> LicenseProfile:
    """Extract a partial, declared-only profile from raw license text.

    Per term, conflicting hits across sentences resolve to the most
    restrictive attitude; evidence keeps only the sentences supporting the
    winning attitude, so every assignment is self-consistent.
    """
    if not text.strip():
        return make_profile("Extracted", (), source=ProfileSource.EXTRACTED)
    hits: dict[str, list[tuple[Attitude, str]]] = {}
    for sentence in split_sentences(text):
        attitude = sentence_attitude(sentence)
        if attitude is None:
            continue
        for term in taxonomy:
            patterns = _KEYWORD_PATTERNS.get(term.id, ())
            if any(p.search(sentence) for p in patterns):
                hits.setdefault(term.id, []).append((attitude, sentence))
    assignments = []
    for term in taxonomy:
        term_hits = hits.get(term.id)
        if not term_hits:
            continue
        winner = most_restrictive(a for a, _ in term_hits)
        evidence = []
        for attitude, sentence in term_hits:
            if attitude is winner and sentence not in evidence:
                evidence.append(sentence)
        assignments.append(TermAssignment(term=term.id, attitude=winner, evidence=tuple(evidence)))
    return make_profile("Extracted", assignments, source=ProfileSource.EXTRACTED)
