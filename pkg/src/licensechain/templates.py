"""Exact-match license identification against a catalog of known templates.

Texts are normalized (case-folded, whitespace-collapsed, copyright fill-in
fields stripped) before comparison. An exact normalized match names the
license; a near match (token Jaccard at or above a threshold) is labeled
NOASSERTION; an empty input is Not Found; anything else is an unknown text
that the extraction routes can take over.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .model import NOASSERTION, NOT_FOUND

NORMALIZATION_VERSION = 1

# Similarity at or above this (and below exact) separates "edited copy of a
# known template" from "different document". Configurable per catalog.
DEFAULT_NEAR_THRESHOLD = 0.5

# Copyright lines and bracketed/angled fill-in fields carry the holder and
# year, not license semantics; both are stripped before matching.
_COPYRIGHT_LINE = re.compile(r"^\s*copyright\s*(\(c\)|©)?\s*[\w<>\[\]().,\- ]*$", re.IGNORECASE)
_FILLIN_FIELD = re.compile(r"<[^<>\n]{1,80}>|\[[^\[\]\n]{1,80}\]")
_YEAR = re.compile(r"\b(19|20)\d{2}(\s*[-,]\s*(19|20)\d{2})*\b")
_NONWORD = re.compile(r"[^a-z0-9]+")


def normalize_license_text(text: str) -> str:
    lines = []
    for line in text.splitlines():
        if _COPYRIGHT_LINE.match(line):
            continue
        lines.append(line)
    joined = "\n".join(lines).lower()
    joined = _FILLIN_FIELD.sub(" ", joined)
    joined = _YEAR.sub(" ", joined)
    joined = joined.replace("copyright (c)", " ").replace("copyright ©", " ")
    tokens = [t for t in _NONWORD.split(joined) if t]
    return " ".join(tokens)


def _token_jaccard(a: str, b: str) -> float:
    sa, sb = set(a.split()), set(b.split())
    if not sa and not sb:
        return 1.0
    if not sa or not sb:
        return 0.0
    return len(sa & sb) / len(sa | sb)


class TemplateCatalogError(ValueError):
    pass


@dataclass(frozen=True)
class TemplateCatalog:
    entries: dict[str, str]  # license_id -> normalized template text
    normalization_version: int = NORMALIZATION_VERSION

    @classmethod
    def from_texts(cls, texts: dict[str, str]) -> "TemplateCatalog":
        entries = {}
        for license_id, text in texts.items():
            normalized = normalize_license_text(text)
            if not normalized:
                raise TemplateCatalogError(f"template {license_id!r} normalizes to empty text")
            entries[license_id] = normalized
        return cls(entries=entries)

    @classmethod
    def from_directory(cls, directory: str | Path) -> "TemplateCatalog":
        """Load a catalog from a directory of one text file per license.

        The filename stem is the license id.
        """
        texts = {}
        for path in sorted(Path(directory).glob("*.txt")):
            texts[path.stem] = path.read_text(encoding="utf-8")
        if not texts:
            raise TemplateCatalogError(f"no *.txt templates under {directory}")
        return cls.from_texts(texts)


class MatchKind(Enum):
    EXACT = "exact"
    NEAR = "near"
    NO_MATCH = "no_match"
    EMPTY = "empty"


@dataclass(frozen=True)
class TemplateMatch:
    kind: MatchKind
    best_template: str | None
    similarity: float

    @property
    def license_id(self) -> str:
        """Label under the template route: exact matches name the license;
        any other present-but-unrecognized text is NOASSERTION; absent text
        is Not Found."""
        if self.kind is MatchKind.EXACT:
            assert self.best_template is not None
            return self.best_template
        if self.kind is MatchKind.EMPTY:
            return NOT_FOUND
        return NOASSERTION

    @property
    def extractable(self) -> bool:
        """True when the text is a genuinely unknown license document that
        the rule/agent extraction routes should analyze."""
        return self.kind is MatchKind.NO_MATCH


def match_template(
    text: str | None,
    catalog: TemplateCatalog,
    near_threshold: float = DEFAULT_NEAR_THRESHOLD,
) -> TemplateMatch:
    if text is None or not text.strip():
        return TemplateMatch(kind=MatchKind.EMPTY, best_template=None, similarity=0.0)
    normalized = normalize_license_text(text)
    best_id: str | None = None
    best_sim = -1.0
    for license_id in sorted(catalog.entries):
        template = catalog.entries[license_id]
        if normalized == template:
            return TemplateMatch(kind=MatchKind.EXACT, best_template=license_id, similarity=1.0)
        sim = _token_jaccard(normalized, template)
        if sim > best_sim:
            best_id, best_sim = license_id, sim
    if best_sim >= near_threshold:
        return TemplateMatch(kind=MatchKind.NEAR, best_template=best_id, similarity=best_sim)
    return TemplateMatch(kind=MatchKind.NO_MATCH, best_template=best_id, similarity=max(best_sim, 0.0))
