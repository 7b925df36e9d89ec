"""Access to the data files shipped with the package.

Everything here is replaceable data, not behavior: the term catalog, the
license texts and their ground-truth profiles, the benchmark collection
membership, the mutation cue table, and the scanner signature seed list.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .benchmark import BenchmarkEntry, CueGroup, load_cue_table
from .model import LegalTerm, LicenseProfile, load_profile, load_taxonomy
from .scanner import ApiSignature, load_signature_catalog
from .templates import TemplateCatalog


def data_path(*parts: str) -> Path:
    location = resources.files("licensechain").joinpath("data")
    for part in parts:
        location = location.joinpath(part)
    return Path(str(location))


@lru_cache(maxsize=1)
def bundled_taxonomy() -> tuple[LegalTerm, ...]:
    return tuple(load_taxonomy(data_path("legal_terms.tsv")))


@lru_cache(maxsize=1)
def bundled_cue_table() -> tuple[CueGroup, ...]:
    return tuple(load_cue_table(data_path("mutation_cues.tsv")))


@lru_cache(maxsize=1)
def bundled_signatures() -> tuple[ApiSignature, ...]:
    return tuple(load_signature_catalog(data_path("api_signatures.json")))


def license_dir() -> Path:
    return data_path("licenses")


@lru_cache(maxsize=1)
def bundled_template_catalog() -> TemplateCatalog:
    return TemplateCatalog.from_directory(license_dir())


@lru_cache(maxsize=1)
def bundled_profiles() -> dict[str, LicenseProfile]:
    profiles: dict[str, LicenseProfile] = {}
    for path in sorted(license_dir().glob("*.json")):
        profile = load_profile(path)
        profiles[profile.license_id] = profile
    return profiles


def bundled_license_text(license_id: str) -> str:
    return (license_dir() / f"{license_id}.txt").read_text(encoding="utf-8")


@lru_cache(maxsize=1)
def bundled_collections() -> dict[str, list[str]]:
    return json.loads(data_path("collections.json").read_text(encoding="utf-8"))


def bundled_collection_entries(collection: str) -> list[BenchmarkEntry]:
    ids = bundled_collections()[collection]
    profiles = bundled_profiles()
    return [
        BenchmarkEntry(
            license_id=license_id,
            text=bundled_license_text(license_id),
            profile=profiles[license_id],
        )
        for license_id in ids
    ]
