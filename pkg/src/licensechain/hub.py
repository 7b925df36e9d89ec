"""Model-hub metadata retrieval, offline and live.

Both the fixture store (a directory of JSON records keyed by artifact id)
and the HTTPS client normalize into the same HubMetadata shape, so the rest
of the pipeline never knows which mode it is running in. Live calls retry
with bounded exponential backoff; persistent failures surface as
Unverifiable rather than silently dropping a candidate.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Protocol, Sequence

import requests

DEFAULT_HUB_TOKEN_ENV = "LICENSECHAIN_HUB_TOKEN"


class ArtifactKind(str, Enum):
    MODEL = "model"
    DATASET = "dataset"


@dataclass(frozen=True)
class HubMetadata:
    artifact_id: str
    kind: ArtifactKind = ArtifactKind.MODEL
    license_id: str | None = None  # None means no license declared at all
    base_model_ids: tuple[str, ...] = ()
    dataset_ids: tuple[str, ...] = ()
    owner_tags: tuple[str, ...] = ()
    task_category: str | None = None
    download_count: int | None = None


class HubNotFound(LookupError):
    def __init__(self, artifact_id: str):
        self.artifact_id = artifact_id
        super().__init__(f"artifact not found on hub: {artifact_id}")


class HubUnavailable(RuntimeError):
    """Transport failure that survived the retry budget."""


class HubFetcher(Protocol):
    def fetch(self, artifact_id: str, kind: ArtifactKind = ArtifactKind.MODEL) -> HubMetadata: ...

    def exists(self, artifact_id: str, kind: ArtifactKind = ArtifactKind.MODEL) -> bool: ...


def _dedup(items: Iterable[str]) -> tuple[str, ...]:
    seen: list[str] = []
    for item in items:
        if item and item not in seen:
            seen.append(item)
    return tuple(seen)


def metadata_from_record(record: dict, artifact_id: str) -> HubMetadata:
    license_raw = record.get("license")
    return HubMetadata(
        artifact_id=record.get("id", artifact_id),
        kind=ArtifactKind(record.get("kind", "model")),
        license_id=license_raw if license_raw else None,
        base_model_ids=_dedup(record.get("base_models", ())),
        dataset_ids=_dedup(record.get("datasets", ())),
        owner_tags=_dedup(record.get("owner_tags", ())),
        task_category=record.get("task_category") or None,
        download_count=record.get("downloads"),
    )


@dataclass
class FixtureHub:
    """Reads records from <root>/<artifact id>.json; slashes in ids map to
    subdirectories."""

    root: Path

    def __post_init__(self):
        self.root = Path(self.root)

    def _path(self, artifact_id: str) -> Path:
        return self.root / f"{artifact_id}.json"

    def exists(self, artifact_id: str, kind: ArtifactKind = ArtifactKind.MODEL) -> bool:
        return self._path(artifact_id).exists()

    def fetch(self, artifact_id: str, kind: ArtifactKind = ArtifactKind.MODEL) -> HubMetadata:
        path = self._path(artifact_id)
        if not path.exists():
            raise HubNotFound(artifact_id)
        record = json.loads(path.read_text(encoding="utf-8"))
        return metadata_from_record(record, artifact_id)


@dataclass
class HttpHub:
    """Client for a hub REST API exposing /api/models/<id> and
    /api/datasets/<id>. Asserts only on the metadata fields it names;
    retries 429/5xx and transport errors with exponential backoff."""

    base_url: str
    token_env: str = DEFAULT_HUB_TOKEN_ENV
    timeout: float = 30.0
    max_retries: int = 2
    backoff_base: float = 0.5

    def _get(self, url: str) -> requests.Response:
        headers = {}
        token = os.environ.get(self.token_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            try:
                response = requests.get(url, headers=headers, timeout=self.timeout)
                if response.status_code == 429 or response.status_code >= 500:
                    last_error = HubUnavailable(f"HTTP {response.status_code} from {url}")
                else:
                    return response
            except requests.RequestException as exc:
                last_error = exc
            if attempt < self.max_retries:
                time.sleep(min(self.backoff_base * 2**attempt, 8.0))
        raise HubUnavailable(f"{url} failed after {self.max_retries + 1} attempts: {last_error}")

    def _url(self, artifact_id: str, kind: ArtifactKind) -> str:
        prefix = "models" if kind is ArtifactKind.MODEL else "datasets"
        return f"{self.base_url.rstrip('/')}/api/{prefix}/{artifact_id}"

    def exists(self, artifact_id: str, kind: ArtifactKind = ArtifactKind.MODEL) -> bool:
        response = self._get(self._url(artifact_id, kind))
        if response.status_code == 404:
            return False
        response.raise_for_status()
        return True

    def fetch(self, artifact_id: str, kind: ArtifactKind = ArtifactKind.MODEL) -> HubMetadata:
        response = self._get(self._url(artifact_id, kind))
        if response.status_code == 404:
            raise HubNotFound(artifact_id)
        response.raise_for_status()
        body = response.json()
        card = body.get("cardData") or {}
        license_raw = card.get("license") or body.get("license")
        if isinstance(license_raw, list):
            license_raw = license_raw[0] if license_raw else None
        base = card.get("base_model") or []
        if isinstance(base, str):
            base = [base]
        datasets = card.get("datasets") or []
        if isinstance(datasets, str):
            datasets = [datasets]
        return metadata_from_record(
            {
                "id": body.get("id", artifact_id),
                "kind": kind.value,
                "license": license_raw,
                "base_models": base,
                "datasets": datasets,
                "owner_tags": body.get("tags", []),
                "task_category": body.get("pipeline_tag"),
                "downloads": body.get("downloads"),
            },
            artifact_id,
        )


@dataclass
class CachingHub:
    """Per-run cache in front of any fetcher; repeated ids hit the hub once."""

    inner: HubFetcher
    _metadata: dict[tuple[str, ArtifactKind], HubMetadata] = field(default_factory=dict)
    _existence: dict[tuple[str, ArtifactKind], bool] = field(default_factory=dict)
    fetch_count: int = 0

    def fetch(self, artifact_id: str, kind: ArtifactKind = ArtifactKind.MODEL) -> HubMetadata:
        key = (artifact_id, kind)
        if key not in self._metadata:
            self.fetch_count += 1
            self._metadata[key] = self.inner.fetch(artifact_id, kind)
        return self._metadata[key]

    def exists(self, artifact_id: str, kind: ArtifactKind = ArtifactKind.MODEL) -> bool:
        key = (artifact_id, kind)
        if key not in self._existence:
            self._existence[key] = self.inner.exists(artifact_id, kind)
        return self._existence[key]


@dataclass(frozen=True)
class IdentifierPartition:
    valid: tuple[str, ...]
    invalid: tuple[str, ...]
    unverifiable: tuple[str, ...]


def validate_identifiers(
    candidates: Sequence[str],
    hub: HubFetcher,
    kind: ArtifactKind = ArtifactKind.MODEL,
) -> IdentifierPartition:
    """Partition candidate identifiers by hub existence.

    Duplicates collapse before querying; transport failures mark the
    candidate Unverifiable instead of dropping it.
    """
    valid: list[str] = []
    invalid: list[str] = []
    unverifiable: list[str] = []
    checked: dict[str, str] = {}
    for candidate in candidates:
        if candidate in checked:
            continue
        try:
            bucket = "valid" if hub.exists(candidate, kind) else "invalid"
        except HubUnavailable:
            bucket = "unverifiable"
        checked[candidate] = bucket
        {"valid": valid, "invalid": invalid, "unverifiable": unverifiable}[bucket].append(candidate)
    return IdentifierPartition(tuple(valid), tuple(invalid), tuple(unverifiable))


# ---------------------------------------------------------------------------
# Source search providers: where scanner corpora come from.
# ---------------------------------------------------------------------------


class SearchProvider(Protocol):
    def iter_sources(self) -> Iterator[tuple[str, str]]:
        """Yields (relative path, source text) pairs."""


@dataclass
class LocalDirectoryProvider:
    root: Path

    def __post_init__(self):
        self.root = Path(self.root)

    def iter_sources(self) -> Iterator[tuple[str, str]]:
        for path in sorted(self.root.rglob("*.py")):
            yield str(path.relative_to(self.root)), path.read_text(encoding="utf-8")


@dataclass
class HttpSearchProvider:
    """Queries a code-search endpoint: GET <base>/search?q=... returning
    {"results": [{"repository": ..., "path": ..., "content": ...}]}."""

    base_url: str
    query: str
    timeout: float = 30.0
    max_results: int = 100

    def iter_sources(self) -> Iterator[tuple[str, str]]:
        response = requests.get(
            f"{self.base_url.rstrip('/')}/search",
            params={"q": self.query, "limit": self.max_results},
            timeout=self.timeout,
        )
        response.raise_for_status()
        for result in response.json().get("results", []):
            name = f"{result.get('repository', '?')}/{result.get('path', '?')}"
            yield name, result.get("content", "")
