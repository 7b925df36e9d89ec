"""Pairwise license compatibility via the 3x3 attitude matrix.

A downstream component must not be more permissive than its upstream
dependency. Per term, compatibility of (upstream attitude, downstream
attitude) is a fixed table: an upstream "can" permits any downstream
stance; "cannot" and "must" only tolerate a downstream that matches them
or is stricter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .model import Attitude, LegalTerm, LicenseProfile

# The five compatible (upstream, downstream) cells; the other four conflict.
COMPATIBLE_PAIRS = frozenset(
    {
        (Attitude.CAN, Attitude.CAN),
        (Attitude.CAN, Attitude.CANNOT),
        (Attitude.CAN, Attitude.MUST),
        (Attitude.CANNOT, Attitude.CANNOT),
        (Attitude.MUST, Attitude.MUST),
    }
)


def attitude_compatible(upstream: Attitude, downstream: Attitude) -> bool:
    return (upstream, downstream) in COMPATIBLE_PAIRS


@dataclass(frozen=True)
class CompatibilityVerdict:
    upstream_attitude: Attitude
    downstream_attitude: Attitude

    @property
    def compatible(self) -> bool:
        return attitude_compatible(self.upstream_attitude, self.downstream_attitude)


@dataclass(frozen=True)
class TermConflict:
    """One term whose attitudes fall in an incompatible matrix cell."""

    term: str
    upstream_attitude: Attitude
    downstream_attitude: Attitude
    upstream_evidence: tuple[str, ...] = ()
    downstream_evidence: tuple[str, ...] = ()

    def to_document(self) -> dict:
        return {
            "term": self.term,
            "upstream_attitude": self.upstream_attitude.value,
            "downstream_attitude": self.downstream_attitude.value,
            "upstream_evidence": list(self.upstream_evidence),
            "downstream_evidence": list(self.downstream_evidence),
        }


class IncompleteProfileError(ValueError):
    """check_pair requires both profiles completed over the taxonomy."""

    def __init__(self, license_id: str, missing: Sequence[str]):
        self.license_id = license_id
        self.missing = list(missing)
        super().__init__(f"profile {license_id!r} is missing terms: {', '.join(self.missing)}")


def check_pair(
    downstream: LicenseProfile,
    upstream: LicenseProfile,
    taxonomy: Sequence[LegalTerm],
) -> list[TermConflict]:
    """Compare one downstream/upstream profile pair term by term.

    Returns one TermConflict per incompatible term, in taxonomy order;
    an empty list means the pair is compatible. Direction matters: the
    matrix is asymmetric and this function never symmetrizes.
    """
    for profile in (downstream, upstream):
        missing = [t.id for t in taxonomy if t.id not in profile.assignments]
        if missing:
            raise IncompleteProfileError(profile.license_id, missing)
    conflicts: list[TermConflict] = []
    for term in taxonomy:
        up = upstream.assignments[term.id]
        down = downstream.assignments[term.id]
        if not attitude_compatible(up.attitude, down.attitude):
            conflicts.append(
                TermConflict(
                    term=term.id,
                    upstream_attitude=up.attitude,
                    downstream_attitude=down.attitude,
                    upstream_evidence=up.evidence,
                    downstream_evidence=down.evidence,
                )
            )
    return conflicts
