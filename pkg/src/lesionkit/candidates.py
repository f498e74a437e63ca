"""Candidate lesion regions and the shared source-type vocabulary.

Seven candidate sources exist: four intensity planes (gray, red, green,
blue) and three pixel-cluster scorings (interiority, color-resemblance,
nested-hull). The tuple order below is the canonical one used for fusion,
reporting and deterministic tie-breaks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .regions import Region

SOURCE_ORDER = ("gray", "red", "green", "blue", "kmeans-ity", "kmeans-cra", "kmeans-hull")

PLANE_SOURCES = SOURCE_ORDER[:4]
CLUSTER_SOURCES = SOURCE_ORDER[4:]


@dataclass(frozen=True)
class CandidateRegion:
    """A region proposed by one segmentation source, with its confidence."""

    region: Region
    source: str
    confidence: float
    aux: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.source not in SOURCE_ORDER:
            raise ValueError(f"unknown candidate source: {self.source!r}")
        if self.confidence < 0:
            raise ValueError("confidence must be >= 0")
