"""Cloud risk catalog, 5x5 relevance/severity scoring and priority ranking.

The built-in catalog places the ten OWASP cloud risks (R1..R10) on a
five-level relevance x severity grid. Scores are the product of the two
encoded levels (1..25); ranking is score-descending with deterministic
tie-breaks, so the same catalog always yields the same ordering.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Union

from .errors import (
    DuplicateRiskId,
    EmptyCatalog,
    KOutOfRange,
    ParseError,
    UnknownLevelLabel,
)

Score = Union[int, Fraction]


class OrdinalLevel(Enum):
    """Five-step qualitative scale with a fixed 1..5 numeric encoding."""

    VERY_LOW = ("VeryLow", 1)
    LOW = ("Low", 2)
    MEDIUM = ("Medium", 3)
    HIGH = ("High", 4)
    VERY_HIGH = ("VeryHigh", 5)

    @property
    def label(self) -> str:
        return self.value[0]

    @property
    def level(self) -> int:
        return self.value[1]

    @classmethod
    def from_label(cls, label: str) -> "OrdinalLevel":
        for member in cls:
            if member.label == label:
                return member
        raise UnknownLevelLabel(f"unknown level label {label!r}")


@dataclass(frozen=True)
class Risk:
    id: str
    name: str
    relevance: OrdinalLevel
    severity: OrdinalLevel
    rationale: str = ""


@dataclass(frozen=True)
class RiskCatalog:
    risks: tuple[Risk, ...]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for risk in self.risks:
            if risk.id in seen:
                raise DuplicateRiskId(f"risk id {risk.id!r} appears more than once")
            seen.add(risk.id)

    def __len__(self) -> int:
        return len(self.risks)

    def __iter__(self):
        return iter(self.risks)

    def get(self, risk_id: str) -> Risk | None:
        for risk in self.risks:
            if risk.id == risk_id:
                return risk
        return None

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.risks)

    def to_dict(self) -> dict:
        return {
            "risks": [
                {
                    "id": r.id,
                    "name": r.name,
                    "relevance": r.relevance.label,
                    "severity": r.severity.label,
                    "rationale": r.rationale,
                }
                for r in self.risks
            ]
        }


@dataclass(frozen=True)
class RiskAssessment:
    risks: tuple[Risk, ...]
    scores: Mapping[str, Score]
    ranking: tuple[str, ...]

    def score_of(self, risk_id: str) -> Score:
        return self.scores[risk_id]

    def to_dict(self) -> dict:
        return {
            "risks": [
                {
                    "id": r.id,
                    "name": r.name,
                    "relevance": r.relevance.label,
                    "severity": r.severity.label,
                    "rationale": r.rationale,
                }
                for r in self.risks
            ],
            "scores": {rid: _score_json(s) for rid, s in self.scores.items()},
            "ranking": list(self.ranking),
        }

    def to_canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def _score_json(score: Score):
    """Integral scores serialize as ints; fractional residuals as "num/den"."""
    if isinstance(score, Fraction):
        if score.denominator == 1:
            return int(score)
        return f"{score.numerator}/{score.denominator}"
    return score


def _id_suffix(risk_id: str) -> int:
    m = re.search(r"(\d+)$", risk_id)
    return int(m.group(1)) if m else 0


def rank_key(risk: Risk, score: Score):
    """Shared sort key: score desc, relevance desc, numeric id suffix asc."""
    return (-score, -risk.relevance.level, _id_suffix(risk.id), risk.id)


def score(risk: Risk) -> int:
    """Product of the encoded relevance and severity levels (1..25)."""
    return risk.relevance.level * risk.severity.level


def rank(catalog: RiskCatalog) -> RiskAssessment:
    """Assess a catalog into a deterministic priority ranking."""
    if len(catalog) == 0:
        raise EmptyCatalog("cannot rank an empty risk catalog")
    scores = {r.id: score(r) for r in catalog}
    ordered = sorted(catalog, key=lambda r: rank_key(r, scores[r.id]))
    return RiskAssessment(
        risks=tuple(catalog),
        scores=scores,
        ranking=tuple(r.id for r in ordered),
    )


def top_k(assessment: RiskAssessment, k: int) -> list[str]:
    if not 1 <= k <= len(assessment.ranking):
        raise KOutOfRange(
            f"k={k} outside 1..{len(assessment.ranking)} for this assessment"
        )
    return list(assessment.ranking[:k])


# The built-in grid placements. Relevance first, severity second.
_DEFAULT_PLACEMENTS: tuple[tuple[str, str, str, str, str], ...] = (
    ("R1", "Accountability and Data Ownership", "VeryLow", "High",
     "The automated tasks could still be done by hand, but losing control "
     "of business data would hurt."),
    ("R2", "User Identity Federation", "VeryLow", "VeryLow",
     "A single cloud provider is in play, so federated identity barely "
     "applies."),
    ("R3", "Regulatory Compliance", "Medium", "Medium",
     "The provider lets customers pin data location, yet compliance still "
     "deserves care."),
    ("R4", "Business Continuity and Resiliency", "High", "VeryHigh",
     "Deliveries stall whenever a branch device drops out; the business "
     "must keep running."),
    ("R5", "User Privacy and Secondary Usage of Data", "VeryLow", "High",
     "Voice commands expose little beyond what manual handling already "
     "would."),
    ("R6", "Service and Data Integration", "VeryHigh", "VeryHigh",
     "Every branch-to-branch message crosses the cloud and is exposed "
     "unless encrypted end to end."),
    ("R7", "Multi Tenancy and Physical Security", "Medium", "Medium",
     "Shared provider infrastructure; location pinning limits the "
     "exposure."),
    ("R8", "Incidence Analysis and Forensic Support", "Medium", "Medium",
     "Investigations depend on provider-side logs."),
    ("R9", "Infrastructure Security", "VeryHigh", "High",
     "Devices sit in offices and trucks where theft or misuse is easy."),
    ("R10", "Non-Production Environment Exposure", "High", "Medium",
     "No constant redevelopment going on, so staging exposure stays "
     "secondary."),
)


def default_risk_catalog() -> RiskCatalog:
    """The built-in ten-risk catalog with the default grid placements."""
    return RiskCatalog(
        risks=tuple(
            Risk(
                id=rid,
                name=name,
                relevance=OrdinalLevel.from_label(rel),
                severity=OrdinalLevel.from_label(sev),
                rationale=why,
            )
            for rid, name, rel, sev, why in _DEFAULT_PLACEMENTS
        )
    )


def parse_risk_catalog(document: str) -> RiskCatalog:
    """Parse a JSON catalog document.

    Expected shape: {"risks": [{"id", "name", "relevance", "severity",
    "rationale"?}, ...]} with level labels from the five-step scale.
    """
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"risk catalog is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or "risks" not in data:
        raise ParseError('risk catalog must be an object with a "risks" list')
    entries = data["risks"]
    if not isinstance(entries, list):
        raise ParseError('"risks" must be a list')
    risks = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ParseError(f"risks[{i}] must be an object")
        for field in ("id", "name", "relevance", "severity"):
            if field not in entry:
                raise ParseError(f"risks[{i}] is missing field {field!r}")
            if not isinstance(entry[field], str):
                raise ParseError(f"risks[{i}].{field} must be a string")
        risks.append(
            Risk(
                id=entry["id"],
                name=entry["name"],
                relevance=OrdinalLevel.from_label(entry["relevance"]),
                severity=OrdinalLevel.from_label(entry["severity"]),
                rationale=str(entry.get("rationale", "")),
            )
        )
    return RiskCatalog(risks=tuple(risks))


def load_risk_catalog(document: str | None = None) -> RiskCatalog:
    """Parse a catalog document, or return the built-in default when absent."""
    if document is None:
        return default_risk_catalog()
    return parse_risk_catalog(document)


def reassess(
    risks: Iterable[Risk], scores: Mapping[str, Score]
) -> RiskAssessment:
    """Re-rank existing risks under replacement scores (same tie rules)."""
    risks = tuple(risks)
    ordered = sorted(risks, key=lambda r: rank_key(r, scores[r.id]))
    return RiskAssessment(
        risks=risks,
        scores=dict(scores),
        ranking=tuple(r.id for r in ordered),
    )
