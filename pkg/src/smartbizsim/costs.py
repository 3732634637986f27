"""The five-step improvement pipeline and the cost-of-security report.

Define loads the reference data, Measure ranks the risks, Analyze maps
the top-k risks onto control sections, Improve assembles the mitigation
plan, and Control runs the same scenario twice (all layers off, then the
plan's layers on), meters both traces and prices the difference.

Money is integer minor currency units throughout. No floats touch the
cost path, so every breakdown is exactly additive.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Mapping

from .controls import (
    ControlCatalog,
    CostKind,
    ImplementationPlan,
    MitigationAction,
    RiskControlMapping,
    build_plan,
    controls_for,
    default_action_library,
    default_control_catalog,
    default_mapping,
    parse_action_library,
    parse_control_catalog,
    parse_mapping,
)
from .errors import ConfigError, DmaicStepError, ParseError
from .metering import MetricSet, SectionUsage, meter, meter_sections
from .middleware import ControlLayerConfig
from .risk import (
    RiskAssessment,
    RiskCatalog,
    load_risk_catalog,
    rank,
    reassess,
    top_k,
)
from .scenario import ScenarioConfig, default_scenario, load_scenario
from .trace import Trace
from .world import build_world


@dataclass(frozen=True)
class CostRates:
    """Minor currency units charged per metered unit."""

    capital_item: int = 150_000
    operational_event: int = 5_000
    latency_ms: int = 2
    wire_byte: int = 1
    session: int = 25

    def __post_init__(self) -> None:
        for name, value in self.to_dict().items():
            if not isinstance(value, int) or value < 0:
                raise ConfigError(f"rate {name} must be a non-negative integer")

    def to_dict(self) -> dict:
        return {
            "capital_item": self.capital_item,
            "operational_event": self.operational_event,
            "latency_ms": self.latency_ms,
            "wire_byte": self.wire_byte,
            "session": self.session,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "CostRates":
        defaults = cls()
        return cls(
            capital_item=int(data.get("capital_item", defaults.capital_item)),
            operational_event=int(
                data.get("operational_event", defaults.operational_event)
            ),
            latency_ms=int(data.get("latency_ms", defaults.latency_ms)),
            wire_byte=int(data.get("wire_byte", defaults.wire_byte)),
            session=int(data.get("session", defaults.session)),
        )


@dataclass(frozen=True)
class SectionCost:
    capital: int
    operational: int
    performance: int

    @property
    def total(self) -> int:
        return self.capital + self.operational + self.performance

    def to_dict(self) -> dict:
        return {
            "capital": self.capital,
            "operational": self.operational,
            "performance": self.performance,
        }


@dataclass(frozen=True)
class CostBreakdown:
    sections: Mapping[str, SectionCost]

    @property
    def total(self) -> int:
        return sum(cost.total for cost in self.sections.values())

    def to_dict(self) -> dict:
        return {sid: cost.to_dict() for sid, cost in self.sections.items()}


@dataclass(frozen=True)
class DmaicConfig:
    """Fully resolved pipeline configuration (all references loaded)."""

    risk_catalog: RiskCatalog
    control_catalog: ControlCatalog
    mapping: RiskControlMapping
    action_library: tuple[MitigationAction, ...]
    scenario: ScenarioConfig
    rates: CostRates = field(default_factory=CostRates)
    top_k: int = 3
    seed: int | None = None
    residual_factor: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        if self.top_k < 1:
            raise ConfigError(f"top_k must be >= 1, got {self.top_k}")
        if not 0 <= self.residual_factor <= 1:
            raise ConfigError(
                f"residual_factor must be in 0..1, got {self.residual_factor}"
            )

    @property
    def effective_seed(self) -> int:
        return self.scenario.seed if self.seed is None else self.seed

    def resolved_dict(self) -> dict:
        return {
            "risk_catalog": self.risk_catalog.to_dict(),
            "control_catalog": self.control_catalog.to_dict(),
            "mapping": self.mapping.to_dict(),
            "action_library": [
                {
                    "id": a.id,
                    "control": a.control,
                    "cost_components": [
                        {"kind": c.kind.value, "magnitude": c.magnitude}
                        for c in a.cost_components
                    ],
                }
                for a in self.action_library
            ],
            "scenario": self.scenario.to_dict(),
            "rates": self.rates.to_dict(),
            "top_k": self.top_k,
            "seed": self.effective_seed,
            "residual_factor": str(self.residual_factor),
        }

    def digest(self) -> str:
        canonical = json.dumps(
            self.resolved_dict(), sort_keys=True, separators=(",", ":")
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CostReport:
    baseline: MetricSet
    secured: MetricSet
    cost_breakdown: CostBreakdown
    total_security_cost: int
    residual_ranking: RiskAssessment
    provenance: dict

    def to_dict(self) -> dict:
        return {
            "baseline": self.baseline.to_dict(),
            "secured": self.secured.to_dict(),
            "cost_breakdown": self.cost_breakdown.to_dict(),
            "total_security_cost": self.total_security_cost,
            "residual_ranking": self.residual_ranking.to_dict(),
            "provenance": dict(self.provenance),
        }

    def to_canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"


@dataclass(frozen=True)
class DmaicOutcome:
    """Everything a pipeline run produces; the report plus both traces."""

    report: CostReport
    assessment: RiskAssessment
    plan: ImplementationPlan
    baseline_trace: Trace
    secured_trace: Trace


def monetize(
    baseline: MetricSet,
    secured: MetricSet,
    plan: ImplementationPlan,
    rates: CostRates,
    section_usage: Mapping[str, SectionUsage] | None = None,
) -> CostBreakdown:
    """Price the plan: capital from the plan itself, operational and
    performance from what the secured run actually metered.

    All integer arithmetic; the per-section totals add up exactly.
    """
    usage = section_usage or {}
    sections = {}
    for section_id in sorted(plan.enabled_controls, key=_section_sort):
        capital = 0
        for action in plan.actions:
            if action.control != section_id:
                continue
            for component in action.cost_components:
                if component.kind is CostKind.CAPITAL:
                    capital += component.magnitude * rates.capital_item
        used = usage.get(section_id, SectionUsage())
        operational = used.operational_events * rates.operational_event
        performance = (
            used.extra_latency_ms * rates.latency_ms
            + used.extra_bytes * rates.wire_byte
            + used.sessions * rates.session
        )
        sections[section_id] = SectionCost(
            capital=capital, operational=operational, performance=performance
        )
    return CostBreakdown(sections=sections)


def _section_sort(section_id: str) -> tuple[int, str]:
    digits = "".join(ch for ch in section_id if ch.isdigit())
    return (int(digits) if digits else 0, section_id)


def residual_assessment(
    assessment: RiskAssessment,
    enabled: frozenset[str] | set[str],
    mapping: RiskControlMapping,
    residual_factor: Fraction = Fraction(0),
) -> RiskAssessment:
    """Scale down every risk whose mapped controls are all enabled, then
    re-rank with the same tie rules.

    Risks without a mapping entry keep their score; "eliminate" is the
    default factor of zero.
    """
    factor = Fraction(residual_factor)
    scores = {}
    for risk in assessment.risks:
        base = assessment.scores[risk.id]
        mapped = mapping.sections_for(risk.id)
        if mapped and set(mapped) <= set(enabled):
            scores[risk.id] = Fraction(base) * factor
        else:
            scores[risk.id] = base
    return reassess(assessment.risks, scores)


def _planned_hardware(scenario: ScenarioConfig, backups_per_site: int) -> tuple[int, int]:
    """(backup devices, device locks) the secured world will provision."""
    devices = [n for n in scenario.nodes if n.kind == "SmartDevice"]
    declared = {m for n in scenario.nodes for m in n.backup_pool}
    auto = sum(backups_per_site for d in devices if not d.backup_pool)
    backups = len(declared) + auto
    locks = len(devices) + auto
    return backups, locks


def default_dmaic_library(scenario: ScenarioConfig, config) -> tuple[MitigationAction, ...]:
    """Default action library sized to the scenario and control config."""
    backups, locks = _planned_hardware(scenario, config.s17.backups_per_site)
    return default_action_library(
        backup_devices=backups,
        device_locks=locks,
        encryption_latency_ms=config.s10.per_message_latency_ms,
        encryption_overhead_bytes=config.s10.overhead_bytes,
    )


def load_dmaic_config(path: str | Path | None = None) -> DmaicConfig:
    """Resolve a pipeline config document into a DmaicConfig.

    With no document at all, every reference falls back to its built-in
    default, so the pipeline runs with zero arguments.
    """
    data: dict = {}
    base = Path(".")
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ParseError(f"cannot read config {path}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ParseError("config must be a JSON object")
        base = Path(path).parent

    def read_ref(key: str) -> str | None:
        ref = data.get(key)
        if ref is None:
            return None
        candidate = Path(ref)
        if not candidate.is_absolute():
            candidate = base / candidate
        try:
            return candidate.read_text(encoding="utf-8")
        except OSError as exc:
            raise ParseError(f"cannot read {key} reference {ref!r}: {exc}") from exc

    catalog_text = read_ref("risk_catalog")
    catalog = load_risk_catalog(catalog_text)
    control_text = read_ref("control_catalog")
    control_catalog = (
        parse_control_catalog(control_text) if control_text else default_control_catalog()
    )
    mapping_text = read_ref("mapping")
    mapping = parse_mapping(mapping_text) if mapping_text else default_mapping()
    scenario_ref = data.get("scenario")
    if scenario_ref is not None:
        scenario_path = Path(scenario_ref)
        if not scenario_path.is_absolute():
            scenario_path = base / scenario_ref
        scenario = load_scenario(scenario_path)
    else:
        scenario = default_scenario()
    if "controls" in data:
        scenario = scenario.with_controls(
            ControlLayerConfig.from_dict(data["controls"])
        )
    library_text = read_ref("action_library")
    library = (
        parse_action_library(library_text)
        if library_text
        else default_dmaic_library(scenario, scenario.controls)
    )
    for action in library:
        if not control_catalog.has(action.control):
            raise ParseError(
                f"action {action.id!r} references unknown control "
                f"section {action.control!r}"
            )
    factor = data.get("residual_factor", 0)
    try:
        residual = Fraction(str(factor))
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad residual_factor {factor!r}: {exc}") from exc
    return DmaicConfig(
        risk_catalog=catalog,
        control_catalog=control_catalog,
        mapping=mapping,
        action_library=library,
        scenario=scenario,
        rates=CostRates.from_dict(data.get("rates", {})),
        top_k=int(data.get("top_k", 3)),
        seed=(None if data.get("seed") is None else int(data["seed"])),
        residual_factor=residual,
    )


def _step(name: str):
    """Annotate any escaping error with the failing pipeline step."""

    class _StepGuard:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, DmaicStepError):
                raise DmaicStepError(name, exc) from exc
            return False

    return _StepGuard()


def run_dmaic(config: DmaicConfig) -> DmaicOutcome:
    """Execute all five steps and return the report plus both traces."""
    with _step("Define"):
        catalog = config.risk_catalog
        mapping = config.mapping
        library = config.action_library
        scenario = config.scenario
        if config.seed is not None and config.seed != scenario.seed:
            scenario = replace(scenario, seed=config.seed)

    with _step("Measure"):
        assessment = rank(catalog)

    with _step("Analyze"):
        selected = top_k(assessment, config.top_k)
        for risk_id in selected:
            controls_for(
                risk_id, mapping, config.control_catalog, known_risks=catalog.ids
            )

    with _step("Improve"):
        plan = build_plan(selected, mapping, library, known_risks=catalog.ids)

    with _step("Control"):
        baseline_world = build_world(scenario, scenario.controls.all_disabled())
        baseline_world.run_until(scenario.horizon_s)
        secured_world = build_world(
            scenario, scenario.controls.with_enabled(plan.enabled_controls)
        )
        secured_world.run_until(scenario.horizon_s)

        baseline_metrics = meter(baseline_world.trace)
        secured_metrics = meter(secured_world.trace)
        usage = meter_sections(secured_world.trace)
        breakdown = monetize(
            baseline_metrics, secured_metrics, plan, config.rates, usage
        )
        residual = residual_assessment(
            assessment, plan.enabled_controls, mapping, config.residual_factor
        )
        report = CostReport(
            baseline=baseline_metrics,
            secured=secured_metrics,
            cost_breakdown=breakdown,
            total_security_cost=breakdown.total,
            residual_ranking=residual,
            provenance={
                "seed": scenario.seed,
                "config_digest": config.digest(),
            },
        )
    return DmaicOutcome(
        report=report,
        assessment=assessment,
        plan=plan,
        baseline_trace=baseline_world.trace,
        secured_trace=secured_world.trace,
    )


def dmaic_run(config: DmaicConfig) -> CostReport:
    """The pipeline's headline operation: config in, cost report out."""
    return run_dmaic(config).report
