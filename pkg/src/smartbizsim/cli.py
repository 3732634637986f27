"""Command-line entry point.

Four subcommands:

* assess   -- rank the risk catalog and print the scored listing
* simulate -- run one scenario (optionally with control layers) and
              write its trace
* dmaic    -- run the full five-step pipeline; writes the cost report
              and both traces
* report   -- re-render an existing cost report in another format

Exit codes: 0 success, 2 input/config error, 3 simulation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import costs
from .errors import ConfigError, DmaicStepError, SimulationError, SmartBizError
from .metering import meter
from .risk import RiskAssessment, load_risk_catalog, rank, top_k
from .scenario import default_scenario, load_scenario
from .world import build_world

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIMULATION = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smartbizsim",
        description="Smart-business simulator with a security cost pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_assess = sub.add_parser("assess", help="rank the risk catalog")
    p_assess.add_argument("--catalog", help="risk catalog JSON (default: built-in)")
    p_assess.add_argument("--top-k", type=int, default=None, dest="top_k",
                          help="also print the top-k ids on one line")
    p_assess.add_argument("--format", choices=("json", "csv", "table"),
                          default="table")
    p_assess.add_argument("--out", help="write output here instead of stdout")

    p_sim = sub.add_parser("simulate", help="run one scenario and write its trace")
    p_sim.add_argument("--scenario", help="scenario JSON (default: built-in)")
    p_sim.add_argument("--controls", default="none",
                       help='comma list of layers to enable: "s9,s10,s17", '
                            '"all" or "none" (default)')
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--out", default="trace.ndjson", help="trace output path")

    p_dmaic = sub.add_parser("dmaic", help="run the full pipeline")
    p_dmaic.add_argument("--config", help="pipeline config JSON (default: built-ins)")
    p_dmaic.add_argument("--catalog", help="override the risk catalog reference")
    p_dmaic.add_argument("--scenario", help="override the scenario reference")
    p_dmaic.add_argument("--seed", type=int, default=None)
    p_dmaic.add_argument("--top-k", type=int, default=None, dest="top_k")
    p_dmaic.add_argument("--format", choices=("json", "csv", "table"),
                         default="json")
    p_dmaic.add_argument("--out", default="dmaic-out", help="output directory")

    p_report = sub.add_parser("report", help="re-render a cost report")
    p_report.add_argument("--in", dest="infile", required=True,
                          help="existing report.json")
    p_report.add_argument("--format", choices=("json", "csv", "table"),
                          default="table")
    p_report.add_argument("--out", help="write output here instead of stdout")
    return parser


# -- rendering ---------------------------------------------------------------


def _table(headers: list[str], rows: list[list]) -> str:
    cells = [headers] + [[str(c) for c in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(cells[0], widths)),
        "  ".join("-" * w for w in widths),
    ]
    for row in cells[1:]:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def _ranking_rows(assessment: RiskAssessment) -> list[list]:
    by_id = {r.id: r for r in assessment.risks}
    rows = []
    for position, rid in enumerate(assessment.ranking, start=1):
        risk = by_id[rid]
        rows.append([
            position, rid, risk.name, risk.relevance.label,
            risk.severity.label, assessment.scores[rid],
        ])
    return rows


def _render_ranking(assessment: RiskAssessment, fmt: str) -> str:
    headers = ["rank", "id", "name", "relevance", "severity", "score"]
    rows = _ranking_rows(assessment)
    if fmt == "json":
        return json.dumps(assessment.to_dict(), indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        lines = [",".join(headers)]
        for row in rows:
            lines.append(",".join(_csv_cell(c) for c in row))
        return "\n".join(lines) + "\n"
    return _table(headers, rows)


def _csv_cell(value) -> str:
    text = str(value)
    if "," in text or '"' in text:
        return '"' + text.replace('"', '""') + '"'
    return text


def _report_rows(report_dict: dict) -> list[list]:
    """Flatten a report to key/value rows so every format carries the
    same numbers."""
    rows: list[list] = []

    def walk(prefix: str, value) -> None:
        if isinstance(value, dict):
            for key in sorted(value):
                walk(f"{prefix}.{key}" if prefix else key, value[key])
        elif isinstance(value, list):
            rows.append([prefix, " ".join(str(v) for v in value)])
        else:
            rows.append([prefix, value])

    walk("", report_dict)
    return rows


def _render_report(report_dict: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report_dict, sort_keys=True, separators=(",", ":")) + "\n"
    rows = _report_rows(report_dict)
    if fmt == "csv":
        lines = ["key,value"] + [f"{_csv_cell(k)},{_csv_cell(v)}" for k, v in rows]
        return "\n".join(lines) + "\n"
    return _table(["key", "value"], rows)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- subcommands ---------------------------------------------------------------


def _cmd_assess(args: argparse.Namespace) -> int:
    document = None
    if args.catalog:
        try:
            document = Path(args.catalog).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read catalog {args.catalog}: {exc}") from exc
    assessment = rank(load_risk_catalog(document))
    output = _render_ranking(assessment, args.format)
    if args.top_k is not None:
        output += "top-%d: %s\n" % (args.top_k, ", ".join(top_k(assessment, args.top_k)))
    _emit(output, args.out)
    return EXIT_OK


def _parse_controls_flag(flag: str) -> frozenset[str]:
    flag = flag.strip().lower()
    if flag in ("none", ""):
        return frozenset()
    if flag == "all":
        return frozenset({"S9", "S10", "S17"})
    sections = set()
    for part in flag.split(","):
        part = part.strip().upper()
        if part not in ("S9", "S10", "S17"):
            raise ConfigError(f"unknown control layer {part!r} (use s9,s10,s17)")
        sections.add(part)
    return frozenset(sections)


def _cmd_simulate(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario) if args.scenario else default_scenario()
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    enabled = _parse_controls_flag(args.controls)
    world = build_world(scenario, scenario.controls.with_enabled(enabled))
    world.run_until(scenario.horizon_s)
    Path(args.out).write_text(world.trace.to_ndjson(), encoding="utf-8")
    metrics = meter(world.trace)
    print(
        f"sent={metrics.messages_sent} delivered={metrics.messages_delivered} "
        f"lost={metrics.messages_lost}"
    )
    print(f"trace written to {args.out}")
    return EXIT_OK


def _cmd_dmaic(args: argparse.Namespace) -> int:
    # Reference resolution is the pipeline's Define step: any unreadable
    # or malformed input is reported under that name.
    try:
        config = costs.load_dmaic_config(args.config)
        overrides = {}
        if args.catalog:
            try:
                text = Path(args.catalog).read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(
                    f"cannot read catalog {args.catalog}: {exc}"
                ) from exc
            overrides["risk_catalog"] = load_risk_catalog(text)
        if args.scenario:
            overrides["scenario"] = load_scenario(args.scenario)
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.top_k is not None:
            overrides["top_k"] = args.top_k
        if overrides:
            config = replace(config, **overrides)
    except SmartBizError as exc:
        raise DmaicStepError("Define", exc) from exc

    outcome = costs.run_dmaic(config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_dict = outcome.report.to_dict()
    suffix = {"json": "json", "csv": "csv", "table": "txt"}[args.format]
    report_path = out_dir / f"report.{suffix}"
    if args.format == "json":
        report_path.write_text(outcome.report.to_canonical_json(), encoding="utf-8")
    else:
        report_path.write_text(_render_report(report_dict, args.format), encoding="utf-8")
    (out_dir / "trace_baseline.ndjson").write_text(
        outcome.baseline_trace.to_ndjson(), encoding="utf-8"
    )
    (out_dir / "trace_secured.ndjson").write_text(
        outcome.secured_trace.to_ndjson(), encoding="utf-8"
    )
    print(f"total_security_cost={outcome.report.total_security_cost}")
    print(f"report written to {report_path}")
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    try:
        report_dict = json.loads(Path(args.infile).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read report {args.infile}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"report is not valid JSON: {exc}") from exc
    _emit(_render_report(report_dict, args.format), args.out)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "assess": _cmd_assess,
        "simulate": _cmd_simulate,
        "dmaic": _cmd_dmaic,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except DmaicStepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc.cause, ConfigError):
            return EXIT_CONFIG
        return EXIT_SIMULATION
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    except SmartBizError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION


if __name__ == "__main__":
    sys.exit(main())
