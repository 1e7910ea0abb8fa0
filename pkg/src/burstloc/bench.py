"""Experiment grid: every pipe x every scenario, with accuracy reports."""

from __future__ import annotations

import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from fractions import Fraction
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .cpd import CusumParams, ShewhartParams
from .errors import NoBurstFound, ValidationError, ZeroTotal
from .inp_model import NetworkModel, build_directed_graph, default_flow_field
from .localizer import LocalizerConfig, run_pipeline
from .transient_source import BurstScenario, TraceConfig, generate_trace, split_pipe, stream

DETECTORS = ("cusum", "shewhart")


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    detector: str
    capture_interval: float
    threshold: float
    localization_interval: int
    drift: float = 0.0
    duration: float | None = None

    def __post_init__(self):
        if self.detector not in DETECTORS:
            raise ValidationError(f"scenario {self.name}: unknown detector {self.detector!r}")
        if not (self.capture_interval > 0 and self.threshold > 0 and self.localization_interval > 0):
            raise ValidationError(f"scenario {self.name}: values must be positive")
        if self.duration is not None and not self.duration > 0:
            raise ValidationError(f"scenario {self.name}: duration must be positive")

    def detector_params(self):
        if self.detector == "cusum":
            return CusumParams(self.threshold, self.drift)
        return ShewhartParams(self.threshold)


# Published scenario rows (capture interval s, threshold m, localization interval).
PUBLISHED_CUSUM = (
    ScenarioSpec("S_C1", "cusum", 0.2, 0.3, 5),
    ScenarioSpec("S_C2", "cusum", 2.0, 2.0, 10),
    ScenarioSpec("S_C3", "cusum", 5.0, 10.0, 10),
    ScenarioSpec("S_C4", "cusum", 10.0, 13.0, 10),
)
PUBLISHED_SHEWHART = (
    ScenarioSpec("S_S1", "shewhart", 0.2, 1.5, 5),
    ScenarioSpec("S_S2", "shewhart", 2.0, 3.0, 10),
    ScenarioSpec("S_S3", "shewhart", 5.0, 2.0, 10),
    ScenarioSpec("S_S4", "shewhart", 10.0, 3.0, 10),
)


def parse_scenarios(text: str) -> list[ScenarioSpec]:
    """Scenario tables: one ``[name]`` table per scenario, declaration order kept."""
    doc = tomllib.loads(text)
    known = {f.name for f in fields(ScenarioSpec)} - {"name"}
    specs = []
    for name, table in doc.items():
        if not isinstance(table, dict):
            raise ValidationError(f"top-level key {name!r} is not a scenario table")
        extra = set(table) - known
        if extra:
            raise ValidationError(f"scenario {name}: unknown keys {sorted(extra)}")
        specs.append(ScenarioSpec(name=name, **table))
    if not specs:
        raise ValidationError("scenario file defines no scenarios")
    return specs


def load_scenarios(path) -> list[ScenarioSpec]:
    return parse_scenarios(Path(path).read_text(encoding="utf-8"))


def default_scenarios(detector: str) -> list[ScenarioSpec]:
    """The shipped calibrated scenario file for ``detector``."""
    text = resources.files("burstloc").joinpath(f"data/scenarios_{detector}.toml").read_text(encoding="utf-8")
    return parse_scenarios(text)


def accuracy(correct: int, total: int) -> Fraction:
    """Percentage of correctly located bursts, as an exact fraction."""
    if total <= 0:
        raise ZeroTotal("accuracy needs at least one pipe")
    if not 0 <= correct <= total:
        raise ValidationError(f"correct={correct} outside [0, {total}]")
    return Fraction(100 * correct, total)


@dataclass(frozen=True)
class GridCell:
    scenario: str
    pipe: str
    expected: str
    located_start: str | None
    located_end: str | None
    rule: str
    correct: bool
    decided_at: float | None


@dataclass
class GridReport:
    scenarios: list[str]
    cells: list[GridCell] = field(default_factory=list)

    def accuracy_by_scenario(self) -> dict[str, Fraction]:
        out = {}
        for name in self.scenarios:
            mine = [c for c in self.cells if c.scenario == name]
            out[name] = accuracy(sum(c.correct for c in mine), len(mine))
        return out


def _matches(pipe_id, model, located):
    pipe = model.pipe(pipe_id)
    split, orifice = split_pipe(model, pipe_id, 0.5)
    pairs = [{pipe.start, pipe.end}] + [{p.start, p.end} for p in split.pipes if orifice in (p.start, p.end)]
    return set(located) in pairs


def run_cell(model, graph, spec: ScenarioSpec, pipe_id: str, overrides: dict) -> GridCell:
    burst_keys = {f.name for f in fields(BurstScenario)} - {"pipe"}
    trace_keys = {f.name for f in fields(TraceConfig)}
    burst = BurstScenario(pipe_id, **{k: v for k, v in overrides.items() if k in burst_keys})
    trace_args = {k: v for k, v in overrides.items() if k in trace_keys}
    trace_args["capture_interval"] = spec.capture_interval
    if spec.duration is not None:
        trace_args["duration"] = spec.duration
    cfg = TraceConfig(**trace_args)
    frames = generate_trace(model, burst, cfg)
    loc_cfg = LocalizerConfig(spec.detector_params(), spec.localization_interval, model.junction_ids)
    try:
        res = run_pipeline(stream(frames), graph, loc_cfg, burst_time=burst.start_time)
    except NoBurstFound:
        return GridCell(spec.name, pipe_id, pipe_id, None, None, "no_burst_found", False, None)
    correct = _matches(pipe_id, model, (res.start_node, res.end_node))
    return GridCell(spec.name, pipe_id, pipe_id, res.start_node, res.end_node, res.rule, correct, res.decided_at)


def run_grid(model: NetworkModel, scenarios, trace_cfg_overrides: dict | None = None,
             flows: dict | None = None, jobs: int = 1) -> GridReport:
    """Burst every pipe once per scenario and record the localization outcome.

    ``trace_cfg_overrides`` may set any :class:`TraceConfig` or
    :class:`BurstScenario` field except the capture interval, which comes
    from the scenario.
    """
    scenarios = list(scenarios)
    if not scenarios:
        raise ValidationError("no scenarios to run")
    overrides = dict(trace_cfg_overrides or {})
    unknown = set(overrides) - {f.name for f in fields(TraceConfig)} - {f.name for f in fields(BurstScenario)}
    if unknown or "pipe" in overrides or "capture_interval" in overrides:
        raise ValidationError(f"unsupported trace overrides: {sorted(unknown | ({'pipe', 'capture_interval'} & set(overrides)))}")
    graph = build_directed_graph(model, flows if flows is not None else default_flow_field(model))
    jobs_list = [(spec, p) for spec in scenarios for p in model.pipe_ids]

    def run(job):
        return run_cell(model, graph, job[0], job[1], overrides)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(run, jobs_list))
    else:
        cells = [run(j) for j in jobs_list]
    return GridReport([s.name for s in scenarios], cells)


CSV_COLUMNS = ("scenario", "pipe", "expected", "located_start", "located_end", "rule", "correct", "decided_at_s")


def _cell_row(c: GridCell):
    return {
        "scenario": c.scenario,
        "pipe": c.pipe,
        "expected": c.expected,
        "located_start": c.located_start,
        "located_end": c.located_end,
        "rule": c.rule,
        "correct": c.correct,
        "decided_at_s": c.decided_at,
    }


def emit_report(report: GridReport, fmt: str = "csv") -> str:
    """Render the report; cells keep grid order (scenario order, then pipe order)."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for c in report.cells:
            row = _cell_row(c)
            row["correct"] = "true" if c.correct else "false"
            writer.writerow(["" if row[k] is None else row[k] for k in CSV_COLUMNS])
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "cells": [_cell_row(c) for c in report.cells],
            "accuracy_by_scenario": {k: float(v) for k, v in report.accuracy_by_scenario().items()},
        }
        return json.dumps(doc, indent=2) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")
