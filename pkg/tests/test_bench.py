import csv
import io
import json
from fractions import Fraction

import pytest

from burstloc.bench import (
    CSV_COLUMNS,
    PUBLISHED_CUSUM,
    PUBLISHED_SHEWHART,
    GridCell,
    GridReport,
    ScenarioSpec,
    accuracy,
    default_scenarios,
    emit_report,
    parse_scenarios,
    run_grid,
)
from burstloc.errors import ValidationError, ZeroTotal
from burstloc.inp_model import Junction, NetworkModel, Pipe, Reservoir

QUIET = {"noise_std": 0.0}


@pytest.mark.parametrize("correct, total, pct", [(23, 25, 92), (24, 25, 96), (0, 25, 0), (18, 25, 72), (13, 25, 52)])
def test_accuracy_table_values(correct, total, pct):
    assert accuracy(correct, total) == pct


def test_accuracy_is_exact():
    assert accuracy(1, 3) == Fraction(100, 3)


def test_accuracy_errors():
    with pytest.raises(ZeroTotal):
        accuracy(0, 0)
    with pytest.raises(ValidationError):
        accuracy(5, 4)


def test_published_rows():
    assert [(s.capture_interval, s.threshold, s.localization_interval) for s in PUBLISHED_CUSUM] == [
        (0.2, 0.3, 5), (2.0, 2.0, 10), (5.0, 10.0, 10), (10.0, 13.0, 10)]
    assert [(s.capture_interval, s.threshold, s.localization_interval) for s in PUBLISHED_SHEWHART] == [
        (0.2, 1.5, 5), (2.0, 3.0, 10), (5.0, 2.0, 10), (10.0, 3.0, 10)]


def test_shipped_scenarios_keep_published_intervals():
    for detector, rows in (("cusum", PUBLISHED_CUSUM), ("shewhart", PUBLISHED_SHEWHART)):
        shipped = default_scenarios(detector)
        assert [s.name for s in shipped] == [r.name for r in rows]
        assert [(s.capture_interval, s.localization_interval) for s in shipped] == [
            (r.capture_interval, r.localization_interval) for r in rows]


def test_scenario_file_parsing():
    specs = parse_scenarios('[A]\ndetector = "cusum"\ncapture_interval = 0.2\nthreshold = 0.3\nlocalization_interval = 5\n'
                            '[B]\ndetector = "shewhart"\ncapture_interval = 2.0\nthreshold = 3\nlocalization_interval = 10\n')
    assert [s.name for s in specs] == ["A", "B"]
    with pytest.raises(ValidationError):
        parse_scenarios('[A]\ndetector = "magic"\ncapture_interval = 1\nthreshold = 1\nlocalization_interval = 5\n')
    with pytest.raises(ValidationError):
        parse_scenarios('[A]\ndetector = "cusum"\ncapture_interval = 1\nthreshold = 1\nlocalization_interval = 5\ncolour = 1\n')


def test_grid_s_c1_noise_free(model):
    report = run_grid(model, [PUBLISHED_CUSUM[0]], QUIET)
    assert report.accuracy_by_scenario()["S_C1"] >= 92


def test_grid_cardinality(model):
    report = run_grid(model, [PUBLISHED_CUSUM[0], PUBLISHED_SHEWHART[0]], QUIET)
    assert len(report.cells) == 50
    assert [c.pipe for c in report.cells[:25]] == model.pipe_ids


def test_grid_no_burst_cell_is_incorrect():
    m = NetworkModel([Junction("A"), Junction("B")], [Reservoir("R", 50.0)],
                     [Pipe("1", "R", "A", 1000.0, 0.3), Pipe("2", "A", "B", 1000.0, 0.3)])
    report = run_grid(m, [PUBLISHED_CUSUM[0]], {"noise_std": 0.0, "start_time": 100.0})
    assert {c.rule for c in report.cells} == {"no_burst_found"}
    assert not any(c.correct for c in report.cells)
    assert report.accuracy_by_scenario()["S_C1"] == 0


def test_grid_parallel_matches_serial(model):
    a = run_grid(model, [PUBLISHED_SHEWHART[0]], {"rng_seed": 3})
    b = run_grid(model, [PUBLISHED_SHEWHART[0]], {"rng_seed": 3}, jobs=4)
    assert emit_report(a) == emit_report(b)


def test_grid_rejects_bad_overrides(model):
    with pytest.raises(ValidationError):
        run_grid(model, [PUBLISHED_CUSUM[0]], {"capture_interval": 1.0})
    with pytest.raises(ValidationError):
        run_grid(model, [PUBLISHED_CUSUM[0]], {"colour": 1})
    with pytest.raises(ValidationError):
        run_grid(model, [])


def one_cell_report():
    cell = GridCell("S_C1", "P1", "P1", "R1", "N3", "single-predecessor", True, 0.8)
    return GridReport(["S_C1"], [cell])


def test_emit_csv_single_cell():
    text = emit_report(one_cell_report(), "csv")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == list(CSV_COLUMNS)
    assert rows[1] == ["S_C1", "P1", "P1", "R1", "N3", "single-predecessor", "true", "0.8"]
    assert len(rows) == 2


def test_emit_is_deterministic():
    assert emit_report(one_cell_report(), "csv") == emit_report(one_cell_report(), "csv")
    assert emit_report(one_cell_report(), "json") == emit_report(one_cell_report(), "json")


def test_emit_json_schema():
    doc = json.loads(emit_report(one_cell_report(), "json"))
    assert isinstance(doc["cells"], list) and len(doc["cells"]) == 1
    assert doc["cells"][0]["located_start"] == "R1"
    assert doc["accuracy_by_scenario"] == {"S_C1": 100.0}


def test_emit_unknown_format():
    with pytest.raises(ValueError):
        emit_report(one_cell_report(), "xml")


def test_scenario_spec_validation():
    with pytest.raises(ValidationError):
        ScenarioSpec("x", "cusum", 0.0, 1.0, 5)
