import json

import pytest

from burstloc.cpd import ChangeEvent, CusumParams, ShewhartParams, cusum_detect
from burstloc.errors import FeedClosed, NoBurstFound, NoEvents, NoPredecessor, ValidationError, WindowTooShort
from burstloc.inp_model import Junction, NetworkModel, Pipe, Reservoir, build_directed_graph
from burstloc.localizer import LocalizerConfig, detect_all_nodes, fetch_window, localize, run_pipeline
from burstloc.transient_source import BurstScenario, PressureFrame, TraceConfig, generate_trace, steady_trace, stream


def frames_for(nodes, n, start=0, value=10.0, complete=True):
    return [PressureFrame(round((start + k) * 0.2, 9), {m: value for m in nodes}, complete) for k in range(n)]


def ev(node, amp, start=0):
    return ChangeEvent(node, start, start, amp)


class TestFetchWindow:
    def test_first_batch(self):
        feed = iter(frames_for("A", 12))
        window = fetch_window(feed, 5, [])
        assert len(window) == 5

    def test_second_batch_concatenates(self):
        feed = iter(frames_for("A", 12))
        first = fetch_window(feed, 5, [])
        second = fetch_window(feed, 5, first)
        assert len(second) == 10
        assert second[:5] == first
        assert second[5].timestamp == 1.0

    def test_feed_closed(self):
        with pytest.raises(FeedClosed):
            fetch_window(iter(frames_for("A", 3)), 5, [])

    def test_incomplete_frames_skipped(self):
        frames = frames_for("A", 3) + frames_for("A", 2, start=3, complete=False) + frames_for("A", 3, start=5)
        window = fetch_window(iter(frames), 5, [])
        assert len(window) == 5
        assert all(f.complete for f in window)
        assert window[-1].timestamp == pytest.approx(1.2)


def cfg(detector=None, interval=5, nodes=("N2", "N3", "N4")):
    return LocalizerConfig(detector or CusumParams(0.3), interval, nodes)


def test_detect_all_nodes_constant_window():
    assert detect_all_nodes(frames_for(["N2", "N3", "N4"], 10), cfg()) == {}


def test_detect_all_nodes_single_step():
    window = frames_for(["N2", "N3", "N4"], 10, value=40.0)
    for f in window[6:]:
        f.readings["N4"] = 25.0
    out = detect_all_nodes(window, cfg())
    assert list(out) == ["N4"]
    s, e, a = cusum_detect(range(10), [40.0] * 6 + [25.0] * 4, CusumParams(0.3))
    assert [(x.start_index, x.end_index, x.amplitude) for x in out["N4"]] == list(zip(s.tolist(), e.tolist(), a.tolist()))


def test_detect_all_nodes_too_short():
    with pytest.raises(WindowTooShort):
        detect_all_nodes(frames_for(["N2"], 1), cfg())


def test_detect_all_nodes_parallel_same_result(model):
    frames = generate_trace(model, BurstScenario("P6"), TraceConfig(noise_std=0.05))
    window = frames[45:55]
    serial = detect_all_nodes(window, LocalizerConfig(CusumParams(0.3), 5, model.junction_ids))
    parallel = detect_all_nodes(window, LocalizerConfig(CusumParams(0.3), 5, model.junction_ids, jobs=4))
    assert serial == parallel


class TestDecisionChain:
    def test_two_node_neighbor(self, graph):
        window = frames_for(graph.nodes, 10)
        r = localize({"N3": [ev("N3", -12.0)], "N4": [ev("N4", -9.0)]}, graph, window)
        assert (r.start_node, r.end_node, r.rule) == ("N3", "N4", "two-node-neighbor")

    def test_single_predecessor(self, graph):
        window = frames_for(graph.nodes, 10)
        events = {"N3": [ev("N3", -12.0)], "N4": [ev("N4", -9.0)], "N2": [ev("N2", -8.0)]}
        r = localize(events, graph, window)
        assert (r.start_node, r.end_node, r.rule) == ("R1", "N3", "single-predecessor")

    def test_max_amp_predecessor(self, graph):
        # N2 has predecessors N3, N4 and 1
        assert graph.predecessors("N2") == {"N3", "N4", "1"}
        window = frames_for(graph.nodes, 10)
        events = {"N2": [ev("N2", -10.0)], "N3": [ev("N3", -2.0)], "N4": [ev("N4", -5.0)], "5": [ev("5", -1.0)]}
        r = localize(events, graph, window)
        assert (r.start_node, r.end_node, r.rule) == ("N4", "N2", "max-amp-predecessor")

    def test_lowest_mean_predecessor(self, graph):
        window = frames_for(graph.nodes, 10, value=40.0)
        for f in window:
            f.readings["1"] = 30.0
            f.readings["N4"] = 35.0
        events = {"N2": [ev("N2", -10.0)], "N5": [ev("N5", -3.0)], "8": [ev("8", -1.0)]}
        r = localize(events, graph, window)
        assert (r.start_node, r.end_node, r.rule) == ("1", "N2", "lowest-mean-predecessor")

    def test_two_nodes_but_other_is_upstream(self, graph):
        # N4 fires hardest, N3 is its predecessor rather than successor
        window = frames_for(graph.nodes, 10)
        r = localize({"N4": [ev("N4", -12.0)], "N3": [ev("N3", -9.0)]}, graph, window)
        assert (r.start_node, r.end_node, r.rule) == ("N3", "N4", "single-predecessor")

    def test_no_events(self, graph):
        with pytest.raises(NoEvents):
            localize({}, graph, frames_for(graph.nodes, 10))

    def test_source_fallback(self):
        m = NetworkModel([Junction("A"), Junction("B"), Junction("C")], [Reservoir("R", 50.0)],
                         [Pipe("1", "A", "B", 10, 0.2), Pipe("2", "A", "C", 10, 0.2), Pipe("3", "R", "B", 10, 0.2)])
        g = build_directed_graph(m, {"1": 1, "2": 1, "3": 1})
        window = frames_for(g.nodes, 4)
        events = {"A": [ev("A", -5.0)], "B": [ev("B", -1.0)], "C": [ev("C", -2.0)]}
        r = localize(events, g, window)
        assert (r.start_node, r.end_node, r.rule) == ("A", "C", "source-fallback")

    def test_isolated_source_raises(self):
        m = NetworkModel([Junction("A"), Junction("B")], [Reservoir("R", 50.0)], [Pipe("1", "R", "B", 10, 0.2)])
        g = build_directed_graph(m, {"1": 1})
        with pytest.raises(NoPredecessor):
            localize({"A": [ev("A", -5.0)]}, g, frames_for(g.nodes, 4))

    def test_result_json(self, graph):
        r = localize({"N3": [ev("N3", -12.0)], "N4": [ev("N4", -9.0)]}, graph, frames_for(graph.nodes, 10), 0.8)
        assert json.loads(r.to_json()) == {
            "start_node": "N3", "end_node": "N4", "rule": "two-node-neighbor",
            "decided_at_s": 0.8, "window_frames": 10,
        }


def test_pipeline_burst_on_pipe_3(model, graph):
    frames = generate_trace(model, BurstScenario("3"), TraceConfig(noise_std=0.0))
    r = run_pipeline(stream(frames), graph, LocalizerConfig(CusumParams(0.3), 5, model.junction_ids), burst_time=10.0)
    assert (r.start_node, r.end_node) == ("1", "2")
    assert graph.has_edge(r.start_node, r.end_node)
    assert r.link == "3"


def test_pipeline_decision_latency(model, graph):
    frames = generate_trace(model, BurstScenario("P2", start_time=10.0), TraceConfig(noise_std=0.0))
    r = run_pipeline(stream(frames), graph, LocalizerConfig(ShewhartParams(1.5), 5, model.junction_ids), burst_time=10.0)
    assert r.decided_at == pytest.approx(1.0, abs=1.0)


def test_pipeline_no_burst(model, graph):
    frames = steady_trace(model, TraceConfig(noise_std=0.0))
    with pytest.raises(NoBurstFound):
        run_pipeline(stream(frames), graph, LocalizerConfig(CusumParams(0.3), 5, model.junction_ids))


def test_first_batch_window_size(model, graph):
    frames = generate_trace(model, BurstScenario("P2", start_time=0.2), TraceConfig(noise_std=0.0))
    r = run_pipeline(stream(frames), graph, LocalizerConfig(CusumParams(0.3), 5, model.junction_ids))
    assert r.window_frames == 5


def test_config_validation(graph):
    with pytest.raises(ValidationError):
        LocalizerConfig(CusumParams(0.3), 1, ["N3"])
    with pytest.raises(ValidationError):
        LocalizerConfig(CusumParams(0.3), 5, [])
    with pytest.raises(ValidationError):
        run_pipeline(iter([]), graph, LocalizerConfig(CusumParams(0.3), 5, ["ghost"]))
