"""Batch-wise burst localization over a stream of pressure frames."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .cpd import ChangeEvent, CusumParams, ShewhartParams, detect_events, max_amplitude_event, strongest_event
from .errors import FeedClosed, NoBurstFound, NoEvents, NoPredecessor, ValidationError, WindowTooShort
from .inp_model import DirectedNetworkGraph
from .transient_source import PressureFrame

RULES = (
    "two-node-neighbor",
    "single-predecessor",
    "max-amp-predecessor",
    "lowest-mean-predecessor",
    "source-fallback",
)


@dataclass(frozen=True)
class LocalizerConfig:
    detector: CusumParams | ShewhartParams
    localization_interval: int
    metered_nodes: tuple[str, ...]
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "metered_nodes", tuple(self.metered_nodes))
        if self.localization_interval < 2:
            raise ValidationError("localization_interval must be >= 2")
        if not self.metered_nodes:
            raise ValidationError("at least one metered node is required")

    def check_against(self, graph: DirectedNetworkGraph):
        unknown = [n for n in self.metered_nodes if n not in graph.nodes]
        if unknown:
            raise ValidationError(f"metered nodes not in graph: {', '.join(unknown)}")


@dataclass(frozen=True)
class LocalizationResult:
    start_node: str
    end_node: str
    rule: str
    decided_at: float
    window_frames: int
    link: str | None = None

    def to_dict(self) -> dict:
        return {
            "start_node": self.start_node,
            "end_node": self.end_node,
            "rule": self.rule,
            "decided_at_s": self.decided_at,
            "window_frames": self.window_frames,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def fetch_window(feed: Iterator[PressureFrame], interval: int, previous: list[PressureFrame]) -> list[PressureFrame]:
    """Pull ``interval`` new complete frames and prepend the previous batch.

    Incomplete frames are skipped and not counted.
    """
    fresh = []
    for frame in feed:
        if frame.complete:
            fresh.append(frame)
            if len(fresh) == interval:
                return [*previous, *fresh]
    raise FeedClosed(f"feed ended after {len(fresh)} of {interval} complete frames")


def _series(window, node):
    return [f.readings[node] for f in window]


def detect_all_nodes(window: list[PressureFrame], cfg: LocalizerConfig) -> dict[str, list[ChangeEvent]]:
    if len(window) < 2:
        raise WindowTooShort(f"window has {len(window)} frame(s)")
    times = [f.timestamp for f in window]

    def run(node):
        return node, detect_events(node, times, _series(window, node), cfg.detector)

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(run, cfg.metered_nodes))
    else:
        results = [run(n) for n in cfg.metered_nodes]
    return {node: evs for node, evs in sorted(results) if evs}


def _window_mean(window, node):
    values = [f.readings[node] for f in window if node in f.readings]
    return float(np.mean(values)) if values else float("inf")


def _best_by_amplitude(candidates, events):
    """Candidate whose strongest event wins the amplitude ranking."""
    strongest = [strongest_event(events[c]) for c in candidates if c in events]
    return strongest_event(strongest).node if strongest else None


def localize(events: dict[str, list[ChangeEvent]], graph: DirectedNetworkGraph, window: list[PressureFrame],
             decided_at: float = 0.0) -> LocalizationResult:
    """Name the burst pipe from per-node change events.

    Starts at the node with the largest |amplitude| and walks the decision
    chain: detected out-neighbour when only two nodes fired, sole
    predecessor, strongest detected predecessor, lowest-mean predecessor.
    """
    if not any(events.values()):
        raise NoEvents("no node registered a change")
    events = {n: evs for n, evs in events.items() if evs}
    node, _ = max_amplitude_event(events)
    preds = sorted(graph.predecessors(node))
    succs = sorted(graph.successors(node))

    def result(start, end, rule):
        links = graph.links_between(start, end)
        return LocalizationResult(start, end, rule, decided_at, len(window), links[0] if links else None)

    if len(events) == 2:
        other = next(n for n in events if n != node)
        if other in succs:
            return result(node, other, "two-node-neighbor")
    if len(preds) == 1:
        return result(preds[0], node, "single-predecessor")
    best = _best_by_amplitude(preds, events)
    if best is not None:
        return result(best, node, "max-amp-predecessor")
    if preds:
        lowest = min(preds, key=lambda p: (_window_mean(window, p), p))
        return result(lowest, node, "lowest-mean-predecessor")

    # node is a source in the oriented graph; look downstream instead
    if not succs:
        raise NoPredecessor(f"node {node} has neither predecessors nor successors")
    best = _best_by_amplitude(succs, events)
    if best is None:
        best = min(succs, key=lambda s: (_window_mean(window, s), s))
    return result(node, best, "source-fallback")


def run_pipeline(feed: Iterator[PressureFrame], graph: DirectedNetworkGraph, cfg: LocalizerConfig,
                 burst_time: float = 0.0) -> LocalizationResult:
    """Consume ``feed`` batch by batch until a burst is localized.

    Windows tumble: each batch is the previous batch's new frames followed
    by this batch's new frames. Raises :class:`NoBurstFound` when the feed
    runs out without any node registering a change.
    """
    cfg.check_against(graph)
    feed = iter(feed)
    previous: list[PressureFrame] = []
    while True:
        try:
            window = fetch_window(feed, cfg.localization_interval, previous)
        except FeedClosed:
            raise NoBurstFound("feed ended without a detectable change") from None
        events = detect_all_nodes(window, cfg)
        if events:
            return localize(events, graph, window, decided_at=round(window[-1].timestamp - burst_time, 9))
        previous = window[len(previous):]
