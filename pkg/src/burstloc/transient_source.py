"""Synthetic burst transients, trace CSV replay, and paced frame delivery.

The generator is a wavefront surrogate rather than a water-hammer solver: a
burst at distance d from node n reaches it after d / wave_speed seconds and
pulls its pressure down towards ``P0(n) - magnitude * exp(-attenuation * d)``
with a first-order settling curve.
"""

from __future__ import annotations

import csv
import io
import math
import queue
import threading
import time as _time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import (
    MalformedRow,
    NonMonotoneTime,
    PositionOutOfRange,
    UnknownNode,
    ValidationError,
)
from .inp_model import Junction, NetworkModel

DEFAULT_WAVE_SPEED = 1200.0
DEFAULT_GRADIENT = 0.005
PRESSURE_FLOOR = 10.0
SPACING_TOL = 1e-9


@dataclass(frozen=True)
class BurstScenario:
    pipe: str
    position: float = 0.5
    start_time: float = 10.0
    magnitude: float = 15.0
    wave_speed: float = DEFAULT_WAVE_SPEED

    def validate(self, model: NetworkModel):
        model.pipe(self.pipe)
        if not 0 < self.position < 1:
            raise PositionOutOfRange(f"burst position {self.position} outside (0, 1)")
        if self.start_time < 0:
            raise ValidationError("burst start_time must be >= 0")
        if not self.magnitude > 0:
            raise ValidationError("burst magnitude must be positive")
        if not self.wave_speed > 0:
            raise ValidationError("wave_speed must be positive")


@dataclass(frozen=True)
class TraceConfig:
    capture_interval: float = 0.2
    duration: float = 40.0
    noise_std: float = 0.01
    attenuation: float = 5e-4
    settle_time: float = 2.0
    rng_seed: int = 0

    def __post_init__(self):
        if not self.capture_interval > 0:
            raise ValidationError("capture_interval must be positive")
        if not self.duration > self.capture_interval:
            raise ValidationError("duration must exceed capture_interval")
        if not self.noise_std >= 0:
            raise ValidationError("noise_std must be >= 0")
        if not self.attenuation >= 0:
            raise ValidationError("attenuation must be >= 0")
        if not self.settle_time > 0:
            raise ValidationError("settle_time must be positive")


@dataclass(frozen=True)
class PressureFrame:
    timestamp: float
    readings: dict[str, float] = field(hash=False)
    complete: bool = True


def split_pipe(model: NetworkModel, pipe: str, position: float) -> tuple[NetworkModel, str]:
    """Replace ``pipe`` by two segments joined at a new orifice junction."""
    original = model.pipe(pipe)
    if not 0 < position < 1:
        raise PositionOutOfRange(f"burst position {position} outside (0, 1)")
    orifice = f"{pipe}_burst"
    while model.has_node(orifice):
        orifice += "_"
    # the shorter segment is the exact remainder of the longer one, so the
    # two lengths always sum back to the original length
    if position >= 0.5:
        first_len = position * original.length
        second_len = original.length - first_len
    else:
        second_len = (1.0 - position) * original.length
        first_len = original.length - second_len
    first = replace(original, id=f"{pipe}_a", end=orifice, length=first_len)
    second = replace(original, id=f"{pipe}_b", start=orifice, length=second_len)
    pipes = []
    for p in model.pipes:
        pipes.extend((first, second) if p.id == pipe else (p,))
    junctions = (*model.junctions, Junction(orifice, 0.0, 0.0))
    return NetworkModel(junctions, model.reservoirs, pipes), orifice


def steady_pressures(model: NetworkModel, gradient: float = DEFAULT_GRADIENT) -> dict[str, float]:
    """Pre-burst head at every node (surrogate for a steady-state solve)."""
    nearest = {}  # node -> (distance, -head) of the closest reservoir
    for r in model.reservoirs:
        for node, d in model.distances_from(r.id).items():
            nearest[node] = min(nearest.get(node, (math.inf, 0.0)), (d, -r.head))
    out = {}
    for node in model.node_ids:
        res = model.reservoir(node)
        if res is not None:
            out[node] = res.head
        elif node in nearest:
            d, neg_head = nearest[node]
            out[node] = max(-neg_head - gradient * d, PRESSURE_FLOOR)
        else:
            out[node] = PRESSURE_FLOOR
    return out


def steady_pressure(model: NetworkModel, node: str, gradient: float = DEFAULT_GRADIENT) -> float:
    if not model.has_node(node):
        raise UnknownNode(node)
    return steady_pressures(model, gradient)[node]


def frame_times(cfg: TraceConfig) -> np.ndarray:
    count = math.floor(cfg.duration / cfg.capture_interval + SPACING_TOL) + 1
    return np.round(np.arange(count) * cfg.capture_interval, 9)


def generate_trace(model: NetworkModel, scenario: BurstScenario, cfg: TraceConfig) -> list[PressureFrame]:
    """Pressure frames for every node of ``model`` while ``scenario`` unfolds.

    The orifice node created by the split is not reported.
    """
    scenario.validate(model)
    split, orifice = split_pipe(model, scenario.pipe, scenario.position)
    dist = split.distances_from(orifice)
    nodes = model.node_ids
    base = steady_pressures(model)

    times = frame_times(cfg)
    p0 = np.array([base[n] for n in nodes])
    d = np.array([dist.get(n, math.inf) for n in nodes])
    drop = scenario.magnitude * np.exp(-cfg.attenuation * d)
    arrival = scenario.start_time + d / scenario.wave_speed

    elapsed = times[:, None] - arrival[None, :]
    reached = elapsed >= 0
    shape = np.where(reached, 1.0 - np.exp(-np.where(reached, elapsed, 0.0) / cfg.settle_time), 0.0)
    pressure = p0[None, :] - drop[None, :] * shape
    if cfg.noise_std > 0:
        rng = np.random.default_rng(cfg.rng_seed)
        pressure = pressure + rng.normal(0.0, cfg.noise_std, size=pressure.shape)

    return [
        PressureFrame(float(t), dict(zip(nodes, row.tolist())), True)
        for t, row in zip(times.tolist(), pressure)
    ]


def steady_trace(model: NetworkModel, cfg: TraceConfig) -> list[PressureFrame]:
    """Frames with no burst at all (steady state plus noise)."""
    nodes = model.node_ids
    base = steady_pressures(model)
    times = frame_times(cfg)
    pressure = np.tile([base[n] for n in nodes], (len(times), 1))
    if cfg.noise_std > 0:
        rng = np.random.default_rng(cfg.rng_seed)
        pressure = pressure + rng.normal(0.0, cfg.noise_std, size=pressure.shape)
    return [PressureFrame(float(t), dict(zip(nodes, row.tolist())), True) for t, row in zip(times.tolist(), pressure)]


def mark_completeness(frames: Iterable[PressureFrame], metered: Iterable[str]) -> list[PressureFrame]:
    """Recompute ``complete`` against the given set of metered nodes."""
    metered = list(metered)
    return [replace(f, complete=all(n in f.readings for n in metered)) for f in frames]


# --- trace CSV ------------------------------------------------------------


def write_trace_csv(frames: list[PressureFrame], nodes: list[str], path=None) -> str:
    """Serialize frames; missing readings become empty cells.

    Returns the document; also writes it to ``path`` when given.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["time", *nodes])
    for f in frames:
        writer.writerow([repr(f.timestamp), *(repr(f.readings[n]) if n in f.readings else "" for n in nodes)])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="")
    return text


def parse_trace_csv(text: str) -> tuple[list[str], list[PressureFrame]]:
    """Parse a trace document. Returns (node ids in column order, frames)."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if not header or header[0].strip() != "time":
        raise MalformedRow("header must start with 'time'", 1)
    nodes = [h.strip() for h in header[1:]]
    frames = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise MalformedRow(f"expected {len(header)} columns, got {len(row)}", lineno)
        try:
            t = float(row[0])
            readings = {n: float(cell) for n, cell in zip(nodes, row[1:]) if cell.strip() != ""}
        except ValueError:
            raise MalformedRow("non-numeric cell", lineno) from None
        frames.append(PressureFrame(t, readings, len(readings) == len(nodes)))
    _check_times([f.timestamp for f in frames])
    return nodes, frames


def _check_times(times):
    if len(times) < 2:
        return
    steps = np.diff(times)
    if np.any(steps <= 0):
        k = int(np.argmax(steps <= 0)) + 1
        raise NonMonotoneTime(f"timestamp {times[k]} does not follow {times[k - 1]}")
    if np.any(np.abs(steps - steps[0]) > SPACING_TOL):
        raise NonMonotoneTime("timestamps are not uniformly spaced")


def load_replay(path) -> list[PressureFrame]:
    return parse_trace_csv(Path(path).read_text(encoding="utf-8"))[1]


# --- delivery -------------------------------------------------------------

_DONE = object()


def stream(frames: list[PressureFrame], pacing: str = "fast") -> Iterator[PressureFrame]:
    """Yield frames in order.

    ``pacing="realtime"`` releases frame k no earlier than its timestamp
    offset from the first frame, through a producer thread and a queue;
    ``"fast"`` yields immediately.
    """
    if pacing not in ("fast", "realtime"):
        raise ValueError(f"unknown pacing {pacing!r}")
    if not frames:
        return iter(())
    if pacing == "fast":
        return iter(list(frames))
    return _paced(list(frames))


def _paced(frames):
    channel: queue.Queue = queue.Queue()
    t0 = frames[0].timestamp

    def produce():
        start = _time.monotonic()
        for f in frames:
            delay = (f.timestamp - t0) - (_time.monotonic() - start)
            if delay > 0:
                _time.sleep(delay)
            channel.put(f)
        channel.put(_DONE)

    worker = threading.Thread(target=produce, name="frame-producer", daemon=True)
    worker.start()
    while True:
        item = channel.get()
        if item is _DONE:
            break
        yield item
    worker.join()
