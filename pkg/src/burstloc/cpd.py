"""Two-pass CUSUM and double-threshold Shewhart change-point detectors.

Both detectors are pure functions over one pressure window; they keep no
state between calls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, NoEvents, ValidationError, WindowTooShort


@dataclass(frozen=True)
class CusumParams:
    threshold: float
    drift: float = 0.0

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValidationError("CUSUM threshold must be positive")
        if not self.drift >= 0:
            raise ValidationError("CUSUM drift must be non-negative")


@dataclass(frozen=True)
class ShewhartParams:
    # control-limit multiplier and absolute deviation floor at once
    threshold: float

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValidationError("Shewhart threshold must be positive")


@dataclass(frozen=True)
class ChangeEvent:
    node: str
    start_index: int
    end_index: int
    amplitude: float


def _as_series(time, x):
    t = np.atleast_1d(np.asarray(time, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if t.shape != x.shape:
        raise LengthMismatch(f"time has {t.size} samples but x has {x.size}")
    if x.size < 2:
        raise WindowTooShort(f"need at least 2 samples, got {x.size}")
    return t, x


def _cusum_forward(x, threshold, drift, trace=None):
    """Online pass. Returns (alarm indices, start indices).

    ``trace``, when a list, receives (gp, gn, gp_real, gn_real) per step.
    """
    alarms, starts = [], []
    gp = gn = gp_real = gn_real = 0.0
    tap = tan = 0
    for i in range(1, len(x)):
        step = x[i] - x[i - 1]
        gp = gp + step - drift
        gp_real = gp_real + step
        gn = gn - step - drift
        gn_real = gn_real - step
        if gp < 0:
            gp, gp_real, tap = 0.0, 0.0, i
        if gn < 0:
            gn, gn_real, tan = 0.0, 0.0, i
        if gp_real > threshold or gn_real > threshold:
            alarms.append(i)
            starts.append(tap if gp_real > threshold else tan)
            gp = gn = gp_real = gn_real = 0.0
        if trace is not None:
            trace.append((gp, gn, gp_real, gn_real))
    return alarms, starts


def _first_true(flags):
    # numpy argmax semantics: 0 when nothing matches
    return next((k for k, f in enumerate(flags) if f), 0)


def cusum_detect(time, x, params: CusumParams, ending=None):
    """Detect abrupt shifts with a two-pass cumulative sum.

    The forward pass raises an alarm whenever the drift-free positive or
    negative sum exceeds ``params.threshold`` and remembers where that sum
    last restarted. Change ends come from the same forward pass run on the
    reversed series. Returns ``(starts, ends, amplitudes)`` as arrays, with
    ``amplitudes = x[ends] - x[starts]``.

    ``ending`` is accepted for call compatibility and has no effect.
    """
    _, x = _as_series(time, x)
    values = x.tolist()
    alarms, starts = _cusum_forward(values, params.threshold, params.drift)
    if not starts:
        return np.array([], dtype=int), np.array([], dtype=int), np.array([], dtype=float)

    _, rev_starts = _cusum_forward(values[::-1], params.threshold, params.drift)
    n = len(values)
    ends = [n - s - 1 for s in reversed(rev_starts)]

    # keep the first alarm of every distinct start, ordered by start
    first_alarm = {}
    for a, s in zip(alarms, starts):
        first_alarm.setdefault(s, a)
    starts = sorted(first_alarm)
    alarms = [first_alarm[s] for s in starts]

    if len(starts) < len(ends):
        ends = [ends[_first_true(e >= a for e in ends)] for a in alarms]
    elif len(starts) > len(ends):
        rev_alarms = alarms[::-1]
        picks = [_first_true(e >= a for a in rev_alarms) - 1 for e in ends]
        alarms = [alarms[j] for j in picks]
        starts = [starts[j] for j in picks]

    # drop intervals whose end overlaps the next start
    overlap = [ends[k] - starts[k + 1] > 0 for k in range(len(starts) - 1)]
    if any(overlap):
        starts = [s for s, drop in zip(starts, [False, *overlap]) if not drop]
        ends = [e for e, drop in zip(ends, [*overlap, False]) if not drop]

    s_arr = np.array(starts, dtype=int)
    e_arr = np.array(ends, dtype=int)
    return s_arr, e_arr, x[e_arr] - x[s_arr]


def shewhart_detect(time, x, params: ShewhartParams):
    """Flag samples outside mean +/- threshold*std that also deviate by more
    than ``threshold`` in absolute terms.

    The standard deviation is the population one (divide by N). Returns
    ``(indices, amplitudes)`` with ``amplitudes = |x[indices] - mean|``.
    """
    _, x = _as_series(time, x)
    mean = x.mean()
    std = x.std()
    dev = np.abs(x - mean)
    hit = (dev > params.threshold * std) & (dev > params.threshold)
    idx = np.flatnonzero(hit)
    return idx, dev[idx]


def detect_events(node, time, x, params) -> list[ChangeEvent]:
    """Run whichever detector ``params`` selects and wrap the output."""
    if isinstance(params, CusumParams):
        starts, ends, amps = cusum_detect(time, x, params)
        return [ChangeEvent(node, int(s), int(e), float(a)) for s, e, a in zip(starts, ends, amps)]
    if isinstance(params, ShewhartParams):
        idx, amps = shewhart_detect(time, x, params)
        return [ChangeEvent(node, int(i), int(i), float(a)) for i, a in zip(idx, amps)]
    raise TypeError(f"unsupported detector parameters {params!r}")


def event_rank(event: ChangeEvent):
    """Sort key: larger |amplitude| first, then earlier start, then node id."""
    return (-abs(event.amplitude), event.start_index, event.node)


def strongest_event(events: list[ChangeEvent]) -> ChangeEvent:
    return min(events, key=event_rank)


def max_amplitude_event(events: dict[str, list[ChangeEvent]]) -> tuple[str, ChangeEvent]:
    candidates = [ev for evs in events.values() for ev in evs]
    if not candidates:
        raise NoEvents("no node registered a change")
    best = strongest_event(candidates)
    return best.node, best
