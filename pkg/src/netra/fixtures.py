"""Checked-in validation fixtures.

Two hand-designed traces cover the pipeline end to end. `fusion_validation`
exercises the activation logic: every event's distance change is chosen so
the strict and probabilistic modes disagree in known ways across threshold
settings. `end_to_end` exercises the whole funnel: camera-confirmed humans,
faint and hidden subjects, vehicle-induced sensor passes, and bulk
vegetation noise, with known counts at every suppression stage.

Builders are deterministic; regenerating a fixture yields a byte-identical
file, and tests hold the repo copies to that.
"""

from __future__ import annotations

import random
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from .sensing import (
    EventTrace,
    GroundTruth,
    SensorSample,
    SPEED_OF_SOUND_MS,
    TraceMeta,
    Truth,
    save_trace,
)

Note = Tuple[int, str]
_EventRow = Tuple[Optional[float], Truth, str]  # echo_time_s, truth, note

CALIB_DISTANCE_M = 13.0
_CALIB_ECHO = float("%.6f" % (2.0 * CALIB_DISTANCE_M / SPEED_OF_SOUND_MS))
INTERVAL_MS = 1000


def _echo_for(distance_m: float) -> float:
    """Echo time for a target distance, pre-rounded to file precision."""
    return float("%.6f" % (2.0 * distance_m / SPEED_OF_SOUND_MS))


def _from_delta(delta_m: float) -> float:
    return _echo_for(CALIB_DISTANCE_M - delta_m)


def _assemble(name: str, shuffle_seed: int,
              events: List[_EventRow]) -> Tuple[EventTrace, List[Note]]:
    rng = random.Random(shuffle_seed)
    rng.shuffle(events)
    samples: List[SensorSample] = []
    notes: List[Note] = []
    t = 0
    for _ in range(5):
        samples.append(SensorSample(t, 0, _CALIB_ECHO,
                                    Truth(GroundTruth.QUIET)))
        t += INTERVAL_MS
    notes.append((0, "calibration burst: empty track at %.1f m"
                  % CALIB_DISTANCE_M))
    for echo, truth, note in events:
        notes.append((len(samples), note))
        samples.append(SensorSample(t, 1, echo, truth))
        t += INTERVAL_MS
    trace = EventTrace(samples, TraceMeta(name=name, seed=shuffle_seed))
    return trace, notes


def fusion_validation_trace() -> Tuple[EventTrace, List[Note]]:
    """79 PIR events against a 13.0 m background: 40 real, 39 spurious.

    Designed activation counts:
      pir_only           79 (39 false)
      binary             34 (0 false)   full-scale changes only
      probabilistic 0.65 38 (0 false)   recovers 4 borderline real events
      probabilistic 0.45 40 (2 false)   lets two vehicle passes through
      probabilistic 0.0  40 (2 false)   everything with motion + usable range
    Two real events are unrecoverable: one reads below the credible band,
    one produces no distance change at all.
    """
    events: List[_EventRow] = []
    human = Truth(GroundTruth.TRUE_INTRUSION, "human")

    for i in range(34):
        delta = round(1.6 + 0.1 * (i % 14), 2)
        events.append((
            _from_delta(delta), human,
            "real, full-scale change %.2f m: activates in both modes"
            % delta))
    for delta in (0.75, 0.9, 1.05, 1.2):
        events.append((
            _from_delta(delta), human,
            "real, borderline change %.2f m: below full scale, fused score "
            "clears 0.65" % delta))
    events.append((
        _echo_for(3.0), human,
        "real but reads 3.0 m, below the credible band: rejected in "
        "every mode"))
    events.append((
        _CALIB_ECHO, human,
        "real but no distance change: rejected in every mode"))

    for delta in (0.30, 0.45):
        events.append((
            _from_delta(delta), Truth(GroundTruth.FALSE_TRIGGER, "vehicle"),
            "vehicle pass, small change %.2f m: activates only below "
            "tau 0.52" % delta))
    for d in (3.2, 3.5, 3.8):
        events.append((
            _echo_for(d), Truth(GroundTruth.FALSE_TRIGGER, "bird"),
            "bird near the mount at %.1f m: below the credible band" % d))
    neg_deltas = (-0.4, -0.8, -0.2, 0.0, -0.6, -1.1)
    kinds = ("vegetation", "wind", "bird")
    for i in range(34):
        delta = neg_deltas[i % len(neg_deltas)]
        kind = kinds[i % len(kinds)]
        echo = _CALIB_ECHO if delta == 0.0 else _from_delta(delta)
        events.append((
            echo, Truth(GroundTruth.FALSE_TRIGGER, kind),
            "%s trigger, distance change %.1f m: no ranging evidence"
            % (kind, delta)))

    return _assemble("fusion_validation", 7, events)


def end_to_end_trace() -> Tuple[EventTrace, List[Note]]:
    """113 PIR events through the whole funnel: 20 real, 93 spurious.

    Designed stage counts in probabilistic mode at tau 0.65:
      113 PIR triggers -> 42 camera activations -> 10 confirmed threats
      -> 10 transmitted -> 10 delivered on a lossless link.
    The 32 activations that do not alert: 23 vehicle passes and 4 hidden
    subjects give empty frames, 5 faint subjects fall below the confidence
    floor. One real event never activates (reads below the credible band).
    """
    events: List[_EventRow] = []

    for i in range(10):
        delta = round(1.7 + 0.1 * i, 2)
        events.append((
            _from_delta(delta), Truth(GroundTruth.TRUE_INTRUSION, "human"),
            "real, clear view, change %.2f m: confirmed and transmitted"
            % delta))
    for i in range(5):
        delta = round(1.8 + 0.1 * i, 2)
        events.append((
            _from_delta(delta),
            Truth(GroundTruth.TRUE_INTRUSION, "human", "faint"),
            "real but faint view, change %.2f m: camera fires, confidence "
            "too low to alert" % delta))
    for delta in (2.0, 2.2, 2.4, 2.6):
        events.append((
            _from_delta(delta),
            Truth(GroundTruth.TRUE_INTRUSION, "human", "hidden"),
            "real but hidden from the camera, change %.2f m: empty frame"
            % delta))
    events.append((
        _echo_for(3.0), Truth(GroundTruth.TRUE_INTRUSION, "human"),
        "real but reads 3.0 m, below the credible band: never activates"))

    for i in range(23):
        delta = round(0.8 + 0.05 * (i % 12), 2)
        events.append((
            _from_delta(delta), Truth(GroundTruth.FALSE_TRIGGER, "vehicle"),
            "vehicle pass, change %.2f m: camera fires, empty frame" % delta))
    neg_deltas = (-0.3, -0.7, 0.0, -1.2, -0.5)
    kinds = ("vegetation", "wind", "bird", "vegetation", "wind")
    for i in range(70):
        delta = neg_deltas[i % len(neg_deltas)]
        kind = kinds[i % len(kinds)]
        echo = _CALIB_ECHO if delta == 0.0 else _from_delta(delta)
        events.append((
            echo, Truth(GroundTruth.FALSE_TRIGGER, kind),
            "%s trigger, distance change %.1f m: no ranging evidence"
            % (kind, delta)))

    return _assemble("end_to_end", 11, events)


FIXTURES: Dict[str, Callable[[], Tuple[EventTrace, List[Note]]]] = {
    "fusion_validation": fusion_validation_trace,
    "end_to_end": end_to_end_trace,
}

_IDENTITY_CONFUSION = """\
#netra-confusion v1
# columns: background human animal elephant obstruction
human: 0 1 0 0 0
cow: 0 0 1 0 0
elephant: 0 0 0 1 0
obstruction: 0 0 0 0 1
background: 1 0 0 0 0
"""

# A degraded detector: elephants mostly read as generic animals or nothing.
_DEGRADED_CONFUSION = """\
#netra-confusion v1
# columns: background human animal elephant obstruction
human: 0.05 0.95 0 0 0
cow: 0.1 0 0.9 0 0
elephant: 0.3061224489795918 0 0.5714285714285714 0.1224489795918368 0
obstruction: 0.25 0 0 0 0.75
background: 1 0 0 0 0
"""

_SCENARIOS: Dict[str, str] = {
    "fusion_validation.scn": """\
#netra-scenario v1
name = fusion-validation
trace = fusion_validation.trace
seed = 1
mode = probabilistic
platform = pi-4
node.lat = 12.34567
node.lon = 76.54321
classifier = oracle
confusion = identity.confusion
sweep.tau = 0.0 0.45 0.65
""",
    "end_to_end.scn": """\
#netra-scenario v1
name = end-to-end
trace = end_to_end.trace
seed = 1
mode = probabilistic
platform = pi-4
node.lat = 12.34567
node.lon = 76.54321
classifier = oracle
confusion = identity.confusion
""",
}


def write_fixture(name: str, directory) -> Path:
    """Write one fixture trace; returns the path."""
    try:
        builder = FIXTURES[name]
    except KeyError:
        raise KeyError("unknown fixture %r (have: %s)"
                       % (name, ", ".join(sorted(FIXTURES)))) from None
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    trace, notes = builder()
    path = directory / ("%s.trace" % name)
    save_trace(trace, path, notes)
    return path


def write_all(directory) -> List[Path]:
    """Write every fixture trace plus scenario and confusion files."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = [write_fixture(name, directory) for name in sorted(FIXTURES)]
    for fname, content in (("identity.confusion", _IDENTITY_CONFUSION),
                           ("degraded.confusion", _DEGRADED_CONFUSION)):
        path = directory / fname
        path.write_text(content, encoding="utf-8")
        written.append(path)
    for fname, content in sorted(_SCENARIOS.items()):
        path = directory / fname
        path.write_text(content, encoding="utf-8")
        written.append(path)
    return written
