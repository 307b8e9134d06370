"""Sensor front end: time-of-flight ranging, background calibration and
event-trace files.

A node samples a PIR motion flag and an ultrasonic echo time. Distance is
recovered from the echo round trip, the empty-track baseline comes from a
short calibration burst, and everything downstream consumes `SensorSample`
records replayed from `#netra-trace v1` files.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, List, Optional, Sequence, Tuple

from .errors import (
    CalibrationError,
    InvalidSampleError,
    TraceParseError,
)

SPEED_OF_SOUND_MS = 343.0       # m/s in air at 20 C
CALIBRATION_SAMPLES = 5         # empty-track readings averaged into d_bg
MAX_PLAUSIBLE_DISTANCE_M = 20.0  # HC-SR04 class ceiling; rejects unit mixups

TRACE_HEADER = "#netra-trace v1"

INTRUSION_CLASSES = ("human", "cow", "elephant", "obstruction")
FALSE_TRIGGER_KINDS = ("vegetation", "bird", "vehicle", "wind")
VISIBILITIES = ("clear", "faint", "hidden")


class GroundTruth(Enum):
    """What actually happened on the track. Simulation bookkeeping only."""

    TRUE_INTRUSION = "true"
    FALSE_TRIGGER = "false"
    QUIET = "quiet"


@dataclass(frozen=True)
class Truth:
    """Ground-truth annotation attached to a sample.

    Never read by the detection pipeline; only the simulator's scorer and the
    frame synthesizer look at it.
    """

    kind: GroundTruth
    subject: Optional[str] = None   # intrusion class or false-trigger kind
    visibility: str = "clear"       # camera view: clear | faint | hidden

    def __post_init__(self):
        if self.kind is GroundTruth.TRUE_INTRUSION:
            if self.subject not in INTRUSION_CLASSES:
                raise InvalidSampleError(
                    "unknown intrusion class %r" % (self.subject,))
        elif self.kind is GroundTruth.FALSE_TRIGGER:
            if self.subject not in FALSE_TRIGGER_KINDS:
                raise InvalidSampleError(
                    "unknown false-trigger kind %r" % (self.subject,))
        elif self.subject is not None:
            raise InvalidSampleError("quiet samples carry no subject")
        if self.visibility not in VISIBILITIES:
            raise InvalidSampleError(
                "unknown visibility %r" % (self.visibility,))

    def tag(self) -> str:
        if self.kind is GroundTruth.QUIET:
            return "quiet"
        if self.kind is GroundTruth.FALSE_TRIGGER:
            return "false:%s" % self.subject
        if self.visibility != "clear":
            return "true:%s:%s" % (self.subject, self.visibility)
        return "true:%s" % self.subject

    @classmethod
    def from_tag(cls, tag: str) -> "Truth":
        parts = tag.split(":")
        if parts[0] == "quiet" and len(parts) == 1:
            return cls(GroundTruth.QUIET)
        if parts[0] == "true" and len(parts) in (2, 3):
            vis = parts[2] if len(parts) == 3 else "clear"
            return cls(GroundTruth.TRUE_INTRUSION, parts[1], vis)
        if parts[0] == "false" and len(parts) == 2:
            return cls(GroundTruth.FALSE_TRIGGER, parts[1])
        raise InvalidSampleError("bad truth tag %r" % (tag,))


@dataclass(frozen=True)
class SensorSample:
    """One poll of the sensor pair at time `t_ms`."""

    t_ms: int
    pir: int
    echo_time_s: Optional[float]
    truth: Truth

    def __post_init__(self):
        if self.t_ms < 0:
            raise InvalidSampleError("t_ms must be >= 0, got %r" % self.t_ms)
        if self.pir not in (0, 1):
            raise InvalidSampleError("pir must be 0 or 1, got %r" % self.pir)
        if self.echo_time_s is not None and self.echo_time_s < 0:
            raise InvalidSampleError(
                "echo_time_s must be >= 0, got %r" % self.echo_time_s)


def tof_distance(echo_time_s: float, v_sound: float = SPEED_OF_SOUND_MS) -> float:
    """Distance in metres from an ultrasonic round-trip echo time.

    The pulse travels out and back, so the one-way distance is v * t / 2.
    """
    if echo_time_s < 0:
        raise InvalidSampleError(
            "echo time must be >= 0, got %r" % echo_time_s)
    if v_sound <= 0:
        raise InvalidSampleError(
            "speed of sound must be > 0, got %r" % v_sound)
    return v_sound * echo_time_s / 2.0


@dataclass(frozen=True)
class CalibrationState:
    """Background distance baseline for one node."""

    d_bg: float
    sample_count: int = CALIBRATION_SAMPLES

    @property
    def complete(self) -> bool:
        return self.sample_count == CALIBRATION_SAMPLES


def calibrate_background(distances: Sequence[float]) -> CalibrationState:
    """Average exactly CALIBRATION_SAMPLES empty-track readings into d_bg.

    Typical installs see a baseline of 12-15 m. Readings must be positive and
    below the sensor's plausible ceiling; anything else is a mispointed or
    misconfigured node and calibration refuses to proceed.
    """
    if len(distances) != CALIBRATION_SAMPLES:
        raise CalibrationError(
            "need exactly %d readings, got %d"
            % (CALIBRATION_SAMPLES, len(distances)))
    for d in distances:
        if not (0.0 < d <= MAX_PLAUSIBLE_DISTANCE_M):
            raise CalibrationError(
                "reading %r m outside (0, %g]" % (d, MAX_PLAUSIBLE_DISTANCE_M))
    return CalibrationState(d_bg=sum(distances) / len(distances))


# ---------------------------------------------------------------------------
# Event traces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TraceMeta:
    name: str = ""
    seed: Optional[int] = None


@dataclass
class EventTrace:
    """An ordered recording of sensor samples plus summary metadata.

    The per-kind counts are derived from the samples at construction time and
    re-checked on load, so a hand-edited file with a stale tally is rejected.
    """

    samples: List[SensorSample]
    meta: TraceMeta = field(default_factory=TraceMeta)

    def __post_init__(self):
        last = -1
        for s in self.samples:
            if s.t_ms < last:
                raise InvalidSampleError(
                    "timestamps must be non-decreasing (%d after %d)"
                    % (s.t_ms, last))
            last = s.t_ms

    def count(self, kind: GroundTruth) -> int:
        return sum(1 for s in self.samples if s.truth.kind is kind)

    @property
    def n_true(self) -> int:
        return self.count(GroundTruth.TRUE_INTRUSION)

    @property
    def n_false(self) -> int:
        return self.count(GroundTruth.FALSE_TRIGGER)

    @property
    def n_quiet(self) -> int:
        return self.count(GroundTruth.QUIET)


def format_sample(sample: SensorSample) -> str:
    echo = "-" if sample.echo_time_s is None else "%.6f" % sample.echo_time_s
    return "%d,%d,%s,%s" % (sample.t_ms, sample.pir, echo, sample.truth.tag())


def _parse_record(line: str, line_no: int) -> SensorSample:
    parts = line.split(",")
    if len(parts) != 4:
        raise TraceParseError(
            "expected 4 comma-separated fields, got %d" % len(parts), line_no)
    t_raw, pir_raw, echo_raw, tag = (p.strip() for p in parts)
    try:
        t_ms = int(t_raw)
        pir = int(pir_raw)
        echo = None if echo_raw == "-" else float(echo_raw)
        truth = Truth.from_tag(tag)
        return SensorSample(t_ms=t_ms, pir=pir, echo_time_s=echo, truth=truth)
    except (ValueError, InvalidSampleError) as exc:
        raise TraceParseError(str(exc), line_no) from exc


def _parse_meta(line: str, line_no: int) -> TraceMeta:
    name = ""
    seed: Optional[int] = None
    for chunk in line[len("#meta"):].split():
        if "=" not in chunk:
            raise TraceParseError("bad #meta entry %r" % chunk, line_no)
        key, _, value = chunk.partition("=")
        if key == "name":
            name = value
        elif key == "seed":
            try:
                seed = int(value)
            except ValueError as exc:
                raise TraceParseError("bad seed %r" % value, line_no) from exc
        elif key in ("n_true", "n_false"):
            pass  # validated against the tally after parsing
        else:
            raise TraceParseError("unknown #meta key %r" % key, line_no)
    return TraceMeta(name=name, seed=seed)


def load_trace_stream(fp: IO[str]) -> EventTrace:
    samples: List[SensorSample] = []
    meta = TraceMeta()
    declared: dict = {}
    header_seen = False
    for line_no, raw in enumerate(fp, start=1):
        line = raw.rstrip("\n")
        if not header_seen:
            if line.strip() != TRACE_HEADER:
                if line.startswith("#netra-trace"):
                    raise TraceParseError(
                        "unsupported trace version %r" % line.strip(), line_no)
                raise TraceParseError(
                    "missing %r header" % TRACE_HEADER, line_no)
            header_seen = True
            continue
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#meta"):
            meta = _parse_meta(stripped, line_no)
            for chunk in stripped[len("#meta"):].split():
                key, _, value = chunk.partition("=")
                if key in ("n_true", "n_false"):
                    declared[key] = int(value)
            continue
        if stripped.startswith("#"):
            continue
        samples.append(_parse_record(stripped, line_no))
    if not header_seen:
        raise TraceParseError("empty file, missing %r header" % TRACE_HEADER)
    trace = EventTrace(samples=samples, meta=meta)
    for key, prop in (("n_true", trace.n_true), ("n_false", trace.n_false)):
        if key in declared and declared[key] != prop:
            raise TraceParseError(
                "declared %s=%d but trace contains %d"
                % (key, declared[key], prop))
    return trace


def load_trace(path) -> EventTrace:
    with open(path, "r", encoding="utf-8") as fp:
        return load_trace_stream(fp)


def save_trace(trace: EventTrace, path,
               notes: Optional[Sequence[Tuple[int, str]]] = None) -> None:
    """Write a trace file.

    `notes` is an optional list of (sample_index, text) pairs rendered as `#`
    comments above the matching record; fixtures use it to document why each
    event was designed the way it was.
    """
    note_map: dict = {}
    for idx, text in notes or ():
        note_map.setdefault(idx, []).append(text)
    with open(path, "w", encoding="utf-8") as fp:
        fp.write(TRACE_HEADER + "\n")
        meta_bits = []
        if trace.meta.name:
            meta_bits.append("name=%s" % trace.meta.name)
        if trace.meta.seed is not None:
            meta_bits.append("seed=%d" % trace.meta.seed)
        meta_bits.append("n_true=%d" % trace.n_true)
        meta_bits.append("n_false=%d" % trace.n_false)
        fp.write("#meta %s\n" % " ".join(meta_bits))
        for idx, sample in enumerate(trace.samples):
            for text in note_map.get(idx, ()):
                fp.write("# %s\n" % text)
            fp.write(format_sample(sample) + "\n")


# ---------------------------------------------------------------------------
# Synthetic trace generation
# ---------------------------------------------------------------------------

@dataclass
class TraceSpec:
    """Knobs for the synthetic trace generator.

    pir_range_m / pir_fov_deg describe the assumed sensor geometry; they are
    recorded for the record but the generator works in distance deltas, not
    scene geometry.
    """

    n_true: int = 20
    n_false: int = 93
    n_quiet: int = CALIBRATION_SAMPLES
    true_class: str = "human"
    d_bg: float = 13.0
    interval_ms: int = 1000
    true_delta_range: Tuple[float, float] = (0.7, 3.0)
    false_false_kinds: Tuple[str, ...] = FALSE_TRIGGER_KINDS
    pir_range_m: float = 7.0
    pir_fov_deg: float = 110.0
    name: str = "generated"


def _echo_for_distance(d: float) -> float:
    return 2.0 * d / SPEED_OF_SOUND_MS


def generate_trace(spec: TraceSpec, seed: int) -> EventTrace:
    """Build a synthetic trace: a calibration burst, then interleaved events.

    Deterministic for a given (spec, seed): two calls produce identical
    samples, so saved files are byte-identical.
    """
    if spec.n_true < 0 or spec.n_false < 0:
        raise InvalidSampleError("event counts must be >= 0")
    if spec.true_class not in INTRUSION_CLASSES:
        raise InvalidSampleError(
            "unknown intrusion class %r" % spec.true_class)
    rng = random.Random(seed)
    samples: List[SensorSample] = []
    t = 0
    for _ in range(spec.n_quiet):
        samples.append(SensorSample(
            t, 0, _echo_for_distance(spec.d_bg), Truth(GroundTruth.QUIET)))
        t += spec.interval_ms

    # Interleave true and false events pseudo-randomly but reproducibly.
    kinds = ["true"] * spec.n_true + ["false"] * spec.n_false
    rng.shuffle(kinds)
    lo, hi = spec.true_delta_range
    for kind in kinds:
        if kind == "true":
            delta = rng.uniform(lo, hi)
            d = spec.d_bg - delta
            truth = Truth(GroundTruth.TRUE_INTRUSION, spec.true_class)
        else:
            false_kind = rng.choice(list(spec.false_false_kinds))
            if false_kind == "vehicle":
                # Passing vehicles nudge the reading but stay well under the
                # full-scale change.
                d = spec.d_bg - rng.uniform(0.05, 0.5)
            else:
                d = spec.d_bg + rng.uniform(0.0, 1.5)
            truth = Truth(GroundTruth.FALSE_TRIGGER, false_kind)
        samples.append(SensorSample(t, 1, _echo_for_distance(d), truth))
        t += spec.interval_ms
    meta = TraceMeta(name=spec.name, seed=seed)
    return EventTrace(samples=samples, meta=meta)
