"""Threat classification and alert gating.

Camera frames are reduced to a single labelled detection. Two classifier
backends exist: a size heuristic over the base detector's output (livestock
boxes covering a quarter of the frame are treated as elephant-class), and a
confusion-matrix oracle that emits labels according to configured error
rates, for replaying known detector behaviour without model weights.

A detection only becomes an alert after the gate: background and
low-confidence frames are dropped, the AI confidence is fused with the
sensor-side intrusion probability into a single score, and priority rules
decide whether the alert is transmitted, logged, or suppressed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Dict, IO, List, Optional, Tuple

from .errors import ConfigError, InvalidDetectionError

CONFUSION_HEADER = "#netra-confusion v1"


class Label(IntEnum):
    """Alert-level classes. Values double as wire codes."""

    BACKGROUND = 0
    HUMAN = 1
    ANIMAL = 2
    ELEPHANT = 3
    OBSTRUCTION = 4

    @property
    def token(self) -> str:
        return self.name.lower()


class Priority(IntEnum):
    """Alert priority. Lower value sorts first; values double as wire codes."""

    CRITICAL = 0
    HIGH = 1
    MEDIUM = 2
    LOW = 3

    @property
    def token(self) -> str:
        return self.name.lower()


class DetectorLabel(Enum):
    """Classes the lightweight base detector can emit."""

    PERSON = "person"
    COW = "cow"
    HORSE = "horse"
    SHEEP = "sheep"
    NONE = "none"


LIVESTOCK = (DetectorLabel.COW, DetectorLabel.HORSE, DetectorLabel.SHEEP)


class TrueClass(Enum):
    """Ground-truth subject classes used by frames and confusion rows."""

    HUMAN = "human"
    COW = "cow"
    ELEPHANT = "elephant"
    OBSTRUCTION = "obstruction"
    BACKGROUND = "background"


# What a perfect classifier would report for each true class. A cow is not a
# threat class of its own; correctly recognized it is an Animal alert.
CANONICAL_LABEL = {
    TrueClass.HUMAN: Label.HUMAN,
    TrueClass.COW: Label.ANIMAL,
    TrueClass.ELEPHANT: Label.ELEPHANT,
    TrueClass.OBSTRUCTION: Label.OBSTRUCTION,
    TrueClass.BACKGROUND: Label.BACKGROUND,
}

BBox = Tuple[float, float, float, float]


@dataclass(frozen=True)
class FrameObject:
    true_class: TrueClass
    bbox: BBox
    detector_label: DetectorLabel
    confidence: float

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise InvalidDetectionError(
                "confidence must be in [0, 1], got %r" % self.confidence)


@dataclass(frozen=True)
class FrameDescriptor:
    """One synthesized camera frame: its size and any visible objects."""

    width: float
    height: float
    objects: Tuple[FrameObject, ...] = ()

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise InvalidDetectionError(
                "frame size must be positive, got %r x %r"
                % (self.width, self.height))
        for obj in self.objects:
            x1, y1, x2, y2 = obj.bbox
            if not (0 <= x1 < x2 <= self.width and 0 <= y1 < y2 <= self.height):
                raise InvalidDetectionError(
                    "bbox %r outside %r x %r frame"
                    % (obj.bbox, self.width, self.height))

    def primary(self) -> Optional[FrameObject]:
        """Highest-confidence object, first wins on ties."""
        if not self.objects:
            return None
        return max(self.objects, key=lambda o: o.confidence)


@dataclass(frozen=True)
class ClassifyConfig:
    tau_ai: float = 0.50        # confidence floor for trusting a detection
    tau_elephant: float = 0.25  # area ratio above which livestock reads as elephant
    ips_weight: float = 0.6     # weight of p_ai in the fused score
    tau_alert: float = 0.60     # fused-score floor for emitting an alert

    def validate(self) -> "ClassifyConfig":
        for name in ("tau_ai", "ips_weight", "tau_alert"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ConfigError("classify.%s" % name, "must be in [0, 1]")
        if not (0.0 < self.tau_elephant <= 1.0):
            raise ConfigError("classify.tau_elephant", "must be in (0, 1]")
        return self


@dataclass(frozen=True)
class Detection:
    label: Label
    p_ai: float
    bbox: Optional[BBox]
    priority: "Priority"


def area_ratio(bbox: BBox, width: float, height: float) -> float:
    """Fraction of the frame the box covers."""
    if width <= 0 or height <= 0:
        raise InvalidDetectionError(
            "frame size must be positive, got %r x %r" % (width, height))
    x1, y1, x2, y2 = bbox
    if x2 <= x1 or y2 <= y1:
        raise InvalidDetectionError("degenerate bbox %r" % (bbox,))
    return (x2 - x1) * (y2 - y1) / (width * height)


def size_heuristic_label(detector_label: DetectorLabel, ratio: float,
                         p_ai: float, cfg: ClassifyConfig) -> Label:
    """Map the base detector's class to an alert class.

    The detector has no elephant class; large livestock boxes stand in for
    one. Persons below the confidence floor are treated as background, not
    downgraded to Animal.
    """
    if detector_label is DetectorLabel.PERSON:
        return Label.HUMAN if p_ai >= cfg.tau_ai else Label.BACKGROUND
    if detector_label in LIVESTOCK:
        if ratio >= cfg.tau_elephant:
            return Label.ELEPHANT
        return Label.ANIMAL
    return Label.BACKGROUND


def priority_for(label: Label, p_ai: float) -> Priority:
    """Priority rules. Anything not explicitly elevated is Low."""
    if label in (Label.ELEPHANT, Label.HUMAN) and p_ai >= 0.7:
        return Priority.CRITICAL
    if label is Label.OBSTRUCTION and p_ai >= 0.6:
        return Priority.HIGH
    if label is Label.ANIMAL and p_ai >= 0.5:
        return Priority.MEDIUM
    return Priority.LOW


def heuristic_classify(frame: FrameDescriptor,
                       cfg: ClassifyConfig) -> Detection:
    obj = frame.primary()
    if obj is None:
        return Detection(Label.BACKGROUND, 0.0, None, Priority.LOW)
    ratio = area_ratio(obj.bbox, frame.width, frame.height)
    label = size_heuristic_label(obj.detector_label, ratio,
                                 obj.confidence, cfg)
    return Detection(label, obj.confidence, obj.bbox,
                     priority_for(label, obj.confidence))


# ---------------------------------------------------------------------------
# Confusion-matrix oracle
# ---------------------------------------------------------------------------

_ROW_ORDER = tuple(Label)  # column order in confusion files


@dataclass(frozen=True)
class ConfusionSpec:
    """Per-true-class label distributions.

    Each row maps a TrueClass to probabilities over Label in wire-code
    order (background, human, animal, elephant, obstruction). Rows sum to 1.
    """

    rows: Dict[TrueClass, Tuple[float, ...]]

    def validate(self) -> "ConfusionSpec":
        for tc in TrueClass:
            if tc not in self.rows:
                raise ConfigError("confusion.%s" % tc.value, "row missing")
            row = self.rows[tc]
            if len(row) != len(_ROW_ORDER):
                raise ConfigError(
                    "confusion.%s" % tc.value,
                    "expected %d probabilities, got %d"
                    % (len(_ROW_ORDER), len(row)))
            if any(p < 0 for p in row):
                raise ConfigError(
                    "confusion.%s" % tc.value, "negative probability")
            if abs(sum(row) - 1.0) > 1e-9:
                raise ConfigError(
                    "confusion.%s" % tc.value,
                    "row sums to %r, expected 1" % (sum(row),))
        return self

    def row(self, true_class: TrueClass) -> Tuple[float, ...]:
        return self.rows[true_class]

    @classmethod
    def identity(cls) -> "ConfusionSpec":
        rows = {}
        for tc in TrueClass:
            row = [0.0] * len(_ROW_ORDER)
            row[int(CANONICAL_LABEL[tc])] = 1.0
            rows[tc] = tuple(row)
        return cls(rows).validate()


def parse_confusion_stream(fp: IO[str]) -> ConfusionSpec:
    rows: Dict[TrueClass, Tuple[float, ...]] = {}
    header_seen = False
    for line_no, raw in enumerate(fp, start=1):
        line = raw.strip()
        if not header_seen:
            if line != CONFUSION_HEADER:
                raise ConfigError(
                    "confusion", "missing %r header" % CONFUSION_HEADER)
            header_seen = True
            continue
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise ConfigError(
                "confusion", "line %d: expected 'class: p p p p p'" % line_no)
        name, _, rest = line.partition(":")
        try:
            tc = TrueClass(name.strip())
        except ValueError:
            raise ConfigError(
                "confusion", "line %d: unknown class %r"
                % (line_no, name.strip())) from None
        if tc in rows:
            raise ConfigError(
                "confusion.%s" % tc.value, "duplicate row at line %d" % line_no)
        try:
            probs = tuple(float(tok) for tok in rest.split())
        except ValueError:
            raise ConfigError(
                "confusion.%s" % tc.value,
                "line %d: non-numeric probability" % line_no) from None
        rows[tc] = probs
    if not header_seen:
        raise ConfigError("confusion", "empty file")
    return ConfusionSpec(rows).validate()


def load_confusion(path) -> ConfusionSpec:
    with open(path, "r", encoding="utf-8") as fp:
        return parse_confusion_stream(fp)


def save_confusion(spec: ConfusionSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fp:
        fp.write(CONFUSION_HEADER + "\n")
        fp.write("# columns: %s\n" % " ".join(l.token for l in _ROW_ORDER))
        for tc in TrueClass:
            fp.write("%s: %s\n" % (
                tc.value, " ".join("%g" % p for p in spec.rows[tc])))


class OracleClassifier:
    """Replays detector behaviour from a confusion spec.

    quota mode walks each row deterministically so emitted label counts track
    the configured proportions exactly (within one emission at any prefix).
    sampled mode draws labels from the row with a seeded generator. The
    detection's confidence always comes from the frame's primary object.
    """

    def __init__(self, spec: ConfusionSpec, seed: int = 0,
                 mode: str = "quota"):
        if mode not in ("quota", "sampled"):
            raise ConfigError("classifier.mode",
                             "expected quota or sampled, got %r" % mode)
        self._spec = spec.validate()
        self._mode = mode
        self._rng = random.Random(seed)
        self._emitted: Dict[TrueClass, List[float]] = {
            tc: [0.0] * len(_ROW_ORDER) for tc in TrueClass}
        self._seen: Dict[TrueClass, int] = {tc: 0 for tc in TrueClass}

    def _quota_label(self, tc: TrueClass) -> Label:
        row = self._spec.row(tc)
        self._seen[tc] += 1
        n = self._seen[tc]
        emitted = self._emitted[tc]
        deficits = [n * p - emitted[i] for i, p in enumerate(row)]
        idx = max(range(len(row)), key=lambda i: (deficits[i], -i))
        emitted[idx] += 1.0
        return _ROW_ORDER[idx]

    def _sampled_label(self, tc: TrueClass) -> Label:
        row = self._spec.row(tc)
        u = self._rng.random()
        acc = 0.0
        for i, p in enumerate(row):
            acc += p
            if u < acc:
                return _ROW_ORDER[i]
        return _ROW_ORDER[-1]  # guard against accumulated rounding

    def classify(self, frame: FrameDescriptor,
                 cfg: Optional[ClassifyConfig] = None) -> Detection:
        obj = frame.primary()
        if obj is None:
            return Detection(Label.BACKGROUND, 0.0, None, Priority.LOW)
        if self._mode == "quota":
            label = self._quota_label(obj.true_class)
        else:
            label = self._sampled_label(obj.true_class)
        return Detection(label, obj.confidence, obj.bbox,
                         priority_for(label, obj.confidence))


# ---------------------------------------------------------------------------
# Alert gate
# ---------------------------------------------------------------------------

class GateRoute(Enum):
    TRANSMIT = "transmit"
    LOG_ONLY = "log_only"
    SUPPRESS = "suppress"


class GateReason(Enum):
    NONE = "none"
    BACKGROUND = "background"
    BELOW_CONFIDENCE = "below_confidence"
    BELOW_SCORE = "below_score"
    LOW_PRIORITY = "low_priority"


@dataclass(frozen=True)
class GateResult:
    route: GateRoute
    reason: GateReason
    ips: float
    detection: Detection


def intrusion_probability_score(p_ai: float, p_intrusion: float,
                                weight: float = 0.6) -> float:
    """Fuse AI confidence with the sensor-side intrusion probability."""
    if not (0.0 <= weight <= 1.0):
        raise ConfigError("classify.ips_weight", "must be in [0, 1]")
    return weight * p_ai + (1.0 - weight) * p_intrusion


def alert_gate(detection: Detection, p_intrusion: float,
               cfg: ClassifyConfig) -> GateResult:
    """Decide whether a detection leaves the node.

    Background and low-confidence detections are suppressed outright. The
    fused score then has to clear tau_alert. Of the survivors, Critical and
    High alerts transmit, Medium is logged locally, Low is suppressed.
    """
    ips = intrusion_probability_score(detection.p_ai, p_intrusion,
                                      cfg.ips_weight)
    if detection.label is Label.BACKGROUND:
        return GateResult(GateRoute.SUPPRESS, GateReason.BACKGROUND,
                          ips, detection)
    if detection.p_ai < cfg.tau_ai:
        return GateResult(GateRoute.SUPPRESS, GateReason.BELOW_CONFIDENCE,
                          ips, detection)
    if ips < cfg.tau_alert:
        return GateResult(GateRoute.SUPPRESS, GateReason.BELOW_SCORE,
                          ips, detection)
    if detection.priority is Priority.LOW:
        return GateResult(GateRoute.SUPPRESS, GateReason.LOW_PRIORITY,
                          ips, detection)
    route = (GateRoute.LOG_ONLY if detection.priority is Priority.MEDIUM
             else GateRoute.TRANSMIT)
    result = GateResult(route, GateReason.NONE, ips, detection)
    # Every emitted alert cleared all three gates.
    assert (result.detection.p_ai >= cfg.tau_ai
            and result.ips >= cfg.tau_alert
            and result.detection.label is not Label.BACKGROUND)
    return result
