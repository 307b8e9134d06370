"""Discrete-event replay of the full detection pipeline.

A scenario names a trace (or a generator spec), the pipeline mode, and the
configuration of every stage. `run` replays the trace sample by sample:
fusion decides camera activations, the classifier labels synthesized frames,
the alert gate routes them, the transmitter and receiver move frames over
the modelled link, and everything is tallied into a deterministic
MetricsReport. `sweep` re-runs the same scenario across camera thresholds.
"""

from __future__ import annotations

import dataclasses
import json
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import energy as energy_mod
from .alerting import (
    Alert,
    LinkModel,
    Receiver,
    RetryPolicy,
    Transmitter,
    TxState,
    make_alert_id,
)
from .classify import (
    ClassifyConfig,
    ConfusionSpec,
    Detection,
    DetectorLabel,
    FrameDescriptor,
    FrameObject,
    GateRoute,
    OracleClassifier,
    TrueClass,
    alert_gate,
    heuristic_classify,
    load_confusion,
)
from .energy import (
    EnergyLedger,
    PlatformProfile,
    PLATFORMS,
    RunTotals,
    camera_energy_wh,
    run_ledger,
    savings_pct,
)
from .errors import ConfigError
from .fusion import FusionConfig, FusionMode, RejectReason, activation_pipeline
from .sensing import (
    CALIBRATION_SAMPLES,
    CalibrationState,
    EventTrace,
    GroundTruth,
    SensorSample,
    TraceSpec,
    Truth,
    calibrate_background,
    generate_trace,
    load_trace,
    tof_distance,
)

SCENARIO_HEADER = "#netra-scenario v1"

FRAME_W = 300.0
FRAME_H = 300.0
FAINT_CONFIDENCE = 0.45


class PipelineMode(Enum):
    PIR_ONLY = "pir_only"
    BINARY = "binary"
    PROBABILISTIC = "probabilistic"


# Deterministic frame recipes per intrusion class: bbox, base-detector class
# and clear-view confidence. Faint views drop to FAINT_CONFIDENCE, hidden
# subjects produce an empty frame.
_FRAME_RECIPES: Dict[str, Tuple[Tuple[float, float, float, float],
                                DetectorLabel, float]] = {
    "human": ((90.0, 60.0, 160.0, 290.0), DetectorLabel.PERSON, 0.92),
    "cow": ((60.0, 90.0, 150.0, 210.0), DetectorLabel.COW, 0.80),
    "elephant": ((30.0, 30.0, 180.0, 180.0), DetectorLabel.COW, 0.90),
    "obstruction": ((100.0, 150.0, 200.0, 210.0), DetectorLabel.NONE, 0.75),
}


def synth_frame(truth: Truth) -> FrameDescriptor:
    """What the camera would capture for a ground-truth annotation.

    False triggers and quiet track give an empty frame; so does a hidden
    subject (out of the camera's view even though the sensors fired).
    """
    if truth.kind is not GroundTruth.TRUE_INTRUSION:
        return FrameDescriptor(FRAME_W, FRAME_H, ())
    if truth.visibility == "hidden":
        return FrameDescriptor(FRAME_W, FRAME_H, ())
    bbox, det_label, conf = _FRAME_RECIPES[truth.subject]
    if truth.visibility == "faint":
        conf = FAINT_CONFIDENCE
    obj = FrameObject(TrueClass(truth.subject), bbox, det_label, conf)
    return FrameDescriptor(FRAME_W, FRAME_H, (obj,))


@dataclass
class Scenario:
    """Everything `run` needs, resolved and validated."""

    name: str = "scenario"
    trace_path: Optional[Path] = None
    trace: Optional[EventTrace] = None     # in-memory override for tests
    generator: Optional[TraceSpec] = None
    seed: int = 1
    mode: PipelineMode = PipelineMode.PROBABILISTIC
    fusion: FusionConfig = field(default_factory=FusionConfig)
    classify_cfg: ClassifyConfig = field(default_factory=ClassifyConfig)
    classifier: str = "oracle"             # oracle | heuristic
    oracle_mode: str = "quota"             # quota | sampled
    confusion: ConfusionSpec = field(default_factory=ConfusionSpec.identity)
    link: LinkModel = field(default_factory=LinkModel)
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    platform: PlatformProfile = field(
        default_factory=lambda: energy_mod.PI_4)
    sf: Optional[int] = None               # None -> adaptive from link SNR
    node_lat: float = 0.0
    node_lon: float = 0.0
    d_bg: Optional[float] = None           # skip in-trace calibration burst
    dedup_window_ms: int = 60000
    sweep_taus: Optional[List[float]] = None

    def validate(self) -> "Scenario":
        if not self.name:
            raise ConfigError("name", "must not be empty")
        sources = sum(x is not None
                      for x in (self.trace_path, self.trace, self.generator))
        if sources == 0:
            raise ConfigError(
                "trace", "scenario needs a trace file or generate.* keys")
        if sources > 1:
            raise ConfigError("trace", "multiple event sources configured")
        if self.classifier not in ("oracle", "heuristic"):
            raise ConfigError("classifier",
                             "expected oracle or heuristic, got %r"
                             % self.classifier)
        if self.oracle_mode not in ("quota", "sampled"):
            raise ConfigError("classifier.oracle",
                             "expected quota or sampled, got %r"
                             % self.oracle_mode)
        if not (-90.0 <= self.node_lat <= 90.0):
            raise ConfigError("node.lat", "must be in [-90, 90]")
        if not (-180.0 <= self.node_lon <= 180.0):
            raise ConfigError("node.lon", "must be in [-180, 180]")
        if self.dedup_window_ms < 0:
            raise ConfigError("receiver.dedup_window_ms", "must be >= 0")
        if self.sweep_taus is not None:
            for tau in self.sweep_taus:
                if not (0.0 <= tau <= 1.0):
                    raise ConfigError("sweep.tau",
                                     "thresholds must be in [0, 1], got %r"
                                     % tau)
        if self.d_bg is not None and self.d_bg <= 0:
            raise ConfigError("d_bg", "must be > 0")
        self.fusion.validate()
        self.classify_cfg.validate()
        self.confusion.validate()
        self.link.validate()
        self.retry.validate()
        self.platform.validate()
        return self


@dataclass(frozen=True)
class FunnelCounts:
    """Event counts through the suppression funnel."""

    raw_pir: int
    fusion_passed: int
    ai_confirmed: int
    transmitted: int
    delivered: int

    def as_list(self) -> List[int]:
        return [self.raw_pir, self.fusion_passed, self.ai_confirmed,
                self.transmitted, self.delivered]


@dataclass
class MetricsReport:
    """Deterministic summary of one run. Serializes byte-identically."""

    report_version: int
    name: str
    seed: int
    mode: str
    platform: str
    sf: int
    tau_c: float
    n_samples: int
    n_true_ground: int
    n_false_ground: int
    pir_triggers: int
    camera_activations: int
    true_activations: int
    false_activations: int
    rejects: Dict[str, int]
    detections_by_label: Dict[str, int]
    gate_routes: Dict[str, int]
    medium_logged: int
    transmitted: int
    delivered: int
    buffered: int
    dropped: int
    duplicates: int
    decode_failures: int
    frames_sent: int
    radio_airtime_s: float
    detection_rate_pct: Optional[float]
    suppression_pct: Optional[float]
    pdr_pct: float
    mean_latency_ms: float
    p95_latency_ms: float
    funnel: FunnelCounts
    energy: EnergyLedger
    camera_baseline_wh: Optional[float]
    camera_savings_pct: Optional[float]
    driver_event_log: List[str]

    def to_dict(self) -> dict:
        d = {
            "report_version": self.report_version,
            "scenario": {
                "name": self.name,
                "seed": self.seed,
                "mode": self.mode,
                "platform": self.platform,
                "sf": self.sf,
                "tau_c": self.tau_c,
            },
            "events": {
                "samples": self.n_samples,
                "true_ground": self.n_true_ground,
                "false_ground": self.n_false_ground,
                "pir_triggers": self.pir_triggers,
                "camera_activations": self.camera_activations,
                "true_activations": self.true_activations,
                "false_activations": self.false_activations,
                "rejects": dict(self.rejects),
            },
            "classify": {
                "detections_by_label": dict(self.detections_by_label),
                "gate_routes": dict(self.gate_routes),
                "medium_logged": self.medium_logged,
            },
            "link": {
                "transmitted": self.transmitted,
                "delivered": self.delivered,
                "buffered": self.buffered,
                "dropped": self.dropped,
                "duplicates": self.duplicates,
                "decode_failures": self.decode_failures,
                "frames_sent": self.frames_sent,
                "radio_airtime_s": self.radio_airtime_s,
                "pdr_pct": self.pdr_pct,
            },
            "metrics": {
                "detection_rate_pct": self.detection_rate_pct,
                "suppression_pct": self.suppression_pct,
                "mean_latency_ms": self.mean_latency_ms,
                "p95_latency_ms": self.p95_latency_ms,
            },
            "funnel": self.funnel.as_list(),
            "energy": self.energy.as_dict(),
            "camera_baseline_wh": self.camera_baseline_wh,
            "camera_savings_pct": self.camera_savings_pct,
            "driver_event_log": list(self.driver_event_log),
        }
        return d

    def to_json_bytes(self) -> bytes:
        text = json.dumps(self.to_dict(), sort_keys=True, indent=2)
        return (text + "\n").encode("utf-8")


def funnel_report(report: MetricsReport) -> List[int]:
    return report.funnel.as_list()


def _percentile95(values: Sequence[int]) -> float:
    if not values:
        return 0.0
    ordered = sorted(values)
    idx = max(math.ceil(0.95 * len(ordered)) - 1, 0)
    return float(ordered[idx])


def _calibration_from_trace(trace: EventTrace) -> CalibrationState:
    distances: List[float] = []
    for sample in trace.samples:
        if sample.pir == 0 and sample.echo_time_s is not None:
            distances.append(tof_distance(sample.echo_time_s))
            if len(distances) == CALIBRATION_SAMPLES:
                break
    if len(distances) < CALIBRATION_SAMPLES:
        raise ConfigError(
            "trace", "needs %d quiet ranging samples for calibration, "
            "found %d" % (CALIBRATION_SAMPLES, len(distances)))
    return calibrate_background(distances)


def _resolve_trace(scenario: Scenario) -> EventTrace:
    if scenario.trace is not None:
        return scenario.trace
    if scenario.trace_path is not None:
        return load_trace(scenario.trace_path)
    assert scenario.generator is not None
    return generate_trace(scenario.generator, scenario.seed)


def run(scenario: Scenario) -> MetricsReport:
    """Replay one scenario start to finish."""
    scenario.validate()
    trace = _resolve_trace(scenario)
    if scenario.d_bg is not None:
        calib = CalibrationState(d_bg=scenario.d_bg)
    else:
        calib = _calibration_from_trace(trace)

    fusion_cfg = scenario.fusion
    if scenario.mode is PipelineMode.BINARY:
        fusion_cfg = dataclasses.replace(fusion_cfg, mode=FusionMode.BINARY)
    elif scenario.mode is PipelineMode.PROBABILISTIC:
        fusion_cfg = dataclasses.replace(
            fusion_cfg, mode=FusionMode.PROBABILISTIC)
    ccfg = scenario.classify_cfg

    classify_fn: Callable[[FrameDescriptor], Detection]
    if scenario.classifier == "oracle":
        oracle = OracleClassifier(scenario.confusion,
                                  seed=scenario.seed * 7919 + 13,
                                  mode=scenario.oracle_mode)
        classify_fn = oracle.classify
    else:
        classify_fn = lambda frame: heuristic_classify(frame, ccfg)

    tx = Transmitter(scenario.link, scenario.retry,
                     rng=random.Random(scenario.seed * 1000003 + 17),
                     sf=scenario.sf)
    rx = Receiver(scenario.dedup_window_ms)
    platform = scenario.platform

    pir_triggers = 0
    activations = 0
    true_activations = 0
    false_activations = 0
    rejects: Dict[str, int] = {r.value: 0 for r in RejectReason
                               if r is not RejectReason.NONE}
    detections: Dict[str, int] = {}
    gate_routes: Dict[str, int] = {
        "transmit": 0, "log_only": 0,
        "suppress_background": 0, "suppress_below_confidence": 0,
        "suppress_below_score": 0, "suppress_low_priority": 0,
    }
    medium_logged = 0
    transmitted = 0
    delivered = 0
    e2e_latencies: List[int] = []

    # Delay between the sample timestamp and the alert leaving the radio:
    # sensor poll round, model inference, alert build + frame pack.
    processing_ms = (platform.sensing_poll_ms + platform.inference_ms
                     + platform.encode_ms)

    for sample in trace.samples:
        pir_triggers += sample.pir
        if scenario.mode is PipelineMode.PIR_ONLY:
            camera = sample.pir
            p_intrusion = 1.0 if camera else 0.0
            if not camera:
                rejects[RejectReason.NO_MOTION.value] += 1
        else:
            decision = activation_pipeline(sample, calib, fusion_cfg)
            camera = decision.camera
            p_intrusion = decision.p_intrusion
            if decision.reject_reason is not RejectReason.NONE:
                rejects[decision.reject_reason.value] += 1
        if not camera:
            continue

        activations += 1
        if sample.truth.kind is GroundTruth.TRUE_INTRUSION:
            true_activations += 1
        else:
            false_activations += 1

        frame = synth_frame(sample.truth)
        det = classify_fn(frame)
        detections[det.label.token] = detections.get(det.label.token, 0) + 1
        gate = alert_gate(det, p_intrusion, ccfg)

        if gate.route is GateRoute.SUPPRESS:
            gate_routes["suppress_%s" % gate.reason.value] += 1
            continue
        if gate.route is GateRoute.LOG_ONLY:
            gate_routes["log_only"] += 1
            medium_logged += 1
            continue

        gate_routes["transmit"] += 1
        transmitted += 1
        alert = Alert(
            alert_id=make_alert_id(sample.t_ms, scenario.node_lat,
                                   scenario.node_lon),
            label=det.label,
            ips=gate.ips,
            lat=scenario.node_lat,
            lon=scenario.node_lon,
            timestamp_ms=sample.t_ms,
            priority=det.priority,
        )
        t_submit = sample.t_ms + processing_ms
        outcome = tx.transmit(alert, t_submit)
        for arrival in outcome.frame_arrivals:
            rx.process(arrival, outcome.payload)
        if outcome.state is TxState.DELIVERED:
            delivered += 1
            assert outcome.latency_ms is not None
            e2e_latencies.append(processing_ms + outcome.latency_ms)

    tx.check_conservation()
    ai_confirmed = gate_routes["transmit"] + gate_routes["log_only"]
    funnel = FunnelCounts(pir_triggers, activations, ai_confirmed,
                          transmitted, delivered)
    stages = funnel.as_list()
    assert all(a >= b for a, b in zip(stages, stages[1:])), stages

    duration_ms = (trace.samples[-1].t_ms - trace.samples[0].t_ms
                   if trace.samples else 0)
    ledger = run_ledger(
        RunTotals(activation_count=activations,
                  radio_airtime_s=tx.airtime_s,
                  duration_ms=duration_ms),
        platform)
    assert ledger.activation_count == activations

    baseline_wh: Optional[float] = None
    savings: Optional[float] = None
    if pir_triggers > 0:
        baseline_wh = camera_energy_wh(pir_triggers, platform)
        savings = savings_pct(baseline_wh, ledger.camera_wh)

    n_true = trace.n_true
    detection_rate = (100.0 * true_activations / n_true
                      if n_true > 0 else None)
    suppression = (100.0 * (1.0 - transmitted / pir_triggers)
                   if pir_triggers > 0 else None)
    pdr = 100.0 * delivered / transmitted if transmitted > 0 else 0.0
    mean_latency = (sum(e2e_latencies) / len(e2e_latencies)
                    if e2e_latencies else 0.0)

    return MetricsReport(
        report_version=1,
        name=scenario.name,
        seed=scenario.seed,
        mode=scenario.mode.value,
        platform=platform.name,
        sf=tx.sf,
        tau_c=scenario.fusion.tau_c,
        n_samples=len(trace.samples),
        n_true_ground=n_true,
        n_false_ground=trace.n_false,
        pir_triggers=pir_triggers,
        camera_activations=activations,
        true_activations=true_activations,
        false_activations=false_activations,
        rejects=rejects,
        detections_by_label=dict(sorted(detections.items())),
        gate_routes=gate_routes,
        medium_logged=medium_logged,
        transmitted=transmitted,
        delivered=delivered,
        buffered=tx.buffered,
        dropped=tx.dropped,
        duplicates=rx.duplicates,
        decode_failures=rx.decode_failures,
        frames_sent=tx.frames_sent,
        radio_airtime_s=tx.airtime_s,
        detection_rate_pct=detection_rate,
        suppression_pct=suppression,
        pdr_pct=pdr,
        mean_latency_ms=mean_latency,
        p95_latency_ms=_percentile95(e2e_latencies),
        funnel=funnel,
        energy=ledger,
        camera_baseline_wh=baseline_wh,
        camera_savings_pct=savings,
        driver_event_log=rx.event_log(),
    )


def sweep(scenario: Scenario, taus: Sequence[float]) -> List[MetricsReport]:
    """Run the scenario once per camera threshold, same seed throughout."""
    if not taus:
        raise ConfigError("sweep.tau", "needs at least one threshold")
    for tau in taus:
        if not (0.0 <= tau <= 1.0):
            raise ConfigError("sweep.tau",
                             "thresholds must be in [0, 1], got %r" % tau)
    reports = []
    for tau in taus:
        variant = dataclasses.replace(
            scenario,
            fusion=dataclasses.replace(scenario.fusion, tau_c=tau))
        reports.append(run(variant))
    return reports


# ---------------------------------------------------------------------------
# Scenario files
# ---------------------------------------------------------------------------

def _parse_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(key, "expected a number, got %r" % value) from None


def _parse_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(key, "expected an integer, got %r" % value) from None


def parse_scenario(path) -> Scenario:
    """Read a `#netra-scenario v1` key = value file.

    Unknown or duplicate keys are hard errors; relative paths resolve
    against the scenario file's directory.
    """
    path = Path(path)
    base = path.parent
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != SCENARIO_HEADER:
        raise ConfigError("scenario",
                         "missing %r header" % SCENARIO_HEADER)

    scn = Scenario()
    fusion_kw: Dict[str, object] = {}
    classify_kw: Dict[str, object] = {}
    link_kw: Dict[str, object] = {}
    per_sf: Dict[int, float] = {}
    retry_kw: Dict[str, object] = {}
    gen_kw: Dict[str, object] = {}
    seen: set = set()

    for line_no, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError("scenario",
                             "line %d: expected key = value" % line_no)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in seen:
            raise ConfigError(key, "duplicate key (line %d)" % line_no)
        seen.add(key)

        if key == "name":
            scn.name = value
        elif key == "trace":
            scn.trace_path = (base / value).resolve()
        elif key == "seed":
            scn.seed = _parse_int(key, value)
        elif key == "mode":
            try:
                scn.mode = PipelineMode(value)
            except ValueError:
                raise ConfigError(
                    key, "expected pir_only, binary or probabilistic, "
                    "got %r" % value) from None
        elif key == "platform":
            if value not in PLATFORMS:
                raise ConfigError(key, "unknown platform %r (have: %s)"
                                  % (value, ", ".join(sorted(PLATFORMS))))
            scn.platform = PLATFORMS[value]
        elif key == "node.lat":
            scn.node_lat = _parse_float(key, value)
        elif key == "node.lon":
            scn.node_lon = _parse_float(key, value)
        elif key == "d_bg":
            scn.d_bg = _parse_float(key, value)
        elif key == "classifier":
            scn.classifier = value
        elif key == "classifier.oracle":
            scn.oracle_mode = value
        elif key == "confusion":
            if value == "identity":
                scn.confusion = ConfusionSpec.identity()
            else:
                scn.confusion = load_confusion((base / value).resolve())
        elif key == "receiver.dedup_window_ms":
            scn.dedup_window_ms = _parse_int(key, value)
        elif key == "sweep.tau":
            scn.sweep_taus = [_parse_float(key, tok)
                              for tok in value.replace(",", " ").split()]
        elif key.startswith("fusion."):
            fld = key[len("fusion."):]
            if fld not in ("w_pir", "w_dist", "d_max", "tau_c",
                           "gate_min", "gate_max"):
                raise ConfigError(key, "unknown scenario key")
            fusion_kw[fld] = _parse_float(key, value)
        elif key.startswith("classify."):
            fld = key[len("classify."):]
            if fld not in ("tau_ai", "tau_elephant", "ips_weight",
                           "tau_alert"):
                raise ConfigError(key, "unknown scenario key")
            classify_kw[fld] = _parse_float(key, value)
        elif key == "link.sf":
            scn.sf = (None if value == "adaptive"
                      else _parse_int(key, value))
        elif key == "link.delivery":
            link_kw["delivery_prob"] = _parse_float(key, value)
        elif key.startswith("link.delivery.sf"):
            sf = _parse_int(key, key[len("link.delivery.sf"):])
            per_sf[sf] = _parse_float(key, value)
        elif key == "link.ack_loss":
            link_kw["ack_loss_prob"] = _parse_float(key, value)
        elif key == "link.snr_margin_db":
            link_kw["snr_margin_db"] = _parse_float(key, value)
        elif key == "link.propagation_ms":
            link_kw["propagation_ms"] = _parse_int(key, value)
        elif key == "link.max_retries":
            retry_kw["max_retries"] = _parse_int(key, value)
        elif key == "link.backoff_base_ms":
            retry_kw["backoff_base_ms"] = _parse_int(key, value)
        elif key == "link.ack_timeout_ms":
            retry_kw["ack_timeout_ms"] = _parse_int(key, value)
        elif key.startswith("generate."):
            fld = key[len("generate."):]
            if fld in ("n_true", "n_false", "interval_ms"):
                gen_kw[fld] = _parse_int(key, value)
            elif fld == "d_bg":
                gen_kw["d_bg"] = _parse_float(key, value)
            elif fld == "true_class":
                gen_kw["true_class"] = value
            else:
                raise ConfigError(key, "unknown scenario key")
        else:
            raise ConfigError(key, "unknown scenario key")

    if fusion_kw:
        scn.fusion = dataclasses.replace(scn.fusion, **fusion_kw)
    if classify_kw:
        scn.classify_cfg = dataclasses.replace(scn.classify_cfg,
                                               **classify_kw)
    if per_sf:
        link_kw["per_sf_delivery"] = per_sf
    if link_kw:
        scn.link = dataclasses.replace(scn.link, **link_kw)
    if retry_kw:
        scn.retry = dataclasses.replace(scn.retry, **retry_kw)
    if gen_kw:
        scn.generator = TraceSpec(**gen_kw)  # type: ignore[arg-type]
    return scn.validate()
