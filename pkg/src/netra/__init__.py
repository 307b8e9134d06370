"""netra: a deterministic simulator for an event-driven railway intrusion
detection node.

The pipeline mirrors a solar-powered trackside unit: PIR motion and
ultrasonic ranging are fused to gate a camera, detections are classified
and prioritized, and confirmed threats leave over a LoRa-style link with
bounded retries. Traces replay deterministically, so accuracy, suppression,
latency and energy figures are reproducible to the byte.
"""

from .alerting import (
    Alert,
    LinkModel,
    Receiver,
    RetryPolicy,
    Transmitter,
    adaptive_sf,
    airtime,
    crc16_ccitt,
    decode_payload,
    encode_payload,
    make_alert_id,
)
from .classify import (
    ClassifyConfig,
    ConfusionSpec,
    Detection,
    FrameDescriptor,
    FrameObject,
    Label,
    OracleClassifier,
    Priority,
    alert_gate,
    heuristic_classify,
    intrusion_probability_score,
)
from .energy import (
    EnergyLedger,
    PI_4,
    PI_ZERO,
    PlatformProfile,
    battery_days,
    camera_energy_wh,
    run_ledger,
    savings_pct,
)
from .errors import NetraError
from .fusion import (
    FusionConfig,
    FusionDecision,
    FusionMode,
    RejectReason,
    activation_pipeline,
    camera_decision,
    distance_change,
    distance_probability,
    fuse,
)
from .sensing import (
    CalibrationState,
    EventTrace,
    SensorSample,
    calibrate_background,
    generate_trace,
    load_trace,
    save_trace,
    tof_distance,
)
from .sim import (
    MetricsReport,
    PipelineMode,
    Scenario,
    parse_scenario,
    run,
    sweep,
)

__version__ = "0.1.0"

__all__ = [
    "Alert", "LinkModel", "Receiver", "RetryPolicy", "Transmitter",
    "adaptive_sf", "airtime", "crc16_ccitt", "decode_payload",
    "encode_payload", "make_alert_id",
    "ClassifyConfig", "ConfusionSpec", "Detection", "FrameDescriptor",
    "FrameObject", "Label", "OracleClassifier", "Priority", "alert_gate",
    "heuristic_classify", "intrusion_probability_score",
    "EnergyLedger", "PI_4", "PI_ZERO", "PlatformProfile", "battery_days",
    "camera_energy_wh", "run_ledger", "savings_pct",
    "NetraError",
    "FusionConfig", "FusionDecision", "FusionMode", "RejectReason",
    "activation_pipeline", "camera_decision", "distance_change",
    "distance_probability", "fuse",
    "CalibrationState", "EventTrace", "SensorSample",
    "calibrate_background", "generate_trace", "load_trace", "save_trace",
    "tof_distance",
    "MetricsReport", "PipelineMode", "Scenario", "parse_scenario", "run",
    "sweep",
    "__version__",
]
