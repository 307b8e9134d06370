"""Camera activation from PIR + ultrasonic evidence.

The node keeps its camera off until motion and a plausible distance change
agree. Distance change against the calibrated background is scaled into a
probability, fused with the PIR flag by fixed weights, and the camera fires
when the fused score clears a threshold. A strict binary mode (full-scale
distance change only) is kept for comparison runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .errors import CalibrationIncompleteError, ConfigError
from .sensing import (
    CALIBRATION_SAMPLES,
    CalibrationState,
    SensorSample,
    tof_distance,
)


class FusionMode(Enum):
    BINARY = "binary"
    PROBABILISTIC = "probabilistic"


class RejectReason(Enum):
    NONE = "none"
    NO_MOTION = "no_motion"
    NON_POSITIVE_DELTA = "non_positive_delta"
    OUT_OF_RANGE = "out_of_range"
    BELOW_THRESHOLD = "below_threshold"


@dataclass(frozen=True)
class FusionConfig:
    """Weights, scale and gates for the activation decision.

    w_pir / w_dist must sum to 1. d_max is the distance change treated as
    full-scale evidence; in binary mode it doubles as the activation
    threshold. gate_min/gate_max bound the credible reading band: closer
    returns are mounting-structure clutter, farther ones exceed the
    calibrated background.
    """

    w_pir: float = 0.4
    w_dist: float = 0.6
    d_max: float = 1.5
    tau_c: float = 0.65
    gate_min: float = 4.0
    gate_max: float = 15.0
    mode: FusionMode = FusionMode.PROBABILISTIC

    def validate(self) -> "FusionConfig":
        if not (0.0 <= self.w_pir <= 1.0):
            raise ConfigError("fusion.w_pir", "must be in [0, 1]")
        if not (0.0 <= self.w_dist <= 1.0):
            raise ConfigError("fusion.w_dist", "must be in [0, 1]")
        if abs(self.w_pir + self.w_dist - 1.0) > 1e-9:
            raise ConfigError(
                "fusion.w_pir", "weights must sum to 1, got %r"
                % (self.w_pir + self.w_dist))
        if self.d_max <= 0:
            raise ConfigError("fusion.d_max", "must be > 0")
        if not (0.0 <= self.tau_c <= 1.0):
            raise ConfigError("fusion.tau_c", "must be in [0, 1]")
        if not (0.0 < self.gate_min < self.gate_max):
            raise ConfigError(
                "fusion.gate_min", "need 0 < gate_min < gate_max")
        return self


@dataclass(frozen=True)
class FusionDecision:
    """Outcome of one activation evaluation."""

    delta_d: float
    p_dist: float
    p_intrusion: float
    camera: int
    reject_reason: RejectReason
    d_current: Optional[float] = None


def distance_change(d_bg: float, d_current: float) -> float:
    """Signed reduction of the measured distance against the background.

    Positive means something sits between the sensor and the far rail;
    negative means the reading moved past the background (wind, rain,
    specular bounce) and carries no intrusion evidence.
    """
    return d_bg - d_current


def distance_probability(delta_d: float, d_max: float) -> float:
    """Scale a distance change into [0, 1] with saturation at d_max.

    Negative changes clamp to 0 rather than raising: a standalone node
    polls this on every sample, and backwards readings are routine noise.
    """
    if d_max <= 0:
        raise ConfigError("fusion.d_max", "must be > 0")
    if delta_d <= 0.0:
        return 0.0
    return min(delta_d / d_max, 1.0)


def fuse(pir: int, p_dist: float, w_pir: float = 0.4,
         w_dist: float = 0.6) -> float:
    """Weighted sum of the PIR flag and the distance probability."""
    return w_pir * float(pir) + w_dist * p_dist


def camera_decision(p_intrusion: float, tau_c: float) -> int:
    """1 when the fused probability reaches tau_c. Boundary is inclusive."""
    return 1 if p_intrusion >= tau_c else 0


def activation_pipeline(sample: SensorSample, calib: CalibrationState,
                        cfg: FusionConfig) -> FusionDecision:
    """Full per-sample activation decision.

    Order of gates: no motion, non-positive distance change, reading outside
    the credible band, then the mode threshold. A sample with motion but no
    echo reading is scored as if the background distance were measured
    (delta 0), so it lands in the non-positive-delta reject bucket.
    """
    if not calib.complete:
        raise CalibrationIncompleteError(
            "background calibration has %d of %d samples"
            % (calib.sample_count, CALIBRATION_SAMPLES))
    if sample.pir == 0:
        return FusionDecision(
            delta_d=0.0, p_dist=0.0, p_intrusion=0.0, camera=0,
            reject_reason=RejectReason.NO_MOTION)

    if sample.echo_time_s is None:
        d_current = calib.d_bg
    else:
        d_current = tof_distance(sample.echo_time_s)
    delta = distance_change(calib.d_bg, d_current)
    p_dist = distance_probability(delta, cfg.d_max)
    p = fuse(sample.pir, p_dist, cfg.w_pir, cfg.w_dist)

    if delta <= 0.0:
        return FusionDecision(delta, p_dist, p, 0,
                              RejectReason.NON_POSITIVE_DELTA, d_current)
    if not (cfg.gate_min <= d_current <= cfg.gate_max):
        return FusionDecision(delta, p_dist, p, 0,
                              RejectReason.OUT_OF_RANGE, d_current)

    if cfg.mode is FusionMode.BINARY:
        # Strict logic: only a full-scale distance change counts.
        camera = 1 if delta >= cfg.d_max else 0
    else:
        camera = camera_decision(p, cfg.tau_c)
    reason = RejectReason.NONE if camera else RejectReason.BELOW_THRESHOLD
    decision = FusionDecision(delta, p_dist, p, camera, reason, d_current)
    # Any activation, in either mode, is backed by a fused score at or above
    # the probabilistic threshold. Binary activations imply p_dist = 1.
    assert not decision.camera or decision.p_intrusion >= min(cfg.tau_c, 1.0)
    return decision
