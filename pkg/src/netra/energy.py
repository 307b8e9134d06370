"""Energy and platform accounting.

The point of gated activation is the power budget: a camera that runs only
for confirmed events instead of on every PIR trigger. This module turns
activation counts, radio airtime and elapsed time into watt-hours per
component, and compares gated operation against an always-trigger baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

from .errors import ConfigError, NetraError

SECONDS_PER_HOUR = 3600.0


class UndefinedBaselineError(NetraError):
    """Savings against a zero or negative baseline are undefined."""


@dataclass(frozen=True)
class PlatformProfile:
    """Power and timing figures for one compute platform."""

    name: str
    idle_w: float
    inference_w: float
    inference_s: float
    camera_w: float = 2.0
    camera_activation_s: float = 5.0
    radio_tx_w: float = 0.4
    sensing_poll_ms: int = 1000   # PIR settle + ultrasonic ping round
    encode_ms: int = 35           # alert build + frame pack

    def validate(self) -> "PlatformProfile":
        for fld in ("idle_w", "inference_w", "inference_s", "camera_w",
                    "camera_activation_s", "radio_tx_w"):
            if getattr(self, fld) < 0:
                raise ConfigError("platform.%s" % fld, "must be >= 0")
        if self.inference_w < self.idle_w:
            raise ConfigError("platform.inference_w",
                             "must be >= idle_w (it includes the idle draw)")
        if self.sensing_poll_ms < 0 or self.encode_ms < 0:
            raise ConfigError("platform.timing", "must be >= 0")
        return self

    @property
    def inference_ms(self) -> int:
        return int(round(self.inference_s * 1000))


PI_ZERO = PlatformProfile(
    name="pi-zero", idle_w=0.5, inference_w=2.5, inference_s=5.2,
    sensing_poll_ms=1150, encode_ms=35).validate()

PI_4 = PlatformProfile(
    name="pi-4", idle_w=2.7, inference_w=7.5, inference_s=0.8,
    sensing_poll_ms=1450, encode_ms=35).validate()

PLATFORMS: Dict[str, PlatformProfile] = {p.name: p for p in (PI_ZERO, PI_4)}


def camera_energy_wh(activations: int,
                     profile: PlatformProfile = PI_ZERO) -> float:
    """Watt-hours spent by the camera for a number of activations."""
    if activations < 0:
        raise ConfigError("energy.activations", "must be >= 0")
    return (activations * profile.camera_w * profile.camera_activation_s
            / SECONDS_PER_HOUR)


def savings_pct(baseline: float, actual: float) -> float:
    """Percentage saved against a baseline. Undefined for baseline <= 0."""
    if baseline <= 0:
        raise UndefinedBaselineError(
            "baseline must be > 0, got %r" % baseline)
    return (1.0 - actual / baseline) * 100.0


@dataclass(frozen=True)
class RunTotals:
    """What a simulation run hands to the energy ledger."""

    activation_count: int
    radio_airtime_s: float
    duration_ms: int


@dataclass(frozen=True)
class EnergyLedger:
    camera_wh: float
    inference_wh: float
    idle_wh: float
    radio_wh: float
    activation_count: int

    @property
    def total_wh(self) -> float:
        return self.camera_wh + self.inference_wh + self.idle_wh + self.radio_wh

    def as_dict(self) -> Dict[str, float]:
        return {
            "camera_wh": self.camera_wh,
            "inference_wh": self.inference_wh,
            "idle_wh": self.idle_wh,
            "radio_wh": self.radio_wh,
            "total_wh": self.total_wh,
            "activation_count": self.activation_count,
        }


def run_ledger(totals: RunTotals,
               profile: PlatformProfile = PI_ZERO) -> EnergyLedger:
    """Break a run's consumption into components.

    Idle draw is billed for the whole duration regardless of activity;
    inference is billed at its *incremental* draw above idle, so adding an
    activation can never reduce any component. Radio energy is transmit
    airtime at the TX draw.
    """
    if totals.duration_ms < 0:
        raise ConfigError("energy.duration_ms", "must be >= 0")
    if totals.radio_airtime_s < 0:
        raise ConfigError("energy.radio_airtime_s", "must be >= 0")
    hours = totals.duration_ms / 1000.0 / SECONDS_PER_HOUR
    camera = camera_energy_wh(totals.activation_count, profile)
    inference = (totals.activation_count
                 * (profile.inference_w - profile.idle_w)
                 * profile.inference_s / SECONDS_PER_HOUR)
    idle = profile.idle_w * hours
    radio = profile.radio_tx_w * totals.radio_airtime_s / SECONDS_PER_HOUR
    return EnergyLedger(
        camera_wh=camera,
        inference_wh=inference,
        idle_wh=idle,
        radio_wh=radio,
        activation_count=totals.activation_count,
    )


def battery_days(capacity_wh: float, daily_wh: float) -> float:
    """How long a battery lasts at a constant daily draw."""
    if capacity_wh <= 0:
        raise ConfigError("energy.capacity_wh", "must be > 0")
    if daily_wh <= 0:
        raise ConfigError("energy.daily_wh", "must be > 0")
    return capacity_wh / daily_wh
