"""Alert uplink: frame codec, LoRa-style air interface, retries, receiving.

Alerts travel as fixed 31-byte frames protected by CRC-16. The air interface
models time-on-air for a chosen spreading factor, per-frame delivery and ACK
loss, bounded retries with exponential backoff, and a small FIFO buffer for
alerts that exhaust their retries. The receiver decodes frames, folds
duplicates (re-sends after a lost ACK) and keeps the driver-facing event log.
"""

from __future__ import annotations

import math
import random
import struct
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Deque, Dict, List, Optional, Tuple

from .classify import Label, Priority
from .errors import (
    CodecError,
    ConfigError,
    FrameFieldError,
    FrameIntegrityError,
    FrameLengthError,
    FrameVersionError,
)

FRAME_VERSION = 1
FRAME_LEN = 31
ACK_LEN = 11          # short ACK frame: version + alert_id + CRC
BUFFER_CAPACITY = 64

_HEADER_FMT = ">BQBBHiiQ"   # version, id, label, priority, ips, lat, lon, ts
_CRC_FMT = ">H"

IPS_SCALE = 10000     # fused score fixed-point: 4 decimal digits
COORD_SCALE = 100000  # lat/lon fixed-point: 5 decimal digits


@dataclass(frozen=True)
class Alert:
    alert_id: int
    label: Label
    ips: float
    lat: float
    lon: float
    timestamp_ms: int
    priority: Priority


def fnv1a64(data: bytes) -> int:
    h = 0xcbf29ce484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001b3) & 0xFFFFFFFFFFFFFFFF
    return h


def make_alert_id(timestamp_ms: int, lat: float, lon: float) -> int:
    """Deterministic 64-bit alert id from capture time and node position.

    Hashes a canonical 20-byte form (timestamp u64, then lat and lon as
    signed 48-bit fixed-point) so the same reading always maps to the same
    id, letting the receiver fold retransmissions.
    """
    if not (0 <= timestamp_ms < 1 << 64):
        raise ConfigError("alert.timestamp_ms", "must fit in 64 bits")
    canon = (timestamp_ms.to_bytes(8, "big")
             + round(lat * COORD_SCALE).to_bytes(6, "big", signed=True)
             + round(lon * COORD_SCALE).to_bytes(6, "big", signed=True))
    return fnv1a64(canon)


def crc16_ccitt(data: bytes, init: int = 0xFFFF) -> int:
    """CRC-16/CCITT-FALSE: polynomial 0x1021, MSB first, init 0xFFFF."""
    crc = init
    for b in data:
        crc ^= b << 8
        for _ in range(8):
            if crc & 0x8000:
                crc = ((crc << 1) ^ 0x1021) & 0xFFFF
            else:
                crc = (crc << 1) & 0xFFFF
    return crc


def _check_alert_fields(alert: Alert) -> None:
    if not (0 <= alert.alert_id < 1 << 64):
        raise FrameFieldError("alert_id must fit in 64 bits")
    if not (0.0 <= alert.ips <= 1.0):
        raise FrameFieldError("ips must be in [0, 1], got %r" % alert.ips)
    if not (-90.0 <= alert.lat <= 90.0):
        raise FrameFieldError("lat must be in [-90, 90], got %r" % alert.lat)
    if not (-180.0 <= alert.lon <= 180.0):
        raise FrameFieldError(
            "lon must be in [-180, 180], got %r" % alert.lon)
    if not (0 <= alert.timestamp_ms < 1 << 64):
        raise FrameFieldError("timestamp_ms must fit in 64 bits")


def encode_payload(alert: Alert) -> bytes:
    """Pack an alert into the 31-byte wire frame."""
    _check_alert_fields(alert)
    body = struct.pack(
        _HEADER_FMT,
        FRAME_VERSION,
        alert.alert_id,
        int(alert.label),
        int(alert.priority),
        round(alert.ips * IPS_SCALE),
        round(alert.lat * COORD_SCALE),
        round(alert.lon * COORD_SCALE),
        alert.timestamp_ms,
    )
    frame = body + struct.pack(_CRC_FMT, crc16_ccitt(body))
    assert len(frame) == FRAME_LEN
    return frame


def decode_payload(data: bytes) -> Alert:
    """Unpack and validate a wire frame.

    Checks run integrity-first: length, then CRC over the whole body, then
    version and field ranges. The CRC covers every body bit, so any
    single-bit corruption is rejected before field parsing ever runs.
    """
    if len(data) != FRAME_LEN:
        raise FrameLengthError(
            "expected %d bytes, got %d" % (FRAME_LEN, len(data)))
    body, crc_bytes = data[:-2], data[-2:]
    (crc_stored,) = struct.unpack(_CRC_FMT, crc_bytes)
    crc_actual = crc16_ccitt(body)
    if crc_stored != crc_actual:
        raise FrameIntegrityError(
            "crc mismatch: stored %04x, computed %04x"
            % (crc_stored, crc_actual))
    (version, alert_id, label_code, prio_code, ips_code,
     lat_code, lon_code, ts) = struct.unpack(_HEADER_FMT, body)
    if version != FRAME_VERSION:
        raise FrameVersionError("unsupported frame version %d" % version)
    try:
        label = Label(label_code)
    except ValueError:
        raise FrameFieldError("unknown label code %d" % label_code) from None
    try:
        priority = Priority(prio_code)
    except ValueError:
        raise FrameFieldError(
            "unknown priority code %d" % prio_code) from None
    if ips_code > IPS_SCALE:
        raise FrameFieldError("ips code %d exceeds %d" % (ips_code, IPS_SCALE))
    if abs(lat_code) > 90 * COORD_SCALE:
        raise FrameFieldError("lat code %d out of band" % lat_code)
    if abs(lon_code) > 180 * COORD_SCALE:
        raise FrameFieldError("lon code %d out of band" % lon_code)
    return Alert(
        alert_id=alert_id,
        label=label,
        ips=ips_code / IPS_SCALE,
        lat=lat_code / COORD_SCALE,
        lon=lon_code / COORD_SCALE,
        timestamp_ms=ts,
        priority=priority,
    )


# ---------------------------------------------------------------------------
# Air interface
# ---------------------------------------------------------------------------

# Demodulation SNR floors per spreading factor (dB, 125 kHz).
SF_SNR_FLOOR_DB = {7: -7.5, 8: -10.0, 9: -12.5, 10: -15.0,
                   11: -17.5, 12: -20.0}

SF_MIN = 7
SF_MAX = 12


def airtime(payload_len: int, sf: int, bw: int = 125000, cr: int = 1,
            preamble_symbols: int = 8, explicit_header: bool = True,
            crc_on: bool = True) -> float:
    """Time on air in seconds for one uplink frame.

    Standard LoRa symbol accounting: preamble of n + 4.25 symbols, payload
    symbol count from the ceil term, low-data-rate optimization kicks in at
    SF11+ on 125 kHz. `cr` is the coding-rate index (1 -> 4/5 ... 4 -> 4/8).
    """
    if not (SF_MIN <= sf <= SF_MAX):
        raise ConfigError("link.sf", "must be in [%d, %d]" % (SF_MIN, SF_MAX))
    if bw <= 0:
        raise ConfigError("link.bw", "must be > 0")
    if not (1 <= cr <= 4):
        raise ConfigError("link.cr", "coding rate index must be in [1, 4]")
    if not (0 <= payload_len <= 255):
        raise ConfigError("link.payload", "length must be in [0, 255]")
    de = 1 if (sf >= 11 and bw == 125000) else 0
    h = 0 if explicit_header else 1
    t_sym = (2.0 ** sf) / bw
    numer = 8 * payload_len - 4 * sf + 28 + (16 if crc_on else 0) - 20 * h
    n_payload = 8 + max(
        math.ceil(numer / (4.0 * (sf - 2 * de))) * (cr + 4), 0)
    t_preamble = (preamble_symbols + 4.25) * t_sym
    return t_preamble + n_payload * t_sym


@dataclass(frozen=True)
class LinkModel:
    """Channel behaviour seen by one node.

    delivery_prob applies to every SF unless per_sf_delivery overrides it.
    snr_margin_db is the link SNR available at the gateway, compared against
    the per-SF demodulation floors when choosing a spreading factor.
    """

    delivery_prob: float = 1.0
    per_sf_delivery: Optional[Dict[int, float]] = None
    ack_loss_prob: float = 0.0
    snr_margin_db: float = 0.0
    propagation_ms: int = 1

    def validate(self) -> "LinkModel":
        if not (0.0 <= self.delivery_prob <= 1.0):
            raise ConfigError("link.delivery", "must be in [0, 1]")
        if not (0.0 <= self.ack_loss_prob <= 1.0):
            raise ConfigError("link.ack_loss", "must be in [0, 1]")
        if self.propagation_ms < 0:
            raise ConfigError("link.propagation_ms", "must be >= 0")
        if self.per_sf_delivery is not None:
            for sf, p in self.per_sf_delivery.items():
                if not (SF_MIN <= sf <= SF_MAX):
                    raise ConfigError("link.delivery.sf%s" % sf,
                                     "sf out of range")
                if not (0.0 <= p <= 1.0):
                    raise ConfigError("link.delivery.sf%d" % sf,
                                     "must be in [0, 1]")
        return self

    def delivery_for(self, sf: int) -> float:
        if self.per_sf_delivery and sf in self.per_sf_delivery:
            return self.per_sf_delivery[sf]
        return self.delivery_prob

    @classmethod
    def lossless(cls) -> "LinkModel":
        return cls()


def adaptive_sf(link: LinkModel) -> int:
    """Smallest spreading factor whose demod floor the link clears.

    Worse links climb toward SF12; below even the SF12 floor the node still
    uses SF12 as a best-effort fallback.
    """
    for sf in range(SF_MIN, SF_MAX + 1):
        if link.snr_margin_db >= SF_SNR_FLOOR_DB[sf]:
            return sf
    return SF_MAX


@dataclass(frozen=True)
class RetryPolicy:
    max_retries: int = 3
    backoff_base_ms: int = 1000   # doubles after each failed attempt
    ack_timeout_ms: int = 500

    def validate(self) -> "RetryPolicy":
        if self.max_retries < 0:
            raise ConfigError("link.max_retries", "must be >= 0")
        if self.backoff_base_ms <= 0:
            raise ConfigError("link.backoff_base_ms", "must be > 0")
        if self.ack_timeout_ms < 0:
            raise ConfigError("link.ack_timeout_ms", "must be >= 0")
        return self


class TxState(Enum):
    IDLE = "idle"
    AWAIT_ACK = "await_ack"
    BACKOFF = "backoff"
    DELIVERED = "delivered"
    BUFFERED = "buffered"


@dataclass(frozen=True)
class TxOutcome:
    alert_id: int
    state: TxState                 # DELIVERED or BUFFERED
    attempts: int
    latency_ms: Optional[int]      # submit -> ACK received; None if buffered
    frame_arrivals: Tuple[int, ...]  # receiver-side arrival times
    payload: bytes
    sf: int


class Transmitter:
    """Sends alerts over the modelled link with ACK-gated retries.

    An alert is submitted once; each attempt puts the frame on air, waits
    for the ACK, and on failure backs off exponentially. After max_retries
    unacknowledged attempts the alert is pushed to a FIFO buffer; when the
    buffer overflows the oldest entry is dropped and logged. Frames can
    reach the receiver even when every ACK is lost, so arrivals are tracked
    separately from the delivered/buffered outcome.
    """

    def __init__(self, link: LinkModel, policy: Optional[RetryPolicy] = None,
                 rng: Optional[random.Random] = None,
                 sf: Optional[int] = None):
        self.link = link.validate()
        self.policy = (policy or RetryPolicy()).validate()
        self.sf = adaptive_sf(link) if sf is None else sf
        if not (SF_MIN <= self.sf <= SF_MAX):
            raise ConfigError("link.sf",
                             "must be in [%d, %d]" % (SF_MIN, SF_MAX))
        self.rng = rng if rng is not None else random.Random(0)
        self.state = TxState.IDLE
        self.buffer: Deque[Tuple[int, bytes]] = deque()
        self.drop_log: List[Tuple[int, int]] = []  # (t_ms, alert_id)
        self.submitted = 0
        self.delivered = 0
        self.buffered = 0
        self.dropped = 0
        self.frames_sent = 0
        self.airtime_s = 0.0
        self._frame_toa_s = airtime(FRAME_LEN, self.sf)
        self._ack_toa_s = airtime(ACK_LEN, self.sf)
        self.frame_toa_ms = int(round(self._frame_toa_s * 1000))
        self.ack_toa_ms = int(round(self._ack_toa_s * 1000))

    def transmit(self, alert: Alert, t_ms: int) -> TxOutcome:
        payload = encode_payload(alert)
        self.submitted += 1
        p_frame = self.link.delivery_for(self.sf)
        prop = self.link.propagation_ms
        arrivals: List[int] = []
        t = t_ms
        for attempt in range(self.policy.max_retries + 1):
            self.state = TxState.AWAIT_ACK
            self.frames_sent += 1
            self.airtime_s += self._frame_toa_s
            arrival = t + self.frame_toa_ms + prop
            frame_ok = self.rng.random() < p_frame
            if frame_ok:
                arrivals.append(arrival)
                ack_lost = self.rng.random() < self.link.ack_loss_prob
                if not ack_lost:
                    done = arrival + self.ack_toa_ms + prop
                    self.delivered += 1
                    self.state = TxState.DELIVERED
                    return TxOutcome(alert.alert_id, TxState.DELIVERED,
                                     attempt + 1, done - t_ms,
                                     tuple(arrivals), payload, self.sf)
            self.state = TxState.BACKOFF
            t = (t + self.frame_toa_ms + self.policy.ack_timeout_ms
                 + self.policy.backoff_base_ms * (2 ** attempt))
        self.buffered += 1
        self.buffer.append((alert.alert_id, payload))
        if len(self.buffer) > BUFFER_CAPACITY:
            old_id, _ = self.buffer.popleft()
            self.dropped += 1
            self.buffered -= 1
            self.drop_log.append((t_ms, old_id))
        self.state = TxState.BUFFERED
        return TxOutcome(alert.alert_id, TxState.BUFFERED,
                         self.policy.max_retries + 1, None,
                         tuple(arrivals), payload, self.sf)

    def check_conservation(self) -> None:
        """No alert may vanish: every submission is accounted for."""
        assert self.submitted == self.delivered + self.buffered + self.dropped
        assert self.buffered == len(self.buffer)


# ---------------------------------------------------------------------------
# Receiver
# ---------------------------------------------------------------------------

DEDUP_WINDOW_MS = 60000


@dataclass
class DriverAlertEvent:
    """One driver-facing alert as logged at the gateway."""

    t_ms: int
    alert_id: int
    label: Label
    priority: Priority
    latency_ms: int
    dedup_count: int = 0

    def log_line(self) -> str:
        return "%d,%016x,%s,%s,%d,%d" % (
            self.t_ms, self.alert_id, self.label.token,
            self.priority.token, self.latency_ms, self.dedup_count)


class Receiver:
    """Gateway side: decode, deduplicate, keep the driver event log."""

    def __init__(self, dedup_window_ms: int = DEDUP_WINDOW_MS):
        if dedup_window_ms < 0:
            raise ConfigError("receiver.dedup_window_ms", "must be >= 0")
        self.dedup_window_ms = dedup_window_ms
        self.events: List[DriverAlertEvent] = []
        self.decode_failures = 0
        self.duplicates = 0
        self._emitted_at: Dict[int, int] = {}
        self._event_by_id: Dict[int, DriverAlertEvent] = {}

    def process(self, t_ms: int, frame: bytes) -> Optional[DriverAlertEvent]:
        """Handle one received frame; returns the event if one was emitted."""
        try:
            alert = decode_payload(frame)
        except CodecError:
            self.decode_failures += 1
            return None
        seen = self._emitted_at.get(alert.alert_id)
        if seen is not None and t_ms - seen <= self.dedup_window_ms:
            self.duplicates += 1
            self._event_by_id[alert.alert_id].dedup_count += 1
            return None
        event = DriverAlertEvent(
            t_ms=t_ms,
            alert_id=alert.alert_id,
            label=alert.label,
            priority=alert.priority,
            latency_ms=t_ms - alert.timestamp_ms,
        )
        self.events.append(event)
        self._emitted_at[alert.alert_id] = t_ms
        self._event_by_id[alert.alert_id] = event
        return event

    def event_log(self) -> List[str]:
        """Append-only log rendered in driver order: priority, then time."""
        ordered = sorted(self.events,
                         key=lambda e: (int(e.priority), e.t_ms, e.alert_id))
        return [e.log_line() for e in ordered]
