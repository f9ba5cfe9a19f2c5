"""Shared value types and the binary wire format for data and alert messages."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

NodeId = int

_DATA_LAYOUT = struct.Struct("<IddId")  # origin, iR, aR, nR, timestamp
_ALERT_LAYOUT = struct.Struct("<IdId")  # attacker, reading, detector, detected_at

DATA_MESSAGE_SIZE = _DATA_LAYOUT.size
ALERT_MESSAGE_SIZE = _ALERT_LAYOUT.size

_U32_MAX = 2**32 - 1


class ConfinitError(Exception):
    """Base class for errors raised by this package."""


class MalformedMessage(ConfinitError, ValueError):
    """Raised when bytes on the wire do not decode to a valid message.

    Receivers drop such input silently; the exception only exists so the
    decoder never has to return a half-built message.
    """


def _check_node_id(value: int, field: str) -> None:
    if isinstance(value, bool) or not isinstance(value, int):
        raise TypeError(f"{field} must be an int, got {type(value).__name__}")
    if not 0 <= value <= _U32_MAX:
        raise ValueError(f"{field} must fit in u32, got {value}")


def _check_finite(value: float, field: str) -> None:
    if not math.isfinite(value):
        raise ValueError(f"{field} must be finite, got {value!r}")


@dataclass(frozen=True)
class Reading:
    value: float
    timestamp: float = 0.0

    def __post_init__(self) -> None:
        _check_finite(self.value, "value")
        _check_finite(self.timestamp, "timestamp")
        if self.timestamp < 0:
            raise ValueError(f"timestamp must be >= 0, got {self.timestamp}")


@dataclass(frozen=True)
class DataMessage:
    """Periodic broadcast carrying ``<Id, L_ind, L_agr, |N_viz|>``."""

    origin: NodeId
    individual_reading: Reading
    aggregate_reading: float
    neighbor_count: int

    def __post_init__(self) -> None:
        _check_node_id(self.origin, "origin")
        _check_finite(self.aggregate_reading, "aggregate_reading")
        _check_node_id(self.neighbor_count, "neighbor_count")

    @property
    def iR(self) -> float:
        return self.individual_reading.value

    @property
    def aR(self) -> float:
        return self.aggregate_reading

    @property
    def nR(self) -> int:
        return self.neighbor_count


@dataclass(frozen=True)
class AlertMessage:
    attacker_id: NodeId
    attacker_reading: float
    detector_id: NodeId
    detected_at: float

    def __post_init__(self) -> None:
        _check_node_id(self.attacker_id, "attacker_id")
        _check_node_id(self.detector_id, "detector_id")
        if self.attacker_id == self.detector_id:
            raise ValueError("a node cannot report itself as attacker")
        _check_finite(self.attacker_reading, "attacker_reading")
        _check_finite(self.detected_at, "detected_at")
        if self.detected_at < 0:
            raise ValueError("detected_at must be >= 0")


@dataclass(frozen=True)
class NeighborRecord:
    """Latest payload heard from one neighbor; replaced wholesale on every message."""

    iR: float
    aR: float
    nR: int
    last_seen: float = 0.0

    @classmethod
    def from_message(cls, msg: DataMessage, now: float) -> NeighborRecord:
        return cls(msg.iR, msg.aR, msg.nR, now)


def encode_data_message(msg: DataMessage) -> bytes:
    return _DATA_LAYOUT.pack(
        msg.origin,
        msg.individual_reading.value,
        msg.aggregate_reading,
        msg.neighbor_count,
        msg.individual_reading.timestamp,
    )


def decode_data_message(data: bytes) -> DataMessage:
    if len(data) != DATA_MESSAGE_SIZE:
        raise MalformedMessage(f"expected {DATA_MESSAGE_SIZE} bytes, got {len(data)}")
    origin, ir, ar, nr, ts = _DATA_LAYOUT.unpack(data)
    try:
        return DataMessage(origin, Reading(ir, ts), ar, nr)
    except ValueError as exc:
        raise MalformedMessage(str(exc)) from None


def encode_alert_message(alert: AlertMessage) -> bytes:
    return _ALERT_LAYOUT.pack(
        alert.attacker_id, alert.attacker_reading, alert.detector_id, alert.detected_at
    )


def decode_alert_message(data: bytes) -> AlertMessage:
    if len(data) != ALERT_MESSAGE_SIZE:
        raise MalformedMessage(f"expected {ALERT_MESSAGE_SIZE} bytes, got {len(data)}")
    try:
        return AlertMessage(*_ALERT_LAYOUT.unpack(data))
    except ValueError as exc:
        raise MalformedMessage(str(exc)) from None
