"""Leader-to-follower channel with exact constant delay, plus the wire codec.

The same fixed-layout binary codec is used in-process and over UDP, so a
loopback-socket run is bitwise identical to an in-process run.
"""

from __future__ import annotations

import socket
import struct
from collections import deque
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"TQ"
VERSION = 1
KIND_RAW_STATE = 0
KIND_TARGET = 1
KIND_FEEDBACK = 2

_LEADER_STRUCT = struct.Struct("<2sBBId12d")
_FEEDBACK_STRUCT = struct.Struct("<2sBBId3d")
LEADER_PACKET_SIZE = _LEADER_STRUCT.size
FEEDBACK_PACKET_SIZE = _FEEDBACK_STRUCT.size

# Delivery comparisons tolerate one part in 1e9 of a tick so that times
# assembled as k*dt on both sides never straddle the boundary.
_TIME_EPS = 1e-12


class CodecError(ValueError):
    """Malformed wire bytes; `offset` points at the offending byte."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def _vec3(value, name: str) -> tuple[float, float, float]:
    arr = np.asarray(value, dtype=float).reshape(3)
    return (float(arr[0]), float(arr[1]), float(arr[2]))


@dataclass(frozen=True)
class LeaderPacket:
    """Leader-side state (raw or estimated target) plus the gain snapshot."""

    seq: int
    t_send: float
    payload_kind: int  # KIND_RAW_STATE or KIND_TARGET
    position: tuple
    velocity: tuple
    l1: tuple
    l2: tuple

    def __post_init__(self):
        if self.payload_kind not in (KIND_RAW_STATE, KIND_TARGET):
            raise ValueError(f"bad payload kind {self.payload_kind}")
        object.__setattr__(self, "position", _vec3(self.position, "position"))
        object.__setattr__(self, "velocity", _vec3(self.velocity, "velocity"))
        object.__setattr__(self, "l1", _vec3(self.l1, "l1"))
        object.__setattr__(self, "l2", _vec3(self.l2, "l2"))


@dataclass(frozen=True)
class FeedbackPacket:
    """Follower-to-leader environment force message (bilateral sessions)."""

    seq: int
    t_send: float
    f_env: tuple

    def __post_init__(self):
        object.__setattr__(self, "f_env", _vec3(self.f_env, "f_env"))


def encode(packet) -> bytes:
    if isinstance(packet, LeaderPacket):
        return _LEADER_STRUCT.pack(
            MAGIC,
            VERSION,
            packet.payload_kind,
            packet.seq,
            packet.t_send,
            *packet.position,
            *packet.velocity,
            *packet.l1,
            *packet.l2,
        )
    if isinstance(packet, FeedbackPacket):
        return _FEEDBACK_STRUCT.pack(
            MAGIC, VERSION, KIND_FEEDBACK, packet.seq, packet.t_send, *packet.f_env
        )
    raise TypeError(f"cannot encode {type(packet).__name__}")


def decode(buf: bytes):
    """Decode one packet; never reads past the buffer."""
    if len(buf) < 2 or buf[:2] != MAGIC:
        raise CodecError(f"bad magic {buf[:2]!r}", 0)
    if len(buf) < 3:
        raise CodecError("truncated before version byte", 2)
    if buf[2] != VERSION:
        raise CodecError(f"unsupported version {buf[2]}", 2)
    if len(buf) < 4:
        raise CodecError("truncated before kind byte", 3)
    kind = buf[3]
    if kind in (KIND_RAW_STATE, KIND_TARGET):
        if len(buf) != LEADER_PACKET_SIZE:
            raise CodecError(
                f"leader packet must be {LEADER_PACKET_SIZE} bytes, got {len(buf)}",
                min(len(buf), LEADER_PACKET_SIZE),
            )
        _, _, _, seq, t_send, *vals = _LEADER_STRUCT.unpack(buf)
        return LeaderPacket(
            seq=seq,
            t_send=t_send,
            payload_kind=kind,
            position=vals[0:3],
            velocity=vals[3:6],
            l1=vals[6:9],
            l2=vals[9:12],
        )
    if kind == KIND_FEEDBACK:
        if len(buf) != FEEDBACK_PACKET_SIZE:
            raise CodecError(
                f"feedback packet must be {FEEDBACK_PACKET_SIZE} bytes, got {len(buf)}",
                min(len(buf), FEEDBACK_PACKET_SIZE),
            )
        _, _, _, seq, t_send, *f = _FEEDBACK_STRUCT.unpack(buf)
        return FeedbackPacket(seq=seq, t_send=t_send, f_env=tuple(f))
    raise CodecError(f"unknown packet kind {kind}", 3)


@dataclass
class DelayLine:
    """Constant-delay FIFO: a packet sent at t is deliverable at exactly t + delta."""

    delta: float = 0.1
    queue: deque = field(default_factory=deque)
    _last_enqueue: float = float("-inf")

    def enqueue(self, packet, t_now: float) -> "DelayLine":
        if t_now < self._last_enqueue:
            raise ValueError(
                f"out-of-order enqueue: t={t_now} after t={self._last_enqueue}"
            )
        self._last_enqueue = t_now
        self.queue.append((t_now + self.delta, packet))
        return self

    def poll_latest(self, t_now: float):
        """Newest packet whose release time has passed; older ones are dropped."""
        latest = None
        while self.queue and self.queue[0][0] <= t_now + _TIME_EPS:
            latest = self.queue.popleft()[1]
        return latest


def enqueue(line: DelayLine, packet, t_now: float) -> DelayLine:
    return line.enqueue(packet, t_now)


def poll_latest(line: DelayLine, t_now: float):
    return line.poll_latest(t_now)


class UdpEndpoint:
    """Non-blocking datagram endpoint speaking the packet codec.

    Loss is tolerated by the consumer's latest-wins semantics; in loopback
    use the kernel preserves every datagram, so runs stay deterministic.
    """

    def __init__(self, bind_port: int = 0, host: str = "127.0.0.1"):
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self.sock.bind((host, bind_port))
        self.sock.setblocking(False)
        self.host = host
        self.port = self.sock.getsockname()[1]

    def send(self, packet, port: int, host: str | None = None) -> None:
        self.sock.sendto(encode(packet), (host or self.host, port))

    def poll(self) -> list:
        """Drain and decode every pending datagram."""
        out = []
        while True:
            try:
                buf, _ = self.sock.recvfrom(4096)
            except BlockingIOError:
                return out
            out.append(decode(buf))

    def close(self) -> None:
        self.sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
