"""Schedule playback to output sinks: serial hardware, wav files, or virtual.

Wire protocol: fixed 10-byte frames, fire-and-forget (the drive path is
one-way and the firmware stays trivial; an ACK mode is a future extension).
Timestamps are relative to schedule start and the host clock is
authoritative.

Frame layout (little-endian):

    [0] magic 0xA5
    [1] seq (mod 256)
    [2] control: bit 2 = action (1=ON), bits 0-1 = channel
    [3:5] carrier_hz, u16
    [5] level, 0..255
    [6] rough, 0/1
    [7:9] mod_hz x 10, u16 (125 encodes 12.5 Hz)
    [9] checksum: XOR of bytes 0..8
"""

from __future__ import annotations

import os
import struct
import time
from dataclasses import dataclass
from pathlib import Path

from .synth import ACTION_OFF, ACTION_ON, DeviceSchedule, RenderParams, ScheduleEvent

FRAME_LEN = 10
MAGIC = 0xA5


class FrameError(ValueError):
    """Malformed wire frame: bad magic, bad checksum, or wrong length."""


class PlaybackError(RuntimeError):
    """Sink write failure during playback (after the abort OFF attempt)."""


@dataclass(frozen=True)
class WireEvent:
    """A channel transition as represented on the wire (integer fields)."""

    channel: int
    action: str  # ACTION_ON / ACTION_OFF
    carrier_hz: int
    level: int  # 0..255
    rough: bool
    mod_hz_x10: int

    def __post_init__(self):
        if not 0 <= self.channel <= 3:
            raise FrameError(f"channel {self.channel} out of range")
        if self.action not in (ACTION_ON, ACTION_OFF):
            raise FrameError(f"bad action {self.action!r}")
        if not 0 <= self.carrier_hz <= 0xFFFF:
            raise FrameError("carrier_hz out of u16 range")
        if not 0 <= self.level <= 255:
            raise FrameError("level out of byte range")
        if not 0 <= self.mod_hz_x10 <= 0xFFFF:
            raise FrameError("mod_hz_x10 out of u16 range")

    @classmethod
    def from_schedule_event(cls, ev: ScheduleEvent) -> "WireEvent":
        return cls(
            channel=ev.channel,
            action=ev.action,
            carrier_hz=round(ev.carrier_hz),
            level=round(ev.level * 255),
            rough=ev.rough,
            mod_hz_x10=round(ev.mod_hz * 10),
        )


def _xor(data: bytes) -> int:
    out = 0
    for b in data:
        out ^= b
    return out


def encode_frame(event: WireEvent, seq: int = 0) -> bytes:
    """Pack an event into one 10-byte frame."""
    control = ((1 if event.action == ACTION_ON else 0) << 2) | event.channel
    body = struct.pack(
        "<BBBHBBH",
        MAGIC,
        seq % 256,
        control,
        event.carrier_hz,
        event.level,
        1 if event.rough else 0,
        event.mod_hz_x10,
    )
    return body + bytes([_xor(body)])


def decode_frame(frame: bytes) -> tuple[WireEvent, int]:
    """Unpack a 10-byte frame; returns (event, seq). Verifies checksum."""
    if len(frame) != FRAME_LEN:
        raise FrameError(f"frame must be {FRAME_LEN} bytes, got {len(frame)}")
    if frame[0] != MAGIC:
        raise FrameError(f"bad magic 0x{frame[0]:02X}")
    if _xor(frame[:-1]) != frame[-1]:
        raise FrameError("checksum mismatch")
    _, seq, control, carrier, level, rough, mod_x10 = struct.unpack("<BBBHBBH", frame[:-1])
    if control & ~0b111:
        raise FrameError(f"reserved control bits set: 0x{control:02X}")
    event = WireEvent(
        channel=control & 0b11,
        action=ACTION_ON if control & 0b100 else ACTION_OFF,
        carrier_hz=carrier,
        level=level,
        rough=bool(rough),
        mod_hz_x10=mod_x10,
    )
    return event, seq


class Sink:
    """Base output sink. Subclasses emit frames or consume whole schedules."""

    kind = "abstract"
    timing_tolerance_ms = 5.0
    realtime = True

    def emit(self, frame: bytes) -> None:
        raise NotImplementedError

    def close(self) -> None:
        pass


class VirtualSink(Sink):
    """Records (wall-time, frame) pairs for test assertions.

    ``realtime=False`` skips the inter-frame sleeps; recorded times then
    reflect emission order only.
    """

    kind = "virtual"

    def __init__(self, realtime: bool = True):
        self.realtime = realtime
        self.recorded: list[tuple[float, bytes]] = []

    def emit(self, frame: bytes) -> None:
        self.recorded.append((time.perf_counter(), frame))

    def events(self) -> list[WireEvent]:
        return [decode_frame(f)[0] for _, f in self.recorded]


class SerialSink(Sink):
    """Writes frames to a serial device (115200 baud, 8N1).

    Uses the raw device file; line settings are applied with termios when
    the target is a tty, so no external serial library is needed.
    """

    kind = "serial"

    def __init__(self, port: str):
        self.port = port
        self._fd = os.open(port, os.O_WRONLY | os.O_NOCTTY)
        if os.isatty(self._fd):
            self._configure_tty()

    def _configure_tty(self) -> None:
        import termios

        attrs = termios.tcgetattr(self._fd)
        attrs[0] = 0  # iflag
        attrs[1] = 0  # oflag
        attrs[2] = termios.CS8 | termios.CREAD | termios.CLOCAL  # cflag: 8N1
        attrs[3] = 0  # lflag
        attrs[4] = termios.B115200
        attrs[5] = termios.B115200
        termios.tcsetattr(self._fd, termios.TCSANOW, attrs)

    def emit(self, frame: bytes) -> None:
        os.write(self._fd, frame)

    def close(self) -> None:
        if self._fd >= 0:
            os.close(self._fd)
            self._fd = -1


class WavFileSink(Sink):
    """Renders the schedule to a 4-channel wav file instead of streaming it."""

    kind = "wavfile"
    realtime = False

    def __init__(self, path: str | Path, render_params: RenderParams | None = None):
        self.path = Path(path)
        self.render_params = render_params or RenderParams()

    def write_schedule(self, schedule: DeviceSchedule) -> None:
        from .synth import export_wav, render_schedule

        export_wav(render_schedule(schedule, self.render_params), self.path)


@dataclass(frozen=True)
class PlaybackReport:
    """Per-event lateness relative to the schedule, in milliseconds."""

    scheduled_ms: tuple[int, ...]
    lateness_ms: tuple[float, ...]
    tolerance_ms: float

    @property
    def n_events(self) -> int:
        return len(self.scheduled_ms)

    @property
    def max_abs_lateness_ms(self) -> float:
        return max((abs(x) for x in self.lateness_ms), default=0.0)

    @property
    def overruns(self) -> list[int]:
        """Indices of events later than the sink's timing tolerance."""
        return [i for i, x in enumerate(self.lateness_ms) if x > self.tolerance_ms]


def _sleep_until(deadline: float) -> None:
    # Coarse sleep, then a short spin for sub-millisecond settle.
    while True:
        remaining = deadline - time.perf_counter()
        if remaining <= 0:
            return
        if remaining > 0.002:
            time.sleep(remaining - 0.002)
        else:
            time.sleep(0)


def play(schedule: DeviceSchedule, sink: Sink) -> PlaybackReport:
    """Emit a schedule's frames in order at their timestamps.

    Completes after the final OFF. A sink write failure aborts playback: an
    all-OFF frame is attempted for every channel still ON, then
    PlaybackError is raised. Timing overruns beyond the sink tolerance are
    reported, not fatal.
    """
    if isinstance(sink, WavFileSink):
        sink.write_schedule(schedule)
        zeros = tuple(0.0 for _ in schedule.events)
        return PlaybackReport(
            scheduled_ms=tuple(ev.t_ms for ev in schedule.events),
            lateness_ms=zeros,
            tolerance_ms=sink.timing_tolerance_ms,
        )

    on_events: dict[int, ScheduleEvent] = {}
    lateness: list[float] = []
    start = time.perf_counter()
    for seq, ev in enumerate(schedule.events):
        deadline = start + ev.t_ms / 1000.0
        if sink.realtime:
            _sleep_until(deadline)
        frame = encode_frame(WireEvent.from_schedule_event(ev), seq)
        try:
            sink.emit(frame)
        except Exception as exc:
            _abort_all_off(sink, on_events, seq)
            raise PlaybackError(f"sink write failed at event {seq}: {exc}") from exc
        lateness.append((time.perf_counter() - deadline) * 1000.0)
        if ev.action == ACTION_ON:
            on_events[ev.channel] = ev
        else:
            on_events.pop(ev.channel, None)
    return PlaybackReport(
        scheduled_ms=tuple(ev.t_ms for ev in schedule.events),
        lateness_ms=tuple(lateness),
        tolerance_ms=sink.timing_tolerance_ms,
    )


def _abort_all_off(sink: Sink, on_events: dict[int, ScheduleEvent], seq: int) -> None:
    for ch, on_ev in on_events.items():
        off = WireEvent(
            channel=ch,
            action=ACTION_OFF,
            carrier_hz=round(on_ev.carrier_hz),
            level=0,
            rough=on_ev.rough,
            mod_hz_x10=round(on_ev.mod_hz * 10),
        )
        try:
            sink.emit(encode_frame(off, seq))
            seq += 1
        except Exception:
            pass  # best effort; the original failure is re-raised by play()
