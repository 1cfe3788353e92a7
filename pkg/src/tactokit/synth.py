"""Sample-accurate waveform rendering and device scheduling for stroke patterns.

Each burst is a sine carrier scaled by the cue's drive level. Rough cues are
amplitude modulated by an on/off square wave (12.5 Hz nominal), which is what
makes the vibration feel rougher than the unmodulated carrier. Raised-cosine
ramps are applied at burst boundaries and at every modulation edge; the
reference hardware gets its ramps for free from motor mechanics, so the ramp
length here is a renderer calibration parameter, not a hardware fact.

Rendering is deterministic: identical inputs produce bit-identical buffers.
"""

from __future__ import annotations

import json
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cues import Cue, CueMap
from .patterns import (
    GridGeometry,
    ReferenceFrame,
    StrokePattern,
    TimingParams,
    map_to_channels,
    pattern_duration,
)

N_CHANNELS = 4


class RenderError(ValueError):
    """Invalid render parameters (e.g. sample rate below Nyquist)."""


@dataclass(frozen=True)
class RenderParams:
    """Renderer configuration.

    ``mod_duty`` and the modulation phase (each burst starts in the "on"
    half) are calibration choices; the hardware reference specifies only the
    modulation frequency.
    """

    sample_rate_hz: int = 48000
    ramp_s: float = 0.005
    mod_duty: float = 0.5

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise RenderError("sample_rate_hz must be positive")
        if not (0 < self.mod_duty < 1):
            raise RenderError("mod_duty must be in (0, 1)")
        if self.ramp_s < 0:
            raise RenderError("ramp_s must be >= 0")

    def validate_for(self, cue: Cue, t: TimingParams) -> None:
        if self.sample_rate_hz < 4 * cue.carrier_hz:
            raise RenderError(
                f"sample rate {self.sample_rate_hz} Hz below 4x carrier "
                f"{cue.carrier_hz} Hz"
            )
        if self.ramp_s > t.burst_s / 2:
            raise RenderError("ramp_s must not exceed half the burst duration")


@dataclass(frozen=True)
class WaveBuffer:
    """Multichannel sampled waveform; data shape is (channels, samples)."""

    sample_rate_hz: int
    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 2:
            raise RenderError("WaveBuffer data must be 2-D (channels, samples)")
        if np.max(np.abs(self.data), initial=0.0) > 1.0 + 1e-12:
            raise RenderError("WaveBuffer samples must lie in [-1, 1]")

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def samples_per_channel(self) -> int:
        return self.data.shape[1]


ACTION_ON = "ON"
ACTION_OFF = "OFF"


@dataclass(frozen=True)
class ScheduleEvent:
    """One timestamped channel on/off transition with its cue parameters."""

    t_ms: int
    channel: int
    action: str
    carrier_hz: float
    rough: bool
    mod_hz: float
    level: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "t_ms": self.t_ms,
                "ch": self.channel,
                "action": self.action,
                "carrier_hz": self.carrier_hz,
                "rough": self.rough,
                "mod_hz": self.mod_hz,
                "level": self.level,
            }
        )

    @classmethod
    def from_json(cls, line: str) -> "ScheduleEvent":
        d = json.loads(line)
        return cls(
            t_ms=d["t_ms"],
            channel=d["ch"],
            action=d["action"],
            carrier_hz=d["carrier_hz"],
            rough=d["rough"],
            mod_hz=d["mod_hz"],
            level=d["level"],
        )


@dataclass(frozen=True)
class DeviceSchedule:
    """Ordered ON/OFF event list driving the tactor array.

    Events are sorted by timestamp, alternate ON/OFF per channel, and the
    schedule ends with every channel OFF.
    """

    events: tuple[ScheduleEvent, ...]

    def __post_init__(self):
        last_t = -1
        state = [ACTION_OFF] * N_CHANNELS
        for ev in self.events:
            if ev.t_ms < last_t:
                raise RenderError("schedule events must be sorted by t_ms")
            last_t = ev.t_ms
            if not 0 <= ev.channel < N_CHANNELS:
                raise RenderError(f"channel {ev.channel} out of range")
            if ev.action == state[ev.channel]:
                raise RenderError(
                    f"channel {ev.channel}: two consecutive {ev.action} events"
                )
            state[ev.channel] = ev.action
        if any(s == ACTION_ON for s in state):
            raise RenderError("schedule must end with all channels OFF")

    def __len__(self) -> int:
        return len(self.events)

    @property
    def duration_ms(self) -> int:
        return self.events[-1].t_ms if self.events else 0

    def write_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for ev in self.events:
                f.write(ev.to_json() + "\n")


def _raised_cosine_rise(n: int) -> np.ndarray:
    # Half-cosine 0 -> 1 over n samples.
    return 0.5 * (1.0 - np.cos(np.pi * (np.arange(n) + 0.5) / n))


def _edge_ramps(env: np.ndarray, n_ramp: int) -> np.ndarray:
    """Apply raised-cosine rise/fall at the ends of a unit envelope."""
    if n_ramp <= 0 or env.size == 0:
        return env
    n_ramp = min(n_ramp, env.size // 2)
    rise = _raised_cosine_rise(n_ramp)
    env[:n_ramp] *= rise
    env[-n_ramp:] *= rise[::-1]
    return env


def _modulation_envelope(n: int, rate: int, mod_hz: float, duty: float,
                         n_ramp: int) -> np.ndarray:
    """On/off square envelope with raised-cosine crossfades at each edge.

    Crossfades are centered on the nominal edge times so that the envelope's
    mean stays at the duty cycle; each burst starts in the "on" half.
    """
    period = rate / mod_hz
    on_len = duty * period
    env = np.zeros(n)
    half = n_ramp / 2.0
    k = 0
    while True:
        a = k * period          # nominal on-edge (samples)
        b = a + on_len          # nominal off-edge
        if a - half >= n:
            break
        lo = max(int(np.floor(a - half)), 0)
        hi = min(int(np.ceil(b + half)) + 1, n)
        if hi > lo:
            x = np.arange(lo, hi, dtype=float)
            if n_ramp > 0:
                rise = np.clip((x - (a - half)) / n_ramp, 0.0, 1.0)
                fall = np.clip(((b + half) - x) / n_ramp, 0.0, 1.0)
                seg = (0.5 * (1 - np.cos(np.pi * rise))) * (0.5 * (1 - np.cos(np.pi * fall)))
            else:
                seg = ((x >= a) & (x < b)).astype(float)
            env[lo:hi] = np.maximum(env[lo:hi], seg)
        k += 1
    return env


def render_burst(cue: Cue, t: TimingParams, rp: RenderParams | None = None) -> WaveBuffer:
    """Render one single-channel burst for a cue."""
    rp = rp or RenderParams()
    rp.validate_for(cue, t)
    rate = rp.sample_rate_hz
    n = round(t.burst_s * rate)
    n_ramp = round(rp.ramp_s * rate)
    ts = np.arange(n) / rate
    carrier = np.sin(2.0 * np.pi * cue.carrier_hz * ts)
    env = np.ones(n)
    if cue.rough:
        env = _modulation_envelope(n, rate, cue.mod_hz, rp.mod_duty, n_ramp)
    env = _edge_ramps(env, n_ramp)
    data = (cue.drive_level * carrier * env)[np.newaxis, :]
    return WaveBuffer(sample_rate_hz=rate, data=data)


def render_pattern(
    pattern: StrokePattern,
    cues: CueMap,
    rf: ReferenceFrame,
    t: TimingParams,
    rp: RenderParams | None = None,
    geom: GridGeometry | None = None,
) -> WaveBuffer:
    """Render a full pattern into a 4-channel buffer.

    Burst k occupies [k*(burst+isi), k*(burst+isi)+burst) on exactly the
    channel its corner maps to; everything else is zero.
    """
    rp = rp or RenderParams()
    rate = rp.sample_rate_hz
    channels = map_to_channels(pattern, rf, geom)
    total = round(pattern_duration(pattern, t) * rate)
    data = np.zeros((N_CHANNELS, total))
    step = t.burst_s + t.isi_s
    for k, (corner, ch) in enumerate(zip(pattern.corners, channels)):
        burst = render_burst(cues.cue(corner), t, rp)
        start = round(k * step * rate)
        data[ch, start : start + burst.samples_per_channel] = burst.data[0]
    return WaveBuffer(sample_rate_hz=rate, data=data)


def compile_schedule(
    pattern: StrokePattern,
    cues: CueMap,
    rf: ReferenceFrame,
    t: TimingParams,
    geom: GridGeometry | None = None,
) -> DeviceSchedule:
    """Compile a pattern to timestamped ON/OFF events (one pair per burst)."""
    channels = map_to_channels(pattern, rf, geom)
    burst_ms = round(t.burst_s * 1000)
    step_ms = t.burst_s + t.isi_s
    events = []
    for k, (corner, ch) in enumerate(zip(pattern.corners, channels)):
        cue = cues.cue(corner)
        on_ms = round(k * step_ms * 1000)
        common = dict(
            channel=ch,
            carrier_hz=cue.carrier_hz,
            rough=cue.rough,
            mod_hz=cue.mod_hz if cue.rough else 0.0,
            level=cue.drive_level,
        )
        events.append(ScheduleEvent(t_ms=on_ms, action=ACTION_ON, **common))
        events.append(ScheduleEvent(t_ms=on_ms + burst_ms, action=ACTION_OFF, **common))
    # OFF before the next ON when an ISI of zero makes timestamps collide.
    events.sort(key=lambda ev: (ev.t_ms, ev.action == ACTION_ON))
    return DeviceSchedule(events=tuple(events))


def render_schedule(schedule: DeviceSchedule, rp: RenderParams | None = None) -> WaveBuffer:
    """Reconstruct a 4-channel buffer from a device schedule."""
    rp = rp or RenderParams()
    rate = rp.sample_rate_hz
    total = round(schedule.duration_ms * rate / 1000)
    data = np.zeros((N_CHANNELS, max(total, 0)))
    pending: dict[int, ScheduleEvent] = {}
    for ev in schedule.events:
        if ev.action == ACTION_ON:
            pending[ev.channel] = ev
            continue
        on = pending.pop(ev.channel)
        burst_s = (ev.t_ms - on.t_ms) / 1000.0
        cue = Cue(
            carrier_hz=on.carrier_hz,
            rough=on.rough,
            mod_hz=on.mod_hz if on.rough else 12.5,
            drive_level=on.level,
        )
        burst = render_burst(cue, TimingParams(burst_s=burst_s), rp)
        start = round(on.t_ms * rate / 1000)
        data[ev.channel, start : start + burst.samples_per_channel] = burst.data[0]
    return WaveBuffer(sample_rate_hz=rate, data=data)


def export_wav(buf: WaveBuffer, path: str | Path) -> None:
    """Write a buffer as RIFF PCM, 16-bit little-endian, channel i = tactor i."""
    quantized = np.clip(np.rint(buf.data * 32767.0), -32768, 32767).astype("<i2")
    frames = quantized.T.tobytes()  # interleaved
    with wave.open(str(path), "wb") as w:
        w.setnchannels(buf.channels)
        w.setsampwidth(2)
        w.setframerate(buf.sample_rate_hz)
        w.writeframes(frames)


def read_wav(path: str | Path) -> WaveBuffer:
    """Read a PCM wav file back into a float buffer (inverse of export_wav)."""
    with wave.open(str(path), "rb") as w:
        if w.getsampwidth() != 2:
            raise RenderError("only 16-bit PCM is supported")
        raw = w.readframes(w.getnframes())
        rate = w.getframerate()
        n_ch = w.getnchannels()
    flat = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32767.0
    data = flat.reshape(-1, n_ch).T
    return WaveBuffer(sample_rate_hz=rate, data=np.clip(data, -1.0, 1.0))
