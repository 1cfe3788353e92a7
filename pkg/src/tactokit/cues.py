"""Per-tactor vibrotactile cue assignment (Baseline / 2-Hetero / 4-Hetero).

Cues combine two perceptual dimensions: carrier frequency (170 vs 300 Hz)
and roughness (a low-frequency on/off amplitude modulation of the carrier).
Roughness varies along the wrist-longitudinal grid axis, where spatial
acuity is poorest; frequency varies along the transverse axis.

Nominal drive voltages (5 V for the 170 Hz carrier, 9 V for 300 Hz, chosen
to balance perceived intensity on the reference hardware) are carried as
metadata only; rendered amplitude is the normalized ``drive_level``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping

from .patterns import Corner

LOW_CARRIER_HZ = 170.0
HIGH_CARRIER_HZ = 300.0
ROUGHNESS_MOD_HZ = 12.5

# Nominal drive volts per carrier, recorded for device metadata.
NOMINAL_VOLTS = {LOW_CARRIER_HZ: 5.0, HIGH_CARRIER_HZ: 9.0}


@dataclass(frozen=True)
class Cue:
    """One tactor's vibration identity."""

    carrier_hz: float = LOW_CARRIER_HZ
    rough: bool = False
    mod_hz: float = ROUGHNESS_MOD_HZ
    drive_level: float = 1.0

    def __post_init__(self):
        if self.carrier_hz <= 0:
            raise ValueError("carrier_hz must be > 0")
        if self.rough and not (0 < self.mod_hz < self.carrier_hz):
            raise ValueError("mod_hz must lie in (0, carrier_hz) for rough cues")
        if not (0 <= self.drive_level <= 1):
            raise ValueError("drive_level must be in [0, 1]")

    @property
    def nominal_volts(self) -> float | None:
        return NOMINAL_VOLTS.get(self.carrier_hz)


class Method(Enum):
    """Cue-assignment method: how many unique vibrations the grid uses."""

    BASELINE = "baseline"
    TWO_HETERO = "2-hetero"
    FOUR_HETERO = "4-hetero"

    @classmethod
    def parse(cls, token: str) -> "Method":
        token = token.strip().lower()
        for m in cls:
            if token in (m.value, m.name.lower()):
                return m
        raise ValueError(f"unknown method {token!r}")


_EXPECTED_CUE_COUNT = {Method.BASELINE: 1, Method.TWO_HETERO: 2, Method.FOUR_HETERO: 4}


@dataclass(frozen=True)
class AxisConfig:
    """Names which grid axis runs along the forearm (wrist-longitudinal).

    ``longitudinal="vertical"`` means the TL-BL / TR-BR axis is longitudinal
    (the default for the reference wear position); "horizontal" swaps the
    roles. ``rough_end`` picks which longitudinal row/column carries the
    rough cues (default: the distal end, i.e. the pattern-space top for a
    vertical longitudinal axis). ``high_freq_side`` picks which transverse
    side carries the 300 Hz carrier under 4-Hetero.
    """

    longitudinal: str = "vertical"
    rough_end: str = "top"
    high_freq_side: str = "right"

    def __post_init__(self):
        if self.longitudinal not in ("vertical", "horizontal"):
            raise ValueError("longitudinal must be 'vertical' or 'horizontal'")
        valid_long = ("top", "bottom") if self.longitudinal == "vertical" else ("left", "right")
        valid_trans = ("left", "right") if self.longitudinal == "vertical" else ("top", "bottom")
        if self.rough_end not in valid_long:
            raise ValueError(f"rough_end must be one of {valid_long}")
        if self.high_freq_side not in valid_trans:
            raise ValueError(f"high_freq_side must be one of {valid_trans}")

    def longitudinal_coord(self, corner: Corner) -> int:
        """0/1 position of a corner along the longitudinal axis."""
        if self.longitudinal == "vertical":
            return 0 if corner in (Corner.TL, Corner.TR) else 1
        return 0 if corner in (Corner.TL, Corner.BL) else 1

    def transverse_coord(self, corner: Corner) -> int:
        """0/1 position of a corner along the transverse axis."""
        if self.longitudinal == "vertical":
            return 0 if corner in (Corner.TL, Corner.BL) else 1
        return 0 if corner in (Corner.TL, Corner.TR) else 1

    def longitudinal_neighbor(self, corner: Corner) -> Corner:
        """The corner differing from ``corner`` only along the longitudinal axis."""
        for other in Corner:
            if (
                other != corner
                and self.transverse_coord(other) == self.transverse_coord(corner)
            ):
                return other
        raise AssertionError("unreachable")

    def transverse_neighbor(self, corner: Corner) -> Corner:
        for other in Corner:
            if (
                other != corner
                and self.longitudinal_coord(other) == self.longitudinal_coord(corner)
            ):
                return other
        raise AssertionError("unreachable")

    def _rough_coord(self) -> int:
        return 0 if self.rough_end in ("top", "left") else 1

    def _high_freq_coord(self) -> int:
        return 0 if self.high_freq_side in ("top", "left") else 1


@dataclass(frozen=True)
class CueMap:
    """Method plus the per-corner cue assignment it produced."""

    method: Method
    by_corner: Mapping[Corner, Cue]
    axis: AxisConfig = AxisConfig()

    def __post_init__(self):
        if set(self.by_corner.keys()) != set(Corner):
            raise ValueError("by_corner must cover all four corners")
        # Distinctness counts perceptual identities (carrier, roughness) so
        # that per-corner gain overrides don't change the method's cue count.
        distinct = len({(c.carrier_hz, c.rough) for c in self.by_corner.values()})
        expected = _EXPECTED_CUE_COUNT[self.method]
        if distinct != expected:
            raise ValueError(
                f"{self.method.value} requires {expected} distinct cues, got {distinct}"
            )

    def cue(self, corner: Corner) -> Cue:
        return self.by_corner[corner]

    def with_overrides(self, overrides: Mapping[Corner, Cue]) -> "CueMap":
        """Replace individual corner cues (config key ``cue_overrides``).

        An override that changes the method's (carrier, roughness) cue
        cardinality is a different method and is rejected.
        """
        merged = dict(self.by_corner)
        merged.update(overrides)
        return replace(self, by_corner=merged)


def assign_cues(method: Method, axis: AxisConfig | None = None) -> CueMap:
    """Build the per-corner cue map for a cue-assignment method.

    Baseline: one smooth 170 Hz cue everywhere. 2-Hetero: roughness differs
    between the two longitudinal positions, carrier fixed at 170 Hz.
    4-Hetero: roughness varies along the longitudinal axis and carrier
    (170 vs 300 Hz) along the transverse axis, yielding all four
    (frequency, roughness) combinations.
    """
    axis = axis or AxisConfig()
    by_corner: dict[Corner, Cue] = {}
    for corner in Corner:
        rough = False
        carrier = LOW_CARRIER_HZ
        if method in (Method.TWO_HETERO, Method.FOUR_HETERO):
            rough = axis.longitudinal_coord(corner) == axis._rough_coord()
        if method is Method.FOUR_HETERO:
            if axis.transverse_coord(corner) == axis._high_freq_coord():
                carrier = HIGH_CARRIER_HZ
        by_corner[corner] = Cue(carrier_hz=carrier, rough=rough)
    return CueMap(method=method, by_corner=by_corner, axis=axis)


def cue_distinctness(a: Cue, b: Cue) -> int:
    """Number of perceptual dimensions (carrier class, roughness) that differ."""
    return int(a.carrier_hz != b.carrier_hz) + int(a.rough != b.rough)
