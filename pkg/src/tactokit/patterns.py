"""Tactor grid, stroke patterns, shipped pattern sets, and reference frames.

A stroke pattern is an ordered sequence of logical grid corners traced on a
2x2 tactor array, one burst per corner. Patterns live in a device-independent
coordinate frame; :func:`map_to_channels` applies a reference-frame rotation
and the grid's corner-to-channel wiring to obtain physical channel indices.

Pattern sets ship as text files (one pattern per line, see
:func:`load_pattern_set`); the data file, not code, is the source of truth
for the letterforms.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Mapping


class Corner(Enum):
    """Logical grid corner in the pattern coordinate frame.

    The canonical sort order is TL < TR < BL < BR.
    """

    TL = 0
    TR = 1
    BL = 2
    BR = 3

    def __lt__(self, other: "Corner") -> bool:
        if not isinstance(other, Corner):
            return NotImplemented
        return self.value < other.value

    @classmethod
    def parse(cls, token: str) -> "Corner":
        try:
            return cls[token]
        except KeyError:
            raise ValueError(f"invalid corner token {token!r}") from None


# One counterclockwise quarter turn of the pattern, viewed from above the
# dorsal left wrist: the corner that was top-left ends up bottom-left.
_CCW_QUARTER_TURN: dict[Corner, Corner] = {
    Corner.TL: Corner.BL,
    Corner.BL: Corner.BR,
    Corner.BR: Corner.TR,
    Corner.TR: Corner.TL,
}


def rotate_corner(corner: Corner, quarter_turns: int) -> Corner:
    """Rotate a logical corner by the given number of CCW quarter turns."""
    out = corner
    for _ in range(quarter_turns % 4):
        out = _CCW_QUARTER_TURN[out]
    return out


class PatternError(ValueError):
    """A pattern or pattern-set invariant was violated."""


class PatternFormatError(PatternError):
    """Parse failure in the pattern-set text format; carries a line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class StrokePattern:
    """A labeled ordered sequence of grid corners (one burst per corner).

    Corners may repeat non-consecutively (several letterforms revisit a
    corner) but never twice in a row, and a pattern has at least two corners.
    """

    label: str
    corners: tuple[Corner, ...]
    tags: frozenset[str] = frozenset()

    def __post_init__(self):
        if not self.label or any(c.isspace() or c in ":#" for c in self.label):
            raise PatternError(f"bad pattern label {self.label!r}")
        if len(self.corners) < 2:
            raise PatternError(f"pattern {self.label!r}: needs at least 2 corners")
        for a, b in zip(self.corners, self.corners[1:]):
            if a == b:
                raise PatternError(
                    f"pattern {self.label!r}: consecutive repeat of corner {a.name}"
                )
        object.__setattr__(self, "corners", tuple(self.corners))
        object.__setattr__(self, "tags", frozenset(self.tags))

    def __len__(self) -> int:
        return len(self.corners)


@dataclass(frozen=True)
class PatternSet:
    """A named, versioned collection of stroke patterns with unique labels."""

    name: str
    patterns: tuple[StrokePattern, ...]
    version: str = "1.0"

    def __post_init__(self):
        if not self.patterns:
            raise PatternError(f"pattern set {self.name!r} is empty")
        seen: set[str] = set()
        for p in self.patterns:
            if p.label in seen:
                raise PatternError(f"duplicate label {p.label!r} in set {self.name!r}")
            seen.add(p.label)
        object.__setattr__(self, "patterns", tuple(self.patterns))

    def __len__(self) -> int:
        return len(self.patterns)

    def __iter__(self):
        return iter(self.patterns)

    def labels(self) -> list[str]:
        return [p.label for p in self.patterns]

    def get(self, label: str) -> StrokePattern:
        for p in self.patterns:
            if p.label == label:
                return p
        raise KeyError(label)

    def with_tag(self, tag: str) -> list[StrokePattern]:
        return [p for p in self.patterns if tag in p.tags]


class ReferenceFrame(Enum):
    """Convention mapping the pattern's "top" to a physical side of the device.

    RF1 treats the hand side of the watch as the top; RF2 treats the
    12-o'clock side of an ordinary wristwatch as the top. The two frames
    differ by exactly one quarter turn (RF2 = RF1 rotated one CCW quarter
    turn, viewed from above the dorsal left wrist).
    """

    RF1 = 0
    RF2 = 1

    @property
    def rotation_quarter_turns(self) -> int:
        return self.value


@dataclass(frozen=True)
class GridGeometry:
    """Physical 2x2 array geometry and corner-to-channel wiring.

    ``channel_of`` maps a *physical* corner position (after the reference
    frame rotation has been applied to the logical pattern) to the drive
    channel index, and must be a bijection onto 0..3.
    """

    tactor_spacing_mm: float = 30.0
    frame_mm: tuple[float, float] = (40.0, 40.0)
    channel_of: Mapping[Corner, int] = field(
        default_factory=lambda: {
            Corner.TL: 0,
            Corner.TR: 1,
            Corner.BL: 2,
            Corner.BR: 3,
        }
    )

    def __post_init__(self):
        if sorted(self.channel_of.values()) != [0, 1, 2, 3]:
            raise PatternError("channel_of must be a bijection Corner -> 0..3")
        if set(self.channel_of.keys()) != set(Corner):
            raise PatternError("channel_of must cover all four corners")


@dataclass(frozen=True)
class TimingParams:
    """Burst duration and inter-stimulus interval, in seconds."""

    burst_s: float = 0.5
    isi_s: float = 0.0

    def __post_init__(self):
        if self.burst_s <= 0:
            raise PatternError("burst_s must be > 0")
        if self.isi_s < 0:
            raise PatternError("isi_s must be >= 0")


def map_to_channels(
    pattern: StrokePattern,
    rf: ReferenceFrame,
    geom: GridGeometry | None = None,
) -> list[int]:
    """Resolve a pattern's corners to physical channel indices.

    Applies the reference frame's quarter-turn rotation to each logical
    corner, then the geometry's corner-to-channel bijection.
    """
    geom = geom or GridGeometry()
    turns = rf.rotation_quarter_turns
    return [geom.channel_of[rotate_corner(c, turns)] for c in pattern.corners]


def pattern_duration(pattern: StrokePattern, t: TimingParams) -> float:
    """Total pattern duration: n bursts plus n-1 inter-stimulus intervals."""
    n = len(pattern.corners)
    return n * t.burst_s + (n - 1) * t.isi_s


def enumerate_three_point_strokes() -> PatternSet:
    """All ordered triples of pairwise-distinct corners, as a pattern set.

    Labels run tps_01..tps_24 in lexicographic corner order (TL<TR<BL<BR).
    """
    patterns = []
    triples = itertools.permutations(sorted(Corner), 3)
    for i, corners in enumerate(triples, start=1):
        patterns.append(
            StrokePattern(
                label=f"tps_{i:02d}",
                corners=tuple(corners),
                tags=frozenset({"three-point"}),
            )
        )
    return PatternSet(name="tps24", patterns=tuple(patterns))


def _parse_directive(line: str, line_no: int, meta: dict[str, str]) -> None:
    body = line[2:].strip()
    if "=" not in body:
        raise PatternFormatError(line_no, f"malformed directive {line!r}")
    key, _, value = body.partition("=")
    meta[key.strip()] = value.strip()


def parse_pattern_set(text: str, *, source: str = "<string>") -> PatternSet:
    """Parse the pattern-set text format.

    One pattern per line: ``label: C1 C2 ... Cn  [# tags]`` with corners in
    {TL,TR,BL,BR}. Lines starting with ``#`` are comments; ``#!`` lines carry
    ``name`` / ``version`` metadata. On a pattern line, text after ``#`` is a
    whitespace-separated tag list.
    """
    meta: dict[str, str] = {}
    patterns: list[StrokePattern] = []
    seen: set[str] = set()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#!"):
            _parse_directive(line, line_no, meta)
            continue
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise PatternFormatError(line_no, f"expected 'label: corners', got {raw!r}")
        label, _, rest = line.partition(":")
        label = label.strip()
        body, _, tag_part = rest.partition("#")
        tags = frozenset(tag_part.split())
        tokens = body.split()
        if not tokens:
            raise PatternFormatError(line_no, f"pattern {label!r} has no corners")
        corners = []
        for tok in tokens:
            try:
                corners.append(Corner.parse(tok))
            except ValueError as e:
                raise PatternFormatError(line_no, str(e)) from None
        if label in seen:
            raise PatternFormatError(line_no, f"duplicate label {label!r}")
        seen.add(label)
        try:
            patterns.append(StrokePattern(label=label, corners=tuple(corners), tags=tags))
        except PatternError as e:
            raise PatternFormatError(line_no, str(e)) from None
    if not patterns:
        raise PatternError(f"no patterns in {source}")
    return PatternSet(
        name=meta.get("name", Path(source).stem),
        patterns=tuple(patterns),
        version=meta.get("version", "1.0"),
    )


def load_pattern_set(path: str | Path) -> PatternSet:
    """Load and validate a pattern set from a text file."""
    path = Path(path)
    return parse_pattern_set(path.read_text(encoding="utf-8"), source=str(path))


def format_pattern_set(pset: PatternSet) -> str:
    """Serialize a pattern set back to the text format (round-trip safe)."""
    lines = [f"#! name = {pset.name}", f"#! version = {pset.version}"]
    for p in pset.patterns:
        corners = " ".join(c.name for c in p.corners)
        if p.tags:
            tags = " ".join(sorted(p.tags))
            lines.append(f"{p.label}: {corners}  # {tags}")
        else:
            lines.append(f"{p.label}: {corners}")
    return "\n".join(lines) + "\n"


def write_pattern_set(pset: PatternSet, path: str | Path) -> None:
    Path(path).write_text(format_pattern_set(pset), encoding="utf-8", newline="\n")


_SHIPPED = {"edgewrite_alnum", "prelim11"}


def shipped_pattern_set(name: str) -> PatternSet:
    """Load one of the shipped sets: edgewrite_alnum, prelim11, or tps24."""
    if name == "tps24":
        return enumerate_three_point_strokes()
    if name not in _SHIPPED:
        raise KeyError(f"unknown pattern set {name!r}; shipped: "
                       f"{sorted(_SHIPPED | {'tps24'})}")
    text = resources.files("tactokit.data").joinpath(f"{name}.txt").read_text("utf-8")
    return parse_pattern_set(text, source=f"{name}.txt")
