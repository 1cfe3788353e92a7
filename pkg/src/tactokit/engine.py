"""Session state machine for the recognition experiment protocol.

A session runs one participant through one condition: an optional untimed
learning drill, then training and testing phases of randomized trials with
short breaks every 20 trials. The trial loop follows the keyboard protocol:
space plays the stimulus (once per trial in testing), answer keys fill the
buffer, backspace edits it, enter confirms. Reaction time runs from the end
of pattern transmission to confirmation and is owned by the engine: playback
end is play start plus the schedule duration, so a client can neither spoof
nor skew it.

The engine itself never sleeps and never touches hardware. ``step`` applies
one event synchronously; an illegal event raises ``ProtocolError`` and
leaves the state untouched. Device playback is carried out by the caller
from the emitted actions (see service.py).
"""

from __future__ import annotations

import hashlib
import random
import time
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Sequence

from .analysis import TrialRecord
from .cues import Method
from .patterns import (
    Corner,
    PatternSet,
    ReferenceFrame,
    StrokePattern,
    TimingParams,
    pattern_duration,
    shipped_pattern_set,
)

BREAK_EVERY_DEFAULT = 20


class ProtocolError(RuntimeError):
    """An event that is illegal in the current session state."""


class Study(Enum):
    PRELIM = "prelim"
    STUDY1 = "study1"
    STUDY2_ALPHABET = "study2_alphabet"
    STUDY2_DIGIT = "study2_digit"

    @classmethod
    def parse(cls, token: str) -> "Study":
        token = token.strip().lower()
        for s in cls:
            if token == s.value:
                return s
        raise ValueError(f"unknown study {token!r}")


class Phase(str, Enum):
    LEARNING = "learning"
    TRAINING = "training"
    TESTING = "testing"


# (phase, trial count) plans per study; learning is untimed (0 trials).
_DEFAULT_PLANS: dict[Study, tuple[tuple[Phase, int], ...]] = {
    Study.PRELIM: ((Phase.LEARNING, 0), (Phase.TRAINING, 33), (Phase.TESTING, 55)),
    Study.STUDY1: (
        (Phase.TRAINING, 48),
        (Phase.TRAINING, 48),
        (Phase.TESTING, 48),
        (Phase.TESTING, 48),
    ),
    Study.STUDY2_ALPHABET: ((Phase.TRAINING, 52), (Phase.TESTING, 104)),
    Study.STUDY2_DIGIT: ((Phase.TRAINING, 20), (Phase.TESTING, 50)),
}


def default_plan(study: Study) -> tuple[tuple[Phase, int], ...]:
    return _DEFAULT_PLANS[study]


def study_pattern_set(study: Study) -> PatternSet:
    """The shipped pattern set a study runs on."""
    if study is Study.PRELIM:
        return shipped_pattern_set("prelim11")
    if study is Study.STUDY1:
        return shipped_pattern_set("tps24")
    alnum = shipped_pattern_set("edgewrite_alnum")
    tag = "alphabet" if study is Study.STUDY2_ALPHABET else "digit"
    return PatternSet(name=f"{alnum.name}:{tag}", patterns=tuple(alnum.with_tag(tag)))


@dataclass(frozen=True)
class SessionConfig:
    """Everything needed to run one participant through one condition."""

    study: Study
    participant: str
    pattern_set: PatternSet
    method: Method
    posture: str = "Forward"
    reference_frame: ReferenceFrame = ReferenceFrame.RF1
    timing: TimingParams = TimingParams()
    phase_plan: tuple[tuple[Phase, int], ...] = ()
    condition_order_index: int = 0
    answer_mode: str = "label"  # "label" or "corners"
    allow_replay_in_training: bool = False
    feedback_in_testing: bool = False
    break_every: int = BREAK_EVERY_DEFAULT

    def __post_init__(self):
        if self.answer_mode not in ("label", "corners"):
            raise ValueError("answer_mode must be 'label' or 'corners'")
        if not self.phase_plan:
            raise ValueError("phase_plan must be non-empty")
        size = len(self.pattern_set)
        for phase, count in self.phase_plan:
            if phase is Phase.LEARNING:
                if count != 0:
                    raise ValueError("learning phases are untimed (0 trials)")
            elif count <= 0 or count % size:
                raise ValueError(
                    f"{phase.value} trial count {count} must be a positive "
                    f"multiple of the set size {size}"
                )

    @classmethod
    def for_study(
        cls,
        study: Study,
        participant: str,
        method: Method = Method.BASELINE,
        posture: str = "Forward",
        reference_frame: ReferenceFrame = ReferenceFrame.RF1,
        phase_plan: Sequence[tuple[Phase, int]] | None = None,
        pattern_set: PatternSet | None = None,
        condition_order_index: int = 0,
    ) -> "SessionConfig":
        """Standard per-study configuration; a custom ``phase_plan`` makes a
        shortened scripted session and is still validated against the set."""
        isi = 0.1 if study in (Study.STUDY2_ALPHABET, Study.STUDY2_DIGIT) else 0.0
        return cls(
            study=study,
            participant=participant,
            pattern_set=pattern_set or study_pattern_set(study),
            method=method,
            posture=posture,
            reference_frame=reference_frame,
            timing=TimingParams(burst_s=0.5, isi_s=isi),
            phase_plan=tuple(phase_plan) if phase_plan else default_plan(study),
            condition_order_index=condition_order_index,
            answer_mode="corners" if study is Study.STUDY1 else "label",
            allow_replay_in_training=study
            in (Study.STUDY2_ALPHABET, Study.STUDY2_DIGIT),
            feedback_in_testing=study
            in (Study.STUDY2_ALPHABET, Study.STUDY2_DIGIT),
        )


def balanced_latin_square(n: int) -> list[list[int]]:
    """Condition-order table: every condition once per row and per column.

    Uses the standard 1, 2, n, 3, n-1, ... construction. For even n each
    ordered adjacent pair of conditions appears exactly once across rows;
    for odd n the reversed rows are appended (2n rows) to balance pairs.
    """
    if n < 2:
        raise ValueError("need at least 2 conditions")
    first = [0, 1]
    lo, hi = 2, n - 1
    while len(first) < n:
        first.append(hi)
        hi -= 1
        if len(first) < n:
            first.append(lo)
            lo += 1
    rows = [[(c + r) % n for c in first] for r in range(n)]
    if n % 2:
        rows += [list(reversed(row)) for row in rows]
    return rows


def derive_seed(participant: str, condition: str, phase_index: int) -> int:
    """Reproducible yet distinct per-(participant, condition, phase) seed."""
    digest = hashlib.sha256(
        f"{participant}|{condition}|{phase_index}".encode()
    ).digest()
    return int.from_bytes(digest[:8], "little")


class BreakMarker:
    """Queue sentinel for the every-20-trials rest."""

    def __repr__(self):
        return "<break>"


BREAK = BreakMarker()


def build_trial_queue(
    cfg: SessionConfig, phase_index: int, seed: int | None = None
) -> list[str | BreakMarker]:
    """Seeded-shuffled stimulus order for one phase, with break markers.

    Each pattern appears count/set-size times; a break marker follows every
    ``cfg.break_every`` trials when more trials remain.
    """
    phase, count = cfg.phase_plan[phase_index]
    if phase is Phase.LEARNING:
        return []
    if seed is None:
        condition = f"{cfg.method.value}|{cfg.posture}|{cfg.reference_frame.name}"
        seed = derive_seed(cfg.participant, condition, phase_index)
    reps = count // len(cfg.pattern_set)
    labels = [p.label for p in cfg.pattern_set for _ in range(reps)]
    random.Random(seed).shuffle(labels)
    queue: list[str | BreakMarker] = []
    for i, label in enumerate(labels):
        if i and i % cfg.break_every == 0:
            queue.append(BREAK)
        queue.append(label)
    return queue


# --- events -----------------------------------------------------------------


@dataclass(frozen=True)
class Event:
    kind: str
    payload: tuple[str, ...] = ()


def PLAY() -> Event:
    return Event("play")


def ANSWER(*tokens: str) -> Event:
    return Event("answer", tuple(tokens))


def CONFIRM() -> Event:
    return Event("confirm")


def BACKSPACE() -> Event:
    return Event("backspace")


def MANUAL_PLAY(label: str) -> Event:
    return Event("manual_play", (label,))


def ADVANCE() -> Event:
    return Event("advance")


@dataclass
class StepResult:
    """Side effects the caller must carry out after a successful step."""

    play_label: str | None = None
    record: TrialRecord | None = None


# --- the session ------------------------------------------------------------


class Session:
    """Mutable session state; all transitions go through :meth:`step`.

    ``clock`` is a monotonic seconds source; tests inject a manual clock.
    The stimulus of the current trial is never exposed by :meth:`view`.
    """

    def __init__(
        self,
        cfg: SessionConfig,
        clock: Callable[[], float] = time.monotonic,
        queue_seeds: Sequence[int] | None = None,
    ):
        self.cfg = cfg
        self.clock = clock
        self._queues = [
            build_trial_queue(
                cfg, i, queue_seeds[i] if queue_seeds is not None else None
            )
            for i in range(len(cfg.phase_plan))
        ]
        self.records: list[TrialRecord] = []
        self.correct_count = 0
        self.phase_index = 0
        self.completed = False
        self._enter_phase(0)

    # -- phase / trial bookkeeping

    def _enter_phase(self, index: int) -> None:
        self.phase_index = index
        self.queue_pos = 0
        self.trial_index = 0  # 1-based once a trial is active
        self.on_break = False
        self.break_kind = None
        self._learning_rng = random.Random(
            derive_seed(self.cfg.participant, "learning", index)
        )
        self.prompt_label: str | None = None
        if self.phase is Phase.LEARNING:
            self._next_prompt()
            self._clear_trial()
        else:
            self._start_next_trial()

    @property
    def phase(self) -> Phase:
        return self.cfg.phase_plan[self.phase_index][0]

    @property
    def phase_trials(self) -> int:
        return self.cfg.phase_plan[self.phase_index][1]

    def _queue(self) -> list:
        return self._queues[self.phase_index]

    def _clear_trial(self) -> None:
        self.stimulus: str | None = None
        self.played_count = 0
        self.playback_end: float | None = None
        self.answer_buffer: list[str] = []
        self.feedback: dict | None = None

    def _next_prompt(self) -> None:
        self.prompt_label = self._learning_rng.choice(
            [p.label for p in self.cfg.pattern_set]
        )

    def _start_next_trial(self) -> None:
        queue = self._queue()
        self._clear_trial()
        if self.queue_pos >= len(queue):
            self._finish_phase()
            return
        item = queue[self.queue_pos]
        if isinstance(item, BreakMarker):
            self.on_break = True
            self.break_kind = "rest"
            return
        self.stimulus = item
        self.trial_index += 1

    def _finish_phase(self) -> None:
        if self.phase_index + 1 < len(self.cfg.phase_plan):
            # Inter-phase gate: rest, then ADVANCE enters the next phase.
            self.on_break = True
            self.break_kind = "phase"
        else:
            self.completed = True

    @property
    def is_playing(self) -> bool:
        return self.playback_end is not None and self.clock() < self.playback_end

    def _pattern(self, label: str) -> StrokePattern:
        return self.cfg.pattern_set.get(label)

    # -- event application

    def step(self, event: Event) -> StepResult:
        handler = getattr(self, f"_on_{event.kind}", None)
        if handler is None:
            raise ProtocolError(f"unknown event kind {event.kind!r}")
        return handler(event)

    def _require_trial(self) -> str:
        if self.completed:
            raise ProtocolError("session completed")
        if self.on_break:
            raise ProtocolError("on break; ADVANCE to continue")
        if self.phase is Phase.LEARNING:
            raise ProtocolError("not available in the learning phase")
        if self.stimulus is None:
            raise ProtocolError("no active trial")
        return self.stimulus

    def _on_play(self, event: Event) -> StepResult:
        stimulus = self._require_trial()
        if self.played_count >= 1:
            replay_ok = (
                self.phase is Phase.TRAINING and self.cfg.allow_replay_in_training
            )
            if not replay_ok:
                raise ProtocolError("pattern can be played only once per trial")
            if self.is_playing:
                raise ProtocolError("playback in progress")
        duration = pattern_duration(self._pattern(stimulus), self.cfg.timing)
        self.played_count += 1
        self.playback_end = self.clock() + duration
        return StepResult(play_label=stimulus)

    def _on_manual_play(self, event: Event) -> StepResult:
        self._require_trial()
        if self.phase is not Phase.TRAINING:
            raise ProtocolError("manual play is allowed only during training")
        if self.played_count >= 1:
            raise ProtocolError("manual play is allowed only before the stimulus")
        (label,) = event.payload
        pattern = self._pattern_or_error(label)
        return StepResult(play_label=pattern.label)

    def _pattern_or_error(self, label: str) -> StrokePattern:
        try:
            return self._pattern(label)
        except KeyError:
            raise ProtocolError(f"label {label!r} not in the pattern set") from None

    def _on_answer(self, event: Event) -> StepResult:
        if self.phase is Phase.LEARNING:
            return self._learning_answer(event)
        self._require_trial()
        if self.played_count == 0:
            raise ProtocolError("answer requires the stimulus to have been played")
        if not event.payload:
            raise ProtocolError("empty answer")
        if self.cfg.answer_mode == "label":
            if len(event.payload) != 1:
                raise ProtocolError("label answers take a single token")
            token = event.payload[0]
            self._pattern_or_error(token)
            self.answer_buffer = [token]
        else:
            tokens = list(event.payload)
            for tok in tokens:
                if tok not in Corner.__members__:
                    raise ProtocolError(f"invalid corner token {tok!r}")
            need = len(self._pattern(self.stimulus).corners)
            if len(self.answer_buffer) + len(tokens) > need:
                raise ProtocolError(f"answer takes at most {need} corners")
            self.answer_buffer.extend(tokens)
        return StepResult()

    def _learning_answer(self, event: Event) -> StepResult:
        if self.completed:
            raise ProtocolError("session completed")
        for tok in event.payload:
            if tok not in Corner.__members__:
                raise ProtocolError(f"invalid corner token {tok!r}")
        self.answer_buffer.extend(event.payload)
        return StepResult()

    def _on_backspace(self, event: Event) -> StepResult:
        if self.completed:
            raise ProtocolError("session completed")
        if self.on_break:
            raise ProtocolError("on break")
        if self.answer_buffer:
            self.answer_buffer.pop()
        return StepResult()

    def _on_confirm(self, event: Event) -> StepResult:
        if self.phase is Phase.LEARNING:
            return self._learning_confirm()
        stimulus = self._require_trial()
        if self.played_count == 0:
            raise ProtocolError("confirm requires the stimulus to have been played")
        if self.is_playing:
            raise ProtocolError("wait for playback to finish")
        response = self._response_from_buffer(stimulus)
        now = self.clock()
        rt = now - (self.playback_end or now)
        record = TrialRecord(
            participant=self.cfg.participant,
            stimulus=stimulus,
            response=response,
            rt_s=max(rt, 0.0),
            posture=self.cfg.posture,
            method=self.cfg.method.value,
            reference_frame=self.cfg.reference_frame.name,
            phase=self.phase.value,
            timestamp=now,
        )
        self.records.append(record)
        if record.stimulus == record.response:
            self.correct_count += 1
        show_feedback = self.phase is Phase.TRAINING or (
            self.phase is Phase.TESTING and self.cfg.feedback_in_testing
        )
        feedback = (
            {"correct_label": stimulus, "was_correct": response == stimulus}
            if show_feedback
            else None
        )
        self.queue_pos += 1
        self._start_next_trial()
        self.feedback = feedback
        return StepResult(record=record)

    def _response_from_buffer(self, stimulus: str) -> str:
        if not self.answer_buffer:
            raise ProtocolError("cannot confirm an empty answer")
        if self.cfg.answer_mode == "label":
            return self.answer_buffer[0]
        corners = tuple(Corner[tok] for tok in self.answer_buffer)
        need = len(self._pattern(stimulus).corners)
        if len(corners) != need:
            raise ProtocolError(f"answer needs exactly {need} corners")
        for p in self.cfg.pattern_set:
            if p.corners == corners:
                return p.label
        raise ProtocolError("corner sequence matches no pattern in the set")

    def _learning_confirm(self) -> StepResult:
        if self.completed:
            raise ProtocolError("session completed")
        if not self.answer_buffer:
            raise ProtocolError("cannot confirm an empty answer")
        target = self._pattern(self.prompt_label)
        answered = tuple(
            Corner[tok] for tok in self.answer_buffer if tok in Corner.__members__
        )
        self.feedback = {
            "correct_label": self.prompt_label,
            "was_correct": answered == target.corners,
        }
        self.answer_buffer = []
        self._next_prompt()
        return StepResult()

    def _on_advance(self, event: Event) -> StepResult:
        if self.completed:
            raise ProtocolError("session completed")
        if self.phase is Phase.LEARNING:
            self._enter_phase(self.phase_index + 1)
            return StepResult()
        if not self.on_break:
            raise ProtocolError("nothing to advance")
        if self.break_kind == "phase":
            self._enter_phase(self.phase_index + 1)
        else:
            self.on_break = False
            self.break_kind = None
            self.queue_pos += 1
            self._start_next_trial()
        return StepResult()

    # -- views

    def live_accuracy(self) -> float:
        return self.correct_count / len(self.records) if self.records else 0.0

    def view(self) -> dict[str, Any]:
        """Client-facing state; never includes the pending stimulus."""
        return {
            "study": self.cfg.study.value,
            "participant": self.cfg.participant,
            "method": self.cfg.method.value,
            "posture": self.cfg.posture,
            "reference_frame": self.cfg.reference_frame.name,
            "answer_mode": self.cfg.answer_mode,
            "phase": self.phase.value,
            "phase_index": self.phase_index,
            "phase_count": len(self.cfg.phase_plan),
            "trial_index": self.trial_index,
            "trials_in_phase": self.phase_trials,
            "played": self.played_count >= 1,
            "playing": self.is_playing,
            "can_replay": self.phase is Phase.TRAINING
            and self.cfg.allow_replay_in_training,
            "answer_buffer": list(self.answer_buffer),
            "on_break": self.on_break,
            "break_kind": self.break_kind,
            "completed": self.completed,
            "feedback": self.feedback,
            "prompt": self.prompt_label if self.phase is Phase.LEARNING else None,
            "labels": self.cfg.pattern_set.labels(),
            "chart_allowed": self.phase is not Phase.TESTING,
            "records_count": len(self.records),
        }
