"""Accuracy, information transfer, and reaction-time analytics for trial logs.

Information transfer uses the standard maximum-likelihood mutual-information
estimate from a stimulus-response count matrix, without bias correction
(common practice for tactile identification studies; a bias-corrected
variant is a config option left off by default). Inferential statistics are
intentionally out of scope; logs export cleanly for external stats tools.

Report tables mirror the reference formatting: accuracy in percent with one
decimal, reaction times in seconds with one decimal, IT in bits with two.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    """Stimulus-response counts: rows are stimuli, columns responses."""

    labels: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        k = len(self.labels)
        arr = np.asarray(self.counts)
        if arr.shape != (k, k):
            raise AnalysisError(f"counts must be {k}x{k}")
        if np.any(arr < 0):
            raise AnalysisError("counts must be non-negative")
        object.__setattr__(self, "counts", arr.astype(np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def is_empty(self) -> bool:
        return self.total == 0

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.labels != other.labels:
            raise AnalysisError("cannot add matrices with different labels")
        return ConfusionMatrix(self.labels, self.counts + other.counts)

    def save_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["stimulus"] + list(self.labels))
            for label, row in zip(self.labels, self.counts):
                w.writerow([label] + [int(x) for x in row])

    @classmethod
    def load_csv(cls, path: str | Path) -> "ConfusionMatrix":
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
        labels = tuple(rows[0][1:])
        counts = np.array([[int(x) for x in r[1:]] for r in rows[1:]])
        return cls(labels=labels, counts=counts)


@dataclass(frozen=True)
class TrialRecord:
    """One confirmed answer with its condition labels and reaction time.

    Reaction time runs from the end of pattern transmission to answer
    confirmation.
    """

    participant: str
    stimulus: str
    response: str
    rt_s: float
    posture: str = "Forward"
    method: str = "baseline"
    reference_frame: str = "RF1"
    phase: str = "testing"
    timestamp: float = 0.0

    def __post_init__(self):
        if self.rt_s < 0:
            raise AnalysisError("rt_s must be >= 0")

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, line: str) -> "TrialRecord":
        return cls(**json.loads(line))


def read_log(path: str | Path) -> list[TrialRecord]:
    """Read a JSONL trial log (one TrialRecord per line)."""
    records = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(TrialRecord.from_json(line))
    return records


def write_log(records: Iterable[TrialRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(r.to_json() + "\n")


Filter = Callable[[TrialRecord], bool]


def accuracy(cm: ConfusionMatrix) -> float:
    """Fraction of responses on the diagonal."""
    if cm.is_empty:
        raise AnalysisError("empty confusion matrix")
    return float(np.trace(cm.counts)) / cm.total


def information_transfer(cm: ConfusionMatrix) -> float:
    """Maximum-likelihood IT estimate in bits; zero-count cells are skipped."""
    n = cm.total
    if n == 0:
        raise AnalysisError("empty confusion matrix")
    counts = cm.counts.astype(float)
    row = counts.sum(axis=1)
    col = counts.sum(axis=0)
    it = 0.0
    for i, j in zip(*np.nonzero(counts)):
        nij = counts[i, j]
        it += (nij / n) * math.log2(nij * n / (row[i] * col[j]))
    return it


def build_confusion(
    records: Sequence[TrialRecord],
    where: Filter | None = None,
    labels: Sequence[str] | None = None,
) -> ConfusionMatrix:
    """Aggregate filtered records into a stimulus-response count matrix.

    Labels default to the sorted union of stimuli and responses seen; pass
    the session's pattern-set labels to keep unseen rows. Records whose
    stimulus or response is not in ``labels`` indicate mixed pattern sets
    and are rejected.
    """
    selected = [r for r in records if where is None or where(r)]
    if labels is None:
        seen = {r.stimulus for r in selected} | {r.response for r in selected}
        labels = sorted(seen)
    index = {lab: i for i, lab in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for r in selected:
        if r.stimulus not in index or r.response not in index:
            raise AnalysisError(
                f"record ({r.stimulus!r} -> {r.response!r}) outside the label set; "
                "mixed pattern sets?"
            )
        counts[index[r.stimulus], index[r.response]] += 1
    return ConfusionMatrix(labels=tuple(labels), counts=counts)


def rt_stats(
    records: Sequence[TrialRecord], where: Filter | None = None
) -> tuple[float, float, int]:
    """Mean and sample SD of reaction time over the filtered records."""
    rts = [r.rt_s for r in records if where is None or where(r)]
    if not rts:
        raise AnalysisError("no records after filter")
    mean = float(np.mean(rts))
    sd = float(np.std(rts, ddof=1)) if len(rts) > 1 else 0.0
    return mean, sd, len(rts)


def exclude_outliers(
    per_participant: Mapping[str, Mapping[str, float]],
    sigma: float = 2.0,
) -> tuple[set[str], set[str]]:
    """Flag participants whose accuracy is an outlier in any condition.

    ``per_participant`` maps condition -> participant -> accuracy. A
    participant is excluded when, for at least one condition, their accuracy
    deviates from that condition's mean by more than ``sigma`` sample
    standard deviations (mean/SD over all participants in the condition).
    Conditions with zero SD exclude nobody.
    """
    participants: set[str] = set()
    for accs in per_participant.values():
        participants |= set(accs.keys())
    if len(participants) < 2:
        raise AnalysisError("need at least 2 participants")
    excluded: set[str] = set()
    for accs in per_participant.values():
        values = np.array(list(accs.values()), dtype=float)
        if len(values) < 2:
            continue
        mean = values.mean()
        sd = values.std(ddof=1)
        if sd == 0 or not math.isfinite(sigma):
            continue
        for pid, acc in accs.items():
            if abs(acc - mean) > sigma * sd:
                excluded.add(pid)
    return participants - excluded, excluded


def per_participant_accuracy(
    records: Sequence[TrialRecord],
    condition_of: Callable[[TrialRecord], str],
) -> dict[str, dict[str, float]]:
    """Accuracy per (condition, participant), for the outlier rule."""
    hits: dict[tuple[str, str], int] = {}
    totals: dict[tuple[str, str], int] = {}
    for r in records:
        key = (condition_of(r), r.participant)
        totals[key] = totals.get(key, 0) + 1
        hits[key] = hits.get(key, 0) + (r.stimulus == r.response)
    out: dict[str, dict[str, float]] = {}
    for (cond, pid), n in totals.items():
        out.setdefault(cond, {})[pid] = hits[(cond, pid)] / n
    return out


CONDITION_FIELDS = ("posture", "method", "reference_frame", "phase", "participant")


def _condition_key(record: TrialRecord, by: Sequence[str]) -> tuple[str, ...]:
    return tuple(getattr(record, f) for f in by)


@dataclass(frozen=True)
class ConditionReport:
    condition: tuple[str, ...]
    n_trials: int
    accuracy: float
    it_bits: float
    rt_mean_s: float
    rt_sd_s: float


def condition_report(
    records: Sequence[TrialRecord],
    by: Sequence[str],
    labels: Sequence[str] | None = None,
    pooled_it: bool = False,
) -> list[ConditionReport]:
    """Per-condition AC / IT / RT summary, grouped by the given fields.

    AC and IT default to per-participant means within each condition
    (matching how means over participants are usually reported); pass
    ``pooled_it=True`` to compute both from the condition's pooled matrix
    instead.
    """
    for f in by:
        if f not in CONDITION_FIELDS:
            raise AnalysisError(f"unknown condition field {f!r}")
    groups: dict[tuple[str, ...], list[TrialRecord]] = {}
    for r in records:
        groups.setdefault(_condition_key(r, by), []).append(r)
    reports = []
    for cond in sorted(groups):
        recs = groups[cond]
        if pooled_it or "participant" in by:
            cm = build_confusion(recs, labels=labels)
            ac, it = accuracy(cm), information_transfer(cm)
        else:
            per_pid: dict[str, list[TrialRecord]] = {}
            for r in recs:
                per_pid.setdefault(r.participant, []).append(r)
            acs, its = [], []
            for pid_recs in per_pid.values():
                cm = build_confusion(pid_recs, labels=labels)
                acs.append(accuracy(cm))
                its.append(information_transfer(cm))
            ac, it = float(np.mean(acs)), float(np.mean(its))
        mean, sd, n = rt_stats(recs)
        reports.append(
            ConditionReport(
                condition=cond,
                n_trials=len(recs),
                accuracy=ac,
                it_bits=it,
                rt_mean_s=mean,
                rt_sd_s=sd,
            )
        )
    return reports


def write_report_csv(
    reports: Sequence[ConditionReport], by: Sequence[str], path: str | Path
) -> None:
    """Write the condition summary table (AC %, IT bits, RT s)."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(list(by) + ["n", "ac_pct", "it_bits", "rt_mean_s", "rt_sd_s"])
        for r in reports:
            w.writerow(
                list(r.condition)
                + [
                    r.n_trials,
                    f"{100 * r.accuracy:.1f}",
                    f"{r.it_bits:.2f}",
                    f"{r.rt_mean_s:.1f}",
                    f"{r.rt_sd_s:.1f}",
                ]
            )
