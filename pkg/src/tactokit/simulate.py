"""Recognition-confusion prediction under a per-burst tactor-confusion model.

The model captures the core design argument as something runnable: localizing
a burst can fail independently along each wrist axis, and a swap becomes less
likely when the two tactors involved carry more distinguishable cues. Each
additional differing cue dimension multiplies the swap probability by a
discount, so extending the perceptual space from position-only to
position+frequency+roughness shows up directly as predicted accuracy.

Kernel probabilities are illustrative modeling choices, not fitted values;
the reference experiments provide no quantitative perceptual-distance
function. Fitting kernels to empirical confusion matrices is a documented
follow-up, not a claim made here.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .cues import CueMap, cue_distinctness
from .patterns import Corner, PatternSet

MAX_ENUM_BURSTS = 8  # 4^n outcome enumeration guard

DEFAULT_CUE_DISCOUNT = {0: 1.0, 1: 0.35, 2: 0.15}


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionKernel:
    """Per-burst axis-swap probabilities plus the cue-distinctness discount.

    ``cue_discount[d]`` multiplies a swap probability when the actual and
    would-be-perceived tactors' cues differ in ``d`` of the two cue
    dimensions; discount(0) is 1 and the discount never increases with d.
    """

    p_axis_swap_longitudinal: float = 0.2
    p_axis_swap_transverse: float = 0.1
    cue_discount: Mapping[int, float] = field(
        default_factory=lambda: dict(DEFAULT_CUE_DISCOUNT)
    )

    def __post_init__(self):
        for name in ("p_axis_swap_longitudinal", "p_axis_swap_transverse"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise SimulationError(f"{name}={p} outside [0, 1]")
        d = self.cue_discount
        if set(d.keys()) != {0, 1, 2}:
            raise SimulationError("cue_discount must map distinctness 0, 1, 2")
        if d[0] != 1.0:
            raise SimulationError("cue_discount[0] must be 1.0")
        if not (1.0 >= d[1] >= d[2] >= 0.0):
            raise SimulationError("cue_discount must be non-increasing in [0, 1]")

    @classmethod
    def zero_noise(cls) -> "ConfusionKernel":
        return cls(0.0, 0.0)

    @classmethod
    def uniform(cls) -> "ConfusionKernel":
        """Maximum confusion: every burst is perceived uniformly at random."""
        return cls(0.5, 0.5, {0: 1.0, 1: 1.0, 2: 1.0})


@dataclass(frozen=True)
class PredictedConfusion:
    """Row-stochastic stimulus-by-response probability matrix."""

    labels: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self):
        k = len(self.labels)
        if self.matrix.shape != (k, k):
            raise SimulationError("matrix must be KxK for K labels")
        rows = self.matrix.sum(axis=1)
        if not np.allclose(rows, 1.0, atol=1e-9):
            raise SimulationError("matrix rows must each sum to 1")

    @property
    def accuracy(self) -> float:
        return float(np.mean(np.diag(self.matrix)))

    def save_csv(self, path: str | Path) -> None:
        lines = ["stimulus," + ",".join(self.labels)]
        for label, row in zip(self.labels, self.matrix):
            lines.append(label + "," + ",".join(f"{x:.6f}" for x in row))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def burst_confusion(
    actual: Corner, cues: CueMap, kernel: ConfusionKernel
) -> dict[Corner, float]:
    """Distribution over perceived corners for one burst at ``actual``.

    Longitudinal and transverse mislocalizations are independent events;
    each axis swap lands on the neighbor along that axis, and both together
    land on the diagonal. Swap probabilities are discounted by how
    distinguishable the neighbor's cue is from the actual tactor's cue.
    """
    axis = cues.axis
    long_nb = axis.longitudinal_neighbor(actual)
    trans_nb = axis.transverse_neighbor(actual)
    diagonal = next(
        c for c in Corner if c not in (actual, long_nb, trans_nb)
    )
    own = cues.cue(actual)
    p_long = kernel.p_axis_swap_longitudinal * kernel.cue_discount[
        cue_distinctness(own, cues.cue(long_nb))
    ]
    p_trans = kernel.p_axis_swap_transverse * kernel.cue_discount[
        cue_distinctness(own, cues.cue(trans_nb))
    ]
    return {
        actual: (1 - p_long) * (1 - p_trans),
        long_nb: p_long * (1 - p_trans),
        trans_nb: (1 - p_long) * p_trans,
        diagonal: p_long * p_trans,
    }


def _burst_matrix(cues: CueMap, kernel: ConfusionKernel) -> np.ndarray:
    """4x4 matrix of P(perceive column | actual row), corner-value indexed."""
    m = np.zeros((4, 4))
    for actual in Corner:
        for perceived, p in burst_confusion(actual, cues, kernel).items():
            m[actual.value, perceived.value] = p
    return m


def _padded_pattern_array(pset: PatternSet) -> tuple[np.ndarray, np.ndarray]:
    """Pattern corners as a (K, Lmax) int array padded with -1, plus lengths."""
    lengths = np.array([len(p) for p in pset.patterns])
    arr = np.full((len(pset.patterns), int(lengths.max())), -1, dtype=np.int64)
    for i, p in enumerate(pset.patterns):
        arr[i, : len(p)] = [c.value for c in p.corners]
    return arr, lengths


def _match_scores(perceived: np.ndarray, patterns: np.ndarray) -> np.ndarray:
    """Positional-match counts of each perceived row against each pattern.

    ``perceived`` is (M, n); ``patterns`` is (K, Lmax) padded with -1, which
    never matches, so length-mismatched patterns score only the overlapping
    prefix.
    """
    n = perceived.shape[1]
    width = min(n, patterns.shape[1])
    return (perceived[:, None, :width] == patterns[None, :, :width]).sum(axis=2)


def _all_outcomes(n: int) -> np.ndarray:
    return np.stack(
        np.meshgrid(*([np.arange(4)] * n), indexing="ij"), axis=-1
    ).reshape(-1, n)


def _decode_table(patterns: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Tie table for all 4^n perceived sequences of length n.

    Returns (tie_table, n_ties): row key = base-4 encoding of the sequence;
    tie_table[key, :n_ties[key]] lists the tied best-scoring pattern indices.
    """
    scores = _match_scores(_all_outcomes(n), patterns)
    ties = scores == scores.max(axis=1, keepdims=True)
    n_ties = ties.sum(axis=1)
    max_t = int(n_ties.max())
    tie_table = np.argsort(~ties, axis=1, kind="stable")[:, :max_t]
    return tie_table, n_ties


def decode(
    perceived: Sequence[Corner],
    pset: PatternSet,
    rng: np.random.Generator | int | None = None,
) -> str:
    """Closed-set forced choice: the label best matching the perceived corners.

    Scores count positional corner matches; ties are broken uniformly at
    random under ``rng``.
    """
    if isinstance(rng, int) or rng is None:
        rng = np.random.default_rng(rng)
    patterns, _ = _padded_pattern_array(pset)
    row = np.array([[c.value for c in perceived]], dtype=np.int64)
    scores = _match_scores(row, patterns)[0]
    best = np.flatnonzero(scores == scores.max())
    return pset.patterns[int(rng.choice(best))].label


def exact_confusion(
    pset: PatternSet, cues: CueMap, kernel: ConfusionKernel
) -> PredictedConfusion:
    """Exact predicted confusion by enumerating all per-burst outcomes.

    For every stimulus the full product space of per-burst perceptions is
    enumerated (guarded to 4^8 per pattern); each perceived sequence is
    decoded to the nearest pattern with ties contributing fractionally,
    which is the exact expectation of a uniform tie-break.
    """
    labels = pset.labels()
    patterns, _ = _padded_pattern_array(pset)
    bm = _burst_matrix(cues, kernel)
    k = len(labels)
    matrix = np.zeros((k, k))
    for i, stim in enumerate(pset.patterns):
        n = len(stim)
        if 4**n > 4**MAX_ENUM_BURSTS:
            raise SimulationError(
                f"pattern {stim.label!r}: {n} bursts exceeds the 4^{MAX_ENUM_BURSTS} "
                "enumeration guard; use monte_carlo_confusion"
            )
        outcomes = _all_outcomes(n)
        stim_idx = np.array([c.value for c in stim.corners])
        probs = bm[stim_idx[None, :], outcomes].prod(axis=1)
        scores = _match_scores(outcomes, patterns)
        best = scores.max(axis=1, keepdims=True)
        ties = scores == best
        share = probs / ties.sum(axis=1)
        matrix[i] = ties.T @ share
    return PredictedConfusion(labels=tuple(labels), matrix=matrix)


def monte_carlo_confusion(
    pset: PatternSet,
    cues: CueMap,
    kernel: ConfusionKernel,
    n_trials: int,
    seed: int,
    chunk: int = 100_000,
) -> PredictedConfusion:
    """Sampled analogue of exact_confusion: ``n_trials`` per stimulus, seeded."""
    if n_trials < 1:
        raise SimulationError("n_trials must be >= 1")
    rng = np.random.default_rng(seed)
    labels = pset.labels()
    patterns, _ = _padded_pattern_array(pset)
    bm = _burst_matrix(cues, kernel)
    cum = np.cumsum(bm, axis=1)
    cum[:, -1] = 1.0
    k = len(labels)
    matrix = np.zeros((k, k))
    tables: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for i, stim in enumerate(pset.patterns):
        stim_idx = [c.value for c in stim.corners]
        n = len(stim_idx)
        use_table = n <= MAX_ENUM_BURSTS
        if use_table and n not in tables:
            tables[n] = _decode_table(patterns, n)
        counts = np.zeros(k)
        remaining = n_trials
        while remaining:
            m = min(chunk, remaining)
            remaining -= m
            perceived = np.empty((m, n), dtype=np.int64)
            for j, corner_idx in enumerate(stim_idx):
                perceived[:, j] = np.searchsorted(cum[corner_idx], rng.random(m), side="right")
            if use_table:
                tie_table, n_ties = tables[n]
                keys = perceived @ (4 ** np.arange(n - 1, -1, -1, dtype=np.int64))
                pick = (rng.random(m) * n_ties[keys]).astype(np.int64)
                winners = tie_table[keys, pick]
            else:
                scores = _match_scores(perceived, patterns).astype(float)
                # Integer scores plus sub-unit noise: a uniform tie-break.
                scores += rng.random(scores.shape) * 0.5
                winners = scores.argmax(axis=1)
            counts += np.bincount(winners, minlength=k)
        matrix[i] = counts / n_trials
    return PredictedConfusion(labels=tuple(labels), matrix=matrix)


def load_kernel(path: str | Path) -> ConfusionKernel:
    """Read a kernel definition from a TOML file ([kernel] table)."""
    if sys.version_info >= (3, 11):
        import tomllib
    else:
        import tomli as tomllib
    with open(path, "rb") as f:
        doc = tomllib.load(f)
    table = doc.get("kernel", doc)
    discount = {
        int(key): float(value)
        for key, value in table.get("cue_discount", DEFAULT_CUE_DISCOUNT).items()
    }
    return ConfusionKernel(
        p_axis_swap_longitudinal=float(
            table.get("p_axis_swap_longitudinal", ConfusionKernel.p_axis_swap_longitudinal)
        ),
        p_axis_swap_transverse=float(
            table.get("p_axis_swap_transverse", ConfusionKernel.p_axis_swap_transverse)
        ),
        cue_discount=discount,
    )
