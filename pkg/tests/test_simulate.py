import numpy as np
import pytest

from tactokit.cues import Method, assign_cues
from tactokit.patterns import (
    Corner,
    PatternSet,
    StrokePattern,
    enumerate_three_point_strokes,
)
from tactokit.simulate import (
    ConfusionKernel,
    SimulationError,
    burst_confusion,
    decode,
    exact_confusion,
    load_kernel,
    monte_carlo_confusion,
)

TL, TR, BL, BR = Corner.TL, Corner.TR, Corner.BL, Corner.BR

TPS = enumerate_three_point_strokes()
BASELINE = assign_cues(Method.BASELINE)
FOUR = assign_cues(Method.FOUR_HETERO)


# --- kernel invariants -------------------------------------------------------


def test_kernel_validation():
    with pytest.raises(SimulationError):
        ConfusionKernel(p_axis_swap_longitudinal=1.5)
    with pytest.raises(SimulationError):
        ConfusionKernel(cue_discount={0: 1.0, 1: 0.2, 2: 0.5})  # increasing
    with pytest.raises(SimulationError):
        ConfusionKernel(cue_discount={0: 0.9, 1: 0.5, 2: 0.1})  # discount(0) != 1


def test_kernel_toml(tmp_path):
    path = tmp_path / "kernel.toml"
    path.write_text(
        "[kernel]\n"
        "p_axis_swap_longitudinal = 0.3\n"
        "p_axis_swap_transverse = 0.05\n"
        "[kernel.cue_discount]\n"
        '"0" = 1.0\n"1" = 0.5\n"2" = 0.25\n'
    )
    k = load_kernel(path)
    assert k.p_axis_swap_longitudinal == 0.3
    assert k.cue_discount[2] == 0.25


# --- burst confusion ----------------------------------------------------------


def test_zero_swap_is_point_mass():
    dist = burst_confusion(TL, BASELINE, ConfusionKernel.zero_noise())
    assert dist[TL] == 1.0
    assert all(p == 0.0 for c, p in dist.items() if c != TL)


def test_symmetric_half_swaps_give_uniform():
    k = ConfusionKernel(0.5, 0.5, {0: 1.0, 1: 1.0, 2: 1.0})
    dist = burst_confusion(TL, BASELINE, k)
    for p in dist.values():
        assert p == pytest.approx(0.25)


def test_burst_confusion_hand_oracle_four_hetero():
    # Hand-enumerated 2x2 swap outcomes: with the default axis config the
    # longitudinal neighbor of TL is BL (distinctness 1: roughness) and the
    # transverse neighbor is TR (distinctness 1: carrier).
    p_long, p_trans, d1 = 0.2, 0.1, 0.35
    k = ConfusionKernel(p_long, p_trans, {0: 1.0, 1: d1, 2: 0.15})
    pl = p_long * d1
    pt = p_trans * d1
    expected = {
        TL: (1 - pl) * (1 - pt),
        BL: pl * (1 - pt),
        TR: (1 - pl) * pt,
        BR: pl * pt,
    }
    dist = burst_confusion(TL, FOUR, k)
    for corner, want in expected.items():
        assert dist[corner] == pytest.approx(want, abs=1e-12)
    assert dist[BL] == pytest.approx(0.07 * (1 - pt), abs=1e-12)
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)


def test_burst_confusion_rows_sum_to_one():
    k = ConfusionKernel(0.37, 0.21)
    for cues in (BASELINE, FOUR):
        for corner in Corner:
            assert sum(burst_confusion(corner, cues, k).values()) == pytest.approx(1.0)


# --- decode ---------------------------------------------------------------------


def test_decode_exact_match():
    for p in TPS:
        assert decode(p.corners, TPS, rng=0) == p.label


def test_decode_one_corner_off_unique_nearest():
    # (TL, TR, BL) with last corner misperceived as TL: perceived
    # (TL, TR, TL) still matches tps (TL,TR,BL) and (TL,TR,BR) equally...
    # pick a case with a unique argmax instead: perceived length-3 with two
    # positional matches against exactly one pattern.
    target = StrokePattern("t", (TL, TR, BL))
    other = StrokePattern("o", (BR, BL, TR))
    pset = PatternSet("two", (target, other))
    assert decode((TL, TR, TR), pset, rng=1) == "t"


def test_decode_tie_frequencies():
    # Two equidistant candidates: seeded decode picks each ~50%.
    a = StrokePattern("a", (TL, TR, BL))
    b = StrokePattern("b", (TL, TR, BR))
    pset = PatternSet("tie", (a, b))
    rng = np.random.default_rng(42)
    n = 100_000
    wins = sum(decode((TL, TR, TL), pset, rng=rng) == "a" for _ in range(n))
    assert wins / n == pytest.approx(0.5, abs=0.01)


def test_decode_prefix_scoring_for_length_mismatch():
    short = StrokePattern("s", (TL, TR))
    longer = StrokePattern("l", (TL, TR, BL, BR))
    pset = PatternSet("mixed", (short, longer))
    # perceived 4 corners matching the long pattern everywhere
    assert decode((TL, TR, BL, BR), pset, rng=0) == "l"


# --- exact confusion -------------------------------------------------------------


def test_exact_zero_noise_identity():
    pred = exact_confusion(TPS, BASELINE, ConfusionKernel.zero_noise())
    assert np.array_equal(pred.matrix, np.eye(24))
    assert pred.accuracy == 1.0


def test_exact_uniform_kernel_chance_accuracy():
    pred = exact_confusion(TPS, BASELINE, ConfusionKernel.uniform())
    assert pred.accuracy == pytest.approx(1 / 24, abs=1e-9)


def test_exact_rows_stochastic():
    pred = exact_confusion(TPS, FOUR, ConfusionKernel())
    assert np.allclose(pred.matrix.sum(axis=1), 1.0, atol=1e-9)


def test_four_hetero_beats_baseline():
    k = ConfusionKernel()
    acc_base = exact_confusion(TPS, BASELINE, k).accuracy
    acc_four = exact_confusion(TPS, FOUR, k).accuracy
    assert acc_four > acc_base


def test_cue_benefit_for_any_shared_swap_probability():
    for p_long, p_trans in [(0.1, 0.1), (0.3, 0.2), (0.5, 0.5)]:
        k = ConfusionKernel(p_long, p_trans)
        assert (
            exact_confusion(TPS, FOUR, k).accuracy
            >= exact_confusion(TPS, BASELINE, k).accuracy
        )


def test_monotone_in_swap_probabilities():
    grid = [0.0, 0.1, 0.25, 0.4]
    accs = {}
    for pl in grid:
        for pt in grid:
            accs[(pl, pt)] = exact_confusion(
                TPS, BASELINE, ConfusionKernel(pl, pt)
            ).accuracy
    for i, pl in enumerate(grid):
        for j, pt in enumerate(grid):
            if i + 1 < len(grid):
                assert accs[(grid[i + 1], pt)] <= accs[(pl, pt)] + 1e-12
            if j + 1 < len(grid):
                assert accs[(pl, grid[j + 1])] <= accs[(pl, pt)] + 1e-12


def test_enumeration_guard():
    nine = StrokePattern("nine", (TL, TR) * 4 + (TL,))
    pset = PatternSet("big", (nine, StrokePattern("x", (TL, TR))))
    with pytest.raises(SimulationError, match="enumeration guard"):
        exact_confusion(pset, BASELINE, ConfusionKernel())


# --- monte carlo -------------------------------------------------------------------


def test_mc_deterministic_per_seed():
    a = monte_carlo_confusion(TPS, BASELINE, ConfusionKernel(), 2000, seed=11)
    b = monte_carlo_confusion(TPS, BASELINE, ConfusionKernel(), 2000, seed=11)
    assert np.array_equal(a.matrix, b.matrix)
    c = monte_carlo_confusion(TPS, BASELINE, ConfusionKernel(), 2000, seed=12)
    assert not np.array_equal(a.matrix, c.matrix)


def test_mc_one_trial_one_hot_rows():
    pred = monte_carlo_confusion(TPS, BASELINE, ConfusionKernel(), 1, seed=5)
    assert np.all(pred.matrix.max(axis=1) == 1.0)
    assert np.allclose(pred.matrix.sum(axis=1), 1.0)


def test_mc_converges_to_exact():
    k = ConfusionKernel()
    exact = exact_confusion(TPS, BASELINE, k).matrix
    mc = monte_carlo_confusion(TPS, BASELINE, k, 200_000, seed=3).matrix
    assert np.max(np.abs(mc - exact)) < 0.012


def test_mc_error_scales_like_inverse_sqrt_n():
    # Quadrupling the trial count should roughly halve the RMS cell error.
    k = ConfusionKernel()
    exact = exact_confusion(TPS, BASELINE, k).matrix

    def rms_err(n, seeds):
        errs = []
        for s in seeds:
            mc = monte_carlo_confusion(TPS, BASELINE, k, n, seed=s).matrix
            errs.append(np.sqrt(np.mean((mc - exact) ** 2)))
        return np.mean(errs)

    e_small = rms_err(4_000, seeds=range(4))
    e_large = rms_err(16_000, seeds=range(4, 8))
    assert 0.5 / 1.5 <= e_large / e_small <= 0.5 * 1.5


def test_mc_requires_positive_trials():
    with pytest.raises(SimulationError):
        monte_carlo_confusion(TPS, BASELINE, ConfusionKernel(), 0, seed=0)


def test_mc_mixed_length_set():
    pset = PatternSet(
        "mixed",
        (
            StrokePattern("ab", (TL, TR)),
            StrokePattern("abc", (TL, TR, BL)),
            StrokePattern("abcd", (TL, TR, BL, BR)),
        ),
    )
    pred = monte_carlo_confusion(pset, FOUR, ConfusionKernel(), 2000, seed=9)
    assert np.allclose(pred.matrix.sum(axis=1), 1.0)
    assert pred.accuracy > 0.5


def test_save_csv(tmp_path):
    pred = exact_confusion(TPS, FOUR, ConfusionKernel())
    path = tmp_path / "cm.csv"
    pred.save_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0].startswith("stimulus,tps_01")
    assert len(lines) == 25
