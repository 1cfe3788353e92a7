import pytest

from tactokit.cues import (
    AxisConfig,
    Cue,
    Method,
    assign_cues,
    cue_distinctness,
)
from tactokit.patterns import Corner

TL, TR, BL, BR = Corner.TL, Corner.TR, Corner.BL, Corner.BR


def identity_count(cmap):
    return len({(c.carrier_hz, c.rough) for c in cmap.by_corner.values()})


@pytest.mark.parametrize(
    "method,expected",
    [(Method.BASELINE, 1), (Method.TWO_HETERO, 2), (Method.FOUR_HETERO, 4)],
)
def test_cue_cardinality(method, expected):
    assert identity_count(assign_cues(method)) == expected


@pytest.mark.parametrize("longitudinal", ["vertical", "horizontal"])
def test_cue_cardinality_any_axis(longitudinal):
    rough_end = "top" if longitudinal == "vertical" else "left"
    high = "right" if longitudinal == "vertical" else "top"
    axis = AxisConfig(longitudinal=longitudinal, rough_end=rough_end, high_freq_side=high)
    for method, expected in [
        (Method.BASELINE, 1),
        (Method.TWO_HETERO, 2),
        (Method.FOUR_HETERO, 4),
    ]:
        assert identity_count(assign_cues(method, axis)) == expected


def test_baseline_all_smooth_170():
    cmap = assign_cues(Method.BASELINE)
    for corner in Corner:
        cue = cmap.cue(corner)
        assert cue.carrier_hz == 170.0
        assert not cue.rough


def test_two_hetero_shares_cue_at_equal_longitudinal_coordinate():
    cmap = assign_cues(Method.TWO_HETERO)
    axis = cmap.axis
    for corner in Corner:
        partner = axis.transverse_neighbor(corner)  # same longitudinal coord
        assert cmap.cue(corner) == cmap.cue(partner)
        assert cmap.cue(corner).carrier_hz == 170.0
    # roughness differs between the two longitudinal positions
    for corner in Corner:
        other = axis.longitudinal_neighbor(corner)
        assert cmap.cue(corner).rough != cmap.cue(other).rough


def test_four_hetero_axis_structure():
    cmap = assign_cues(Method.FOUR_HETERO)
    axis = cmap.axis
    cues = [cmap.cue(c) for c in Corner]
    assert len({(c.carrier_hz, c.rough) for c in cues}) == 4
    for corner in Corner:
        # A longitudinal neighbor shares the transverse coordinate, so it
        # shares the carrier; roughness flips along the longitudinal axis.
        longi = axis.longitudinal_neighbor(corner)
        trans = axis.transverse_neighbor(corner)
        assert cmap.cue(corner).carrier_hz == cmap.cue(longi).carrier_hz
        assert cmap.cue(corner).rough != cmap.cue(longi).rough
        assert cmap.cue(corner).carrier_hz != cmap.cue(trans).carrier_hz


def test_four_hetero_neighbor_distinctness():
    cmap = assign_cues(Method.FOUR_HETERO)
    axis = cmap.axis
    for corner in Corner:
        longi = axis.longitudinal_neighbor(corner)
        trans = axis.transverse_neighbor(corner)
        diag = next(c for c in Corner if c not in (corner, longi, trans))
        assert cue_distinctness(cmap.cue(corner), cmap.cue(longi)) >= 1
        assert cue_distinctness(cmap.cue(corner), cmap.cue(trans)) >= 1
        assert cue_distinctness(cmap.cue(corner), cmap.cue(diag)) == 2


def test_assign_cues_deterministic():
    assert assign_cues(Method.FOUR_HETERO) == assign_cues(Method.FOUR_HETERO)


def test_distinctness_values():
    a = Cue(carrier_hz=170.0, rough=False)
    assert cue_distinctness(a, Cue(carrier_hz=170.0, rough=False)) == 0
    assert cue_distinctness(a, Cue(carrier_hz=170.0, rough=True)) == 1
    assert cue_distinctness(a, Cue(carrier_hz=300.0, rough=True)) == 2


def test_cue_invariants():
    with pytest.raises(ValueError):
        Cue(carrier_hz=0.0)
    with pytest.raises(ValueError):
        Cue(carrier_hz=170.0, rough=True, mod_hz=200.0)
    with pytest.raises(ValueError):
        Cue(drive_level=1.5)


def test_nominal_volts_metadata():
    assert Cue(carrier_hz=170.0).nominal_volts == 5.0
    assert Cue(carrier_hz=300.0).nominal_volts == 9.0
    assert Cue(carrier_hz=200.0).nominal_volts is None


def test_cue_overrides_gain_only():
    cmap = assign_cues(Method.BASELINE)
    quieter = cmap.with_overrides({TL: Cue(carrier_hz=170.0, drive_level=0.5)})
    assert quieter.cue(TL).drive_level == 0.5
    assert identity_count(quieter) == 1


def test_cue_overrides_rejects_cardinality_change():
    cmap = assign_cues(Method.BASELINE)
    with pytest.raises(ValueError):
        cmap.with_overrides({TL: Cue(carrier_hz=300.0)})


def test_method_parse():
    assert Method.parse("2-hetero") is Method.TWO_HETERO
    assert Method.parse("BASELINE") is Method.BASELINE
    with pytest.raises(ValueError):
        Method.parse("8-hetero")


def test_axis_config_validation():
    with pytest.raises(ValueError):
        AxisConfig(longitudinal="diagonal")
    with pytest.raises(ValueError):
        AxisConfig(longitudinal="vertical", rough_end="left")
