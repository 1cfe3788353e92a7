"""tactokit: spatiotemporal tactile patterns for a 2x2 wrist-worn tactor array.

Compiles alphanumeric characters into corner-stroke patterns, assigns
heterogeneous vibrotactile cues per tactor, renders and exports drive
waveforms, predicts recognition confusion, and runs the human-in-the-loop
recognition experiment protocol with confusion-matrix / information-transfer
analytics.
"""

from .analysis import (
    ConfusionMatrix,
    TrialRecord,
    accuracy,
    build_confusion,
    exclude_outliers,
    information_transfer,
    rt_stats,
)
from .cues import AxisConfig, Cue, CueMap, Method, assign_cues, cue_distinctness
from .device import (
    PlaybackReport,
    SerialSink,
    VirtualSink,
    WavFileSink,
    WireEvent,
    decode_frame,
    encode_frame,
    play,
)
from .engine import (
    Phase,
    Session,
    SessionConfig,
    Study,
    balanced_latin_square,
    build_trial_queue,
)
from .patterns import (
    Corner,
    GridGeometry,
    PatternSet,
    ReferenceFrame,
    StrokePattern,
    TimingParams,
    enumerate_three_point_strokes,
    load_pattern_set,
    map_to_channels,
    pattern_duration,
    shipped_pattern_set,
    write_pattern_set,
)
from .simulate import (
    ConfusionKernel,
    PredictedConfusion,
    burst_confusion,
    decode,
    exact_confusion,
    monte_carlo_confusion,
)
from .synth import (
    DeviceSchedule,
    RenderParams,
    WaveBuffer,
    compile_schedule,
    export_wav,
    render_burst,
    render_pattern,
)

__version__ = "0.1.0"
