"""Inter-event interval microscopy.

Simulate event-camera output of fluorescent samples under pulsed
excitation, reconstruct density frames from inter-event intervals and
score them against ground truth.
"""

from .events import (
    EMPTY,
    MEASURED,
    SINGLE_EVENT,
    Event,
    EventStream,
    FluoroField,
    FrameSequence,
    ModulationSchedule,
    PhotometricModel,
    SensorConfig,
    validate_stream,
    window,
)
from .reconstruct import (
    IeiOptions,
    RegimeReport,
    reconstruct_iei,
    reconstruct_integration,
    regime_check,
)
from .simulator import shake_sequence, simulate_motion_stream, simulate_pulse_stream

__version__ = "0.1.0"
