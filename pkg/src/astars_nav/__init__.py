"""Satellite positioning through an active transmit/reflect surface.

A simulation library for the two-stage surface-assisted carrier-phase fix:
observation synthesis, surface-centroid and time-term estimation, ELoS
range correction, receiver fix, ambiguity resolution and error budgets.
"""

from .astars import AstarsArray, ElementCoefficient, ElosGeometry, Mode, PhaseShiftModel
from .config import ConfigError, ScenarioConfig, SweepSpec, load_config, load_sweep_spec
from .geo import EcefVector, LocalAngles, SatelliteState
from .montecarlo import RunResult, run_monte_carlo, sweep
from .observation import CarrierPhaseObs, ClockModel, ObsErrorConfig, TimeSyncModel
from .solver import AstarsFix, IterationConfig, ReceiverFix

__version__ = "0.1.0"

__all__ = [
    "AstarsArray", "ElementCoefficient", "ElosGeometry", "Mode", "PhaseShiftModel",
    "ConfigError", "ScenarioConfig", "SweepSpec", "load_config", "load_sweep_spec",
    "EcefVector", "LocalAngles", "SatelliteState",
    "RunResult", "run_monte_carlo", "sweep",
    "CarrierPhaseObs", "ClockModel", "ObsErrorConfig", "TimeSyncModel",
    "AstarsFix", "IterationConfig", "ReceiverFix",
]
