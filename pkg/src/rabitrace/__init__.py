"""rabitrace: Bayesian Rabi-frequency estimation from photodetection records.

A numpy/scipy library for simulating continuous photon counting on a damped,
resonantly driven two-level atom — with either an ideal detector or a
realistic avalanche photodiode (finite bandwidth, dead time, dark counts,
inefficiency via the quantum efficiency eta) — and for inferring the unknown
drive strength from the click record with a bank of linear quantum
trajectories.
"""

from .atom import (
    EXCITED,
    GROUND,
    AtomState,
    PositivityError,
    SystemParams,
    apply_J,
    evolve_me,
    lindblad_generator,
    lindblad_rhs,
    me_propagator,
    steady_state,
    steady_state_flux,
)
from .detector import (
    DetectorParams,
    OstensibleRate,
    SupersystemState,
    default_ostensible_rate,
    linear_step_ideal,
    linear_step_realistic,
    ostensible_rate,
    total_state,
)
from .records import (
    MeasurementRecord,
    RecordKind,
    simulate_avalanche_record,
    simulate_ideal_record,
    thin_absorptions,
)
from .estimator import (
    OmegaGrid,
    PosteriorSnapshot,
    TrajectoryBank,
    advance_bank,
    best_state,
    build_grid,
    info_gain_ensemble,
    known_omega_grid,
    posterior,
    sample_omega_true,
)
from .waiting_times import (
    WaitingTimeCurve,
    avalanche_initial_state,
    ideal_wtd,
    ideal_wtd_curve,
    inefficient_wtd,
    realistic_wtd,
)

__version__ = "0.1.0"
