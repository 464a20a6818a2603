"""Heisenberg-limited CZ calibration with robust phase estimation, on a simulated device."""

from .circuits import CircuitSpec, Gate, generate_rpe_circuits
from .model import (
    TARGETS,
    CzModelParams,
    RelativePhases,
    eigenphase_table,
    params_to_phases,
    phases_to_params,
    virtual_z_correction,
)
from .rpe import (
    GenerationEstimate,
    IQMeasurement,
    estimate_generations,
    last_trusted_estimate,
    post_selected_expectation,
    robustness_margin,
    unwinding_integer,
    wrapped_arctan2,
)
from .sim import NoiseModel, apply_circuit, build_1q_gate, build_cz_unitary, sample_counts

__version__ = "0.1.0"
