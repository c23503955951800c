"""dqchain: stochastic-trajectory simulation of qubit chains with engineered
local dissipation, Floquet-engineered couplings, and symmetry-protected
multiple steady states."""

__version__ = "0.1.0"

from .qcore import (                                     # noqa: F401
    DensityOperator,
    LindbladModel,
    LinearOperator,
    StateVector,
    TimeGrid,
    basis_index,
    evolve_density,
    evolve_state,
    expectation,
    liouvillian_matrix,
    pauli_string,
    product_state,
    steady_state_projection,
    steady_states,
)
from .noise import (                                     # noqa: F401
    EnsembleResult,
    EnsembleSpec,
    NoiseRealization,
    PulseSchedule,
    gamma_from_amplitude,
    mcwf_ensemble,
    noise_hamiltonian,
    rabi_curve,
    run_ensemble,
    run_trajectory,
    sample_noise,
    to_pulse_schedule,
    weak_order_check,
)
from .chain import (                                     # noqa: F401
    ChainSpec,
    DissipationSpec,
    FloquetDeviceSpec,
    Modulation,
    broken_chain_spec,
    decoherence_jumps,
    effective_couplings,
    lab_frame_hamiltonian,
    nnn_suppression_metric,
    xx_hamiltonian,
)
from .symmetry import (                                  # noqa: F401
    bell_chain_state,
    bell_prep_circuit,
    conserved_classifier,
    jordan_wigner_modes,
    predicted_phase_curve,
    predicted_steady_value,
    sector_projectors,
    sector_state,
    sector_weights,
)
