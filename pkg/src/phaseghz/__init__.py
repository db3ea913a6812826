"""Exact simulation and analysis of four-photon phase-GHZ Bell experiments."""

__version__ = "0.1.0"

from .quantum import (  # noqa: E402
    DensityMatrix,
    LocalOperator,
    PostSelectionError,
    StateVector,
    apply_local_phase,
    fidelity_pure_target,
    make_bell_phi_plus,
    make_bell_psi_plus,
    make_phase_ghz,
    maximally_mixed,
    pbs_fusion,
    pure_to_density,
    state_fidelity,
    tensor,
)
from .measurement import (  # noqa: E402
    CorrelationTable,
    CountsRecord,
    correlation_from_counts,
    correlation_from_state,
    full_correlation_table,
    outcome_probabilities,
)
from .gbi import gbi_from_state, gbi_s_parameter, lhv_max, quantum_prediction  # noqa: E402
from .witness import witness_expectation, witness_from_settings, witness_operator  # noqa: E402
from .experiment import (  # noqa: E402
    ExperimentConfig,
    NoiseModel,
    apply_noise,
    run_bell_experiment,
    significance,
    theta_scan,
)
from .tomography import (  # noqa: E402
    fidelity_with_error,
    make_tomography_set,
    mle_reconstruct,
    simulate_tomography_counts,
)
