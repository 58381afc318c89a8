"""Stochastic Pauli channel symmetrisation, randomisation, and mitigation.

The package builds n-qubit Pauli error channels, averages them over qubit
relabelings or random draws to reduce the number of distinct coefficients,
verifies the resulting counts against brute-force orbit oracles, and applies
the averaged channels in three simulated error-mitigation studies.
"""

from .channel import (
    PauliChannel,
    average_channels,
    bit_flip_channel,
    channel_complexity,
    channel_distance,
    channel_from_json,
    channel_to_json,
    compose_channels,
    depolarizing_channel,
    depolarizing_parameter,
    identity_channel,
    make_channel,
    uniform_channel,
)
from .circuits import (
    Circuit,
    DensityMatrix,
    Gate,
    apply_channel,
    bell_pair_circuit,
    circuit_from_json,
    circuit_to_json,
    expectation_from_counts,
    expectation_from_distribution,
    expectation_pauli,
    loop_rotation_circuit,
    parallel_average,
    permute_circuit,
    permute_state,
    propagate_through_pauli_layer,
    run_noisy,
    run_trajectories,
    sample_counts,
    two_bell_pairs_circuit,
    zero_state,
)
from .experiments import (
    EXPERIMENTS,
    ExperimentReport,
    emit_report,
    run_experiment,
)
from .mitigation import (
    MitigationResult,
    ReadoutNoiseModel,
    TransitionMatrix,
    apply_readout_noise,
    calibrate_full,
    calibrate_symmetric,
    estimate_lambda,
    independent_flip_model,
    loop_correlated_flip_model,
    mitigate_and_score,
    mitigate_distribution,
    mitigate_expectation,
    transition_matrix_from_json,
    transition_matrix_to_json,
    tvd,
)
from .pauli import (
    all_subsets,
    codes_with_support,
    decode_pauli,
    encode_pauli,
    pauli_support,
    pauli_weight,
)
from .randomisation import (
    R1Model,
    R2Model,
    average_sampled_channels,
    default_eta_map,
    fit_depolarizing,
    fit_subset_depolarizing,
    hoeffding_epsilon,
    hoeffding_n,
    max_mean_deviation,
    sample_channel,
)
from .symmetry import (
    CountFormula,
    QubitPermutation,
    SymmetryGroup,
    act_on_pauli,
    burnside_orbit_count,
    closed_form_count,
    enumerate_orbits,
    make_group,
    oracle_count,
    orbit_representatives,
    permute_channel,
    symmetrize_channel,
    verify_count,
)

__version__ = "0.1.0"
