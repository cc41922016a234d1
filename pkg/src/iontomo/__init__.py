"""Fluorescence-readout photon statistics and fuzzy-measurement quantum state
tomography for trapped-ion qubits."""

from .photon_stats import (
    CountDistribution,
    FluorescenceParams,
    IndistinguishableError,
    ReadoutErrorModel,
    TruncationPolicy,
    bright_distribution,
    choose_threshold,
    dark_decay_pmf,
    dark_distribution,
    error_rates,
    factorial_moments,
    generating_function,
    poisson_pmf,
    regularized_lower_incomplete_gamma,
)
from .quantum import (
    DensityMatrix,
    PureState,
    Unitary,
    fidelity,
    haar_random_pure_state,
    tensor_product,
)
from .measurement import (
    BASIS_UNITARIES,
    CountRecord,
    FuzzyQubitPOVM,
    ProtocolRow,
    build_fuzzy_povm,
    ideal_outcome_operators,
    outcome_probabilities,
    pauli_protocol,
    sample_counts,
    simulate_record,
)
from .tomography import (
    ReconstructionConfig,
    ReconstructionResult,
    infidelity,
    likelihood_gradient,
    log_likelihood,
    reconstruct,
)
from .bench import (
    BenchmarkConfig,
    BenchmarkReport,
    DistributionStudy,
    StateOutcome,
    run_distribution_study,
    run_tomography_benchmark,
    write_benchmark_csv,
)

__version__ = "0.1.0"
