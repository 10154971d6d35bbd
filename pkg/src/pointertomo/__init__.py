"""Pointer-qubit quantum state tomography, end to end at desk scale.

A single ancilla qubit is coupled to the system by a controlled unitary
V = e^{i theta P}; measuring the system register and tomographing the pointer
in three fixed bases exposes every amplitude ratio of the system state.  The
package simulates the forward model, samples finite-shot data, and recovers
the state both by exact linear inversion and by iterative maximum-likelihood
estimation.
"""

from .coupling import (
    CaseReport,
    CouplingOperator,
    CouplingSpec,
    DangerousCaseError,
    apply_v,
    apply_v_dagger,
    build_coupling,
    check_dangerous_block_diagonal,
    check_dangerous_compatible,
    check_dangerous_degenerate_eigenstate,
)
from .exact import ReconstructionResult, build_linear_system, phase_angle, reconstruct
from .measurement import (
    CountTable,
    ProbabilityTable,
    empirical_frequencies,
    ideal_counts,
    joint_probabilities,
    read_counts,
    sample_counts,
    write_counts,
)
from .mle import MLConfig, MLState, apply_w_streamed, build_w_dense, init_estimate
from .mle import run as run_ml
from .outcomes import OUTCOME_TEXT, OutcomeLabel
from .states import (
    DegenerateGroundStateWarning,
    Dims,
    StateVector,
    fidelity,
    load_state,
    make_dicke,
    make_ghz,
    make_tfim_ground,
    make_w,
    phase_fix,
    random_state,
    save_state,
)

__version__ = "0.1.0"
