"""Iterative maximum-likelihood estimation from finite-shot count tables.

Each iteration reweights the two pointer branches of every readout row by
the 2x2 operator

    R_x = sum_m (F[x, m] / P[x, m]) |m><m|,

with P predicted from the current estimate, and applies the resulting
generator to the estimate:  W psi = alpha' + V+ beta', where
(alpha'_x, beta'_x) = R_x (alpha_x, beta_x).  The map is applied repeatedly
with renormalization until the infidelity between consecutive iterates drops
below tolerance.  Likelihood ascent is tracked but not guaranteed; no
convergence proof exists for iterations of this kind.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coupling import DENSE_CAP, CouplingOperator, apply_v, apply_v_dagger
from .measurement import CountTable, ProbabilityTable, joint_probabilities
from .outcomes import OutcomeLabel, pointer_projectors
from .states import StateVector, fidelity, phase_fix


@dataclass(frozen=True)
class MLConfig:
    """Iteration controls; defaults reproduce the undiluted algorithm."""

    max_iters: int = 1000
    consec_infidelity_tol: float = 1e-10
    prob_floor: float = 1e-12
    init_floor: float = 1e-6
    dilution: float = 1.0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        for name in ("consec_infidelity_tol", "prob_floor", "init_floor"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if not 0.0 < self.dilution <= 1.0:
            raise ValueError(f"dilution must lie in (0, 1], got {self.dilution}")


@dataclass(frozen=True)
class IterationRecord:
    log_likelihood: float
    consec_infidelity: float
    fidelity_to_truth: float | None = None


@dataclass
class MLState:
    """Current estimate plus the per-iteration convergence history."""

    estimate: StateVector
    iterations: int = 0
    history: list[IterationRecord] = field(default_factory=list)


def init_estimate(counts: CountTable, init_floor: float = 1e-6) -> StateVector:
    """Starting guess: amplitudes proportional to sqrt(F[x, Z0] / F).

    The Z0 column estimates |psi_x|^2 directly.  Amplitudes are floored at
    init_floor so no basis state starts exactly dark, then normalized.
    """
    if counts.total < 1:
        raise ValueError("cannot initialize from an empty count table")
    amp = np.sqrt(counts.counts[:, OutcomeLabel.Z0] / counts.total)
    amp = np.maximum(amp, init_floor)
    return StateVector.normalized(counts.dims, amp.astype(np.complex128))


def pointer_weights(
    counts: CountTable, probs: ProbabilityTable, prob_floor: float = 1e-12
) -> np.ndarray:
    """Per-row 2x2 reweighting operators R_x, shape (N, 2, 2).

    Cells with zero counts contribute nothing regardless of the predicted
    probability (the 0/P limit); predicted probabilities under cells that do
    carry counts are floored at prob_floor to keep the weights finite.
    """
    f = counts.counts
    w = np.where(f > 0, f / np.maximum(probs.P, prob_floor), 0.0)
    return np.einsum("xm,mij->xij", w, pointer_projectors())


def apply_w_streamed(
    estimate: StateVector,
    counts: CountTable,
    op: CouplingOperator,
    prob_floor: float = 1e-12,
) -> np.ndarray:
    """W[estimate] @ estimate without materializing W.

    Computes alpha = estimate, beta = V alpha, reweights each (alpha_x,
    beta_x) pair by R_x, and recombines as alpha' + V+ beta'.  Cost is two
    factored applications of V plus O(N) arithmetic.
    """
    if estimate.dims != op.dims or counts.dims != op.dims:
        raise ValueError("dimension mismatch between estimate, counts, and coupling")
    probs = joint_probabilities(estimate, op)
    weights = pointer_weights(counts, probs, prob_floor)
    alpha = estimate.amp
    beta = apply_v(op, alpha)
    branches = np.stack([alpha, beta], axis=1)
    reweighted = np.einsum("xij,xj->xi", weights, branches)
    return reweighted[:, 0] + apply_v_dagger(op, reweighted[:, 1])


def build_w_dense(
    counts: CountTable,
    probs: ProbabilityTable,
    op: CouplingOperator,
    prob_floor: float = 1e-12,
) -> np.ndarray:
    """The full N x N iteration generator; Hermitian positive semidefinite.

    W = D00 + D01 V + V+ D10 + V+ D11 V with Dij = diag over x of (R_x)_ij.
    Kept as the dense oracle for the streamed application; capped at
    N = DENSE_CAP.
    """
    if counts.dims.total > DENSE_CAP:
        raise ValueError(f"dense W capped at N = {DENSE_CAP}")
    weights = pointer_weights(counts, probs, prob_floor)
    v = op.dense_matrix()
    r00, r01 = weights[:, 0, 0], weights[:, 0, 1]
    r10, r11 = weights[:, 1, 0], weights[:, 1, 1]
    w = np.diag(r00).astype(np.complex128)
    w += r01[:, None] * v
    w += v.conj().T * r10[None, :]
    w += v.conj().T @ (r11[:, None] * v)
    return w


def log_likelihood(
    counts: CountTable, probs: ProbabilityTable, prob_floor: float = 1e-12
) -> float:
    """sum over cells of F[x, m] log P[x, m]; empty cells contribute zero."""
    f = counts.counts
    mask = f > 0
    return float(np.sum(f[mask] * np.log(np.maximum(probs.P[mask], prob_floor))))


def iterate_once(
    state: MLState,
    counts: CountTable,
    op: CouplingOperator,
    config: MLConfig,
    truth: StateVector | None = None,
) -> MLState:
    """One update psi -> normalize(W psi), optionally diluted toward psi."""
    candidate = apply_w_streamed(state.estimate, counts, op, config.prob_floor)
    scale = np.linalg.norm(candidate)
    if scale == 0.0:
        raise ValueError("W produced a null vector; the count table is pathological")
    if config.dilution < 1.0:
        candidate = (
            (1.0 - config.dilution) * scale * state.estimate.amp
            + config.dilution * candidate
        )
        if np.linalg.norm(candidate) == 0.0:
            raise ValueError("diluted update produced a null vector")
    new_estimate = phase_fix(StateVector.normalized(state.estimate.dims, candidate))
    overlap = abs(np.vdot(state.estimate.amp, new_estimate.amp)) ** 2
    record = IterationRecord(
        log_likelihood=log_likelihood(
            counts, joint_probabilities(new_estimate, op), config.prob_floor
        ),
        consec_infidelity=max(1.0 - overlap, 0.0),
        fidelity_to_truth=fidelity(new_estimate, truth) if truth is not None else None,
    )
    return MLState(new_estimate, state.iterations + 1, state.history + [record])


def run(
    counts: CountTable,
    op: CouplingOperator,
    config: MLConfig | None = None,
    truth: StateVector | None = None,
) -> MLState:
    """Iterate from the Z0-seeded guess until consecutive-iterate convergence.

    Stops when the infidelity between consecutive iterates falls below
    config.consec_infidelity_tol, or after config.max_iters updates.  When a
    truth state is supplied each record also carries fidelity to it.
    """
    config = config or MLConfig()
    state = MLState(init_estimate(counts, config.init_floor))
    for _ in range(config.max_iters):
        state = iterate_once(state, counts, op, config, truth)
        if state.history[-1].consec_infidelity < config.consec_infidelity_tol:
            break
    return state


def converged(state: MLState, config: MLConfig) -> bool:
    """Did the run stop on the infidelity tolerance rather than max_iters?"""
    return bool(state.history) and (
        state.history[-1].consec_infidelity < config.consec_infidelity_tol
    )
