"""Wavefunction reconstruction by solving the readout-ratio linear system.

With alpha = psi and beta = V psi, every readout row obeys

    sqrt(P[x, Z1]) e^{i phi_x} psi_x = sqrt(P[x, Z0]) (V psi)_x,

where phi_x = arg[(P[x,X+] - P[x,X-]) + i(P[x,YL] - P[x,YR])] is the relative
phase between the two pointer branches.  Fixing one reference amplitude to 1
turns the remaining rows into an (N-1)-dimensional linear system for the
amplitude ratios, solved here by least squares so that sampled (noisy)
frequency tables degrade gracefully.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .coupling import (
    DENSE_CAP,
    CouplingOperator,
    DangerousCaseError,
    check_dangerous_block_diagonal,
    check_dangerous_compatible,
)
from .measurement import ProbabilityTable
from .outcomes import OutcomeLabel
from .states import StateVector, phase_fix

PHASE_FLOOR = 1e-14
_REF_FLOOR = 1e-14


@dataclass(frozen=True)
class ReconstructionResult:
    state: StateVector
    residual: float
    condition_estimate: float
    warnings: list[str]


def _phase_combination(P: np.ndarray) -> np.ndarray:
    """(P+ - P-) + i(PL - PR) per row; equals conj(alpha) * beta / 3 exactly."""
    return (
        P[:, OutcomeLabel.XPLUS]
        - P[:, OutcomeLabel.XMINUS]
        + 1j * (P[:, OutcomeLabel.YL] - P[:, OutcomeLabel.YR])
    )


def phase_angle(table: ProbabilityTable, x: int) -> float:
    """Relative pointer-branch phase phi_x of row x, in (-pi, pi]."""
    row = table.P[x]
    if row[OutcomeLabel.Z0] <= 0.0 or row[OutcomeLabel.Z1] <= 0.0:
        raise ValueError(f"row x={x} lacks Z-basis support; phase undefined")
    combo = _phase_combination(table.P[x : x + 1])[0]
    if abs(combo) < PHASE_FLOOR:
        raise ValueError(
            f"row x={x}: phase combination magnitude {abs(combo):.3e} below "
            f"{PHASE_FLOOR}; the branch product is numerically zero"
        )
    return float(np.angle(combo))


def _build_system(table: ProbabilityTable, op: CouplingOperator, ref: int):
    """Rows x != ref of the ratio system, with unknowns psi_y / psi_ref."""
    n_tot = table.dims.total
    if n_tot > DENSE_CAP:
        raise ValueError(f"linear reconstruction capped at N = {DENSE_CAP}")
    P = table.P
    sqrt_p0 = np.sqrt(P[:, OutcomeLabel.Z0])
    sqrt_p1 = np.sqrt(P[:, OutcomeLabel.Z1])
    combo = _phase_combination(P)
    unreliable = np.abs(combo) < PHASE_FLOOR
    unit = np.where(unreliable, 1.0 + 0.0j, combo / np.where(unreliable, 1.0, np.abs(combo)))

    keep = np.arange(n_tot) != ref
    cols = np.flatnonzero(keep)
    a = np.empty((n_tot - 1, n_tot - 1), dtype=np.complex128)
    b = np.empty(n_tot - 1, dtype=np.complex128)
    for i, x in enumerate(cols):
        vrow = op.row(x)
        a[i, :] = -sqrt_p0[x] * vrow[keep]
        b[i] = sqrt_p0[x] * vrow[ref]
        a[i, i] += sqrt_p1[x] * unit[x]
    return a, b, cols


def build_linear_system(table: ProbabilityTable, op: CouplingOperator):
    """The (N-1) x (N-1) system A (psi_y/psi_0) = b referenced to row x = 0."""
    if table.dims != op.dims:
        raise ValueError(f"dimension mismatch: table {table.dims}, coupling {op.dims}")
    if table.P[0, OutcomeLabel.Z0] <= 0.0:
        raise ValueError("row x=0 has no Z0 support; reference amplitude is zero")
    a, b, _ = _build_system(table, op, ref=0)
    return a, b


def _probs_eigenstate_signature(P: np.ndarray) -> bool:
    """Tight-tolerance eigenstate signature for exact probability tables."""
    p0, p1 = P[:, OutcomeLabel.Z0], P[:, OutcomeLabel.Z1]
    support = (p0 + p1) > 0.0
    if not np.any(support):
        return False
    gap = np.abs(p0 - p1)
    if np.any(support & (gap > 1e-10 * np.maximum(p0, p1) + 1e-14)):
        return False
    combo = _phase_combination(P)
    informative = support & (np.abs(combo) > PHASE_FLOOR)
    if not np.any(informative):
        return True
    directions = combo[informative] / np.abs(combo[informative])
    mean_dir = np.sum(directions)
    if abs(mean_dir) == 0.0:
        return False
    deviation = np.abs(np.angle(directions / (mean_dir / abs(mean_dir))))
    return bool(np.all(deviation < 1e-6))


def reconstruct(
    table: ProbabilityTable,
    op: CouplingOperator,
    shots: float | None = None,
) -> ReconstructionResult:
    """Solve the ratio system and assemble a normalized, phase-fixed state.

    Args:
        table: exact probabilities or empirical frequencies.
        shots: shot count behind an empirical table; enables the statistical
            reference-row rule (support below 1/shots moves the reference)
            and standard-error flagging of noisy phase rows.

    Raises DangerousCaseError when the coupling is diagonal or block diagonal;
    the eigenstate signature only attaches a warning, since the solve still
    returns the (non-unique) best ratio estimate.
    """
    if table.dims != op.dims:
        raise ValueError(f"dimension mismatch: table {table.dims}, coupling {op.dims}")
    compatible = check_dangerous_compatible(op)
    if compatible.flagged:
        raise DangerousCaseError(compatible.case, compatible.message)
    blocks = check_dangerous_block_diagonal(op)
    if blocks.flagged:
        raise DangerousCaseError(blocks.case, blocks.message)

    warnings: list[str] = []
    degenerate = _probs_eigenstate_signature(table.P)
    if degenerate:
        warnings.append(
            "degenerate_eigenstate: readout statistics match an eigenstate of "
            "the coupling generator; the solution is not unique"
        )

    p_z0 = table.P[:, OutcomeLabel.Z0]
    ref_floor = 1.0 / shots if shots else _REF_FLOOR
    ref = 0
    if p_z0[0] <= ref_floor:
        ref = int(np.argmax(p_z0))
        if p_z0[ref] <= 0.0:
            raise ValueError("no readout row has Z0 support; cannot fix a reference")
        warnings.append(f"reference_row_moved: x={ref} (row 0 has no Z0 support)")
    if p_z0[ref] < 0.01 * p_z0.max():
        warnings.append(f"small_reference_amplitude: P[{ref}, Z0] = {p_z0[ref]:.3e}")

    if shots:
        freq = table.P
        var = freq * (1.0 - freq) / shots
        sigma_combo = np.sqrt(
            np.sum(var[:, OutcomeLabel.XPLUS : OutcomeLabel.YR + 1], axis=1)
        )
        combo = np.abs(_phase_combination(freq))
        noisy = np.flatnonzero((combo < 3.0 * sigma_combo) & (freq[:, OutcomeLabel.Z0] > 0))
        if noisy.size:
            shown = ", ".join(str(x) for x in noisy[:8])
            more = "..." if noisy.size > 8 else ""
            warnings.append(f"phase_unreliable_rows: {noisy.size} rows ({shown}{more})")

    a, b, cols = _build_system(table, op, ref)
    solution, _, rank, sv = scipy.linalg.lstsq(a, b, lapack_driver="gelsd")
    if sv is not None and sv[-1] > 0:
        condition = float(sv[0] / sv[-1])
    else:
        condition = float("inf")
    if rank < a.shape[1] and not degenerate:
        raise ValueError(
            f"ratio system is rank deficient ({rank}/{a.shape[1]}), "
            f"condition estimate {condition:.3e}"
        )
    residual = float(np.linalg.norm(a @ solution - b))

    amp = np.zeros(table.dims.total, dtype=np.complex128)
    amp[ref] = 1.0
    amp[cols] = solution
    state = phase_fix(StateVector.normalized(table.dims, amp))
    return ReconstructionResult(state, residual, condition, warnings)


def result_to_dict(result: ReconstructionResult, fidelity_to_truth: float | None = None) -> dict:
    """JSON-ready summary of a reconstruction."""
    doc = {
        "amplitudes": [[z.real, z.imag] for z in result.state.amp],
        "residual": result.residual,
        "condition_estimate": result.condition_estimate,
        "warnings": list(result.warnings),
    }
    if fidelity_to_truth is not None:
        doc["fidelity_to_truth"] = fidelity_to_truth
    return doc
