"""System-pointer coupling unitary V and detection of its pathological forms.

Three variants are supported:

* ``local_x_sum`` -- V = v^(tensor n) with v = [[cos t, i sin t], [i sin t, cos t]],
  the exponential of t times the sum of single-qubit bit-flip operators.
* ``fourier`` -- V diagonal in the Fourier-conjugate basis: V = Q diag(e^{i p t}) Q+
  with Q[x, k] = exp(2 pi i x k / N) / sqrt(N) and k the rank of eigenvalue p.
* ``explicit`` -- a caller-supplied dense N x N unitary.

Reconstruction from pointer statistics is impossible (or non-unique) in three
situations; ``check_dangerous_*`` detect them:

* case "compatible_basis": V is diagonal in the computational basis, so every
  readout row carries only an overall factor.
* case "block_diagonal": V splits into blocks after a simultaneous row/column
  permutation; phases between the blocks are unobservable.
* case "degenerate_eigenstate": the prepared state is an eigenstate of the
  coupling generator, leaving only the eigenvalue observable.  Detected from
  the count statistics, not from V.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
import scipy.sparse as sparse
from scipy.sparse.csgraph import connected_components

from .outcomes import OutcomeLabel
from .states import Dims

if TYPE_CHECKING:
    from .measurement import CountTable

DENSE_CAP = 4096
ZERO_TOL = 1e-12
UNITARY_TOL = 1e-10

LOCAL_X_SUM = "local_x_sum"
FOURIER = "fourier"
EXPLICIT = "explicit"


class DangerousCaseError(ValueError):
    """Hard failure: reconstruction cannot be unique for this configuration."""

    def __init__(self, case: str, message: str):
        super().__init__(f"dangerous case '{case}': {message}")
        self.case = case


@dataclass(frozen=True)
class CaseReport:
    """Outcome of one dangerous-case check."""

    case: str
    flagged: bool
    message: str = ""
    components: list[list[int]] | None = None


@dataclass(frozen=True, eq=False)
class CouplingSpec:
    """Parameters defining the coupling unitary; validated on construction."""

    variant: str
    dims: Dims
    theta: float | None = None
    eigenvalues: np.ndarray | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.variant == LOCAL_X_SUM:
            if self.dims.d != 2:
                raise ValueError("local_x_sum coupling requires qubits (d = 2)")
            if self.theta is None or not 0.0 < self.theta < np.pi / 2:
                raise ValueError(
                    f"local_x_sum coupling angle must lie in (0, pi/2), got {self.theta}"
                )
        elif self.variant == FOURIER:
            if self.theta is None:
                raise ValueError("fourier coupling requires an angle theta")
            if self.eigenvalues is not None:
                eigs = np.sort(np.asarray(self.eigenvalues, dtype=np.float64))
                if eigs.shape != (self.dims.total,):
                    raise ValueError(
                        f"need {self.dims.total} eigenvalues, got {eigs.shape}"
                    )
                eigs.flags.writeable = False
                object.__setattr__(self, "eigenvalues", eigs)
        elif self.variant == EXPLICIT:
            m = np.asarray(self.matrix, dtype=np.complex128)
            n_tot = self.dims.total
            if m.shape != (n_tot, n_tot):
                raise ValueError(f"matrix has shape {m.shape}, expected {(n_tot, n_tot)}")
            defect = np.max(np.abs(m.conj().T @ m - np.eye(n_tot)))
            if defect > UNITARY_TOL:
                raise ValueError(f"matrix is not unitary: max |V+V - I| = {defect:.3e}")
            m.flags.writeable = False
            object.__setattr__(self, "matrix", m)
        else:
            raise ValueError(f"unknown coupling variant {self.variant!r}")

    @classmethod
    def local_x_sum(cls, n: int, theta: float) -> "CouplingSpec":
        return cls(LOCAL_X_SUM, Dims(n, 2), theta=theta)

    @classmethod
    def fourier(cls, dims: Dims, theta: float, eigenvalues=None) -> "CouplingSpec":
        return cls(FOURIER, dims, theta=theta, eigenvalues=eigenvalues)

    @classmethod
    def explicit(cls, dims: Dims, matrix: np.ndarray) -> "CouplingSpec":
        return cls(EXPLICIT, dims, matrix=matrix)


@dataclass(eq=False)
class CouplingOperator:
    """The unitary V with factored and (lazily cached) dense access."""

    spec: CouplingSpec
    single_site_factor: np.ndarray | None = None
    _dense: np.ndarray | None = field(default=None, repr=False)

    @property
    def dims(self) -> Dims:
        return self.spec.dims

    def _fourier_phases(self) -> np.ndarray:
        eigs = self.spec.eigenvalues
        if eigs is None:
            eigs = np.arange(self.dims.total, dtype=np.float64)
        return np.exp(1j * self.spec.theta * eigs)

    def dense_matrix(self) -> np.ndarray:
        """Materialize V entrywise; cached.  Refuses above N = DENSE_CAP."""
        if self._dense is not None:
            return self._dense
        n_tot = self.dims.total
        if n_tot > DENSE_CAP:
            raise ValueError(
                f"dense coupling matrix capped at N = {DENSE_CAP}, got N = {n_tot}"
            )
        if self.spec.variant == LOCAL_X_SUM:
            dense = np.array([[1.0]], dtype=np.complex128)
            for _ in range(self.dims.n):
                dense = np.kron(dense, self.single_site_factor)
        elif self.spec.variant == FOURIER:
            grid = np.outer(np.arange(n_tot), np.arange(n_tot))
            q = np.exp(2j * np.pi * grid / n_tot) / np.sqrt(n_tot)
            dense = (q * self._fourier_phases()) @ q.conj().T
        else:
            dense = self.spec.matrix
        dense = np.ascontiguousarray(dense)
        dense.flags.writeable = False
        self._dense = dense
        return dense

    def row(self, x: int) -> np.ndarray:
        """Row x of V without materializing the full matrix when factored."""
        if self._dense is not None:
            return self._dense[x]
        if self.spec.variant == LOCAL_X_SUM:
            row = np.array([1.0], dtype=np.complex128)
            digits_high_to_low = [(x >> j) & 1 for j in range(self.dims.n - 1, -1, -1)]
            for digit in digits_high_to_low:
                row = np.kron(row, self.single_site_factor[digit])
            return row
        return self.dense_matrix()[x]


def build_coupling(spec: CouplingSpec) -> CouplingOperator:
    """Construct the coupling operator for a validated spec."""
    if spec.variant == LOCAL_X_SUM:
        c, s = np.cos(spec.theta), np.sin(spec.theta)
        factor = np.array([[c, 1j * s], [1j * s, c]], dtype=np.complex128)
        factor.flags.writeable = False
        return CouplingOperator(spec, single_site_factor=factor)
    return CouplingOperator(spec)


def _apply_site_factor(vec: np.ndarray, mat: np.ndarray, dims: Dims) -> np.ndarray:
    """Apply mat to every site of vec, viewed as an n-axis tensor."""
    arr = vec.reshape([dims.d] * dims.n)
    for axis in range(dims.n):
        arr = np.moveaxis(np.tensordot(mat, arr, axes=([1], [axis])), 0, axis)
    return arr.reshape(-1)


def apply_v(op: CouplingOperator, vec: np.ndarray) -> np.ndarray:
    """V @ vec, using the factored form where available (O(n N) for local V)."""
    vec = np.asarray(vec, dtype=np.complex128)
    if vec.shape != (op.dims.total,):
        raise ValueError(f"vector has shape {vec.shape}, expected ({op.dims.total},)")
    if op.spec.variant == LOCAL_X_SUM:
        return _apply_site_factor(vec, op.single_site_factor, op.dims)
    if op.spec.variant == FOURIER:
        return np.fft.ifft(op._fourier_phases() * np.fft.fft(vec))
    return op.dense_matrix() @ vec


def apply_v_dagger(op: CouplingOperator, vec: np.ndarray) -> np.ndarray:
    """V+ @ vec, mirroring apply_v."""
    vec = np.asarray(vec, dtype=np.complex128)
    if vec.shape != (op.dims.total,):
        raise ValueError(f"vector has shape {vec.shape}, expected ({op.dims.total},)")
    if op.spec.variant == LOCAL_X_SUM:
        return _apply_site_factor(vec, op.single_site_factor.conj().T, op.dims)
    if op.spec.variant == FOURIER:
        return np.fft.ifft(op._fourier_phases().conj() * np.fft.fft(vec))
    return op.dense_matrix().conj().T @ vec


def check_dangerous_compatible(op: CouplingOperator) -> CaseReport:
    """Case "compatible_basis": is V diagonal in the computational basis?"""
    case = "compatible_basis"
    if op.spec.variant == LOCAL_X_SUM:
        # sin(theta) != 0 on (0, pi/2): every site factor has off-diagonal weight
        return CaseReport(case, False, "local coupling has off-diagonal entries")
    dense = op.dense_matrix()
    off = dense - np.diag(np.diag(dense))
    worst = float(np.max(np.abs(off)))
    if worst < ZERO_TOL:
        return CaseReport(
            case, True, "V is diagonal in the computational basis; rows carry no ratio"
        )
    return CaseReport(case, False, f"largest off-diagonal entry {worst:.3e}")


def check_dangerous_block_diagonal(op: CouplingOperator) -> CaseReport:
    """Case "block_diagonal": does the support graph of V disconnect?"""
    case = "block_diagonal"
    if op.spec.variant == LOCAL_X_SUM:
        return CaseReport(
            case,
            False,
            "all entries of the site factor are nonzero; support graph is complete",
            components=None,
        )
    dense = op.dense_matrix()
    adjacency = sparse.csr_matrix(np.abs(dense) > ZERO_TOL)
    count, labels = connected_components(adjacency, directed=False)
    components = [np.flatnonzero(labels == c).tolist() for c in range(count)]
    if count > 1:
        return CaseReport(
            case,
            True,
            f"V splits into {count} blocks; inter-block phases are unobservable",
            components=components,
        )
    return CaseReport(case, False, "support graph is connected", components=components)


def check_dangerous_degenerate_eigenstate(counts: "CountTable") -> CaseReport:
    """Case "degenerate_eigenstate": do the counts carry the eigenstate signature?

    An eigenstate of the coupling generator gives equal Z0/Z1 statistics in
    every readout row and an x-independent relative phase.  Each comparison is
    tested against 3 standard deviations of the multinomial estimate, so exact
    tables flag sharply and sampled tables flag only when the data cannot rule
    the signature out.
    """
    case = "degenerate_eigenstate"
    if counts.total <= 0:
        raise ValueError("cannot test an empty count table (total = 0)")
    shots = counts.total
    freq = counts.counts / shots
    sigma = np.sqrt(freq * (1.0 - freq) / shots)

    f0, f1 = freq[:, OutcomeLabel.Z0], freq[:, OutcomeLabel.Z1]
    support = f0 + f1 > 0
    if not np.any(support):
        return CaseReport(case, False, "no readout row has Z-basis support")
    z_gap = np.abs(f0 - f1)
    z_tol = 3.0 * (sigma[:, OutcomeLabel.Z0] + sigma[:, OutcomeLabel.Z1])
    bad = support & (z_gap > z_tol)
    if np.any(bad):
        x = int(np.argmax(np.where(bad, z_gap - z_tol, -np.inf)))
        return CaseReport(
            case, False, f"row x={x} has P(Z0) != P(Z1) beyond 3 sigma"
        )

    combo = (
        freq[:, OutcomeLabel.XPLUS]
        - freq[:, OutcomeLabel.XMINUS]
        + 1j * (freq[:, OutcomeLabel.YL] - freq[:, OutcomeLabel.YR])
    )
    sigma_combo = np.sqrt(
        np.sum(sigma[:, OutcomeLabel.XPLUS : OutcomeLabel.YR + 1] ** 2, axis=1)
    )
    informative = support & (np.abs(combo) > 3.0 * sigma_combo) & (np.abs(combo) > 0)
    if not np.any(informative):
        return CaseReport(
            case,
            True,
            "Z0/Z1 statistics agree everywhere and no row resolves a phase",
        )
    directions = combo[informative] / np.abs(combo[informative])
    mean_dir = np.sum(directions)
    mean_dir /= abs(mean_dir)
    deviation = np.abs(np.angle(directions / mean_dir))
    phase_tol = 3.0 * sigma_combo[informative] / np.abs(combo[informative]) + 1e-12
    if np.all(deviation <= phase_tol):
        return CaseReport(
            case,
            True,
            "Z0/Z1 statistics agree and the readout phase is x-independent; "
            "the state is consistent with an eigenstate of the coupling generator",
        )
    return CaseReport(case, False, "readout phase varies across rows")
