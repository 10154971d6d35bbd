"""Pure states of n qudits: benchmark constructors, fidelity, phase convention.

Basis index convention used throughout the package: a basis label x encodes
the local digits as x = x_1 + x_2*d + ... + x_n*d^(n-1), i.e. particle 1 is
the least-significant base-d digit of x.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg

NORM_TOL = 1e-12
_NONZERO_TOL = 1e-12


class DegenerateGroundStateWarning(UserWarning):
    """Raised as a warning when a ground space is numerically degenerate."""


@dataclass(frozen=True)
class Dims:
    """System shape: n particles of local dimension d, total dimension N = d^n."""

    n: int
    d: int = 2

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"particle count must be >= 1, got {self.n}")
        if self.d < 2:
            raise ValueError(f"local dimension must be >= 2, got {self.d}")

    @property
    def total(self) -> int:
        return self.d**self.n


@dataclass(frozen=True)
class StateVector:
    """Normalized complex amplitude vector over the N = d^n computational basis."""

    dims: Dims
    amp: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amp, dtype=np.complex128)
        if amp.shape != (self.dims.total,):
            raise ValueError(
                f"amplitude vector has shape {amp.shape}, expected ({self.dims.total},)"
            )
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized: |psi| = {norm!r}")
        amp.flags.writeable = False
        object.__setattr__(self, "amp", amp)

    @classmethod
    def normalized(cls, dims: Dims, amp: np.ndarray) -> "StateVector":
        """Build a state from an unnormalized amplitude vector."""
        amp = np.asarray(amp, dtype=np.complex128)
        norm = np.linalg.norm(amp)
        if norm == 0.0:
            raise ValueError("cannot normalize a null vector")
        return cls(dims, amp / norm)


def make_ghz(n: int) -> StateVector:
    """Equal superposition of |0...0> and |1...1> for n qubits."""
    dims = Dims(n, 2)
    amp = np.zeros(dims.total, dtype=np.complex128)
    amp[0] = amp[-1] = 1.0 / np.sqrt(2.0)
    return StateVector(dims, amp)


def make_w(n: int) -> StateVector:
    """Equal superposition of the n single-excitation basis states."""
    return make_dicke(n, 1)


def make_dicke(n: int, k: int) -> StateVector:
    """Equal superposition of all n-qubit basis states with Hamming weight k."""
    dims = Dims(n, 2)
    if not 0 <= k <= n:
        raise ValueError(f"excitation number k={k} out of range [0, {n}]")
    amp = np.zeros(dims.total, dtype=np.complex128)
    weight = 1.0 / np.sqrt(comb(n, k))
    for x in range(dims.total):
        if x.bit_count() == k:
            amp[x] = weight
    return StateVector(dims, amp)


def _tfim_hamiltonian(n: int, g: float, j_coupling: float) -> sparse.csr_matrix:
    """Open-boundary H = -j sum_i Z_i Z_{i+1} - g sum_i X_i as a sparse matrix."""
    sx = sparse.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    sz = sparse.csr_matrix(np.array([[1.0, 0.0], [0.0, -1.0]]))

    def site_op(op, site):
        # site is 1-based with particle 1 on the least-significant digit,
        # so kron order runs from particle n down to particle 1
        left = sparse.identity(2 ** (n - site), format="csr")
        right = sparse.identity(2 ** (site - 1), format="csr")
        return sparse.kron(sparse.kron(left, op), right, format="csr")

    h = sparse.csr_matrix((2**n, 2**n))
    for i in range(1, n):
        h = h - j_coupling * (site_op(sz, i) @ site_op(sz, i + 1))
    for i in range(1, n + 1):
        h = h - g * site_op(sx, i)
    return h


def make_tfim_ground(n: int, g: float = 0.5, j_coupling: float = 1.0) -> StateVector:
    """Ground state of the open-boundary transverse-field Ising chain.

    H = -j sum_{i<n} Z_i Z_{i+1} - g sum_i X_i.  Warns with
    DegenerateGroundStateWarning when the spectral gap is below
    1e-9 * |E0| (e.g. the classical g=0 limit).
    """
    if n < 2:
        raise ValueError(f"chain length must be >= 2, got {n}")
    if g < 0:
        raise ValueError(f"transverse field must be >= 0, got {g}")
    h = _tfim_hamiltonian(n, g, j_coupling)
    if h.shape[0] <= 512:
        energies, vectors = np.linalg.eigh(h.toarray())
        e0, e1 = energies[0], energies[1]
        ground = vectors[:, 0]
    else:
        energies, vectors = sparse.linalg.eigsh(h, k=2, which="SA")
        order = np.argsort(energies)
        e0, e1 = energies[order[0]], energies[order[1]]
        ground = vectors[:, order[0]]
    if e1 - e0 < 1e-9 * abs(e0):
        warnings.warn(
            f"ground space numerically degenerate: gap {e1 - e0:.3e} at E0 = {e0:.6f}",
            DegenerateGroundStateWarning,
        )
    return phase_fix(StateVector.normalized(Dims(n, 2), ground))


def random_state(dims: Dims, seed: int) -> StateVector:
    """Haar-like random state: iid complex Gaussian amplitudes, normalized."""
    rng = np.random.default_rng(seed)
    amp = rng.standard_normal(dims.total) + 1j * rng.standard_normal(dims.total)
    return StateVector.normalized(dims, amp)


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2 between two states of matching dims."""
    if a.dims != b.dims:
        raise ValueError(f"dimension mismatch: {a.dims} vs {b.dims}")
    return float(abs(np.vdot(a.amp, b.amp)) ** 2)


def phase_fix(state: StateVector) -> StateVector:
    """Remove the global phase so the first nonzero amplitude is real positive."""
    idx = np.flatnonzero(np.abs(state.amp) > _NONZERO_TOL)
    if idx.size == 0:
        raise ValueError("cannot phase-fix a null vector")
    pivot = state.amp[idx[0]]
    return StateVector(state.dims, state.amp * (abs(pivot) / pivot))


def state_to_dict(state: StateVector) -> dict:
    """JSON-ready form: {n, d, amplitudes: [[re, im], ...]} in index order."""
    return {
        "n": state.dims.n,
        "d": state.dims.d,
        "amplitudes": [[z.real, z.imag] for z in state.amp],
    }


def state_from_dict(doc: dict) -> StateVector:
    dims = Dims(int(doc["n"]), int(doc["d"]))
    pairs = doc["amplitudes"]
    if len(pairs) != dims.total:
        raise ValueError(
            f"amplitude list has {len(pairs)} entries, expected {dims.total}"
        )
    amp = np.array([complex(re, im) for re, im in pairs], dtype=np.complex128)
    return StateVector(dims, amp)


def save_state(state: StateVector, path) -> None:
    with open(path, "w") as fh:
        json.dump(state_to_dict(state), fh, indent=1)


def load_state(path) -> StateVector:
    with open(path) as fh:
        return state_from_dict(json.load(fh))
