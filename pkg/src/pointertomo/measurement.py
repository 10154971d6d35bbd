"""Joint readout probabilities P[x, m] and finite-shot count tables.

Each run of the scheme yields one pair (x, m): the system readout x and the
outcome m of a pointer measurement in one of three bases chosen uniformly at
random.  With alpha = psi and beta = V psi the exact cell probabilities are

    P[x, Z0] = |alpha_x|^2 / 6          P[x, Z1] = |beta_x|^2 / 6
    P[x, X+-] = |alpha_x +- beta_x|^2 / 12
    P[x, YL] = |alpha_x - i beta_x|^2 / 12
    P[x, YR] = |alpha_x + i beta_x|^2 / 12

which sum to 1 over all 6N cells by unitarity of V.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .coupling import CouplingOperator, apply_v
from .outcomes import OUTCOME_TEXT, POINTER_KETS, TEXT_TO_OUTCOME, OutcomeLabel
from .states import Dims, StateVector

TABLE_TOL = 1e-12


@dataclass(frozen=True)
class ProbabilityTable:
    """Exact (or empirical) joint probabilities over N x 6 outcome cells."""

    dims: Dims
    P: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.P, dtype=np.float64)
        if p.shape != (self.dims.total, 6):
            raise ValueError(f"table has shape {p.shape}, expected ({self.dims.total}, 6)")
        if np.any(p < 0.0):
            raise ValueError(f"negative probability entry: min = {p.min()!r}")
        total = p.sum()
        if abs(total - 1.0) > TABLE_TOL:
            raise ValueError(f"table sums to {total!r}, expected 1")
        p.flags.writeable = False
        object.__setattr__(self, "P", p)


@dataclass(frozen=True)
class CountTable:
    """Observed cell counts with their total shot number.

    Counts are stored as float64 so that ideal tables (counts = shots * P,
    the infinite-statistics limit) share the type; sampled tables hold
    integer values.
    """

    dims: Dims
    counts: np.ndarray
    total: float

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.float64)
        if c.shape != (self.dims.total, 6):
            raise ValueError(f"counts have shape {c.shape}, expected ({self.dims.total}, 6)")
        if np.any(c < 0.0):
            raise ValueError("negative count entry")
        if not np.isclose(c.sum(), self.total, rtol=1e-12, atol=1e-9):
            raise ValueError(f"counts sum to {c.sum()!r}, header says {self.total!r}")
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)


def joint_probabilities(state: StateVector, op: CouplingOperator) -> ProbabilityTable:
    """Exact joint outcome probabilities for a state under a coupling."""
    if state.dims != op.dims:
        raise ValueError(f"dimension mismatch: state {state.dims}, coupling {op.dims}")
    alpha = state.amp
    beta = apply_v(op, alpha)
    p = np.empty((state.dims.total, 6), dtype=np.float64)
    p[:, OutcomeLabel.Z0] = np.abs(alpha) ** 2 / 6.0
    p[:, OutcomeLabel.Z1] = np.abs(beta) ** 2 / 6.0
    p[:, OutcomeLabel.XPLUS] = np.abs(alpha + beta) ** 2 / 12.0
    p[:, OutcomeLabel.XMINUS] = np.abs(alpha - beta) ** 2 / 12.0
    p[:, OutcomeLabel.YL] = np.abs(alpha - 1j * beta) ** 2 / 12.0
    p[:, OutcomeLabel.YR] = np.abs(alpha + 1j * beta) ** 2 / 12.0
    return ProbabilityTable(state.dims, p)


def joint_probabilities_embedded(state: StateVector, op: CouplingOperator) -> np.ndarray:
    """Debug path: build the post-interaction joint state and project it.

    Returns a raw (N, 6) array computed as (1/3) |<x, m|Psi'>|^2 from the
    2N-amplitude joint state, cross-checking the closed forms above.
    """
    alpha = state.amp
    beta = apply_v(op, alpha)
    joint = np.stack([alpha, beta], axis=1) / np.sqrt(2.0)  # (N, 2)
    overlaps = joint @ POINTER_KETS.conj().T  # (N, 6)
    return np.abs(overlaps) ** 2 / 3.0


def _alias_table(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vose alias construction for O(1) categorical draws."""
    k = p.size
    accept = np.ones(k, dtype=np.float64)
    alias = np.arange(k, dtype=np.int64)
    scaled = p * k
    small = [i for i in range(k) if scaled[i] < 1.0]
    large = [i for i in range(k) if scaled[i] >= 1.0]
    while small and large:
        s, l = small.pop(), large.pop()
        accept[s] = scaled[s]
        alias[s] = l
        scaled[l] -= 1.0 - scaled[s]
        (small if scaled[l] < 1.0 else large).append(l)
    return accept, alias


def sample_counts(table: ProbabilityTable, shots: int, seed: int) -> CountTable:
    """One multinomial draw of `shots` trials over the 6N cells.

    Implemented as independent categorical draws through an alias table, so
    each draw is O(1) and the whole draw is a single vectorized pass.
    """
    if shots < 1:
        raise ValueError(f"shot count must be >= 1, got {shots}")
    p = table.P.ravel()
    if np.any(p < 0.0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("invalid probability table")
    p = p / p.sum()
    accept, alias = _alias_table(p)
    rng = np.random.default_rng(seed)
    box = rng.integers(0, p.size, size=shots)
    keep = rng.random(shots) < accept[box]
    cells = np.where(keep, box, alias[box])
    counts = np.bincount(cells, minlength=p.size).reshape(table.dims.total, 6)
    return CountTable(table.dims, counts.astype(np.float64), float(shots))


def ideal_counts(table: ProbabilityTable, shots: float) -> CountTable:
    """Infinite-statistics table: counts = shots * P exactly (not integers)."""
    if shots <= 0:
        raise ValueError(f"shot count must be positive, got {shots}")
    return CountTable(table.dims, shots * table.P, float(shots))


def empirical_frequencies(counts: CountTable) -> ProbabilityTable:
    """Relative frequencies counts / total as a probability table."""
    if counts.total <= 0:
        raise ValueError("cannot take frequencies of an empty count table")
    return ProbabilityTable(counts.dims, counts.counts / counts.total)


def _format_count(value: float) -> str:
    return str(int(value)) if value == int(value) else format(value, ".17g")


def _meta_path(csv_path: Path) -> Path:
    return csv_path.with_name(csv_path.stem + ".meta.json")


def write_counts(counts: CountTable, csv_path, meta: dict | None = None) -> Path:
    """Write counts as CSV (one row per nonzero cell) plus a JSON sidecar.

    The sidecar records n, d and the shot total, merged with any caller
    metadata (coupling parameters, seed, ...), and is what read_counts uses
    to restore the table shape.
    """
    csv_path = Path(csv_path)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "m", "count"])
        for x in range(counts.dims.total):
            for m in range(6):
                if counts.counts[x, m] != 0.0:
                    writer.writerow([x, OUTCOME_TEXT[m], _format_count(counts.counts[x, m])])
    sidecar = {"n": counts.dims.n, "d": counts.dims.d, "F": counts.total}
    if meta:
        sidecar.update(meta)
    with open(_meta_path(csv_path), "w") as fh:
        json.dump(sidecar, fh, indent=1)
    return csv_path


def read_counts(csv_path) -> tuple[CountTable, dict]:
    """Parse a counts CSV and its metadata sidecar back into a CountTable."""
    csv_path = Path(csv_path)
    meta_path = _meta_path(csv_path)
    if not meta_path.exists():
        raise FileNotFoundError(f"metadata sidecar {meta_path} not found")
    with open(meta_path) as fh:
        meta = json.load(fh)
    dims = Dims(int(meta["n"]), int(meta["d"]))
    counts = np.zeros((dims.total, 6), dtype=np.float64)
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["x", "m", "count"]:
            raise ValueError(f"{csv_path}:1: expected header 'x,m,count', got {header}")
        for lineno, fields in enumerate(reader, start=2):
            if not fields:
                continue
            if len(fields) != 3:
                raise ValueError(f"{csv_path}:{lineno}: expected 3 fields, got {len(fields)}")
            try:
                x = int(fields[0])
                m = TEXT_TO_OUTCOME[fields[1]]
                value = float(fields[2])
            except (ValueError, KeyError) as err:
                raise ValueError(f"{csv_path}:{lineno}: cannot parse row {fields}") from err
            if not 0 <= x < dims.total:
                raise ValueError(f"{csv_path}:{lineno}: readout index {x} out of range")
            if value < 0:
                raise ValueError(f"{csv_path}:{lineno}: negative count {value}")
            counts[x, m] = value
    return CountTable(dims, counts, float(meta["F"])), meta
