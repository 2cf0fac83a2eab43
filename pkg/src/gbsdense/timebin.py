"""Transfer matrices of fiber-loop time-bin interferometers.

A pulse train of m time bins plays the role of m modes.  Two loop
architectures are modeled.

Single loop: one coupler of fixed transmissivity feeds a delay line
whose round trip equals the bin spacing.  Light entering at bin i can
re-emerge at any later bin j, having circulated j - i times, so the
transfer matrix is lower triangular with geometrically decaying
columns; light still in the loop after the last bin is discarded.

Double loop: a storage loop holds the train while an auxiliary
processing mode A repeatedly interacts with it.  Each round trip starts
with A in vacuum, couples A to selected bins in time order through
2-mode ops, and discards whatever is left in A afterwards.  The
returned matrix is the m x m block on the bins; it is unitary exactly
when every trip drains A.  One trip coupling A to every bin with a
common transmissivity reproduces a single pass through a single-loop
coupler.  A trip that opens with a full swap of bin 0 into A, couples
A to bins 1 .. m-1, and closes by swapping A back into the vacated
bin 0 realizes a product of Givens rotations pivoted on bin 0; m - 1
such trips compile any m-mode interferometer (``compile_reck``), which
is how a fixed pair of loops realizes programmable circuits.

In hardware the closing and opening swaps of consecutive trips are one
physical switch event; modeling them as separate exact swaps gives the
same matrix because a drained trip hands over a vacuum processing mode.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, GuardError
from .gaussian import TransferMatrix

__all__ = [
    "BeamSplitterOp",
    "LoopSchedule",
    "LossBudget",
    "RoundTrip",
    "SingleLoopSpec",
    "compile_reck",
    "loop_circuit_transfer",
    "lossy_device",
    "phase_aligned_residual",
    "single_loop_transfer",
]

_ZERO_TOL = 1e-13
_UNITARY_TOL = 1e-10


@dataclass(frozen=True)
class BeamSplitterOp:
    """One coupling between the processing mode and a time bin.

    The 2-mode matrix over (processing mode, bin) is
    [[t, i k e^{-i phi}], [i k e^{i phi}, t]] with t = sqrt(T) and
    k = sqrt(1 - T).  T = 1 is a pass-through, T = 0 a full swap.
    """

    transmissivity: float
    phase: float = 0.0
    bin: int = 0

    def __post_init__(self):
        if not (0.0 <= self.transmissivity <= 1.0):
            raise ValueError(f"transmissivity must lie in [0, 1], got {self.transmissivity}")
        if not math.isfinite(self.phase):
            raise ValueError("phase must be finite")
        if not isinstance(self.bin, (int, np.integer)) or self.bin < 0:
            raise ValueError(f"bin must be a non-negative integer, got {self.bin}")
        object.__setattr__(self, "bin", int(self.bin))

    def matrix(self) -> np.ndarray:
        t = math.sqrt(self.transmissivity)
        k = math.sqrt(1.0 - self.transmissivity)
        return np.array(
            [
                [t, 1j * k * np.exp(-1j * self.phase)],
                [1j * k * np.exp(1j * self.phase), t],
            ]
        )

    @property
    def is_switch(self) -> bool:
        """Full swaps are realized by the loop's routing switch, not the coupler."""
        return self.transmissivity == 0.0


@dataclass(frozen=True)
class RoundTrip:
    """Ordered couplings of one storage-loop circulation."""

    ops: tuple

    def __post_init__(self):
        ops = tuple(self.ops)
        if not all(isinstance(op, BeamSplitterOp) for op in ops):
            raise ValueError("round trip ops must be BeamSplitterOp instances")
        object.__setattr__(self, "ops", ops)

    @property
    def switch_states(self) -> tuple:
        return tuple(op.is_switch for op in self.ops)

    def full_matrix(self, num_bins: int) -> np.ndarray:
        """(m+1)-mode matrix of the trip; index m is the processing mode."""
        dim = num_bins + 1
        aux = num_bins
        w = np.eye(dim, dtype=np.complex128)
        for op in self.ops:
            if op.bin >= num_bins:
                raise ValueError(f"op targets bin {op.bin} of a {num_bins}-bin train")
            sub = op.matrix()
            rows = [aux, op.bin]
            block = np.eye(dim, dtype=np.complex128)
            block[np.ix_(rows, rows)] = sub
            w = block @ w
        return w

    def drains_processing_mode(self, num_bins: int) -> bool:
        w = self.full_matrix(num_bins)
        return bool(np.max(np.abs(w[num_bins, :num_bins])) <= _UNITARY_TOL)


@dataclass(frozen=True)
class LoopSchedule:
    """Program for the double loop: round trips over a fixed bin count."""

    num_bins: int
    rounds: tuple

    def __post_init__(self):
        if not isinstance(self.num_bins, (int, np.integer)) or self.num_bins < 1:
            raise ValueError(f"num_bins must be a positive integer, got {self.num_bins}")
        rounds = tuple(self.rounds)
        if not all(isinstance(trip, RoundTrip) for trip in rounds):
            raise ValueError("rounds must be RoundTrip instances")
        for trip in rounds:
            for op in trip.ops:
                if op.bin >= self.num_bins:
                    raise ValueError(
                        f"op targets bin {op.bin} of a {self.num_bins}-bin train"
                    )
        object.__setattr__(self, "rounds", rounds)

    def drains_fully(self) -> bool:
        return all(trip.drains_processing_mode(self.num_bins) for trip in self.rounds)

    def to_json(self) -> str:
        doc = {
            "m": self.num_bins,
            "rounds": [
                {
                    "ops": [
                        {"T": op.transmissivity, "phi": op.phase, "bin": op.bin}
                        for op in trip.ops
                    ]
                }
                for trip in self.rounds
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "LoopSchedule":
        try:
            doc = json.loads(text)
            num_bins = int(doc["m"])
            rounds = tuple(
                RoundTrip(
                    tuple(
                        BeamSplitterOp(float(op["T"]), float(op["phi"]), int(op["bin"]))
                        for op in trip["ops"]
                    )
                )
                for trip in doc["rounds"]
            )
            return cls(num_bins, rounds)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed schedule document: {exc}") from exc


@dataclass(frozen=True)
class SingleLoopSpec:
    """Single fixed coupler feeding a one-bin delay."""

    num_bins: int
    transmissivity: float
    phase: float = 0.0
    loop_transmission: float = 1.0

    def __post_init__(self):
        if not isinstance(self.num_bins, (int, np.integer)) or self.num_bins < 1:
            raise ValueError(f"num_bins must be a positive integer, got {self.num_bins}")
        if not (0.0 <= self.transmissivity <= 1.0):
            raise ValueError(f"transmissivity must lie in [0, 1], got {self.transmissivity}")
        if not (0.0 <= self.loop_transmission <= 1.0):
            raise ValueError(
                f"loop transmission must lie in [0, 1], got {self.loop_transmission}"
            )
        if not math.isfinite(self.phase):
            raise ValueError("phase must be finite")


@dataclass(frozen=True)
class LossBudget:
    """Named per-stage power transmissions of a device.

    ``uniform`` overrides the product of the stages when set; uniform
    loss commutes with any transfer matrix, so it can be applied as a
    single scalar either way.
    """

    coupling: float = 1.0
    switching: float = 1.0
    delay: float = 1.0
    detection: float = 1.0
    uniform: Optional[float] = None

    def __post_init__(self):
        for name in ("coupling", "switching", "delay", "detection"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} transmission must lie in [0, 1], got {value}")
        if self.uniform is not None and not (0.0 <= self.uniform <= 1.0):
            raise ValueError(f"uniform transmission must lie in [0, 1], got {self.uniform}")

    def total(self) -> float:
        if self.uniform is not None:
            return self.uniform
        return self.coupling * self.switching * self.delay * self.detection


def single_loop_transfer(spec: SingleLoopSpec) -> TransferMatrix:
    """Closed-form transfer matrix of the single loop.

    Straight-through amplitude sqrt(T) on the diagonal; below it, entry
    (j, i) collects the path entering the loop at bin i, circulating
    j - i times (amplitude sqrt(loop_transmission) e^{i phase} each,
    passing the coupler with amplitude sqrt(T) in between), and leaving
    at bin j; the two coupler crossings contribute -(1 - T).
    """
    m = spec.num_bins
    t = math.sqrt(spec.transmissivity)
    kappa_sq = 1.0 - spec.transmissivity
    hop = math.sqrt(spec.loop_transmission) * np.exp(1j * spec.phase)
    lam = np.zeros((m, m), dtype=np.complex128)
    np.fill_diagonal(lam, t)
    for i in range(m):
        for j in range(i + 1, m):
            lam[j, i] = -kappa_sq * t ** (j - i - 1) * hop ** (j - i)
    return TransferMatrix(lam)


def loop_circuit_transfer(schedule: LoopSchedule) -> TransferMatrix:
    """Bin-block transfer matrix of a double-loop program."""
    m = schedule.num_bins
    lam = np.eye(m, dtype=np.complex128)
    for trip in schedule.rounds:
        lam = trip.full_matrix(m)[:m, :m] @ lam
    return TransferMatrix(lam)


def lossy_device(transfer: TransferMatrix, budget: LossBudget) -> TransferMatrix:
    """Attach a device's overall loss budget as a uniform amplitude factor."""
    return TransferMatrix(math.sqrt(budget.total()) * transfer.matrix)


_SWAP_IN = BeamSplitterOp(0.0, np.pi / 2, 0)
_SWAP_OUT = BeamSplitterOp(0.0, -np.pi / 2, 0)


def _null_against_pivot(v: np.ndarray, row: int, col: int) -> BeamSplitterOp:
    """Op on (pivot row 0, row) whose dagger zeroes v[row, col]; updates v."""
    pivot = v[0, col]
    target = v[row, col]
    if abs(target) < _ZERO_TOL:
        return BeamSplitterOp(1.0, 0.0, row)
    if abs(pivot) < _ZERO_TOL:
        op = BeamSplitterOp(0.0, 0.0, row)
    else:
        rho = target / pivot
        trans = 1.0 / (1.0 + abs(rho) ** 2)
        op = BeamSplitterOp(trans, float(np.angle(-1j * rho)), row)
    _apply_dagger(v, op, row)
    return op


def _null_pivot_itself(v: np.ndarray, col: int) -> BeamSplitterOp:
    """Op on (pivot row 0, row col) whose dagger zeroes v[0, col]; updates v."""
    diag = v[col, col]
    target = v[0, col]
    if abs(target) < _ZERO_TOL:
        return BeamSplitterOp(1.0, 0.0, col)
    if abs(diag) < _ZERO_TOL:
        op = BeamSplitterOp(0.0, 0.0, col)
    else:
        rho = target / diag
        trans = 1.0 / (1.0 + abs(rho) ** 2)
        op = BeamSplitterOp(trans, float(-np.angle(-1j * rho)), col)
    _apply_dagger(v, op, col)
    return op


def _apply_dagger(v: np.ndarray, op: BeamSplitterOp, row: int) -> None:
    sub = op.matrix().conj().T
    rows = np.array([0, row])
    v[rows, :] = sub @ v[rows, :]


def compile_reck(unitary) -> LoopSchedule:
    """Compile an interferometer into double-loop round trips.

    The returned schedule reproduces the unitary up to diagonal phases
    on the outputs: m - 1 trips, each opening and closing with a bin-0
    swap around m - 1 couplings (pass-throughs where the sweep needs no
    rotation).
    """
    u = np.asarray(unitary, dtype=np.complex128)
    if u.ndim != 2 or u.shape[0] != u.shape[1] or u.shape[0] < 1:
        raise ValueError(f"unitary must be square, got shape {u.shape}")
    m = u.shape[0]
    if np.max(np.abs(u.conj().T @ u - np.eye(m))) > _UNITARY_TOL:
        raise ValueError("matrix is not unitary")
    if m == 1:
        return LoopSchedule(1, ())

    # Nullify v = u^dag column by column (descending) with rotations
    # that always involve row 0; v becomes diagonal, and the daggered
    # ops in discovery order realize u up to output phases.
    v = u.conj().T.copy()
    trips = []
    for col in range(m - 1, 0, -1):
        found = []
        for row in range(1, col):
            found.append(_null_against_pivot(v, row, col))
        found.append(_null_pivot_itself(v, col))
        column = np.abs(v[:, col].copy())
        column[col] = 0.0
        if np.max(column) > 1e-9:
            raise GuardError(
                f"sweep failed to clear column {col} (residue {np.max(column):.3e})"
            )
        daggered = [
            BeamSplitterOp(op.transmissivity, op.phase + np.pi, op.bin) for op in found
        ]
        pads = [BeamSplitterOp(1.0, 0.0, b) for b in range(col + 1, m)]
        trips.append(RoundTrip((_SWAP_IN, *daggered, *pads, _SWAP_OUT)))
    return LoopSchedule(m, tuple(trips))


def phase_aligned_residual(candidate, target, tol: float = 1e-8) -> float:
    """Max-norm distance between matrices, minimized over external phases.

    Finds diagonal phase matrices D_out, D_in via constraint propagation
    on entries of significant magnitude and returns
    max |D_out @ candidate @ D_in - target|.
    """
    a = np.asarray(candidate, dtype=np.complex128)
    b = np.asarray(target, dtype=np.complex128)
    if a.shape != b.shape or a.ndim != 2:
        raise ValueError(f"need matching 2-d shapes, got {a.shape} and {b.shape}")
    rows, cols = a.shape
    mask = (np.abs(a) > tol) & (np.abs(b) > tol)
    delta = np.zeros_like(a, dtype=float)
    delta[mask] = np.angle(b[mask]) - np.angle(a[mask])
    out_phase = np.full(rows, np.nan)
    in_phase = np.full(cols, np.nan)
    # BFS over the bipartite graph of significant entries; anchor each
    # connected component at out_phase = 0.
    for start in range(rows):
        if not np.isnan(out_phase[start]) or not mask[start].any():
            continue
        out_phase[start] = 0.0
        frontier = [("row", start)]
        while frontier:
            kind, idx = frontier.pop()
            if kind == "row":
                for j in range(cols):
                    if mask[idx, j] and np.isnan(in_phase[j]):
                        in_phase[j] = delta[idx, j] - out_phase[idx]
                        frontier.append(("col", j))
            else:
                for i in range(rows):
                    if mask[i, idx] and np.isnan(out_phase[i]):
                        out_phase[i] = delta[i, idx] - in_phase[idx]
                        frontier.append(("row", i))
    out_phase = np.where(np.isnan(out_phase), 0.0, out_phase)
    in_phase = np.where(np.isnan(in_phase), 0.0, in_phase)
    aligned = np.exp(1j * out_phase)[:, None] * a * np.exp(1j * in_phase)[None, :]
    return float(np.max(np.abs(aligned - b)))
