"""Embedding a symmetric matrix into a squeezed-light device.

A complex symmetric matrix B factors as U diag(values) U^T with U
unitary and values >= 0 (an Autonne-Takagi decomposition).  Scaling B
by c < 1/max(values) maps each value to the tanh of a squeezing
parameter, so a bank of single-mode squeezers followed by an
interferometer prepares a Gaussian state whose detection kernel
contains c*B.  The scale c is the experimental knob: it sets the mean
photon number and with it the rate of N-photon events.

The factorization here diagonalizes B conj(B), which is Hermitian with
eigenvalues values**2 and eigenvectors equal to the wanted U up to a
phase per degenerate block.  The block phase is recovered from a
matrix square root, and a sign convention per column makes the result
deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import GuardError
from .gaussian import SqueezerSpec, TransferMatrix

__all__ = [
    "EncodingParams",
    "TakagiFactorization",
    "encode_graph",
    "mean_photons_for_scale",
    "params_from_scale",
    "rescale_for_mean_photons",
    "scale_maximizing_event_rate",
    "takagi",
    "total_photon_distribution",
]

_SYM_TOL = 1e-10
_UNITARY_TOL = 1e-10
_RECON_TOL = 1e-9
_DEGEN_REL = 1e-8
_ZERO_REL = 1e-11
_MARGIN = 1e-12
_TARGET_TOL = 1e-12


@dataclass(frozen=True)
class TakagiFactorization:
    """Unitary and non-negative values with B = U diag(values) U^T."""

    unitary: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        u = np.array(self.unitary, dtype=complex)
        vals = np.array(self.values, dtype=float)
        m = u.shape[0]
        if u.ndim != 2 or u.shape != (m, m):
            raise ValueError(f"unitary must be square, got shape {u.shape}")
        if vals.shape != (m,):
            raise ValueError(f"expected {m} values, got shape {vals.shape}")
        if np.max(np.abs(u.conj().T @ u - np.eye(m))) > _UNITARY_TOL:
            raise ValueError("factor is not unitary")
        if np.any(vals < -1e-12) or np.any(vals[:-1] < vals[1:] - 1e-12):
            raise ValueError("values must be non-negative and descending")
        u.flags.writeable = False
        vals.flags.writeable = False
        object.__setattr__(self, "unitary", u)
        object.__setattr__(self, "values", vals)

    def reconstruct(self) -> np.ndarray:
        return self.unitary @ np.diag(self.values) @ self.unitary.T


def _canonical_column_signs(u: np.ndarray) -> np.ndarray:
    # Only +-1 is a free gauge per column; pick the sign that makes the
    # first significant entry have positive real part (positive
    # imaginary part when the real part vanishes).
    u = u.copy()
    for col in range(u.shape[1]):
        column = u[:, col]
        idx = np.flatnonzero(np.abs(column) > 1e-8)
        if idx.size == 0:
            continue
        lead = column[idx[0]]
        if lead.real < -1e-10 or (abs(lead.real) <= 1e-10 and lead.imag < 0):
            u[:, col] = -column
    return u


def takagi(matrix) -> TakagiFactorization:
    """Symmetric factorization B = U diag(values) U^T.

    The input must be complex symmetric within 1e-10.  Values that
    agree within their degeneracy tolerance are averaged per block so
    the reconstruction stays at machine precision; the column sign
    convention makes repeated calls on the same input identical.
    """
    b = np.asarray(matrix, dtype=complex)
    if b.ndim != 2 or b.shape[0] != b.shape[1] or b.shape[0] == 0:
        raise ValueError(f"matrix must be square and non-empty, got shape {b.shape}")
    if not np.all(np.isfinite(b)):
        raise ValueError("matrix must have finite entries")
    scale = max(1.0, float(np.max(np.abs(b))))
    if np.max(np.abs(b - b.T)) > _SYM_TOL * scale:
        raise ValueError("matrix must be symmetric")
    b = (b + b.T) / 2.0
    m = b.shape[0]

    gram = b @ b.conj()
    eigvals, eigvecs = np.linalg.eigh((gram + gram.conj().T) / 2.0)
    lam = np.sqrt(np.clip(eigvals, 0.0, None))
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    eigvecs = eigvecs[:, order]

    lam_max = float(lam[0])
    # Values come from eigenvalues of B conj(B), so eigensolver noise of
    # order eps * lam_max^2 turns into value noise of order
    # sqrt(eps) * lam_max; anything below that floor is a numerical zero.
    noise_floor = math.sqrt(m * np.finfo(float).eps) * lam_max
    zero_tol = max(_ZERO_REL * max(lam_max, 1e-30), noise_floor)

    unitary = np.zeros((m, m), dtype=complex)
    values = np.zeros(m)
    start = 0
    while start < m:
        stop = start + 1
        while stop < m and lam[stop - 1] - lam[stop] <= _DEGEN_REL * lam[stop - 1]:
            stop += 1
        group = slice(start, stop)
        basis = eigvecs[:, group]
        lam_bar = float(np.mean(lam[group]))
        if lam_bar <= zero_tol:
            # B annihilates this block at working precision, so any
            # orthonormal basis works and the value is an exact zero.
            values[group] = 0.0
            unitary[:, group] = basis
        else:
            values[group] = lam_bar
            block = basis.conj().T @ b @ basis.conj()
            if stop - start == 1:
                root = np.array([[np.sqrt(complex(block[0, 0]) / lam_bar)]])
            else:
                root = scipy.linalg.sqrtm(block / lam_bar)
                root = np.asarray(root, dtype=complex)
                root = (root + root.T) / 2.0
            unitary[:, group] = basis @ root
        start = stop

    unitary = _canonical_column_signs(unitary)
    fact = TakagiFactorization(unitary, values)
    residual = np.max(np.abs(fact.reconstruct() - b))
    # Zeroed blocks may drop true values up to zero_tol; allow for that.
    if residual > _RECON_TOL * max(1.0, lam_max) + zero_tol:
        raise GuardError(
            f"factorization residual {residual:.3e} exceeds tolerance; "
            "the value spectrum is too ill-conditioned"
        )
    return fact


@dataclass(frozen=True)
class EncodingParams:
    """Scale and per-mode squeezing realizing a matrix embedding."""

    c: float
    squeeze_r: Tuple[float, ...]
    mean_photons: float

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c > 0.0):
            raise ValueError(f"scale c must be positive and finite, got {self.c}")
        rs = tuple(float(r) for r in self.squeeze_r)
        if not rs:
            raise ValueError("need at least one squeezer")
        if any(not math.isfinite(r) or r < 0.0 for r in rs):
            raise ValueError("squeezing parameters must be finite and non-negative")
        if not (math.isfinite(self.mean_photons) and self.mean_photons >= 0.0):
            raise ValueError(f"mean photon number must be >= 0, got {self.mean_photons}")
        object.__setattr__(self, "squeeze_r", rs)


def _clean_values(values) -> np.ndarray:
    vals = np.asarray(values, dtype=float)
    if vals.ndim != 1 or vals.size == 0:
        raise ValueError("values must be a non-empty 1-D array")
    if np.any(~np.isfinite(vals)) or np.any(vals < -1e-12):
        raise ValueError("values must be finite and non-negative")
    return np.clip(vals, 0.0, None)


def mean_photons_for_scale(values, c: float) -> float:
    """Total mean photon number of squeezers with tanh r_i = c*values[i]."""
    vals = _clean_values(values)
    if not (math.isfinite(c) and c >= 0.0):
        raise ValueError(f"scale must be >= 0, got {c}")
    prod = c * vals
    if np.any(prod >= 1.0):
        raise ValueError(f"c*max(values) = {np.max(prod):.6g} >= 1 cannot be squeezed")
    return float(np.sum(prod**2 / (1.0 - prod**2)))


def params_from_scale(values, c: float) -> EncodingParams:
    vals = _clean_values(values)
    mean = mean_photons_for_scale(vals, c)
    rs = tuple(float(np.arctanh(c * v)) for v in vals)
    return EncodingParams(c=float(c), squeeze_r=rs, mean_photons=mean)


def rescale_for_mean_photons(values, target: float) -> EncodingParams:
    """Scale whose squeezer bank emits the target mean photon number.

    The mean photon number grows monotonically in c and diverges as
    c*max(values) approaches 1, so bisection converges to the unique
    solution; iteration stops once the mean matches to 1e-12 (relative
    for targets above one photon).
    """
    vals = _clean_values(values)
    if not (math.isfinite(target) and target > 0.0):
        raise ValueError(f"target mean photon number must be positive, got {target}")
    lam_max = float(np.max(vals))
    if lam_max <= 0.0:
        raise ValueError("all values are zero; no scale reaches a positive mean")
    lo, hi = 0.0, (1.0 - _MARGIN) / lam_max
    if mean_photons_for_scale(vals, hi) < target:
        raise GuardError(f"target mean photon number {target} is out of reach")
    c = hi
    for _ in range(200):
        c = (lo + hi) / 2.0
        mean = mean_photons_for_scale(vals, c)
        if abs(mean - target) <= _TARGET_TOL * max(1.0, target):
            break
        if mean < target:
            lo = c
        else:
            hi = c
    else:
        raise GuardError("bisection for the photon-number scale did not converge")
    return params_from_scale(vals, c)


def total_photon_distribution(values, c: float, cutoff: int) -> np.ndarray:
    """Distribution of the total photon number for the squeezer bank.

    Entry n is the probability of n photons in total before any
    interferometer, which a lossless one leaves unchanged.  Mass above
    the cutoff is simply absent, so the array sums to < 1.
    """
    vals = _clean_values(values)
    if cutoff < 0:
        raise ValueError(f"cutoff must be >= 0, got {cutoff}")
    prod = c * vals
    if np.any(prod >= 1.0) or c < 0.0:
        raise ValueError("need 0 <= c*values < 1")
    total = np.zeros(cutoff + 1)
    total[0] = 1.0
    pairs = np.arange(0, cutoff + 1, 2)
    half = pairs // 2
    binom = np.array([math.comb(int(n), int(j)) for n, j in zip(pairs, half)])
    for q in prod**2:
        single = np.zeros(cutoff + 1)
        single[pairs] = np.sqrt(1.0 - q) * q**half * binom / 4.0**half
        total = np.convolve(total, single)[: cutoff + 1]
    return total


def scale_maximizing_event_rate(values, photons: int, candidates) -> float:
    """Scale from the candidate grid with the highest N-photon rate.

    Ties go to the first candidate in the given order.
    """
    vals = _clean_values(values)
    grid = [float(c) for c in candidates]
    if not grid:
        raise ValueError("candidate grid is empty")
    if photons < 1:
        raise ValueError(f"photon count must be >= 1, got {photons}")
    rates = [total_photon_distribution(vals, c, photons)[photons] for c in grid]
    return grid[int(np.argmax(rates))]


def encode_graph(matrix, params: EncodingParams) -> Tuple[Sequence[SqueezerSpec], TransferMatrix]:
    """Squeezer bank and lossless transfer whose kernel block is c*B.

    The kernel pair block of a state sent through a transfer T picks up
    conj(T) on both sides, so the returned transfer is the conjugate of
    the factorization unitary; feeding the squeezers through it lands
    the pair block on params.c times the input matrix.
    """
    fact = takagi(matrix)
    prod = params.c * fact.values
    if np.any(prod >= 1.0):
        raise ValueError(
            f"scale {params.c} is too large: c*max(values) = {np.max(prod):.6g} >= 1"
        )
    expected = np.arctanh(prod)
    given = np.asarray(params.squeeze_r, dtype=float)
    if given.shape != expected.shape or np.max(np.abs(given - expected)) > 1e-8:
        raise ValueError("params were derived from a different matrix")
    specs = [SqueezerSpec(float(r)) for r in expected]
    return specs, TransferMatrix(fact.unitary.conj())
