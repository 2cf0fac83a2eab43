"""Hafnians of complex symmetric matrices.

The hafnian of a 2k x 2k symmetric matrix is the sum over all perfect
matchings of indices {0, .., 2k-1} of the product of matched entries.
It generalizes the permanent's role from bipartite to general graphs
and carries the photon statistics of Gaussian states: event
probabilities are hafnians of pattern reductions of a detection kernel.

Two evaluators are provided.  ``hafnian`` uses inclusion-exclusion over
index pairs with power-trace generating polynomials and handles sizes
up to 30 in exponential but practical time.  ``hafnian_reference``
enumerates matchings directly, which is only feasible for small sizes
but is independent of the fast algorithm and serves as its oracle.
"""

from __future__ import annotations

import numba
import numpy as np

from .errors import GuardError

__all__ = ["hafnian", "hafnian_reference", "reduce_pattern"]

_SYM_TOL = 1e-12
_REFERENCE_MAX = 14
_FAST_MAX = 30


def _as_symmetric(matrix) -> np.ndarray:
    a = np.asarray(matrix, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"hafnian needs a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a.view(np.float64))):
        raise ValueError("hafnian needs finite entries")
    if a.size and np.max(np.abs(a - a.T)) >= _SYM_TOL:
        raise ValueError("hafnian needs a symmetric matrix")
    return a


@numba.njit(cache=True)
def _haf_core(a):  # pragma: no cover - exercised through hafnian()
    n = a.shape[0]
    m = n // 2
    total = 0.0 + 0.0j
    for mask in range(1, 1 << m):
        s = 0
        for j in range(m):
            if mask & (1 << j):
                s += 1
        ns = 2 * s
        rows = np.empty(ns, dtype=np.int64)
        k = 0
        for j in range(m):
            if mask & (1 << j):
                rows[k] = 2 * j
                rows[k + 1] = 2 * j + 1
                k += 2
        # Pair-swapped submatrix: column pairs of a[rows, rows] exchanged.
        b = np.empty((ns, ns), dtype=np.complex128)
        for p in range(ns):
            rp = rows[p]
            for q in range(0, ns, 2):
                b[p, q] = a[rp, rows[q + 1]]
                b[p, q + 1] = a[rp, rows[q]]
        # Power traces tr(b^k) for k = 1 .. m.
        traces = np.empty(m, dtype=np.complex128)
        t = 0.0 + 0.0j
        for p in range(ns):
            t += b[p, p]
        traces[0] = t
        bpow = b
        for k in range(1, m):
            bpow = bpow @ b
            t = 0.0 + 0.0j
            for p in range(ns):
                t += bpow[p, p]
            traces[k] = t
        # eta^m coefficient of exp(sum_k tr(b^k)/(2k) eta^k) via the
        # standard recurrence for exponentials of power series.
        coeff = np.zeros(m + 1, dtype=np.complex128)
        for k in range(1, m + 1):
            coeff[k] = traces[k - 1] / (2.0 * k)
        expo = np.zeros(m + 1, dtype=np.complex128)
        expo[0] = 1.0 + 0.0j
        for j in range(1, m + 1):
            acc = 0.0 + 0.0j
            for k in range(1, j + 1):
                acc += k * coeff[k] * expo[j - k]
            expo[j] = acc / j
        if (m - s) % 2 == 0:
            total += expo[m]
        else:
            total -= expo[m]
    return total


def hafnian(matrix) -> complex:
    """Hafnian of a complex symmetric matrix.

    Uses inclusion-exclusion over the 2^(n/2) subsets of index pairs,
    with the matching-generating function of each subset evaluated
    through power traces.  Odd dimension gives 0, the empty matrix
    gives 1.  Dimensions above 30 are rejected rather than left to run
    for hours.
    """
    a = _as_symmetric(matrix)
    n = a.shape[0]
    if n == 0:
        return 1 + 0j
    if n % 2:
        return 0j
    if n > _FAST_MAX:
        raise GuardError(f"hafnian of size {n} exceeds the supported maximum {_FAST_MAX}")
    return complex(_haf_core(np.ascontiguousarray(a)))


def hafnian_reference(matrix) -> complex:
    """Hafnian by direct perfect-matching enumeration ((n-1)!! terms)."""
    a = _as_symmetric(matrix)
    n = a.shape[0]
    if n == 0:
        return 1 + 0j
    if n % 2:
        return 0j
    if n > _REFERENCE_MAX:
        raise GuardError(
            f"hafnian_reference of size {n} exceeds the supported maximum {_REFERENCE_MAX}"
        )
    return _match(a, tuple(range(n)))


def _match(a: np.ndarray, idx: tuple) -> complex:
    if not idx:
        return 1 + 0j
    first, rest = idx[0], idx[1:]
    total = 0j
    for pos, j in enumerate(rest):
        total += a[first, j] * _match(a, rest[:pos] + rest[pos + 1 :])
    return total


def reduce_pattern(matrix, pattern) -> np.ndarray:
    """Row/column expansion of a matrix by per-mode photon counts.

    Index i is repeated pattern[i] times.  An m x m matrix over modes
    expands directly; a 2m x 2m matrix in doubled (mode, conjugate
    mode) layout expands both halves so the block structure survives:
    indices [i repeated n_i for i < m] followed by [i + m repeated n_i].
    """
    a = np.asarray(matrix)
    pat = np.asarray(pattern)
    if pat.ndim != 1 or pat.size == 0:
        raise ValueError("pattern must be a non-empty 1-d sequence of counts")
    if not np.issubdtype(pat.dtype, np.integer):
        raise ValueError("pattern must hold integers")
    if np.any(pat < 0):
        raise ValueError("pattern counts must be non-negative")
    m = pat.size
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    half = np.repeat(np.arange(m), pat)
    if a.shape[0] == m:
        idx = half
    elif a.shape[0] == 2 * m:
        idx = np.concatenate([half, half + m])
    else:
        raise ValueError(
            f"matrix of shape {a.shape} does not match a pattern over {m} modes"
        )
    return a[np.ix_(idx, idx)]
