"""Zero-mean Gaussian states of optical modes and their photon statistics.

States are held as ladder-basis covariance matrices.  For m modes the
2m x 2m Hermitian covariance over (a_1 .. a_m, a_1^dag .. a_m^dag) is

    sigma = [[N, M], [conj(M), conj(N)]]

with N Hermitian (N_jk = <a_k^dag a_j> + delta_jk / 2) and M symmetric
(M_jk = <a_j a_k>); the vacuum is sigma = I/2.  Photon statistics come
from the Husimi matrix Q = sigma + I/2 and the detection kernel

    A = X (I - Q^{-1}),    X = [[0, I], [I, 0]],

whose pattern reductions have hafnians proportional to detection
probabilities.  A inherits the block form [[B, C], [conj(C), conj(B)]]
with B symmetric and C Hermitian; C vanishes exactly for pure states,
which is what reduces event probabilities to |haf(B_n)|^2 and makes
pure-state sampling a graph problem.

Linear-optical channels act through a TransferMatrix L (outputs by
inputs, singular values at most 1):

    N' = L N L^dag + (I - L L^dag) / 2,    M' = L M L^T,

which covers unitary interferometers, uniform and per-mode loss, and
maps into a different number of output modes (unreferenced outputs are
vacuum).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, GuardError
from .hafnian import hafnian, reduce_pattern

__all__ = [
    "GaussianState",
    "KernelMatrix",
    "SqueezerSpec",
    "TransferMatrix",
    "apply_channel",
    "kernel_matrix",
    "mean_photon_numbers",
    "pattern_probability",
    "purity",
    "squeezed_vacuum_state",
    "two_mode_squeezed_state",
    "uniform_loss",
    "vacuum_state",
]

_HERM_TOL = 1e-9
_BLOCK_TOL = 1e-10
_IMAG_TOL = 1e-10
_SINGVAL_TOL = 1e-10


def _exchange(m: int) -> np.ndarray:
    x = np.zeros((2 * m, 2 * m))
    x[:m, m:] = np.eye(m)
    x[m:, :m] = np.eye(m)
    return x


def _matrix_json(m: int, mat: np.ndarray) -> str:
    doc = {
        "m": m,
        "sigma_re": mat.real.tolist(),
        "sigma_im": mat.imag.tolist(),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _matrix_from_json(text: str) -> np.ndarray:
    try:
        doc = json.loads(text)
        m = int(doc["m"])
        real = np.asarray(doc["sigma_re"], dtype=float)
        imag = np.asarray(doc["sigma_im"], dtype=float)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed matrix document: {exc}") from exc
    if real.shape != (2 * m, 2 * m) or imag.shape != (2 * m, 2 * m):
        raise ConfigError(
            f"matrix document for m={m} needs {2 * m} x {2 * m} blocks, "
            f"got {real.shape} and {imag.shape}"
        )
    return real + 1j * imag


@dataclass(frozen=True)
class GaussianState:
    """Zero-mean state held as its ladder-basis covariance matrix."""

    sigma: np.ndarray

    def __post_init__(self):
        sig = np.array(self.sigma, dtype=np.complex128)
        if sig.ndim != 2 or sig.shape[0] != sig.shape[1] or sig.shape[0] % 2:
            raise ValueError(f"covariance must be 2m x 2m, got shape {sig.shape}")
        m = sig.shape[0] // 2
        if np.max(np.abs(sig - sig.conj().T)) > _HERM_TOL:
            raise ValueError("covariance must be Hermitian")
        x = _exchange(m)
        if np.max(np.abs(x @ sig @ x - sig.conj())) > _HERM_TOL:
            raise ValueError("covariance must satisfy the mode/conjugate exchange symmetry")
        sig = (sig + sig.conj().T) / 2.0
        sig = (sig + x @ sig.conj() @ x) / 2.0
        sig.flags.writeable = False
        object.__setattr__(self, "sigma", sig)

    @property
    def num_modes(self) -> int:
        return self.sigma.shape[0] // 2

    @property
    def number_block(self) -> np.ndarray:
        m = self.num_modes
        return self.sigma[:m, :m]

    @property
    def pair_block(self) -> np.ndarray:
        m = self.num_modes
        return self.sigma[:m, m:]

    def to_json(self) -> str:
        return _matrix_json(self.num_modes, self.sigma)

    @classmethod
    def from_json(cls, text: str) -> "GaussianState":
        try:
            return cls(_matrix_from_json(text))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"document is not a valid covariance: {exc}") from exc


@dataclass(frozen=True)
class KernelMatrix:
    """Detection kernel A = X (I - Q^{-1}) in doubled-index layout."""

    a: np.ndarray

    def __post_init__(self):
        mat = np.array(self.a, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] % 2:
            raise ValueError(f"kernel must be 2m x 2m, got shape {mat.shape}")
        m = mat.shape[0] // 2
        b = mat[:m, :m]
        c = mat[:m, m:]
        scale = max(1.0, np.max(np.abs(mat)))
        if np.max(np.abs(b - b.T)) > _BLOCK_TOL * scale:
            raise ValueError("kernel pair block must be symmetric")
        if np.max(np.abs(c - c.conj().T)) > _BLOCK_TOL * scale:
            raise ValueError("kernel cross block must be Hermitian")
        if np.max(np.abs(mat[m:, :m] - c.conj())) > _BLOCK_TOL * scale:
            raise ValueError("kernel lower-left block must conjugate the cross block")
        if np.max(np.abs(mat[m:, m:] - b.conj())) > _BLOCK_TOL * scale:
            raise ValueError("kernel lower-right block must conjugate the pair block")
        b = (b + b.T) / 2.0
        c = (c + c.conj().T) / 2.0
        mat = np.block([[b, c], [c.conj(), b.conj()]])
        mat.flags.writeable = False
        object.__setattr__(self, "a", mat)

    @property
    def num_modes(self) -> int:
        return self.a.shape[0] // 2

    @property
    def b_block(self) -> np.ndarray:
        m = self.num_modes
        return self.a[:m, :m]

    @property
    def c_block(self) -> np.ndarray:
        m = self.num_modes
        return self.a[:m, m:]

    def to_json(self) -> str:
        return _matrix_json(self.num_modes, self.a)

    @classmethod
    def from_json(cls, text: str) -> "KernelMatrix":
        try:
            return cls(_matrix_from_json(text))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"document is not a valid kernel: {exc}") from exc


@dataclass(frozen=True)
class SqueezerSpec:
    """Single-mode squeezer with <aa> = e^{i theta} sinh(r) cosh(r)."""

    r: float
    theta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r >= 0.0):
            raise ValueError(f"squeezing r must be finite and non-negative, got {self.r}")
        if not math.isfinite(self.theta):
            raise ValueError("squeezing phase must be finite")

    @classmethod
    def from_tanh(cls, lam: float, theta: float = 0.0) -> "SqueezerSpec":
        """Build from the Takagi-style weight lambda = tanh(r), 0 <= lambda < 1."""
        if not (0.0 <= lam < 1.0):
            raise ValueError(f"tanh(r) must lie in [0, 1), got {lam}")
        return cls(r=math.atanh(lam), theta=theta)

    @property
    def tanh_r(self) -> float:
        return math.tanh(self.r)


@dataclass(frozen=True)
class TransferMatrix:
    """Linear-optical map, outputs by inputs, singular values at most 1."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.size == 0:
            raise ValueError(f"transfer matrix must be 2-d, got shape {mat.shape}")
        if not np.all(np.isfinite(mat.view(np.float64))):
            raise ValueError("transfer matrix must have finite entries")
        top = np.linalg.norm(mat, ord=2)
        if top > 1.0 + _SINGVAL_TOL:
            raise GuardError(
                f"transfer matrix amplifies: largest singular value {top:.6g} exceeds 1"
            )
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @property
    def num_outputs(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_inputs(self) -> int:
        return self.matrix.shape[1]

    @property
    def is_unitary(self) -> bool:
        if self.num_outputs != self.num_inputs:
            return False
        gram = self.matrix.conj().T @ self.matrix
        return bool(np.max(np.abs(gram - np.eye(self.num_inputs))) <= _SINGVAL_TOL)

    @classmethod
    def identity(cls, m: int) -> "TransferMatrix":
        return cls(np.eye(m, dtype=np.complex128))

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        if self.num_inputs != other.num_outputs:
            raise ValueError(
                f"cannot compose {self.matrix.shape} with {other.matrix.shape}"
            )
        return TransferMatrix(self.matrix @ other.matrix)


def vacuum_state(num_modes: int) -> GaussianState:
    if num_modes < 1:
        raise ValueError("need at least one mode")
    return GaussianState(0.5 * np.eye(2 * num_modes, dtype=np.complex128))


def squeezed_vacuum_state(squeezers: Sequence[SqueezerSpec]) -> GaussianState:
    """Product of independent squeezed vacua, one per mode."""
    specs = list(squeezers)
    if not specs:
        raise ValueError("need at least one squeezer")
    m = len(specs)
    sinh = np.array([math.sinh(s.r) for s in specs])
    cosh = np.array([math.cosh(s.r) for s in specs])
    phase = np.array([np.exp(1j * s.theta) for s in specs])
    n_block = np.diag(sinh**2 + 0.5).astype(np.complex128)
    m_block = np.diag(phase * sinh * cosh)
    sigma = np.block([[n_block, m_block], [m_block.conj(), n_block.conj()]])
    return GaussianState(sigma)


def two_mode_squeezed_state(r: float, theta: float = 0.0) -> GaussianState:
    """Two-mode squeezed vacuum with <a1 a2> = e^{i theta} sinh(r) cosh(r)."""
    spec = SqueezerSpec(r=r, theta=theta)
    s, c = math.sinh(spec.r), math.cosh(spec.r)
    n_block = (s**2 + 0.5) * np.eye(2, dtype=np.complex128)
    m_block = np.array([[0.0, np.exp(1j * theta) * s * c], [np.exp(1j * theta) * s * c, 0.0]])
    sigma = np.block([[n_block, m_block], [m_block.conj(), n_block.conj()]])
    return GaussianState(sigma)


def apply_channel(state: GaussianState, transfer: TransferMatrix) -> GaussianState:
    """Push a state through a linear-optical map, adding vacuum for the loss."""
    lam = transfer.matrix
    if lam.shape[1] != state.num_modes:
        raise ValueError(
            f"transfer expects {lam.shape[1]} inputs, state has {state.num_modes} modes"
        )
    p = lam.shape[0]
    n_out = lam @ state.number_block @ lam.conj().T + 0.5 * (np.eye(p) - lam @ lam.conj().T)
    m_out = lam @ state.pair_block @ lam.T
    sigma = np.block([[n_out, m_out], [m_out.conj(), n_out.conj()]])
    return GaussianState(sigma)


def uniform_loss(state: GaussianState, eta: float) -> GaussianState:
    """Equal-transmission loss eta in [0, 1] on every mode."""
    if not (0.0 <= eta <= 1.0):
        raise ValueError(f"transmission must lie in [0, 1], got {eta}")
    scale = math.sqrt(eta) * np.eye(state.num_modes, dtype=np.complex128)
    return apply_channel(state, TransferMatrix(scale))


def _husimi_eigenvalues(state: GaussianState) -> np.ndarray:
    q = state.sigma + 0.5 * np.eye(2 * state.num_modes)
    eig = np.linalg.eigvalsh(q)
    if eig[0] <= 0.0:
        raise GuardError(f"Husimi matrix is not positive definite (min eig {eig[0]:.3e})")
    return eig


def kernel_matrix(state: GaussianState) -> KernelMatrix:
    """Detection kernel A = X (I - Q^{-1}) of the state."""
    two_m = 2 * state.num_modes
    q = state.sigma + 0.5 * np.eye(two_m)
    try:
        g = np.eye(two_m) - np.linalg.solve(q, np.eye(two_m))
    except np.linalg.LinAlgError as exc:
        raise GuardError(f"Husimi matrix is singular: {exc}") from exc
    a = _exchange(state.num_modes) @ g
    try:
        return KernelMatrix(a)
    except ValueError as exc:
        raise GuardError(f"kernel lost its block structure: {exc}") from exc


def vacuum_probability(state: GaussianState) -> float:
    """P(no photon anywhere) = det(Q)^{-1/2}."""
    eig = _husimi_eigenvalues(state)
    return float(np.exp(-0.5 * np.sum(np.log(eig))))


def pattern_probability(state: GaussianState, pattern) -> float:
    """Probability of detecting exactly pattern[i] photons in mode i."""
    pat = np.asarray(pattern)
    if pat.ndim != 1 or pat.size != state.num_modes:
        raise ValueError(
            f"pattern must list one count per mode ({state.num_modes}), got {pat.shape}"
        )
    if not np.issubdtype(pat.dtype, np.integer) or np.any(pat < 0):
        raise ValueError("pattern must hold non-negative integers")
    p0 = vacuum_probability(state)
    total = int(pat.sum())
    if total == 0:
        return p0
    sub = reduce_pattern(kernel_matrix(state).a, pat)
    weight = hafnian(sub)
    norm = math.prod(math.factorial(int(n)) for n in pat)
    value = p0 * weight / norm
    # Hafnian roundoff tracks the 2^N subset sum inside it, so the
    # realness check must widen accordingly or large patterns trip it.
    tol = _IMAG_TOL * math.ldexp(1.0, total)
    if abs(value.imag) > tol * max(1.0, abs(value)):
        raise GuardError(f"probability has imaginary residue {value.imag:.3e}")
    real = value.real
    if real < -tol:
        raise GuardError(f"probability is negative: {real:.3e}")
    return max(real, 0.0)


def purity(state: GaussianState) -> float:
    """Tr(rho^2) = det(2 sigma)^{-1/2}; exactly 1 on pure states."""
    eig = np.linalg.eigvalsh(state.sigma)
    if eig[0] <= 0.0:
        raise GuardError(f"covariance is not positive definite (min eig {eig[0]:.3e})")
    return float(np.exp(-0.5 * np.sum(np.log(2.0 * eig))))


def mean_photon_numbers(state: GaussianState) -> np.ndarray:
    """Per-mode expectation values <n_i>."""
    return np.real(np.diag(state.number_block)) - 0.5
