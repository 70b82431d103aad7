"""Validated Hermitian operator algebra on small dense complex matrices.

States and Hamiltonians are wrapped in thin immutable dataclasses whose
constructors enforce the defining invariants (Hermiticity, positivity, unit
trace).  Everything else works on plain ``numpy`` arrays; wrapped values
unwrap transparently via ``__array__``.  Entropies are in nats throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimMismatch,
    EigSolverFailure,
    NotHermitian,
    NotPSD,
    ParamOutOfRange,
    TraceMismatch,
)
from .tolerances import (
    HERMITICITY_TOL,
    MAJORIZATION_TOL,
    PSD_TOL,
    RECONSTRUCTION_TOL,
    TRACE_TOL,
)


def as_matrix(x) -> np.ndarray:
    """Unwrap a DensityOperator/HermitianOperator or pass an array through."""
    return np.asarray(getattr(x, "entries", x), dtype=complex)


def hermitian_part(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    return (a + a.conj().T) / 2.0


def _check_square(a: np.ndarray, what: str = "matrix") -> int:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimMismatch(f"{what} must be square, got shape {a.shape}")
    return a.shape[0]


def _scale(a: np.ndarray) -> float:
    return max(1.0, float(np.linalg.norm(a)))


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """A validated Hermitian matrix (a Hamiltonian or generic observable)."""

    dim: int
    entries: np.ndarray

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A validated state: Hermitian, positive semidefinite, unit trace."""

    dim: int
    entries: np.ndarray

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def validate_hermitian(raw, tol: float = HERMITICITY_TOL) -> HermitianOperator:
    """Check Hermiticity and wrap; raises NotHermitian / DimMismatch."""
    a = as_matrix(raw)
    dim = _check_square(a)
    if dim < 2:
        raise DimMismatch(f"dimension must be at least 2, got {dim}")
    dev = float(np.linalg.norm(a - a.conj().T))
    if dev > tol * _scale(a):
        raise NotHermitian(f"deviation from Hermiticity {dev:.3e}")
    return HermitianOperator(dim=dim, entries=_freeze(hermitian_part(a)))


def validate_density(raw) -> DensityOperator:
    """Validate a raw matrix as a state.

    Eigenvalues in [-PSD_TOL, 0) are clipped to zero and the trace is
    renormalized; anything worse is rejected (NotHermitian, NotPSD,
    TraceMismatch).
    """
    a = as_matrix(raw)
    dim = _check_square(a, "state")
    if dim < 2:
        raise DimMismatch(f"dimension must be at least 2, got {dim}")
    dev = float(np.linalg.norm(a - a.conj().T))
    if dev > HERMITICITY_TOL * _scale(a):
        raise NotHermitian(f"deviation from Hermiticity {dev:.3e}")
    tr = complex(np.trace(a))
    if abs(tr - 1.0) > TRACE_TOL:
        raise TraceMismatch(f"trace {tr:.12g} is not 1")
    h = hermitian_part(a)
    w, v = np.linalg.eigh(h)
    if w[0] < -PSD_TOL:
        raise NotPSD(f"eigenvalue {w[0]:.3e} below -{PSD_TOL:.0e}")
    w = np.clip(w, 0.0, None)
    rho = (v * w) @ v.conj().T
    rho = hermitian_part(rho / np.trace(rho).real)
    return DensityOperator(dim=dim, entries=_freeze(rho))


def spectrum_of(a, tol: float = RECONSTRUCTION_TOL) -> Spectrum:
    """Descending eigendecomposition of a Hermitian matrix.

    The reconstruction ``V diag(w) V^dag`` must match the input within
    ``tol`` (scaled), otherwise EigSolverFailure is raised.
    """
    m = hermitian_part(as_matrix(a))
    _check_square(m)
    w, v = np.linalg.eigh(m)
    w, v = w[::-1], v[:, ::-1]
    recon = (v * w) @ v.conj().T
    err = float(np.linalg.norm(recon - m))
    if err > tol * _scale(m):
        raise EigSolverFailure(f"reconstruction error {err:.3e}")
    return Spectrum(eigenvalues=_freeze(w), eigenvectors=_freeze(v))


def von_neumann_entropy(rho) -> float:
    """Entropy -sum(p log p) in nats; eigenvalues below PSD_TOL count as 0."""
    w = np.linalg.eigvalsh(hermitian_part(as_matrix(rho)))
    w = w[w > PSD_TOL]
    s = float(-(w * np.log(w)).sum())
    return max(s, 0.0)


def energy_expectation(hamiltonian, rho) -> float:
    """Tr(H rho); asserts the imaginary part is negligible."""
    h = as_matrix(hamiltonian)
    r = as_matrix(rho)
    if h.shape != r.shape:
        raise DimMismatch(f"shapes {h.shape} and {r.shape} differ")
    val = complex(np.trace(h @ r))
    if abs(val.imag) > HERMITICITY_TOL * _scale(h) * _scale(r):
        raise NotHermitian(f"energy expectation has imaginary part {val.imag:.3e}")
    return val.real


def hs_inner(x, y) -> complex:
    """Hilbert-Schmidt inner product Tr(X^dag Y)."""
    a, b = as_matrix(x), as_matrix(y)
    if a.shape != b.shape:
        raise DimMismatch(f"shapes {a.shape} and {b.shape} differ")
    return complex(np.vdot(a, b))


def hs_norm(x) -> float:
    return float(np.linalg.norm(as_matrix(x)))


def psd_sqrt(a) -> np.ndarray:
    """Positive square root of a PSD Hermitian matrix."""
    m = as_matrix(a)
    _check_square(m)
    w, v = np.linalg.eigh(hermitian_part(m))
    if w[0] < -PSD_TOL * _scale(m):
        raise NotPSD(f"eigenvalue {w[0]:.3e} is negative")
    w = np.sqrt(np.clip(w, 0.0, None))
    return hermitian_part((v * w) @ v.conj().T)


def polar_decompose(k) -> tuple[np.ndarray, np.ndarray]:
    """Left polar decomposition K = U P with U unitary and P = sqrt(K^dag K).

    Computed from the SVD (U = W V^dag), which fixes the unitary on the
    kernel of P by singular-vector pairing when K is singular.
    """
    m = as_matrix(k)
    _check_square(m)
    w, s, vh = np.linalg.svd(m)
    u = w @ vh
    p = hermitian_part(vh.conj().T @ (s[:, None] * vh))
    return u, p


def gibbs_state(hamiltonian, beta: float) -> DensityOperator:
    """Thermal state exp(-beta H)/Z, computed by eigendecomposition.

    The spectrum is shifted by its minimum before exponentiation so large
    beta cannot overflow.
    """
    if not np.isfinite(beta) or beta < 0:
        raise ParamOutOfRange(f"beta must be finite and >= 0, got {beta}")
    h = as_matrix(hamiltonian)
    _check_square(h, "hamiltonian")
    w, v = np.linalg.eigh(hermitian_part(h))
    exps = np.exp(-beta * (w - w.min()))
    p = exps / exps.sum()
    return validate_density((v * p) @ v.conj().T)


def majorizes(sigma, tau, tol: float = MAJORIZATION_TOL) -> bool:
    """True iff the spectrum of sigma majorizes the spectrum of tau.

    Compares partial sums of eigenvalues in descending order, with slack
    ``tol`` per partial sum.
    """
    a, b = as_matrix(sigma), as_matrix(tau)
    if a.shape != b.shape:
        raise DimMismatch(f"shapes {a.shape} and {b.shape} differ")
    wa = np.sort(np.linalg.eigvalsh(hermitian_part(a)))[::-1]
    wb = np.sort(np.linalg.eigvalsh(hermitian_part(b)))[::-1]
    return bool(np.all(np.cumsum(wa) >= np.cumsum(wb) - tol))
