"""Asymptotics of repeated channels.

Long-run behaviour of a trace-preserving map is governed by its peripheral
eigenvalues (unit modulus).  This module extracts the full spectrum, builds
the spectral projector onto the peripheral subspace, projects states into
the steady regime, finds return times of the projected state, and computes
fixed points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    EigSolverFailure,
    IllConditioned,
    NoRecurrenceFound,
    ParamOutOfRange,
    ValidationFailure,
)
from .channels import Superoperator, unvec, vec
from .operators import DensityOperator, hermitian_part, validate_density
from .tolerances import PERIPHERAL_TOL, PSD_TOL, RECONSTRUCTION_TOL

# largest acceptable norm of the Sylvester coupling block; beyond this the
# oblique projector amplifies roundoff past the guaranteed tolerances
_CONDITION_BOUND = 1e8


@dataclass(frozen=True, eq=False)
class PeripheralDecomposition:
    """Spectral data of a channel restricted to the unit circle.

    ``projector`` is the (generally oblique) spectral projector onto the
    span of eigenvectors with unit-modulus eigenvalues; it is idempotent,
    commutes with the channel and is itself a valid channel.
    """

    eigenvalues: np.ndarray
    peripheral_indices: np.ndarray
    projector: Superoperator


@dataclass(frozen=True, eq=False)
class RecurrenceRecord:
    """Return times of the projected state under iteration."""

    epsilon: float
    n_max: int
    times: np.ndarray
    distances: np.ndarray


def spectrum(e: Superoperator) -> np.ndarray:
    """All eigenvalues of the superoperator, sorted by modulus descending."""
    try:
        vals = np.linalg.eigvals(np.asarray(e.matrix))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise EigSolverFailure(str(exc)) from exc
    order = np.argsort(-np.abs(vals), kind="stable")
    return vals[order]


def _schur_projector(matrix: np.ndarray, select) -> tuple[np.ndarray, int]:
    """Spectral projector onto the invariant subspace selected by ``select``.

    Sorted complex Schur form puts the selected cluster in the leading
    block; the coupling block of the projector solves a Sylvester equation.
    This stays accurate for repeated or clustered eigenvalues where
    individual eigenvectors are ill-conditioned.
    """
    n = matrix.shape[0]
    try:
        t, z, sdim = scipy.linalg.schur(matrix, output="complex", sort=select)
    except Exception as exc:  # pragma: no cover - LAPACK failure
        raise EigSolverFailure(str(exc)) from exc
    if sdim == 0:
        return np.zeros((n, n), dtype=complex), 0
    if sdim == n:
        return np.eye(n, dtype=complex), n
    t11 = t[:sdim, :sdim]
    t12 = t[:sdim, sdim:]
    t22 = t[sdim:, sdim:]
    try:
        coupling = scipy.linalg.solve_sylvester(t11, -t22, t12)
    except Exception as exc:
        raise IllConditioned(np.inf, f"Sylvester solve failed: {exc}") from exc
    cond = float(np.linalg.norm(coupling))
    if not np.isfinite(cond) or cond > _CONDITION_BOUND:
        raise IllConditioned(cond)
    block = np.zeros((n, n), dtype=complex)
    block[:sdim, :sdim] = np.eye(sdim)
    block[:sdim, sdim:] = coupling
    return z @ block @ z.conj().T, sdim


def peripheral_projector(e: Superoperator,
                         tol: float = PERIPHERAL_TOL) -> PeripheralDecomposition:
    """Spectral projector onto the eigenvalues with 1 - |lambda| <= tol.

    Raises IllConditioned when the oblique projector cannot be trusted;
    ``cesaro_projector`` is the explicit fallback for that case.
    """
    vals = spectrum(e)
    peripheral = np.abs(vals) >= 1.0 - tol
    proj, sdim = _schur_projector(np.asarray(e.matrix),
                                  lambda lam: abs(lam) >= 1.0 - tol)
    if sdim != int(peripheral.sum()):
        raise EigSolverFailure(
            f"Schur cluster size {sdim} disagrees with {int(peripheral.sum())} "
            "peripheral eigenvalues")
    idx = np.nonzero(peripheral)[0]
    return PeripheralDecomposition(
        eigenvalues=vals,
        peripheral_indices=idx,
        projector=Superoperator(dim=e.dim, matrix=proj),
    )


def cesaro_projector(e: Superoperator, tol: float = PERIPHERAL_TOL,
                     n_terms: int = 4000) -> PeripheralDecomposition:
    """Peripheral projector by phase-compensated power averaging.

    For each peripheral eigenvalue lambda, (1/N) sum_n (E/lambda)^n converges
    to the projector onto that eigenspace.  Much slower than the Schur route
    (convergence is O(1/N)); intended as the fallback when the Schur
    projector reports IllConditioned.
    """
    vals = spectrum(e)
    peripheral = np.abs(vals) >= 1.0 - tol
    # cluster peripheral eigenvalues that coincide within tolerance
    phases: list[complex] = []
    for lam in vals[peripheral]:
        if not any(abs(lam - mu) < 1e-8 for mu in phases):
            phases.append(complex(lam / abs(lam)))
    n = e.matrix.shape[0]
    total = np.zeros((n, n), dtype=complex)
    for lam in phases:
        acc = np.zeros((n, n), dtype=complex)
        term = np.eye(n, dtype=complex)
        for _ in range(n_terms):
            term = (e.matrix / lam) @ term
            acc += term
        total += acc / n_terms
    idx = np.nonzero(peripheral)[0]
    return PeripheralDecomposition(
        eigenvalues=vals,
        peripheral_indices=idx,
        projector=Superoperator(dim=e.dim, matrix=total),
    )


def project_peripheral(pd: PeripheralDecomposition, rho) -> DensityOperator:
    """Project a state onto the peripheral subspace and revalidate.

    The peripheral projector of a channel is itself a channel, so the output
    must be a valid state; a validation error here signals a broken
    projector and is surfaced, never repaired.
    """
    out = unvec(np.asarray(pd.projector.matrix) @ vec(rho))
    try:
        return validate_density(out)
    except Exception as exc:
        raise ValidationFailure(f"projected state is not a valid state: {exc}") from exc


def find_recurrences(e: Superoperator, rho_phi, epsilon: float = 1e-6,
                     n_max: int = 100_000) -> RecurrenceRecord:
    """Scan n = 1..n_max for returns of the projected state.

    Iterates the channel on the running state (never forms dense matrix
    powers) and records every n with ||E^n(rho_phi) - rho_phi|| < epsilon in
    Hilbert-Schmidt norm.  Raises NoRecurrenceFound with the closest
    approach when the scan comes up empty, which means n_max is too small or
    epsilon too tight for the channel's peripheral phases.
    """
    if epsilon <= 0:
        raise ParamOutOfRange(f"epsilon must be positive, got {epsilon}")
    if n_max < 1:
        raise ParamOutOfRange(f"n_max must be >= 1, got {n_max}")
    matrix = np.asarray(e.matrix)
    v0 = vec(rho_phi).astype(complex)
    v = v0.copy()
    times: list[int] = []
    dists: list[float] = []
    best = np.inf
    best_n = 0
    for n in range(1, n_max + 1):
        v = matrix @ v
        dist = float(np.linalg.norm(v - v0))
        if dist < epsilon:
            times.append(n)
            dists.append(dist)
        if dist < best:
            best, best_n = dist, n
    if not times:
        raise NoRecurrenceFound(best, best_n)
    return RecurrenceRecord(epsilon=float(epsilon), n_max=int(n_max),
                            times=np.asarray(times, dtype=np.int64),
                            distances=np.asarray(dists))


def fixed_points(e: Superoperator,
                 tol: float = PERIPHERAL_TOL) -> tuple[list[np.ndarray], DensityOperator | None]:
    """Orthonormal basis of the eigenvalue-1 eigenspace, plus a fixed state.

    The basis spans the invariant subspace for eigenvalues within ``tol`` of
    1.  The second return value is a density-operator fixed point when one
    exists in that subspace, found by projecting the maximally mixed state,
    taking the Hermitian part and checking positivity; ``None`` otherwise.
    """
    matrix = np.asarray(e.matrix)
    proj, sdim = _schur_projector(matrix, lambda lam: abs(lam - 1.0) <= tol)
    if sdim == 0:
        return [], None
    # orthonormal basis of the range, as operators (left singular vectors of
    # an idempotent have singular value >= 1 exactly on its range)
    u, _, _ = np.linalg.svd(proj)
    ops = [unvec(u[:, i]) for i in range(sdim)]

    dim = e.dim
    candidate = hermitian_part(unvec(proj @ vec(np.eye(dim, dtype=complex) / dim)))
    trace = float(np.trace(candidate).real)
    state = None
    if abs(trace) > 1e-12:
        candidate = candidate / trace
        eigs = np.linalg.eigvalsh(candidate)
        residual = float(np.linalg.norm(unvec(matrix @ vec(candidate)) - candidate))
        if eigs[0] >= -PSD_TOL and residual <= RECONSTRUCTION_TOL:
            state = validate_density(candidate)
    return ops, state
