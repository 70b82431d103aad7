"""Quantum channels: construction, representation, classification, sampling.

A channel is a list of Kraus operators tagged with how it was built (bare
measurement, general measurement, unitary, feedback, thermal).  The matrix
representation uses column stacking throughout: ``vec`` stacks columns, so
conjugation ``X -> K X K^dag`` vectorizes to ``conj(K) (x) K``.  Keeping one
convention everywhere is what prevents transpose bugs; do not mix in
row-major vectorization.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    DegenerateSample,
    DimMismatch,
    KrausViolation,
    LengthMismatch,
    NotPSD,
    NotUnitary,
    ParamOutOfRange,
)
from .operators import (
    DensityOperator,
    as_matrix,
    gibbs_state,
    hermitian_part,
    polar_decompose,
    psd_sqrt,
    validate_density,
)
from .tolerances import HERMITICITY_TOL, KRAUS_TOL, PSD_TOL, RECONSTRUCTION_TOL


class ChannelKind(str, Enum):
    BARE_MEASUREMENT = "bare"
    GENERAL_MEASUREMENT = "general"
    UNITARY = "unitary"
    FEEDBACK = "feedback"
    THERMAL = "thermal"
    COMPOSITE = "composite"


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """A CPTP map given by Kraus operators, with provenance metadata.

    ``bare_ops``/``unitaries`` are populated for feedback channels (the
    measurement operators and the outcome-conditioned unitaries whose
    products form ``kraus_ops``).  ``hamiltonian``/``beta``/``lam`` are
    populated for thermal channels.
    """

    dim: int
    kraus_ops: tuple
    kind: ChannelKind
    bare_ops: tuple | None = None
    unitaries: tuple | None = None
    hamiltonian: np.ndarray | None = None
    beta: float | None = None
    lam: float | None = None


@dataclass(frozen=True, eq=False)
class Superoperator:
    """A dim^2 x dim^2 matrix acting on column-stacked operators."""

    dim: int
    matrix: np.ndarray


@dataclass(frozen=True)
class ChannelReport:
    """Classification flags with the worst violation found for each."""

    trace_preserving: bool
    unital: bool
    self_dual: bool
    completely_positive: bool
    spectrum_nonnegative: bool
    tp_violation: float
    unital_violation: float
    self_dual_violation: float
    cp_violation: float
    spectrum_violation: float


# ---------------------------------------------------------------------------
# vectorization

def vec(a) -> np.ndarray:
    """Column-stack a matrix into a vector."""
    return np.asarray(as_matrix(a)).T.reshape(-1)


def unvec(v: np.ndarray) -> np.ndarray:
    """Inverse of ``vec`` for square matrices."""
    v = np.asarray(v)
    dim = int(round(np.sqrt(v.size)))
    if dim * dim != v.size:
        raise DimMismatch(f"vector of length {v.size} is not a square matrix")
    return v.reshape(dim, dim).T


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(np.asarray(a, dtype=complex))
    a.setflags(write=False)
    return a


def _check_ops(ops) -> tuple[int, list[np.ndarray]]:
    mats = [as_matrix(op) for op in ops]
    if not mats:
        raise LengthMismatch("need at least one Kraus operator")
    dim = mats[0].shape[0]
    for m in mats:
        if m.ndim != 2 or m.shape != (dim, dim):
            raise DimMismatch(f"Kraus operators must all be {dim}x{dim}")
    return dim, mats


def _kraus_residual(mats, dim) -> float:
    acc = sum(m.conj().T @ m for m in mats)
    return float(np.linalg.norm(acc - np.eye(dim)))


# ---------------------------------------------------------------------------
# constructors

def bare_measurement(ops) -> KrausChannel:
    """Nonselective measurement with Hermitian PSD operators summing (in
    squares) to the identity."""
    dim, mats = _check_ops(ops)
    for i, m in enumerate(mats):
        if np.linalg.norm(m - m.conj().T) > HERMITICITY_TOL * max(1.0, np.linalg.norm(m)):
            raise NotPSD(f"operator {i} is not Hermitian")
        if np.linalg.eigvalsh(hermitian_part(m))[0] < -PSD_TOL:
            raise NotPSD(f"operator {i} has a negative eigenvalue")
    residual = _kraus_residual(mats, dim)
    if residual > KRAUS_TOL:
        raise KrausViolation(residual)
    return KrausChannel(dim=dim, kraus_ops=tuple(_freeze(m) for m in mats),
                        kind=ChannelKind.BARE_MEASUREMENT)


def general_measurement(ops) -> KrausChannel:
    """Nonselective measurement with arbitrary Kraus operators."""
    dim, mats = _check_ops(ops)
    residual = _kraus_residual(mats, dim)
    if residual > KRAUS_TOL:
        raise KrausViolation(residual)
    return KrausChannel(dim=dim, kraus_ops=tuple(_freeze(m) for m in mats),
                        kind=ChannelKind.GENERAL_MEASUREMENT)


def _check_unitary(u: np.ndarray, label: str = "matrix") -> None:
    dim = u.shape[0]
    dev = float(np.linalg.norm(u.conj().T @ u - np.eye(dim)))
    if dev > RECONSTRUCTION_TOL:
        raise NotUnitary(f"{label} deviates from unitarity by {dev:.3e}")


def unitary_channel(u) -> KrausChannel:
    m = as_matrix(u)
    _check_unitary(m)
    return KrausChannel(dim=m.shape[0], kraus_ops=(_freeze(m),), kind=ChannelKind.UNITARY)


def feedback_from_measurement(ms, us) -> KrausChannel:
    """Bare measurement followed by outcome-conditioned unitaries.

    Kraus operators are the products U_s M_s; the action is
    rho -> sum_s U_s M_s rho M_s U_s^dag.
    """
    if len(ms) != len(us):
        raise LengthMismatch(f"{len(ms)} measurement operators vs {len(us)} unitaries")
    bare = bare_measurement(ms)
    u_mats = [as_matrix(u) for u in us]
    for i, u in enumerate(u_mats):
        if u.shape != (bare.dim, bare.dim):
            raise DimMismatch(f"unitary {i} has shape {u.shape}")
        _check_unitary(u, f"unitary {i}")
    kraus = tuple(_freeze(u @ m) for u, m in zip(u_mats, bare.kraus_ops))
    return KrausChannel(dim=bare.dim, kraus_ops=kraus, kind=ChannelKind.FEEDBACK,
                        bare_ops=bare.kraus_ops,
                        unitaries=tuple(_freeze(u) for u in u_mats))


def partial_thermalization(hamiltonian, beta: float, lam: float) -> KrausChannel:
    """Convex mixing toward the thermal state: rho -> (1-lam) rho + lam gibbs.

    Kraus set: sqrt(1-lam) * identity together with
    sqrt(lam p_j) |e_j><e_k| over all energy eigenvector pairs (j, k),
    where p_j are the Gibbs weights.  The Gibbs state is a fixed point for
    every lam in [0, 1].
    """
    if not 0.0 <= lam <= 1.0:
        raise ParamOutOfRange(f"lambda must be in [0, 1], got {lam}")
    h = as_matrix(hamiltonian)
    dim = h.shape[0]
    g = gibbs_state(h, beta)
    w, v = np.linalg.eigh(as_matrix(g))
    ops = []
    if lam < 1.0:
        ops.append(np.sqrt(1.0 - lam) * np.eye(dim, dtype=complex))
    if lam > 0.0:
        for j in range(dim):
            if w[j] <= 0.0:
                continue
            for k in range(dim):
                ops.append(np.sqrt(lam * w[j]) * np.outer(v[:, j], v[:, k].conj()))
    return KrausChannel(dim=dim, kraus_ops=tuple(_freeze(m) for m in ops),
                        kind=ChannelKind.THERMAL, hamiltonian=_freeze(h),
                        beta=float(beta), lam=float(lam))


def polar_split(ch: KrausChannel) -> tuple[KrausChannel, list[np.ndarray]]:
    """Split each Kraus operator K_s = U_s M_s into its positive part and a
    unitary.

    The positive parts form a valid bare measurement (their squares sum to
    the identity because sum K^dag K does).  On the kernel of a singular M_s
    the unitary is a gauge choice, fixed here by SVD pairing.
    """
    if ch.bare_ops is not None and ch.unitaries is not None:
        return (KrausChannel(dim=ch.dim, kraus_ops=ch.bare_ops,
                             kind=ChannelKind.BARE_MEASUREMENT),
                [np.asarray(u) for u in ch.unitaries])
    ms, us = [], []
    for k in ch.kraus_ops:
        u, p = polar_decompose(k)
        ms.append(p)
        us.append(u)
    return bare_measurement(ms), us


# ---------------------------------------------------------------------------
# action and representations

def act(ch: KrausChannel, x) -> np.ndarray:
    """Apply the channel to an arbitrary operator (no state validation)."""
    m = as_matrix(x)
    if m.shape != (ch.dim, ch.dim):
        raise DimMismatch(f"operator shape {m.shape} vs channel dim {ch.dim}")
    out = np.zeros_like(m)
    for k in ch.kraus_ops:
        out += k @ m @ k.conj().T
    return out


def apply(ch: KrausChannel, rho: DensityOperator) -> DensityOperator:
    """Apply the channel to a state and revalidate the output."""
    return validate_density(act(ch, rho))


def kraus_to_superoperator(ops) -> np.ndarray:
    mats = [as_matrix(m) for m in ops]
    return sum(np.kron(m.conj(), m) for m in mats)


def to_superoperator(ch: KrausChannel) -> Superoperator:
    """Matrix acting on column-stacked operators: sum_s conj(K_s) (x) K_s.

    For a bare measurement the result is Hermitian, which is the matrix
    face of self-duality under the Hilbert-Schmidt inner product.
    """
    return Superoperator(dim=ch.dim, matrix=_freeze(kraus_to_superoperator(ch.kraus_ops)))


def superoperator_apply(s: Superoperator, x) -> np.ndarray:
    m = as_matrix(x)
    if m.shape != (s.dim, s.dim):
        raise DimMismatch(f"operator shape {m.shape} vs superoperator dim {s.dim}")
    return unvec(s.matrix @ vec(m))


def superoperator_to_choi(s: Superoperator) -> np.ndarray:
    """Reshuffle the superoperator matrix into the Choi matrix."""
    d = s.dim
    return np.asarray(s.matrix).reshape([d] * 4).swapaxes(0, 3).reshape(d * d, d * d)


def choi_matrix(ch: KrausChannel) -> np.ndarray:
    """Choi matrix sum_s |vec K_s)(vec K_s|; PSD iff the map is CP."""
    return sum(np.outer(vec(k), vec(k).conj()) for k in ch.kraus_ops)


def compose(chs) -> Superoperator:
    """Superoperator of the composition; the rightmost channel acts first."""
    chs = list(chs)
    if not chs:
        raise LengthMismatch("need at least one channel")
    dim = chs[0].dim
    for ch in chs:
        if ch.dim != dim:
            raise DimMismatch("channels have mixed dimensions")
    total = np.eye(dim * dim, dtype=complex)
    for ch in chs:
        total = total @ kraus_to_superoperator(ch.kraus_ops)
    return Superoperator(dim=dim, matrix=_freeze(total))


# ---------------------------------------------------------------------------
# classification

def hermitian_operator_basis(dim: int) -> list[np.ndarray]:
    """Orthonormal Hermitian basis: identity/sqrt(d) plus generalized
    Gell-Mann matrices (diagonal, symmetric, antisymmetric)."""
    basis = [np.eye(dim, dtype=complex) / np.sqrt(dim)]
    for l in range(1, dim):
        d = np.zeros(dim, dtype=complex)
        d[:l] = 1.0
        d[l] = -float(l)
        basis.append(np.diag(d) / np.sqrt(l * (l + 1)))
    for j in range(dim):
        for k in range(j + 1, dim):
            m = np.zeros((dim, dim), dtype=complex)
            m[j, k] = m[k, j] = 1.0 / np.sqrt(2.0)
            basis.append(m)
            m = np.zeros((dim, dim), dtype=complex)
            m[j, k] = -1j / np.sqrt(2.0)
            m[k, j] = 1j / np.sqrt(2.0)
            basis.append(m)
    return basis


def superoperator_in_hermitian_basis(s: Superoperator) -> np.ndarray:
    """Re-express the superoperator in the orthonormal Hermitian basis.

    In this basis the Hilbert-Schmidt pairing is the plain dot product, so
    self-duality of the map is exactly Hermiticity of the returned matrix.
    """
    b = np.column_stack([vec(m) for m in hermitian_operator_basis(s.dim)])
    return b.conj().T @ s.matrix @ b


def _classify_matrix(s: Superoperator, kraus_ops=None) -> ChannelReport:
    dim = s.dim
    ident = vec(np.eye(dim, dtype=complex))
    if kraus_ops is not None:
        tp_violation = _kraus_residual([as_matrix(k) for k in kraus_ops], dim)
        unital_violation = float(np.linalg.norm(
            sum(as_matrix(k) @ as_matrix(k).conj().T for k in kraus_ops) - np.eye(dim)))
    else:
        tp_violation = float(np.linalg.norm(s.matrix.conj().T @ ident - ident))
        unital_violation = float(np.linalg.norm(s.matrix @ ident - ident))

    g = superoperator_in_hermitian_basis(s)
    self_dual_violation = float(np.linalg.norm(g - g.conj().T))
    self_dual = self_dual_violation <= HERMITICITY_TOL * max(1.0, float(np.linalg.norm(g)))

    choi = superoperator_to_choi(s)
    choi_eigs = np.linalg.eigvalsh(hermitian_part(choi))
    cp_violation = float(max(0.0, -choi_eigs[0]))
    completely_positive = bool(choi_eigs[0] >= -PSD_TOL * dim)

    if self_dual:
        eigs = np.linalg.eigvalsh(hermitian_part(s.matrix))
        spectrum_violation = float(max(0.0, -eigs[0]))
    else:
        eigs = np.linalg.eigvals(s.matrix)
        spectrum_violation = float(max(np.abs(eigs.imag).max(), max(0.0, -eigs.real.min())))
    spectrum_nonnegative = spectrum_violation <= PSD_TOL

    return ChannelReport(
        trace_preserving=tp_violation <= KRAUS_TOL,
        unital=unital_violation <= KRAUS_TOL,
        self_dual=self_dual,
        completely_positive=completely_positive,
        spectrum_nonnegative=spectrum_nonnegative,
        tp_violation=tp_violation,
        unital_violation=unital_violation,
        self_dual_violation=self_dual_violation,
        cp_violation=cp_violation,
        spectrum_violation=spectrum_violation,
    )


def classify(ch: KrausChannel) -> ChannelReport:
    """Decide trace preservation, unitality, self-duality, complete
    positivity and spectrum nonnegativity, each against its tolerance."""
    return _classify_matrix(to_superoperator(ch), kraus_ops=ch.kraus_ops)


def classify_superoperator(s: Superoperator) -> ChannelReport:
    """Classification for maps given only as a matrix (no Kraus form)."""
    return _classify_matrix(s)


# ---------------------------------------------------------------------------
# random sampling (all deterministic given the seed)

def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_ginibre(dim: int, seed) -> np.ndarray:
    rng = _rng(seed)
    return rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))


def sample_random_operator(dim: int, seed, hermitian: bool = False) -> np.ndarray:
    g = sample_ginibre(dim, seed)
    return hermitian_part(g) if hermitian else g


def sample_random_unitary(dim: int, seed) -> np.ndarray:
    g = sample_ginibre(dim, seed)
    q, r = np.linalg.qr(g)
    phases = np.diagonal(r).copy()
    phases /= np.abs(phases)
    return q * phases


def sample_random_density(dim: int, seed, rank: int | None = None) -> DensityOperator:
    rng = _rng(seed)
    r = rank or dim
    g = rng.normal(size=(dim, r)) + 1j * rng.normal(size=(dim, r))
    rho = g @ g.conj().T
    return validate_density(rho / np.trace(rho).real)


def sample_random_bare_measurement(dim: int, n_outcomes: int, seed,
                                   max_retries: int = 8) -> KrausChannel:
    """Random bare measurement via symmetrized normalization.

    Draw PSD blocks A_s = G_s G_s^dag, set S = sum A_s and
    E_s = S^{-1/2} A_s S^{-1/2}, so the effects E_s sum exactly to the
    identity; the measurement operators are their positive square roots.
    Resamples internally (up to ``max_retries``) if S is numerically
    singular, then raises DegenerateSample.
    """
    if n_outcomes < 1:
        raise ParamOutOfRange(f"n_outcomes must be >= 1, got {n_outcomes}")
    rng = _rng(seed)
    for _ in range(max_retries):
        blocks = []
        for _ in range(n_outcomes):
            g = sample_ginibre(dim, rng)
            blocks.append(g @ g.conj().T)
        total = sum(blocks)
        w, v = np.linalg.eigh(hermitian_part(total))
        if w[0] <= 1e-12 * w[-1]:
            continue
        inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
        ms = [psd_sqrt(hermitian_part(inv_sqrt @ a @ inv_sqrt)) for a in blocks]
        try:
            return bare_measurement(ms)
        except (KrausViolation, NotPSD):
            continue
    raise DegenerateSample(f"no valid sample after {max_retries} attempts")
