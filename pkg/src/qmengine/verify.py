"""Randomized trial suites certifying the library's core inequalities.

Each suite runs deterministic seeded trials and returns a TrialReport.  A
trial's violation is the amount by which it misses the mathematical claim
(zero when satisfied); the report keeps the worst violation seen and, when
any trial fails its tolerance, a serialized witness that can be re-evaluated
with ``reevaluate_witness``.

Per-trial randomness comes from child generators spawned from the master
seed, so trials are independent and reproducible in any order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonHermitianKraus, NotPureMeasurementCycle, ParamOutOfRange
from .channels import (
    ChannelKind,
    KrausChannel,
    act,
    apply,
    bare_measurement,
    sample_random_bare_measurement,
    sample_random_density,
    sample_random_operator,
    sample_random_unitary,
)
from .engine import (
    EngineCycle,
    _bare_stage,
    _step_states,
    cycle_superoperator,
    sample_random_bare_cycle,
)
from .operators import (
    as_matrix,
    energy_expectation,
    hs_inner,
    hs_norm,
    validate_density,
    von_neumann_entropy,
)
from .spectral import peripheral_projector, project_peripheral
from .serialize import (
    channel_from_json,
    channel_to_json,
    cycle_from_json,
    cycle_to_json,
    matrix_from_json,
    matrix_to_json,
)
from .tolerances import HERMITICITY_TOL, MAJORIZATION_TOL

MONOTONICITY_TOL = 1e-10
EQUALITY_TOL = 1e-10
LEMMA_TOL = 1e-9
IDENTITY_TOL = 1e-9
NOGO_TOL = 1e-7
NOGO_ENTROPY_TOL = 1e-6
PIVOT_DISTANCE_TOL = 1e-6

SUITES = ("monotonicity", "equivalence", "half_contractivity", "commutator",
          "majorization", "no_go")


@dataclass(frozen=True)
class TrialReport:
    """Outcome of a suite: trial counts, worst violation, failing witness."""

    n_trials: int
    n_pass: int
    worst_violation: float
    witness: dict | None


class _Collector:
    def __init__(self):
        self.n_trials = 0
        self.n_pass = 0
        self.worst = 0.0
        self._worst_fail = -1.0
        self.witness = None

    def record(self, violation: float, tol: float, witness_fn) -> bool:
        self.n_trials += 1
        v = float(violation)
        ok = v <= tol
        if ok:
            self.n_pass += 1
        self.worst = max(self.worst, v)
        if not ok and v > self._worst_fail:
            self._worst_fail = v
            self.witness = witness_fn()
        return ok

    def merge(self, other: "TrialReport") -> None:
        self.n_trials += other.n_trials
        self.n_pass += other.n_pass
        self.worst = max(self.worst, other.worst_violation)
        if other.witness is not None and self.witness is None:
            self.witness = other.witness

    def report(self) -> TrialReport:
        return TrialReport(n_trials=self.n_trials, n_pass=self.n_pass,
                           worst_violation=self.worst, witness=self.witness)


def _child_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _require_dim(dim: int) -> None:
    if dim < 2:
        raise ParamOutOfRange(f"dim must be >= 2, got {dim}")


def _entropy_gain(ch: KrausChannel, rho) -> float:
    state = validate_density(rho)
    return von_neumann_entropy(apply(ch, state)) - von_neumann_entropy(state)


# ---------------------------------------------------------------------------
# monotonicity of the entropy of disturbance

def verify_monotonicity(dim: int, n_trials: int, seed: int) -> TrialReport:
    """Nonselective measurement backaction never decreases entropy."""
    _require_dim(dim)
    col = _Collector()
    for i in range(n_trials):
        rng = _child_rng(seed, i)
        ch = sample_random_bare_measurement(dim, int(rng.integers(1, dim + 2)), rng)
        rho = sample_random_density(dim, rng, rank=int(rng.integers(1, dim + 1)))
        violation = max(0.0, -_entropy_gain(ch, rho))
        col.record(violation, MONOTONICITY_TOL, lambda: {
            "check": "monotonicity", "dim": dim,
            "channel": channel_to_json(ch), "state": matrix_to_json(rho),
            "violation": violation})
    return col.report()


# ---------------------------------------------------------------------------
# entropy preservation iff fixed point

def _commuting_pair(dim: int, rng: np.random.Generator):
    """A bare measurement and a state diagonal in one common basis, so the
    state is an exact fixed point."""
    basis = sample_random_unitary(dim, rng)
    n_out = int(rng.integers(2, dim + 2))
    weights = rng.random(size=(n_out, dim)) + 1e-3
    weights /= weights.sum(axis=0)
    ops = [basis @ np.diag(np.sqrt(w)) @ basis.conj().T for w in weights]
    probs = rng.random(dim) + 1e-3
    probs /= probs.sum()
    rho = validate_density(basis @ np.diag(probs) @ basis.conj().T)
    return bare_measurement(ops), rho


def _disturbing_pair(dim: int, rng: np.random.Generator, min_distance: float = 1e-3):
    for _ in range(64):
        ch = sample_random_bare_measurement(dim, int(rng.integers(2, dim + 2)), rng)
        rho = sample_random_density(dim, rng, rank=int(rng.integers(1, dim + 1)))
        if hs_norm(act(ch, rho) - as_matrix(rho)) > min_distance:
            return ch, rho
    raise ParamOutOfRange("could not sample a disturbing pair")  # pragma: no cover


def _iterated_fixed_point(ch: KrausChannel, rho, max_iter: int = 20_000) -> np.ndarray:
    """Limit of repeated application; converges because the map's matrix is
    Hermitian PSD with spectrum in [0, 1]."""
    state = as_matrix(rho)
    for _ in range(max_iter):
        nxt = act(ch, state)
        if np.linalg.norm(nxt - state) < 1e-14:
            return nxt
        state = nxt
    return state


def _disturbing_floor(ch: KrausChannel, rho) -> float:
    """Positive data-dependent lower bound for the entropy gain of a
    disturbed state: a quarter of the purity loss, which itself dominates
    the squared disturbance."""
    r = as_matrix(rho)
    out = act(ch, r)
    gap = float((np.trace(r @ r) - np.trace(out @ out)).real)
    return max(1e-12, gap / 4.0)


def verify_nondisturbance_equivalence(dim: int, n_trials: int, seed: int) -> TrialReport:
    """Zero entropy gain exactly at fixed points; strictly positive gain,
    bounded below by the purity loss, everywhere else.

    Alternates constructed fixed-point pairs with random disturbing pairs,
    and finishes with an interpolation sweep toward the iterated fixed point
    checking that the gain decreases monotonically to zero with the
    disturbance.
    """
    _require_dim(dim)
    col = _Collector()
    last_disturbing = None
    for i in range(n_trials):
        rng = _child_rng(seed, i)
        if i % 2 == 0:
            ch, rho = _commuting_pair(dim, rng)
            ds = _entropy_gain(ch, rho)
            dist = hs_norm(act(ch, rho) - as_matrix(rho))
            violation = max(abs(ds), dist)
            col.record(violation, EQUALITY_TOL, lambda: {
                "check": "equivalence_fixed", "dim": dim,
                "channel": channel_to_json(ch), "state": matrix_to_json(rho),
                "violation": violation})
        else:
            ch, rho = _disturbing_pair(dim, rng)
            last_disturbing = (ch, rho)
            ds = _entropy_gain(ch, rho)
            floor = _disturbing_floor(ch, rho)
            violation = max(0.0, floor - ds)
            col.record(violation, 0.0, lambda: {
                "check": "equivalence_disturbing", "dim": dim,
                "channel": channel_to_json(ch), "state": matrix_to_json(rho),
                "violation": violation})
    if last_disturbing is not None:
        ch, rho = last_disturbing
        violation = _sweep_violation(ch, rho)
        col.record(violation, 0.0, lambda: {
            "check": "equivalence_sweep", "dim": dim,
            "channel": channel_to_json(ch), "state": matrix_to_json(rho),
            "violation": violation})
    return col.report()


def _sweep_violation(ch: KrausChannel, rho) -> float:
    """Violation of 'entropy gain shrinks monotonically to zero with the
    disturbance' along the straight line to the iterated fixed point."""
    fixed = _iterated_fixed_point(ch, rho)
    raw = as_matrix(rho)
    gains = []
    dists = []
    for t in (1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125):
        state = validate_density((1.0 - t) * fixed + t * raw)
        gains.append(_entropy_gain(ch, state))
        dists.append(hs_norm(act(ch, state) - as_matrix(state)))
    violation = 0.0
    for a, b in zip(gains, gains[1:]):
        violation = max(violation, b - a - 1e-12)
    for a, b in zip(dists, dists[1:]):
        violation = max(violation, b - a - 1e-12)
    # five halvings of the disturbance must crush the gain (it scales at
    # least quadratically near the fixed point)
    violation = max(violation, gains[-1] - gains[0] / 50.0)
    return violation


# ---------------------------------------------------------------------------
# the inner-product sandwich ||M(X)||^2 <= (X|M(X)) <= ||X||^2

def _sandwich_violation(ch: KrausChannel, x: np.ndarray) -> float:
    out = act(ch, x)
    inner = hs_inner(x, out)
    scale = max(1.0, hs_norm(x) ** 2)
    violation = abs(inner.imag)
    violation = max(violation, -inner.real)
    violation = max(violation, hs_norm(out) ** 2 - inner.real)
    violation = max(violation, inner.real - hs_norm(x) ** 2)
    # saturation of the upper bound forces a fixed point
    if inner.real >= hs_norm(x) ** 2 - 1e-12 * scale:
        violation = max(violation, hs_norm(out - x) - PIVOT_DISTANCE_TOL)
    return violation


def verify_half_contractivity(dim: int, n_trials: int, seed: int) -> TrialReport:
    """Both inequalities of the inner-product sandwich, their saturation at
    fixed points, and reality and nonnegativity of (X|M(X))."""
    _require_dim(dim)
    col = _Collector()
    for i in range(n_trials):
        rng = _child_rng(seed, i)
        if i % 4 == 3:
            # constructed fixed point: X commutes with every Kraus operator,
            # so both inequalities must saturate
            basis = sample_random_unitary(dim, rng)
            ops = [np.outer(basis[:, j], basis[:, j].conj()) for j in range(dim)]
            ch = bare_measurement(ops)
            diag = rng.normal(size=dim) + 1j * rng.normal(size=dim)
            x = basis @ np.diag(diag) @ basis.conj().T
            inner = hs_inner(x, act(ch, x))
            scale = max(1.0, hs_norm(x) ** 2)
            violation = max(abs(inner.real - hs_norm(x) ** 2),
                            abs(inner.real - hs_norm(act(ch, x)) ** 2),
                            abs(inner.imag))
            tol = LEMMA_TOL * scale
            mode = "saturating"
        else:
            ch = sample_random_bare_measurement(dim, int(rng.integers(1, dim + 2)), rng)
            x = sample_random_operator(dim, rng, hermitian=bool(rng.integers(0, 2)))
            violation = _sandwich_violation(ch, x)
            tol = LEMMA_TOL * max(1.0, hs_norm(x) ** 2)
            mode = "random"
        col.record(violation, tol, lambda: {
            "check": "half_contractivity", "mode": mode, "dim": dim,
            "channel": channel_to_json(ch), "x": matrix_to_json(x),
            "violation": violation})
    return col.report()


# ---------------------------------------------------------------------------
# commutator identity for Hermitian Kraus sets

def commutator_identity_residual(ch: KrausChannel, x) -> float:
    """|  ||X||^2 - (X|M(X))  -  (1/2) sum_s ||[X, A_s]||^2  | for a channel
    with Hermitian Kraus operators A_s; raises NonHermitianKraus otherwise."""
    xm = as_matrix(x)
    for i, a in enumerate(ch.kraus_ops):
        am = as_matrix(a)
        if np.linalg.norm(am - am.conj().T) > HERMITICITY_TOL * max(1.0, np.linalg.norm(am)):
            raise NonHermitianKraus(f"Kraus operator {i} is not Hermitian")
    lhs = hs_norm(xm) ** 2 - hs_inner(xm, act(ch, xm)).real
    rhs = 0.0
    for a in ch.kraus_ops:
        am = as_matrix(a)
        comm = xm @ am - am @ xm
        rhs += 0.5 * hs_norm(comm) ** 2
    return abs(lhs - rhs)


def verify_commutator_identity(dim: int, n_trials: int, seed: int) -> TrialReport:
    """The gap of the upper sandwich bound equals half the summed squared
    commutators with the (Hermitian) Kraus operators."""
    _require_dim(dim)
    col = _Collector()
    for i in range(n_trials):
        rng = _child_rng(seed, i)
        ch = sample_random_bare_measurement(dim, int(rng.integers(1, dim + 2)), rng)
        x = sample_random_operator(dim, rng, hermitian=bool(rng.integers(0, 2)))
        violation = commutator_identity_residual(ch, x)
        col.record(violation, IDENTITY_TOL * max(1.0, hs_norm(x) ** 2), lambda: {
            "check": "commutator", "dim": dim,
            "channel": channel_to_json(ch), "x": matrix_to_json(x),
            "violation": violation})
    return col.report()


# ---------------------------------------------------------------------------
# majorization step

def _majorization_violation(ch: KrausChannel, rho) -> float:
    state = validate_density(rho)
    out = apply(ch, state)
    w_in = np.sort(np.linalg.eigvalsh(as_matrix(state)))[::-1]
    w_out = np.sort(np.linalg.eigvalsh(as_matrix(out)))[::-1]
    shortfall = float(np.max(np.cumsum(w_out) - np.cumsum(w_in)))
    violation = max(0.0, shortfall)
    if np.max(np.abs(w_in - w_out)) <= 1e-9:
        # equal spectra pivot: the state must then be a fixed point
        violation = max(violation, hs_norm(as_matrix(out) - as_matrix(state))
                        - PIVOT_DISTANCE_TOL)
    return violation


def verify_majorization_step(dim: int, n_trials: int, seed: int) -> TrialReport:
    """Measurement output is majorized by the input; equal spectra happen
    only at fixed points."""
    _require_dim(dim)
    col = _Collector()
    for i in range(n_trials):
        rng = _child_rng(seed, i)
        if i % 4 == 3:
            ch, rho = _commuting_pair(dim, rng)
        else:
            ch = sample_random_bare_measurement(dim, int(rng.integers(1, dim + 2)), rng)
            rho = sample_random_density(dim, rng, rank=int(rng.integers(1, dim + 1)))
        violation = _majorization_violation(ch, rho)
        col.record(violation, MAJORIZATION_TOL, lambda: {
            "check": "majorization", "dim": dim,
            "channel": channel_to_json(ch), "state": matrix_to_json(rho),
            "violation": violation})
    return col.report()


# ---------------------------------------------------------------------------
# steady-regime no-go

def verify_no_go(cycle: EngineCycle, rho0, epsilon: float = 1e-6,
                 n_max: int = 500, force: bool = False) -> TrialReport:
    """In the steady regime of a pure-measurement cycle every step must be
    energetically silent, entropy-preserving and nondisturbing, and the
    accumulated work must vanish at every recurrence.

    One trial per step (worst of the three step checks) plus one trial per
    recurrence (accumulated work) and one for the accumulated entropy.
    Cycles containing feedback or thermal steps are rejected with
    NotPureMeasurementCycle unless ``force`` is set, in which case the
    report documents how the claim fails.
    """
    if not force:
        for i, step in enumerate(cycle.steps):
            if step.measurement.kind != ChannelKind.BARE_MEASUREMENT:
                raise NotPureMeasurementCycle(
                    f"step {i} has kind {step.measurement.kind.value}")
    peripheral = peripheral_projector(cycle_superoperator(cycle))
    rho_phi = project_peripheral(peripheral, validate_density(rho0))
    cycle_json = cycle_to_json(cycle)
    rho_phi_json = matrix_to_json(rho_phi)

    col = _Collector()
    state = rho_phi
    w_total = 0.0
    ds_total = 0.0
    for n in range(1, n_max + 1):
        for k, step in enumerate(cycle.steps, start=1):
            h_pre = cycle.pre_hamiltonian(k)
            mid, after = _step_states(step, state)
            e_ms = energy_expectation(h_pre, mid) - energy_expectation(h_pre, state)
            ds_ms = von_neumann_entropy(mid) - von_neumann_entropy(state)
            disturb = hs_norm(as_matrix(mid) - as_matrix(state))
            w_total += (energy_expectation(step.post_hamiltonian, after)
                        - energy_expectation(h_pre, mid))
            ds_total += ds_ms
            violation = max(abs(e_ms), abs(ds_ms), disturb)
            col.record(violation, NOGO_TOL, lambda: {
                "check": "no_go_step", "dim": cycle.dim, "n": n, "k": k,
                "channel": channel_to_json(step.measurement),
                "hamiltonian": matrix_to_json(h_pre),
                "state": matrix_to_json(state), "violation": violation})
            state = after
        dist = hs_norm(as_matrix(state) - as_matrix(rho_phi))
        if dist < epsilon:
            w_violation = abs(w_total)
            col.record(w_violation, NOGO_TOL, lambda: {
                "check": "no_go_w_total", "dim": cycle.dim, "n": n,
                "cycle": cycle_json, "state": rho_phi_json,
                "violation": w_violation})
            ds_violation = abs(ds_total)
            col.record(ds_violation, NOGO_ENTROPY_TOL, lambda: {
                "check": "no_go_ds_total", "dim": cycle.dim, "n": n,
                "cycle": cycle_json, "state": rho_phi_json,
                "violation": ds_violation})
    return col.report()


# ---------------------------------------------------------------------------
# suite dispatch and witness re-evaluation

def run_suite(name: str, dim: int, n_trials: int, seed: int) -> TrialReport:
    """Run one named suite; ``no_go`` runs that many random pure cycles."""
    if name == "monotonicity":
        return verify_monotonicity(dim, n_trials, seed)
    if name == "equivalence":
        return verify_nondisturbance_equivalence(dim, n_trials, seed)
    if name == "half_contractivity":
        return verify_half_contractivity(dim, n_trials, seed)
    if name == "commutator":
        return verify_commutator_identity(dim, n_trials, seed)
    if name == "majorization":
        return verify_majorization_step(dim, n_trials, seed)
    if name == "no_go":
        _require_dim(dim)
        col = _Collector()
        for i in range(n_trials):
            rng = _child_rng(seed, i)
            cycle, rho0 = sample_random_bare_cycle(dim, 1 + i % 3, rng)
            col.merge(verify_no_go(cycle, rho0, n_max=200))
        return col.report()
    raise ParamOutOfRange(f"unknown suite {name!r}; choose from {SUITES}")


def reevaluate_witness(witness: dict) -> float:
    """Recompute a witness's violation from its serialized instance."""
    check = witness["check"]
    dim = int(witness["dim"])
    if check in ("monotonicity", "equivalence_fixed", "equivalence_disturbing",
                 "equivalence_sweep", "majorization"):
        ch = channel_from_json(witness["channel"], dim)
        rho = matrix_from_json(witness["state"], dim)
        if check == "monotonicity":
            return max(0.0, -_entropy_gain(ch, rho))
        if check == "equivalence_fixed":
            return max(abs(_entropy_gain(ch, rho)),
                       hs_norm(act(ch, rho) - as_matrix(rho)))
        if check == "equivalence_disturbing":
            return max(0.0, _disturbing_floor(ch, rho) - _entropy_gain(ch, rho))
        if check == "equivalence_sweep":
            return _sweep_violation(ch, rho)
        return _majorization_violation(ch, rho)
    if check == "half_contractivity":
        ch = channel_from_json(witness["channel"], dim)
        x = matrix_from_json(witness["x"], dim)
        if witness.get("mode") == "saturating":
            inner = hs_inner(x, act(ch, x))
            return max(abs(inner.real - hs_norm(x) ** 2),
                       abs(inner.real - hs_norm(act(ch, x)) ** 2),
                       abs(inner.imag))
        return _sandwich_violation(ch, x)
    if check == "commutator":
        ch = channel_from_json(witness["channel"], dim)
        x = matrix_from_json(witness["x"], dim)
        return commutator_identity_residual(ch, x)
    if check == "no_go_step":
        ch = channel_from_json(witness["channel"], dim)
        h = matrix_from_json(witness["hamiltonian"], dim)
        state = validate_density(matrix_from_json(witness["state"], dim))
        mid = apply(_bare_stage(ch), state)
        e_ms = energy_expectation(h, mid) - energy_expectation(h, state)
        ds_ms = von_neumann_entropy(mid) - von_neumann_entropy(state)
        disturb = hs_norm(as_matrix(mid) - as_matrix(state))
        return max(abs(e_ms), abs(ds_ms), disturb)
    if check in ("no_go_w_total", "no_go_ds_total"):
        cycle = cycle_from_json(witness["cycle"])
        state = validate_density(matrix_from_json(witness["state"], dim))
        w_total = 0.0
        ds_total = 0.0
        for _ in range(int(witness["n"])):
            for k, step in enumerate(cycle.steps, start=1):
                h_pre = cycle.pre_hamiltonian(k)
                mid, after = _step_states(step, state)
                w_total += (energy_expectation(step.post_hamiltonian, after)
                            - energy_expectation(h_pre, mid))
                ds_total += von_neumann_entropy(mid) - von_neumann_entropy(state)
                state = after
        return abs(w_total) if check == "no_go_w_total" else abs(ds_total)
    raise ParamOutOfRange(f"unknown witness check {check!r}")
