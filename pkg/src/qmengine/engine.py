"""Engine cycles and their thermodynamic ledger.

A cycle is an ordered list of steps, each a measurement-like channel
followed by a drive unitary that moves the Hamiltonian from its pre-step
value to its post-step value.  The last step must return the Hamiltonian to
the base one.  ``run`` produces per-step records of work, injected energy
and entropy change; ``first_law_report`` accumulates those along recurrence
times of the steady (peripheral-projected) state; ``entropy_budget`` breaks
a single composite step into the entropy contributions of its parts.

Sign convention: ``work`` is work done ON the working substance, so
extracted work is negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimMismatch,
    NoRecurrenceFound,
    NotHermitian,
    NotUnitary,
    ParamOutOfRange,
)
from .channels import (
    ChannelKind,
    KrausChannel,
    Superoperator,
    apply,
    bare_measurement,
    compose,
    feedback_from_measurement,
    kraus_to_superoperator,
    partial_thermalization,
    polar_split,
    sample_random_bare_measurement,
    sample_random_density,
    sample_random_operator,
    sample_random_unitary,
    unitary_channel,
    unvec,
    vec,
)
from .operators import (
    DensityOperator,
    as_matrix,
    energy_expectation,
    gibbs_state,
    hermitian_part,
    validate_density,
    validate_hermitian,
    von_neumann_entropy,
)
from .spectral import (
    PeripheralDecomposition,
    RecurrenceRecord,
    peripheral_projector,
    project_peripheral,
)
from .tolerances import HERMITICITY_TOL, PROBABILITY_FLOOR, RECONSTRUCTION_TOL

_MEASUREMENT_KINDS = (
    ChannelKind.BARE_MEASUREMENT,
    ChannelKind.GENERAL_MEASUREMENT,
    ChannelKind.FEEDBACK,
    ChannelKind.THERMAL,
)

_SPLIT_KINDS = (ChannelKind.GENERAL_MEASUREMENT, ChannelKind.FEEDBACK)


@dataclass(frozen=True, eq=False)
class EngineStep:
    """One (channel, drive) pair; the drive ends at ``post_hamiltonian``."""

    measurement: KrausChannel
    unitary: np.ndarray
    post_hamiltonian: np.ndarray


@dataclass(frozen=True, eq=False)
class EngineCycle:
    """K steps closing back on the base Hamiltonian."""

    dim: int
    base_hamiltonian: np.ndarray
    steps: tuple

    def __post_init__(self):
        h0 = validate_hermitian(self.base_hamiltonian)
        if h0.dim != self.dim:
            raise DimMismatch("base Hamiltonian dimension mismatch")
        if not self.steps:
            raise ParamOutOfRange("cycle needs at least one step")
        for i, step in enumerate(self.steps):
            if step.measurement.dim != self.dim:
                raise DimMismatch(f"step {i} channel dimension mismatch")
            if step.measurement.kind not in _MEASUREMENT_KINDS:
                raise ParamOutOfRange(
                    f"step {i} channel kind {step.measurement.kind} is not a "
                    "measurement-like channel")
            u = as_matrix(step.unitary)
            if u.shape != (self.dim, self.dim):
                raise DimMismatch(f"step {i} unitary shape {u.shape}")
            dev = float(np.linalg.norm(u.conj().T @ u - np.eye(self.dim)))
            if dev > RECONSTRUCTION_TOL:
                raise NotUnitary(f"step {i} drive deviates from unitarity by {dev:.3e}")
            validate_hermitian(step.post_hamiltonian)
        closure = float(np.linalg.norm(
            as_matrix(self.steps[-1].post_hamiltonian) - as_matrix(self.base_hamiltonian)))
        if closure > HERMITICITY_TOL * max(1.0, float(np.linalg.norm(as_matrix(self.base_hamiltonian)))):
            raise NotHermitian(
                f"final Hamiltonian differs from the base one by {closure:.3e}; "
                "the cycle must close")

    def pre_hamiltonian(self, k: int) -> np.ndarray:
        """Hamiltonian in force before step k (1-based)."""
        if k == 1:
            return as_matrix(self.base_hamiltonian)
        return as_matrix(self.steps[k - 2].post_hamiltonian)


def build_cycle(base_hamiltonian, steps) -> EngineCycle:
    h = as_matrix(base_hamiltonian)
    return EngineCycle(dim=h.shape[0], base_hamiltonian=h,
                       steps=tuple(steps))


def cycle_superoperator(cycle: EngineCycle) -> Superoperator:
    """Superoperator of one full cycle (step 1 acts first)."""
    chans = []
    for step in reversed(cycle.steps):
        chans.append(unitary_channel(step.unitary))
        chans.append(step.measurement)
    return compose(chans)


# ---------------------------------------------------------------------------
# per-step records

@dataclass(frozen=True, eq=False)
class StepRecord:
    """Thermodynamic bookkeeping for step k of cycle n.

    ``state_mid`` is the output of the measurement backaction alone; for
    feedback (and general-measurement) channels that is the positive polar
    part, with the outcome-conditioned unitaries counted as part of the work
    stroke together with the drive.
    """

    n: int
    k: int
    state_before: DensityOperator
    state_mid: DensityOperator
    state_after: DensityOperator
    work: float
    energy_injected: float
    entropy_disturbance: float
    s_before: float
    s_mid: float
    s_after: float
    e_before: float
    e_mid: float
    e_after: float


@dataclass(frozen=True, eq=False)
class CycleLedger:
    """All step records of a run, in execution order."""

    cycle: EngineCycle
    initial_state: DensityOperator
    final_state: DensityOperator
    records: tuple

    CSV_COLUMNS = ("n", "k", "W", "E_ms", "dS_ms", "S_before", "S_mid",
                   "S_after", "E_before", "E_mid", "E_after")

    def csv_rows(self):
        for r in self.records:
            yield (r.n, r.k, r.work, r.energy_injected, r.entropy_disturbance,
                   r.s_before, r.s_mid, r.s_after, r.e_before, r.e_mid, r.e_after)


def _bare_stage(ch: KrausChannel) -> KrausChannel:
    if ch.kind in _SPLIT_KINDS:
        bare, _ = polar_split(ch)
        return bare
    return ch


def _step_states(step: EngineStep, state: DensityOperator):
    """(mid, after) states of one step; see StepRecord for the split."""
    mid = apply(_bare_stage(step.measurement), state)
    if step.measurement.kind in _SPLIT_KINDS:
        full = apply(step.measurement, state)
    else:
        full = mid
    u = as_matrix(step.unitary)
    after = validate_density(u @ as_matrix(full) @ u.conj().T)
    return mid, after


def run(cycle: EngineCycle, rho0, n_cycles: int) -> CycleLedger:
    """Execute ``n_cycles`` full cycles from ``rho0`` and record every step."""
    if n_cycles < 1:
        raise ParamOutOfRange(f"n_cycles must be >= 1, got {n_cycles}")
    state = validate_density(rho0)
    if state.dim != cycle.dim:
        raise DimMismatch("initial state dimension mismatch")
    records = []
    initial = state
    for n in range(1, n_cycles + 1):
        for k, step in enumerate(cycle.steps, start=1):
            h_pre = cycle.pre_hamiltonian(k)
            h_post = as_matrix(step.post_hamiltonian)
            mid, after = _step_states(step, state)
            e_before = energy_expectation(h_pre, state)
            e_mid = energy_expectation(h_pre, mid)
            e_after = energy_expectation(h_post, after)
            s_before = von_neumann_entropy(state)
            s_mid = von_neumann_entropy(mid)
            s_after = von_neumann_entropy(after)
            records.append(StepRecord(
                n=n, k=k, state_before=state, state_mid=mid, state_after=after,
                work=e_after - e_mid, energy_injected=e_mid - e_before,
                entropy_disturbance=s_mid - s_before,
                s_before=s_before, s_mid=s_mid, s_after=s_after,
                e_before=e_before, e_mid=e_mid, e_after=e_after))
            state = after
    return CycleLedger(cycle=cycle, initial_state=initial, final_state=state,
                       records=tuple(records))


# ---------------------------------------------------------------------------
# steady regime

@dataclass(frozen=True, eq=False)
class FirstLawReport:
    """Running totals along the recurrence subsequence of the steady state.

    ``w_totals[i]`` etc. are sums over all steps of the first
    ``recurrence.times[i]`` cycles.  ``first_law_residuals`` is
    |W_total + E_ms_total|, which equals the net energy change and is
    bounded by ||H||_op times the trace-norm distance of the recurrent
    state from the initial one.  The value at the last recurrence stands in
    for the infinite-time limit; the trend across entries is the checkable
    surrogate for convergence.
    """

    rho_phi: DensityOperator
    recurrence: RecurrenceRecord
    w_totals: np.ndarray
    e_ms_totals: np.ndarray
    ds_totals: np.ndarray
    energy_changes: np.ndarray
    first_law_residuals: np.ndarray
    trace_norm_distances: np.ndarray
    energy_bounds: np.ndarray
    max_abs_energy_injected: float
    max_measurement_disturbance: float
    w_total_limit: float
    e_ms_total_limit: float
    ds_total_limit: float


def _step_superoperators(cycle: EngineCycle):
    """Per-step (bare stage, full channel, drive) superoperator matrices and
    Hamiltonian covectors for the fast steady-regime scan."""
    stages = []
    for k, step in enumerate(cycle.steps, start=1):
        bare_sup = kraus_to_superoperator(_bare_stage(step.measurement).kraus_ops)
        full_sup = (kraus_to_superoperator(step.measurement.kraus_ops)
                    if step.measurement.kind in _SPLIT_KINDS else bare_sup)
        u = as_matrix(step.unitary)
        drive = np.kron(u.conj(), u)
        h_pre = vec(cycle.pre_hamiltonian(k)).conj()
        h_post = vec(as_matrix(step.post_hamiltonian)).conj()
        stages.append((bare_sup, full_sup, drive, h_pre, h_post))
    return stages


def first_law_report(cycle: EngineCycle, rho0, epsilon: float = 1e-6,
                     n_max: int = 10_000,
                     peripheral: PeripheralDecomposition | None = None) -> FirstLawReport:
    """Project ``rho0`` into the steady regime and accumulate the ledger
    totals at every recurrence time found within ``n_max`` cycles.

    Raises NoRecurrenceFound when the projected state never returns below
    ``epsilon``.
    """
    if peripheral is None:
        peripheral = peripheral_projector(cycle_superoperator(cycle))
    rho_phi = project_peripheral(peripheral, validate_density(rho0))
    stages = _step_superoperators(cycle)

    h_base = as_matrix(cycle.base_hamiltonian)
    h_op_norm = float(np.linalg.norm(np.linalg.eigvalsh(h_base), ord=np.inf))
    v0 = vec(rho_phi).astype(complex)
    s_phi = von_neumann_entropy(rho_phi)
    e_phi = float((vec(h_base).conj() @ v0).real)

    v = v0.copy()
    w_sum = 0.0
    e_ms_sum = 0.0
    max_e_ms = 0.0
    max_disturb = 0.0
    times: list[int] = []
    dists: list[float] = []
    w_tot: list[float] = []
    e_tot: list[float] = []
    ds_tot: list[float] = []
    de: list[float] = []
    resid: list[float] = []
    tr_dist: list[float] = []
    best, best_n = np.inf, 0
    for n in range(1, n_max + 1):
        for bare_sup, full_sup, drive, h_pre, h_post in stages:
            v_mid = bare_sup @ v
            e_before = float((h_pre @ v).real)
            e_mid = float((h_pre @ v_mid).real)
            disturb = float(np.linalg.norm(v_mid - v))
            v_full = v_mid if full_sup is bare_sup else full_sup @ v
            v_after = drive @ v_full
            e_after = float((h_post @ v_after).real)
            w_sum += e_after - e_mid
            e_ms_sum += e_mid - e_before
            max_e_ms = max(max_e_ms, abs(e_mid - e_before))
            max_disturb = max(max_disturb, disturb)
            v = v_after
        dist = float(np.linalg.norm(v - v0))
        if dist < best:
            best, best_n = dist, n
        if dist < epsilon:
            times.append(n)
            dists.append(dist)
            w_tot.append(w_sum)
            e_tot.append(e_ms_sum)
            delta = unvec(v - v0)
            state_n = hermitian_part(unvec(v))
            ds_tot.append(von_neumann_entropy(state_n) - s_phi)
            de.append(float((vec(h_base).conj() @ v).real) - e_phi)
            resid.append(abs(w_sum + e_ms_sum))
            tr_dist.append(float(np.abs(np.linalg.eigvalsh(hermitian_part(delta))).sum()))
    if not times:
        raise NoRecurrenceFound(best, best_n)
    rec = RecurrenceRecord(epsilon=float(epsilon), n_max=int(n_max),
                           times=np.asarray(times, dtype=np.int64),
                           distances=np.asarray(dists))
    tr = np.asarray(tr_dist)
    return FirstLawReport(
        rho_phi=rho_phi, recurrence=rec,
        w_totals=np.asarray(w_tot), e_ms_totals=np.asarray(e_tot),
        ds_totals=np.asarray(ds_tot), energy_changes=np.asarray(de),
        first_law_residuals=np.asarray(resid),
        trace_norm_distances=tr, energy_bounds=h_op_norm * tr,
        max_abs_energy_injected=max_e_ms,
        max_measurement_disturbance=max_disturb,
        w_total_limit=w_tot[-1], e_ms_total_limit=e_tot[-1],
        ds_total_limit=ds_tot[-1])


# ---------------------------------------------------------------------------
# entropy budgets

@dataclass(frozen=True)
class EntropyBudget:
    """Entropy change of one composite step, split by mechanism.

    Fields are None when the corresponding stage is absent.  Residuals are
    the slack of the lower bounds: feedback entropy change plus information
    gain, and thermal entropy change plus beta times the dissipated heat;
    both are nonnegative up to roundoff.
    """

    ds_unitary: float
    ds_measurement: float | None = None
    ds_feedback: float | None = None
    ds_thermal: float | None = None
    chi_ms: float | None = None
    q_out: float | None = None
    beta: float | None = None
    feedback_residual: float | None = None
    thermal_residual: float | None = None


def information_gain(bare_ops, rho) -> float:
    """Ensemble entropy minus average branch entropy of a bare measurement.

    Outcome probabilities below the probability floor contribute nothing
    (the 0 log 0 convention).
    """
    r = as_matrix(rho)
    branches = [as_matrix(m) @ r @ as_matrix(m).conj().T for m in bare_ops]
    probs = [float(np.trace(b).real) for b in branches]
    total = validate_density(sum(branches))
    avg = 0.0
    for b, p in zip(branches, probs):
        if p < PROBABILITY_FLOOR:
            continue
        avg += p * von_neumann_entropy(validate_density(b / p))
    return von_neumann_entropy(total) - avg


def entropy_of_disturbance(ch: KrausChannel, rho) -> float:
    """Entropy gained by the nonselective measurement backaction."""
    state = validate_density(rho)
    return von_neumann_entropy(apply(_bare_stage(ch), state)) - von_neumann_entropy(state)


def entropy_budget(step: EngineStep, rho) -> EntropyBudget:
    """Entropy accounting of one step evaluated on ``rho``."""
    state = validate_density(rho)
    if state.dim != step.measurement.dim:
        raise DimMismatch("state dimension does not match the step")
    ch = step.measurement
    s_in = von_neumann_entropy(state)

    kwargs: dict = {}
    if ch.kind == ChannelKind.THERMAL:
        out = apply(ch, state)
        ds_th = von_neumann_entropy(out) - s_in
        h = as_matrix(ch.hamiltonian)
        q_out = energy_expectation(h, state) - energy_expectation(h, out)
        kwargs.update(ds_thermal=ds_th, q_out=q_out, beta=ch.beta,
                      thermal_residual=ds_th + ch.beta * q_out)
    else:
        bare = _bare_stage(ch)
        mid = apply(bare, state)
        ds_ms = von_neumann_entropy(mid) - s_in
        chi = information_gain(bare.kraus_ops, state)
        kwargs.update(ds_measurement=ds_ms, chi_ms=chi)
        if ch.kind in _SPLIT_KINDS:
            out = apply(ch, state)
            ds_fb = von_neumann_entropy(out) - von_neumann_entropy(mid)
            kwargs.update(ds_feedback=ds_fb, feedback_residual=ds_fb + chi)
        else:
            out = mid
    u = as_matrix(step.unitary)
    driven = validate_density(u @ as_matrix(out) @ u.conj().T)
    ds_unitary = von_neumann_entropy(driven) - von_neumann_entropy(out)
    return EntropyBudget(ds_unitary=ds_unitary, **kwargs)


# ---------------------------------------------------------------------------
# reference engines

SCENARIOS = ("fig1a_feedback", "fig1b_thermal", "fig1c_no_feedback",
             "fig1d_two_measurements")

_FIG1B_BETA = 2.0
_FIG1B_THETA = math.pi / 3.0


def _qubit_pieces():
    sx = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    sz = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
    h = sz / 2.0
    p_plus = (np.eye(2) + sx) / 2.0
    p_minus = (np.eye(2) - sx) / 2.0
    # |+> -> ground and |-> -> ground, completed unitarily
    u_plus = np.array([[1.0, -1.0], [1.0, 1.0]], dtype=complex) / np.sqrt(2.0)
    u_minus = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)
    return sx, sz, h, p_plus, p_minus, u_plus, u_minus


def scenario(name: str) -> EngineCycle:
    """Documented qubit reference engines.

    fig1a_feedback: measurement along x with outcome-conditioned unitaries
    steering both outcomes to the ground state (folded into one feedback
    channel); extracts work every cycle at its fixed point.

    fig1b_thermal: tilted-basis measurement, an outcome-independent
    extraction unitary, then full thermal contact; extracts work every cycle
    with the entropy dumped into the reservoir.

    fig1c_no_feedback: scenario (a) with the conditioned unitaries replaced
    by one outcome-independent unitary; extracts nothing in the steady
    regime.

    fig1d_two_measurements: two distinct bare measurements with drive
    unitaries and no thermal contact; extracts nothing in the steady regime.
    """
    sx, sz, h, p_plus, p_minus, u_plus, u_minus = _qubit_pieces()
    ident = np.eye(2, dtype=complex)
    if name == "fig1a_feedback":
        channel = feedback_from_measurement([p_plus, p_minus], [u_plus, u_minus])
        return build_cycle(h, [EngineStep(channel, ident, h)])
    if name == "fig1b_thermal":
        c, s = math.cos(_FIG1B_THETA / 2.0), math.sin(_FIG1B_THETA / 2.0)
        chi_plus = np.array([c, s], dtype=complex)
        chi_minus = np.array([-s, c], dtype=complex)
        measure = bare_measurement([np.outer(chi_plus, chi_plus.conj()),
                                    np.outer(chi_minus, chi_minus.conj())])
        extract = np.array([[c, s], [-s, c]], dtype=complex)
        thermal = partial_thermalization(h, _FIG1B_BETA, 1.0)
        return build_cycle(h, [EngineStep(measure, extract, h),
                               EngineStep(thermal, ident, h)])
    if name == "fig1c_no_feedback":
        measure = bare_measurement([p_plus, p_minus])
        return build_cycle(h, [EngineStep(measure, u_plus, h)])
    if name == "fig1d_two_measurements":
        measure_x = bare_measurement([p_plus, p_minus])
        measure_z = bare_measurement([np.diag([1.0, 0.0]).astype(complex),
                                      np.diag([0.0, 1.0]).astype(complex)])
        alpha = 0.4
        r_y = np.array([[math.cos(alpha / 2.0), -math.sin(alpha / 2.0)],
                        [math.sin(alpha / 2.0), math.cos(alpha / 2.0)]], dtype=complex)
        return build_cycle(h, [EngineStep(measure_x, r_y, sx / 2.0),
                               EngineStep(measure_z, r_y.conj().T, h)])
    raise ParamOutOfRange(f"unknown scenario {name!r}; choose from {SCENARIOS}")


def scenario_initial_state(name: str) -> DensityOperator:
    """Initial state used in the documented runs of each scenario."""
    _, _, h, *_ = _qubit_pieces()
    if name == "fig1b_thermal":
        return gibbs_state(h, _FIG1B_BETA)
    if name in SCENARIOS:
        return validate_density(np.diag([0.0, 1.0]))
    raise ParamOutOfRange(f"unknown scenario {name!r}; choose from {SCENARIOS}")


# ---------------------------------------------------------------------------
# random cycles for trial suites

def sample_random_bare_cycle(dim: int, n_steps: int, seed) -> tuple[EngineCycle, DensityOperator]:
    """Random pure-measurement cycle plus a random initial state.

    Mixes smooth random measurements with projective ones, and drive
    unitaries among identity, Haar-random, and measurement-basis
    permutations, so the sampled cycles cover fixed points, limit cycles and
    strictly contractive steady regimes.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    base_h = sample_random_operator(dim, rng, hermitian=True)
    steps = []
    for k in range(n_steps):
        if rng.random() < 0.5:
            basis = sample_random_unitary(dim, rng)
            ops = [np.outer(basis[:, j], basis[:, j].conj()) for j in range(dim)]
            measure = bare_measurement(ops)
            style = rng.random()
            if style < 1.0 / 3.0:
                u = np.eye(dim, dtype=complex)
            elif style < 2.0 / 3.0:
                perm = rng.permutation(dim)
                u = basis[:, perm] @ basis.conj().T
            else:
                u = sample_random_unitary(dim, rng)
        else:
            # at least two outcomes: a single-outcome measurement is the
            # identity channel and would make the step purely unitary, whose
            # quasi-periodic orbits defeat recurrence scans at tight epsilon
            measure = sample_random_bare_measurement(dim, int(rng.integers(2, dim + 1)), rng)
            u = (np.eye(dim, dtype=complex) if rng.random() < 1.0 / 3.0
                 else sample_random_unitary(dim, rng))
        post_h = (base_h if k == n_steps - 1
                  else sample_random_operator(dim, rng, hermitian=True))
        steps.append(EngineStep(measure, u, post_h))
    rho0 = sample_random_density(dim, rng)
    return build_cycle(base_h, steps), rho0
