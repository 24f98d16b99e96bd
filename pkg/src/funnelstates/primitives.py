"""Primitive observables: unitary operations and what they let one measure.

A primitive observable is a unitary U together with its action
``omega_A -> omega_{UA}`` on excitation states; its measurable content is the
survival probability ``omega_A . omega_{UA} = |omega_A(U)|^2``.  Proper
isometries do not exist in finite dimension (V*V = 1 forces unitarity), so
partial isometries with matching initial/range ranks stand in for them
throughout; operator limits become finite schedules whose final step
satisfies the target identity exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numkernel as nk
from .errors import ContractError, TuningFailureError
from .excitations import ExcitationState, make_excitation
from .funnel import GenericState, LocalOperator, embed_matrix

UNITARITY_TOL = 1e-12
PROJECTION_TOL = 1e-10


def _projection_residual(p: np.ndarray) -> float:
    return max(nk.frob(p - nk.dagger(p)), nk.frob(p @ p - p))


def require_projection(p, tol: float = PROJECTION_TOL) -> np.ndarray:
    p = nk.as_cmatrix(p)
    res = _projection_residual(p)
    if res > tol:
        raise ContractError(f"matrix is not a projection (residual {res:.3e})")
    return p


@dataclass(frozen=True)
class PrimitiveObservable:
    """A unitary at a tower level, understood as the operation Ad U."""

    level: int
    unitary: np.ndarray

    def __post_init__(self):
        u = nk.as_cmatrix(self.unitary)
        eye = np.eye(u.shape[0], dtype=complex)
        res = max(nk.frob(nk.dagger(u) @ u - eye), nk.frob(u @ nk.dagger(u) - eye))
        if res > UNITARITY_TOL:
            raise ContractError(f"matrix is not unitary (residual {res:.3e})")
        object.__setattr__(self, "unitary", u)


@dataclass(frozen=True)
class PartialIsometry:
    """V with initial projection F = V*V and range projection E = VV*."""

    level: int
    matrix: np.ndarray
    initial: np.ndarray = field(default=None)
    range_projection: np.ndarray = field(default=None)

    def __post_init__(self):
        v = nk.as_cmatrix(self.matrix)
        f = nk.dagger(v) @ v
        e = v @ nk.dagger(v)
        for p, name in ((f, "initial"), (e, "range")):
            if _projection_residual(p) > UNITARITY_TOL:
                raise ContractError(f"{name} projection of the candidate is not idempotent")
        if nk.frob(v @ f - v) > UNITARITY_TOL * max(nk.frob(v), 1.0):
            raise ContractError("matrix is not a partial isometry")
        object.__setattr__(self, "matrix", v)
        object.__setattr__(self, "initial", f)
        object.__setattr__(self, "range_projection", e)

    @property
    def rank(self) -> int:
        return int(round(np.real(np.trace(self.initial))))


def hermitian_parts(u: np.ndarray):
    """The commuting Hermitian pair with U = H1 + i H2."""
    h1 = (u + nk.dagger(u)) / 2.0
    h2 = 1j * (nk.dagger(u) - u) / 2.0
    return h1, h2


def apply_observable(obs: PrimitiveObservable, exc: ExcitationState) -> ExcitationState:
    """omega_A -> omega_{UA}."""
    tower = exc.state.tower
    level = max(obs.level, exc.level)
    u = embed_matrix(tower, obs.level, obs.unitary, level)
    a = embed_matrix(tower, exc.level, exc.op.matrix, level)
    return make_excitation(exc.state, LocalOperator(level=level, matrix=u @ a))


def expect_under(exc: ExcitationState, op) -> complex:
    """omega_A(X) = tr(rho_A X) for X at any level."""
    return exc.evaluate(op)


def ut_unitary(e_proj, t: complex, level: int) -> PrimitiveObservable:
    """U_t = E + t (1 - E) for a projection E and a phase t."""
    e = require_projection(e_proj)
    if abs(abs(t) - 1.0) > 1e-12:
        raise ContractError(f"t must be a phase, got |t| = {abs(t)}")
    eye = np.eye(e.shape[0], dtype=complex)
    return PrimitiveObservable(level=level, unitary=e + t * (eye - e))


def ut_probability(e_proj, t: complex, exc: ExcitationState, level=None) -> float:
    """Closed form for omega_A . omega_{U_t A}.

    Equals p^2 + q^2 + 2 Re(t) p q with p = omega_A(E), q = omega_A(1-E).
    """
    level = exc.state.tower.levels if level is None else level
    e = require_projection(e_proj)
    p = float(np.real(exc.evaluate(LocalOperator(level=level, matrix=e))))
    q = 1.0 - p
    return p * p + q * q + 2.0 * float(np.real(t)) * p * q


def range_basis(p: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of the range of a projection."""
    p = require_projection(p, tol=1e-9)
    eig = nk.herm_eig(p)
    cols = [eig.eigenvectors[:, j] for j in range(p.shape[0]) if eig.eigenvalues[j] > 0.5]
    if not cols:
        return np.zeros((p.shape[0], 0), dtype=complex)
    return np.column_stack(cols)


def increasing_projection_schedule(f_proj, steps: int):
    """Nested projections climbing to F along its deterministic range basis."""
    f = require_projection(f_proj)
    basis = range_basis(f)
    r = basis.shape[1]
    steps = max(1, min(steps, r))
    ranks = sorted({int(np.ceil(r * (m + 1) / steps)) for m in range(steps)})
    schedule = []
    for rank in ranks:
        b = basis[:, :rank]
        schedule.append(b @ nk.dagger(b))
    return schedule


def _validate_schedule(v: PartialIsometry, schedule):
    f = v.initial
    prev = None
    mats = []
    for idx, e in enumerate(schedule):
        e = require_projection(e)
        if nk.frob(f @ e - e) > 1e-9:
            raise ContractError(f"schedule step {idx} is not dominated by the initial projection")
        if prev is not None and nk.frob(e @ prev - prev) > 1e-9:
            raise ContractError(f"schedule step {idx} does not dominate step {idx - 1}")
        prev = e
        mats.append(e)
    if not mats or nk.frob(mats[-1] - f) > 1e-9:
        raise ContractError("schedule must terminate at the initial projection")
    return mats


@dataclass
class DilationStep:
    index: int
    unitary: PrimitiveObservable
    on_step_residual: float   # ||(U_m - V) E_m||_F, zero by construction
    on_initial_residual: float  # ||(U_m - V) F||_F, zero at the final step


@dataclass
class DilationResult:
    steps: list

    @property
    def unitaries(self):
        return [s.unitary for s in self.steps]

    @property
    def final(self) -> PrimitiveObservable:
        return self.steps[-1].unitary


def dilate_to_unitaries(v: PartialIsometry, schedule) -> DilationResult:
    """Unitaries U_m = V E_m + W_m converging to V on its initial subspace.

    W_m is the partial isometry from ran(1 - E_m) onto ran(1 - V E_m V*)
    given by -V on the not-yet-covered part ran(F - E_m) and by a fixed
    pairing W0 of the deterministic bases of ran(1 - F) and ran(1 - E); the
    ranks match in finite dimension, so every U_m is exactly unitary, the
    final one restricts to V on ran F, and the convergence tables are
    non-increasing by construction: (U_m - V) F = -2 V (F - E_m) with the
    projections F - E_m decreasing along the schedule.
    """
    mats = _validate_schedule(v, schedule)
    d = v.matrix.shape[0]
    eye = np.eye(d, dtype=complex)
    f = v.initial
    p0 = range_basis(eye - f)
    q0 = range_basis(eye - v.range_projection)
    if p0.shape[1] != q0.shape[1]:
        raise ContractError(
            "internal invariant violated: complement ranks differ in dilation"
        )
    w0 = q0 @ nk.dagger(p0)
    steps = []
    for idx, e_m in enumerate(mats):
        w_m = -v.matrix @ (f - e_m) + w0
        u_m = PrimitiveObservable(level=v.level, unitary=v.matrix @ e_m + w_m)
        steps.append(DilationStep(
            index=idx,
            unitary=u_m,
            on_step_residual=nk.frob((u_m.unitary - v.matrix) @ e_m),
            on_initial_residual=nk.frob((u_m.unitary - v.matrix) @ v.initial),
        ))
    return DilationResult(steps=steps)


@dataclass
class TunedFamilyRow:
    index: int
    weak: float     # max |<x, (V_m - E) y>| over the probe vectors
    strong: float   # max ||(V_m^* - E) x|| over the probe vectors


@dataclass
class TunedFamily:
    isometries: list
    rows: list

    @property
    def final(self) -> PartialIsometry:
        return self.isometries[-1]


def tuned_isometries(v: PartialIsometry, schedule, probe_count: int = 3,
                     seed: int = 0) -> TunedFamily:
    """Partial isometries V_m = V U_m* with common range projection E.

    Along the schedule the family converges to E: weakly in the probe table,
    strongly for the adjoints, exactly at the final step.
    """
    dilation = dilate_to_unitaries(v, schedule)
    e = v.range_projection
    rng = np.random.default_rng(seed)
    d = v.matrix.shape[0]
    probes = [nk.random_unit_vector(rng, d) for _ in range(max(probe_count, 1))]
    isometries = []
    rows = []
    for idx, step in enumerate(dilation.steps):
        v_m = v.matrix @ nk.dagger(step.unitary.unitary)
        iso = PartialIsometry(level=v.level, matrix=v_m)
        if nk.frob(iso.range_projection - e) > 1e-9:
            raise ContractError("tuned isometry lost the common range projection")
        diff = v_m - e
        weak = max(abs(np.vdot(x, diff @ y)) for x in probes for y in probes)
        strong = max(float(np.linalg.norm((nk.dagger(v_m) - e) @ x)) for x in probes)
        isometries.append(iso)
        rows.append(TunedFamilyRow(index=idx, weak=weak, strong=strong))
    return TunedFamily(isometries=isometries, rows=rows)


@dataclass
class DetectorBoundRow:
    index: int
    value: float
    gap: float
    excess: float


@dataclass
class DetectorBoundReport:
    target: float
    rows: list
    final_gap: float
    max_excess: float


def detector_bound_probe(e_proj, exc: ExcitationState, family,
                         level=None) -> DetectorBoundReport:
    """|omega_A(V_m)| against omega_A(E) for a tuned family with range E.

    Only the tuned family is assessed; the supremum over arbitrary partial
    isometries is not asserted (it can exceed omega_A(E) in finite
    dimension, see `partial_isometry_sup_witness`).
    """
    e = require_projection(e_proj)
    level = exc.state.tower.levels if level is None else level
    target = float(np.real(exc.evaluate(LocalOperator(level=level, matrix=e))))
    rows = []
    for idx, iso in enumerate(family):
        if nk.frob(iso.range_projection - e) > PROJECTION_TOL:
            raise ContractError(f"family member {idx} does not have range projection E")
        value = abs(exc.evaluate(LocalOperator(level=iso.level, matrix=iso.matrix)))
        rows.append(DetectorBoundRow(
            index=idx, value=value, gap=abs(value - target),
            excess=max(0.0, value - target)))
    return DetectorBoundReport(
        target=target,
        rows=rows,
        final_gap=rows[-1].gap if rows else 0.0,
        max_excess=max((r.excess for r in rows), default=0.0),
    )


def partial_isometry_sup_witness(e_proj, exc: ExcitationState, level=None):
    """A partial isometry with range E whose detector value exceeds omega_A(E).

    Documents that the a priori bound for proper isometries has no finite
    counterpart once arbitrary initial subspaces are allowed: the optimum is
    the trace norm of rho_A E, reached by aligning the initial basis with
    the polar angles of rho_A E.
    """
    e = require_projection(e_proj)
    level = exc.state.tower.levels if level is None else level
    tower = exc.state.tower
    rho = exc.rho
    e_top = embed_matrix(tower, level, e)
    basis = range_basis(e_top)
    g = rho @ basis
    p_svd, _, q_svd = np.linalg.svd(g, full_matrices=False)
    f_stack = p_svd @ q_svd
    v = basis @ nk.dagger(f_stack)
    iso = PartialIsometry(level=tower.levels, matrix=v)
    value = abs(np.trace(rho @ v))
    target = float(np.real(np.trace(rho @ e_top)))
    return iso, float(value), target


def balanced_unitary(weight_matrix, rng) -> np.ndarray:
    """Unitary with tr(M U) = 0 exactly, diagonal in a flattened basis of M.

    The eigenbasis of M is rotated by the discrete Fourier matrix, making all
    diagonal weights equal; any permutation of the d-th roots of unity then
    sums the trace to zero.  Requires dimension >= 2.
    """
    m = nk.as_cmatrix(weight_matrix)
    d = m.shape[0]
    if d < 2:
        raise ContractError("phase balancing needs dimension >= 2")
    eig = nk.herm_eig(m)
    idx = np.arange(d)
    dft = np.exp(-2j * np.pi * np.outer(idx, idx) / d) / np.sqrt(d)
    phases = np.exp(2j * np.pi * idx / d)
    phases = phases[rng.permutation(d)]
    core = dft @ np.diag(phases) @ nk.dagger(dft)
    return eig.eigenvectors @ core @ nk.dagger(eig.eigenvectors)


def vacuum_detector(state: GenericState, seed: int) -> PrimitiveObservable:
    """A unitary silent on the reference state: omega(U) = 0.

    Any nonzero response |omega_A(U)|^2 certifies omega_A != omega.  Built by
    assigning permuted roots of unity in a basis where the reference density
    has a flat diagonal, so the construction is exact for every full-rank
    spectrum.
    """
    if not state.separating:
        raise ContractError("vacuum detector requires a full-rank reference state")
    if state.dim < 2:
        raise ContractError("vacuum detector needs dimension >= 2")
    rng = np.random.default_rng(seed)
    u = balanced_unitary(state.lam, rng)
    residual = abs(np.trace(state.lam @ u))
    if residual > 1e-10:
        raise ContractError(f"phase balancing failed: |omega(U)| = {residual:.3e}")
    return PrimitiveObservable(level=state.tower.levels, unitary=u)


@dataclass
class DetectorStateRow:
    index: int
    mass: float        # omega_A(E)
    leak: float        # omega_{UA}(1 - E)
    probability_gap: float  # | omega_A . omega_{UA} - omega_A(E)^2 |


@dataclass
class TunedDetector:
    observable: PrimitiveObservable
    epsilon: float
    rows: list
    family: TunedFamily

    @property
    def worst_leak(self) -> float:
        return max((r.leak for r in self.rows), default=0.0)

    @property
    def worst_probability_gap(self) -> float:
        return max((r.probability_gap for r in self.rows), default=0.0)


def tune_detector(e_proj, epsilon: float, states, seed: int = 0,
                  level=None, steps: int = 3) -> TunedDetector:
    """Detector unitary with omega_{UA}(1-E) < eps and matched probabilities.

    At truncation a unitary can only concentrate its action on a subspace of
    the same rank as E, so the target states must already be captured by E
    within eps; otherwise tuning fails with the best achievable figure.  The
    E block is the exact weak limit of the tuned isometry family, and the
    complement block is phase-balanced against the mean leak density.
    """
    if epsilon <= 0:
        raise ContractError("epsilon must be positive")
    if not states:
        raise ContractError("tuning needs at least one target state")
    state = states[0].state
    tower = state.tower
    level = tower.levels if level is None else level
    e = require_projection(e_proj)
    e_local = LocalOperator(level=level, matrix=e)

    masses = [float(np.real(exc.evaluate(e_local))) for exc in states]
    best = max(1.0 - m for m in masses)
    if best >= epsilon:
        raise TuningFailureError(
            f"states carry leak {best:.3e} outside E; epsilon {epsilon:.3e} unreachable "
            "at the current tower size",
            best_epsilon=best,
        )

    d = e.shape[0]
    eye = np.eye(d, dtype=complex)
    rng = np.random.default_rng(seed)

    rank = int(round(np.real(np.trace(e))))
    basis = range_basis(e)
    if 0 < rank:
        start = basis @ np.roll(np.eye(rank, dtype=complex), 1, axis=1) @ nk.dagger(basis)
        v_init = PartialIsometry(level=level, matrix=start if rank > 1 else e)
        family = tuned_isometries(v_init, increasing_projection_schedule(e, steps), seed=seed)
        e_block = family.final.matrix
    else:
        raise ContractError("E must be a nonzero projection")

    comp_basis = range_basis(eye - e)
    if comp_basis.shape[1] >= 2:
        e_top = embed_matrix(tower, level, e)
        leak_dirs = [embed_matrix(tower, level, eye - e) @ exc.rho @ embed_matrix(tower, level, eye - e)
                     for exc in states]
        mean_leak = sum(leak_dirs) / len(leak_dirs)
        mean_local = nk.partial_trace(
            mean_leak, [d, tower.top_dim // tower.dim_at(level)], [0]
        ) if tower.dim_at(level) != tower.top_dim else mean_leak
        m_small = nk.dagger(comp_basis) @ mean_local @ comp_basis
        b = comp_basis @ balanced_unitary(m_small, rng) @ nk.dagger(comp_basis)
    elif comp_basis.shape[1] == 1:
        b = -comp_basis @ nk.dagger(comp_basis)
    else:
        b = np.zeros((d, d), dtype=complex)

    obs = PrimitiveObservable(level=level, unitary=e_block + b)

    rows = []
    complement = LocalOperator(level=level, matrix=eye - e)
    for idx, exc in enumerate(states):
        final = apply_observable(obs, exc)
        leak = float(np.real(final.evaluate(complement)))
        prob = abs(np.vdot(exc.vector, final.vector)) ** 2
        gap = abs(prob - masses[idx] ** 2)
        rows.append(DetectorStateRow(index=idx, mass=masses[idx], leak=leak,
                                     probability_gap=gap))
    det = TunedDetector(observable=obs, epsilon=epsilon, rows=rows, family=family)
    if det.worst_leak >= epsilon or det.worst_probability_gap >= 4 * epsilon:
        raise TuningFailureError(
            f"tuning landed outside the bounds: leak {det.worst_leak:.3e}, "
            f"gap {det.worst_probability_gap:.3e}",
            best_epsilon=max(det.worst_leak, det.worst_probability_gap / 4.0),
        )
    return det


def recover_observable(projections, weights, exc: ExcitationState, epsilon: float,
                       level=None, seed: int = 0) -> float:
    """Estimate omega_A(O) for O = sum_m o_m E_m from survival probabilities.

    Uses one tuned unitary per projection, with the complement phase-balanced
    against the state's own leak density, so each |omega_A(U_m)| reproduces
    omega_A(E_m); the estimate is sum_m o_m sqrt(omega_A . omega_{U_m A}).
    """
    if epsilon <= 0:
        raise ContractError("epsilon must be positive")
    state = exc.state
    tower = state.tower
    level = tower.levels if level is None else level
    mats = [require_projection(p) for p in projections]
    if len(mats) != len(weights):
        raise ContractError("needs one weight per projection")
    d = mats[0].shape[0]
    eye = np.eye(d, dtype=complex)
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            comm = nk.frob(mats[i] @ mats[j] - mats[j] @ mats[i])
            if comm > 1e-10:
                raise ContractError(f"projections {i} and {j} do not commute ({comm:.3e})")
            if nk.frob(mats[i] @ mats[j]) > 1e-8:
                raise ContractError(f"projections {i} and {j} are not orthogonal")
    total = sum(mats)
    if float(np.linalg.eigvalsh(eye - total)[0]) < -1e-9:
        raise ContractError("projections exceed a resolution of the identity")

    rng = np.random.default_rng(seed)
    ratio = tower.top_dim // tower.dim_at(level)
    estimate = 0.0
    for o_m, e_m in zip(weights, mats):
        comp_basis = range_basis(eye - e_m)
        if comp_basis.shape[1] >= 2:
            leak_top = (embed_matrix(tower, level, eye - e_m) @ exc.rho
                        @ embed_matrix(tower, level, eye - e_m))
            leak_local = nk.partial_trace(leak_top, [d, ratio], [0]) if ratio > 1 else leak_top
            m_small = nk.dagger(comp_basis) @ leak_local @ comp_basis
            b = comp_basis @ balanced_unitary(m_small, rng) @ nk.dagger(comp_basis)
        elif comp_basis.shape[1] == 1:
            b = -comp_basis @ nk.dagger(comp_basis)
        else:
            b = np.zeros((d, d), dtype=complex)
        u_m = PrimitiveObservable(level=level, unitary=e_m + b)
        final = apply_observable(u_m, exc)
        survival = abs(np.vdot(exc.vector, final.vector)) ** 2
        estimate += float(o_m) * float(np.sqrt(survival))
    return estimate


@dataclass
class CommensurabilityResult:
    commensurable: bool
    phase: complex
    commutes: bool
    residual: float


def commensurable(obs1, obs2, tower=None) -> CommensurabilityResult:
    """Whether Ad(U1 U2) = Ad(U2 U1), i.e. U2 U1 = t U1 U2 for a phase t.

    On a full matrix algebra equality of the adjoint maps is exactly phase
    proportionality of the two products; commensurability does not require
    the unitaries themselves to commute (t = 1).  Accepts raw unitary
    matrices of matching size or PrimitiveObservables (embedded to a common
    level when a tower is supplied).
    """
    if isinstance(obs1, PrimitiveObservable) and isinstance(obs2, PrimitiveObservable):
        if obs1.level != obs2.level:
            if tower is None:
                raise ContractError("observables at different levels need a tower to embed")
            level = max(obs1.level, obs2.level)
            u1 = embed_matrix(tower, obs1.level, obs1.unitary, level)
            u2 = embed_matrix(tower, obs2.level, obs2.unitary, level)
        else:
            u1, u2 = obs1.unitary, obs2.unitary
    else:
        u1 = obs1.unitary if isinstance(obs1, PrimitiveObservable) else nk.as_cmatrix(obs1)
        u2 = obs2.unitary if isinstance(obs2, PrimitiveObservable) else nk.as_cmatrix(obs2)
        if u1.shape != u2.shape:
            raise ContractError("unitaries must act on the same space")
    x = u1 @ u2
    y = u2 @ u1
    d = x.shape[0]
    z = np.trace(nk.dagger(x) @ y)
    phase = z / abs(z) if abs(z) > 1e-14 else 1.0 + 0.0j
    residual = nk.frob(y - phase * x) / nk.frob(x)
    flag = residual <= 1e-10
    return CommensurabilityResult(
        commensurable=flag,
        phase=complex(phase),
        commutes=bool(flag and abs(phase - 1.0) <= 1e-8),
        residual=float(residual),
    )


def clock_and_shift(dim: int):
    """The standard cyclic pair: diagonal roots of unity and the cyclic shift."""
    idx = np.arange(dim)
    clock = np.diag(np.exp(2j * np.pi * idx / dim))
    shift = np.roll(np.eye(dim, dtype=complex), 1, axis=0)
    return clock, shift


def commensurable_projection_probe(e1_proj, e2_proj, level: int, ts=None):
    """Exploratory probe relating commensurability of U_t pairs to [E1, E2].

    Returns rows of (t, commensurability residual) together with the
    commutator norm of the projections; no claim is asserted.
    """
    e1 = require_projection(e1_proj)
    e2 = require_projection(e2_proj)
    ts = (1.0, 1j, -1.0, np.exp(0.3j)) if ts is None else ts
    commutator = nk.frob(e1 @ e2 - e2 @ e1)
    rows = []
    for t in ts:
        u1 = ut_unitary(e1, t, level)
        u2 = ut_unitary(e2, t, level)
        rows.append((complex(t), commensurable(u1, u2).residual))
    return {"commutator_norm": float(commutator), "rows": rows}
