"""Excitation states of a reference state and their ray structure.

An excitation is the functional ``C -> omega(A* C A)`` for a normalized
operator ``A`` (``omega(A*A) = 1``).  Normalized operators carry the state
faithfully up to a phase; the canonical gauge below fixes that phase so state
equality can be tested on representatives directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numkernel as nk
from .errors import (
    AlignmentError,
    ContractError,
    DegenerateExcitationError,
    DegenerateSuperpositionError,
    GenericityViolationError,
    NotNullCombinationError,
    NotSameRayError,
)
from .funnel import (
    FunnelTower,
    GenericState,
    LocalOperator,
    embed_matrix,
    minimal_extension_projection,
)

# State equality is tested at 1e-9 in functional norm; operator recovery is
# allowed 1e-7 because it passes through the conditioning of sqrt(lam).
STATE_EQ_TOL = 1e-9
OP_RECOVERY_TOL = 1e-7
GAUGE_TOL = 1e-10


@dataclass
class ExcitationState:
    """A normalized excitation with its canonical ray representative.

    `op` is the normalized operator exactly as supplied (its phase is the
    caller's); `canonical_phase` is the gauge factor that maps it onto the
    deterministic ray representative, so equality tests do not depend on the
    input phase.  `top` is the embedding into the top algebra,
    `mat = top @ sqrt(lam)` the matrix whose vectorization is the
    doubled-space vector A.omega, and `rho` the reduced density on the top
    algebra.
    """

    state: GenericState
    op: LocalOperator
    canonical_phase: complex = 1.0 + 0.0j
    top: np.ndarray = field(repr=False, default=None)
    mat: np.ndarray = field(repr=False, default=None)
    rho: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.top is None:
            self.top = self.state.embed(self.op)
        if self.mat is None:
            self.mat = self.top @ self.state.sqrt_lam
        if self.rho is None:
            self.rho = self.mat @ nk.dagger(self.mat)

    @property
    def vector(self) -> np.ndarray:
        """The doubled-space vector A.omega (row-major vectorization)."""
        return self.mat.ravel()

    @property
    def canonical_matrix(self) -> np.ndarray:
        """Gauge-fixed representative of the ray, independent of input phase."""
        return self.canonical_phase * self.op.matrix

    @property
    def level(self) -> int:
        return self.op.level

    def evaluate(self, c) -> complex:
        """omega_A(C) = tr(rho_A C)."""
        return complex(np.trace(self.rho @ self.state.embed(c)))


def _gauge_phase(vector: np.ndarray) -> complex:
    """Phase making the first component of modulus > GAUGE_TOL real positive."""
    for x in vector:
        if abs(x) > GAUGE_TOL:
            return np.conj(x) / abs(x)
    return 1.0 + 0.0j


def make_excitation(state: GenericState, op) -> ExcitationState:
    """Normalize an operator into an excitation state and record its gauge."""
    if not isinstance(op, LocalOperator):
        op = LocalOperator(level=state.tower.levels, matrix=op)
    top = state.embed(op)
    mat = top @ state.sqrt_lam
    norm_sq = float(np.real(np.vdot(mat.ravel(), mat.ravel())))
    if norm_sq <= 1e-12:
        raise DegenerateExcitationError(
            "operator annihilates the reference vector; excitation undefined"
        )
    scale = 1.0 / np.sqrt(norm_sq)
    phase = _gauge_phase(mat.ravel() * scale)
    op_norm = LocalOperator(level=op.level, matrix=op.matrix * scale)
    return ExcitationState(state=state, op=op_norm, canonical_phase=phase,
                           top=top * scale, mat=mat * scale)


def identity_excitation(state: GenericState) -> ExcitationState:
    return make_excitation(state, LocalOperator(level=1, matrix=np.eye(state.tower.dim_at(1), dtype=complex)))


def evaluate(exc: ExcitationState, c) -> complex:
    return exc.evaluate(c)


def overlap(a: ExcitationState, b: ExcitationState) -> complex:
    """omega(A* B) between the canonical representatives."""
    _require_shared_state(a, b)
    return complex(np.vdot(a.vector, b.vector))


def _require_shared_state(a: ExcitationState, b: ExcitationState) -> None:
    if a.state is not b.state:
        raise ContractError("excitations refer to different reference states")


def norm_distance(a: ExcitationState, b: ExcitationState, scope="top") -> float:
    """Distance between the states, by scope.

    Integer scope n restricts both densities to the first n factors; "top"
    takes the trace norm on the full top algebra; "full_bh" the vector-state
    distance 2 sqrt(1 - |<A.omega, B.omega>|^2) on the doubled space.
    """
    _require_shared_state(a, b)
    if scope == "top":
        return nk.trace_norm(a.rho - b.rho)
    if scope == "full_bh":
        # normalize the overlap so the self-distance is exactly zero
        # instead of sqrt(machine-eps) noise
        ov = (abs(np.vdot(a.vector, b.vector)) ** 2
              / (np.vdot(a.vector, a.vector).real * np.vdot(b.vector, b.vector).real))
        return 2.0 * np.sqrt(max(0.0, 1.0 - min(ov, 1.0)))
    level = int(scope)
    dims = a.state.tower.factor_dims
    keep = range(level)
    ra = nk.partial_trace(a.rho, dims, keep)
    rb = nk.partial_trace(b.rho, dims, keep)
    return nk.trace_norm(ra - rb)


def lift_phase(a: ExcitationState, b: ExcitationState) -> complex:
    """Recover the phase t with B = t A for two equal excitation states."""
    _require_shared_state(a, b)
    dist = norm_distance(a, b, scope="top")
    if dist > STATE_EQ_TOL:
        raise NotSameRayError(
            f"states differ by {dist:.3e} in functional norm", distance=dist
        )
    t = overlap(a, b)
    if abs(abs(t) - 1.0) > 1e-8:
        raise GenericityViolationError(
            f"equal states but |omega(A*B)| = {abs(t):.12f} far from 1; "
            "reference state fails the lift property"
        )
    if nk.frob(b.top - t * a.top) > OP_RECOVERY_TOL * max(nk.frob(a.top), 1.0):
        raise GenericityViolationError(
            "equal states whose representatives are not phase multiples"
        )
    return t


def superpose(c_a: complex, a: ExcitationState, c_b: complex, b: ExcitationState) -> ExcitationState:
    """Excitation of c_a A + c_b B, renormalized.

    The result depends on the relative phase of the concrete representatives,
    which the canonical gauge pins down; a different gauge convention would
    produce a different (but ray-equivalent family of) superposition.
    """
    _require_shared_state(a, b)
    tower = a.state.tower
    level = max(a.level, b.level)
    m = c_a * embed_matrix(tower, a.level, a.op.matrix, level) + \
        c_b * embed_matrix(tower, b.level, b.op.matrix, level)
    try:
        return make_excitation(a.state, LocalOperator(level=level, matrix=m))
    except DegenerateExcitationError as exc:
        raise DegenerateSuperpositionError(
            "superposition interferes destructively to numerical zero"
        ) from exc


def align_phases(reps, reference: int):
    """Phases t_m making omega((t_m A_m)* A_ref) real positive.

    For a norm-convergent sequence of states the aligned vectors
    t_m A_m . omega form a Cauchy sequence on the doubled space.
    """
    ref = reps[reference]
    phases = []
    for m, exc in enumerate(reps):
        z = overlap(exc, ref)
        if abs(z) <= 1e-9:
            raise AlignmentError(
                f"member {m} has vanishing overlap with the reference; alignment impossible"
            )
        phases.append(z / abs(z))
    return phases


# ---------------------------------------------------------------------------
# Null combinations and their operator transfer
# ---------------------------------------------------------------------------


@dataclass
class TransferReport:
    max_ratio: float
    trials: int
    worst_witness: dict
    precondition_norm: float


def functional_norm(coeffs, excs) -> float:
    """Trace norm of sum(c_m omega_{A_m}) as a functional on the top algebra."""
    acc = np.zeros_like(excs[0].rho)
    for c, e in zip(coeffs, excs):
        acc = acc + c * e.rho
    return nk.trace_norm(acc)


def find_null_combination(excs, threshold: float = 1e-10):
    """Coefficients annihilating the combined functional, via the Gram matrix.

    The Gram matrix of the excitation functionals (Hilbert-Schmidt pairing of
    their densities) is Hermitian PSD; an eigenvector below the numerical
    kernel threshold gives the dependency.  Raises when the family is
    independent.
    """
    m = len(excs)
    gram = np.zeros((m, m), dtype=complex)
    for j in range(m):
        for k in range(m):
            gram[j, k] = np.trace(excs[j].rho @ excs[k].rho)
    eig = nk.herm_eig(gram)
    scale = max(eig.eigenvalues[0], 1.0)
    if eig.eigenvalues[-1] > threshold * scale:
        raise NotNullCombinationError(
            f"family is linearly independent: smallest Gram eigenvalue "
            f"{eig.eigenvalues[-1]:.3e}"
        )
    coeffs = eig.eigenvectors[:, -1]
    return coeffs / np.linalg.norm(coeffs)


def null_combination_transfer(coeffs, excs, trials: int, rng=None) -> TransferReport:
    """Verify that a null combination of states kills every compressed operator.

    For `trials` random operators C (cycling through the tower levels below
    the top and the top itself) the report records
    max ||sum_m c_m A_m* C A_m||_F / ||C||_F.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    pre = functional_norm(coeffs, excs)
    if pre > STATE_EQ_TOL:
        raise NotNullCombinationError(
            f"functional norm of the combination is {pre:.3e} > {STATE_EQ_TOL}"
        )
    state = excs[0].state
    tower = state.tower
    tops = [e.top for e in excs]
    worst = 0.0
    witness = None
    for trial in range(trials):
        level = 1 + (trial % tower.levels)
        c = nk.random_complex_matrix(rng, tower.dim_at(level))
        c_top = embed_matrix(tower, level, c)
        acc = np.zeros_like(c_top)
        for cm, a_top in zip(coeffs, tops):
            acc = acc + cm * (nk.dagger(a_top) @ c_top @ a_top)
        ratio = nk.frob(acc) / nk.frob(c_top)
        if ratio > worst:
            worst = ratio
            witness = {"trial": trial, "level": level, "ratio": ratio}
    return TransferReport(max_ratio=worst, trials=trials,
                          worst_witness=witness, precondition_norm=pre)


# ---------------------------------------------------------------------------
# Extreme points
# ---------------------------------------------------------------------------


@dataclass
class CompressionCheck:
    leading_singular: float
    second_singular: float
    expected_leading: float


@dataclass
class ExtremalityReport:
    is_representation: bool
    mixture_distance: float
    ray_phases: list
    ray_failures: list
    compression: CompressionCheck = None

    @property
    def passed(self) -> bool:
        return self.is_representation and not self.ray_failures


def compression_check(exc: ExcitationState) -> CompressionCheck:
    """Rank-one check for A* E_n A one level above the operator."""
    state = exc.state
    n = exc.level
    if n >= state.tower.levels:
        raise ContractError("compression check needs one tower level above the operator")
    proj = minimal_extension_projection(state, n)
    a_up = embed_matrix(state.tower, n, exc.op.matrix, n + 1)
    compressed = nk.dagger(a_up) @ proj.projector @ a_up
    svals = np.linalg.svd(compressed, compute_uv=False)
    expected = float(np.real(exc.state.expect(
        LocalOperator(level=n, matrix=exc.op.matrix @ nk.dagger(exc.op.matrix)))))
    return CompressionCheck(
        leading_singular=float(svals[0]),
        second_singular=float(svals[1]) if len(svals) > 1 else 0.0,
        expected_leading=expected,
    )


def extremality_check(target: ExcitationState, candidates) -> ExtremalityReport:
    """Test a convex decomposition of an excitation state.

    When the mixture reproduces the state, every component must be ray-equal
    to it (extremality); otherwise the report carries the distance witness.
    """
    probs = np.array([p for p, _ in candidates], dtype=float)
    if np.any(probs <= 0):
        raise ContractError("mixture weights must be positive")
    if abs(probs.sum() - 1.0) > 1e-12:
        raise ContractError(f"mixture weights sum to {probs.sum()!r}, not 1")
    mix = np.zeros_like(target.rho)
    for p, exc in candidates:
        _require_shared_state(target, exc)
        mix = mix + p * exc.rho
    dist = nk.trace_norm(mix - target.rho)
    is_rep = dist <= STATE_EQ_TOL
    phases = []
    failures = []
    if is_rep:
        for idx, (_, exc) in enumerate(candidates):
            try:
                phases.append(lift_phase(exc, target))
            except (NotSameRayError, GenericityViolationError) as err:
                failures.append({"index": idx, "error": str(err)})
    comp = None
    if target.level < target.state.tower.levels:
        comp = compression_check(target)
    return ExtremalityReport(
        is_representation=is_rep,
        mixture_distance=dist,
        ray_phases=phases,
        ray_failures=failures,
        compression=comp,
    )


def random_excitation(state: GenericState, rng, level=None) -> ExcitationState:
    """Seeded Gaussian excitation at a tower level (default: level 1)."""
    level = 1 if level is None else level
    d = state.tower.dim_at(level)
    return make_excitation(state, LocalOperator(level=level, matrix=nk.random_complex_matrix(rng, d)))
