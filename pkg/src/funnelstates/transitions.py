"""Transition probabilities, orthogonal families and fidelity comparisons."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numkernel as nk
from .errors import CompletenessUnavailableError, ContractError
from .excitations import ExcitationState, make_excitation, norm_distance, overlap, _require_shared_state
from .funnel import GenericState, LocalOperator, matrix_units


def transition_probability(a: ExcitationState, b: ExcitationState) -> float:
    """|omega(A* B)|^2, clamped into [0, 1] for reporting."""
    _require_shared_state(a, b)
    p = abs(overlap(a, b)) ** 2
    if p < -1e-12 or p > 1.0 + 1e-12:
        raise ContractError(f"transition probability {p!r} outside the unit interval")
    return float(min(max(p, 0.0), 1.0))


@dataclass
class OrthogonalFamily:
    """Mutually orthogonal excitation states with their overlap matrix."""

    members: list
    overlaps: np.ndarray

    def __len__(self) -> int:
        return len(self.members)

    def max_off_diagonal(self) -> float:
        off = self.overlaps - np.diag(np.diag(self.overlaps))
        return float(np.max(np.abs(off))) if len(self.members) > 1 else 0.0


def build_complete_family(state: GenericState, generators=None) -> OrthogonalFamily:
    """Orthogonal family of D^2 states, complete on the doubled space.

    With a full-rank reference density the map A -> A.omega is a linear
    bijection onto the doubled space, so orthonormalizing the generator
    vectors yields exactly D^2 members and the completeness sum
    sum_m omega_B . omega_{A_m} equals 1 for every probe.  Defaults to the
    matrix-unit basis of the top algebra in lexicographic order.
    """
    if not state.separating:
        raise CompletenessUnavailableError(
            "complete orthogonal families need a full-rank reference state"
        )
    d = state.dim
    tower = state.tower
    if generators is None:
        gen_vectors = [(unit @ state.sqrt_lam).ravel() for unit in matrix_units(d)]
    else:
        gen_vectors = [(state.embed(g) @ state.sqrt_lam).ravel() for g in generators]
    gs = nk.gram_schmidt(gen_vectors)
    if len(gs.vectors) != d * d:
        raise CompletenessUnavailableError(
            f"generators span only {len(gs.vectors)} of {d * d} directions"
        )
    inv_sqrt = state.inv_sqrt_lam
    members = []
    for v in gs.vectors:
        op = v.reshape(d, d) @ inv_sqrt
        members.append(make_excitation(state, LocalOperator(level=tower.levels, matrix=op)))
    vecs = np.column_stack([m.vector for m in members])
    overlaps = nk.dagger(vecs) @ vecs
    return OrthogonalFamily(members=members, overlaps=overlaps)


def completeness_sum(family: OrthogonalFamily, probe: ExcitationState) -> float:
    return float(sum(transition_probability(probe, m) for m in family.members))


def uhlmann_fidelity(a: ExcitationState, b: ExcitationState) -> float:
    """(tr |sqrt(rho_A) sqrt(rho_B)|)^2 on the top-algebra densities."""
    _require_shared_state(a, b)
    sa = nk.sqrtm_psd(a.rho)
    sb = nk.sqrtm_psd(b.rho)
    return float(nk.trace_norm(sa @ sb) ** 2)


@dataclass
class FuchsReport:
    transition: float
    distance: float
    bound: float
    slack: float
    pure_equality_residual: float = None

    @property
    def holds(self) -> bool:
        return self.slack >= -1e-10


def fuchs_bound_check(a: ExcitationState, b: ExcitationState) -> FuchsReport:
    """Check omega_A . omega_B <= 1 - (1/4) ||omega_A - omega_B||^2.

    The distance is the top-algebra functional norm.  For a pure reference
    state that norm coincides with the doubled-space vector-state distance
    and the bound is an identity, reported as an equality residual.
    """
    tp = transition_probability(a, b)
    dist = norm_distance(a, b, scope="top")
    bound = 1.0 - 0.25 * dist**2
    report = FuchsReport(transition=tp, distance=dist, bound=bound, slack=bound - tp)
    if not a.state.separating:
        report.pure_equality_residual = abs(bound - tp)
    return report


@dataclass
class ContinuityRow:
    scale: float
    deviation: float


@dataclass
class ContinuityReport:
    rows: list
    envelope_coefficient: float

    def deviations(self):
        return [r.deviation for r in self.rows]


def local_continuity_probe(base: ExcitationState, probe: ExcitationState,
                           direction, scales) -> ContinuityReport:
    """Decay of |omega_{A_m}.omega_B - omega_A.omega_B| along a perturbation.

    A_m = normalize(A + X / m) for m in `scales`; the report carries the
    deviation table and the fitted envelope constant c = max_m m*deviation.
    """
    state = base.state
    tower = state.tower
    if not isinstance(direction, LocalOperator):
        direction = LocalOperator(level=base.level, matrix=direction)
    ref = transition_probability(base, probe)
    rows = []
    coeff = 0.0
    from .funnel import embed_matrix

    level = max(base.level, direction.level)
    a_mat = embed_matrix(tower, base.level, base.op.matrix, level)
    x_mat = embed_matrix(tower, direction.level, direction.matrix, level)
    for m in scales:
        perturbed = make_excitation(
            state, LocalOperator(level=level, matrix=a_mat + x_mat / float(m)))
        dev = abs(transition_probability(perturbed, probe) - ref)
        rows.append(ContinuityRow(scale=float(m), deviation=dev))
        coeff = max(coeff, dev * float(m))
    return ContinuityReport(rows=rows, envelope_coefficient=coeff)
