"""Finite matrix-algebra towers in standard (doubled) form.

A tower with factor dimensions ``(d1, k2, ..., kL)`` models a strictly
increasing chain of matrix algebras ``M_{D_1} c M_{D_2} c ... c M_D`` with
``D_n = d1*k2*...*kn``, each level embedded into the next as ``a -> a (x) 1``.
The purification capacity rule ``k_{n+1} >= D_n`` guarantees that the
restriction of any full-rank reference state to level ``n`` extends to a pure
state one level up, which is what the rank-one extension projections below
are built from.

The reference state is a full-rank density matrix ``lam`` on the top level.
Its standard-form vector is ``omega = vec(sqrt(lam))`` on the doubled space
``C^D (x) C^D``, where the top algebra acts from the left, ``A -> A (x) 1``;
then ``<omega, (A (x) 1) omega> = tr(lam A)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ConfigurationError, ContractError, SamplingError
from . import numkernel as nk

# Finite surrogate of the separating property: the spectrum of the reference
# density must stay above eps_sep = SEPARATION_SCALE / D.
SEPARATION_SCALE = 1e-6
INJECTIVITY_GAP = 1e-6
PHASE_RECOVERY_TOL = 1e-9


@dataclass(frozen=True)
class FunnelTower:
    """Dimension schedule of the tower: per-level tensor factor sizes."""

    factor_dims: tuple

    @property
    def levels(self) -> int:
        return len(self.factor_dims)

    def dim_at(self, level: int) -> int:
        """Algebra dimension D_n at 1-based level `level`."""
        if not 1 <= level <= self.levels:
            raise ConfigurationError(f"level {level} outside 1..{self.levels}")
        return int(np.prod(self.factor_dims[:level]))

    @property
    def top_dim(self) -> int:
        return self.dim_at(self.levels)

    @property
    def cumulative_dims(self) -> tuple:
        return tuple(self.dim_at(n) for n in range(1, self.levels + 1))


def build_tower(dims) -> FunnelTower:
    """Validate a dimension schedule and freeze it into a tower.

    Every factor must be at least 2 (nontrivial relative commutants) and the
    capacity rule k_{n+1} >= D_n must hold at every step.
    """
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise ConfigurationError("tower needs at least one level")
    if any(d < 2 for d in dims):
        raise ConfigurationError(f"every factor dimension must be >= 2, got {dims}")
    running = dims[0]
    for i, k in enumerate(dims[1:], start=2):
        if k < running:
            raise CapacityError(
                f"capacity rule violated at level {i}: factor {k} < cumulative dimension {running}"
            )
        running *= k
    return FunnelTower(factor_dims=dims)


@dataclass(frozen=True)
class LocalOperator:
    """An operator at tower level `level`, implicitly embedded as a (x) 1."""

    level: int
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", nk.as_cmatrix(self.matrix))


def embed_matrix(tower: FunnelTower, level: int, matrix, target_level=None) -> np.ndarray:
    """Embed a level-`level` matrix into a higher level (default: top)."""
    target = tower.levels if target_level is None else target_level
    d_from = tower.dim_at(level)
    d_to = tower.dim_at(target)
    m = nk.as_cmatrix(matrix)
    if m.shape != (d_from, d_from):
        raise ContractError(f"matrix shape {m.shape} does not match level {level} dimension {d_from}")
    if d_to == d_from:
        return m
    if d_to % d_from:
        raise ContractError(f"level {level} does not divide into level {target}")
    return nk.kron(m, np.eye(d_to // d_from, dtype=complex))


def embed_operator(tower: FunnelTower, op: LocalOperator, target_level=None) -> np.ndarray:
    return embed_matrix(tower, op.level, op.matrix, target_level)


@dataclass
class GenericState:
    """Reference state: full-rank spectral data plus its doubled-space vector."""

    tower: FunnelTower
    lam: np.ndarray
    profile: str
    seed: int
    eps_sep: float
    separating: bool
    spectrum: np.ndarray = field(repr=False, default=None)
    basis: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        self.lam = nk.as_cmatrix(self.lam)
        eig = nk.herm_eig(self.lam)
        self.spectrum = eig.eigenvalues
        self.basis = eig.eigenvectors
        d = self.dim
        self._sqrt = (self.basis * np.sqrt(np.clip(self.spectrum, 0.0, None))) @ nk.dagger(self.basis)
        if self.separating:
            self._inv_sqrt = (self.basis * (1.0 / np.sqrt(self.spectrum))) @ nk.dagger(self.basis)
        else:
            self._inv_sqrt = None
        self._omega = self._sqrt.reshape(d * d)
        for a in (self.lam, self._sqrt, self._omega):
            a.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.tower.top_dim

    @property
    def doubled_dim(self) -> int:
        return self.dim * self.dim

    @property
    def sqrt_lam(self) -> np.ndarray:
        return self._sqrt

    @property
    def inv_sqrt_lam(self) -> np.ndarray:
        if self._inv_sqrt is None:
            raise ContractError(
                "reference state is rank deficient (pure profile); inverse square root unavailable"
            )
        return self._inv_sqrt

    @property
    def omega_vector(self) -> np.ndarray:
        return self._omega

    def embed(self, op, target_level=None) -> np.ndarray:
        if isinstance(op, LocalOperator):
            return embed_operator(self.tower, op, target_level)
        return embed_matrix(self.tower, self.tower.levels, op, target_level)

    def expect(self, op) -> complex:
        """omega(A) = tr(lam A) for A given at any level."""
        return complex(np.trace(self.lam @ self.embed(op)))

    def reduced(self, level: int) -> np.ndarray:
        """Restriction of the reference density to the first `level` factors."""
        return nk.partial_trace(self.lam, self.tower.factor_dims, range(level))


def _wishart_density(rng, d: int) -> np.ndarray:
    g = nk.random_complex_matrix(rng, d)
    w = g @ nk.dagger(g)
    return w / np.real(np.trace(w))


def sample_generic_state(
    tower: FunnelTower,
    seed: int,
    profile: str = "random_full_rank",
    eps_sep=None,
    delta: float = 0.1,
    max_redraws: int = 8,
    selftest_trials: int = 6,
) -> GenericState:
    """Draw a reference state of the requested profile.

    random_full_rank draws a normalized Wishart density and redraws (bounded)
    until the separation floor and the genericity self-test pass.  pure gives
    a rank-one density (separating invariant waived, flagged on the state).
    near_tracial mixes the tracial state with a random density at weight
    `delta`.
    """
    d = tower.top_dim
    eps = (SEPARATION_SCALE / d) if eps_sep is None else float(eps_sep)
    rng = np.random.default_rng(seed)

    if profile == "pure":
        v = nk.random_unit_vector(rng, d)
        lam = np.outer(v, np.conj(v))
        return GenericState(tower=tower, lam=lam, profile=profile, seed=seed,
                            eps_sep=eps, separating=False)

    if profile not in ("random_full_rank", "near_tracial"):
        raise ConfigurationError(f"unknown state profile {profile!r}")

    last_failure = "no draw attempted"
    for _ in range(max_redraws):
        r = _wishart_density(rng, d)
        if profile == "near_tracial":
            lam = (1.0 - delta) * np.eye(d, dtype=complex) / d + delta * r
        else:
            lam = r
        min_eig = float(np.linalg.eigvalsh(lam)[0])
        if min_eig < eps:
            last_failure = f"spectrum floor {min_eig:.3e} below eps_sep {eps:.3e}"
            continue
        state = GenericState(tower=tower, lam=lam, profile=profile, seed=seed,
                             eps_sep=eps, separating=True)
        report = check_genericity(state, trials=selftest_trials, rng=rng)
        if report.passed:
            return state
        last_failure = f"genericity self-test failed: {report.failures[:1]}"
    raise SamplingError(
        f"could not sample a generic state for profile {profile!r} after "
        f"{max_redraws} draws ({last_failure})"
    )


@dataclass(frozen=True)
class MinimalExtensionProjection:
    """Rank-one projection at level n+1 that compresses level n to omega."""

    level: int
    vector: np.ndarray
    projector: np.ndarray       # inside the level-(n+1) algebra
    projector_top: np.ndarray   # embedded into the top algebra
    schmidt_weights: np.ndarray


def minimal_extension_projection(state: GenericState, n: int) -> MinimalExtensionProjection:
    """Purify the level-n reduction into the (n+1)-th factor.

    Eigenvectors of the reduced density are taken in descending eigenvalue
    order and paired with the first standard basis vectors of the next
    factor; phases are fixed so every Schmidt coefficient is real positive.
    """
    tower = state.tower
    if not 1 <= n < tower.levels:
        raise ContractError(f"extension projection needs 1 <= n < {tower.levels}, got {n}")
    d_n = tower.dim_at(n)
    k_next = tower.factor_dims[n]
    rho = state.reduced(n)
    eig = nk.herm_eig(rho)
    weights = np.clip(eig.eigenvalues, 0.0, None)
    rank = int(np.sum(weights > 1e-14 * max(weights[0], 1e-300)))
    if rank > k_next:
        raise CapacityError(
            f"reduced state at level {n} has rank {rank} > next factor {k_next}"
        )
    psi = np.zeros(d_n * k_next, dtype=complex)
    for i in range(rank):
        e_i = eig.eigenvectors[:, i]
        f_i = np.zeros(k_next, dtype=complex)
        f_i[i] = 1.0
        psi += np.sqrt(weights[i]) * np.kron(e_i, f_i)
    projector = np.outer(psi, np.conj(psi))
    projector_top = embed_matrix(tower, n + 1, projector)
    return MinimalExtensionProjection(
        level=n,
        vector=psi,
        projector=projector,
        projector_top=projector_top,
        schmidt_weights=weights[:rank],
    )


def matrix_units(dim: int):
    """Matrix-unit basis of M_dim in lexicographic (row, column) order."""
    for i in range(dim):
        for j in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = 1.0
            yield e


def relative_commutant_basis(tower: FunnelTower, n: int):
    """Matrix-unit basis of 1_{D_n} (x) M_{k_{n+1}}, embedded at level n+1."""
    if not 1 <= n < tower.levels:
        raise ContractError(f"relative commutant needs 1 <= n < {tower.levels}, got {n}")
    d_n = tower.dim_at(n)
    k_next = tower.factor_dims[n]
    eye = np.eye(d_n, dtype=complex)
    return [
        LocalOperator(level=n + 1, matrix=nk.kron(eye, unit))
        for unit in matrix_units(k_next)
    ]


def extension_projection_residual(state: GenericState, proj: MinimalExtensionProjection) -> float:
    """max over the matrix-unit basis of N_n of ||E C E - omega(C) E||_F."""
    tower = state.tower
    n = proj.level
    worst = 0.0
    e_local = proj.projector
    k_next = tower.factor_dims[n]
    eye_next = np.eye(k_next, dtype=complex)
    for unit in matrix_units(tower.dim_at(n)):
        c_next = nk.kron(unit, eye_next)
        lhs = e_local @ c_next @ e_local
        omega_c = state.expect(LocalOperator(level=n, matrix=unit))
        worst = max(worst, nk.frob(lhs - omega_c * e_local))
    return worst


# ---------------------------------------------------------------------------
# Genericity self-test
# ---------------------------------------------------------------------------


@dataclass
class GenericityCheck:
    check_id: str
    passed: bool
    residual: float
    witness: dict = None


@dataclass
class GenericityReport:
    passed: bool
    checks: list

    @property
    def failures(self):
        return [c for c in self.checks if not c.passed]


def _excitation_density(state: GenericState, top_matrix: np.ndarray) -> np.ndarray:
    """Density of the normalized excitation by a top-level operator."""
    rho = top_matrix @ state.lam @ nk.dagger(top_matrix)
    tr = float(np.real(np.trace(rho)))
    if tr <= 1e-12:
        raise ContractError("operator annihilates the reference state")
    return rho / tr

def _ray_equal(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    z = np.trace(nk.dagger(a) @ b)
    if abs(z) <= tol:
        return nk.frob(a) <= tol and nk.frob(b) <= tol
    t = z / abs(z)
    return nk.frob(b - t * a) <= tol * max(nk.frob(a), 1.0)


def check_genericity(state: GenericState, trials: int = 20, rng=None) -> GenericityReport:
    """Operational genericity: separation floor, valid extension projections,
    and injectivity of the state-to-ray lift on random pairs at every level.

    Pairs are drawn half Gaussian, half Haar unitary; unitary pairs are the
    ones that expose tracial-product degeneracies, where conjugation leaves
    the reference density invariant.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    tower = state.tower
    checks = []

    min_eig = float(np.linalg.eigvalsh(state.lam)[0])
    checks.append(
        GenericityCheck(
            check_id="separating",
            passed=min_eig >= state.eps_sep,
            residual=min_eig,
            witness=None if min_eig >= state.eps_sep else {"min_eig": min_eig, "eps_sep": state.eps_sep},
        )
    )

    for n in range(1, tower.levels):
        try:
            proj = minimal_extension_projection(state, n)
            residual = extension_projection_residual(state, proj)
            checks.append(GenericityCheck(
                check_id=f"extension_projection:{n}", passed=residual <= 1e-10, residual=residual))
        except Exception as exc:  # report, never raise: the report carries failures
            checks.append(GenericityCheck(
                check_id=f"extension_projection:{n}", passed=False, residual=math.inf,
                witness={"error": str(exc)}))

    for level in range(1, tower.levels + 1):
        d = tower.dim_at(level)
        worst_gap = math.inf
        witness = None
        ok = True
        for trial in range(max(trials, 2)):
            kind = "unitary" if trial % 2 else "gaussian"
            if kind == "unitary":
                a = nk.haar_unitary(rng, d)
                b = nk.haar_unitary(rng, d)
            else:
                a = nk.random_complex_matrix(rng, d)
                b = nk.random_complex_matrix(rng, d)
            a_top = embed_matrix(tower, level, a)
            b_top = embed_matrix(tower, level, b)
            try:
                rho_a = _excitation_density(state, a_top)
                rho_b = _excitation_density(state, b_top)
            except ContractError:
                continue
            norm_a = a / np.sqrt(np.real(np.trace(state.lam @ nk.dagger(a_top) @ a_top)))
            norm_b = b / np.sqrt(np.real(np.trace(state.lam @ nk.dagger(b_top) @ b_top)))
            if _ray_equal(norm_a, norm_b):
                continue
            gap = nk.trace_norm(rho_a - rho_b)
            if gap < worst_gap:
                worst_gap = gap
                witness = {"level": level, "kind": kind, "distance": gap}
            if gap <= INJECTIVITY_GAP:
                ok = False
        checks.append(GenericityCheck(
            check_id=f"lift_injectivity:{level}", passed=ok,
            residual=worst_gap if worst_gap < math.inf else 0.0,
            witness=witness if not ok else None))

    # Phase recovery: omega(A^* (tA)) must return t exactly on equal rays.
    level = 1
    d = tower.dim_at(level)
    worst = 0.0
    for theta in (0.0, 0.37, 2.1):
        a = nk.random_complex_matrix(rng, d)
        a_top = embed_matrix(tower, level, a)
        nrm = np.sqrt(np.real(np.trace(state.lam @ nk.dagger(a_top) @ a_top)))
        if nrm <= 1e-12:
            continue
        a_top = a_top / nrm
        t = np.exp(1j * theta)
        recovered = np.trace(state.lam @ nk.dagger(a_top) @ (t * a_top))
        worst = max(worst, abs(recovered - t))
    checks.append(GenericityCheck(
        check_id="phase_recovery", passed=worst <= PHASE_RECOVERY_TOL, residual=worst))

    return GenericityReport(passed=all(c.passed for c in checks), checks=checks)
