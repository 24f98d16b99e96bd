import numpy as np
import pytest

from funnelstates import (
    CapacityError,
    ConfigurationError,
    GenericState,
    LocalOperator,
    build_tower,
    check_genericity,
    minimal_extension_projection,
    relative_commutant_basis,
    sample_generic_state,
)
from funnelstates import numkernel as nk
from funnelstates.funnel import embed_matrix, extension_projection_residual, matrix_units


def test_build_tower_dims():
    tower = build_tower((2, 2, 4))
    assert tower.cumulative_dims == (2, 4, 16)
    assert tower.top_dim == 16


def test_build_tower_capacity_boundary():
    assert build_tower((2, 2)).cumulative_dims == (2, 4)


def test_build_tower_capacity_violation_names_level():
    with pytest.raises(CapacityError, match="level 3"):
        build_tower((2, 2, 2))


def test_build_tower_rejects_trivial_factors():
    with pytest.raises(ConfigurationError):
        build_tower((2, 1, 4))


def test_sample_deterministic(tower):
    s1 = sample_generic_state(tower, seed=5)
    s2 = sample_generic_state(tower, seed=5)
    np.testing.assert_array_equal(s1.lam, s2.lam)


def test_sample_pure_profile(tower):
    s = sample_generic_state(tower, seed=3, profile="pure")
    assert not s.separating
    vals = np.linalg.eigvalsh(s.lam)
    assert vals[-1] == pytest.approx(1.0, abs=1e-12)
    assert abs(vals[-2]) <= 1e-12


def test_sample_near_tracial_spectrum(tower):
    delta = 0.1
    s = sample_generic_state(tower, seed=9, profile="near_tracial", delta=delta)
    d = tower.top_dim
    # by construction lam - (1-delta)/d is delta * (a density matrix)
    remainder = s.lam - (1 - delta) / d * np.eye(d)
    vals = np.linalg.eigvalsh(remainder)
    assert vals[0] >= -1e-12
    assert np.trace(remainder).real == pytest.approx(delta, abs=1e-12)


def test_sample_unknown_profile(tower):
    with pytest.raises(ConfigurationError):
        sample_generic_state(tower, seed=1, profile="bogus")


def test_sample_bounded_redraws(tower):
    from funnelstates import SamplingError

    # an unreachable separation floor exhausts the redraw budget
    with pytest.raises(SamplingError):
        sample_generic_state(tower, seed=1, eps_sep=1.0, max_redraws=3)


def test_embedding_is_unital_star_homomorphism(tower, rng):
    a = nk.random_complex_matrix(rng, 4)
    b = nk.random_complex_matrix(rng, 4)
    emb = lambda m: embed_matrix(tower, 2, m)
    assert nk.frob(emb(a) @ emb(b) - emb(a @ b)) <= 1e-12
    assert nk.frob(nk.dagger(emb(a)) - emb(nk.dagger(a))) <= 1e-12
    assert nk.frob(emb(np.eye(4)) - np.eye(16)) <= 1e-12


def test_expectation_three_ways_agree(state, rng):
    a = nk.random_complex_matrix(rng, 4)
    op = LocalOperator(level=2, matrix=a)
    a_top = state.embed(op)
    direct = np.trace(state.lam @ a_top)
    doubled = np.vdot(state.omega_vector, nk.kron(a_top, np.eye(16)) @ state.omega_vector)
    reduced = np.trace(state.reduced(2) @ a)
    assert abs(direct - doubled) <= 1e-12
    assert abs(direct - reduced) <= 1e-12


def test_genericity_passes_for_random_state(state, rng):
    report = check_genericity(state, trials=50, rng=rng)
    assert report.passed, [c.check_id for c in report.failures]


def test_genericity_pure_fails_separating(pure_state):
    report = check_genericity(pure_state, trials=4)
    failed = {c.check_id for c in report.failures}
    assert "separating" in failed


def test_genericity_tracial_product_fails_lift(tower):
    # sigma tracial on level 1: conjugation by any level-1 unitary fixes the
    # reference density, so distinct unitary rays become indistinguishable.
    rng = np.random.default_rng(0)
    tau = nk.random_complex_matrix(rng, 8)
    tau = tau @ nk.dagger(tau)
    tau /= np.trace(tau).real
    lam = nk.kron(np.eye(2) / 2, tau)
    state = GenericState(tower=tower, lam=lam, profile="random_full_rank",
                         seed=0, eps_sep=1e-12, separating=True)
    report = check_genericity(state, trials=20)
    failed = {c.check_id for c in report.failures}
    assert "lift_injectivity:1" in failed


def test_extension_projection_schmidt_weights(state):
    proj = minimal_extension_projection(state, 1)
    rho1 = state.reduced(1)
    expected = np.sort(np.linalg.eigvalsh(rho1))[::-1]
    np.testing.assert_allclose(proj.schmidt_weights, expected, atol=1e-12)


def test_extension_projection_identity_compression(state):
    proj = minimal_extension_projection(state, 1)
    e = proj.projector
    np.testing.assert_allclose(e @ np.eye(4) @ e, e, atol=1e-14)


def test_extension_projection_matrix_unit_sweep(state):
    for n in (1, 2):
        proj = minimal_extension_projection(state, n)
        assert extension_projection_residual(state, proj) <= 1e-10


def test_extension_projection_deterministic(tower):
    s1 = sample_generic_state(tower, seed=17)
    s2 = sample_generic_state(tower, seed=17)
    p1 = minimal_extension_projection(s1, 1)
    p2 = minimal_extension_projection(s2, 1)
    np.testing.assert_array_equal(p1.vector, p2.vector)


def test_extension_projection_is_rank_one_in_next_level(state):
    proj = minimal_extension_projection(state, 2)
    assert np.linalg.matrix_rank(proj.projector, tol=1e-10) == 1
    assert np.trace(proj.projector).real == pytest.approx(1.0, abs=1e-12)


def test_relative_commutant_basis_counts(tower):
    basis = relative_commutant_basis(tower, 1)
    assert len(basis) == 4  # k_2^2
    assert all(b.matrix.shape == (4, 4) for b in basis)


def test_relative_commutant_commutes_with_lower_level(tower):
    basis = relative_commutant_basis(tower, 1)
    worst = 0.0
    for unit in matrix_units(2):
        u_emb = embed_matrix(tower, 1, unit, 2)
        for b in basis:
            worst = max(worst, nk.frob(u_emb @ b.matrix - b.matrix @ u_emb))
    assert worst <= 1e-12


def test_relative_commutant_span_rank(tower):
    basis = relative_commutant_basis(tower, 2)
    vectors = np.column_stack([b.matrix.ravel() for b in basis])
    gram = nk.dagger(vectors) @ vectors
    assert np.linalg.matrix_rank(gram, tol=1e-10) == tower.factor_dims[2] ** 2
