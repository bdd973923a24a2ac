import itertools

import numpy as np
import pytest
from conftest import chain, random_set, rel, solved
from hypothesis import given, settings
from hypothesis import strategies as st

from bethe import oracle, scalar
from bethe.errors import AmbiguousMatch, MissingTerm, OffShellError, UnstableLimit
from bethe.model import tau, tau_residue
from bethe.rat_core import g

seeds = st.integers(0, 2**32 - 1)
X0, U0 = (-0.5,), (1.0,)


def test_j_entry_n1(hom2):
    np.testing.assert_allclose(scalar.j_entry(1.0, 0, X0, hom2), -2, rtol=1e-15)
    u, x = 0.3 + 0.4j, -0.8 + 0.1j
    closed = g(x, u, 1.0) * (hom2.lam(1, u) - hom2.lam(2, u))
    np.testing.assert_allclose(scalar.j_entry(u, 0, (x,), hom2), closed, rtol=1e-14)


def test_j_entry_two_forms_agree():
    # the explicit form uses t = g / h; the derivative form does not
    model = chain(4)
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 5))
        xs = random_set(rng, n)
        (u,) = random_set(rng, 1)
        k = int(rng.integers(n))
        worst = max(worst, rel(scalar.j_entry(u, k, xs, model), scalar.j_entry_derivative(u, k, xs, model)))
    assert worst < 1e-11


def test_determinant_examples(hom2):
    assert scalar.slavnov_det((), (), hom2) == 1
    np.testing.assert_allclose(scalar.slavnov_det(X0, U0, hom2), -2, rtol=1e-15)
    np.testing.assert_allclose(scalar.hny_form(X0, U0, 1, hom2), -2, rtol=1e-15)
    np.testing.assert_allclose(scalar.scalar_sum_form(X0, U0, hom2), -2, rtol=1e-15)
    np.testing.assert_allclose(scalar.extract_coefficient(X0, U0, hom2), -2, rtol=1e-14)


def test_on_shell_is_enforced(hom2):
    with pytest.raises(OffShellError):
        scalar.slavnov_det((0.3,), U0, hom2)
    with pytest.raises(OffShellError):
        scalar.extract_coefficient((0.3,), U0, hom2)
    with pytest.raises(OffShellError):
        scalar.hny_form((0.3,), U0, 1, hom2)
    value = scalar.slavnov_det((0.3,), U0, hom2, unchecked=True)
    np.testing.assert_allclose(value, scalar.j_entry(1.0, 0, (0.3,), hom2))


def test_argument_checks(hom2):
    with pytest.raises(ValueError):
        scalar.slavnov_det(X0, (1.0, 2.0), hom2)
    with pytest.raises(ValueError):
        scalar.hny_form(X0, U0, 2, hom2)
    with pytest.raises(ValueError):
        scalar.sum_jm_check(1, 1, U0, X0, hom2)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_four_routes_agree(n):
    model, sets = solved(max(4, 2 * n), n)
    rng = np.random.default_rng(n)
    for xs in sets[:3]:
        for _ in range(3):
            us = random_set(rng, n)
            det = scalar.slavnov_det(xs, us, model)
            for m in range(1, n + 1):
                assert rel(scalar.hny_form(xs, us, m, model), det) < 1e-9
            assert rel(scalar.scalar_sum_form(xs, us, model), det) < 1e-9
            assert rel(scalar.extract_coefficient(xs, us, model), det) < 1e-8


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(1, 4), st.data())
def test_sum_jm_identity(seed, n, data):
    # algebraic identity: holds off-shell as well
    m = data.draw(st.integers(1, n))
    j = data.draw(st.integers(0, m - 1))
    rng = np.random.default_rng(seed)
    model = chain(4)
    xs, us = random_set(rng, n), random_set(rng, n)
    lhs, rhs = scalar.sum_jm_check(m, j, us, xs, model)
    assert rel(lhs, rhs) < 1e-10


def test_sum_jm_first_case_is_tight():
    rng = np.random.default_rng(2)
    model = chain(3)
    for _ in range(20):
        xs, us = random_set(rng, 3), random_set(rng, 3)
        lhs, rhs = scalar.sum_jm_check(1, 0, us, xs, model)
        assert rel(lhs, rhs) < 1e-12


def test_sum_jm_sides_do_not_vanish_on_shell():
    model, sets = solved(4, 2)
    us = (0.2 + 0.3j, -0.4 + 0.7j)
    lhs, rhs = scalar.sum_jm_check(2, 0, us, sets[0], model)
    assert abs(lhs) > 1e-3 and rel(lhs, rhs) < 1e-10


@settings(max_examples=20, deadline=None)
@given(seeds, st.permutations(range(3)))
def test_determinant_permutation_invariance(seed, perm):
    model, sets = solved(6, 3)
    xs = sets[seed % len(sets)]
    us = random_set(np.random.default_rng(seed), 3)
    det = scalar.slavnov_det(xs, us, model)
    assert rel(scalar.slavnov_det(xs, [us[i] for i in perm], model), det) < 1e-12
    assert rel(scalar.slavnov_det([xs[i] for i in perm], us, model), det) < 1e-12


def test_action_on_shell_and_empty():
    model, sets = solved(4, 2)
    xs = sets[0]
    z = 0.7 - 0.4j
    out = scalar.apply_transfer(z, scalar.StateExpansion.single(xs), model)
    assert len(out) == 1
    assert rel(out.coefficient(xs), tau(z, xs, model)) < 1e-14
    empty = scalar.apply_transfer(z, scalar.StateExpansion.single(()), model)
    assert len(empty) == 1
    np.testing.assert_allclose(empty.coefficient(()), tau(z, (), model))


def test_action_n1_off_shell(hom2):
    z, u = 0.3 + 0.2j, 1.1 - 0.5j
    out = scalar.apply_transfer(z, scalar.StateExpansion.single((u,)), hom2)
    assert len(out) == 2
    np.testing.assert_allclose(out.coefficient((u,)), tau(z, (u,), hom2), rtol=1e-14)
    np.testing.assert_allclose(out.coefficient((z,)), g(z, u, 1.0) * (hom2.lam(1, u) - hom2.lam(2, u)), rtol=1e-14)


@pytest.mark.parametrize("mode", ["periodic", "reflection"])
def test_action_matches_operator(mode):
    rng = np.random.default_rng(23)
    model = chain(4, mode)
    for n in (1, 2):
        us = random_set(rng, n)
        (z,) = random_set(rng, 1)
        assert scalar.action_residual(z, us, model) < 1e-10


def test_state_expansion_keys():
    state = scalar.StateExpansion.single((1.0, 2.0))
    state.add((2.0, 1.0 + 1e-12), 0.5)
    assert len(state) == 1
    np.testing.assert_allclose(state.coefficient((2.0, 1.0)), 1.5)
    with pytest.raises(MissingTerm):
        state.coefficient((1.0, 3.0))
    state.add((3.0, 1.0), 1e-20)
    assert len(state.prune()) == 1
    near = scalar.StateExpansion(terms=[((1.0,), 1.0), ((1.0 + 1.5e-9,), 1.0)], match_tol=1e-9)
    assert len(near) == 2
    with pytest.raises(AmbiguousMatch):
        near.add((1.0 + 0.75e-9,), 1.0)


def test_reflection_determinant_matches_action():
    rng = np.random.default_rng(29)
    for n in (1, 2):
        model, sets = solved(4, n, "reflection")
        for xs in sets:
            us = random_set(rng, n)
            assert rel(scalar.extract_coefficient(xs, us, model), scalar.reflection_det(xs, us, model)) < 1e-8


def test_reflection_determinant_sign_choice():
    # flipping a root changes B(x) by a scalar; both sides of the theorem follow it
    rng = np.random.default_rng(31)
    model, sets = solved(4, 2, "reflection")
    us = random_set(rng, 2)
    for xs in sets[:3]:
        flipped = (-xs[0], xs[1])
        det_ratio = scalar.reflection_det(flipped, us, model) / scalar.reflection_det(xs, us, model)
        act_ratio = scalar.extract_coefficient(flipped, us, model) / scalar.extract_coefficient(xs, us, model)
        assert rel(act_ratio, det_ratio) < 1e-9


def test_reflection_determinant_empty_and_mode():
    assert scalar.reflection_det((), (), chain(2, "reflection")) == 1
    with pytest.raises(ValueError):
        scalar.reflection_det((), (), chain(2))


def test_gaudin_norm_examples(hom2):
    np.testing.assert_allclose(scalar.gaudin_norm(X0, hom2), -2, rtol=1e-9)
    assert scalar.gaudin_norm((), hom2) == 1
    with pytest.raises(UnstableLimit):
        scalar.gaudin_norm(X0, hom2, stability=0.0)


@pytest.mark.parametrize("mode", ["periodic", "reflection"])
def test_gaudin_norm_is_direction_independent(mode):
    for n in (1, 2):
        model, sets = solved(4, n, mode)
        for xs in sets[:2]:
            a = scalar.gaudin_norm(xs, model, rng=np.random.default_rng(1))
            b = scalar.gaudin_norm(xs, model, rng=np.random.default_rng(2))
            assert rel(a, b) < 1e-6


def test_periodic_normalization_is_lambda2():
    # oracle pairing = prod_k lambda_2(x_k) * determinant, for every u
    rng = np.random.default_rng(37)
    for n in (1, 2, 3):
        model, sets = solved(max(4, 2 * n), n)
        for xs in sets[:2]:
            kappa = np.prod([model.lam(2, x) for x in xs])
            for _ in range(3):
                us = random_set(rng, n)
                value = oracle.inner_product(oracle.dual_bethe_vector(xs, model), oracle.bethe_vector(us, model))
                assert rel(value, kappa * scalar.slavnov_det(xs, us, model)) < 1e-8


def test_on_shell_pair_by_sum_form():
    # both sets on-shell: the residue chain still reproduces the oracle up to lambda_2(x)
    model, sets = solved(6, 2)
    xs, ys = sets[0], sets[1]
    kappa = np.prod([model.lam(2, x) for x in xs])
    value = oracle.inner_product(oracle.dual_bethe_vector(xs, model), oracle.bethe_vector(ys, model))
    sym = scalar.scalar_sum_form(xs, ys, model)
    norm = np.linalg.norm(oracle.dual_bethe_vector(xs, model)) * np.linalg.norm(oracle.bethe_vector(ys, model))
    assert abs(kappa * sym - value) < 1e-9 * norm
    assert all(abs(tau_residue(j, ys, model)) < 1e-8 for j in range(2))


def test_symmetrized_forms_refuse_large_n():
    model = chain(1)
    xs = tuple(complex(k) for k in range(7))
    us = tuple(complex(k, 1) for k in range(7))
    with pytest.raises(ValueError):
        scalar.scalar_sum_form(xs, us, model, unchecked=True)


def test_orthogonality_of_distinct_states():
    for mode, n, sites in (("periodic", 2, 6), ("periodic", 3, 6), ("reflection", 2, 4)):
        model, sets = solved(sites, n, mode)
        for a, b in itertools.combinations(sets, 2):
            dual, vec = oracle.dual_bethe_vector(a, model), oracle.bethe_vector(b, model)
            assert abs(oracle.inner_product(dual, vec)) < 1e-9 * np.linalg.norm(dual) * np.linalg.norm(vec)
