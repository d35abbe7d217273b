import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hessfrob import cones, expfam
from hessfrob.errors import ConvexityError, DimensionMismatchError, DomainError, SingularMetricError
from hessfrob.hessian_core import (
    Potential,
    christoffel,
    compatibility_residual,
    hessian_metric,
    lower_index,
    ma_residual,
    structure_constants,
    symmetry_residual,
    third_tensor,
    wdvv_residual,
)
from hessfrob.potentials import get_potential


def quadratic(dim):
    return Potential(dim=dim, func=lambda x: 0.5 * float(x @ x))


def cubic_1d():
    return Potential(dim=1, func=lambda x: float(x[0] ** 3) / 6.0)


def brute_force_associator(m):
    n = m.shape[0]
    worst = 0.0
    for a, b, c, d in itertools.product(range(n), repeat=4):
        lhs = sum(m[a, b, e] * m[e, c, d] for e in range(n))
        rhs = sum(m[b, c, e] * m[a, e, d] for e in range(n))
        worst = max(worst, abs(lhs - rhs))
    return worst


class TestHessianMetric:
    def test_quadratic_is_identity(self):
        x = np.array([0.3, -1.2, 2.0])
        assert np.allclose(hessian_metric(quadratic(3), x), np.eye(3), atol=1e-6)

    def test_softmax_at_origin(self):
        pot = expfam.family_potential(expfam.categorical(3))
        expected = np.array([[2, -1], [-1, 2]]) / 9.0
        assert np.allclose(hessian_metric(pot, np.zeros(2)), expected, atol=1e-15)
        assert np.allclose(hessian_metric(pot, np.zeros(2), method="fd"), expected, atol=1e-7)

    def test_logdet_at_identity(self):
        pot = cones.logdet_potential(2, closed_form=False)
        g = hessian_metric(pot, cones.to_coords(np.eye(2)))
        assert np.allclose(g, np.diag([1.0, 2.0, 1.0]), atol=1e-6)

    def test_output_is_exactly_symmetric(self):
        pot = cones.logdet_potential(3, closed_form=False)
        x = cones.to_coords(cones.random_cone_point(np.random.default_rng(3), 3))
        g = hessian_metric(pot, x)
        assert np.array_equal(g, g.T)

    def test_nonconvex_raises(self):
        saddle = Potential(dim=2, func=lambda x: float(x[0] ** 2 - x[1] ** 2))
        with pytest.raises(ConvexityError):
            hessian_metric(saddle, np.zeros(2))

    def test_stencil_outside_domain(self):
        pot = expfam.entropy_chart_potential(2, closed_form=False)
        with pytest.raises(DomainError):
            hessian_metric(pot, np.array([0.3, 0.3]), h=0.5)

    def test_point_outside_domain(self):
        pot = expfam.entropy_chart_potential(2)
        with pytest.raises(DomainError):
            hessian_metric(pot, np.array([0.7, 0.7]))


class TestThirdTensor:
    def test_quadratic_is_zero(self):
        assert np.allclose(third_tensor(quadratic(3), np.ones(3)), 0.0, atol=1e-6)

    def test_cubic_1d(self):
        assert third_tensor(cubic_1d(), np.array([2.0]))[0, 0, 0] == pytest.approx(1.0, abs=1e-5)

    def test_softmax_matches_third_cumulant(self):
        fam = expfam.categorical(3)
        pot = expfam.family_potential(fam)
        exact = expfam.third_cumulant(fam, np.zeros(2))
        # independent oracle: third central moment enumerated over the atoms
        p = np.full(3, 1 / 3)
        F = np.array([[0, 0], [1, 0], [0, 1]], dtype=float)
        c = F - p @ F
        oracle = np.zeros((2, 2, 2))
        for k in range(3):
            oracle += p[k] * np.einsum("a,b,c->abc", c[k], c[k], c[k])
        assert np.allclose(exact, oracle, atol=1e-15)
        assert np.allclose(third_tensor(pot, np.zeros(2), method="fd"), oracle, atol=1e-7)

    def test_pure_function_differencing(self):
        # no closed form at all: nested differences of psi itself
        pot = expfam.entropy_chart_potential(2, closed_form=False)
        x = np.array([0.3, 0.25])
        exact = expfam.entropy_chart_potential(2).third(x)
        rel = np.max(np.abs(third_tensor(pot, x) - exact)) / np.max(np.abs(exact))
        assert rel < 1e-4


@pytest.mark.parametrize("name,dim", [("simplex-entropy", 3), ("softmax", 3), ("logdet-3", 0),
                                      ("quadratic", 4)])
def test_fd_agrees_with_closed_forms(name, dim):
    gp = get_potential(name, dim)
    pot = gp.potential
    rng = np.random.default_rng(11)
    for x in pot.sample(rng, 100):
        g, A = hessian_metric(pot, x), third_tensor(pot, x)
        g_fd, A_fd = hessian_metric(pot, x, method="fd"), third_tensor(pot, x, method="fd")
        assert np.max(np.abs(g_fd - g)) <= 1e-6 * np.max(np.abs(g))
        assert np.max(np.abs(A_fd - A)) <= 1e-6 * max(np.max(np.abs(A)), 1.0)


class TestMaResidual:
    def test_quadratic(self):
        assert ma_residual(quadratic(2), np.array([1.0, 2.0]), lambda x: 1.0) == pytest.approx(0, abs=1e-6)

    def test_entropy_uniform(self):
        pot = expfam.entropy_chart_potential(2, closed_form=False)
        x = np.array([1 / 3, 1 / 3])
        assert ma_residual(pot, x, lambda y: 27.0) == pytest.approx(0, abs=1e-6)

    def test_logdet_at_identity(self):
        pot = cones.logdet_potential(2, closed_form=False)
        assert ma_residual(pot, cones.to_coords(np.eye(2)), lambda y: 2.0) == pytest.approx(0, abs=1e-6)

    def test_self_consistency(self):
        gp = get_potential("softmax", 2)
        pot = gp.potential
        x = np.array([0.4, -0.9])
        assert ma_residual(pot, x, lambda y: np.linalg.det(hessian_metric(pot, y))) == 0.0


class TestStructureConstants:
    def test_zero_tensor(self):
        assert not np.any(structure_constants(np.eye(3), np.zeros((3, 3, 3))))
        assert not np.any(christoffel(np.eye(3), np.zeros((3, 3, 3))))

    def test_one_dimensional(self):
        g, A = np.array([[2.0]]), np.ones((1, 1, 1))
        assert structure_constants(g, A)[0, 0, 0] == 0.5
        assert christoffel(g, A)[0, 0, 0] == 0.25

    def test_identity_metric(self):
        A = np.random.default_rng(1).normal(size=(3, 3, 3))
        assert np.allclose(structure_constants(np.eye(3), A), A, atol=0)

    def test_christoffel_is_half(self):
        pot = expfam.entropy_chart_potential(2)
        x = np.array([1 / 3, 1 / 3])
        g, A = hessian_metric(pot, x), third_tensor(pot, x)
        assert np.allclose(christoffel(g, A), 0.5 * structure_constants(g, A), atol=0)

    def test_singular_metric(self):
        with pytest.raises(SingularMetricError):
            structure_constants(np.zeros((2, 2)), np.zeros((2, 2, 2)))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            structure_constants(np.eye(2), np.zeros((3, 3, 3)))

    def test_lowering_undoes_raising(self):
        rng = np.random.default_rng(5)
        B = rng.normal(size=(4, 4))
        g = B @ B.T + 4 * np.eye(4)
        A = rng.normal(size=(4, 4, 4))
        A = sum(A.transpose(p) for p in itertools.permutations(range(3))) / 6
        m = structure_constants(g, A)
        assert np.max(np.abs(lower_index(m, g) - A)) <= 1e-12
        assert compatibility_residual(g, A, m) <= 1e-12


class TestCompatibility:
    def test_entropy_fd_inputs(self):
        pot = expfam.entropy_chart_potential(2, closed_form=False)
        x = np.array([0.2, 0.5])
        g, A = hessian_metric(pot, x), third_tensor(pot, x)
        assert compatibility_residual(g, A, structure_constants(g, A)) <= 1e-6

    def test_asymmetry_is_measured(self):
        g = np.eye(2)
        A = np.zeros((2, 2, 2))
        A[0, 1, 1] = A[1, 0, 1] = A[1, 1, 0] = 0.5
        m = structure_constants(g, A)
        assert compatibility_residual(g, A, m) == 0.0
        B = A.copy()
        B[0, 1, 1] += 1e-3
        # lowering still reproduces B (same g); only the symmetry part sees it
        assert compatibility_residual(g, B, structure_constants(g, B)) == pytest.approx(1e-3, rel=1e-9)
        assert symmetry_residual(B) == pytest.approx(1e-3, rel=1e-9)


class TestWdvv:
    def test_one_dimensional(self):
        assert wdvv_residual(np.array([[[3.7]]])) == 0.0

    def test_diagonal_table(self):
        m = np.zeros((4, 4, 4))
        for a in range(4):
            m[a, a, a] = a + 1.5
        assert wdvv_residual(m) == 0.0

    def test_random_table_matches_brute_force(self):
        m = np.random.default_rng(2024).normal(size=(3, 3, 3))
        value = wdvv_residual(m)
        assert value > 0
        assert value == pytest.approx(brute_force_associator(m), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=4), st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_wdvv_brute_force_property(n, seed):
    m = np.random.default_rng(seed).normal(size=(n, n, n))
    assert wdvv_residual(m) == pytest.approx(brute_force_associator(m), rel=1e-12, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(min_value=-3, max_value=3), min_size=2, max_size=2))
def test_softmax_metric_positive_definite(theta):
    pot = expfam.family_potential(expfam.categorical(3))
    g = hessian_metric(pot, np.array(theta))
    assert np.all(np.linalg.eigvalsh(g) > 0)
