import numpy as np
import pytest
from scipy import linalg


from conley_lab.errors import DegeneracyError, NonSymplecticInputError, SolvabilityError
from conley_lab.generating_functions import (
    generating_function,
    hamiltonian_from_gf,
    interpolated_matrix,
    linear_gf,
    linear_interpolated_flow,
    NearIdentityMap,
    PolynomialFunction,
    probe_grid,
    simpson_weights,
    SmoothFunction,
    SmoothstepProfile,
    )
from conley_lab.hamiltonians import builtin, flow
from conley_lab.symplectic import LagrangianSplitting, standard_j


def small_symplectic(n, rng, scale = 0.1):
    a = rng.normal(size = (2 * n, 2 * n))
    return linalg.expm(scale * standard_j(n) @ (a + a.T) / 2)


def test_probe_grid_and_weights():
    grid = probe_grid(1, 1.0)
    assert np.all(np.linalg.norm(grid, axis = -1) <= 1 + 1e-12)
    assert any(np.allclose(point, 0) for point in grid)
    assert probe_grid(2, 0.5).shape[1] == 4
    assert simpson_weights(8).sum() == pytest.approx(1.0)


def test_linear_gf_of_shear():
    shear = np.array([[1.0, 0.3], [0.0, 1.0]])
    assert np.allclose(linear_gf(shear), [[0.0, 0.0], [0.0, -0.3]])
    assert np.allclose(linear_gf(shear, split = LagrangianSplitting.standard(1)), [[0.0, 0.0], [0.0, -0.3]])


def test_linear_gf_failures():
    with pytest.raises(DegeneracyError):
        linear_gf(standard_j(1))
    with pytest.raises(NonSymplecticInputError):
        linear_gf(np.diag([2.0, 1.0]))
    with pytest.raises(SolvabilityError):
        interpolated_matrix(np.diag([1.0, -1.0]), 1.0)


@pytest.mark.parametrize("n", [1, 2])
def test_interpolated_flow_ends_at_the_map(n):
    rng = np.random.default_rng(20 + n)
    for _ in range(10):
        matrix = small_symplectic(n, rng)
        path = linear_interpolated_flow(matrix)
        assert np.allclose(path.matrices[0], np.eye(2 * n))
        assert np.allclose(path.end, matrix, atol = 1e-10)


def test_generating_function_of_linear_map():
    rng = np.random.default_rng(30)
    matrix = small_symplectic(1, rng, scale = 0.05)
    F = generating_function(NearIdentityMap.from_matrix(matrix, radius = 0.1))
    assert F.closedness_residual < 1e-8
    assert np.allclose(F.hessian_at_fixed_point, linear_gf(matrix), atol = 1e-10)
    w = np.array([0.03, -0.04])
    assert float(F.value(w)) == pytest.approx(0.5 * w @ linear_gf(matrix) @ w, abs = 1e-12)
    assert 0 < F.gf2_constant() < 10
    assert list(F.sample_table().columns) == ['x1', 'y1', 'F']


def test_far_from_identity_is_refused():
    with pytest.raises(SolvabilityError):
        generating_function(NearIdentityMap.from_matrix(np.array([[1.0, 1.0], [0.0, 1.0]])))


def test_generated_map_round_trip():
    mapping = NearIdentityMap.from_flow(builtin('flat_maximum'), radius = 0.1, step = 0.05)
    F = generating_function(mapping)
    assert np.allclose(F.hessian_at_fixed_point, 0, atol = 1e-12)
    regenerated = NearIdentityMap.from_generating_function(F, radius = 0.1)
    points = np.array([[0.05, 0.02], [-0.03, 0.07], [0.0, -0.09]])
    assert np.allclose(regenerated(points), mapping(points), atol = 1e-10)
    assert regenerated.symplectic_defect() < 1e-8


def test_polynomial_fit_recovers_a_polynomial():
    function = SmoothFunction.from_expression('x^2/2 - y^2 + x^3*y', n = 1)
    polynomial, residual = PolynomialFunction.fit(function, 0.5)
    assert residual < 1e-10
    assert np.allclose(polynomial.hessian(np.zeros(2)), [[1.0, 0.0], [0.0, -2.0]])
    w = np.array([0.2, -0.3])
    assert float(polynomial.value(w)) == pytest.approx(float(function.value(w)), abs = 1e-10)


def test_smoothstep_profile():
    profile = SmoothstepProfile()
    assert profile(0.0) == 0.0
    assert profile(1.0) == 1.0
    assert profile(0.5) == pytest.approx(0.5)
    assert profile.derivative(0.05) == 0.0
    assert profile.derivative(0.95) == 0.0


def test_hamiltonian_from_quadratic_gf():
    quadratic_form = 0.1 * np.array([[1.0, 0.3], [0.3, -0.5]])
    F = SmoothFunction.quadratic(quadratic_form)
    K = hamiltonian_from_gf(F, step = 0.02)
    generated = NearIdentityMap.from_generating_function(F)
    _, jacobian = generated.forward(np.zeros(2))
    assert np.allclose(K.linearized_flow(1.0), jacobian, atol = 1e-10)
    assert np.allclose(K.linear_hessian(0.0), quadratic_form)
    w0 = np.array([0.02, -0.01])
    end_point = flow(K, w0, 0.0, 1.0, step = 0.01, order = 4).end_point
    assert np.allclose(end_point, generated(w0), atol = 1e-6)
    estimates = K.estimates(t_samples = 4, points = np.array([[0.01, 0.0], [0.0, 0.01]]))
    assert estimates['max_fixed_point_value'] == 0.0
    assert estimates['hessian_ratio'] >= 1.0 - 1e-12


def random_generating_polynomial(n, rng, radius = 0.1):
    scale = rng.uniform(0.005, 0.03)
    a = rng.normal(size = (2 * n, 2 * n))
    quadratic_form = scale * (a + a.T) / np.linalg.norm(a + a.T, 2)
    exponents = PolynomialFunction.monomial_exponents(2 * n, 4)
    coefficients = 0.1 * scale * radius ** 2 * rng.uniform(-1, 1, size = len(exponents)) / len(exponents)
    return PolynomialFunction(quadratic_form, coefficients, exponents, radius)


@pytest.mark.parametrize("n, count", [(1, 20), (2, 10)])
def test_generating_function_round_trip(n, count):
    rng = np.random.default_rng(40 + n)
    for _ in range(count):
        G = random_generating_polynomial(n, rng)
        mapping = NearIdentityMap.from_generating_function(G, radius = 0.1)
        if n > 1:
            mapping.probe_points = 7
        assert mapping.c1_distance < 0.1
        F = generating_function(mapping)
        grid = mapping.probe()
        assert np.max(np.abs(F.value(grid) - G.value(grid))) < 1e-7
        regenerated = NearIdentityMap.from_generating_function(F, radius = 0.1)
        assert np.max(np.abs(regenerated(grid) - mapping(grid))) < 1e-7
        # The quadratic part of F is fixed by dφ_p alone
        _, jacobian = mapping.forward(np.zeros(2 * n))
        hessian = F.hessian_at_fixed_point
        assert np.max(np.abs(hessian - linear_gf(jacobian))) < 1e-9
        assert np.linalg.norm(hessian, 2) == pytest.approx(np.linalg.norm(linear_gf(jacobian), 2), abs = 1e-9)
        assert 0.5 < np.linalg.norm(hessian, 2) / np.linalg.norm(jacobian - np.eye(2 * n), 2) < 2


def test_generated_hamiltonian_reproduces_the_map():
    rng = np.random.default_rng(60)
    times = np.arange(16) / 16
    for _ in range(10):
        G = random_generating_polynomial(1, rng)
        K = hamiltonian_from_gf(G, step = 0.02)
        generated = NearIdentityMap.from_generating_function(G, radius = 0.1)
        points = 0.03 * rng.uniform(-1, 1, size = (8, 2))
        end_points = flow(K, points, 0.0, 1.0, step = 0.02, order = 4, energy = False).end_point
        assert np.max(np.abs(end_points - generated(points))) < 1e-6
        assert max(abs(float(K.evaluate(t, np.zeros(2)))) for t in times) < 1e-15
        for t in (0.0, 0.05, 0.95, 0.99):
            assert np.allclose(K.evaluate(t, points), G.value(points), rtol = 0, atol = 1e-15)
            assert np.allclose(K.grad(t, points), G.gradient(points), rtol = 0, atol = 1e-15)
