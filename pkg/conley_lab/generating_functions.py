"""Generating functions of near-identity symplectic maps and the Hamiltonians they define.

Everything here lives in the coordinates w = (x, y) of a symplectic frame
centred at a fixed point p. A function F of the mixed coordinates (x̄, y)
generates the map (x, y) -> (x̄, ȳ) through

    x̄ - x = -∂_y F(x̄, y),    ȳ - y = ∂_x F(x̄, y).

For the shear (x, y) -> (x + εy, y) one gets F = -½εy²:

    >>> import numpy as np
    >>> linear_gf(np.array([[1.0, 0.5], [0.0, 1.0]])).round(12).tolist()
    [[0.0, 0.0], [0.0, -0.5]]
"""


import collections
import itertools
import logging


import numpy as np
import pandas as pd
from scipy import linalg


from conley_lab.errors import (
    DegeneracyError,
    NonSymplecticInputError,
    PreconditionError,
    ShrinkRadiusError,
    SolvabilityError,
    )
from conley_lab.expressions import compile_expression, hamiltonian_aliases, hamiltonian_variable_names
from conley_lab.hamiltonians import flow, HamiltonianField
from conley_lab.indices import SymplecticPath
from conley_lab.symplectic import half_dimension, LagrangianSplitting, standard_j, standard_omega, SymplecticFrame


log = logging.getLogger(__name__)


SOLVABILITY_THRESHOLD = 0.2
CLOSEDNESS_TOL = 1e-6
SIMPSON_INTERVALS = 64
NEWTON_TOL = 1e-13
NEWTON_MAX_ITERATIONS = 30


def probe_grid(n, radius, points = None):
    """Lattice points of the cube [-r, r]^{2n} lying in the closed ball of radius r."""
    if points is None:
        points = 33 if n == 1 else 9
    axis = np.linspace(-radius, radius, points)
    grid = np.stack(np.meshgrid(*([axis] * (2 * n)), indexing = 'ij'), axis = -1).reshape(-1, 2 * n)
    return grid[np.linalg.norm(grid, axis = -1) <= radius * (1 + 1e-12)]


def simpson_weights(intervals = SIMPSON_INTERVALS):
    assert intervals % 2 == 0
    weights = np.ones(intervals + 1)
    weights[1:-1:2] = 4
    weights[2:-1:2] = 2
    return weights / (3 * intervals)


class SmoothFunction(object):
    """Autonomous scalar function of w in R^{2n} with gradient and Hessian, vectorized."""
    name = None

    def __init__(self, value = None, gradient = None, hessian = None, n = None, name = None):
        assert value is not None and gradient is not None and hessian is not None
        self.value = value
        self.gradient = gradient
        self.hessian = hessian
        self.n = n
        self.name = name

    def __repr__(self):
        return "SmoothFunction({}, n = {})".format(self.name, self.n)

    @classmethod
    def from_expression(cls, text, n = 1):
        compiled = compile_expression(text, hamiltonian_variable_names(n), aliases = hamiltonian_aliases(n))

        def coordinates(w):
            w = np.asarray(w, dtype = float)
            return [w[..., i] for i in range(2 * n)]

        return cls(
            value = lambda w: compiled.value(*coordinates(w)),
            gradient = lambda w: compiled.gradient(*coordinates(w)),
            hessian = lambda w: compiled.hessian(*coordinates(w)),
            n = n,
            name = text,
            )

    @classmethod
    def quadratic(cls, matrix, name = None):
        matrix = np.array(matrix, dtype = float)
        return cls(
            value = lambda w: 0.5 * np.einsum('...i,ij,...j->...', w, matrix, w),
            gradient = lambda w: np.asarray(w) @ matrix,
            hessian = lambda w: np.broadcast_to(matrix, np.shape(w)[:-1] + matrix.shape),
            n = half_dimension(matrix),
            name = name if name is not None else 'quadratic',
            )

    def as_hamiltonian(self):
        return HamiltonianField(
            value = lambda t, z: self.value(z),
            gradient = lambda t, z: self.gradient(z),
            hessian = lambda t, z: self.hessian(z),
            n = self.n,
            autonomous = True,
            name = self.name,
            )


class PolynomialFunction(SmoothFunction):
    """½ wᵀQw + Σ c_α (w/r)^α over monomials of degree 3..degree."""

    def __init__(self, quadratic_form, coefficients, exponents, scale, name = None):
        self.quadratic_form = np.array(quadratic_form, dtype = float)
        self.coefficients = np.asarray(coefficients, dtype = float)
        self.exponents = np.asarray(exponents, dtype = int).reshape(-1, self.quadratic_form.shape[0])
        self.scale = float(scale)
        self.radius = self.scale
        SmoothFunction.__init__(
            self,
            value = self._value,
            gradient = self._gradient,
            hessian = self._hessian,
            n = half_dimension(self.quadratic_form),
            name = name if name is not None else 'polynomial',
            )

    @staticmethod
    def monomial_exponents(dimension, degree):
        exponents = list()
        for total in range(3, degree + 1):
            for combination in itertools.combinations_with_replacement(range(dimension), total):
                exponent = np.zeros(dimension, dtype = int)
                for index in combination:
                    exponent[index] += 1
                exponents.append(exponent)
        return np.array(exponents, dtype = int).reshape(-1, dimension)

    @staticmethod
    def _powers(u, exponents):
        return np.prod(u[..., np.newaxis, :] ** exponents, axis = -1)

    @staticmethod
    def _derivative_exponents(exponents, index):
        factors = exponents[:, index].astype(float)
        lowered = exponents.copy()
        lowered[:, index] = np.maximum(lowered[:, index] - 1, 0)
        return factors, lowered

    def _value(self, w):
        w = np.asarray(w, dtype = float)
        u = w / self.scale
        return 0.5 * np.einsum('...i,ij,...j->...', w, self.quadratic_form, w) + self._powers(u, self.exponents) @ self.coefficients

    def gradient_design(self, w):
        """Matrix of d/dw_i of each scaled monomial, shape (..., 2n, monomials)."""
        u = np.asarray(w, dtype = float) / self.scale
        columns = list()
        for index in range(u.shape[-1]):
            factors, lowered = self._derivative_exponents(self.exponents, index)
            columns.append(factors * self._powers(u, lowered) / self.scale)
        return np.stack(columns, axis = -2)

    def _gradient(self, w):
        w = np.asarray(w, dtype = float)
        return w @ self.quadratic_form + self.gradient_design(w) @ self.coefficients

    def _hessian(self, w):
        w = np.asarray(w, dtype = float)
        u = w / self.scale
        dimension = u.shape[-1]
        hessian = np.broadcast_to(self.quadratic_form, w.shape[:-1] + (dimension, dimension)).copy()
        for i in range(dimension):
            factors_i, lowered_i = self._derivative_exponents(self.exponents, i)
            for j in range(i, dimension):
                factors_j, lowered_ij = self._derivative_exponents(lowered_i, j)
                entry = (factors_i * factors_j * self._powers(u, lowered_ij)) @ self.coefficients / self.scale ** 2
                hessian[..., i, j] += entry
                if i != j:
                    hessian[..., j, i] += entry
        return hessian

    @classmethod
    def fit(cls, function, radius, degree = None, points = None):
        """Least-squares fit to the gradient of function on the probe grid, keeping its Hessian at 0.

        Returns the polynomial and the relative gradient residual of the fit.
        """
        n = function.n
        dimension = 2 * n
        if degree is None:
            degree = 8 if n == 1 else 6
        quadratic_form = np.asarray(function.hessian(np.zeros(dimension)), dtype = float)
        quadratic_form = (quadratic_form + quadratic_form.T) / 2
        exponents = cls.monomial_exponents(dimension, degree)
        polynomial = cls(quadratic_form, np.zeros(len(exponents)), exponents, radius)
        grid = probe_grid(n, radius, points = points)
        target = np.asarray(function.gradient(grid)) - grid @ quadratic_form
        design = polynomial.gradient_design(grid).reshape(-1, len(exponents))
        coefficients = np.linalg.lstsq(design, target.reshape(-1), rcond = None)[0]
        polynomial.coefficients = coefficients
        residual = np.max(np.abs(design @ coefficients - target.reshape(-1)))
        relative = residual / max(np.max(np.abs(function.gradient(grid))), np.finfo(float).tiny)
        log.debug("Polynomial fit of degree {} on {} points: relative residual {:.3e}".format(degree, len(grid), relative))
        return polynomial, float(relative)


class NearIdentityMap(object):
    """A symplectic map near the identity on the ball of given radius in frame coordinates.

    ``forward`` maps points w of shape (..., 2n) to (φ(w), Dφ(w)).
    """
    frame = None
    radius = None

    def __init__(self, forward = None, n = None, radius = None, frame = None, name = None, probe_points = None):
        assert forward is not None and n is not None and radius is not None and radius > 0
        self.forward = forward
        self.n = n
        self.radius = float(radius)
        self.frame = frame if frame is not None else SymplecticFrame.standard(n)
        self.name = name
        self.probe_points = probe_points
        self._c1_distance = None

    def __repr__(self):
        return "NearIdentityMap({}, n = {}, radius = {})".format(self.name, self.n, self.radius)

    def __call__(self, w):
        return self.forward(np.asarray(w, dtype = float))[0]

    def probe(self):
        return probe_grid(self.n, self.radius, points = self.probe_points)

    @property
    def c1_distance(self):
        """max of ‖φ - id‖ and ‖Dφ - I‖ over the probe grid."""
        if self._c1_distance is None:
            grid = self.probe()
            image, jacobian = self.forward(grid)
            c0 = np.max(np.linalg.norm(image - grid, axis = -1))
            c1 = np.max(np.linalg.norm(jacobian - np.eye(2 * self.n), ord = 2, axis = (-2, -1)))
            self._c1_distance = float(max(c0, c1))
        return self._c1_distance

    def symplectic_defect(self):
        grid = self.probe()
        _, jacobian = self.forward(grid)
        j = standard_j(self.n)
        return float(np.max(np.abs(np.swapaxes(jacobian, -1, -2) @ j @ jacobian - j)))

    @classmethod
    def from_matrix(cls, matrix, radius = 1.0, frame = None):
        matrix = np.array(matrix, dtype = float)
        n = half_dimension(matrix)

        def forward(w):
            return w @ matrix.T, np.broadcast_to(matrix, w.shape[:-1] + matrix.shape)

        return cls(forward = forward, n = n, radius = radius, frame = frame, name = 'linear')

    @classmethod
    def from_flow(cls, H, frame = None, radius = 0.1, step = 0.05, order = 4):
        """Time-one map of H about the frame's base point, in frame coordinates."""
        frame = frame if frame is not None else SymplecticFrame.standard(H.n)
        columns = frame.matrix
        inverse = np.linalg.inv(columns)

        def forward(w):
            z = frame.base_point + w @ columns.T
            result = flow(H, z, 0.0, H.period, step = step, order = order, energy = False)
            image = (H.difference(result.lifted_end_point, frame.base_point)) @ inverse.T
            return image, inverse @ result.monodromy @ columns

        return cls(forward = forward, n = H.n, radius = radius, frame = frame, name = 'time-one map of {}'.format(H.name))

    @classmethod
    def from_generating_function(cls, F, radius = 0.1, frame = None):
        """Map generated by F: x̄ = x - F_y(x̄, y) solved by Newton, ȳ = y + F_x(x̄, y)."""
        n = F.n
        identity = np.eye(n)

        def forward(w):
            w = np.asarray(w, dtype = float)
            x, y = w[..., :n], w[..., n:]
            x_bar = x.copy()
            for iteration in range(NEWTON_MAX_ITERATIONS):
                mixed = np.concatenate([x_bar, y], axis = -1)
                residual = x_bar + F.gradient(mixed)[..., n:] - x
                if np.max(np.abs(residual)) <= NEWTON_TOL * (1 + np.max(np.abs(x))):
                    break
                hessian = F.hessian(mixed)
                x_bar = x_bar - np.linalg.solve(identity + hessian[..., n:, :n], residual[..., np.newaxis])[..., 0]
            else:
                raise SolvabilityError("Implicit equation for x̄ did not converge (residual {:.3e})".format(
                    np.max(np.abs(residual))))
            mixed = np.concatenate([x_bar, y], axis = -1)
            gradient = F.gradient(mixed)
            hessian = F.hessian(mixed)
            y_bar = y + gradient[..., :n]
            f_xx, f_xy = hessian[..., :n, :n], hessian[..., :n, n:]
            f_yx, f_yy = hessian[..., n:, :n], hessian[..., n:, n:]
            # dx̄ = (I + F_yx)⁻¹ (dx - F_yy dy),  dȳ = dy + F_xx dx̄ + F_xy dy
            inverse = np.linalg.inv(identity + f_yx)
            dx_bar_dx = inverse
            dx_bar_dy = -inverse @ f_yy
            dy_bar_dx = f_xx @ dx_bar_dx
            dy_bar_dy = identity + f_xx @ dx_bar_dy + f_xy
            jacobian = np.concatenate([
                np.concatenate([dx_bar_dx, dx_bar_dy], axis = -1),
                np.concatenate([dy_bar_dx, dy_bar_dy], axis = -1),
                ], axis = -2)
            return np.concatenate([x_bar, y_bar], axis = -1), jacobian

        return cls(forward = forward, n = n, radius = radius, frame = frame, name = 'generated by {}'.format(F.name))


def split_frame(split):
    """Symplectic basis whose x-group spans L and y-group spans L′."""
    pairing = split.L.T @ standard_omega(split.n) @ split.L_prime
    return np.hstack([split.L, split.L_prime @ np.linalg.inv(pairing)])


def linear_gf(matrix, split = None):
    """Quadratic form Q with Φ - I = X_Q P(Φ), X_Q = J Q, in the coordinates of the splitting.

    P(Φ) replaces the y-rows of Φ by those of the identity.
    """
    matrix = np.array(matrix, dtype = float)
    n = half_dimension(matrix)
    if split is not None and not isinstance(split, LagrangianSplitting):
        raise PreconditionError("Expected a LagrangianSplitting, got {}".format(type(split)))
    if split is not None:
        basis = split_frame(split)
        matrix = np.linalg.solve(basis, matrix @ basis)
    projected = matrix.copy()
    projected[n:, :] = np.eye(2 * n)[n:, :]
    if abs(np.linalg.det(matrix[:n, :n])) < 1e-12:
        raise DegeneracyError("P(Φ) is singular: the x-block of Φ is not invertible")
    vector_field = (matrix - np.eye(2 * n)) @ np.linalg.inv(projected)
    quadratic_form = -standard_j(n) @ vector_field
    asymmetry = np.max(np.abs(quadratic_form - quadratic_form.T))
    if asymmetry > 1e-8 * max(1.0, np.max(np.abs(quadratic_form))):
        raise NonSymplecticInputError("Quadratic form is not symmetric (defect {:.3e}): Φ is not symplectic".format(asymmetry))
    return (quadratic_form + quadratic_form.T) / 2


def interpolated_matrix(vector_field, t):
    """Φ̃_t solving Φ̃_t = I + t X_Q P(Φ̃_t), in closed form."""
    n = vector_field.shape[0] // 2
    x11, x12 = vector_field[:n, :n], vector_field[:n, n:]
    x21, x22 = vector_field[n:, :n], vector_field[n:, n:]
    pivot = np.eye(n) - t * x11
    if abs(np.linalg.det(pivot)) < 1e-12:
        raise SolvabilityError("I - t X11 is singular at t = {}".format(t))
    a = np.linalg.inv(pivot)
    b = a @ (t * x12)
    c = t * x21 @ a
    d = np.eye(n) + t * (x21 @ b + x22)
    return np.block([[a, b], [c, d]])


def linear_interpolated_flow(matrix, split = None, t_samples = None):
    """Path t -> Φ̃_t from the identity to Φ generated by the quadratic forms tQ.

        >>> import numpy as np
        >>> path = linear_interpolated_flow(np.array([[1.0, 0.5], [0.0, 1.0]]), t_samples = [0.0, 0.5, 1.0])
        >>> path.matrices[1].tolist()
        [[1.0, 0.25], [0.0, 1.0]]
    """
    if t_samples is None:
        t_samples = np.linspace(0, 1, 65)
    quadratic_form = linear_gf(matrix, split = split)
    vector_field = standard_j(half_dimension(quadratic_form)) @ quadratic_form
    return SymplecticPath(times = t_samples, matrices = [interpolated_matrix(vector_field, t) for t in t_samples])


class GeneratingFunction(SmoothFunction):
    """Generating function of a near-identity map, normalized by F(0) = 0.

    The gradient at (X, Y) comes from solving x̄(x, Y) = X for x by Newton;
    values are radial Simpson integrals of the gradient.
    """

    def __init__(self, mapping, simpson_intervals = SIMPSON_INTERVALS):
        self.mapping = mapping
        self.frame = mapping.frame
        self.radius = mapping.radius
        self.simpson_intervals = simpson_intervals
        self.closedness_residual = None
        SmoothFunction.__init__(
            self,
            value = self._value,
            gradient = self._gradient,
            hessian = self._hessian,
            n = mapping.n,
            name = 'F[{}]'.format(mapping.name),
            )

    def solve(self, w):
        """Gradient of F at mixed points w and the Jacobian of the map at the preimage."""
        w = np.asarray(w, dtype = float)
        n = self.n
        x_bar, y = w[..., :n], w[..., n:]
        x = x_bar.copy()
        for iteration in range(NEWTON_MAX_ITERATIONS):
            image, jacobian = self.mapping.forward(np.concatenate([x, y], axis = -1))
            residual = image[..., :n] - x_bar
            if np.max(np.abs(residual)) <= NEWTON_TOL * (1 + np.max(np.abs(x_bar))):
                break
            x = x - np.linalg.solve(jacobian[..., :n, :n], residual[..., np.newaxis])[..., 0]
        else:
            raise SolvabilityError("Newton solve for x given (x̄, y) did not converge (residual {:.3e})".format(
                np.max(np.abs(residual))))
        gradient = np.concatenate([image[..., n:] - y, x - x_bar], axis = -1)
        return gradient, jacobian

    def _gradient(self, w):
        return self.solve(w)[0]

    def _hessian(self, w):
        n = self.n
        _, jacobian = self.solve(w)
        a, b = jacobian[..., :n, :n], jacobian[..., :n, n:]
        c, d = jacobian[..., n:, :n], jacobian[..., n:, n:]
        a_inverse = np.linalg.inv(a)
        identity = np.eye(n)
        hessian = np.concatenate([
            np.concatenate([c @ a_inverse, d - c @ a_inverse @ b - identity], axis = -1),
            np.concatenate([a_inverse - identity, -a_inverse @ b], axis = -1),
            ], axis = -2)
        return (hessian + np.swapaxes(hessian, -1, -2)) / 2

    def _value(self, w):
        w = np.asarray(w, dtype = float)
        nodes = np.linspace(0, 1, self.simpson_intervals + 1)
        weights = simpson_weights(self.simpson_intervals)
        points = nodes.reshape((-1, ) + (1, ) * (w.ndim - 1) + (1, )) * w
        gradients = self._gradient(points)
        integrand = np.sum(gradients * w, axis = -1)
        return np.tensordot(weights, integrand, axes = (0, 0))

    def line_integral(self, start, end):
        nodes = np.linspace(0, 1, self.simpson_intervals + 1)[:, np.newaxis]
        points = start + nodes * (end - start)
        return float(simpson_weights(self.simpson_intervals) @ (self._gradient(points) @ (end - start)))

    def audit_closedness(self, size = None):
        """Largest |∮ dF| / area over coordinate-plane triangles inside the ball."""
        dimension = 2 * self.n
        size = self.radius / 2 if size is None else size
        worst = 0.0
        for i, j in itertools.combinations(range(dimension), 2):
            for offset in (0.0, -size / 2):
                a = np.zeros(dimension)
                a[i] = a[j] = offset / 2
                b, c = a.copy(), a.copy()
                b[i] += size
                c[j] += size
                circulation = self.line_integral(a, b) + self.line_integral(b, c) + self.line_integral(c, a)
                worst = max(worst, abs(circulation) / (size ** 2 / 2))
        self.closedness_residual = worst
        return worst

    @property
    def hessian_at_fixed_point(self):
        return self._hessian(np.zeros(2 * self.n))

    def gf2_constant(self):
        """Measured ‖F‖_C² / ‖φ - id‖_C¹ on the probe grid."""
        grid = self.mapping.probe()
        c2_norm = max(
            float(np.max(np.abs(self._value(grid)))),
            float(np.max(np.linalg.norm(self._gradient(grid), axis = -1))),
            float(np.max(np.linalg.norm(self._hessian(grid), ord = 2, axis = (-2, -1)))),
            )
        distance = self.mapping.c1_distance
        return c2_norm / distance if distance > 0 else 0.0

    def sample_table(self, points = None):
        grid = self.mapping.probe() if points is None else points
        data = collections.OrderedDict()
        for i, name in enumerate(hamiltonian_variable_names(self.n)):
            data[name] = grid[:, i]
        data['F'] = self._value(grid)
        return pd.DataFrame(data)

    def to_json(self):
        gf_json = collections.OrderedDict()
        gf_json['frame'] = self.frame.to_json()
        gf_json['radius'] = self.radius
        gf_json['c1_distance'] = self.mapping.c1_distance
        gf_json['closedness_residual'] = self.closedness_residual
        gf_json['simpson_intervals'] = self.simpson_intervals
        gf_json['hessian_at_fixed_point'] = self.hessian_at_fixed_point.tolist()
        return gf_json


def generating_function(mapping, frame = None, threshold = SOLVABILITY_THRESHOLD, audit = True,
        simpson_intervals = SIMPSON_INTERVALS):
    """Generating function of a near-identity map fixing the frame's base point."""
    if simpson_intervals < 2 or simpson_intervals % 2:
        raise PreconditionError("Simpson's rule needs a positive even number of intervals, got {}".format(
            simpson_intervals))
    if frame is not None:
        mapping.frame = frame
    distance = mapping.c1_distance
    if distance >= threshold:
        raise SolvabilityError("C¹ distance {:.3e} to the identity is not below {}".format(distance, threshold))
    fixed_point_image, _ = mapping.forward(np.zeros(2 * mapping.n))
    if np.max(np.abs(fixed_point_image)) > 1e-8:
        raise PreconditionError("Frame base point is not fixed (displacement {:.3e})".format(np.max(np.abs(fixed_point_image))))
    function = GeneratingFunction(mapping, simpson_intervals = simpson_intervals)
    if audit:
        residual = function.audit_closedness()
        if residual > CLOSEDNESS_TOL:
            raise NonSymplecticInputError("Closedness residual {:.3e} exceeds {}".format(residual, CLOSEDNESS_TOL))
        log.debug("Generating function of {} has closedness residual {:.3e}".format(mapping, residual))
    return function


def smoothstep(u):
    return u * u * (3 - 2 * u)


def smoothstep_derivative(u):
    return 6 * u * (1 - u)


class SmoothstepProfile(object):
    """λ(t) = S(S(u)), S(u) = 3u² - 2u³, u = (t - a)/(b - a) clipped to [0, 1]; flat near 0 and 1."""

    def __init__(self, start = 0.1, end = 0.9):
        assert 0 <= start < end <= 1
        self.start = start
        self.end = end

    def _u(self, t):
        return np.clip((t - self.start) / (self.end - self.start), 0.0, 1.0)

    def __call__(self, t):
        return float(smoothstep(smoothstep(self._u(t))))

    def derivative(self, t):
        u = self._u(t)
        return float(smoothstep_derivative(smoothstep(u)) * smoothstep_derivative(u) / (self.end - self.start))


class GeneratedHamiltonian(HamiltonianField):
    """One-periodic K_t = (1 - λ')F + λ' K̃_λ ∘ φ_F^{λ - t} with time-one map φ.

    K̃_s = F ∘ κ^s generates s -> φ_s, the map generated by sF, and
    κ^s(x̄, ȳ) = (x̄, y) with y + s F_x(x̄, y) = ȳ.
    """

    def __init__(self, F, profile = None, step = 0.02, order = 4):
        self.F = F
        self.profile = profile if profile is not None else SmoothstepProfile()
        self.step = step
        self.order = order
        self.radius = getattr(F, 'radius', np.inf)
        self.F_field = F.as_hamiltonian()
        HamiltonianField.__init__(
            self,
            value = self._value,
            gradient = self._gradient,
            n = F.n,
            period = 1.0,
            autonomous = False,
            name = 'K[{}]'.format(F.name),
            )

    def _check_chart(self, points, what):
        largest = float(np.max(np.linalg.norm(points, axis = -1))) if np.size(points) else 0.0
        if largest > self.radius:
            raise ShrinkRadiusError(
                "{} leaves the chart of radius {} (reached {:.3e})".format(what, self.radius, largest),
                suggested_radius = 0.9 * self.radius ** 2 / largest,
                )

    def kappa(self, s, w):
        n = self.n
        w = np.asarray(w, dtype = float)
        x_bar, y_bar = w[..., :n], w[..., n:]
        y = y_bar.copy()
        identity = np.eye(n)
        for iteration in range(NEWTON_MAX_ITERATIONS):
            mixed = np.concatenate([x_bar, y], axis = -1)
            residual = y + s * self.F.gradient(mixed)[..., :n] - y_bar
            if np.max(np.abs(residual)) <= NEWTON_TOL * (1 + np.max(np.abs(y_bar))):
                break
            hessian = self.F.hessian(mixed)
            y = y - np.linalg.solve(identity + s * hessian[..., :n, n:], residual[..., np.newaxis])[..., 0]
        else:
            raise SolvabilityError("κ equation did not converge at s = {}".format(s))
        mixed = np.concatenate([x_bar, y], axis = -1)
        self._check_chart(mixed, 'κ')
        hessian = self.F.hessian(mixed)
        inverse = np.linalg.inv(identity + s * hessian[..., :n, n:])
        zeros = np.zeros(inverse.shape)
        jacobian = np.concatenate([
            np.concatenate([np.broadcast_to(identity, inverse.shape), zeros], axis = -1),
            np.concatenate([-s * inverse @ hessian[..., :n, :n], inverse], axis = -1),
            ], axis = -2)
        return mixed, jacobian

    def psi(self, t, z):
        """φ_F^{λ(t) - t}(z) and its Jacobian."""
        result = flow(self.F_field, z, 0.0, self.profile(t) - t, step = self.step, order = self.order, energy = False)
        self._check_chart(result.end_point, 'φ_F')
        return result.end_point, result.monodromy

    def _value(self, t, z):
        z = np.asarray(z, dtype = float)
        rate = self.profile.derivative(t)
        if rate == 0:
            return self.F.value(z)
        moved, _ = self.psi(t, z)
        pulled, _ = self.kappa(self.profile(t), moved)
        return (1 - rate) * self.F.value(z) + rate * self.F.value(pulled)

    def _gradient(self, t, z):
        z = np.asarray(z, dtype = float)
        rate = self.profile.derivative(t)
        if rate == 0:
            return self.F.gradient(z)
        moved, psi_jacobian = self.psi(t, z)
        pulled, kappa_jacobian = self.kappa(self.profile(t), moved)
        chain = kappa_jacobian @ psi_jacobian
        return (1 - rate) * self.F.gradient(z) + rate * np.einsum('...ji,...j->...i', chain, self.F.gradient(pulled))

    # Linearization at the fixed point

    @property
    def quadratic_form(self):
        return np.asarray(self.F.hessian(np.zeros(2 * self.n)), dtype = float)

    def linear_hessian(self, t):
        """d²(K_t)_p from Q = d²F_p alone."""
        n = self.n
        q = self.quadratic_form
        rate = self.profile.derivative(t)
        if rate == 0:
            return q
        s = self.profile(t)
        inverse = np.linalg.inv(np.eye(n) + s * q[:n, n:])
        kappa_jacobian = np.block([[np.eye(n), np.zeros((n, n))], [-s * inverse @ q[:n, :n], inverse]])
        psi_jacobian = linalg.expm((s - t) * standard_j(n) @ q)
        pulled_back = kappa_jacobian @ psi_jacobian
        return (1 - rate) * q + rate * pulled_back.T @ q @ pulled_back

    def linearized_flow(self, t):
        """d(φ_K^t)_p = exp((t - λ) X_Q) Φ̃_λ."""
        q = self.quadratic_form
        vector_field = standard_j(self.n) @ q
        s = self.profile(t)
        return linalg.expm((t - s) * vector_field) @ interpolated_matrix(vector_field, s)

    def estimates(self, t_samples = 16, points = None):
        """Monitored estimates on the probe grid: Hessian ratio and the two autonomy ratios."""
        times = np.arange(t_samples) / t_samples
        q_norm = np.linalg.norm(self.quadratic_form, 2)
        hessian_norm = max(np.linalg.norm(self.linear_hessian(t), 2) for t in times)
        grid = probe_grid(self.n, self.radius / 2) if points is None else points
        grid = grid[np.linalg.norm(grid, axis = -1) > 0]
        ratios = autonomy_ratios(self.F_field, self, grid, times)
        report = collections.OrderedDict()
        report['hessian_norm'] = float(hessian_norm)
        report['hessian_ratio'] = float(hessian_norm / q_norm) if q_norm > 0 else None
        report['kf1_ratio'] = ratios[0]
        report['kf2_ratio'] = ratios[1]
        report['max_fixed_point_value'] = float(max(abs(float(self.evaluate(t, np.zeros(2 * self.n)))) for t in times))
        return report


def autonomy_ratios(F, K, points, times, dt = 1e-4):
    """sup ‖X_K - X_F‖/‖X_F‖ and sup ‖∂_t X_K‖/‖X_F‖ over points and times."""
    reference = F.vector_field(0.0, points)
    reference_norm = np.linalg.norm(reference, axis = -1)
    if np.any(reference_norm == 0):
        return np.inf, np.inf
    difference_ratio = derivative_ratio = 0.0
    for t in times:
        field = K.vector_field(t, points)
        difference_ratio = max(difference_ratio, float(np.max(np.linalg.norm(field - reference, axis = -1) / reference_norm)))
        derivative = (K.vector_field(t + dt, points) - K.vector_field(t - dt, points)) / (2 * dt)
        derivative_ratio = max(derivative_ratio, float(np.max(np.linalg.norm(derivative, axis = -1) / reference_norm)))
    return difference_ratio, derivative_ratio


def hamiltonian_from_gf(F, profile = None, step = 0.02, order = 4):
    """One-periodic Hamiltonian whose time-one map is the map generated by F and with K_t(p) = 0."""
    return GeneratedHamiltonian(F, profile = profile, step = step, order = order)
