"""Time-periodic Hamiltonians on R^{2n} and T^{2n}, their flows and actions.

The convention is X_H = J ∇H with J = [[0, -I], [I, 0]]:

    >>> import numpy as np
    >>> result = flow(builtin('oscillator'), np.array([1.0, 0.0]), 0.0, np.pi / 2, step = 1e-3, order = 4)
    >>> bool(np.allclose(result.end_point, [0.0, 1.0], atol = 1e-6))
    True
"""


import collections
import logging


import numpy as np
import pandas as pd
from scipy import integrate


from conley_lab.errors import ContractibilityError, DimensionError, PreconditionError
from conley_lab.expressions import compile_expression, hamiltonian_aliases, hamiltonian_variable_names
from conley_lab.indices import maslov_loop, SymplecticPath
from conley_lab.integrators import composed_step, NEWTON_TOL, triple_jump_weights


log = logging.getLogger(__name__)


DEFAULT_STEP = 0.01
FINITE_DIFFERENCE_STEP = 1e-5


class HamiltonianField(object):
    """A Hamiltonian H(t, z) with its derivatives, vectorized over leading axes of z."""
    autonomous = False
    name = None
    period = 1.0
    phase_space = 'euclidean'

    def __init__(self, value = None, gradient = None, hessian = None, n = None, period = 1.0,
            phase_space = 'euclidean', autonomous = False, name = None):
        assert value is not None and gradient is not None, "A Hamiltonian needs its value and gradient"
        assert n is not None and n >= 1, "Half dimension n must be a positive integer"
        assert period > 0, "Period must be positive, got {}".format(period)
        if phase_space not in ('euclidean', 'torus'):
            raise PreconditionError("Unknown phase space {}".format(phase_space))
        self.value = value
        self.gradient = gradient
        self.hessian = hessian
        self.n = n
        self.period = float(period)
        self.phase_space = phase_space
        self.autonomous = autonomous
        self.name = name if name is not None else 'H'

    def __repr__(self):
        return "HamiltonianField({}, n = {}, period = {}, phase_space = {})".format(
            self.name, self.n, self.period, self.phase_space)

    @property
    def is_torus(self):
        return self.phase_space == 'torus'

    def _points(self, z):
        z = np.asarray(z, dtype = float)
        if z.shape[-1] != 2 * self.n:
            raise DimensionError("Expected points of dimension {}, got shape {}".format(2 * self.n, z.shape))
        return z

    def evaluate(self, t, z):
        return np.asarray(self.value(t, self._points(z)), dtype = float)

    def grad(self, t, z):
        return np.asarray(self.gradient(t, self._points(z)), dtype = float)

    def hess(self, t, z):
        z = self._points(z)
        if self.hessian is not None:
            return np.asarray(self.hessian(t, z), dtype = float)
        # Central differences of the gradient
        columns = list()
        for i in range(2 * self.n):
            offset = np.zeros(2 * self.n)
            offset[i] = FINITE_DIFFERENCE_STEP
            columns.append((self.grad(t, z + offset) - self.grad(t, z - offset)) / (2 * FINITE_DIFFERENCE_STEP))
        hessian = np.stack(columns, axis = -1)
        return (hessian + np.swapaxes(hessian, -1, -2)) / 2

    def vector_field(self, t, z):
        gradient = self.grad(t, z)
        return np.concatenate([-gradient[..., self.n:], gradient[..., :self.n]], axis = -1)

    def vector_field_jacobian(self, t, z):
        hessian = self.hess(t, z)
        return np.concatenate([-hessian[..., self.n:, :], hessian[..., :self.n, :]], axis = -2)

    def reduce(self, z):
        return np.mod(z, 1.0) if self.is_torus else z

    def difference(self, z1, z0):
        """z1 - z0, lifted to the nearest representative on the torus."""
        difference = np.asarray(z1) - np.asarray(z0)
        if self.is_torus:
            difference = difference - np.round(difference)
        return difference

    def check_derivatives(self, rng, samples = 20, box = 1.0, times = None):
        """Maximal relative mismatch of gradient and Hessian against finite differences of the value."""
        if times is None:
            times = rng.uniform(0, self.period, size = samples)
        points = rng.uniform(-box, box, size = (samples, 2 * self.n))
        step = 1e-5
        gradient_error = hessian_error = 0.0
        for t, z in zip(times, points):
            gradient = self.grad(t, z)
            hessian = self.hess(t, z)
            numeric_gradient = np.array([
                (self.evaluate(t, z + step * unit) - self.evaluate(t, z - step * unit)) / (2 * step)
                for unit in np.eye(2 * self.n)
                ])
            numeric_hessian = np.array([
                (self.grad(t, z + step * unit) - self.grad(t, z - step * unit)) / (2 * step)
                for unit in np.eye(2 * self.n)
                ])
            gradient_error = max(gradient_error, np.max(np.abs(gradient - numeric_gradient)) / (1 + np.max(np.abs(gradient))))
            hessian_error = max(hessian_error, np.max(np.abs(hessian - numeric_hessian)) / (1 + np.max(np.abs(hessian))))
        return gradient_error, hessian_error

    def periodicity_defect(self, rng, samples = 20, box = 1.0):
        times = rng.uniform(0, self.period, size = samples)
        points = rng.uniform(-box, box, size = (samples, 2 * self.n))
        return float(max(
            abs(self.evaluate(t + self.period, z) - self.evaluate(t, z)) for t, z in zip(times, points)
            ))


class FlowResult(object):
    """Endpoint and linearization of a Hamiltonian flow, with optional recorded samples."""

    def __init__(self, end_point = None, monodromy = None, steps = None, times = None, trajectory = None,
            monodromy_samples = None, energy_drift = None, lifted_end_point = None):
        self.end_point = end_point
        self.monodromy = monodromy
        self.steps = steps
        self.times = times
        self.trajectory = trajectory
        self.monodromy_samples = monodromy_samples
        self.energy_drift = energy_drift
        self.lifted_end_point = lifted_end_point if lifted_end_point is not None else end_point

    def __repr__(self):
        return "FlowResult(steps = {}, energy_drift = {})".format(self.steps, self.energy_drift)

    def monodromy_path(self, index = None):
        """Linearized flow samples as a SymplecticPath (batch element index if batched)."""
        assert self.monodromy_samples is not None, "Flow was not recorded"
        samples = self.monodromy_samples if index is None else self.monodromy_samples[:, index]
        return SymplecticPath(times = self.times, matrices = samples)


def step_count(t0, t1, step):
    span = t1 - t0
    if span == 0:
        return 0
    count = max(1, int(round(abs(span) / step)))
    if abs(count * step - abs(span)) > 1e-9 * max(abs(span), 1.0):
        log.debug("Step {} does not divide [{}, {}]: using {} steps of {}".format(step, t0, t1, count, span / count))
    return count


def flow(H, z0, t0, t1, step = DEFAULT_STEP, order = 2, record = False, tol = NEWTON_TOL, energy = True):
    """Integrate the Hamiltonian flow from t0 to t1 (t1 < t0 integrates backward).

    z0 may carry leading batch axes. On the torus the integration runs in the
    universal cover and the end point is reduced modulo the unit lattice.
    """
    z = np.array(z0, dtype = float)
    if z.shape[-1] != 2 * H.n:
        raise DimensionError("Expected points of dimension {}, got shape {}".format(2 * H.n, z.shape))
    count = step_count(t0, t1, step)
    h = (t1 - t0) / count if count else 0.0
    weights = triple_jump_weights(order)
    dimension = 2 * H.n
    monodromy = np.broadcast_to(np.eye(dimension), z.shape[:-1] + (dimension, dimension)).copy()
    times = t0 + h * np.arange(count + 1)
    trajectory = [z.copy()] if record else None
    monodromy_samples = [monodromy.copy()] if record else None
    track_energy = energy and H.autonomous
    initial_energy = H.evaluate(t0, z) if track_energy else None
    energy_drift = 0.0 if track_energy else None
    for k in range(count):
        z, step_matrix = composed_step(H.vector_field, H.vector_field_jacobian, times[k], z, h, weights, tol = tol)
        monodromy = step_matrix @ monodromy
        if record:
            trajectory.append(z.copy())
            monodromy_samples.append(monodromy.copy())
        if track_energy:
            energy_drift = max(energy_drift, float(np.max(np.abs(H.evaluate(times[k + 1], z) - initial_energy))))
    return FlowResult(
        end_point = H.reduce(z),
        lifted_end_point = z,
        monodromy = monodromy,
        steps = count,
        times = times if record else None,
        trajectory = np.array(trajectory) if record else None,
        monodromy_samples = np.array(monodromy_samples) if record else None,
        energy_drift = energy_drift,
        )


def time_one_map(H, step = DEFAULT_STEP, order = 4):
    """Callable z -> (φ_H^period(z), dφ_H^period(z))."""
    def mapping(z):
        result = flow(H, z, 0.0, H.period, step = step, order = order, energy = False)
        return result.lifted_end_point, result.monodromy
    return mapping


def compose(K, H, step = DEFAULT_STEP, order = 4):
    """(K#H)_t = K_t + H_t ∘ (φ_K^t)⁻¹, whose flow is φ_K^t ∘ φ_H^t."""
    if K.n != H.n or K.phase_space != H.phase_space:
        raise DimensionError("Cannot compose {} with {}".format(K, H))
    if abs(K.period - H.period) > 1e-12:
        raise PreconditionError("Periods differ: {} and {}".format(K.period, H.period))

    def pulled_back(t, z):
        return flow(K, z, float(t), 0.0, step = step, order = order, energy = False)

    def value(t, z):
        return K.evaluate(t, z) + H.evaluate(t, pulled_back(t, z).lifted_end_point)

    def gradient(t, z):
        backward = pulled_back(t, z)
        inner_gradient = H.grad(t, backward.lifted_end_point)
        return K.grad(t, z) + np.einsum('...ji,...j->...i', backward.monodromy, inner_gradient)

    return HamiltonianField(
        value = value,
        gradient = gradient,
        n = K.n,
        period = K.period,
        phase_space = K.phase_space,
        name = '{}#{}'.format(K.name, H.name),
        )


def iterate(H, T):
    """H^(T): the same Hamiltonian seen with period T times its own."""
    assert int(T) == T and T >= 1, "Iteration count must be a positive integer, got {}".format(T)
    if T == 1:
        return H
    return HamiltonianField(
        value = H.value,
        gradient = H.gradient,
        hessian = H.hessian,
        n = H.n,
        period = T * H.period,
        phase_space = H.phase_space,
        autonomous = H.autonomous,
        name = '{}^({})'.format(H.name, int(T)),
        )


def periodic_derivative(samples):
    """Spectral derivative with respect to s in [0, 1) of uniformly sampled periodic data."""
    count = samples.shape[0]
    frequencies = np.fft.fftfreq(count, d = 1.0 / count)
    if count % 2 == 0:
        frequencies[count // 2] = 0
    spectrum = np.fft.fft(samples, axis = 0)
    return np.real(np.fft.ifft(2j * np.pi * frequencies[:, np.newaxis] * spectrum, axis = 0))


def lift_loop(H, loop, winding = None):
    """Lift a torus loop to the universal cover, checking that it is contractible."""
    steps = H.difference(np.roll(loop, -1, axis = 0), loop)
    measured_winding = np.round(np.sum(steps, axis = 0)).astype(int)
    if winding is not None and np.any(np.asarray(winding) != 0):
        raise ContractibilityError("Loop has winding vector {}".format(list(winding)))
    if np.any(measured_winding != 0):
        raise ContractibilityError("Loop is not contractible: winding {}".format(measured_winding.tolist()))
    return loop[0] + np.concatenate([np.zeros((1, loop.shape[1])), np.cumsum(steps[:-1], axis = 0)])


def action(H, loop, t0 = 0.0, period = None, winding = None):
    """A_H(γ) = ∮ y dx + ∫ H_t(γ(t)) dt for a loop sampled uniformly in time.

    ``loop`` holds the samples γ(t0 + k T / N), k = 0..N-1; a repeated end point
    is dropped. The area term is the negative symplectic area of any filling
    disc, computed by Stokes from the loop alone.

        >>> import numpy as np
        >>> s = np.linspace(0, 2 * np.pi, 64, endpoint = False)
        >>> circle = np.stack([np.cos(s), np.sin(s)], axis = -1)
        >>> round(action(builtin('zero'), circle) / np.pi, 12)
        -1.0
    """
    loop = np.asarray(loop, dtype = float)
    if loop.ndim != 2 or loop.shape[1] != 2 * H.n:
        raise DimensionError("Expected loop samples of shape (N, {}), got {}".format(2 * H.n, loop.shape))
    if len(loop) > 2 and np.allclose(loop[0], loop[-1], rtol = 0, atol = 1e-12):
        loop = loop[:-1]
    if H.is_torus:
        loop = lift_loop(H, loop, winding = winding)
    elif winding is not None and np.any(np.asarray(winding) != 0):
        raise ContractibilityError("Loops in R^2n have no winding, got {}".format(list(winding)))
    period = H.period if period is None else period
    count = len(loop)
    x_derivative = periodic_derivative(loop[:, :H.n])
    area = float(np.mean(np.sum(loop[:, H.n:] * x_derivative, axis = -1)))
    times = t0 + period * np.arange(count) / count
    if H.autonomous:
        values = H.evaluate(t0, loop)
    else:
        values = [H.evaluate(t, z) for t, z in zip(times, loop)]
    hamiltonian_integral = float(period * np.mean(values))
    return area + hamiltonian_integral


def action_spectrum(orbits, tol = 1e-9):
    """Sorted action values, merging values closer than tol.

        >>> action_spectrum([1.0, 1.0 + 1e-12, 2.0])
        [1.0, 2.0]
    """
    values = sorted(
        float(getattr(orbit, 'action', orbit)) for orbit in orbits
        if getattr(orbit, 'action', orbit) is not None
        )
    spectrum = list()
    for value in values:
        if not spectrum or value - spectrum[-1] > tol:
            spectrum.append(value)
    return spectrum


def local_loop_report(G, p, step = DEFAULT_STEP, order = 4, grid = 16):
    """Maslov index and fixed-point action of a loop of Hamiltonians at its fixed point p.

    A loop with vanishing Maslov index at p passes the extension criterion.
    """
    p = np.asarray(p, dtype = float)
    result = flow(G, p, 0.0, G.period, step = step, order = order, record = True)
    if np.max(np.abs(G.difference(result.lifted_end_point, p))) > 1e-8:
        raise PreconditionError("Point {} is not fixed by the time-one map".format(p.tolist()))
    if np.max(np.abs(result.monodromy - np.eye(2 * G.n))) > 1e-6:
        raise PreconditionError("Linearized time-one map at {} is not the identity".format(p.tolist()))
    path = SymplecticPath(times = result.times, matrices = result.monodromy_samples, is_loop = True)
    path.matrices[-1] = path.matrices[0]
    mu = maslov_loop(path)
    values = np.array([G.evaluate(t, p) for t in result.times])
    report = collections.OrderedDict()
    report['maslov_index'] = mu
    report['fixed_point_action'] = float(integrate.trapezoid(values, result.times))
    report['extendable'] = mu == 0
    if G.is_torus:
        axes = [np.arange(grid) / grid] * (2 * G.n)
        points = np.stack(np.meshgrid(*axes, indexing = 'ij'), axis = -1).reshape(-1, 2 * G.n)
        means = [float(np.mean(G.evaluate(t, points))) for t in result.times]
        report['mean_normalized_action'] = float(integrate.trapezoid(means, result.times))
    return report


def trajectory_table(H, z0, t0, t1, step = DEFAULT_STEP, order = 2):
    result = flow(H, z0, t0, t1, step = step, order = order, record = True)
    data = collections.OrderedDict()
    data['t'] = result.times
    for i, name in enumerate(hamiltonian_variable_names(H.n)):
        data[name] = result.trajectory[:, i]
    data['H'] = [float(H.evaluate(t, z)) for t, z in zip(result.times, result.trajectory)]
    return pd.DataFrame(data)


# Constructors

def from_expression(text, n = 1, period = 1.0, phase_space = 'euclidean', name = None):
    compiled = compile_expression(text, hamiltonian_variable_names(n), aliases = hamiltonian_aliases(n), time = True)

    def coordinates(z):
        return [z[..., i] for i in range(2 * n)]

    return HamiltonianField(
        value = lambda t, z: compiled.value(t, *coordinates(z)),
        gradient = lambda t, z: compiled.gradient(t, *coordinates(z)),
        hessian = lambda t, z: compiled.hessian(t, *coordinates(z)),
        n = n,
        period = period,
        phase_space = phase_space,
        autonomous = compiled.is_autonomous,
        name = name if name is not None else text,
        )


def quadratic(matrix, period = 1.0, name = None):
    """H(z) = ½ zᵀQz."""
    matrix = np.array(matrix, dtype = float)
    matrix = (matrix + matrix.T) / 2
    n = matrix.shape[0] // 2
    return HamiltonianField(
        value = lambda t, z: 0.5 * np.einsum('...i,ij,...j->...', z, matrix, z),
        gradient = lambda t, z: z @ matrix,
        hessian = lambda t, z: np.broadcast_to(matrix, z.shape[:-1] + matrix.shape),
        n = n,
        period = period,
        autonomous = True,
        name = name if name is not None else 'quadratic',
        )


def radial(profile, derivative, second_derivative, n = 1, period = 1.0, name = None):
    """H(z) = F(ρ) with ρ = |z|²/2, given F, F' and F''."""
    def value(t, z):
        return profile(0.5 * np.sum(z * z, axis = -1))

    def gradient(t, z):
        return derivative(0.5 * np.sum(z * z, axis = -1))[..., np.newaxis] * z

    def hessian(t, z):
        rho = 0.5 * np.sum(z * z, axis = -1)
        first = derivative(rho)[..., np.newaxis, np.newaxis]
        second = second_derivative(rho)[..., np.newaxis, np.newaxis]
        return first * np.eye(2 * n) + second * z[..., :, np.newaxis] * z[..., np.newaxis, :]

    return HamiltonianField(
        value = value,
        gradient = gradient,
        hessian = hessian,
        n = n,
        period = period,
        autonomous = True,
        name = name if name is not None else 'radial',
        )


builtin_hamiltonians = collections.OrderedDict()


def register(name):
    def decorator(factory):
        builtin_hamiltonians[name] = factory
        return factory
    return decorator


def builtin(name, **parameters):
    if name not in builtin_hamiltonians:
        raise PreconditionError("Unknown built-in Hamiltonian {}. Available: {}".format(
            name, list(builtin_hamiltonians.keys())))
    return builtin_hamiltonians[name](**parameters)


@register('zero')
def zero(n = 1, period = 1.0):
    return quadratic(np.zeros((2 * n, 2 * n)), period = period, name = 'zero')


@register('oscillator')
def oscillator(n = 1, scale = 1.0, period = 1.0):
    return quadratic(scale * np.eye(2 * n), period = period, name = 'oscillator')


@register('elliptic')
def elliptic(n = 1, frequency = 1.0, period = 1.0):
    """Maximum -½ frequency |z|², turning clockwise by `frequency` radians per unit time."""
    return quadratic(-frequency * np.eye(2 * n), period = period, name = 'elliptic')


@register('hyperbolic')
def hyperbolic(n = 1, rate = 1.0, period = 1.0):
    identity = np.eye(n)
    zeros = np.zeros((n, n))
    return quadratic(rate * np.block([[zeros, identity], [identity, zeros]]), period = period, name = 'hyperbolic')


@register('translation')
def translation(n = 1, period = 1.0):
    direction = np.zeros(2 * n)
    direction[n] = 1.0
    return HamiltonianField(
        value = lambda t, z: z @ direction,
        gradient = lambda t, z: np.broadcast_to(direction, z.shape),
        hessian = lambda t, z: np.zeros(z.shape + (2 * n, )),
        n = n,
        period = period,
        autonomous = True,
        name = 'translation',
        )


@register('flat_maximum')
def flat_maximum(n = 1, period = 1.0):
    """-¼|z|⁴: a strict maximum with vanishing Hessian."""
    def value(t, z):
        return -0.25 * np.sum(z * z, axis = -1) ** 2

    def gradient(t, z):
        return -np.sum(z * z, axis = -1)[..., np.newaxis] * z

    def hessian(t, z):
        squared = np.sum(z * z, axis = -1)[..., np.newaxis, np.newaxis]
        return -(squared * np.eye(2 * n) + 2 * z[..., :, np.newaxis] * z[..., np.newaxis, :])

    return HamiltonianField(value = value, gradient = gradient, hessian = hessian, n = n, period = period,
        autonomous = True, name = 'flat_maximum')


@register('shear_flat_maximum')
def shear_flat_maximum(period = 1.0):
    """-½y² - ¼x⁴: strict maximum whose linearized time-one map is a shear."""
    def value(t, z):
        return -0.5 * z[..., 1] ** 2 - 0.25 * z[..., 0] ** 4

    def gradient(t, z):
        return np.stack([-z[..., 0] ** 3, -z[..., 1]], axis = -1)

    def hessian(t, z):
        hessian = np.zeros(z.shape + (2, ))
        hessian[..., 0, 0] = -3 * z[..., 0] ** 2
        hessian[..., 1, 1] = -1.0
        return hessian

    return HamiltonianField(value = value, gradient = gradient, hessian = hessian, n = 1, period = period,
        autonomous = True, name = 'shear_flat_maximum')


@register('pendulum')
def pendulum(period = 1.0):
    """Pendulum on T²: (1 - cos 2πy)/4π² + cos(2πx)/4π², equal to y²/2 + cos(2πx)/4π² to fourth order in y."""
    return forced_pendulum(forcing = 0.0, period = period, name = 'pendulum')


@register('forced_pendulum')
def forced_pendulum(forcing = 0.05, period = 1.0, name = 'forced_pendulum'):
    scale = 1.0 / (4 * np.pi ** 2)

    def modulation(t):
        return 1.0 + forcing * np.sin(2 * np.pi * t / period)

    def value(t, z):
        return scale * (1 - np.cos(2 * np.pi * z[..., 1])) + scale * modulation(t) * np.cos(2 * np.pi * z[..., 0])

    def gradient(t, z):
        return np.stack([
            -modulation(t) * np.sin(2 * np.pi * z[..., 0]) / (2 * np.pi),
            np.sin(2 * np.pi * z[..., 1]) / (2 * np.pi),
            ], axis = -1)

    def hessian(t, z):
        hessian = np.zeros(z.shape + (2, ))
        hessian[..., 0, 0] = -modulation(t) * np.cos(2 * np.pi * z[..., 0])
        hessian[..., 1, 1] = np.cos(2 * np.pi * z[..., 1])
        return hessian

    return HamiltonianField(value = value, gradient = gradient, hessian = hessian, n = 1, period = period,
        phase_space = 'torus', autonomous = forcing == 0, name = name)


@register('bump')
def bump(**parameters):
    from conley_lab.bumps import build_profile
    return build_profile(kind = 'single', **parameters).hamiltonian()


@register('two_shell')
def two_shell(**parameters):
    from conley_lab.bumps import build_profile
    return build_profile(kind = 'two_shell', **parameters).hamiltonian()
