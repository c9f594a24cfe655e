"""Local Morse homology of isolated critical points and the certificates built on it.

The local homology of f at p is the Z2 homology of the pair
({f <= f(p)} ∩ B, {f <= f(p) - ε} ∩ B) on a cubical grid of the box B.
A signature is only returned when two grid resolutions and two values of ε
agree.

    >>> signature = local_morse_homology(ScalarField.from_expression('x^2 - y^2', 2), [0.0, 0.0], 0.5, grid = 17)
    >>> signature.betti
    [0, 1, 0]
"""


import collections
import logging


import numpy as np
import pandas as pd
import yaml
from scipy import interpolate, ndimage


from conley_lab.cubical import relative_betti
from conley_lab.errors import (
    DimensionError,
    IsolationError,
    PreconditionError,
    ResolutionError,
    ShrinkRadiusError,
    SolvabilityError,
    )
from conley_lab.expressions import compile_expression, field_aliases, field_variable_names
from conley_lab.generating_functions import (
    autonomy_ratios,
    generating_function,
    hamiltonian_from_gf,
    NearIdentityMap,
    PolynomialFunction,
    probe_grid,
    SOLVABILITY_THRESHOLD,
    )
from conley_lab.hamiltonians import DEFAULT_STEP, flow
from conley_lab.indices import unwrapped_angles
from conley_lab.symplectic import is_unipotent, squeeze_frame


log = logging.getLogger(__name__)


DEFAULT_GRIDS = {1: 129, 2: 33, 3: 13, 4: 5}
ISOLATION_CELLS = 1.5
MAX_RADIUS_HALVINGS = 24
FLOQUET_CONCLUSION = "HF^loc_*(K^(T), p) = HM^loc_(*+n)(F, p)"


class ScalarField(object):
    """Smooth function on R^m with vectorized value, gradient and Hessian.

    Missing derivatives fall back to central differences.
    """
    sampled = False
    difference_step = 1e-5

    def __init__(self, value = None, gradient = None, hessian = None, m = None, name = None):
        assert value is not None and m is not None and m >= 1
        self.value = value
        self.gradient = gradient
        self.hessian = hessian
        self.m = m
        self.name = name if name is not None else 'f'

    def __repr__(self):
        return "ScalarField({}, m = {})".format(self.name, self.m)

    def _points(self, z):
        z = np.asarray(z, dtype = float)
        if z.shape[-1] != self.m:
            raise DimensionError("Expected points of dimension {}, got shape {}".format(self.m, z.shape))
        return z

    def evaluate(self, z):
        return np.asarray(self.value(self._points(z)), dtype = float)

    def grad(self, z):
        z = self._points(z)
        if self.gradient is not None:
            return np.asarray(self.gradient(z), dtype = float)
        step = self.difference_step
        return np.stack([
            (self.evaluate(z + step * unit) - self.evaluate(z - step * unit)) / (2 * step)
            for unit in np.eye(self.m)
            ], axis = -1)

    def hess(self, z):
        z = self._points(z)
        if self.hessian is not None:
            return np.asarray(self.hessian(z), dtype = float)
        step = self.difference_step
        hessian = np.stack([
            (self.grad(z + step * unit) - self.grad(z - step * unit)) / (2 * step)
            for unit in np.eye(self.m)
            ], axis = -1)
        return (hessian + np.swapaxes(hessian, -1, -2)) / 2

    def linear_change(self, matrix, center = None):
        """The field w -> f(c + A (w - c))."""
        matrix = np.array(matrix, dtype = float)
        center = np.zeros(self.m) if center is None else np.asarray(center, dtype = float)

        def moved(w):
            return center + (np.asarray(w) - center) @ matrix.T

        return ScalarField(
            value = lambda w: self.evaluate(moved(w)),
            gradient = lambda w: self.grad(moved(w)) @ matrix,
            hessian = lambda w: matrix.T @ self.hess(moved(w)) @ matrix,
            m = self.m,
            name = '{} after linear change'.format(self.name),
            )

    @classmethod
    def from_expression(cls, text, m):
        compiled = compile_expression(text, field_variable_names(m), aliases = field_aliases(m))

        def coordinates(z):
            return [z[..., i] for i in range(m)]

        return cls(
            value = lambda z: compiled.value(*coordinates(z)),
            gradient = lambda z: compiled.gradient(*coordinates(z)),
            hessian = lambda z: compiled.hessian(*coordinates(z)),
            m = m,
            name = text,
            )

    @classmethod
    def from_hamiltonian(cls, H, t):
        """The slice z -> H_t(z) of a Hamiltonian on R^{2n}."""
        return cls(
            value = lambda z: H.evaluate(t, z),
            gradient = lambda z: H.grad(t, z),
            hessian = lambda z: H.hess(t, z),
            m = 2 * H.n,
            name = '{} at t = {}'.format(H.name, t),
            )

    @classmethod
    def from_samples(cls, origin, spacing, values, name = None):
        """Multilinear interpolation of samples on a regular lattice."""
        values = np.asarray(values, dtype = float)
        axes = [o + s * np.arange(count) for o, s, count in zip(origin, spacing, values.shape)]
        interpolator = interpolate.RegularGridInterpolator(
            axes, values, method = 'linear', bounds_error = False, fill_value = None)

        def value(z):
            z = np.asarray(z, dtype = float)
            return interpolator(z.reshape(-1, values.ndim)).reshape(z.shape[:-1])

        field = cls(value = value, m = values.ndim, name = name if name is not None else 'samples')
        field.sampled = True
        field.difference_step = float(min(spacing)) / 2
        return field


class LocalHomologySignature(object):
    """Z2 Betti vector of the local homology at an isolated critical point."""

    def __init__(self, betti = None, box_radius = None, epsilon = None, grid = None, point = None):
        self.betti = list(betti)
        self.box_radius = box_radius
        self.epsilon = epsilon
        self.grid = grid
        self.point = point

    def __repr__(self):
        return "LocalHomologySignature({})".format(self.betti)

    def __eq__(self, other):
        return isinstance(other, LocalHomologySignature) and self.betti == other.betti

    def __ne__(self, other):
        return not self.__eq__(other)

    @property
    def euler_characteristic(self):
        return sum((-1) ** k * rank for k, rank in enumerate(self.betti))

    @property
    def detects_maximum(self):
        return self.betti[-1] != 0

    def to_json(self):
        signature_json = collections.OrderedDict()
        signature_json['betti'] = self.betti
        signature_json['euler_characteristic'] = self.euler_characteristic
        signature_json['box_radius'] = self.box_radius
        signature_json['epsilon'] = self.epsilon
        signature_json['grid'] = self.grid
        if self.point is not None:
            signature_json['point'] = list(self.point)
        return signature_json


def box_grid(p, box_radius, points):
    """Lattice of points^m vertices on the box of half-width box_radius about p."""
    p = np.asarray(p, dtype = float)
    axes = [center + np.linspace(-box_radius, box_radius, points) for center in p]
    return np.stack(np.meshgrid(*axes, indexing = 'ij'), axis = -1)


def boundary_mask(shape):
    mask = np.zeros(shape, dtype = bool)
    for axis in range(len(shape)):
        index = [slice(None)] * len(shape)
        for end in (0, -1):
            index[axis] = end
            mask[tuple(index)] = True
    return mask


def sublevel_gap(vertex_values, level):
    """Distance from level to the nearest boundary value below it (above it if none lies below)."""
    boundary_values = vertex_values[boundary_mask(vertex_values.shape)]
    below = boundary_values[boundary_values < level]
    if len(below):
        return float(level - np.max(below))
    above = boundary_values[boundary_values > level]
    if len(above):
        return float(np.min(above) - level)
    raise IsolationError("Function is constant on the box boundary")


def other_critical_points(f, p, box_radius, points):
    """Critical points of f in the box lying more than 1.5 grid cells away from p."""
    p = np.asarray(p, dtype = float)
    grid = box_grid(p, box_radius, points)
    exclusion = ISOLATION_CELLS * 2 * box_radius / (points - 1)
    interior = ~boundary_mask(grid.shape[:-1])
    far = np.max(np.abs(grid - p), axis = -1) > exclusion
    if f.sampled:
        values = f.evaluate(grid)
        extrema = (values == ndimage.minimum_filter(values, size = 3, mode = 'nearest')) | (
            values == ndimage.maximum_filter(values, size = 3, mode = 'nearest'))
        return grid[extrema & interior & far]
    gradient_norm = np.linalg.norm(f.grad(grid), axis = -1)
    minima = gradient_norm == ndimage.minimum_filter(gradient_norm, size = 3, mode = 'nearest')
    candidates = grid[minima & far]
    if not len(candidates):
        return candidates
    scale = float(np.max(gradient_norm))
    z = candidates
    for iteration in range(30):
        step = (np.linalg.pinv(f.hess(z)) @ f.grad(z)[..., np.newaxis])[..., 0]
        z = z - np.where(np.isfinite(step), step, 0.0)
    residual = np.linalg.norm(f.grad(z), axis = -1)
    distance = np.max(np.abs(z - p), axis = -1)
    found = np.isfinite(residual) & (residual <= 1e-9 * scale) & (distance <= box_radius) & (distance > exclusion)
    return z[found]


def check_isolation(f, p, box_radius, points, parameter = None):
    others = other_critical_points(f, p, box_radius, points)
    if len(others):
        raise IsolationError(
            "Found {} other critical point(s) in the box, e.g. {}".format(len(others), np.round(others[0], 6).tolist()),
            parameter = parameter,
            )


def local_morse_homology(f, p, box_radius, grid = None, isolation = True):
    """Local homology of f at the isolated critical point p."""
    p = np.asarray(p, dtype = float)
    m = f.m
    if len(p) != m:
        raise DimensionError("Point of dimension {} for a field on R^{}".format(len(p), m))
    if m > 4:
        raise PreconditionError("Local homology is limited to dimension 4, got {}".format(m))
    grid = DEFAULT_GRIDS[m] if grid is None else grid
    assert grid >= 3 and grid % 2 == 1, "Grid must be odd so that p is a vertex, got {}".format(grid)
    gradient = f.grad(p)
    scale = float(np.max(np.abs(f.evaluate(box_grid(p, box_radius, grid)) - f.evaluate(p))))
    if np.max(np.abs(gradient)) > 1e-8 * max(1.0, scale / box_radius):
        raise PreconditionError("Point {} is not critical (gradient {})".format(p.tolist(), gradient.tolist()))
    if isolation:
        check_isolation(f, p, box_radius, grid)
    level = float(f.evaluate(p))
    coarse_values = f.evaluate(box_grid(p, box_radius, grid))
    epsilon = max(sublevel_gap(coarse_values, level) / 4, 1e-9 * scale)
    fine = 2 * grid - 1
    fine_values = f.evaluate(box_grid(p, box_radius, fine))
    votes = collections.OrderedDict()
    for points, values in ((grid, coarse_values), (fine, fine_values)):
        for trial_epsilon in (epsilon, epsilon / 2):
            votes[(points, trial_epsilon)] = relative_betti(values, level, level - trial_epsilon)
    results = list(votes.values())
    if any(result != results[0] for result in results):
        raise ResolutionError("Unstable local homology at {}: {}".format(
            p.tolist(), {"grid {} epsilon {:.3e}".format(*key): value for key, value in votes.items()}))
    log.debug("Local homology of {} at {}: {}".format(f, p.tolist(), results[0]))
    return LocalHomologySignature(betti = results[0], box_radius = box_radius, epsilon = epsilon, grid = grid,
        point = p.tolist())


def is_grid_maximum(f, p, box_radius, grid):
    p = np.asarray(p, dtype = float)
    points = box_grid(p, box_radius, grid)
    values = f.evaluate(points)
    center = (grid // 2, ) * f.m
    others = np.ones(values.shape, dtype = bool)
    others[center] = False
    return bool(np.all(values[others] < f.evaluate(p)))


def lm2_maximum_test(f, p, box_radius, grid = None):
    """Whether p is a local maximum, read off the top-degree local homology.

        >>> lm2_maximum_test(ScalarField.from_expression('-x^4 - y^4', 2), [0.0, 0.0], 0.5, grid = 17)
        True
    """
    grid = DEFAULT_GRIDS[f.m] if grid is None else grid
    signature = local_morse_homology(f, p, box_radius, grid = grid)
    detected = signature.detects_maximum
    if detected != is_grid_maximum(f, p, box_radius, grid):
        raise ResolutionError("Top-degree homology and direct grid comparison disagree at {}".format(list(p)))
    return detected


def lm1_homotopy_check(family, p, box_radius, s_grid, grid = None):
    """Whether the local homology stays constant along a uniformly isolated family s -> f_s."""
    signatures = list()
    for s in s_grid:
        field = family(s)
        grid_s = DEFAULT_GRIDS[field.m] if grid is None else grid
        check_isolation(field, p, box_radius, grid_s, parameter = s)
        signatures.append(local_morse_homology(field, p, box_radius, grid = grid_s, isolation = False))
        log.debug("Family member s = {}: {}".format(s, signatures[-1].betti))
    return all(signature == signatures[0] for signature in signatures)


def poincare_hopf_degree(f, p, box_radius, samples = 256, seeds = 9, rng = None):
    """Index of the gradient of f at p computed from the box boundary.

    In dimension 1 and 2 this is the boundary degree of the gradient. Above,
    zeros of the gradient shifted by a small regular value are counted with
    the sign of the Hessian determinant.
    """
    p = np.asarray(p, dtype = float)
    m = f.m
    if m == 1:
        left, right = f.grad(p - box_radius)[0], f.grad(p + box_radius)[0]
        return int((np.sign(right) - np.sign(left)) / 2)
    if m == 2:
        side = np.linspace(-box_radius, box_radius, samples, endpoint = False)
        corner = np.full(samples, box_radius)
        boundary = np.concatenate([
            np.stack([side, -corner], axis = -1),
            np.stack([corner, side], axis = -1),
            np.stack([-side, corner], axis = -1),
            np.stack([-corner, -side], axis = -1),
            ]) + p
        gradient = f.grad(boundary)
        angles = unwrapped_angles(np.append(gradient[:, 0] + 1j * gradient[:, 1], gradient[0, 0] + 1j * gradient[0, 1]))
        return int(np.round((angles[-1] - angles[0]) / (2 * np.pi)))
    rng = np.random.default_rng(0) if rng is None else rng
    boundary_points = box_grid(p, box_radius, seeds)[boundary_mask((seeds, ) * m)]
    direction = rng.normal(size = m)
    regular_value = 1e-3 * np.min(np.linalg.norm(f.grad(boundary_points), axis = -1)) * direction / np.linalg.norm(direction)
    z = box_grid(p, box_radius / 2, seeds).reshape(-1, m)
    for iteration in range(40):
        step = (np.linalg.pinv(f.hess(z)) @ (f.grad(z) - regular_value)[..., np.newaxis])[..., 0]
        z = z - np.where(np.isfinite(step), step, 0.0)
    residual = np.linalg.norm(f.grad(z) - regular_value, axis = -1)
    inside = np.isfinite(residual) & (residual < 1e-10 * max(1.0, np.linalg.norm(regular_value) * 1e3)) & (
        np.max(np.abs(z - p), axis = -1) < box_radius)
    roots = list()
    for root in z[inside]:
        if all(np.max(np.abs(root - other)) > 1e-6 * box_radius for other in roots):
            roots.append(root)
    return int(sum(np.sign(np.linalg.det(f.hess(root))) for root in roots))


def read_grid_file(path):
    """Scalar field from a grid file: a YAML header (dims, spacing, origin), a '---' line, row-major values."""
    with open(path) as grid_file:
        text = grid_file.read()
    lines = text.splitlines()
    if '---' not in [line.strip() for line in lines]:
        raise PreconditionError("Grid file {} has no '---' separator".format(path))
    separator = [line.strip() for line in lines].index('---')
    header = yaml.safe_load('\n'.join(lines[:separator])) or dict()
    missing = [key for key in ('dims', 'spacing', 'origin') if key not in header]
    if missing:
        raise PreconditionError("Grid file {} header lacks {}".format(path, missing))
    dims = [int(count) for count in header['dims']]
    payload = np.array(' '.join(lines[separator + 1:]).split(), dtype = float)
    if payload.size != int(np.prod(dims)):
        raise DimensionError("Grid file {} holds {} values for dims {}".format(path, payload.size, dims))
    return ScalarField.from_samples(header['origin'], header['spacing'], payload.reshape(dims), name = str(path))


class RelativeAutonomyCertificate(object):
    """Measured relative autonomy of K with respect to F near p and the resulting index bound."""

    def __init__(self, epsilon_measured = None, hessian_norms = None, T = None, lhs_of_bound = None,
            difference_ratio = None, derivative_ratio = None):
        self.epsilon_measured = epsilon_measured
        self.hessian_norms = hessian_norms
        self.T = T
        self.lhs_of_bound = lhs_of_bound
        self.difference_ratio = difference_ratio
        self.derivative_ratio = derivative_ratio

    def __repr__(self):
        return "RelativeAutonomyCertificate(epsilon = {:.3e}, lhs = {:.4f}, passes = {})".format(
            self.epsilon_measured, self.lhs_of_bound, self.passes)

    @property
    def passes(self):
        return bool(self.epsilon_measured < 1 and self.lhs_of_bound < 2 * np.pi)

    @property
    def conclusion(self):
        return FLOQUET_CONCLUSION if self.passes else None

    def to_json(self):
        certificate_json = collections.OrderedDict()
        certificate_json['epsilon_measured'] = self.epsilon_measured
        certificate_json['difference_ratio'] = self.difference_ratio
        certificate_json['derivative_ratio'] = self.derivative_ratio
        certificate_json['max_hessian_norm_K'] = self.hessian_norms[0]
        certificate_json['hessian_norm_F'] = self.hessian_norms[1]
        certificate_json['T'] = self.T
        certificate_json['lhs_of_bound'] = self.lhs_of_bound
        certificate_json['passes'] = self.passes
        certificate_json['conclusion'] = self.conclusion
        return certificate_json


def relative_autonomy_check(F, K, p, T, box_radius, t_samples = 16, points = None):
    """Sup of ‖X_K - X_F‖/‖X_F‖ and ‖∂_t X_K‖/‖X_F‖ near p and the bound T (ε/(1 - ε) + ‖d²K_p‖ + ‖d²F_p‖) < 2π.

    When K is F itself the autonomous bound T ‖d²F_p‖ < 2π is used.
    """
    autonomous = K is F
    if hasattr(F, 'as_hamiltonian'):
        F = F.as_hamiltonian()
    p = np.asarray(p, dtype = float)
    probe = p + (probe_grid(F.n, box_radius, points = points))
    probe = probe[np.max(np.abs(probe - p), axis = -1) > 0]
    if np.any(np.linalg.norm(F.vector_field(0.0, probe), axis = -1) == 0):
        raise IsolationError("X_F vanishes away from {} on the probe grid".format(p.tolist()))
    times = K.period * np.arange(t_samples) / t_samples
    difference_ratio, derivative_ratio = autonomy_ratios(F, K, probe, times)
    epsilon = max(difference_ratio, derivative_ratio)
    k_norm = max(float(np.linalg.norm(K.hess(t, p), 2)) for t in times)
    f_norm = float(np.linalg.norm(F.hess(0.0, p), 2))
    if autonomous:
        lhs = T * f_norm
    elif epsilon < 1:
        lhs = T * (epsilon / (1 - epsilon) + k_norm + f_norm)
    else:
        lhs = np.inf
    certificate = RelativeAutonomyCertificate(
        epsilon_measured = float(epsilon),
        hessian_norms = (k_norm, f_norm),
        T = T,
        lhs_of_bound = float(lhs),
        difference_ratio = float(difference_ratio),
        derivative_ratio = float(derivative_ratio),
        )
    log.info("Relative autonomy at {}: {}".format(p.tolist(), certificate))
    return certificate


class SDMCertificate(object):
    """Evidence table for a symplectically degenerate maximum, one row per frame."""

    def __init__(self, unipotent = None, table = None, point = None):
        self.unipotent = unipotent
        self.table = table if table is not None else pd.DataFrame()
        self.point = point

    def __repr__(self):
        return "SDMCertificate(unipotent = {}, frames = {}, passes = {})".format(
            self.unipotent, len(self.table), self.passes)

    @property
    def passes(self):
        if not self.unipotent or self.table.empty:
            return False
        hessian_norms = self.table['hessian_norm'].values
        return bool(
            all(value is not False for value in self.table['K1_pass'])
            and (self.table['K3_residual'] < 1e-6).all()
            and np.all(np.diff(hessian_norms) <= 1e-9 + 1e-6 * hessian_norms[:-1])
            )

    def to_json(self):
        certificate_json = collections.OrderedDict()
        certificate_json['point'] = self.point
        certificate_json['unipotent'] = self.unipotent
        certificate_json['passes'] = self.passes
        certificate_json['frames'] = self.table.to_dict(orient = 'records')
        return certificate_json


def _strict_maximum_at_all_times(K, times, box_radius, grid):
    origin = np.zeros(2 * K.n)
    autonomous_result = None
    for t in times:
        if K.profile.derivative(t) == 0:
            if autonomous_result is None:
                autonomous_result = lm2_maximum_test(ScalarField.from_hamiltonian(K, t), origin, box_radius, grid = grid)
            result = autonomous_result
        else:
            result = lm2_maximum_test(ScalarField.from_hamiltonian(K, t), origin, box_radius, grid = grid)
        if not result:
            log.debug("K_t has no strict maximum at t = {}".format(t))
            return False
    return True


def sdm_certificate(H, p, sigmas = (1e-1, 1e-2, 1e-3), frames = None, radius = 0.1, t_samples = 16, grid = 17,
        step = DEFAULT_STEP, order = 4, check_maximum = True, degree = None):
    """Frame-by-frame check of a symplectically degenerate maximum at the one-periodic point p.

    Frames come from squeezing dφ_H at p to within each sigma unless given.
    For every frame the time-one map is written in frame coordinates on a ball
    small enough for its generating function, which is replaced by a
    polynomial fit before building K. The table reports the largest
    ‖d²(K_t)_p‖ in the frame, whether every sampled K_t has a strict
    maximum and how far the linearized flows of K, seen in the standard
    frame, are from those of the first frame.
    """
    p = np.asarray(p, dtype = float)
    result = flow(H, p, 0.0, H.period, step = step, order = order, energy = False)
    displacement = float(np.max(np.abs(H.difference(result.lifted_end_point, p))))
    if displacement > 1e-8:
        raise PreconditionError("Point {} is not one-periodic (displacement {:.3e})".format(p.tolist(), displacement))
    monodromy = result.monodromy
    if not is_unipotent(monodromy):
        log.info("Linearized time-one map at {} is not unipotent".format(p.tolist()))
        return SDMCertificate(unipotent = False, point = p.tolist())
    if frames is None:
        frames = [squeeze_frame(monodromy, sigma, base_point = p) for sigma in sigmas]
    else:
        sigmas = [None] * len(frames)
    times = np.arange(t_samples) / t_samples
    rows = list()
    reference_flows = None
    for index, (sigma, frame) in enumerate(zip(sigmas, frames)):
        chart_radius = radius
        for halving in range(MAX_RADIUS_HALVINGS):
            mapping = NearIdentityMap.from_flow(H, frame = frame, radius = chart_radius, step = step, order = order)
            if mapping.c1_distance < SOLVABILITY_THRESHOLD:
                break
            chart_radius /= 2
        else:
            raise SolvabilityError("Time-one map stays far from the identity in frame {} down to radius {}".format(
                index, chart_radius))
        if chart_radius < radius:
            log.info("Frame {}: chart radius shrunk to {:.3e}".format(index, chart_radius))
        F = generating_function(mapping)
        surrogate, fit_residual = PolynomialFunction.fit(F, chart_radius, degree = degree)
        K = hamiltonian_from_gf(surrogate, order = order)
        hessian_norm = max(float(np.linalg.norm(K.linear_hessian(t), 2)) for t in times)
        inverse = np.linalg.inv(frame.matrix)
        flows = [frame.matrix @ K.linearized_flow(t) @ inverse for t in times]
        if reference_flows is None:
            reference_flows = flows
        k3_residual = max(float(np.linalg.norm(a - b, 2)) for a, b in zip(flows, reference_flows))
        k1_pass = None
        if check_maximum:
            try:
                k1_pass = _strict_maximum_at_all_times(K, times, chart_radius / 2, grid)
            except (IsolationError, ResolutionError, ShrinkRadiusError) as error:
                log.warning("Frame {}: maximum test failed with {}: {}".format(index, type(error).__name__, error))
                k1_pass = False
        row = collections.OrderedDict()
        row['frame'] = index
        row['sigma'] = sigma
        row['radius'] = chart_radius
        row['c1_distance'] = mapping.c1_distance
        row['closedness_residual'] = F.closedness_residual
        row['fit_residual'] = fit_residual
        row['hessian_norm'] = hessian_norm
        row['K1_pass'] = k1_pass
        row['K3_residual'] = k3_residual
        rows.append(row)
        log.info("Frame {}: hessian norm {:.3e}, K1 {}, K3 residual {:.3e}".format(
            index, hessian_norm, k1_pass, k3_residual))
    return SDMCertificate(unipotent = True, table = pd.DataFrame(rows), point = p.tolist())


def signature_battery(fields, box_radius, grid = None):
    """Signature and Poincaré–Hopf degree of each (name, field, point) entry."""
    rows = list()
    for name, field, point in fields:
        signature = local_morse_homology(field, point, box_radius, grid = grid)
        row = collections.OrderedDict()
        row['name'] = name
        row['betti'] = ' '.join(str(rank) for rank in signature.betti)
        row['euler_characteristic'] = signature.euler_characteristic
        row['degree'] = poincare_hopf_degree(field, point, box_radius)
        rows.append(row)
    return pd.DataFrame(rows)
