"""Periodic points of Hamiltonian time-one maps and their classification.

Orbits of period T are found by Newton shooting on z -> φ^T(z) - z from a
lattice of seeds, merged when they lie on a common trajectory, and tagged
with their Floquet multipliers, Conley–Zehnder index, action and
degeneracy class.

    >>> import numpy as np
    >>> classify_degeneracy(np.exp(2j * np.pi * np.array([1, -1]) / 3))
    ('nondegenerate', [3])
"""


import collections
import concurrent.futures
import fractions
import logging


import numpy as np
import pandas as pd
from scipy import interpolate, optimize


from conley_lab.errors import ContractibilityError, IsolationError, PreconditionError, StiffnessError
from conley_lab.expressions import hamiltonian_variable_names
from conley_lab.hamiltonians import action, DEFAULT_STEP, flow, iterate
from conley_lab.indices import cz_index, DEGENERACY_TOL, SymplecticPath


log = logging.getLogger(__name__)


NONDEGENERATE = 'nondegenerate'
WEAKLY_NONDEGENERATE = 'weakly-nondegenerate'
STRONGLY_DEGENERATE = 'strongly-degenerate'

NEWTON_TOL = 1e-10
MAX_NEWTON_ITERATIONS = 30
MAX_HALVINGS = 8
ORBIT_MATCH_TOL = 1e-6
CLUSTER_RADIUS = 1e-3
NEWTON_FLOOR = 1e-14
MULTIPLIER_TOL = 1e-6
ROOT_DENOMINATOR_CAP = 64
MAX_PERIOD = 12


class OrbitRecord(object):
    """A periodic point of period T with its Floquet data."""
    action = None
    cz = None
    is_simple = True

    def __init__(self, point = None, period = None, multipliers = None, degeneracy = None, root_degrees = None,
            residual = None, times = None, trajectory = None, monodromy_samples = None):
        self.point = np.asarray(point, dtype = float)
        self.period = int(period)
        self.multipliers = np.asarray(multipliers, dtype = complex)
        self.degeneracy = degeneracy
        self.root_degrees = list(root_degrees) if root_degrees is not None else list()
        self.residual = residual
        self.times = times
        self.trajectory = trajectory
        self.monodromy_samples = monodromy_samples

    def __repr__(self):
        return "OrbitRecord(T = {}, point = {}, action = {}, cz = {}, {})".format(
            self.period, np.round(self.point, 8).tolist(), self.action, self.cz, self.degeneracy)

    def to_json(self):
        record_json = collections.OrderedDict()
        record_json['T'] = self.period
        record_json['point'] = self.point.tolist()
        record_json['action'] = self.action
        record_json['multipliers'] = [[float(value.real), float(value.imag)] for value in self.multipliers]
        record_json['cz'] = self.cz
        record_json['class'] = self.degeneracy
        record_json['simple'] = self.is_simple
        record_json['degrees'] = self.root_degrees
        record_json['residual'] = self.residual
        return record_json


def classify_degeneracy(multipliers, tol = MULTIPLIER_TOL):
    """Degeneracy class and sorted degrees d >= 2 of the primitive roots of unity among the multipliers.

        >>> classify_degeneracy([1.0, 1.0, -1.0, -1.0])
        ('weakly-nondegenerate', [2])
    """
    multipliers = np.asarray(multipliers, dtype = complex)
    near_one = np.abs(multipliers - 1) < tol
    if near_one.all():
        degeneracy = STRONGLY_DEGENERATE
    elif near_one.any():
        degeneracy = WEAKLY_NONDEGENERATE
    else:
        degeneracy = NONDEGENERATE
    degrees = set()
    for multiplier in multipliers[~near_one]:
        if abs(abs(multiplier) - 1) >= tol:
            continue
        turns = (np.angle(multiplier) / (2 * np.pi)) % 1.0
        fraction = fractions.Fraction(float(turns)).limit_denominator(ROOT_DENOMINATOR_CAP)
        if fraction.denominator >= 2 and abs(float(fraction) - turns) < tol:
            degrees.add(fraction.denominator)
    return degeneracy, sorted(degrees)


def seed_grid(H, per_dimension = None, box = 1.0, center = None):
    """Uniform seed lattice: [0, 1)^{2n} on the torus, [c - box, c + box]^{2n} otherwise."""
    dimension = 2 * H.n
    if H.is_torus:
        per_dimension = 64 if per_dimension is None else per_dimension
        axis = np.arange(per_dimension) / per_dimension
        axes = [axis] * dimension
    else:
        per_dimension = 9 if per_dimension is None else per_dimension
        center = np.zeros(dimension) if center is None else np.asarray(center, dtype = float)
        axes = [c + np.linspace(-box, box, per_dimension) for c in center]
    return np.stack(np.meshgrid(*axes, indexing = 'ij'), axis = -1).reshape(-1, dimension)


def seeds_from_spec(H, seeds):
    if seeds is None:
        return seed_grid(H)
    if isinstance(seeds, dict):
        return seed_grid(H, per_dimension = seeds.get('per_dimension'), box = seeds.get('box', 1.0),
            center = seeds.get('center'))
    seeds = np.asarray(seeds, dtype = float)
    if seeds.ndim != 2 or seeds.shape[1] != 2 * H.n:
        raise PreconditionError("Expected seeds of shape (N, {}), got {}".format(2 * H.n, seeds.shape))
    return seeds


def _shoot(H_T, z, step, order):
    """φ^T(z) - z and dφ^T(z), with infinite residual where the integration fails."""
    duration = H_T.period
    try:
        result = flow(H_T, z, 0.0, duration, step = step, order = order, energy = False)
        return H_T.difference(result.lifted_end_point, z), result.monodromy
    except StiffnessError:
        if len(z) == 1:
            return np.full(z.shape, np.inf), np.broadcast_to(np.eye(z.shape[-1]), z.shape + (z.shape[-1], )).copy()
    halves = [_shoot(H_T, part, step, order) for part in np.array_split(z, 2)]
    return np.concatenate([half[0] for half in halves]), np.concatenate([half[1] for half in halves])


def newton_shooting(H_T, seeds, newton_tol = NEWTON_TOL, max_iterations = MAX_NEWTON_ITERATIONS, step = DEFAULT_STEP,
        order = 4):
    """Batched damped Newton on φ^T(z) - z.

    Returns points, residual norms and a mask of converged seeds.
    """
    z = np.array(seeds, dtype = float)
    identity = np.eye(z.shape[-1])
    residual, monodromy = _shoot(H_T, z, step, order)
    norms = np.max(np.abs(residual), axis = -1)
    # Converged seeds keep polishing while the residual drops: degenerate roots converge linearly
    active = np.isfinite(norms) & (norms >= NEWTON_FLOOR)
    for iteration in range(max_iterations):
        indices = np.flatnonzero(active)
        if not len(indices):
            break
        direction = -(np.linalg.pinv(monodromy[indices] - identity) @ residual[indices][..., np.newaxis])[..., 0]
        factor = np.ones(len(indices))
        pending = np.ones(len(indices), dtype = bool)
        for halving in range(MAX_HALVINGS):
            trial = z[indices[pending]] + factor[pending, np.newaxis] * direction[pending]
            trial_residual, trial_monodromy = _shoot(H_T, trial, step, order)
            trial_norms = np.max(np.abs(trial_residual), axis = -1)
            better = trial_norms < norms[indices[pending]]
            accepted = indices[pending][better]
            z[accepted] = trial[better]
            residual[accepted] = trial_residual[better]
            monodromy[accepted] = trial_monodromy[better]
            norms[accepted] = trial_norms[better]
            pending[np.flatnonzero(pending)[better]] = False
            if not pending.any():
                break
            factor[pending] /= 2
        # Seeds whose residual no longer decreases are given up
        active[indices[pending]] = False
        active &= norms >= NEWTON_FLOOR
        log.debug("Newton iteration {}: {} seeds still active".format(iteration, int(active.sum())))
    converged = np.isfinite(norms) & (norms < newton_tol)
    return H_T.reduce(z), norms, converged


def _parallel_newton(H_T, seeds, threads, **kwargs):
    if threads is None or threads <= 1 or len(seeds) < 2 * threads:
        return newton_shooting(H_T, seeds, **kwargs)
    chunks = np.array_split(seeds, threads)
    with concurrent.futures.ThreadPoolExecutor(max_workers = threads) as executor:
        results = list(executor.map(lambda chunk: newton_shooting(H_T, chunk, **kwargs), chunks))
    return tuple(np.concatenate([result[i] for result in results]) for i in range(3))


def distance_to_orbit(H_T, record, point):
    """Smallest distance from point to the recorded trajectory, refined between samples."""
    times, trajectory = record.times, record.trajectory
    gaps = np.linalg.norm(H_T.difference(trajectory, point), axis = -1)
    if gaps.min() > 10 * max(np.max(np.linalg.norm(np.diff(trajectory, axis = 0), axis = -1)), ORBIT_MATCH_TOL):
        return float(gaps.min())
    velocities = np.array([H_T.vector_field(t, z) for t, z in zip(times, trajectory)])
    spline = interpolate.CubicHermiteSpline(times, trajectory, velocities, axis = 0)
    nearest = int(np.argmin(gaps))
    bracket = (times[max(nearest - 1, 0)], times[min(nearest + 1, len(times) - 1)])
    solution = optimize.minimize_scalar(
        lambda t: float(np.linalg.norm(H_T.difference(spline(t), point))),
        bounds = bracket,
        method = 'bounded',
        options = dict(xatol = 1e-12),
        )
    return min(float(gaps.min()), float(solution.fun))


def merge_roots(H_T, points, norms, newton_tol, step = DEFAULT_STEP, order = 4):
    """Merge converged roots closer than 10 newton_tol, or lying in one cluster of a degenerate root.

    Two nearby roots belong to the same cluster when the residual at their
    midpoint is still below newton_tol. The root with the smaller residual
    represents the cluster.
    """
    distinct = list()
    for point, residual in zip(points, norms):
        merged = False
        for index, (kept, kept_residual) in enumerate(distinct):
            gap = np.max(np.abs(H_T.difference(point, kept)))
            if gap < 10 * newton_tol:
                merged = True
            elif gap < CLUSTER_RADIUS:
                midpoint = kept + H_T.difference(point, kept) / 2
                midpoint_residual, _ = _shoot(H_T, midpoint[np.newaxis], step, order)
                merged = np.max(np.abs(midpoint_residual)) < newton_tol
            if merged:
                if residual < kept_residual:
                    distinct[index] = (point, residual)
                break
        if not merged:
            distinct.append((point, residual))
    return distinct


def _record(H, H_T, T, point, residual, step, order, degeneracy_tol, index_tol):
    result = flow(H_T, point, 0.0, H_T.period, step = step, order = order, record = True, energy = False)
    multipliers = np.linalg.eigvals(result.monodromy)
    degeneracy, degrees = classify_degeneracy(multipliers, tol = degeneracy_tol)
    record = OrbitRecord(
        point = point,
        period = T,
        multipliers = multipliers,
        degeneracy = degeneracy,
        root_degrees = degrees,
        residual = float(residual),
        times = result.times,
        trajectory = result.trajectory,
        monodromy_samples = result.monodromy_samples,
        )
    if degeneracy == NONDEGENERATE:
        try:
            record.cz = cz_index(SymplecticPath(times = result.times, matrices = result.monodromy_samples),
                degeneracy_tol = index_tol)
        except ArithmeticError as error:
            log.warning("No index for orbit at {}: {}".format(np.round(point, 8).tolist(), error))
    try:
        record.action = action(H_T, result.trajectory[:-1], period = H_T.period)
    except ContractibilityError:
        log.debug("Orbit at {} is not contractible: no action".format(np.round(point, 8).tolist()))
    steps_per_period = (len(result.times) - 1) // T
    for divisor in range(1, T):
        if T % divisor:
            continue
        if np.max(np.abs(H.difference(result.trajectory[divisor * steps_per_period], point))) < ORBIT_MATCH_TOL:
            record.is_simple = False
            break
    return record


def find_periodic_points(H, T, seeds = None, newton_tol = NEWTON_TOL, step = DEFAULT_STEP, order = 4, threads = 1,
        max_iterations = MAX_NEWTON_ITERATIONS, degeneracy_tol = MULTIPLIER_TOL, index_tol = DEGENERACY_TOL):
    """Distinct T-periodic orbits of H found from the seeds, sorted by point.

    degeneracy_tol classifies the multipliers, index_tol is the eigenvalue-one tolerance of the index.
    """
    assert int(T) == T and T >= 1, "Period must be a positive integer, got {}".format(T)
    T = int(T)
    H_T = iterate(H, T)
    seeds = seeds_from_spec(H, seeds)
    points, norms, converged = _parallel_newton(H_T, seeds, threads, newton_tol = newton_tol,
        max_iterations = max_iterations, step = step, order = order)
    failed = int(np.sum(~converged))
    if failed:
        log.info("Period {}: {} of {} seeds did not converge".format(T, failed, len(seeds)))
    points, norms = points[converged], norms[converged]
    order_index = np.lexsort(np.round(points, 8).T[::-1]) if len(points) else np.zeros(0, dtype = int)
    points, norms = points[order_index], norms[order_index]
    distinct = merge_roots(H_T, points, norms, newton_tol, step, order)
    records = list()
    for point, residual in distinct:
        if any(distance_to_orbit(H_T, record, point) < ORBIT_MATCH_TOL for record in records):
            continue
        records.append(_record(H, H_T, T, point, residual, step, order, degeneracy_tol, index_tol))
    log.info("Period {}: {} orbits from {} converged seeds".format(T, len(records), len(points)))
    return records


def orbit_table(records):
    """One row per orbit: T, point coordinates, action, multipliers, cz, class, simple, degrees."""
    rows = list()
    for record in records:
        row = collections.OrderedDict()
        row['T'] = record.period
        for name, value in zip(hamiltonian_variable_names(len(record.point) // 2), record.point):
            row[name] = value
        row['action'] = record.action
        row['multipliers'] = ' '.join('{!r}'.format(complex(value)) for value in record.multipliers)
        row['cz'] = record.cz
        row['class'] = record.degeneracy
        row['simple'] = record.is_simple
        row['degrees'] = ' '.join(str(degree) for degree in record.root_degrees)
        rows.append(row)
    return pd.DataFrame(rows)


def simple_period_report(H, T_max, seeds = None, newton_tol = NEWTON_TOL, step = DEFAULT_STEP, order = 4,
        threads = 1, records_by_period = None, max_iterations = MAX_NEWTON_ITERATIONS, index_tol = DEGENERACY_TOL):
    """Per period T <= T_max, the number of simple orbits and their actions.

    Periods divisible by a root-of-unity degree of a fixed point are flagged.
    """
    if T_max > MAX_PERIOD:
        raise PreconditionError("Simple period reports are limited to T <= {}, got {}".format(MAX_PERIOD, T_max))
    seeds = seeds_from_spec(H, seeds)
    per_dimension = int(round(len(seeds) ** (1.0 / (2 * H.n))))
    if per_dimension < 4 * T_max:
        log.warning("{} seeds per dimension may miss orbits of period up to {}".format(per_dimension, T_max))
    records_by_period = collections.OrderedDict() if records_by_period is None else records_by_period
    rows = list()
    fixed_point_degrees = set()
    for T in range(1, T_max + 1):
        if T not in records_by_period:
            records_by_period[T] = find_periodic_points(H, T, seeds = seeds, newton_tol = newton_tol, step = step,
                order = order, threads = threads, max_iterations = max_iterations, index_tol = index_tol)
        records = records_by_period[T]
        if len(records) > max(4, len(seeds) // 2):
            raise IsolationError("Period {}: {} orbits from {} seeds, periodic points are not isolated".format(
                T, len(records), len(seeds)), parameter = T)
        if T == 1:
            for record in records:
                fixed_point_degrees.update(record.root_degrees)
        simple = [record for record in records if record.is_simple]
        row = collections.OrderedDict()
        row['T'] = T
        row['orbits'] = len(records)
        row['simple_orbits'] = len(simple)
        row['actions'] = ' '.join('{!r}'.format(record.action) for record in simple if record.action is not None)
        row['divisible_by_root_degree'] = any(T % degree == 0 for degree in fixed_point_degrees)
        rows.append(row)
    return pd.DataFrame(rows)
