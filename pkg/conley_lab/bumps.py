"""Radial bump Hamiltonians F(ρ), ρ = |z|²/2, and the census of their periodic orbits.

The derivative F' is a C¹ cubic Hermite spline through the knots of the
profile with F'' = 0 at every knot, so F is C². On a shell where F is
monotone, the T-periodic orbits fill the spheres where T·F'(ρ) = ±2πl.
A sphere on a decreasing shell is run clockwise and has action
T·F(ρ) + lπr²; on an increasing shell the action is T·F(ρ) - lπr².

    >>> profile = build_profile(kind = 'single', C = 2.0)
    >>> [entry.family for entry in census(profile, 1)]
    ['plateau_trivial', 'inner_spheres', 'inner_spheres', 'inner_spheres', 'outer_spheres', 'outer_spheres', 'outer_spheres', 'plateau_trivial']
"""


import collections
import fractions
import logging


import numpy as np
import pandas as pd
from scipy import interpolate, optimize


from conley_lab.errors import CrossValidationError, InfeasibleProfileError, PreconditionError
from conley_lab.hamiltonians import action, flow, radial


log = logging.getLogger(__name__)


ROOT_TOL = 1e-12
TANGENCY_TOL = 1e-9
IRRATIONALITY_DENOMINATOR = 64
IRRATIONALITY_TOL = 1e-9
RADIUS_MATCH_TOL = 1e-6
ACTION_MATCH_TOL = 1e-8
CLOSURE_TOL = 1e-7
DISPLACEMENT_ENERGY = 0.1

INNER_SPHERES = 'inner_spheres'
OUTER_SPHERES = 'outer_spheres'
PLATEAU_TRIVIAL = 'plateau_trivial'
THIRD_GROUP = 'third_group'
FOURTH_GROUP = 'fourth_group'
CONSTANT_SLOPE = 'constant_slope'


def cz_range(family, l, n):
    """Conley–Zehnder indices of the 2n orbits a sphere of the family splits into under a small perturbation."""
    if family == INNER_SPHERES:
        return (2 * l - 1) * n + 1, (2 * l + 1) * n
    if family == OUTER_SPHERES:
        return (2 * l - 1) * n, (2 * l + 1) * n - 1
    if family == THIRD_GROUP:
        return -(2 * l + 1) * n, -(2 * l - 1) * n - 1
    if family == FOURTH_GROUP:
        return -(2 * l + 1) * n + 1, -(2 * l - 1) * n
    raise PreconditionError("No index range for family {}".format(family))


def looks_irrational(value, max_denominator = IRRATIONALITY_DENOMINATOR, tol = IRRATIONALITY_TOL):
    """True when no fraction with denominator <= max_denominator lies within tol of value.

        >>> looks_irrational(0.75), looks_irrational(np.sqrt(2))
        (False, True)
    """
    fraction = fractions.Fraction(float(value)).limit_denominator(max_denominator)
    return abs(float(fraction) - value) > tol


class Shell(object):
    """A ρ-interval on which F is monotone (or has constant slope)."""

    def __init__(self, family, lower, upper, direction):
        self.family = family
        self.lower = lower
        self.upper = upper
        self.direction = direction

    def __repr__(self):
        return "Shell({}, [{}, {}])".format(self.family, self.lower, self.upper)


class CensusEntry(object):
    tangent = False

    def __init__(self, family = None, l = None, radius = None, rho = None, action = None, cz_lo = None, cz_hi = None,
            tangent = False):
        self.family = family
        self.l = l
        self.radius = radius
        self.rho = rho
        self.action = action
        self.cz_lo = cz_lo
        self.cz_hi = cz_hi
        self.tangent = tangent

    def __repr__(self):
        return "CensusEntry({}, l = {}, radius = {}, action = {})".format(self.family, self.l, self.radius, self.action)

    @property
    def is_trivial(self):
        return self.family == PLATEAU_TRIVIAL

    def to_json(self):
        entry_json = collections.OrderedDict()
        for key in ['family', 'l', 'radius', 'rho', 'action', 'cz_lo', 'cz_hi', 'tangent']:
            entry_json[key] = getattr(self, key)
        return entry_json


class BumpProfile(object):
    """Radial profile built from knots ρ_k and derivative values F'(ρ_k).

    ``plateaus`` lists (ρ_lo, ρ_hi, value) of the regions where F is constant,
    with ρ_hi = None for the outer region.
    """
    kind = None
    n = 1
    parameters = None

    def __init__(self, knots, slopes, peak, shells, plateaus, kind = None, n = 1, parameters = None):
        self.knots = np.asarray(knots, dtype = float)
        self.slopes = np.asarray(slopes, dtype = float)
        assert np.all(np.diff(self.knots) > 0), "Knots must increase"
        self.peak = float(peak)
        self.shells = shells
        self.plateaus = plateaus
        self.kind = kind
        self.n = n
        self.parameters = parameters if parameters is not None else collections.OrderedDict()
        self.spline = interpolate.CubicHermiteSpline(self.knots, self.slopes, np.zeros_like(self.slopes))
        self.integral = self.spline.antiderivative()
        self.curvature = self.spline.derivative()

    def __repr__(self):
        return "BumpProfile({}, peak = {}, knots = {})".format(self.kind, self.peak, self.knots.tolist())

    def _clamp(self, rho):
        return np.clip(np.asarray(rho, dtype = float), self.knots[0], self.knots[-1])

    def value(self, rho):
        return self.peak + self.integral(self._clamp(rho))

    def derivative(self, rho):
        return self.spline(self._clamp(rho))

    def second_derivative(self, rho):
        rho = np.asarray(rho, dtype = float)
        return np.where(rho >= self.knots[-1], 0.0, self.curvature(self._clamp(rho)))

    @property
    def slope_mid(self):
        return self.slopes[3]

    @property
    def minimum(self):
        return float(min(value for _, _, value in self.plateaus))

    @property
    def support_radius(self):
        """Radius r of the ball outside which a single bump is constant."""
        return float(np.sqrt(2 * self.knots[4]))

    def max_slope(self, shell):
        rho = np.linspace(shell.lower, shell.upper, 257)
        return float(np.max(np.abs(self.derivative(rho))))

    def hamiltonian(self, period = 1.0):
        return radial(self.value, self.derivative, self.second_derivative, n = self.n, period = period,
            name = '{}_bump'.format(self.kind))

    def constraint_residuals(self, samples = 2049):
        """Worst violation of each shape condition, zero when it holds."""
        residuals = collections.OrderedDict()
        rho = np.linspace(self.knots[0], self.knots[-1], samples)
        slope = self.derivative(rho)
        curvature = self.second_derivative(rho)
        for index, shell in enumerate(self.shells):
            inside = (rho >= shell.lower) & (rho <= shell.upper)
            if shell.family == CONSTANT_SLOPE:
                residuals['{}_{}'.format(shell.family, index)] = float(np.max(np.abs(curvature[inside])))
                continue
            convex = shell.family in (OUTER_SPHERES, THIRD_GROUP)
            sign = 1.0 if convex else -1.0
            residuals['{}_curvature'.format(shell.family)] = float(np.max(np.maximum(-sign * curvature[inside], 0)))
            residuals['{}_monotone'.format(shell.family)] = float(
                np.max(np.maximum(-shell.direction * slope[inside], 0)))
        inner = (rho <= self.knots[1])
        residuals['inner_slope_below_pi'] = float(max(np.max(np.abs(slope[inner])) - np.pi, 0))
        residuals['irrational_slope'] = 0.0 if all(
            looks_irrational(abs(s) / np.pi) for s in self.band_slopes if s != 0) else 1.0
        return residuals

    @property
    def band_slopes(self):
        return [self.slopes[k] for k in range(len(self.knots) - 1) if self.slopes[k] == self.slopes[k + 1] != 0]

    def to_json(self):
        profile_json = collections.OrderedDict()
        profile_json['kind'] = self.kind
        profile_json['n'] = self.n
        profile_json['parameters'] = collections.OrderedDict(
            (key, float(value)) for key, value in self.parameters.items())
        profile_json['knots'] = self.knots.tolist()
        profile_json['slopes'] = self.slopes.tolist()
        profile_json['constraint_residuals'] = self.constraint_residuals()
        return profile_json


def _band_slope(drop, rho_minus, rho_prime, rho_double_prime, rho_outer, inner_slope):
    """Slope of the constant band making the profile change by ``drop`` over [0, rho_outer].

    Each Hermite piece with zero end curvature integrates to the mean of its end slopes times its width.
    """
    width = (rho_prime - rho_minus) / 2 + (rho_double_prime - rho_prime) + (rho_outer - rho_double_prime) / 2
    return (drop - inner_slope * rho_prime / 2) / width


def _check_radii(names, radii):
    for (lower_name, lower), (upper_name, upper) in zip(zip(names, radii), zip(names[1:], radii[1:])):
        if not lower < upper:
            raise InfeasibleProfileError(
                "Radii must increase strictly: {} = {} is not below {} = {}".format(lower_name, lower, upper_name, upper),
                constraint = 'radii_order',
                )


def _decreasing_part(drop, rho, inner_slope):
    """Knots and slopes of a decreasing standard bump from 0 down by ``drop`` on [0, rho[4]]."""
    rho_minus, rho_prime, rho_double_prime, rho_outer = rho[1:]
    if not 0 <= inner_slope < np.pi:
        raise InfeasibleProfileError("Inner slope {} violates |F'| < pi on the inner ball".format(inner_slope),
            constraint = 'inner_slope_below_pi')
    if drop == 0 and inner_slope == 0:
        return np.zeros(5)
    slope = _band_slope(drop, rho_minus, rho_prime, rho_double_prime, rho_outer, inner_slope)
    if not slope > inner_slope:
        raise InfeasibleProfileError(
            "A drop of {} is too small for inner slope {}: |F'| cannot increase on the concave shell".format(
                drop, inner_slope),
            constraint = 'concave_shell',
            )
    return -np.array([0.0, inner_slope, slope, slope, 0.0])


def build_profile(kind = 'single', n = 1, **parameters):
    """Standard bump (``single``) or the two-shell profile rising again to an outer maximum (``two_shell``)."""
    if kind == 'single':
        return single_bump(n = n, **parameters)
    if kind == 'two_shell':
        return two_shell_bump(n = n, **parameters)
    raise PreconditionError("Unknown profile kind {}".format(kind))


def single_bump(C = 2.0, floor = 0.0, r_minus = 0.1, r_prime = 0.2, r_double_prime = 0.4, r = 0.5, inner_slope = 0.0,
        n = 1):
    names = ['r_minus', 'r_prime', 'r_double_prime', 'r']
    radii = [r_minus, r_prime, r_double_prime, r]
    if not r_minus > 0:
        raise InfeasibleProfileError("r_minus must be positive, got {}".format(r_minus), constraint = 'radii_order')
    _check_radii(names, radii)
    if C < floor:
        raise InfeasibleProfileError("Peak C = {} lies below the floor {}".format(C, floor), constraint = 'decreasing')
    rho = np.array([0.0] + [radius ** 2 / 2 for radius in radii])
    slopes = _decreasing_part(C - floor, rho, inner_slope)
    shells = [
        Shell(INNER_SPHERES, rho[0], rho[2], -1),
        Shell(CONSTANT_SLOPE, rho[2], rho[3], -1),
        Shell(OUTER_SPHERES, rho[3], rho[4], -1),
        ]
    plateaus = [(0.0, 0.0 if inner_slope else rho[1], C), (rho[4], None, floor)]
    parameters = collections.OrderedDict(zip(['C', 'floor'] + names + ['inner_slope'],
        [C, floor] + radii + [inner_slope]))
    profile = BumpProfile(rho, slopes, C, shells, plateaus, kind = 'single', n = n, parameters = parameters)
    log.debug("Built {} with band slope {}".format(profile, profile.slope_mid))
    return profile


def two_shell_bump(c = 1.0, a = 0.5, max_value = 1.5, r_minus = 0.05, r_prime = 0.1, r_double_prime = 0.2, r = 0.25,
        R = 0.4, R_prime = 0.45, R_double_prime = 0.55, R_plus = 0.6, inner_slope = 0.0, n = 1):
    """Flat at c inside r_minus, decreasing to the plateau a on [r, R], rising to max_value beyond R_plus."""
    names = ['r_minus', 'r_prime', 'r_double_prime', 'r', 'R', 'R_prime', 'R_double_prime', 'R_plus']
    radii = [r_minus, r_prime, r_double_prime, r, R, R_prime, R_double_prime, R_plus]
    if not r_minus > 0:
        raise InfeasibleProfileError("r_minus must be positive, got {}".format(r_minus), constraint = 'radii_order')
    _check_radii(names, radii)
    if not c > a:
        raise InfeasibleProfileError("Plateau a = {} must lie below c = {}".format(a, c), constraint = 'plateau_below_peak')
    if not max_value > c:
        raise InfeasibleProfileError("Outer value {} must exceed c = {}".format(max_value, c),
            constraint = 'max_above_peak')
    rho = np.array([0.0] + [radius ** 2 / 2 for radius in radii])
    decreasing = _decreasing_part(c - a, rho[:5], inner_slope)
    rise_slope = (max_value - a) / ((rho[6] - rho[5]) / 2 + (rho[7] - rho[6]) + (rho[8] - rho[7]) / 2)
    slopes = np.concatenate([decreasing, [0.0, rise_slope, rise_slope, 0.0]])
    shells = [
        Shell(INNER_SPHERES, rho[0], rho[2], -1),
        Shell(CONSTANT_SLOPE, rho[2], rho[3], -1),
        Shell(OUTER_SPHERES, rho[3], rho[4], -1),
        Shell(THIRD_GROUP, rho[5], rho[6], 1),
        Shell(CONSTANT_SLOPE, rho[6], rho[7], 1),
        Shell(FOURTH_GROUP, rho[7], rho[8], 1),
        ]
    plateaus = [(0.0, 0.0 if inner_slope else rho[1], c), (rho[4], rho[5], a), (rho[8], None, max_value)]
    parameters = collections.OrderedDict(zip(['c', 'a', 'max_value'] + names + ['inner_slope'],
        [c, a, max_value] + radii + [inner_slope]))
    return BumpProfile(rho, slopes, c, shells, plateaus, kind = 'two_shell', n = n, parameters = parameters)


def validate_window(profile, T = 1, epsilon = None, delta = None, displacement_energy = DISPLACEMENT_ENERGY):
    """Check the action-window inequalities for the profile at period T.

    Returns (valid, violated) where violated lists 'window: inequality'
    strings. All inequalities are strict. ``displacement_energy`` is a
    user constant bounding the variation from below, None skips that check.
    """
    assert epsilon is not None and delta is not None, "Both epsilon and delta are needed"
    parameters = profile.parameters
    r_minus = parameters['r_minus']
    r = parameters['r']
    checks = list()
    checks.append(('window', 'delta > 0', delta > 0))
    if profile.kind == 'single':
        C, floor = parameters['C'], parameters['floor']
        checks.append(('bump_window', 'epsilon > delta', epsilon > delta))
        checks.append(('bump_window', 'epsilon > pi r^2', epsilon > np.pi * r ** 2))
        if floor == 0:
            checks.append(('bump_window', 'T C - delta > 2 pi r^2', T * C - delta > 2 * np.pi * r ** 2))
        else:
            checks.append(('bump_window_floor', 'T C - delta > T min F + 2 pi r^2',
                T * C - delta > T * floor + 2 * np.pi * r ** 2))
        checks.append(('bump_window', 'delta < pi r_minus^2', delta < np.pi * r_minus ** 2))
        variation = T * (C - floor)
    else:
        c, a, max_value = parameters['c'], parameters['a'], parameters['max_value']
        checks.append(('two_shell_window', 'T (c - a) > 2 pi r^2 + delta', T * (c - a) > 2 * np.pi * r ** 2 + delta))
        checks.append(('two_shell_window', 'delta < pi r_minus^2', delta < np.pi * r_minus ** 2))
        checks.append(('two_shell_window', 'delta < c - a', delta < c - a))
        checks.append(('max_above_window', 'max H > c + epsilon', max_value > c + epsilon))
        checks.append(('max_above_window', 'pi r^2 < epsilon', np.pi * r ** 2 < epsilon))
        variation = T * (c - a)
    if displacement_energy is not None:
        checks.append(('displacement_energy', 'variation > h(B_r)', variation > displacement_energy))
    violated = ['{}: {}'.format(window, inequality) for window, inequality, holds in checks if not holds]
    for violation in violated:
        log.info("Window violated for {} at T = {}: {}".format(profile, T, violation))
    return not violated, violated


def _sphere_entries(profile, shell, T, n):
    entries = list()
    top = profile.max_slope(shell)
    turns = T * top / (2 * np.pi)
    l_max = int(np.floor(turns))
    if l_max >= 1 and abs(turns - round(turns)) < ROOT_TOL:
        l_max = int(round(turns)) - 1
        log.warning("T F' = 2 pi {} at the end of {}: dropping the tangent sphere".format(int(round(turns)), shell))
    for l in range(1, l_max + 1):
        target = shell.direction * 2 * np.pi * l / T

        def residual(rho):
            return float(profile.derivative(rho)) - target

        rho = optimize.brentq(residual, shell.lower, shell.upper, xtol = ROOT_TOL)
        tangent = abs(float(profile.second_derivative(rho))) * T < TANGENCY_TOL
        if tangent:
            log.warning("Tangent root for l = {} on {} at rho = {}".format(l, shell, rho))
        cz_lo, cz_hi = cz_range(shell.family, l, n)
        entries.append(CensusEntry(
            family = shell.family,
            l = l,
            radius = float(np.sqrt(2 * rho)),
            rho = float(rho),
            action = float(T * profile.value(rho) - shell.direction * 2 * np.pi * l * rho),
            cz_lo = cz_lo,
            cz_hi = cz_hi,
            tangent = tangent,
            ))
    return entries


def census(profile, T, n = None):
    """All T-periodic orbit families of the profile, shell by shell in increasing ρ with l increasing within a shell."""
    assert T > 0, "Period must be positive, got {}".format(T)
    n = profile.n if n is None else n
    for slope in profile.band_slopes:
        turns = T * abs(slope) / (2 * np.pi)
        if abs(turns - round(turns)) < IRRATIONALITY_TOL:
            raise InfeasibleProfileError(
                "T |F'| = 2 pi {} on the constant-slope band: the whole band is periodic".format(int(round(turns))),
                constraint = 'irrational_slope',
                )
    plateau_entries = list()
    for lower, upper, value in profile.plateaus:
        is_centre = lower == 0
        plateau_entries.append(CensusEntry(
            family = PLATEAU_TRIVIAL,
            l = 0,
            radius = float(np.sqrt(2 * lower)),
            rho = float(lower),
            action = float(T * value),
            cz_lo = n if is_centre else None,
            cz_hi = n if is_centre else None,
            ))
    entries = [plateau_entries[0]]
    for shell in profile.shells:
        if shell.family == CONSTANT_SLOPE:
            continue
        entries.extend(_sphere_entries(profile, shell, T, n))
        following = [entry for entry, (lower, _, _) in zip(plateau_entries[1:], profile.plateaus[1:])
            if lower == shell.upper]
        entries.extend(following)
    log.info("Census of {} at T = {}: {} entries".format(profile, T, len(entries)))
    return entries


def census_table(entries):
    return pd.DataFrame(
        [entry.to_json() for entry in entries],
        columns = ['family', 'l', 'radius', 'rho', 'action', 'cz_lo', 'cz_hi', 'tangent'],
        )


def ring_candidates(profile, T, per_turn = 16):
    """(ρ, k) with T·F'(ρ) = 2πk, k ≠ 0, along the whole ray.

    The radial flow turns the circle of ρ by the angle T·F'(ρ), so its closed
    rings are the roots of the rotation number T·F'(ρ)/2π at nonzero
    integers. F' is monotone between knots, so a grid containing the knots
    brackets every root once.
    """
    turns_max = T * max([profile.max_slope(shell) for shell in profile.shells] + [0.0]) / (2 * np.pi)
    count = per_turn * (int(np.ceil(turns_max)) + 1) * len(profile.knots)
    grid = np.union1d(profile.knots, np.linspace(profile.knots[0], profile.knots[-1], count))
    turns = T * profile.derivative(grid) / (2 * np.pi)
    candidates = list()
    for rho, value in zip(grid, turns):
        if value != 0 and value == round(value):
            candidates.append((float(rho), int(round(value))))
    for lower, upper, lower_turns, upper_turns in zip(grid[:-1], grid[1:], turns[:-1], turns[1:]):
        low, high = sorted((lower_turns, upper_turns))
        for k in range(int(np.floor(low)) + 1, int(np.ceil(high))):
            if k == 0:
                continue
            rho = optimize.brentq(lambda rho: T * float(profile.derivative(rho)) / (2 * np.pi) - k, lower, upper,
                xtol = ROOT_TOL)
            candidates.append((float(rho), k))
    return sorted(candidates)


def detect_rings(profile, T, order = 6, step = None, closure_tol = CLOSURE_TOL):
    """Flow every candidate ring of the profile for time T and keep the ones that close up.

    All candidates are integrated in one batch starting on the positive
    x-axis. A ring closes up when its end point misses the start by an angle
    below closure_tol times the 2π|k| it has turned. One Newton step on that
    angle polishes the radius against the numerical flow; the action is
    measured on the trajectory. Returns (rings, rejected) as lists of dictionaries.
    """
    candidates = ring_candidates(profile, T)
    if not candidates:
        return list(), list()
    H = profile.hamiltonian()
    if step is None:
        top = max([profile.max_slope(shell) for shell in profile.shells] + [1.0])
        step = min(0.01, 0.05 / top)
    seeds = np.zeros((len(candidates), 2))
    seeds[:, 0] = [np.sqrt(2 * rho) for rho, _ in candidates]
    result = flow(H, seeds, 0.0, float(T), step = step, order = order, record = True, energy = False)
    rings, rejected = list(), list()
    for index, (rho, k) in enumerate(candidates):
        end = result.lifted_end_point[index]
        radius = seeds[index, 0]
        closure = float(np.arctan2(end[1], end[0]))
        # d(angle of the end point)/d(initial radius) from the monodromy
        column = result.monodromy[index][:, 0]
        slope = (end[0] * column[1] - end[1] * column[0]) / float(end @ end)
        polished = radius - closure / slope if slope != 0 else radius
        ring = collections.OrderedDict()
        ring['l'] = abs(k)
        ring['rotation'] = k
        ring['radius'] = float(polished)
        ring['rho'] = float(polished ** 2 / 2)
        ring['closure'] = closure
        ring['action'] = action(H, result.trajectory[:-1, index], period = float(T))
        (rings if abs(closure) < closure_tol * 2 * np.pi * abs(k) else rejected).append(ring)
    log.info("T = {}: {} of {} candidate rings close up".format(T, len(rings), len(candidates)))
    return rings, rejected


def cross_validate(profile, T, n = 1, order = 6, step = None, closure_tol = CLOSURE_TOL):
    """Match the census spheres of the profile against rings detected by integrating the flow in R².

    Raises CrossValidationError carrying the report when any entry is unmatched either way.
    """
    if n != 1 or profile.n != 1:
        raise PreconditionError("Cross validation runs in R^2 only")
    entries = [entry for entry in census(profile, T, n = 1) if not entry.is_trivial]
    rings, rejected = detect_rings(profile, T, order = order, step = step, closure_tol = closure_tol)
    matches = list()
    unmatched_entries = list()
    free_rings = list(rings)
    for entry in entries:
        match = None
        for ring in free_rings:
            if (abs(ring['radius'] - entry.radius) < RADIUS_MATCH_TOL
                    and abs(ring['action'] - entry.action) < ACTION_MATCH_TOL):
                match = ring
                break
        if match is None:
            unmatched_entries.append(entry)
            continue
        free_rings.remove(match)
        row = entry.to_json()
        row['detected_radius'] = match['radius']
        row['detected_action'] = match['action']
        row['radius_error'] = abs(match['radius'] - entry.radius)
        row['action_error'] = abs(match['action'] - entry.action)
        matches.append(row)
    report = collections.OrderedDict()
    report['T'] = T
    report['profile'] = profile.to_json()
    report['matched'] = matches
    report['unmatched_census'] = [entry.to_json() for entry in unmatched_entries]
    report['unmatched_orbits'] = free_rings
    report['rejected_candidates'] = rejected
    # Spheres of a radial Hamiltonian are degenerate; indices would need the perturbed profile
    report['cz_checked'] = False
    report['passes'] = not unmatched_entries and not free_rings
    if not report['passes']:
        raise CrossValidationError(
            "{} census entries and {} detected rings are unmatched at T = {}".format(
                len(unmatched_entries), len(free_rings), T),
            report = report,
            )
    log.info("Cross validation at T = {}: {} spheres matched".format(T, len(matches)))
    return report
