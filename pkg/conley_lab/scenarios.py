"""Scenario files and the task runners behind the conley-lab command.

A scenario is one YAML document:

    name: forced pendulum scan
    task: conley-scan
    hamiltonian:
      builtin: forced_pendulum
      parameters: {forcing: 0.05}
    parameters:
      T_max: 6
      seeds: {per_dimension: 24}
    seed: 0

Unknown keys are rejected with a ScenarioError naming the key path.
"""


import collections
import datetime
import hashlib
import json
import logging
import os


import humanize
import numpy as np
import pandas as pd
import yaml


import conley_lab
from conley_lab import default_config_files_directory
from conley_lab.bumps import build_profile, census, census_table, cross_validate, DISPLACEMENT_ENERGY, validate_window
from conley_lab.config import Config
from conley_lab.errors import (
    ConleyLabError,
    CrossValidationError,
    ExpressionError,
    InternalError,
    NumericalError,
    PreconditionError,
    ScenarioError,
    )
from conley_lab.generating_functions import generating_function, hamiltonian_from_gf, NearIdentityMap
from conley_lab.hamiltonians import action_spectrum, builtin, builtin_hamiltonians, DEFAULT_STEP, flow, from_expression, iterate
from conley_lab.indices import DEGENERACY_TOL, iteration_profile, SymplecticPath
from conley_lab.morse import (
    local_morse_homology,
    poincare_hopf_degree,
    read_grid_file,
    relative_autonomy_check,
    ScalarField,
    sdm_certificate,
    )
from conley_lab.orbits import (
    distance_to_orbit,
    find_periodic_points,
    MAX_NEWTON_ITERATIONS,
    MAX_PERIOD,
    NEWTON_TOL,
    ORBIT_MATCH_TOL,
    orbit_table,
    seed_grid,
    simple_period_report,
    STRONGLY_DEGENERATE,
    )
from conley_lab.symplectic import (
    frame_norm,
    is_symplectic,
    squeeze_frame,
    squeeze_unipotent,
    symplectic_defect,
    SymplecticFrame,
    )


log = logging.getLogger(__name__)


TOP_LEVEL_KEYS = ['name', 'task', 'hamiltonian', 'profile', 'parameters', 'output', 'seed']
HAMILTONIAN_KEYS = ['builtin', 'expression', 'parameters', 'n', 'period', 'phase_space']
PROFILE_KEYS = ['kind', 'parameters']
SEED_KEYS = ['per_dimension', 'box', 'center', 'random']


# Field converters

def _number(value, field):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError("expected a number, got {!r}".format(value), field = field)
    return float(value)


def _integer(value, field):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError("expected an integer, got {!r}".format(value), field = field)
    return value


def _boolean(value, field):
    if not isinstance(value, bool):
        raise ScenarioError("expected true or false, got {!r}".format(value), field = field)
    return value


def _text(value, field):
    if not isinstance(value, str):
        raise ScenarioError("expected a string, got {!r}".format(value), field = field)
    return value


def _vector(value, field):
    if not isinstance(value, list):
        raise ScenarioError("expected a list of numbers, got {!r}".format(value), field = field)
    return [_number(item, '{}[{}]'.format(field, index)) for index, item in enumerate(value)]


def _numbers(value, field):
    return _vector(value if isinstance(value, list) else [value], field)


def _periods(value, field):
    periods = [_integer(item, field) for item in (value if isinstance(value, list) else [value])]
    if any(period < 1 for period in periods):
        raise ScenarioError("periods must be positive, got {}".format(periods), field = field)
    return periods


def _matrix(value, field):
    if not isinstance(value, list) or not value:
        raise ScenarioError("expected a list of rows, got {!r}".format(value), field = field)
    rows = [_vector(row, '{}[{}]'.format(field, index)) for index, row in enumerate(value)]
    if any(len(row) != len(rows) for row in rows):
        raise ScenarioError("matrix must be square", field = field)
    return rows


def _seeds(value, field):
    if not isinstance(value, dict):
        raise ScenarioError("expected a mapping, got {!r}".format(value), field = field)
    _reject_unknown(value, SEED_KEYS, field)
    seeds = dict()
    if 'per_dimension' in value:
        seeds['per_dimension'] = _integer(value['per_dimension'], field + '.per_dimension')
    if 'box' in value:
        seeds['box'] = _number(value['box'], field + '.box')
    if 'center' in value:
        seeds['center'] = _vector(value['center'], field + '.center')
    if 'random' in value:
        seeds['random'] = _integer(value['random'], field + '.random')
    return seeds


def _reject_unknown(block, allowed, path):
    unknown = [key for key in block if key not in allowed]
    if unknown:
        field = '{}.{}'.format(path, unknown[0]) if path else str(unknown[0])
        raise ScenarioError("unknown key (allowed: {})".format(', '.join(allowed)), field = field)


NUMERICS = [
    ('step', _number, None),
    ('order', _integer, None),
    ('newton_tol', _number, None),
    ]

task_schemas = collections.OrderedDict([
    ('index', [('point', _vector, None), ('T_max', _integer, 10), ('step', _number, None), ('order', _integer, None)]),
    ('normal-form', [('matrix', _matrix, None), ('point', _vector, None), ('sigmas', _numbers, [1e-1, 1e-2, 1e-3]),
        ('step', _number, None), ('order', _integer, None)]),
    ('genfun', [('point', _vector, None), ('radius', _number, 0.1), ('step', _number, 0.05), ('order', _integer, 4),
        ('t_samples', _integer, 16), ('autonomy_T', _number, None), ('probe_points', _integer, None)]),
    ('orbits', [('periods', _periods, [1]), ('seeds', _seeds, None)] + NUMERICS),
    ('local-homology', [('field', _text, None), ('m', _integer, None), ('grid_file', _text, None),
        ('point', _vector, None), ('box_radius', _number, 0.5), ('grid', _integer, None), ('time', _number, 0.0),
        ('degree', _boolean, True)]),
    ('census', [('periods', _periods, [1]), ('epsilon', _number, None), ('delta', _number, None),
        ('displacement_energy', _number, DISPLACEMENT_ENERGY), ('cross_validate', _boolean, False)]),
    ('conley-scan', [('T_max', _integer, 6), ('seeds', _seeds, None), ('sdm', _boolean, True),
        ('sdm_radius', _number, 0.1), ('sdm_sigmas', _numbers, [1e-1, 1e-2, 1e-3])] + NUMERICS),
    ])


class Scenario(object):
    """A validated scenario document."""
    name = None
    task = None
    hamiltonian = None
    profile = None
    output = None
    seed = 0
    source_path = None

    def __init__(self, document = None, source_path = None, task = None):
        if not isinstance(document, dict):
            raise ScenarioError("a scenario must be a mapping, got {!r}".format(type(document).__name__),
                field = 'scenario')
        _reject_unknown(document, TOP_LEVEL_KEYS, '')
        self.source_path = source_path
        self.document = document
        self.name = _text(document.get('name', 'scenario'), 'name')
        self.task = _text(document.get('task', task), 'task')
        if task is not None and self.task != task:
            raise ScenarioError("scenario is for task {} but {} was requested".format(self.task, task), field = 'task')
        if self.task not in task_schemas:
            raise ScenarioError("unknown task {!r}".format(self.task), field = 'task')
        self.seed = _integer(document.get('seed', 0), 'seed')
        if self.seed < 0:
            raise ScenarioError("seed must be a non-negative integer", field = 'seed')
        self.output = _text(document['output'], 'output') if 'output' in document else None
        self.hamiltonian = self._validate_hamiltonian(document.get('hamiltonian'))
        self.profile = self._validate_profile(document.get('profile'))
        self.parameters = self._validate_parameters(document.get('parameters', dict()))

    def __repr__(self):
        return "Scenario({}, task = {})".format(self.name, self.task)

    @classmethod
    def load(cls, path, task = None):
        if not os.path.exists(path):
            raise ScenarioError("{} does not exist".format(path), field = 'scenario')
        with open(path) as scenario_file:
            try:
                document = yaml.safe_load(scenario_file)
            except yaml.YAMLError as error:
                raise ScenarioError("malformed YAML: {}".format(error), field = 'scenario')
        return cls(document = document, source_path = path, task = task)

    @staticmethod
    def _validate_hamiltonian(block):
        if block is None:
            return None
        if not isinstance(block, dict):
            raise ScenarioError("expected a mapping", field = 'hamiltonian')
        _reject_unknown(block, HAMILTONIAN_KEYS, 'hamiltonian')
        if ('builtin' in block) == ('expression' in block):
            raise ScenarioError("give exactly one of builtin and expression", field = 'hamiltonian')
        spec = dict()
        if 'builtin' in block:
            spec['builtin'] = _text(block['builtin'], 'hamiltonian.builtin')
            if spec['builtin'] not in builtin_hamiltonians:
                raise ScenarioError("unknown built-in {!r} (available: {})".format(
                    spec['builtin'], ', '.join(builtin_hamiltonians.keys())), field = 'hamiltonian.builtin')
            for key in ('n', 'period', 'phase_space'):
                if key in block:
                    raise ScenarioError("built-ins take it under parameters", field = 'hamiltonian.{}'.format(key))
        else:
            spec['expression'] = _text(block['expression'], 'hamiltonian.expression')
            spec['n'] = _integer(block.get('n', 1), 'hamiltonian.n')
            spec['period'] = _number(block.get('period', 1.0), 'hamiltonian.period')
            spec['phase_space'] = _text(block.get('phase_space', 'euclidean'), 'hamiltonian.phase_space')
            if spec['phase_space'] not in ('euclidean', 'torus'):
                raise ScenarioError("expected euclidean or torus", field = 'hamiltonian.phase_space')
        parameters = block.get('parameters', dict())
        if not isinstance(parameters, dict):
            raise ScenarioError("expected a mapping", field = 'hamiltonian.parameters')
        if parameters and 'expression' in spec:
            raise ScenarioError("expressions take no parameters", field = 'hamiltonian.parameters')
        spec['parameters'] = parameters
        return spec

    @staticmethod
    def _validate_profile(block):
        if block is None:
            return None
        if not isinstance(block, dict):
            raise ScenarioError("expected a mapping", field = 'profile')
        _reject_unknown(block, PROFILE_KEYS, 'profile')
        kind = _text(block.get('kind', 'single'), 'profile.kind')
        if kind not in ('single', 'two_shell'):
            raise ScenarioError("expected single or two_shell, got {!r}".format(kind), field = 'profile.kind')
        parameters = block.get('parameters', dict())
        if not isinstance(parameters, dict):
            raise ScenarioError("expected a mapping", field = 'profile.parameters')
        for key, value in parameters.items():
            if key != 'n':
                _number(value, 'profile.parameters.{}'.format(key))
        return dict(kind = kind, parameters = parameters)

    def _validate_parameters(self, block):
        if not isinstance(block, dict):
            raise ScenarioError("expected a mapping", field = 'parameters')
        schema = task_schemas[self.task]
        _reject_unknown(block, [key for key, _, _ in schema], 'parameters')
        parameters = collections.OrderedDict()
        for key, converter, default in schema:
            if key in block and block[key] is not None:
                parameters[key] = converter(block[key], 'parameters.{}'.format(key))
            else:
                parameters[key] = default
        return parameters

    def build_hamiltonian(self):
        spec = self.hamiltonian
        if spec is None:
            raise ScenarioError("task {} needs a Hamiltonian".format(self.task), field = 'hamiltonian')
        if 'builtin' in spec:
            try:
                return builtin(spec['builtin'], **spec['parameters'])
            except TypeError as error:
                raise ScenarioError(str(error), field = 'hamiltonian.parameters')
        try:
            return from_expression(spec['expression'], n = spec['n'], period = spec['period'],
                phase_space = spec['phase_space'])
        except ExpressionError as error:
            raise ScenarioError(str(error), field = 'hamiltonian.expression')

    def build_profile(self):
        if self.profile is None:
            raise ScenarioError("task {} needs a profile".format(self.task), field = 'profile')
        try:
            return build_profile(kind = self.profile['kind'], **self.profile['parameters'])
        except TypeError as error:
            raise ScenarioError(str(error), field = 'profile.parameters')

    def resolve(self, path):
        """Path relative to the directory of the scenario file."""
        if os.path.isabs(path) or self.source_path is None:
            return path
        return os.path.join(os.path.dirname(os.path.abspath(self.source_path)), path)

    def to_json(self):
        return self.document


class ResultWriter(object):
    """Writes task outputs into one directory and keeps their sha256 for the manifest."""

    def __init__(self, directory, float_format = '%.17g'):
        self.directory = directory
        self.float_format = float_format
        self.outputs = collections.OrderedDict()
        if not os.path.isdir(directory):
            log.info("Creating output directory {}".format(directory))
            os.makedirs(directory)

    def _register(self, name):
        path = os.path.join(self.directory, name)
        with open(path, 'rb') as output_file:
            content = output_file.read()
        self.outputs[name] = collections.OrderedDict([
            ('sha256', hashlib.sha256(content).hexdigest()),
            ('bytes', len(content)),
            ])
        log.info("Wrote {}".format(path))
        return path

    def write_csv(self, name, data_frame):
        path = os.path.join(self.directory, name)
        data_frame.to_csv(path, index = False, float_format = self.float_format, lineterminator = '\n')
        return self._register(name)

    def write_json(self, name, content, register = True):
        path = os.path.join(self.directory, name)
        with open(path, 'w') as json_file:
            json.dump(content, json_file, indent = 2, default = to_builtin)
            json_file.write('\n')
        return self._register(name) if register else path


def to_builtin(value):
    """JSON fallback for numpy scalars and arrays, complex numbers and frames."""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.bool_, )):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if hasattr(value, 'to_json'):
        return value.to_json()
    raise TypeError("{!r} is not JSON serializable".format(value))


def versions():
    import scipy
    import sympy
    return collections.OrderedDict([
        ('conley_lab', conley_lab.__version__),
        ('numpy', np.__version__),
        ('scipy', scipy.__version__),
        ('pandas', pd.__version__),
        ('sympy', sympy.__version__),
        ])


class TaskContext(object):
    """What a task runner needs besides its scenario."""

    def __init__(self, scenario, writer, config, threads = 1):
        self.scenario = scenario
        self.writer = writer
        self.config = config
        self.threads = threads
        self.rng = np.random.default_rng(scenario.seed)

    @property
    def parameters(self):
        return self.scenario.parameters

    def numeric(self, key, section = 'numerics', option = None, kind = float):
        value = self.parameters.get(key)
        if value is not None:
            return value
        option = key if option is None else option
        return self.config.getint(section, option) if kind is int else self.config.getfloat(section, option)

    def seeds(self, H):
        spec = self.parameters.get('seeds')
        if spec is None:
            option = 'torus_seeds_per_dimension' if H.is_torus else 'seeds_per_dimension'
            return seed_grid(H, per_dimension = self.config.getint('orbits', option))
        if 'random' in spec:
            count = spec['random']
            if H.is_torus:
                return self.rng.uniform(0, 1, size = (count, 2 * H.n))
            box = spec.get('box', 1.0)
            center = np.zeros(2 * H.n) if spec.get('center') is None else np.asarray(spec['center'])
            return center + self.rng.uniform(-box, box, size = (count, 2 * H.n))
        return seed_grid(H, per_dimension = spec.get('per_dimension'), box = spec.get('box', 1.0),
            center = spec.get('center'))

    def point(self, dimension):
        point = self.parameters.get('point')
        if point is None:
            return np.zeros(dimension)
        if len(point) != dimension:
            raise ScenarioError("expected {} coordinates, got {}".format(dimension, len(point)),
                field = 'parameters.point')
        return np.asarray(point, dtype = float)


tasks = collections.OrderedDict()


def register_task(name):
    def decorator(runner):
        tasks[name] = runner
        return runner
    return decorator


def _fixed_point_flow(H, p, step, order):
    result = flow(H, p, 0.0, H.period, step = step, order = order, record = True, energy = False)
    displacement = float(np.max(np.abs(H.difference(result.lifted_end_point, p))))
    if displacement > 1e-8:
        raise PreconditionError("Point {} is not fixed by the time-one map (displacement {:.3e})".format(
            p.tolist(), displacement))
    return result


@register_task('index')
def run_index(context):
    H = context.scenario.build_hamiltonian()
    p = context.point(2 * H.n)
    result = _fixed_point_flow(H, p, context.numeric('step'), context.numeric('order', kind = int))
    profile = iteration_profile(result.monodromy_path(), context.parameters['T_max'],
        degeneracy_tol = context.numeric('degeneracy_tol'))
    table = pd.DataFrame(
        [(T, index, index is None) for T, index in profile],
        columns = ['T', 'cz', 'degenerate'],
        )
    context.writer.write_csv('index_profile.csv', table)


@register_task('normal-form')
def run_normal_form(context):
    if context.parameters['matrix'] is not None:
        phi = np.array(context.parameters['matrix'], dtype = float)
    else:
        H = context.scenario.build_hamiltonian()
        p = context.point(2 * H.n)
        phi = _fixed_point_flow(H, p, context.numeric('step'), context.numeric('order', kind = int)).monodromy
    tol_symp = context.numeric('tol_symp')
    rows = list()
    frames = list()
    for sigma in context.parameters['sigmas']:
        psi, split = squeeze_unipotent(phi, sigma, tol = tol_symp)
        conjugate = psi @ phi @ np.linalg.inv(psi)
        frame = squeeze_frame(phi, sigma)
        row = collections.OrderedDict()
        row['sigma'] = sigma
        row['residual'] = float(np.linalg.norm(conjugate - np.eye(len(phi)), 2))
        row['frame_residual'] = frame_norm(phi - np.eye(len(phi)), frame)
        row['psi_symplectic_defect'] = symplectic_defect(psi)
        row['psi_symplectic'] = is_symplectic(psi, tol = tol_symp)
        row['split_preserved_by_psi'] = split.preserved_by(psi)
        rows.append(row)
        frames.append(collections.OrderedDict([
            ('sigma', sigma),
            ('psi', psi),
            ('split', split.to_json()),
            ('frame', frame.to_json()),
            ]))
    context.writer.write_csv('normal_form.csv', pd.DataFrame(rows))
    context.writer.write_json('normal_form.json', collections.OrderedDict([('matrix', phi), ('squeezes', frames)]))


@register_task('genfun')
def run_genfun(context):
    H = context.scenario.build_hamiltonian()
    p = context.point(2 * H.n)
    parameters = context.parameters
    frame = SymplecticFrame.standard(H.n, base_point = p)
    mapping = NearIdentityMap.from_flow(H, frame = frame, radius = parameters['radius'], step = parameters['step'],
        order = parameters['order'])
    probe_points = parameters['probe_points']
    mapping.probe_points = probe_points if probe_points is not None else context.config.probe_points(H.n)
    F = generating_function(mapping, threshold = context.config.getfloat('genfun', 'solvability_threshold'),
        simpson_intervals = context.config.getint('genfun', 'simpson_intervals'))
    context.writer.write_csv('genfun.csv', F.sample_table())
    report = F.to_json()
    report['gf2_constant'] = F.gf2_constant()
    K = hamiltonian_from_gf(F)
    report['estimates'] = K.estimates(t_samples = parameters['t_samples'])
    if parameters['autonomy_T'] is not None:
        certificate = relative_autonomy_check(F, K, np.zeros(2 * H.n), parameters['autonomy_T'],
            parameters['radius'] / 2, t_samples = parameters['t_samples'])
        report['relative_autonomy'] = certificate.to_json()
    context.writer.write_json('genfun.json', report)


@register_task('orbits')
def run_orbits(context):
    H = context.scenario.build_hamiltonian()
    seeds = context.seeds(H)
    records = list()
    for T in context.parameters['periods']:
        records.extend(find_periodic_points(
            H, T,
            seeds = seeds,
            newton_tol = context.numeric('newton_tol'),
            step = context.numeric('step'),
            order = context.numeric('order', kind = int),
            threads = context.threads,
            max_iterations = context.numeric('max_iterations', section = 'orbits', option = 'max_newton_iterations',
                kind = int),
            index_tol = context.numeric('degeneracy_tol'),
            ))
    context.writer.write_csv('orbits.csv', orbit_table(records))
    context.writer.write_json('orbits.json', [record.to_json() for record in records])
    context.writer.write_csv('action_vs_T.csv', pd.DataFrame(
        [(record.period, record.action, record.degeneracy) for record in records],
        columns = ['T', 'action', 'class'],
        ))


@register_task('local-homology')
def run_local_homology(context):
    parameters = context.parameters
    if parameters['grid_file'] is not None:
        field = read_grid_file(context.scenario.resolve(parameters['grid_file']))
    elif parameters['field'] is not None:
        if parameters['m'] is None:
            raise ScenarioError("an expression field needs its dimension m", field = 'parameters.m')
        try:
            field = ScalarField.from_expression(parameters['field'], parameters['m'])
        except ExpressionError as error:
            raise ScenarioError(str(error), field = 'parameters.field')
    else:
        field = ScalarField.from_hamiltonian(context.scenario.build_hamiltonian(), parameters['time'])
    point = context.point(field.m)
    grid = parameters['grid'] if parameters['grid'] is not None else context.config.homology_grid(field.m)
    signature = local_morse_homology(field, point, parameters['box_radius'], grid = grid)
    report = signature.to_json()
    report['detects_maximum'] = signature.detects_maximum
    if parameters['degree'] and not field.sampled:
        report['degree'] = poincare_hopf_degree(field, point, parameters['box_radius'], rng = context.rng)
    context.writer.write_json('signature.json', report)


@register_task('census')
def run_census(context):
    profile = context.scenario.build_profile()
    parameters = context.parameters
    tables = list()
    windows = collections.OrderedDict()
    windows['profile'] = profile.to_json()
    for T in parameters['periods']:
        table = census_table(census(profile, T))
        table.insert(0, 'T', T)
        tables.append(table)
        if parameters['epsilon'] is not None and parameters['delta'] is not None:
            valid, violated = validate_window(profile, T, epsilon = parameters['epsilon'], delta = parameters['delta'],
                displacement_energy = parameters['displacement_energy'])
            windows['T = {}'.format(T)] = collections.OrderedDict([('valid', valid), ('violated', violated)])
    census_data = pd.concat(tables, ignore_index = True)
    context.writer.write_csv('census.csv', census_data)
    context.writer.write_json('window.json', windows)
    context.writer.write_csv('action_vs_T.csv', census_data[['T', 'family', 'l', 'action']])
    if parameters['cross_validate']:
        reports = list()
        try:
            for T in parameters['periods']:
                reports.append(cross_validate(profile, T))
        except CrossValidationError as error:
            reports.append(error.report)
            raise
        finally:
            context.writer.write_json('cross_validation.json', reports)


def conley_scan(H, T_max, seeds = None, newton_tol = NEWTON_TOL, step = DEFAULT_STEP, order = 4, threads = 1, sdm = True,
        sdm_radius = 0.1, sdm_sigmas = (1e-1, 1e-2, 1e-3), max_iterations = MAX_NEWTON_ITERATIONS,
        degeneracy_tol = DEGENERACY_TOL):
    """Periodic orbits of H up to period T_max with the evidence around them.

    Returns an ordered bundle of tables and a summary: simple periods,
    every orbit found, the action scaling of iterated fixed points, the index
    of their iterates and, for strongly degenerate fixed points, the
    symplectically degenerate maximum certificate.
    """
    if T_max > MAX_PERIOD:
        raise PreconditionError("Scans are limited to T_max <= {}, got {}".format(MAX_PERIOD, T_max))
    options = dict(newton_tol = newton_tol, step = step, order = order, threads = threads, max_iterations = max_iterations,
        index_tol = degeneracy_tol)
    records_by_period = collections.OrderedDict()
    simple_periods = simple_period_report(H, T_max, seeds = seeds, records_by_period = records_by_period, **options)
    fixed = records_by_period[1]
    scaling_rows = list()
    for T in range(2, T_max + 1):
        H_T = iterate(H, T)
        for index, record in enumerate(fixed):
            matches = [other for other in records_by_period[T] if distance_to_orbit(H_T, other, record.point) < ORBIT_MATCH_TOL]
            row = collections.OrderedDict()
            row['T'] = T
            row['orbit'] = index
            row['action'] = record.action
            row['expected'] = None if record.action is None else T * record.action
            row['found'] = bool(matches)
            row['iterate_action'] = matches[0].action if matches else None
            row['error'] = (abs(matches[0].action - T * record.action)
                if matches and record.action is not None and matches[0].action is not None else None)
            row['multiplier_error'] = (
                float(max(np.min(np.abs(matches[0].multipliers - value ** T)) for value in record.multipliers))
                if matches else None)
            scaling_rows.append(row)
    index_rows = list()
    for index, record in enumerate(fixed):
        path = SymplecticPath(times = record.times, matrices = record.monodromy_samples)
        for T, cz in iteration_profile(path, T_max, degeneracy_tol = degeneracy_tol):
            index_rows.append(collections.OrderedDict([('orbit', index), ('T', T), ('cz', cz),
                ('class', record.degeneracy)]))
    sdm_tables = list()
    sdm_summary = list()
    if sdm:
        for index, record in enumerate(fixed):
            if record.degeneracy != STRONGLY_DEGENERATE:
                continue
            try:
                certificate = sdm_certificate(H, record.point, sigmas = sdm_sigmas, radius = sdm_radius,
                    step = record.times[1] - record.times[0])
            except NumericalError as error:
                log.warning("No degenerate maximum certificate for fixed point {}: {}".format(index, error))
                sdm_summary.append(collections.OrderedDict([('orbit', index), ('error', str(error))]))
                continue
            table = certificate.table.copy()
            table.insert(0, 'orbit', index)
            sdm_tables.append(table)
            sdm_summary.append(collections.OrderedDict([('orbit', index), ('unipotent', certificate.unipotent),
                ('passes', certificate.passes)]))
    taxonomy = collections.OrderedDict()
    for record in fixed:
        taxonomy[record.degeneracy] = taxonomy.get(record.degeneracy, 0) + 1
    summary = collections.OrderedDict()
    summary['hamiltonian'] = H.name
    summary['T_max'] = T_max
    summary['orbits_per_period'] = [int(count) for count in simple_periods['orbits']]
    summary['simple_orbits_per_period'] = [int(count) for count in simple_periods['simple_orbits']]
    summary['fixed_point_taxonomy'] = taxonomy
    summary['root_degrees'] = sorted(set(degree for record in fixed for degree in record.root_degrees))
    summary['fixed_point_spectrum'] = action_spectrum(fixed)
    summary['spectrum_scaling_holds'] = all(
        row['found'] and (row['error'] is None or row['error'] < 1e-6) for row in scaling_rows)
    summary['sdm'] = sdm_summary
    bundle = collections.OrderedDict()
    bundle['simple_periods'] = simple_periods
    bundle['orbits'] = orbit_table([record for T in records_by_period for record in records_by_period[T]])
    bundle['spectrum_scaling'] = pd.DataFrame(scaling_rows, columns = ['T', 'orbit', 'action', 'expected', 'found',
        'iterate_action', 'error', 'multiplier_error'])
    bundle['index_vs_T'] = pd.DataFrame(index_rows, columns = ['orbit', 'T', 'cz', 'class'])
    bundle['sdm'] = pd.concat(sdm_tables, ignore_index = True) if sdm_tables else None
    bundle['summary'] = summary
    log.info("Conley scan of {} up to T = {}: {} simple orbits".format(
        H.name, T_max, sum(summary['simple_orbits_per_period'])))
    return bundle


@register_task('conley-scan')
def run_conley_scan(context):
    H = context.scenario.build_hamiltonian()
    parameters = context.parameters
    bundle = conley_scan(
        H,
        parameters['T_max'],
        seeds = context.seeds(H),
        newton_tol = context.numeric('newton_tol'),
        step = context.numeric('step'),
        order = context.numeric('order', kind = int),
        threads = context.threads,
        sdm = parameters['sdm'],
        sdm_radius = parameters['sdm_radius'],
        sdm_sigmas = parameters['sdm_sigmas'],
        max_iterations = context.numeric('max_iterations', section = 'orbits', option = 'max_newton_iterations',
            kind = int),
        degeneracy_tol = context.numeric('degeneracy_tol'),
        )
    for name in ['simple_periods', 'orbits', 'spectrum_scaling', 'index_vs_T', 'sdm']:
        if bundle[name] is not None:
            context.writer.write_csv('{}.csv'.format(name), bundle[name])
    context.writer.write_json('summary.json', bundle['summary'])


def run(scenario, out = None, threads = 1, config = None):
    """Run a scenario, writing its outputs, manifest.json and on failure FAILED.json into the output directory.

    Errors are re-raised after the failure marker is written, exceptions from
    outside conley_lab as an InternalError caused by them.
    """
    config = Config(config_files_directory = default_config_files_directory) if config is None else config
    directory = out if out is not None else (scenario.output if scenario.output is not None else os.path.join(
        'results', scenario.name.replace(' ', '_')))
    writer = ResultWriter(directory, float_format = config.get('output', 'float_format', raw = True))
    context = TaskContext(scenario, writer, config, threads = threads)
    start_time = datetime.datetime.now()
    failure = None
    try:
        tasks[scenario.task](context)
    except Exception as error:
        if isinstance(error, ConleyLabError):
            failure = error
        else:
            # numpy / scipy failures such as LinAlgError surface as numerical errors
            log.exception("Unexpected {} in task {}".format(type(error).__name__, scenario.task))
            failure = InternalError("{}: {}".format(type(error).__name__, error))
            failure.__cause__ = error
        log.error("Task {} of {} failed: {}: {}".format(scenario.task, scenario.name, type(failure).__name__, failure))
        marker = collections.OrderedDict([
            ('task', scenario.task),
            ('error', type(failure).__name__),
            ('message', str(failure)),
            ])
        if failure is not error:
            marker['cause'] = type(error).__name__
        writer.write_json('FAILED.json', marker)
    finally:
        elapsed = datetime.datetime.now() - start_time
        manifest = collections.OrderedDict()
        manifest['inputs'] = collections.OrderedDict([
            ('scenario', scenario.to_json()),
            ('scenario_file', scenario.source_path),
            ('task', scenario.task),
            ('seed', scenario.seed),
            ('threads', threads),
            ])
        manifest['versions'] = versions()
        manifest['timings'] = collections.OrderedDict([
            ('started', start_time.isoformat()),
            ('seconds', elapsed.total_seconds()),
            ('human', humanize.naturaldelta(elapsed)),
            ])
        manifest['outputs'] = writer.outputs
        manifest['status'] = 'failed' if failure is not None else 'ok'
        writer.write_json('manifest.json', manifest, register = False)
    if failure is not None:
        raise failure
    log.info("Task {} of {} done in {}".format(scenario.task, scenario.name, humanize.naturaldelta(elapsed)))
    return writer
