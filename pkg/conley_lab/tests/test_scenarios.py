import hashlib
import json
import os

import numpy as np
import pandas as pd
import pytest
import yaml


from conley_lab import test_config_files_directory
from conley_lab.config import Config
from conley_lab.errors import InternalError, PreconditionError, ResolutionError, ScenarioError, SolvabilityError
from conley_lab.generating_functions import probe_grid
from conley_lab.orbits import NONDEGENERATE
from conley_lab.scenarios import conley_scan, run, Scenario, tasks
from conley_lab.hamiltonians import builtin
from conley_lab.symplectic import random_unipotent
from conley_lab.scripts.conley_lab import EXIT_NUMERICAL, EXIT_USAGE, EXIT_VALIDATION, main


current_dir = os.path.dirname(os.path.abspath(__file__))
data_dir = os.path.join(current_dir, 'data_files')

config = Config(config_files_directory = test_config_files_directory)


def scenario_path(name):
    return os.path.join(data_dir, name)


def read_json(directory, name):
    with open(os.path.join(directory, name)) as json_file:
        return json.load(json_file)


def write_scenario(tmp_path, document, name = 'scenario.yaml'):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(document))
    return str(path)


def test_tasks_are_registered():
    assert list(tasks.keys()) == ['index', 'normal-form', 'genfun', 'orbits', 'local-homology', 'census', 'conley-scan']


def test_scenario_defaults():
    scenario = Scenario.load(scenario_path('census_single.yaml'))
    assert scenario.task == 'census'
    assert scenario.seed == 0
    assert scenario.parameters['periods'] == [1, 2]
    assert scenario.parameters['displacement_energy'] == 0.1
    assert not scenario.parameters['cross_validate']
    assert scenario.profile == dict(kind = 'single', parameters = {'C': 2.0})


@pytest.mark.parametrize("document, field", [
    ({'task': 'census', 'colour': 'blue'}, 'colour'),
    ({'task': 'census', 'parameters': {'period': [1]}}, 'parameters.period'),
    ({'task': 'census', 'parameters': {'periods': [0]}}, 'parameters.periods'),
    ({'task': 'census', 'parameters': {'epsilon': 'small'}}, 'parameters.epsilon'),
    ({'task': 'census', 'profile': {'kind': 'triple'}}, 'profile.kind'),
    ({'task': 'census', 'profile': {'parameters': {'C': 'two'}}}, 'profile.parameters.C'),
    ({'task': 'census', 'seed': -1}, 'seed'),
    ({'task': 'orbits', 'parameters': {'seeds': {'grid': 3}}}, 'parameters.seeds.grid'),
    ({'task': 'orbits', 'hamiltonian': {'builtin': 'pendulum', 'expression': 'x^2'}}, 'hamiltonian'),
    ({'task': 'orbits', 'hamiltonian': {'builtin': 'kepler'}}, 'hamiltonian.builtin'),
    ({'task': 'orbits', 'hamiltonian': {'builtin': 'pendulum', 'n': 2}}, 'hamiltonian.n'),
    ({'task': 'orbits', 'hamiltonian': {'expression': 'x^2', 'parameters': {'a': 1}}}, 'hamiltonian.parameters'),
    ({'task': 'orbits', 'hamiltonian': {'expression': 'x^2', 'phase_space': 'sphere'}}, 'hamiltonian.phase_space'),
    ({'task': 'normal-form', 'parameters': {'matrix': [[1.0, 0.0]]}}, 'parameters.matrix'),
    ({'task': 'bake'}, 'task'),
    ])
def test_invalid_scenarios(document, field):
    with pytest.raises(ScenarioError) as error:
        Scenario(document = document)
    assert error.value.field == field


def test_scenario_must_be_a_mapping():
    with pytest.raises(ScenarioError) as error:
        Scenario(document = ['census'])
    assert error.value.field == 'scenario'


def test_malformed_files(tmp_path):
    with pytest.raises(ScenarioError) as error:
        Scenario.load(scenario_path('malformed.yaml'))
    assert error.value.field == 'parameters.period'
    broken = tmp_path / 'broken.yaml'
    broken.write_text('task: census\nparameters: [periods: 1\n')
    with pytest.raises(ScenarioError) as error:
        Scenario.load(str(broken))
    assert error.value.field == 'scenario'
    with pytest.raises(ScenarioError):
        Scenario.load(str(tmp_path / 'missing.yaml'))


def test_requested_task_must_match():
    with pytest.raises(ScenarioError) as error:
        Scenario.load(scenario_path('census_single.yaml'), task = 'index')
    assert error.value.field == 'task'


def test_bad_expression_is_reported_at_its_field():
    scenario = Scenario(document = {'task': 'orbits', 'hamiltonian': {'expression': 'x^2 + bessel(y)'}})
    with pytest.raises(ScenarioError) as error:
        scenario.build_hamiltonian()
    assert error.value.field == 'hamiltonian.expression'


def test_census_run(tmp_path):
    out = str(tmp_path / 'census')
    writer = run(Scenario.load(scenario_path('census_single.yaml')), out = out, config = config)
    assert list(writer.outputs.keys()) == ['census.csv', 'window.json', 'action_vs_T.csv']
    census_data = pd.read_csv(os.path.join(out, 'census.csv'))
    assert census_data['T'].tolist() == [1] * 8 + [2] * 16
    assert list(census_data.columns) == ['T', 'family', 'l', 'radius', 'rho', 'action', 'cz_lo', 'cz_hi', 'tangent']
    windows = read_json(out, 'window.json')
    assert windows['T = 1'] == {'valid': True, 'violated': []}
    assert windows['profile']['kind'] == 'single'
    manifest = read_json(out, 'manifest.json')
    assert manifest['status'] == 'ok'
    assert manifest['inputs']['task'] == 'census'
    assert 'numpy' in manifest['versions']
    for name, entry in manifest['outputs'].items():
        with open(os.path.join(out, name), 'rb') as output_file:
            assert hashlib.sha256(output_file.read()).hexdigest() == entry['sha256']
    assert not os.path.exists(os.path.join(out, 'FAILED.json'))


RANDOM_ORBITS = {
    'task': 'orbits',
    'seed': 7,
    'hamiltonian': {'builtin': 'pendulum'},
    'parameters': {'periods': [1], 'seeds': {'random': 24}},
    }


@pytest.mark.parametrize("source, threads", [
    ('census_single.yaml', 1),
    ('index_elliptic.yaml', 1),
    (RANDOM_ORBITS, 4),
    ])
def test_runs_are_deterministic(tmp_path, source, threads):
    if isinstance(source, dict):
        scenario = Scenario(document = source)
    else:
        scenario = Scenario.load(scenario_path(source))
    first = run(scenario, out = str(tmp_path / 'first'), config = config)
    second = run(scenario, out = str(tmp_path / 'second'), threads = threads, config = config)
    assert first.outputs == second.outputs
    for name in first.outputs:
        if not name.endswith('.csv'):
            continue
        with open(os.path.join(first.directory, name), 'rb') as first_file:
            with open(os.path.join(second.directory, name), 'rb') as second_file:
                assert first_file.read() == second_file.read()


def test_index_run(tmp_path):
    out = str(tmp_path)
    run(Scenario.load(scenario_path('index_elliptic.yaml')), out = out, config = config)
    profile = pd.read_csv(os.path.join(out, 'index_profile.csv'))
    # Clockwise by 2.6 radians a period: the third iterate passes 2π
    assert profile['cz'].tolist() == [1, 1, 3]
    assert not profile['degenerate'].any()


def test_normal_form_run(tmp_path):
    out = str(tmp_path)
    run(Scenario.load(scenario_path('normal_form_shear.yaml')), out = out, config = config)
    table = pd.read_csv(os.path.join(out, 'normal_form.csv'))
    assert (table['residual'] < table['sigma']).all()
    assert (table['frame_residual'] < table['sigma']).all()
    assert table['split_preserved_by_psi'].all()
    squeezes = read_json(out, 'normal_form.json')['squeezes']
    assert [squeeze['sigma'] for squeeze in squeezes] == [0.1, 0.01]


def test_local_homology_run_from_grid_file(tmp_path):
    out = str(tmp_path)
    run(Scenario.load(scenario_path('local_homology_grid.yaml')), out = out, config = config)
    signature = read_json(out, 'signature.json')
    assert signature['betti'] == [0, 0, 1]
    assert signature['detects_maximum']
    assert 'degree' not in signature


def test_local_homology_run_from_expression(tmp_path):
    path = write_scenario(tmp_path, {
        'task': 'local-homology',
        'parameters': {'field': 'x^2 - y^2', 'm': 2, 'grid': 17},
        })
    out = str(tmp_path / 'out')
    run(Scenario.load(path), out = out, config = config)
    signature = read_json(out, 'signature.json')
    assert signature['betti'] == [0, 1, 0]
    assert signature['degree'] == -1


def test_expression_field_needs_its_dimension(tmp_path):
    scenario = Scenario(document = {'task': 'local-homology', 'parameters': {'field': 'x^2 - y^2'}})
    with pytest.raises(ScenarioError) as error:
        run(scenario, out = str(tmp_path), config = config)
    assert error.value.field == 'parameters.m'
    assert read_json(str(tmp_path), 'FAILED.json')['error'] == 'ScenarioError'


def test_orbits_run(tmp_path):
    scenario = Scenario(document = {
        'task': 'orbits',
        'hamiltonian': {'builtin': 'pendulum'},
        'parameters': {'periods': [1], 'seeds': {'per_dimension': 8}},
        })
    out = str(tmp_path)
    run(scenario, out = out, config = config)
    orbits = pd.read_csv(os.path.join(out, 'orbits.csv'))
    assert len(orbits) == 4
    assert sorted(orbits['cz'].tolist()) == [-1, 0, 0, 1]
    assert len(read_json(out, 'orbits.json')) == 4


def test_failure_writes_marker(tmp_path):
    scenario = Scenario(document = {
        'task': 'index',
        'hamiltonian': {'builtin': 'elliptic', 'parameters': {'frequency': 2.6}},
        'parameters': {'point': [0.5, 0.0]},
        })
    with pytest.raises(PreconditionError):
        run(scenario, out = str(tmp_path), config = config)
    failed = read_json(str(tmp_path), 'FAILED.json')
    assert failed['task'] == 'index'
    assert failed['error'] == 'PreconditionError'
    assert read_json(str(tmp_path), 'manifest.json')['status'] == 'failed'


def test_unexpected_errors_are_recorded_as_failures(tmp_path, monkeypatch):
    def singular(context):
        np.linalg.inv(np.zeros((2, 2)))

    monkeypatch.setitem(tasks, 'normal-form', singular)
    out = str(tmp_path / 'run')
    with pytest.raises(InternalError) as error:
        run(Scenario.load(scenario_path('normal_form_shear.yaml')), out = out, config = config)
    assert isinstance(error.value.__cause__, np.linalg.LinAlgError)
    failed = read_json(out, 'FAILED.json')
    assert failed['error'] == 'InternalError'
    assert failed['cause'] == 'LinAlgError'
    assert read_json(out, 'manifest.json')['status'] == 'failed'
    arguments = ['-s', scenario_path('normal_form_shear.yaml'), '-o', str(tmp_path / 'cli'), '-p',
        test_config_files_directory]
    assert main(['normal-form'] + arguments) == EXIT_NUMERICAL


def test_unreachable_squeeze_is_a_numerical_failure(tmp_path):
    path = write_scenario(tmp_path, {
        'task': 'normal-form',
        'parameters': {'matrix': random_unipotent(3, np.random.default_rng(1003)).tolist(), 'sigmas': [1e-3]},
        })
    out = str(tmp_path / 'out')
    with pytest.raises(ResolutionError):
        run(Scenario.load(path), out = out, config = config)
    assert read_json(out, 'FAILED.json')['error'] == 'ResolutionError'
    assert read_json(out, 'manifest.json')['status'] == 'failed'
    assert main(['normal-form', '-s', path, '-o', str(tmp_path / 'cli'), '-p', test_config_files_directory]) == \
        EXIT_NUMERICAL


def test_conley_scan_of_an_elliptic_fixed_point():
    H = builtin('elliptic', frequency = 2.6)
    bundle = conley_scan(H, 2, seeds = {'per_dimension': 3, 'box': 0.5}, sdm = False)
    summary = bundle['summary']
    assert summary['orbits_per_period'] == [1, 1]
    assert summary['simple_orbits_per_period'] == [1, 0]
    assert summary['fixed_point_taxonomy'] == {NONDEGENERATE: 1}
    assert summary['spectrum_scaling_holds']
    assert bundle['index_vs_T']['cz'].tolist() == [1, 1]
    assert bundle['sdm'] is None
    assert np.allclose(bundle['spectrum_scaling']['action'], 0, atol = 1e-12)


def test_conley_scan_is_bounded():
    with pytest.raises(PreconditionError):
        conley_scan(builtin('pendulum'), 13)


def test_command_line(tmp_path):
    out = str(tmp_path / 'cli')
    arguments = ['-s', scenario_path('census_single.yaml'), '-o', out, '-p', test_config_files_directory]
    assert main(['census'] + arguments) == 0
    assert os.path.exists(os.path.join(out, 'manifest.json'))
    assert main(['bake'] + arguments) == EXIT_USAGE
    assert main(['index'] + arguments) == EXIT_VALIDATION
    assert main(['census'] + arguments + ['--seed', '-3']) == EXIT_VALIDATION
    assert main(['census', '-s', scenario_path('malformed.yaml'), '-o', out]) == EXIT_VALIDATION


def test_command_line_numerical_failure(tmp_path):
    # Rotating by 3 radians is far from the identity
    path = write_scenario(tmp_path, {
        'task': 'genfun',
        'hamiltonian': {'builtin': 'elliptic', 'parameters': {'frequency': 3.0}},
        })
    out = str(tmp_path / 'out')
    assert main(['genfun', '-s', path, '-o', out, '-p', test_config_files_directory]) == EXIT_NUMERICAL
    assert read_json(out, 'FAILED.json')['error'] == SolvabilityError.__name__


def write_config(tmp_path, text):
    directory = tmp_path / 'config'
    directory.mkdir()
    (directory / 'config.ini').write_text(text)
    return Config(config_files_directory = str(directory))


def test_config_ini_overrides_the_defaults(tmp_path):
    overridden = write_config(tmp_path, "[genfun]\nprobe_points_2d = 5\nsimpson_intervals = 8\n")
    assert overridden.probe_points(1) == 5
    assert overridden.probe_points(2) == 9
    assert overridden.probe_points(4) is None
    assert overridden.getint('genfun', 'simpson_intervals') == 8
    assert overridden.getfloat('numerics', 'tol_symp') == 1e-9


def test_degeneracy_tolerance_is_read_from_the_config(tmp_path):
    # Eigenvalue distances to 1 of the three iterates are 1.93, 1.03 and 1.37
    loose = write_config(tmp_path, "[numerics]\ndegeneracy_tol = 1.5\n")
    out = str(tmp_path / 'out')
    run(Scenario.load(scenario_path('index_elliptic.yaml')), out = out, config = loose)
    profile = pd.read_csv(os.path.join(out, 'index_profile.csv'))
    assert profile['degenerate'].tolist() == [False, True, True]
    assert profile['cz'].iloc[0] == 1


def test_symplectic_tolerance_is_read_from_the_config(tmp_path):
    strict = write_config(tmp_path, "[numerics]\ntol_symp = -1\n")
    with pytest.raises(ResolutionError):
        run(Scenario.load(scenario_path('normal_form_shear.yaml')), out = str(tmp_path / 'out'), config = strict)
    out = str(tmp_path / 'default')
    run(Scenario.load(scenario_path('normal_form_shear.yaml')), out = out, config = config)
    assert pd.read_csv(os.path.join(out, 'normal_form.csv'))['psi_symplectic'].all()


def test_genfun_options_are_read_from_the_config(tmp_path):
    document = {
        'task': 'genfun',
        'hamiltonian': {'builtin': 'elliptic', 'parameters': {'frequency': 0.05}},
        'parameters': {'radius': 0.1},
        }
    odd = write_config(tmp_path, "[genfun]\nsimpson_intervals = 7\n")
    with pytest.raises(PreconditionError):
        run(Scenario(document = document), out = str(tmp_path / 'odd'), config = odd)
    coarse = Config(config_files_directory = str(tmp_path / 'config'))
    coarse.set('genfun', 'simpson_intervals', '8')
    coarse.set('genfun', 'probe_points_2d', '5')
    out = str(tmp_path / 'coarse')
    run(Scenario(document = document), out = out, config = coarse)
    assert len(pd.read_csv(os.path.join(out, 'genfun.csv'))) == len(probe_grid(1, 0.1, points = 5))
    assert read_json(out, 'genfun.json')['simpson_intervals'] == 8
