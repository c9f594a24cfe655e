import numpy as np
import pytest


from conley_lab.errors import PreconditionError
from conley_lab.hamiltonians import builtin
from conley_lab.orbits import (
    classify_degeneracy,
    find_periodic_points,
    NONDEGENERATE,
    orbit_table,
    seed_grid,
    seeds_from_spec,
    simple_period_report,
    STRONGLY_DEGENERATE,
    WEAKLY_NONDEGENERATE,
    )


SMALL_SEEDS = {'per_dimension': 3, 'box': 0.5}


def test_classify_degeneracy():
    assert classify_degeneracy([2.0, 0.5]) == (NONDEGENERATE, [])
    assert classify_degeneracy([1.0, 1.0]) == (STRONGLY_DEGENERATE, [])
    assert classify_degeneracy([1.0, 1.0, -1.0, -1.0]) == (WEAKLY_NONDEGENERATE, [2])
    assert classify_degeneracy(np.exp(2j * np.pi * np.array([1, -1]) / 3)) == (NONDEGENERATE, [3])
    irrational = np.exp(2j * np.pi * np.sqrt(2) * np.array([1, -1]))
    assert classify_degeneracy(irrational) == (NONDEGENERATE, [])


def test_seed_grids():
    assert seed_grid(builtin('pendulum')).shape == (4096, 2)
    assert seed_grid(builtin('oscillator', n = 2), per_dimension = 3).shape == (81, 4)
    assert seeds_from_spec(builtin('oscillator'), SMALL_SEEDS).shape == (9, 2)
    with pytest.raises(PreconditionError):
        seeds_from_spec(builtin('oscillator'), np.zeros((3, 3)))


@pytest.mark.parametrize("T, cz", [(1, 1), (2, 1), (3, 3)])
def test_elliptic_fixed_point(T, cz):
    # Clockwise by 2π(√2 - 1) per unit time, so the origin is the only periodic point
    H = builtin('elliptic', frequency = 2 * np.pi * (np.sqrt(2) - 1))
    records = find_periodic_points(H, T, seeds = SMALL_SEEDS)
    assert len(records) == 1
    record = records[0]
    assert np.allclose(record.point, 0, atol = 1e-10)
    assert record.degeneracy == NONDEGENERATE
    assert record.cz == cz
    assert record.action == pytest.approx(0.0, abs = 1e-12)
    assert record.is_simple == (T == 1)


def test_hyperbolic_fixed_point():
    records = find_periodic_points(builtin('hyperbolic', rate = 0.5), 1, seeds = SMALL_SEEDS)
    assert len(records) == 1
    assert records[0].cz == 0
    assert sorted(abs(records[0].multipliers)) == pytest.approx([np.exp(-0.5), np.exp(0.5)])


def test_pendulum_fixed_points():
    H = builtin('pendulum')
    records = find_periodic_points(H, 1, seeds = {'per_dimension': 8})
    assert len(records) == 4
    assert sorted(record.cz for record in records) == [-1, 0, 0, 1]
    for record in records:
        # Constant orbits have action H(p)
        assert record.action == pytest.approx(float(H.evaluate(0.0, record.point)), abs = 1e-10)
    minimum = [record for record in records if record.cz == -1][0]
    assert np.allclose(H.difference(minimum.point, [0.5, 0.0]), 0, atol = 1e-8)
    table = orbit_table(records)
    assert list(table.columns) == ['T', 'x1', 'y1', 'action', 'multipliers', 'cz', 'class', 'simple', 'degrees']
    assert len(table) == 4
    assert records[0].to_json()['class'] == NONDEGENERATE


def test_simple_period_report():
    report = simple_period_report(builtin('pendulum'), 2, seeds = {'per_dimension': 8})
    assert report['T'].tolist() == [1, 2]
    assert report['orbits'].tolist() == [4, 4]
    assert report['simple_orbits'].tolist() == [4, 0]
    assert not report['divisible_by_root_degree'].any()


def test_simple_period_report_is_bounded():
    with pytest.raises(PreconditionError):
        simple_period_report(builtin('pendulum'), 13)


@pytest.mark.parametrize("name", ['pendulum', 'forced_pendulum'])
def test_orbits_do_not_depend_on_threads(name):
    H = builtin(name)
    single = orbit_table(find_periodic_points(H, 1, seeds = {'per_dimension': 8}, threads = 1))
    pooled = orbit_table(find_periodic_points(H, 1, seeds = {'per_dimension': 8}, threads = 4))
    assert single.to_csv(float_format = '%.17g') == pooled.to_csv(float_format = '%.17g')
