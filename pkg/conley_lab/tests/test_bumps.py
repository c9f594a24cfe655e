import numpy as np
import pytest


from conley_lab.bumps import (
    build_profile,
    census,
    census_table,
    cross_validate,
    cz_range,
    FOURTH_GROUP,
    INNER_SPHERES,
    looks_irrational,
    OUTER_SPHERES,
    PLATEAU_TRIVIAL,
    ring_candidates,
    THIRD_GROUP,
    validate_window,
    )
from conley_lab.errors import InfeasibleProfileError, PreconditionError


def test_single_bump_shape():
    profile = build_profile(kind = 'single', C = 2.0)
    assert profile.slope_mid == pytest.approx(-2.0 / 0.09)
    assert float(profile.value(0.0)) == pytest.approx(2.0)
    assert float(profile.value(0.2)) == pytest.approx(0.0, abs = 1e-12)
    assert profile.support_radius == pytest.approx(0.5)
    assert all(residual < 1e-8 for residual in profile.constraint_residuals().values())
    assert profile.to_json()['parameters']['C'] == 2.0


def test_bump_hamiltonian_is_radial():
    profile = build_profile(kind = 'single', C = 2.0)
    H = profile.hamiltonian()
    z = np.array([0.3, 0.1])
    rho = 0.05
    assert float(H.evaluate(0.0, z)) == pytest.approx(float(profile.value(rho)))
    assert np.allclose(H.grad(0.0, z), float(profile.derivative(rho)) * z)


def test_cz_ranges():
    assert cz_range(INNER_SPHERES, 1, 1) == (2, 3)
    assert cz_range(OUTER_SPHERES, 1, 1) == (1, 2)
    assert cz_range(THIRD_GROUP, 1, 1) == (-3, -2)
    assert cz_range(FOURTH_GROUP, 2, 2) == (-9, -6)
    with pytest.raises(PreconditionError):
        cz_range(PLATEAU_TRIVIAL, 1, 1)


def test_single_bump_census():
    profile = build_profile(kind = 'single', C = 2.0)
    entries = census(profile, 1)
    assert [entry.family for entry in entries] == [PLATEAU_TRIVIAL] + [INNER_SPHERES] * 3 + [OUTER_SPHERES] * 3 + [
        PLATEAU_TRIVIAL]
    assert entries[0].action == 2.0
    assert (entries[0].cz_lo, entries[0].cz_hi) == (1, 1)
    assert entries[-1].action == 0.0
    assert entries[-1].cz_lo is None
    for entry in entries[1:-1]:
        # F'(ρ) = -2πl on the spheres, run clockwise
        assert float(profile.derivative(entry.rho)) == pytest.approx(-2 * np.pi * entry.l)
        assert entry.radius == pytest.approx(np.sqrt(2 * entry.rho))
        assert entry.action == pytest.approx(float(profile.value(entry.rho)) + np.pi * entry.l * entry.radius ** 2)
        assert not entry.tangent
    inner_radii = [entry.radius for entry in entries[1:4]]
    assert inner_radii == sorted(inner_radii)
    table = census_table(entries)
    assert list(table.columns) == ['family', 'l', 'radius', 'rho', 'action', 'cz_lo', 'cz_hi', 'tangent']


def test_census_grows_with_the_period():
    profile = build_profile(kind = 'single', C = 2.0)
    spheres = [entry for entry in census(profile, 2) if not entry.is_trivial]
    # 2 |F'| / 2π reaches 7.07 on the band
    assert len(spheres) == 14
    assert [entry.l for entry in spheres if entry.family == OUTER_SPHERES] == [1, 2, 3, 4, 5, 6, 7]


def test_two_shell_census():
    profile = build_profile(kind = 'two_shell')
    entries = census(profile, 1)
    assert [entry.family for entry in entries] == (
        [PLATEAU_TRIVIAL] + [INNER_SPHERES] * 3 + [OUTER_SPHERES] * 3 + [PLATEAU_TRIVIAL]
        + [THIRD_GROUP] * 2 + [FOURTH_GROUP] * 2 + [PLATEAU_TRIVIAL]
        )
    assert [entry.action for entry in entries if entry.is_trivial] == [1.0, 0.5, 1.5]
    for entry in entries:
        if entry.family in (THIRD_GROUP, FOURTH_GROUP):
            # Counter-clockwise spheres on the rising shell
            assert float(profile.derivative(entry.rho)) == pytest.approx(2 * np.pi * entry.l)
            assert entry.action == pytest.approx(float(profile.value(entry.rho)) - np.pi * entry.l * entry.radius ** 2)
            assert (entry.cz_lo, entry.cz_hi) == cz_range(entry.family, entry.l, 1)


@pytest.mark.parametrize("kind, parameters, constraint", [
    ('single', dict(r_minus = 0.0), 'radii_order'),
    ('single', dict(r_prime = 0.05), 'radii_order'),
    ('single', dict(C = -1.0), 'decreasing'),
    ('single', dict(inner_slope = 4.0), 'inner_slope_below_pi'),
    ('single', dict(C = 0.001, inner_slope = 1.0), 'concave_shell'),
    ('two_shell', dict(a = 1.0), 'plateau_below_peak'),
    ('two_shell', dict(max_value = 0.9), 'max_above_peak'),
    ('two_shell', dict(R = 0.2), 'radii_order'),
    ])
def test_infeasible_profiles(kind, parameters, constraint):
    with pytest.raises(InfeasibleProfileError) as error:
        build_profile(kind = kind, **parameters)
    assert error.value.constraint == constraint


def test_unknown_profile_kind():
    with pytest.raises(PreconditionError):
        build_profile(kind = 'triple')


def test_rational_band_slope_is_refused():
    # Band slope C / 0.09 = 6π makes the whole band 1-periodic
    profile = build_profile(kind = 'single', C = 0.09 * 6 * np.pi)
    with pytest.raises(InfeasibleProfileError) as error:
        census(profile, 1)
    assert error.value.constraint == 'irrational_slope'
    assert looks_irrational(np.sqrt(2))
    assert not looks_irrational(0.75)


def test_single_bump_window():
    profile = build_profile(kind = 'single', C = 2.0)
    assert validate_window(profile, T = 1, epsilon = 1.0, delta = 0.01) == (True, [])
    valid, violated = validate_window(profile, T = 1, epsilon = 1.0, delta = np.pi * 0.1 ** 2)
    assert not valid
    assert violated == ['bump_window: delta < pi r_minus^2']
    valid, violated = validate_window(profile, T = 1, epsilon = np.pi * 0.5 ** 2, delta = 0.01)
    assert violated == ['bump_window: epsilon > pi r^2']
    valid, violated = validate_window(profile, T = 1, epsilon = 1.0, delta = 0.01, displacement_energy = 2.0)
    assert violated == ['displacement_energy: variation > h(B_r)']
    assert validate_window(profile, T = 1, epsilon = 1.0, delta = 0.01, displacement_energy = 1.9)[0]


def test_single_bump_window_with_floor():
    profile = build_profile(kind = 'single', C = 2.0, floor = 0.5)
    valid, violated = validate_window(profile, T = 1, epsilon = 1.0, delta = 0.01)
    assert violated == ['bump_window_floor: T C - delta > T min F + 2 pi r^2']
    assert validate_window(profile, T = 2, epsilon = 1.0, delta = 0.01)[0]


def test_two_shell_window():
    profile = build_profile(kind = 'two_shell')
    assert validate_window(profile, T = 1, epsilon = 0.3, delta = 0.005) == (True, [])
    valid, violated = validate_window(profile, T = 1, epsilon = 0.5, delta = 0.005)
    assert violated == ['max_above_window: max H > c + epsilon']
    valid, violated = validate_window(profile, T = 1, epsilon = 0.3, delta = 0.0)
    assert violated == ['window: delta > 0']


def test_ring_candidates_follow_the_rotation_number():
    profile = build_profile(kind = 'single', C = 2.0)
    candidates = ring_candidates(profile, 1)
    # |F'| reaches 2/0.09 ≈ 3.5 turns: three rings on each monotone shell
    assert [k for _, k in candidates] == [-1, -2, -3, -3, -2, -1]
    for rho, k in candidates:
        assert float(profile.derivative(rho)) == pytest.approx(2 * np.pi * k, abs = 1e-9)
    assert ring_candidates(build_profile(kind = 'single', C = 0.5), 1) == []


def test_cross_validation_of_a_trivial_profile():
    # T max |F'| = 0.5 / 0.09 < 2π: no rings on either side
    report = cross_validate(build_profile(kind = 'single', C = 0.5), 1)
    assert report['passes']
    assert report['matched'] == []
    assert report['unmatched_orbits'] == []


def test_cross_validation_matches_the_census():
    profile = build_profile(kind = 'single', C = 0.5)
    report = cross_validate(profile, 2)
    assert report['passes']
    assert [row['family'] for row in report['matched']] == [INNER_SPHERES, OUTER_SPHERES]
    assert all(row['action_error'] < 1e-8 for row in report['matched'])
    assert not report['cz_checked']


PROFILE_BATTERY = [
    dict(kind = 'single', C = 0.5),
    dict(kind = 'single', C = 2.0),
    dict(kind = 'single', C = 1.0, inner_slope = 1.0),
    dict(kind = 'single', C = 2.0, floor = 0.5),
    dict(kind = 'two_shell'),
    ]


@pytest.mark.parametrize("T", [5, 10, 20])
@pytest.mark.parametrize("parameters", PROFILE_BATTERY)
def test_cross_validation_battery(parameters, T):
    profile = build_profile(**parameters)
    report = cross_validate(profile, T)
    spheres = [entry for entry in census(profile, T) if not entry.is_trivial]
    assert report['passes']
    assert len(report['matched']) == len(spheres) > 0
    assert report['unmatched_census'] == report['unmatched_orbits'] == []
    assert max(row['radius_error'] for row in report['matched']) < 1e-6
    assert max(row['action_error'] for row in report['matched']) < 1e-8


def test_cross_validation_is_planar():
    with pytest.raises(PreconditionError):
        cross_validate(build_profile(kind = 'single', n = 2), 1, n = 2)


SINGLE = dict(kind = 'single', C = 2.0)
SHALLOW = dict(kind = 'single', C = 0.5)
FLOOR = dict(kind = 'single', C = 2.0, floor = 0.5)
TWO_SHELL = dict(kind = 'two_shell')

WINDOW_CASES = [
    (SINGLE, 1, 1.0, 0.01, 0.1, []),
    (SINGLE, 1, 1.0, 0.0, 0.1, ['window: delta > 0']),
    (SINGLE, 1, 1.0, -0.01, 0.1, ['window: delta > 0']),
    (SINGLE, 1, 0.01, 0.01, 0.1, ['bump_window: epsilon > delta', 'bump_window: epsilon > pi r^2']),
    (SINGLE, 1, np.pi * 0.5 ** 2, 0.01, 0.1, ['bump_window: epsilon > pi r^2']),
    (SINGLE, 1, 1.0, np.pi * 0.1 ** 2, 0.1, ['bump_window: delta < pi r_minus^2']),
    (SINGLE, 1, 2.0, 0.03, 0.1, []),
    (SINGLE, 1, 1.0, 0.01, 2.0, ['displacement_energy: variation > h(B_r)']),
    (SINGLE, 1, 1.0, 0.01, None, []),
    (SHALLOW, 1, 1.0, 0.01, 0.1, ['bump_window: T C - delta > 2 pi r^2']),
    (SHALLOW, 4, 1.0, 0.01, 0.1, []),
    (FLOOR, 1, 1.0, 0.01, 0.1, ['bump_window_floor: T C - delta > T min F + 2 pi r^2']),
    (FLOOR, 2, 1.0, 0.01, 0.1, []),
    (FLOOR, 2, 1.0, 0.01, 3.0, ['displacement_energy: variation > h(B_r)']),
    (TWO_SHELL, 1, 0.3, 0.005, 0.1, []),
    (TWO_SHELL, 1, 0.5, 0.005, 0.1, ['max_above_window: max H > c + epsilon']),
    (TWO_SHELL, 1, 0.1, 0.005, 0.1, ['max_above_window: pi r^2 < epsilon']),
    (TWO_SHELL, 1, 0.3, 0.01, 0.1, ['two_shell_window: delta < pi r_minus^2']),
    (dict(kind = 'two_shell', a = 0.9), 1, 0.3, 0.005, None, ['two_shell_window: T (c - a) > 2 pi r^2 + delta']),
    (TWO_SHELL, 1, 0.3, 0.005, 0.5, ['displacement_energy: variation > h(B_r)']),
    ]


@pytest.mark.parametrize("parameters, T, epsilon, delta, displacement_energy, violated", WINDOW_CASES)
def test_window_truth_table(parameters, T, epsilon, delta, displacement_energy, violated):
    profile = build_profile(**parameters)
    result = validate_window(profile, T = T, epsilon = epsilon, delta = delta, displacement_energy = displacement_energy)
    assert result == (not violated, violated)
