import numpy as np
import pytest
from scipy import linalg


from conley_lab.errors import DimensionError, InvalidFrameError, NumericalError, PreconditionError, ResolutionError
from conley_lab.symplectic import (
    frame_norm,
    is_symplectic,
    is_unipotent,
    LagrangianSplitting,
    omega,
    random_symplectic,
    random_unipotent,
    squeeze_frame,
    squeeze_lower_bound,
    squeeze_unipotent,
    standard_j,
    symplectic_defect,
    SymplecticFrame,
    )


def test_standard_j_turns_counterclockwise():
    # X_H = J grad H for H = (x^2 + y^2) / 2 at (1, 0) points up
    assert (standard_j(1) @ np.array([1.0, 0.0])).tolist() == [0.0, 1.0]
    assert omega([1.0, 0.0], [0.0, 1.0]) == 1.0


def test_random_symplectic_is_symplectic():
    rng = np.random.default_rng(1)
    for n in (1, 2, 3):
        for _ in range(10):
            matrix = random_symplectic(n, rng, scale = 0.5)
            assert symplectic_defect(matrix) < 1e-9 * max(1.0, np.linalg.norm(matrix, 2) ** 2)


def test_is_symplectic_rejects_bad_shapes():
    with pytest.raises(DimensionError):
        is_symplectic(np.eye(3))
    with pytest.raises(DimensionError):
        is_symplectic(np.ones((2, 4)))


def test_frame_round_trip():
    rng = np.random.default_rng(2)
    frame = SymplecticFrame(matrix = random_symplectic(2, rng, scale = 0.3), base_point = [1.0, 2.0, 3.0, 4.0])
    points = rng.normal(size = (5, 4))
    coordinates = frame.to_coordinates(points)
    assert np.allclose(frame.from_coordinates(coordinates), points, atol = 1e-10)
    restored = SymplecticFrame.from_json(frame.to_json())
    assert np.allclose(restored.matrix, frame.matrix)
    assert restored.base_point.tolist() == [1.0, 2.0, 3.0, 4.0]


def test_invalid_frame():
    with pytest.raises(InvalidFrameError):
        SymplecticFrame(matrix = np.diag([2.0, 2.0]))
    with pytest.raises(InvalidFrameError):
        frame_norm(np.eye(2), np.zeros((2, 2)))


def test_frame_norm_of_shear():
    shear = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert frame_norm(shear, np.eye(2)) == pytest.approx(1.0)
    assert frame_norm(shear, SymplecticFrame(matrix = np.diag([10.0, 0.1]))) == pytest.approx(0.01)
    assert frame_norm(np.array([3.0, 4.0]), np.eye(2)) == pytest.approx(5.0)


def test_lagrangian_splitting_checks():
    split = LagrangianSplitting.standard(2)
    assert split.n == 2
    assert split.preserved_by(np.diag([2.0, 3.0, 0.5, 1 / 3]))
    assert not split.preserved_by(np.array([
        [1.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        ]))
    with pytest.raises(PreconditionError):
        LagrangianSplitting(L = np.array([[1.0], [0.0]]), L_prime = np.array([[2.0], [0.0]]))


def test_is_unipotent():
    assert is_unipotent(np.array([[1.0, 5.0], [0.0, 1.0]]))
    assert not is_unipotent(np.array([[2.0, 0.0], [0.0, 0.5]]))
    rotation = np.array([[np.cos(0.1), -np.sin(0.1)], [np.sin(0.1), np.cos(0.1)]])
    assert not is_unipotent(rotation)


def test_squeeze_rejects_non_unipotent():
    with pytest.raises(PreconditionError):
        squeeze_unipotent(np.diag([2.0, 0.5]), 1e-2)
    with pytest.raises(PreconditionError):
        squeeze_unipotent(np.array([[1.0, 1.0], [0.0, 1.0]]), 0.0)


def test_squeeze_identity_is_trivial():
    psi, split = squeeze_unipotent(np.eye(4), 1e-3)
    assert np.allclose(psi @ np.eye(4) @ np.linalg.inv(psi), np.eye(4))
    assert split.n == 2


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("sigma", [1e-1, 1e-2, 1e-3])
def test_squeeze_random_unipotent(n, sigma):
    rng = np.random.default_rng(100 * n + int(round(-np.log10(sigma))))
    squeezed = 0
    for _ in range(200):
        phi = random_unipotent(n, rng)
        try:
            psi, split = squeeze_unipotent(phi, sigma)
        except ResolutionError as error:
            # Refused only when Ψ is too large to stay symplectic in double precision
            assert error.lower_bound == squeeze_lower_bound(phi, sigma)
            assert n > 1
            continue
        squeezed += 1
        conjugate = psi @ phi @ np.linalg.inv(psi)
        assert np.linalg.norm(conjugate - np.eye(2 * n), 2) < sigma
        assert symplectic_defect(psi) < 1e-9
        assert is_symplectic(psi)
        assert is_symplectic(conjugate, tol = 1e-6)
        assert split.preserved_by(psi)
        # Φ maps L into itself
        image = phi @ split.L
        coefficients = np.linalg.lstsq(split.L, image, rcond = None)[0]
        assert np.linalg.norm(image - split.L @ coefficients) < 1e-8 * max(1.0, np.linalg.norm(image))
    if n == 1:
        assert squeezed == 200


def test_squeeze_lower_bound_of_a_full_jordan_chain():
    # A symplectic Ψ with ‖ΨΦΨ⁻¹ - I‖ < 1e-3 on a generic 6 x 6 unipotent has ‖Ψ‖² near 1e15,
    # so eps ‖Ψ‖² is far above an absolute 1e-9 symplectic defect
    rng = np.random.default_rng(31)
    eps = np.finfo(float).eps
    out_of_reach = sum(
        eps * squeeze_lower_bound(random_unipotent(3, rng), 1e-3) > 1e-9
        for _ in range(200)
        )
    assert out_of_reach >= 190
    phi = random_unipotent(3, rng)
    with pytest.raises(ResolutionError) as error:
        squeeze_unipotent(phi, 1e-3)
    assert error.value.lower_bound == squeeze_lower_bound(phi, 1e-3)


def test_squeeze_small_regular_chain():
    # (Φ - I)³ ≠ 0 on R⁴, entries small enough for double precision at sigma = 1e-4
    chain = np.array([
        [0.0, 1e-3, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1e-3],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, -1e-3, 0.0],
        ])
    phi = linalg.expm(chain)
    psi, split = squeeze_unipotent(phi, 1e-4)
    assert np.linalg.norm(psi @ phi @ np.linalg.inv(psi) - np.eye(4), 2) < 1e-4
    assert symplectic_defect(psi) < 1e-9
    assert split.preserved_by(psi)


def test_squeeze_never_raises_raw_linear_algebra_errors():
    rng = np.random.default_rng(1003)
    for _ in range(20):
        phi = random_unipotent(3, rng)
        for sigma in (1e-1, 1e-3):
            try:
                squeeze_frame(phi, sigma)
                squeeze_unipotent(phi, sigma)
            except NumericalError:
                pass


def test_is_symplectic_checks_the_determinant():
    # 1.2 I scales ω by 1.44 in every dimension but det grows with the dimension
    assert is_symplectic(1.2 * np.eye(2), tol = 0.5)
    assert not is_symplectic(1.2 * np.eye(4), tol = 0.5)


def test_squeeze_frame_makes_phi_close_to_identity():
    phi = np.array([[1.0, 3.0], [0.0, 1.0]])
    frame = squeeze_frame(phi, 1e-3, base_point = [0.5, 0.5])
    assert frame_norm(phi - np.eye(2), frame) < 1e-3
    assert frame.base_point.tolist() == [0.5, 0.5]
