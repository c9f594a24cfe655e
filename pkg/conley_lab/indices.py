"""Maslov index of symplectic loops and Conley–Zehnder index of symplectic paths.

The Conley–Zehnder index is normalized so that the linearized flow at a
nondegenerate maximum of an autonomous Hamiltonian with small Hessian has
index n. This is the negative of the Salamon–Zehnder convention.

    >>> import numpy as np
    >>> path = SymplecticPath.from_generator(-0.01 * np.eye(2), np.linspace(0, 1, 65))
    >>> cz_index(path)
    1
"""


import collections
import logging


import numpy as np
from scipy import linalg


from conley_lab.errors import DegeneracyError, PreconditionError, ResolutionError
from conley_lab.symplectic import half_dimension, standard_j, TOL_SYMP


log = logging.getLogger(__name__)


DEGENERACY_TOL = 1e-8
CLUSTER_TOL = 1e-6
MAX_ANGLE_JUMP = np.pi / 2
ROUNDING_TOL = 0.25


class SymplecticPath(object):
    """Samples (t_k, M_k) of a continuous path in Sp(2n)."""
    times = None
    matrices = None
    is_loop = False
    period = None

    def __init__(self, times = None, matrices = None, is_loop = False, period = None):
        times = np.asarray(times, dtype = float)
        matrices = np.asarray(matrices, dtype = float)
        assert times.ndim == 1 and len(times) >= 2, "A path needs at least two samples"
        assert matrices.shape[0] == len(times), "Got {} times for {} matrices".format(len(times), matrices.shape[0])
        half_dimension(matrices[0])
        self.times = times
        self.matrices = matrices
        self.is_loop = is_loop
        self.period = float(times[-1] - times[0]) if period is None else float(period)

    def __len__(self):
        return len(self.times)

    def __repr__(self):
        return "SymplecticPath(n = {}, samples = {}, is_loop = {})".format(self.n, len(self), self.is_loop)

    @property
    def n(self):
        return self.matrices.shape[1] // 2

    @property
    def end(self):
        return self.matrices[-1]

    @classmethod
    def from_generator(cls, hessian, times, is_loop = False):
        """Path t -> exp(t J Q), the linearized flow of the quadratic Hamiltonian ½ zᵀQz."""
        hessian = np.asarray(hessian, dtype = float)
        generator = standard_j(half_dimension(hessian)) @ hessian
        matrices = np.array([linalg.expm(t * generator) for t in times])
        return cls(times = times, matrices = matrices, is_loop = is_loop)

    @classmethod
    def from_function(cls, function, times, is_loop = False):
        return cls(times = times, matrices = np.array([function(t) for t in times]), is_loop = is_loop)

    @classmethod
    def from_json(cls, path_json, is_loop = False):
        return cls(
            times = [sample[0] for sample in path_json],
            matrices = [sample[1] for sample in path_json],
            is_loop = is_loop,
            )

    def to_json(self):
        return [[float(t), matrix.tolist()] for t, matrix in zip(self.times, self.matrices)]

    def product(self, other):
        """Pointwise product t -> self(t) other(t) over a shared time grid."""
        assert np.allclose(self.times, other.times), "Pointwise products need identical time grids"
        return SymplecticPath(
            times = self.times,
            matrices = self.matrices @ other.matrices,
            is_loop = self.is_loop and other.is_loop,
            )

    def concatenate(self, other):
        """Run self, then other right-multiplied by the endpoint of self."""
        shifted_times = other.times[1:] - other.times[0] + self.times[-1]
        shifted = other.matrices[1:] @ self.end
        return SymplecticPath(
            times = np.concatenate([self.times, shifted_times]),
            matrices = np.concatenate([self.matrices, shifted]),
            is_loop = self.is_loop and other.is_loop,
            )

    def reverse(self):
        return SymplecticPath(
            times = self.times[-1] + self.times[0] - self.times[::-1],
            matrices = self.matrices[::-1],
            is_loop = self.is_loop,
            )

    def refine(self):
        """Insert a midpoint between consecutive samples along the one-parameter group joining them."""
        matrices = [self.matrices[0]]
        times = [self.times[0]]
        for k in range(1, len(self)):
            step = np.real(linalg.logm(np.linalg.solve(self.matrices[k - 1], self.matrices[k])))
            matrices.append(self.matrices[k - 1] @ linalg.expm(step / 2))
            matrices.append(self.matrices[k])
            times.extend([(self.times[k - 1] + self.times[k]) / 2, self.times[k]])
        return SymplecticPath(times = times, matrices = matrices, is_loop = self.is_loop, period = self.period)

    def iterate(self, T):
        """T-fold path of a linearized return map, M(t + kP) = M(t) M(P)^k."""
        assert T >= 1
        path = self
        for _ in range(T - 1):
            path = path.concatenate(self)
        return path


def krein_counts(matrix):
    """Eigen-data of a symplectic matrix grouped into clusters.

    Returns a list of (eigenvalue, multiplicity, first_kind_count) for unit
    circle clusters away from ±1 and the number of negative real eigenvalues.
    """
    n = half_dimension(matrix)
    eigenvalues, eigenvectors = np.linalg.eig(matrix)
    krein_form = -1j * standard_j(n)
    negative_real = 0
    unit_clusters = list()
    assigned = np.zeros(len(eigenvalues), dtype = bool)
    for index, eigenvalue in enumerate(eigenvalues):
        if assigned[index]:
            continue
        if abs(eigenvalue.imag) < 1e-7 and eigenvalue.real < 0:
            negative_real += 1
            assigned[index] = True
            continue
        if abs(abs(eigenvalue) - 1) > CLUSTER_TOL or abs(eigenvalue.imag) < 1e-7:
            assigned[index] = True
            continue
        members = np.flatnonzero((np.abs(eigenvalues - eigenvalue) < CLUSTER_TOL) & ~assigned)
        assigned[members] = True
        vectors = eigenvectors[:, members]
        gram = vectors.conj().T @ krein_form @ vectors
        gram = (gram + gram.conj().T) / 2
        first_kind = int(np.sum(np.linalg.eigvalsh(gram) > 0))
        unit_clusters.append((complex(np.mean(eigenvalues[members])), len(members), first_kind))
    return unit_clusters, negative_real


def rotation_function(matrix):
    """Continuous circle-valued function on Sp(2n) agreeing with det_C on U(n)."""
    unit_clusters, negative_real = krein_counts(matrix)
    value = (-1.0) ** (negative_real // 2) + 0j
    for eigenvalue, _, first_kind in unit_clusters:
        value *= (eigenvalue / abs(eigenvalue)) ** first_kind
    return value


def unwrapped_angles(values):
    angles = np.angle(values)
    jumps = np.diff(angles)
    jumps = (jumps + np.pi) % (2 * np.pi) - np.pi
    worst = np.max(np.abs(jumps)) if len(jumps) else 0.0
    if worst > MAX_ANGLE_JUMP:
        index = int(np.argmax(np.abs(jumps)))
        raise ResolutionError(
            "Angle jump of {:.3f} rad between samples {} and {}: refine the path sampling".format(
                worst, index, index + 1))
    return np.concatenate([[angles[0]], angles[0] + np.cumsum(jumps)])


def maslov_loop(path):
    """Winding number of det_C of the unitary polar part along a loop.

        >>> import numpy as np
        >>> loop = SymplecticPath.from_generator(2 * np.pi * np.eye(2), np.linspace(0, 1, 129), is_loop = True)
        >>> maslov_loop(loop)
        1
    """
    if not path.is_loop:
        raise PreconditionError("Maslov index needs a loop")
    if np.max(np.abs(path.matrices[-1] - path.matrices[0])) > max(TOL_SYMP, 1e-7):
        raise PreconditionError("Path endpoints differ by {:.3e}: not a loop".format(
            np.max(np.abs(path.matrices[-1] - path.matrices[0]))))
    n = path.n
    values = list()
    for matrix in path.matrices:
        unitary, _ = linalg.polar(matrix)
        values.append(np.linalg.det(unitary[:n, :n] + 1j * unitary[n:, :n]))
    angles = unwrapped_angles(np.array(values))
    return int(np.round((angles[-1] - angles[0]) / (2 * np.pi)))


def endpoint_distance_to_one(matrix):
    return float(np.min(np.abs(np.linalg.eigvals(matrix) - 1)))


def standard_cz_index(path, degeneracy_tol = DEGENERACY_TOL):
    """Salamon–Zehnder index: rotation number plus endpoint correction."""
    if np.max(np.abs(path.matrices[0] - np.eye(2 * path.n))) > 1e-8:
        raise PreconditionError("Conley–Zehnder index needs a path starting at the identity")
    distance = endpoint_distance_to_one(path.end)
    if distance < degeneracy_tol:
        raise DegeneracyError(
            "Endpoint has an eigenvalue within {:.3e} of 1".format(distance),
            min_distance = distance,
            )
    values = np.array([rotation_function(matrix) for matrix in path.matrices])
    angles = unwrapped_angles(values)
    total = angles[-1] - angles[0]
    unit_clusters, _ = krein_counts(path.end)
    for eigenvalue, _, first_kind in unit_clusters:
        argument = np.angle(eigenvalue) % (2 * np.pi)
        total += first_kind * (np.pi - argument)
    index = total / np.pi
    rounded = int(np.round(index))
    if abs(index - rounded) > ROUNDING_TOL:
        raise ResolutionError("Index estimate {:.3f} is not close to an integer: refine the path".format(index))
    return rounded


def cz_index(path, degeneracy_tol = DEGENERACY_TOL):
    """Conley–Zehnder index, equal to n at small nondegenerate maxima.

        >>> import numpy as np
        >>> cz_index(SymplecticPath.from_generator(np.diag([1.0, -1.0]), np.linspace(0, 1, 65)))
        0
    """
    return -standard_cz_index(path, degeneracy_tol = degeneracy_tol)


def iteration_profile(path, max_T, degeneracy_tol = DEGENERACY_TOL):
    """List of (T, index) for T = 1..max_T, index None when the T-th iterate is degenerate."""
    profile = list()
    iterated = path
    for T in range(1, max_T + 1):
        if T > 1:
            iterated = iterated.concatenate(path)
        try:
            profile.append((T, cz_index(iterated, degeneracy_tol = degeneracy_tol)))
        except DegeneracyError as error:
            log.debug("Iterate {} is degenerate (distance {:.3e})".format(T, error.min_distance))
            profile.append((T, None))
    return profile


def index_summary(profile):
    summary = collections.OrderedDict()
    indices = [index for _, index in profile if index is not None]
    summary['iterates'] = len(profile)
    summary['degenerate'] = sum(1 for _, index in profile if index is None)
    summary['max_abs_index'] = max((abs(index) for index in indices), default = None)
    return summary
