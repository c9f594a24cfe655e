"""Linear symplectic algebra on R^{2n}.

Coordinates are ordered (x_1, ..., x_n, y_1, ..., y_n) and the symplectic form
is ω = Σ dx_i ∧ dy_i, that is ω(u, v) = uᵀ Ω v with Ω = [[0, I], [-I, 0]].
Hamiltonian vector fields are X_H = J ∇H with J = -Ω, so that the flow of
½(x² + y²) turns counter-clockwise.

    >>> import numpy as np
    >>> is_symplectic(np.array([[1.0, 1.0], [0.0, 1.0]]))
    True
"""


import collections
import logging


import numpy as np
from scipy import linalg, optimize


from conley_lab.errors import DimensionError, InternalError, InvalidFrameError, PreconditionError, ResolutionError


log = logging.getLogger(__name__)


TOL_SYMP = 1e-9


def half_dimension(matrix):
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionError("Expected a square matrix, got shape {}".format(matrix.shape))
    if matrix.shape[0] % 2 != 0:
        raise DimensionError("Expected an even dimension, got {}".format(matrix.shape[0]))
    return matrix.shape[0] // 2


def standard_j(n):
    """Matrix J with X_H = J ∇H."""
    identity = np.eye(n)
    zeros = np.zeros((n, n))
    return np.block([[zeros, -identity], [identity, zeros]])


def standard_omega(n):
    """Matrix Ω of the symplectic form, ω(u, v) = uᵀ Ω v."""
    return -standard_j(n)


def omega(u, v):
    u = np.asarray(u, dtype = float)
    v = np.asarray(v, dtype = float)
    return float(u @ standard_omega(len(u) // 2) @ v)


def is_symplectic(matrix, tol = TOL_SYMP):
    """True iff ‖MᵀJM - J‖_max <= tol and |det M - 1| <= tol.

        >>> import numpy as np
        >>> is_symplectic(2 * np.eye(2))
        False
    """
    n = half_dimension(matrix)
    matrix = np.asarray(matrix, dtype = float)
    j = standard_j(n)
    if np.max(np.abs(matrix.T @ j @ matrix - j)) > tol:
        return False
    # det M = 1 follows from the first condition
    return bool(abs(np.linalg.det(matrix) - 1) <= tol)


def symplectic_defect(matrix):
    n = half_dimension(matrix)
    j = standard_j(n)
    return float(np.max(np.abs(matrix.T @ j @ matrix - j)))


class SymplecticFrame(object):
    """An ordered symplectic basis (e_1..e_n, f_1..f_n) attached to a base point.

    The columns of ``matrix`` are the basis vectors, x-group first.
    """
    matrix = None
    base_point = None

    def __init__(self, matrix = None, base_point = None, check = True, tol = TOL_SYMP):
        assert matrix is not None, "A frame needs its column matrix"
        matrix = np.array(matrix, dtype = float)
        n = half_dimension(matrix)
        if check and not is_symplectic(matrix, tol = tol):
            raise InvalidFrameError("Frame is not symplectic (defect {:.3e})".format(symplectic_defect(matrix)))
        self.matrix = matrix
        self.base_point = np.zeros(2 * n) if base_point is None else np.array(base_point, dtype = float)

    def __repr__(self):
        return "SymplecticFrame(n = {}, base_point = {})".format(self.n, self.base_point.tolist())

    @property
    def n(self):
        return self.matrix.shape[0] // 2

    @property
    def x_group(self):
        return self.matrix[:, :self.n]

    @property
    def y_group(self):
        return self.matrix[:, self.n:]

    @classmethod
    def standard(cls, n, base_point = None):
        return cls(matrix = np.eye(2 * n), base_point = base_point)

    @classmethod
    def from_json(cls, frame_json):
        x_group = np.array(frame_json['x_group'], dtype = float).T
        y_group = np.array(frame_json['y_group'], dtype = float).T
        return cls(matrix = np.hstack([x_group, y_group]), base_point = frame_json.get('base_point'))

    def to_coordinates(self, points):
        """Frame coordinates w of phase points z = base_point + C w."""
        points = np.asarray(points, dtype = float)
        return np.linalg.solve(self.matrix, (points - self.base_point).T).T

    def from_coordinates(self, coordinates):
        coordinates = np.asarray(coordinates, dtype = float)
        return self.base_point + coordinates @ self.matrix.T

    def to_json(self):
        frame_json = collections.OrderedDict()
        frame_json['x_group'] = self.x_group.T.tolist()
        frame_json['y_group'] = self.y_group.T.tolist()
        frame_json['base_point'] = self.base_point.tolist()
        return frame_json


class LagrangianSplitting(object):
    """A decomposition V = L ⊕ L′ into Lagrangian subspaces given by basis columns."""

    def __init__(self, L = None, L_prime = None, tol = 1e-8):
        assert L is not None and L_prime is not None
        self.L = np.array(L, dtype = float)
        self.L_prime = np.array(L_prime, dtype = float)
        n = self.L.shape[1]
        assert self.L.shape == self.L_prime.shape == (2 * n, n), \
            "Lagrangian bases must be 2n x n, got {} and {}".format(self.L.shape, self.L_prime.shape)
        for name, basis in (('L', self.L), ('L_prime', self.L_prime)):
            scale = max(np.linalg.norm(basis) ** 2, 1.0)
            if np.max(np.abs(basis.T @ standard_omega(n) @ basis)) > tol * scale:
                raise PreconditionError("{} is not Lagrangian".format(name))
        if np.linalg.matrix_rank(np.hstack([self.L, self.L_prime])) < 2 * n:
            raise PreconditionError("L and L_prime do not span the whole space")

    @property
    def n(self):
        return self.L.shape[1]

    @classmethod
    def standard(cls, n):
        identity = np.eye(2 * n)
        return cls(L = identity[:, :n], L_prime = identity[:, n:])

    def preserved_by(self, matrix, tol = 1e-10):
        """True iff matrix maps L into L and L′ into L′."""
        def residual(basis):
            image = matrix @ basis
            coefficients = np.linalg.lstsq(basis, image, rcond = None)[0]
            return np.linalg.norm(image - basis @ coefficients) / max(np.linalg.norm(image), 1.0)
        return residual(self.L) <= tol and residual(self.L_prime) <= tol

    def to_json(self):
        split_json = collections.OrderedDict()
        split_json['L'] = self.L.T.tolist()
        split_json['L_prime'] = self.L_prime.T.tolist()
        return split_json


def frame_matrix(frame):
    if isinstance(frame, SymplecticFrame):
        return frame.matrix
    return np.asarray(frame, dtype = float)


def frame_norm(operator, frame):
    """Norm of a vector or of a linear map expressed in frame coordinates, ‖C⁻¹AC‖.

    The frame may be a SymplecticFrame or any invertible column matrix.

        >>> import numpy as np
        >>> round(frame_norm(np.array([[0.0, 1.0], [0.0, 0.0]]), np.diag([1.0, 1e-3])), 12)
        0.001
    """
    columns = frame_matrix(frame)
    operator = np.asarray(operator, dtype = float)
    if columns.shape[0] != columns.shape[1] or columns.shape[0] != operator.shape[0]:
        raise DimensionError("Frame of shape {} does not match operand of shape {}".format(
            columns.shape, operator.shape))
    if not np.all(np.isfinite(columns)) or np.linalg.cond(columns) > 1 / np.finfo(float).eps:
        raise InvalidFrameError("Frame matrix is singular")
    if operator.ndim == 1:
        return float(np.linalg.norm(np.linalg.solve(columns, operator)))
    return float(np.linalg.norm(np.linalg.solve(columns, operator @ columns), 2))


def unipotence_threshold(matrix, tol):
    # Eigenvalues of a Jordan block of size k only resolve to eps^(1/k)
    n = half_dimension(matrix)
    jordan_allowance = (64 * np.finfo(float).eps * max(np.linalg.norm(matrix, 2), 1.0)) ** (1.0 / (2 * n))
    return max(tol, jordan_allowance)


def is_unipotent(matrix, tol = 1e-8):
    """True iff every eigenvalue lies within the tolerance of 1.

    The tolerance is widened to the resolution floating point eigenvalues of a
    maximal Jordan block can reach.

        >>> import numpy as np
        >>> is_unipotent(np.array([[1.0, 1.0], [0.0, 1.0]]))
        True
    """
    matrix = np.asarray(matrix, dtype = float)
    half_dimension(matrix)
    eigenvalues = np.linalg.eigvals(matrix)
    return bool(np.max(np.abs(eigenvalues - 1)) <= unipotence_threshold(matrix, tol))


def squeeze_lower_bound(phi, sigma):
    """Lower bound on ‖Ψ‖² over all symplectic Ψ with ‖ΨΦΨ⁻¹ - I‖ < sigma.

    (Φ - I)^k = Ψ⁻¹ (ΨΦΨ⁻¹ - I)^k Ψ and ‖Ψ⁻¹‖ = ‖Ψ‖ for symplectic Ψ, so
    ‖Ψ‖² >= ‖(Φ - I)^k‖ / sigma^k for every k.

        >>> import numpy as np
        >>> round(squeeze_lower_bound(np.array([[1.0, 1.0], [0.0, 1.0]]), 1e-3))
        1000
    """
    n = half_dimension(phi)
    nilpotent = np.asarray(phi, dtype = float) - np.eye(2 * n)
    bound, power = 1.0, np.eye(2 * n)
    for k in range(1, 2 * n):
        power = power @ nilpotent
        bound = max(bound, np.linalg.norm(power, 2) / sigma ** k)
    return float(bound)


def _isotropic_flag(phi):
    """Orthonormal isotropic E = (e_1..e_n) with (Φ - I) e_k in span(e_1..e_{k-1}).

    Each e_k is the smallest right singular vector of (Φ - I) restricted to
    W_k^ω ∩ W_k^⊥ and projected off W_k = span(e_1..e_{k-1}).
    """
    n = half_dimension(phi)
    omega_matrix = standard_omega(n)
    nilpotent = phi - np.eye(2 * n)
    flag = np.zeros((2 * n, 0))
    for k in range(n):
        if k == 0:
            candidates = np.eye(2 * n)
        else:
            candidates = linalg.null_space(np.vstack([flag.T @ omega_matrix, flag.T]))
        if candidates.shape[1] != 2 * (n - k):
            raise InternalError("ω-complement of the flag has dimension {} instead of {}".format(
                candidates.shape[1], 2 * (n - k)))
        image = nilpotent @ candidates
        image = image - flag @ (flag.T @ image)
        _, singular_values, right = np.linalg.svd(image)
        vector = candidates @ right[-1]
        log.debug("Flag step {}: leak {:.3e}".format(k, singular_values[-1]))
        flag = np.hstack([flag, (vector / np.linalg.norm(vector))[:, np.newaxis]])
    return flag


def _flag_order(n):
    # b_1..b_n = e_1..e_n, b_{2n+1-k} = f_k; Φ - I is strictly upper triangular in this order
    return np.r_[0:n, 2 * n - 1:n - 1:-1]


def _weights(nilpotent, sigma):
    """Log-scales s with ‖D N D⁻¹‖ <= sigma / 2 for D = diag(e^s, e^-s) and minimal max |s|.

    A linear program over the strictly upper triangular entries of N in flag order.
    """
    n = nilpotent.shape[0] // 2
    order = _flag_order(n)
    # b-position -> (column of s, sign)
    columns = np.r_[0:n, 0:n][order]
    signs = np.r_[np.ones(n), -np.ones(n)][order]
    entries = [(i, j) for i in range(2 * n) for j in range(i + 1, 2 * n) if nilpotent[order[i], order[j]] != 0]
    if not entries:
        return np.zeros(n)
    # Frobenius bound: every entry at most sigma / (2 sqrt(#entries))
    entry_bound = sigma / (2 * np.sqrt(len(entries)))
    rows, limits = list(), list()
    for i, j in entries:
        row = np.zeros(n + 1)
        row[columns[i]] += signs[i]
        row[columns[j]] -= signs[j]
        rows.append(row)
        limits.append(np.log(entry_bound / abs(nilpotent[order[i], order[j]])))
    for k in range(n):
        for sign in (1, -1):
            row = np.zeros(n + 1)
            row[k] = sign
            row[n] = -1
            rows.append(row)
            limits.append(0.0)
    objective = np.r_[np.zeros(n), 1.0]
    bounds = [(None, None)] * n + [(0, None)]
    result = optimize.linprog(objective, A_ub = np.array(rows), b_ub = np.array(limits), bounds = bounds,
        method = 'highs')
    if not result.success:
        raise InternalError("Scaling program failed: {}".format(result.message))
    return result.x[:n]


def _squeeze(phi, sigma):
    """Orthogonal symplectic basis B and log-scales w with Ψ = B diag(e^w) Bᵀ.

    Returns (basis, weights, residual) where residual = ‖ΨΦΨ⁻¹ - I‖.
    """
    n = half_dimension(phi)
    phi = np.asarray(phi, dtype = float)
    if not np.all(np.isfinite(phi)):
        raise PreconditionError("Matrix has non-finite entries")
    if sigma <= 0:
        raise PreconditionError("sigma must be positive, got {}".format(sigma))
    if not is_unipotent(phi):
        raise PreconditionError("Matrix is not unipotent: eigenvalues {}".format(np.linalg.eigvals(phi)))
    try:
        flag = _isotropic_flag(phi)
        basis = np.hstack([flag, standard_j(n) @ flag])
        nilpotent = basis.T @ phi @ basis - np.eye(2 * n)
        s = _weights(nilpotent, sigma)
        weights = np.r_[s, -s]
        squeezed = nilpotent * np.exp(weights[:, np.newaxis] - weights[np.newaxis, :])
        residual = float(np.linalg.norm(squeezed, 2))
    except np.linalg.LinAlgError as error:
        raise InternalError("Linear algebra failed while squeezing: {}".format(error))
    log.debug("Squeeze weights {} give residual {:.3e} (basis defect {:.3e})".format(
        s.tolist(), residual, symplectic_defect(basis)))
    if residual >= sigma:
        raise ResolutionError(
            "Rounding in Φ leaves ‖ΨΦΨ⁻¹ - I‖ = {:.3e} above {} (Ψ needs ‖Ψ‖² >= {:.3e})".format(
                residual, sigma, squeeze_lower_bound(phi, sigma)),
            lower_bound = squeeze_lower_bound(phi, sigma),
            )
    return basis, weights, residual


def squeeze_unipotent(phi, sigma, tol = TOL_SYMP):
    """Symplectic Ψ and Lagrangian splitting with Φ(L) = L and ‖ΨΦΨ⁻¹ - I‖ < sigma.

    Ψ preserves both subspaces of the splitting. A ResolutionError is raised
    when the Ψ needed cannot be held symplectic to tol in double precision.

        >>> import numpy as np
        >>> psi, split = squeeze_unipotent(np.array([[1.0, 1.0], [0.0, 1.0]]), 1e-3)
        >>> bool(np.linalg.norm(psi @ np.array([[1.0, 1.0], [0.0, 1.0]]) @ np.linalg.inv(psi) - np.eye(2), 2) < 1e-3)
        True
    """
    basis, weights, residual = _squeeze(phi, sigma)
    n = basis.shape[0] // 2
    psi = (basis * np.exp(weights)) @ basis.T
    defect = symplectic_defect(psi)
    if defect > tol:
        lower_bound = squeeze_lower_bound(phi, sigma)
        raise ResolutionError(
            "Ψ with ‖Ψ‖² = {:.3e} is symplectic only to {:.3e} in double precision; any Ψ needs ‖Ψ‖² >= {:.3e}".format(
                np.linalg.norm(psi, 2) ** 2, defect, lower_bound),
            lower_bound = lower_bound,
            )
    log.debug("Squeezed unipotent matrix to residual {:.3e}".format(residual))
    return psi, LagrangianSplitting(L = basis[:, :n], L_prime = basis[:, n:])


def squeeze_frame(phi, sigma, base_point = None):
    """Frame compatible with the splitting of squeeze_unipotent in which Φ is sigma-close to I.

    The frame B diag(e^-w) is symplectic because B is, so only B is checked.
    """
    basis, weights, residual = _squeeze(phi, sigma)
    if not is_symplectic(basis):
        raise InternalError("Adapted basis is not symplectic (defect {:.3e})".format(symplectic_defect(basis)))
    return SymplecticFrame(matrix = basis * np.exp(-weights), base_point = base_point, check = False)


def random_symplectic(n, rng, scale = 1.0):
    """Random symplectic matrix as a product of shears and a block-diagonal factor."""
    upper = rng.normal(size = (n, n)) * scale
    lower = rng.normal(size = (n, n)) * scale
    upper, lower = (upper + upper.T) / 2, (lower + lower.T) / 2
    block = np.eye(n) + scale * rng.normal(size = (n, n)) / np.sqrt(n)
    identity, zeros = np.eye(n), np.zeros((n, n))
    upper_shear = np.block([[identity, upper], [zeros, identity]])
    lower_shear = np.block([[identity, zeros], [lower, identity]])
    diagonal = np.block([[block, zeros], [zeros, np.linalg.inv(block).T]])
    return upper_shear @ diagonal @ lower_shear


def random_unipotent(n, rng, scale = 1.0, conjugate = True):
    """exp of a nilpotent Hamiltonian matrix [[N, B], [0, -Nᵀ]], optionally conjugated."""
    nilpotent = np.triu(rng.normal(size = (n, n)), k = 1) * scale
    symmetric = rng.normal(size = (n, n)) * scale
    symmetric = (symmetric + symmetric.T) / 2
    generator = np.block([[nilpotent, symmetric], [np.zeros((n, n)), -nilpotent.T]])
    unipotent = linalg.expm(generator)
    if conjugate:
        frame = random_symplectic(n, rng, scale = 0.3)
        unipotent = frame @ unipotent @ np.linalg.inv(frame)
    return unipotent
