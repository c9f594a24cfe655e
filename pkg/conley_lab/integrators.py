"""Implicit midpoint time stepping with its variational equation.

Steps act on batches: points have shape (..., 2n) and monodromy matrices
shape (..., 2n, 2n). Orders 4 and 6 compose the midpoint step by the
symmetric triple jump.
"""


import logging


import numpy as np


from conley_lab.errors import PreconditionError, StiffnessError


log = logging.getLogger(__name__)


NEWTON_TOL = 1e-12
NEWTON_MAX_ITERATIONS = 20


def triple_jump_weights(order):
    """Substep weights of the symmetric composition of the given even order.

        >>> triple_jump_weights(2)
        [1.0]
        >>> round(sum(triple_jump_weights(4)), 12)
        1.0
    """
    if order not in (2, 4, 6):
        raise PreconditionError("Integrator order must be 2, 4 or 6, got {}".format(order))
    weights = [1.0]
    for current_order in range(2, order, 2):
        root = 2 ** (1.0 / (current_order + 1))
        outer = 1.0 / (2 - root)
        inner = -root / (2 - root)
        weights = [factor * weight for factor in (outer, inner, outer) for weight in weights]
    return weights


def implicit_midpoint_step(vector_field, jacobian, t, z, h, tol = NEWTON_TOL, max_iterations = NEWTON_MAX_ITERATIONS):
    """One step z -> z' with z' = z + h f(t + h/2, (z + z')/2).

    Returns the new points and the step's linearization (I - h/2 A)⁻¹(I + h/2 A),
    A the Jacobian of the field at the midpoint. Each point of the batch runs
    its own Newton iteration and stops on its own residual, so a point's
    result does not depend on the rest of the batch.
    """
    dimension = z.shape[-1]
    identity = np.eye(dimension)
    t_mid = t + h / 2
    rows = z.reshape(-1, dimension)
    z_new = rows + h * vector_field(t_mid, rows)
    scale = 1.0 + np.max(np.abs(rows), axis = -1)
    error = np.zeros(len(rows))
    active = np.ones(len(rows), dtype = bool)
    for iteration in range(max_iterations + 1):
        index = np.flatnonzero(active)
        if not len(index):
            break
        midpoint = (rows[index] + z_new[index]) / 2
        residual = z_new[index] - rows[index] - h * vector_field(t_mid, midpoint)
        error[index] = np.max(np.abs(residual), axis = -1)
        done = error[index] <= tol * scale[index]
        active[index[done]] = False
        if iteration == max_iterations or done.all():
            break
        pending = index[~done]
        newton_matrix = identity - (h / 2) * jacobian(t_mid, midpoint[~done])
        z_new[pending] = z_new[pending] - np.linalg.solve(newton_matrix, residual[~done][..., np.newaxis])[..., 0]
    if active.any():
        worst = float(np.max(error[active]))
        raise StiffnessError(
            "Newton iteration of the implicit midpoint step did not converge at t = {}".format(t),
            diagnostics = dict(t = float(t), h = float(h), residual = worst, iterations = max_iterations,
                unconverged = int(active.sum())),
            )
    midpoint = (rows + z_new) / 2
    a = (h / 2) * jacobian(t_mid, midpoint)
    step_matrix = np.linalg.solve(identity - a, identity + a)
    return z_new.reshape(z.shape), step_matrix.reshape(z.shape + (dimension, ))


def composed_step(vector_field, jacobian, t, z, h, weights, tol = NEWTON_TOL):
    """Composition of midpoint substeps of sizes w_i h; returns points and linearization."""
    step_matrix = None
    for weight in weights:
        z, substep_matrix = implicit_midpoint_step(vector_field, jacobian, t, z, weight * h, tol = tol)
        t = t + weight * h
        step_matrix = substep_matrix if step_matrix is None else substep_matrix @ step_matrix
    return z, step_matrix
