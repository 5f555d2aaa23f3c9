"""Discrete action, its variational derivative, and stationary paths.

A path ``q_0 .. q_N`` with uniform step ``h`` has discrete action

    S = sum_i  h * v_i.M(m_i).v_i / 2  -  h * (V(q_i) + V(q_{i+1})) / 2

with ``v_i = (q_{i+1} ⊖ q_i) / h`` the wrapped chart velocity and ``m_i`` the
shortest-arc chart midpoint.  The kinetic term uses the midpoint rule; the
potential uses the trapezoid, which makes the discrete Euler-Lagrange
recurrence coincide exactly with Stormer-Verlet for constant mass.

Stationary paths between fixed endpoints come from :func:`solve_bvp` (Newton
on the interior gradient); :func:`integrate_variational` marches the discrete
Euler-Lagrange equations forward one node at a time.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import manifold as mf
from .errors import ConjugatePointError, ConvergenceError, InvalidInputError

GRADIENT_TOL = 1e-10
NEWTON_MAX_ITER = 50
MAX_HALVINGS = 20
EPS_SCALE = 1e-6
# LU pivots this small relative to the largest mark the Hessian as singular
SINGULAR_PIVOT_RATIO = 1e-9


@dataclass(frozen=True, eq=False)
class DiscretePath:
    """Uniformly timed samples ``(t_i, q_i)`` of a curve on the system's manifold.

    ``coords`` holds the canonical chart coordinates, shape ``(N+1, ncoords)``.
    """

    system: object
    times: np.ndarray
    coords: np.ndarray

    def __post_init__(self):
        times = np.array(self.times, dtype=float).reshape(-1)
        coords = np.array(self.coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.shape[0] != times.shape[0]:
            raise InvalidInputError("times and points differ in length")
        if times.shape[0] >= 2:
            steps = np.diff(times)
            if np.any(steps <= 0):
                raise InvalidInputError("times must be strictly increasing")
            if np.max(np.abs(steps - steps[0])) > 1e-12 * max(1.0, abs(steps[0])):
                raise InvalidInputError("times must be uniformly spaced")
        coords = mf.canonical_coords(self.system.manifold, coords)
        times.flags.writeable = False
        coords.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "coords", coords)

    @classmethod
    def from_points(cls, system, times, points):
        for p in points:
            if p.manifold != system.manifold:
                raise InvalidInputError("path point on the wrong manifold")
        return cls(system, times, np.array([p.coords for p in points]))

    @property
    def N(self):
        return self.coords.shape[0] - 1

    @property
    def h(self):
        return float(self.times[1] - self.times[0])

    @property
    def points(self):
        return [mf.ManifoldPoint(self.system.manifold, c) for c in self.coords]


def uniform_path(system, T, coords, t0=0.0):
    """Path through ``coords`` (one row per node) spread evenly over ``[t0, t0+T]``."""
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    n = coords.shape[0] - 1
    return DiscretePath(system, t0 + T * np.arange(n + 1) / n, coords)


@dataclass(frozen=True, eq=False)
class PathVariation:
    """Variation field ``r_i`` along a path; fixed endpoints mean zero end rows."""

    components: np.ndarray

    def __post_init__(self):
        r = np.array(self.components, dtype=float)
        if r.ndim == 1:
            r = r[:, None]
        if r.shape[0] < 2:
            raise InvalidInputError("a variation needs at least two nodes")
        if np.any(r[0] != 0.0) or np.any(r[-1] != 0.0):
            raise InvalidInputError("variation must vanish at both endpoints")
        r.flags.writeable = False
        object.__setattr__(self, "components", r)


@dataclass(frozen=True)
class ActionValue:
    value: float
    per_segment: np.ndarray


# --------------------------------------------------------------------------
# Lagrangian and discrete action

def evaluate_lagrangian(system, q, v):
    """``L(q, v) = v.M(q).v / 2 - V(q)``."""
    if q.manifold != system.manifold:
        raise InvalidInputError(f"point lives on {q.manifold}, system on {system.manifold}")
    if v.base != q:
        raise InvalidInputError("velocity is not based at q")
    vv = v.components
    return float(0.5 * vv @ system.mass(q.coords) @ vv - system.potential(q.coords))


def _segment_actions(system, coords, h):
    man = system.manifold
    d = mf.displacement_coords(man, coords[:-1], coords[1:])
    v = d / h
    pot = np.array([system.potential(q) for q in coords], dtype=float)
    if system.constant_mass:
        kin = 0.5 * np.einsum("ni,ij,nj->n", v, system.mass(coords[0]), v)
    else:
        mids = mf.retract_coords(man, coords[:-1], 0.5 * d)
        kin = np.array([0.5 * vi @ system.mass(m) @ vi for vi, m in zip(v, mids)])
    return h * kin - 0.5 * h * (pot[:-1] + pot[1:])


def discrete_action(system, path):
    """Discrete action of ``path`` with its per-segment contributions."""
    if path.N < 1:
        raise InvalidInputError("a path needs at least one segment")
    seg = _segment_actions(system, path.coords, path.h)
    return ActionValue(float(np.sum(seg)), seg)


def _eps(coords):
    return EPS_SCALE * (1.0 + np.max(np.abs(coords)))


def _potential_gradient(system, q):
    if system.potential_gradient is not None:
        return np.asarray(system.potential_gradient(q), dtype=float)
    from .hamiltonian import _fd_gradient
    return _fd_gradient(system.manifold, system.potential, q)


def _interior_gradient(system, coords, h):
    """dS/dq_k for k = 1..N-1 as an ``(N-1, dim)`` array."""
    man = system.manifold
    n_nodes = coords.shape[0]
    if system.constant_mass:
        M = system.mass(coords[0])
        d = mf.displacement_coords(man, coords[:-1], coords[1:])
        gv = np.array([_potential_gradient(system, q) for q in coords[1:-1]])
        gv = gv.reshape(n_nodes - 2, man.dim)
        return (d[:-1] - d[1:]) @ M.T / h - h * gv
    # q-dependent mass: central differences of the two segments touching node k,
    # with a step set by those three nodes only so each entry is a local quantity
    out = np.empty((n_nodes - 2, man.dim))
    for k in range(1, n_nodes - 1):
        local = coords[k - 1:k + 2]
        eps = _eps(local)
        eye = np.eye(man.dim) * eps
        for j in range(man.dim):
            plus = local.copy()
            minus = local.copy()
            plus[1] = mf.retract_coords(man, local[1], eye[j])
            minus[1] = mf.retract_coords(man, local[1], -eye[j])
            sp = _segment_actions(system, plus, h).sum()
            sm = _segment_actions(system, minus, h).sum()
            out[k - 1, j] = (sp - sm) / (2.0 * eps)
    return out


def action_gradient(system, path):
    """Gradient of the discrete action with respect to the interior nodes.

    Returns a list of ``N-1`` vectors (endpoints held fixed).
    """
    if path.N < 2:
        raise InvalidInputError("action gradient needs at least two segments")
    return list(_interior_gradient(system, path.coords, path.h))


def directional_action_derivative(system, path, r):
    """``d/de S(path ⊕ e r)`` at ``e = 0`` for a fixed-endpoint variation ``r``.

    Contracted from the assembled interior gradient, so the result is exactly
    linear in ``r``.  The gradient is analytic for constant mass and built from
    local central differences otherwise.
    """
    comps = r.components
    if comps.shape != (path.N + 1, system.manifold.dim):
        raise InvalidInputError(
            f"variation shape {comps.shape} does not match path ({path.N + 1}, {system.manifold.dim})")
    if path.N < 2:
        return 0.0
    g = _interior_gradient(system, path.coords, path.h)
    return float(np.sum(g * comps[1:-1]))


# --------------------------------------------------------------------------
# stationary paths

def _gradient_jacobian(system, coords, h):
    """Block-tridiagonal Jacobian of the interior gradient, by colored central differences."""
    man = system.manifold
    dim = man.dim
    n_nodes = coords.shape[0]
    n = n_nodes - 2
    J = np.zeros((n * dim, n * dim))
    eps = _eps(coords)
    for color in range(3):
        nodes = [k for k in range(1, n_nodes - 1) if k % 3 == color]
        if not nodes:
            continue
        for comp in range(dim):
            U = np.zeros((n_nodes, dim))
            U[nodes, comp] = eps
            gp = _interior_gradient(system, mf.retract_coords(man, coords, U), h)
            gm = _interior_gradient(system, mf.retract_coords(man, coords, -U), h)
            D = (gp - gm) / (2.0 * eps)
            for k in nodes:
                col = (k - 1) * dim + comp
                for j in (k - 1, k, k + 1):
                    if 1 <= j <= n_nodes - 2:
                        J[(j - 1) * dim:j * dim, col] = D[j - 1]
    return J


def _newton_solve(system, coords, h):
    import scipy.linalg  # deferred: it dominates start-up of CLI runs that never solve a BVP

    man = system.manifold
    grad = _interior_gradient(system, coords, h)
    res = np.max(np.abs(grad)) if grad.size else 0.0
    for _ in range(NEWTON_MAX_ITER):
        if res <= GRADIENT_TOL:
            return coords
        J = _gradient_jacobian(system, coords, h)
        lu, piv = scipy.linalg.lu_factor(J, check_finite=False)
        pivots = np.abs(np.diag(lu))
        if pivots.min() <= SINGULAR_PIVOT_RATIO * pivots.max():
            raise ConjugatePointError(
                "singular action Hessian: endpoints are (near) conjugate points",
                residual=float(res))
        step = -scipy.linalg.lu_solve((lu, piv), grad.reshape(-1), check_finite=False)
        step = step.reshape(-1, man.dim)
        lam = 1.0
        for _ in range(MAX_HALVINGS + 1):
            U = np.zeros((coords.shape[0], man.dim))
            U[1:-1] = lam * step
            trial = mf.retract_coords(man, coords, U)
            trial_grad = _interior_gradient(system, trial, h)
            trial_res = np.max(np.abs(trial_grad))
            if trial_res < res:
                coords, grad, res = trial, trial_grad, trial_res
                break
            lam *= 0.5
        else:
            raise ConvergenceError(
                f"Newton line search stalled at gradient {res:.3e}", residual=float(res))
    if res <= GRADIENT_TOL:
        return coords
    raise ConvergenceError(
        f"no stationary path after {NEWTON_MAX_ITER} iterations (gradient {res:.3e})",
        residual=float(res))


def solve_bvp(system, qa, qb, T, N, initial_guess=None):
    """Stationary path of the discrete action from ``qa`` to ``qb`` over time ``T``.

    Newton iteration on the interior gradient with step halving; starts from
    ``initial_guess`` or from linear interpolation in the chart.  Raises
    :class:`ConjugatePointError` when the action Hessian is singular and
    :class:`ConvergenceError` when the gradient cannot be driven below 1e-10.
    """
    if not T > 0:
        raise InvalidInputError("T must be positive")
    N = int(N)
    if N < 2:
        raise InvalidInputError("solve_bvp needs N >= 2")
    man = system.manifold
    if qa.manifold != man or qb.manifold != man:
        raise InvalidInputError("endpoints must live on the system's manifold")
    qa = mf.canonicalize(qa)
    qb = mf.canonicalize(qb)
    if initial_guess is not None:
        if initial_guess.N != N:
            raise InvalidInputError("initial guess has the wrong number of nodes")
        coords = np.array(initial_guess.coords)
        coords[0], coords[-1] = qa.coords, qb.coords
    else:
        d = mf.displacement_coords(man, qa.coords, qb.coords)
        frac = (np.arange(N + 1) / N)[:, None]
        coords = mf.retract_coords(man, qa.coords[None, :], frac * d)
        coords[-1] = qb.coords
    h = T / N
    coords = _newton_solve(system, coords, h)
    return DiscretePath(system, h * np.arange(N + 1), coords)


def integrate_variational(system, q0, q1, h, steps):
    """March the discrete Euler-Lagrange equations from the pair ``(q0, q1)``.

    Each new node ``q_{i+1}`` is found by Newton so that the action gradient
    at node ``i`` vanishes (to 1e-10).  Returns a path of ``steps + 1`` nodes.
    """
    if not h > 0:
        raise InvalidInputError("h must be positive")
    steps = int(steps)
    if steps < 1:
        raise InvalidInputError("steps must be at least 1")
    man = system.manifold
    coords = np.empty((steps + 1, man.ncoords))
    coords[0] = mf.canonicalize(q0).coords
    coords[1] = mf.canonicalize(q1).coords
    for i in range(1, steps):
        try:
            coords[i + 1] = _del_step(system, coords[i - 1], coords[i], h)
        except ConvergenceError as exc:
            raise ConvergenceError(f"step {i}: {exc}", residual=exc.residual, step=i) from None
    return DiscretePath(system, h * np.arange(steps + 1), coords)


def _del_step(system, q_prev, q_cur, h):
    man = system.manifold
    base = mf.retract_coords(man, q_cur, mf.displacement_coords(man, q_prev, q_cur))
    local = np.stack([q_prev, q_cur, base])

    def residual(u):
        local[2] = mf.retract_coords(man, base, u)
        return _interior_gradient(system, local, h)[0]

    u = np.zeros(man.dim)
    r = residual(u)
    res = np.max(np.abs(r))
    for _ in range(NEWTON_MAX_ITER):
        if res <= GRADIENT_TOL:
            return mf.retract_coords(man, base, u)
        eps = _eps(local)
        J = np.empty((man.dim, man.dim))
        for j in range(man.dim):
            e = np.zeros(man.dim)
            e[j] = eps
            J[:, j] = (residual(u + e) - residual(u - e)) / (2.0 * eps)
        try:
            step = -np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            raise ConvergenceError("singular discrete Legendre map", residual=float(res)) from None
        lam = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial_r = residual(u + lam * step)
            trial_res = np.max(np.abs(trial_r))
            if trial_res < res:
                u, r, res = u + lam * step, trial_r, trial_res
                break
            lam *= 0.5
        else:
            raise ConvergenceError(f"line search stalled at {res:.3e}", residual=float(res))
    if res <= GRADIENT_TOL:
        return mf.retract_coords(man, base, u)
    raise ConvergenceError(f"no convergence (residual {res:.3e})", residual=float(res))


def write_path_csv(path, path_or_file):
    """Write ``t,q0..q{d-1}`` rows with 17 significant digits."""
    header = ["t"] + [f"q{i}" for i in range(path.coords.shape[1])]
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for t, q in zip(path.times, path.coords):
            writer.writerow([f"{x:.17g}" for x in (t, *q)])
    finally:
        if own:
            fh.close()
