"""Phase-space dynamics: Hamilton's equations and structure-preserving steppers.

States live on the cotangent bundle as ``(q, p)``.  The Hamiltonian vector
field is ``X_H = J dH`` with ``J(a, b) = (b, -a)``, i.e. ``qdot = dH/dp`` and
``pdot = -dH/dq``.  Three symplectic steppers are provided (symplectic Euler,
Stormer-Verlet, implicit midpoint) plus classical RK4 as a non-symplectic
control.

The ``step_*`` functions take and return :class:`PhaseState`; :func:`integrate`
runs on bare arrays internally and stores them in a :class:`Trajectory`.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from . import manifold as mf
from .errors import (ConvergenceError, InvalidInputError, NumericalError,
                     UnsupportedMethodError)

FD_STEP = 1e-5
MIDPOINT_TOL = 1e-12
MIDPOINT_MAX_ITER = 100
MIDPOINT_STALL_LIMIT = 20

METHODS = ("symplectic-euler", "verlet", "implicit-midpoint", "rk4-reference")


@dataclass(frozen=True, eq=False)
class PhaseState:
    """A point ``(q, p)`` of phase space ``T*Q``."""

    q: mf.ManifoldPoint
    p: mf.CotangentValue

    def __post_init__(self):
        if self.p.base != self.q:
            raise InvalidInputError("momentum is not based at the state's configuration")

    @classmethod
    def from_arrays(cls, manifold, q, p):
        qp = mf.point(manifold, q)
        return cls(qp, mf.CotangentValue(qp, p))

    @property
    def manifold(self):
        return self.q.manifold


def phase_state(system, q, p):
    """Shorthand for a state of ``system`` from raw coordinate lists."""
    return PhaseState.from_arrays(system.manifold, np.atleast_1d(q), np.atleast_1d(p))


class SymplecticStructure:
    """The canonical symplectic map ``J`` on a ``2n``-dimensional phase space.

    Only its action is available; no matrix is ever stored.
    """

    def __init__(self, n):
        self.n = int(n)

    def apply(self, a, b):
        """``J (a, b) = (b, -a)``."""
        return np.asarray(b, dtype=float), -np.asarray(a, dtype=float)

    def apply_flat(self, z):
        z = np.asarray(z, dtype=float)
        a, b = self.apply(z[..., :self.n], z[..., self.n:])
        return np.concatenate([a, b], axis=-1)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniformly sampled solution of Hamilton's equations.

    ``qs`` has shape ``(n+1, ncoords)`` and ``ps`` shape ``(n+1, dim)``.
    """

    times: np.ndarray
    qs: np.ndarray
    ps: np.ndarray
    method: str
    step: float
    manifold: mf.Manifold

    @property
    def states(self):
        return [PhaseState.from_arrays(self.manifold, q, p) for q, p in zip(self.qs, self.ps)]

    def __len__(self):
        return len(self.times)


# --------------------------------------------------------------------------
# gradients and the vector field (array level)

def _fd_gradient(manifold, f, coords):
    coords = np.asarray(coords, dtype=float)
    n = manifold.dim
    delta = FD_STEP * (1.0 + np.max(np.abs(coords)))
    shifts = np.concatenate([np.eye(n), -np.eye(n)]) * delta
    pts = mf.retract_coords(manifold, coords[None, :], shifts)
    vals = np.array([f(x) for x in pts], dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NumericalError("non-finite function value in finite-difference gradient")
    return (vals[:n] - vals[n:]) / (2.0 * delta)


def grad_fd(f, q):
    """Central-difference gradient of ``f`` at the point ``q``.

    ``f`` receives chart coordinates.  The step is ``1e-5 (1 + max|q|)`` and
    perturbations are retracted, so circle components wrap.
    """
    return _fd_gradient(q.manifold, f, q.coords)


def _kinetic(system, q, p):
    return 0.5 * float(np.dot(p, system.inverse_mass_times(q, p)))


def _hamiltonian(system, q, p):
    return _kinetic(system, q, p) + float(system.potential(q))


def _potential_gradient(system, q):
    if system.potential_gradient is not None:
        return np.asarray(system.potential_gradient(q), dtype=float)
    return _fd_gradient(system.manifold, system.potential, q)


def _grad_q(system, q, p):
    if system.constant_mass:
        return _potential_gradient(system, q)
    return _fd_gradient(system.manifold, lambda x: _hamiltonian(system, x, p), q)


def _vector_field(system, q, p):
    return system.inverse_mass_times(q, p), -_grad_q(system, q, p)


def _hamiltonian_array(system, qs, ps):
    return np.array([_hamiltonian(system, q, p) for q, p in zip(qs, ps)])


# --------------------------------------------------------------------------
# public evaluation

def _check_state(system, s):
    if s.manifold != system.manifold:
        raise InvalidInputError(f"state lives on {s.manifold}, system on {system.manifold}")


def evaluate_hamiltonian(system, s):
    """Total energy ``p.M(q)^-1.p / 2 + V(q)``."""
    _check_state(system, s)
    try:
        return _hamiltonian(system, s.q.coords, s.p.components)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular mass matrix: {exc}") from None


def hamiltonian_vector_field(system, s):
    """Return ``(qdot, pdot)``: a TangentValue and the momentum rate array."""
    _check_state(system, s)
    try:
        qdot, pdot = _vector_field(system, s.q.coords, s.p.components)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular mass matrix: {exc}") from None
    return mf.TangentValue(s.q, qdot), pdot


def directional_energy_change(system, s):
    """``dH(X_H) = dH/dq . dH/dp - dH/dp . dH/dq``; zero up to rounding."""
    _check_state(system, s)
    q, p = s.q.coords, s.p.components
    grad_q = _grad_q(system, q, p)
    grad_p = system.inverse_mass_times(q, p)
    qdot, pdot = SymplecticStructure(system.manifold.dim).apply(grad_q, grad_p)
    return float(np.dot(grad_q, qdot) + np.dot(grad_p, pdot))


def legendre(system, q, v):
    """Momentum picture of ``(q, v)``: the state ``(q, M(q) v)``."""
    if v.base != q:
        raise InvalidInputError("velocity is not based at q")
    p = system.mass(q.coords) @ v.components
    return PhaseState(q, mf.CotangentValue(q, p))


def legendre_inverse(system, s):
    """Velocity ``M(q)^-1 p`` of the state ``s``."""
    _check_state(system, s)
    try:
        v = system.inverse_mass_times(s.q.coords, s.p.components)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular mass matrix: {exc}") from None
    return mf.TangentValue(s.q, v)


# --------------------------------------------------------------------------
# steppers (array level)

def _require_separable(system, method):
    if not system.constant_mass:
        raise UnsupportedMethodError(
            f"{method} needs a constant mass matrix; {system.name} has q-dependent M(q)")


def _symplectic_euler(system, q, p, h, retract):
    p1 = p - h * _potential_gradient(system, q)
    q1 = retract(q, h * system.inverse_mass_times(q, p1))
    return q1, p1


def _verlet(system, q, p, h, retract):
    p_half = p - 0.5 * h * _potential_gradient(system, q)
    q1 = retract(q, h * system.inverse_mass_times(q, p_half))
    p1 = p_half - 0.5 * h * _potential_gradient(system, q1)
    return q1, p1


def _rk4(system, q, p, h, retract):
    k1q, k1p = _vector_field(system, q, p)
    k2q, k2p = _vector_field(system, retract(q, 0.5 * h * k1q), p + 0.5 * h * k1p)
    k3q, k3p = _vector_field(system, retract(q, 0.5 * h * k2q), p + 0.5 * h * k2p)
    k4q, k4p = _vector_field(system, retract(q, h * k3q), p + h * k3p)
    q1 = retract(q, h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q))
    p1 = p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
    return q1, p1


def _midpoint_map(system, q, p, h, retract):
    def g(dq, dp):
        a, b = _vector_field(system, retract(q, 0.5 * dq), p + 0.5 * dp)
        return h * a, h * b
    return g


def midpoint_residual(system, q, p, q1, p1, h):
    """Max-norm residual of ``z1 = z ⊕ h X_H((z + z1)/2)`` for raw arrays."""
    man = system.manifold
    dq = mf.displacement_coords(man, q, q1)
    dp = np.asarray(p1) - p
    gq, gp = _midpoint_map(system, q, p, h, mf.retractor(man))(dq, dp)
    return max(np.max(np.abs(dq - gq)), np.max(np.abs(dp - gp)))


def _implicit_midpoint(system, q, p, h, retract, guess=None, tol=MIDPOINT_TOL):
    """Solve for the increment ``(dq, dp)``; returns ``(q1, p1, dq, dp)``.

    Plain fixed-point iteration on ``d = h X(z ⊕ d/2)``.  After the residual
    meets ``tol`` iteration continues while it still shrinks by at least a
    factor four, so quadratic invariants are kept to rounding level.  Twenty
    non-contracting iterations switch to Newton with a finite-difference
    Jacobian.
    """
    g = _midpoint_map(system, q, p, h, retract)
    if guess is None:
        dq, dp = g(np.zeros(system.manifold.dim), np.zeros_like(p))
    else:
        dq, dp = guess
    floor = 1e-15 * (1.0 + np.max(np.abs(p)) + np.max(np.abs(q)))
    prev = np.inf
    stalls = 0
    res = np.inf
    for _ in range(MIDPOINT_MAX_ITER):
        gq, gp = g(dq, dp)
        res = max(np.max(np.abs(dq - gq)), np.max(np.abs(dp - gp)))
        if not np.isfinite(res):
            break
        done = res <= tol and (res <= floor or res > 0.25 * prev)
        dq, dp = gq, gp
        if done:
            return retract(q, dq), p + dp, dq, dp
        if res >= prev:
            stalls += 1
            if stalls >= MIDPOINT_STALL_LIMIT:
                break
        prev = res
    return _midpoint_newton(system, q, p, h, retract, g, tol)


def _midpoint_newton(system, q, p, h, retract, g, tol):
    n = p.shape[0]
    dq, dp = g(np.zeros(n), np.zeros(n))
    d = np.concatenate([dq, dp])

    def residual(d):
        a, b = g(d[:n], d[n:])
        return d - np.concatenate([a, b])

    r = residual(d)
    for _ in range(MIDPOINT_MAX_ITER):
        res = np.max(np.abs(r))
        if res <= tol:
            return retract(q, d[:n]), p + d[n:], d[:n], d[n:]
        eps = 1e-7 * (1.0 + np.max(np.abs(d)))
        J = np.empty((2 * n, 2 * n))
        for j in range(2 * n):
            e = np.zeros(2 * n)
            e[j] = eps
            J[:, j] = (residual(d + e) - residual(d - e)) / (2 * eps)
        try:
            d = d - np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            break
        r = residual(d)
        if not np.all(np.isfinite(r)):
            break
    raise ConvergenceError(
        f"implicit midpoint did not converge (residual {np.max(np.abs(r)):.3e})",
        residual=float(np.max(np.abs(r))))


# --------------------------------------------------------------------------
# public steppers

def _unpack(system, s, h):
    _check_state(system, s)
    if not h > 0:
        raise InvalidInputError("step size must be positive")
    return s.q.coords, s.p.components.copy(), mf.retractor(system.manifold)


def _pack(system, q, p):
    return PhaseState.from_arrays(system.manifold, q, p)


def step_symplectic_euler(system, s, h):
    """Kick then drift: ``p' = p - h dV(q)``, ``q' = q ⊕ h M^-1 p'``."""
    _require_separable(system, "symplectic-euler")
    q, p, retract = _unpack(system, s, h)
    return _pack(system, *_symplectic_euler(system, q, p, h, retract))


def step_verlet(system, s, h):
    """Stormer-Verlet (kick-drift-kick) step for separable Hamiltonians."""
    _require_separable(system, "verlet")
    q, p, retract = _unpack(system, s, h)
    return _pack(system, *_verlet(system, q, p, h, retract))


def step_implicit_midpoint(system, s, h):
    """Implicit midpoint step; works for any H, including q-dependent mass."""
    q, p, retract = _unpack(system, s, h)
    q1, p1, _, _ = _implicit_midpoint(system, q, p, h, retract)
    return _pack(system, q1, p1)


def step_rk4(system, s, h):
    """Classical fourth-order Runge-Kutta step (not symplectic)."""
    q, p, retract = _unpack(system, s, h)
    return _pack(system, *_rk4(system, q, p, h, retract))


STEPPERS = {
    "symplectic-euler": step_symplectic_euler,
    "verlet": step_verlet,
    "implicit-midpoint": step_implicit_midpoint,
    "rk4-reference": step_rk4,
}


def integrate(system, s0, h, n_steps, method="implicit-midpoint", backend="auto"):
    """Integrate Hamilton's equations for ``n_steps`` steps of size ``h``.

    Catalog systems run in compiled loops (``backend="auto"``); pass
    ``backend="python"`` to force the generic numpy implementation, which is
    also what user-defined systems always use.  Step failures are re-raised
    with the failing step index attached.
    """
    if method not in METHODS:
        raise InvalidInputError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if method in ("symplectic-euler", "verlet"):
        _require_separable(system, method)
    if backend not in ("auto", "python"):
        raise InvalidInputError(f"unknown backend {backend!r}")
    n_steps = int(n_steps)
    if n_steps < 0:
        raise InvalidInputError("n_steps must be non-negative")
    q, p, retract = _unpack(system, s0, h)
    if backend == "auto" and system.kernel >= 0:
        qs, ps = _integrate_kernel(system, q, p, h, n_steps, method)
    else:
        qs, ps = _integrate_python(system, q, p, h, n_steps, method, retract)
    times = h * np.arange(n_steps + 1)
    return Trajectory(times, qs, ps, method, float(h), system.manifold)


def _integrate_kernel(system, q, p, h, n_steps, method):
    qs, ps, status, step, res = _kernels.integrate(
        METHODS.index(method), system.kernel, system.kernel_parameters,
        system.manifold.circle_mask, q.astype(float), p.astype(float), float(h), n_steps,
        MIDPOINT_TOL, MIDPOINT_MAX_ITER, MIDPOINT_STALL_LIMIT)
    if status == _kernels.NOT_CONVERGED:
        raise ConvergenceError(
            f"step {step}: implicit midpoint did not converge (residual {res:.3e})",
            residual=float(res), step=int(step))
    if status == _kernels.NON_FINITE:
        raise NumericalError(f"step {step}: state became non-finite")
    return qs, ps


def _integrate_python(system, q, p, h, n_steps, method, retract):
    qs = np.empty((n_steps + 1, q.shape[0]))
    ps = np.empty((n_steps + 1, p.shape[0]))
    qs[0], ps[0] = q, p
    simple = {"symplectic-euler": _symplectic_euler, "verlet": _verlet, "rk4-reference": _rk4}
    guess = None
    for i in range(1, n_steps + 1):
        try:
            if method == "implicit-midpoint":
                q, p, dq, dp = _implicit_midpoint(system, q, p, h, retract, guess)
                guess = (dq, dp)
            else:
                q, p = simple[method](system, q, p, h, retract)
        except ConvergenceError as exc:
            exc.step = i
            raise
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"step {i}: singular mass matrix ({exc})") from None
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise NumericalError(f"step {i}: state became non-finite")
        qs[i], ps[i] = q, p
    return qs, ps


def trajectory_energy(system, traj, backend="auto"):
    """``H`` at every sample of ``traj``."""
    if backend not in ("auto", "python"):
        raise InvalidInputError(f"unknown backend {backend!r}")
    if backend == "auto" and system.kernel >= 0:
        return _kernels.energies(system.kernel, system.kernel_parameters, traj.qs, traj.ps)
    return _hamiltonian_array(system, traj.qs, traj.ps)


def write_trajectory_csv(system, traj, path_or_file, energies=None):
    """Write ``t,q0..,p0..,H`` rows (17 significant digits) after a ``# meta:`` line."""
    if energies is None:
        energies = trajectory_energy(system, traj)
    nq, npm = traj.qs.shape[1], traj.ps.shape[1]
    header = ["t"] + [f"q{i}" for i in range(nq)] + [f"p{i}" for i in range(npm)] + ["H"]
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        fh.write(f"# meta: system={system.name} method={traj.method} h={traj.step:.17g}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for t, q, p, e in zip(traj.times, traj.qs, traj.ps, energies):
            writer.writerow([f"{x:.17g}" for x in (t, *q, *p, e)])
    finally:
        if own:
            fh.close()
