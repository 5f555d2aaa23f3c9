"""Continuous symmetries, their Noether charges, and the reduced Euler top.

Group actions act on phase space by cotangent lift: translations shift ``q``
and leave ``p`` alone, rotations turn both ``q`` and ``p``, and a phase
rotation shifts one circle angle.  :func:`momentum_map` gives the conserved
charge of each action, and :func:`noether_drift` measures how well a
trajectory keeps it.

The Euler top is handled in reduced body-frame variables ``Pi`` with
``dPi/dt = Pi x Omega``, ``Omega_k = Pi_k / I_k``.  ``|Pi|^2`` is a Casimir
and ``sum Pi_k^2 / (2 I_k)`` the reduced energy.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from . import manifold as mf
from .errors import ConvergenceError, InvalidInputError
from .hamiltonian import (MIDPOINT_MAX_ITER, MIDPOINT_STALL_LIMIT, MIDPOINT_TOL,
                          PhaseState, evaluate_hamiltonian)

TRANSLATION = "translation"
ROTATION = "rotation"
PHASE_ROTATION = "phase-rotation"

INVARIANCE_TOL = 1e-10
INVARIANCE_DELTAS = (1e-3, 1e-2, 1e-1)


@dataclass(frozen=True, eq=False)
class GroupAction:
    """A one-parameter symmetry acting on phase states.

    ``vector`` is the translation direction or rotation axis (unit length);
    ``index`` is the circle coordinate shifted by a phase rotation.
    """

    kind: str
    vector: np.ndarray = None
    index: int = 0

    def __post_init__(self):
        if self.kind in (TRANSLATION, ROTATION):
            v = np.array(self.vector, dtype=float).reshape(-1)
            if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise InvalidInputError(f"{self.kind} needs a unit 3-vector")
            v.flags.writeable = False
            object.__setattr__(self, "vector", v)
        elif self.kind != PHASE_ROTATION:
            raise InvalidInputError(f"unknown group action {self.kind!r}")

    def __repr__(self):
        if self.kind == PHASE_ROTATION:
            return f"GroupAction(phase-rotation, index={self.index})"
        return f"GroupAction({self.kind}, {self.vector.tolist()})"


def translation(direction):
    d = np.asarray(direction, dtype=float)
    return GroupAction(TRANSLATION, d / np.linalg.norm(d))


def rotation(axis):
    a = np.asarray(axis, dtype=float)
    return GroupAction(ROTATION, a / np.linalg.norm(a))


def phase_rotation(index=0):
    return GroupAction(PHASE_ROTATION, index=int(index))


def _rotation_matrix(axis, angle):
    k = np.array([[0.0, -axis[2], axis[1]],
                  [axis[2], 0.0, -axis[0]],
                  [-axis[1], axis[0], 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def _check_compatible(action, manifold):
    if action.kind in (TRANSLATION, ROTATION):
        if manifold != mf.euclidean(3):
            raise InvalidInputError(f"{action.kind} acts on euclidean:3, not {manifold}")
    else:
        leaves = manifold._leaves
        ok = any(kind == mf.CIRCLE and t0 == action.index for kind, _, _, t0, _ in leaves)
        if not ok:
            raise InvalidInputError(
                f"coordinate {action.index} of {manifold} is not a circle")


def apply_action(action, s, delta):
    """The state ``s`` moved by the group element with parameter ``delta``."""
    man = s.manifold
    _check_compatible(action, man)
    q = s.q.coords
    p = s.p.components
    if action.kind == TRANSLATION:
        q1, p1 = q + delta * action.vector, p
    elif action.kind == ROTATION:
        R = _rotation_matrix(action.vector, delta)
        q1, p1 = R @ q, R @ p
    else:
        u = np.zeros(man.dim)
        u[action.index] = delta
        q1, p1 = mf.retract_coords(man, q, u), p
    return PhaseState.from_arrays(man, q1, p1)


def _charge(action, qs, ps):
    if action.kind == TRANSLATION:
        return (ps @ action.vector)[..., None]
    if action.kind == ROTATION:
        return np.cross(qs, ps)
    return ps[..., action.index:action.index + 1]


def momentum_map(action, s):
    """Noether charge of ``action`` at ``s``.

    Translation gives ``p.d``, any rotation gives the full angular momentum
    ``q x p``, a phase rotation gives the conjugate momentum ``p_i``.
    """
    _check_compatible(action, s.manifold)
    return _charge(action, s.q.coords, s.p.components)


def check_invariance(system, action, s, delta):
    """Relative change ``|H(g s) - H(s)| / (1 + |H(s)|)`` under the action."""
    if not delta > 0:
        raise InvalidInputError("delta must be positive")
    h0 = evaluate_hamiltonian(system, s)
    h1 = evaluate_hamiltonian(system, apply_action(action, s, delta))
    return abs(h1 - h0) / (1.0 + abs(h0))


def is_invariant(system, action, n_states=100, seed=0):
    """True when :func:`check_invariance` stays below 1e-10 on random states."""
    from .systems import sample_points

    _check_compatible(action, system.manifold)
    rng = np.random.default_rng(seed)
    qs = sample_points(system.manifold, n_states, rng)
    ps = rng.normal(size=(n_states, system.manifold.dim))
    for q, p in zip(qs, ps):
        s = PhaseState.from_arrays(system.manifold, q, p)
        for delta in INVARIANCE_DELTAS:
            if check_invariance(system, action, s, delta) > INVARIANCE_TOL:
                return False
    return True


def noether_drift(system, action, traj):
    """Largest deviation ``max_t |mu(s_t) - mu(s_0)|_inf`` along ``traj``."""
    _check_compatible(action, system.manifold)
    mu = _charge(action, traj.qs, traj.ps)
    return float(np.max(np.abs(mu - mu[0])))


# --------------------------------------------------------------------------
# reduced Euler top

@dataclass(frozen=True, eq=False)
class BodyAngularMomentum:
    """Body-frame angular momentum ``Pi`` and principal moments of inertia."""

    Pi: np.ndarray
    inertia: np.ndarray

    def __post_init__(self):
        pi = np.array(self.Pi, dtype=float).reshape(-1)
        inertia = np.array(self.inertia, dtype=float).reshape(-1)
        if pi.shape != (3,) or inertia.shape != (3,):
            raise InvalidInputError("Pi and inertia must be 3-vectors")
        if not np.all(inertia > 0):
            raise InvalidInputError("principal moments of inertia must be positive")
        pi.flags.writeable = False
        inertia.flags.writeable = False
        object.__setattr__(self, "Pi", pi)
        object.__setattr__(self, "inertia", inertia)


def euler_top_rhs(b):
    return _kernels.euler_top_rhs(np.asarray(b.Pi, dtype=float), b.inertia)


def casimir(b):
    pi = b.Pi
    return float(pi[0] ** 2 + pi[1] ** 2 + pi[2] ** 2)


def rotational_energy(b):
    pi, i = b.Pi, b.inertia
    return float(0.5 * (pi[0] ** 2 / i[0] + pi[1] ** 2 / i[1] + pi[2] ** 2 / i[2]))


def integrate_euler_top(b0, h, n):
    """Implicit-midpoint trajectory of the reduced top, shape ``(n+1, 3)``."""
    if not h > 0:
        raise InvalidInputError("h must be positive")
    n = int(n)
    if n < 0:
        raise InvalidInputError("n must be non-negative")
    path, status, step, res = _kernels.euler_top_integrate(
        np.array(b0.Pi), np.array(b0.inertia), float(h), n,
        MIDPOINT_TOL, MIDPOINT_MAX_ITER, MIDPOINT_STALL_LIMIT)
    if status != _kernels.OK:
        raise ConvergenceError(
            f"step {step}: Euler top midpoint did not converge (residual {res:.3e})",
            residual=float(res), step=int(step))
    return path


def casimir_series(path):
    return np.sum(path**2, axis=1)


def energy_series(path, inertia):
    return 0.5 * np.sum(path**2 / np.asarray(inertia), axis=1)


def write_reduced_csv(path, inertia, h, path_or_file):
    """Write ``t,Pi1,Pi2,Pi3,casimir,energy`` rows with 17 significant digits."""
    cas = casimir_series(path)
    en = energy_series(path, inertia)
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "Pi1", "Pi2", "Pi3", "casimir", "energy"])
        for i, (row, c, e) in enumerate(zip(path, cas, en)):
            writer.writerow([f"{x:.17g}" for x in (i * h, *row, c, e)])
    finally:
        if own:
            fh.close()
