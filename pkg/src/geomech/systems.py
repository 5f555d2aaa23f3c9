"""Catalog of finite-dimensional mechanical systems and analytic oracles.

A :class:`MechanicalSystem` is a manifold together with a mass matrix ``M(q)``
and a potential ``V(q)``; it induces ``L = v.M(q).v/2 - V(q)`` and
``H = p.M(q)^-1.p/2 + V(q)``.  The system callables receive raw chart
coordinates (numpy arrays), not :class:`~geomech.manifold.ManifoldPoint`.

Angles are measured from the downward vertical, counterclockwise positive,
and every potential is zero at the hanging/rest configuration.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Optional

import numpy as np

from . import _kernels
from . import manifold as mf
from .errors import ConfigurationError, InvalidInputError


@dataclass(frozen=True, eq=False)
class MechanicalSystem:
    name: str
    manifold: mf.Manifold
    mass_matrix: Callable[[np.ndarray], np.ndarray]
    potential: Callable[[np.ndarray], float]
    potential_gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    constant_mass: bool = False
    parameters: Mapping[str, float] = field(default_factory=dict)
    # catalog systems carry a compiled-kernel id; -1 means generic callables
    kernel: int = -1

    @cached_property
    def kernel_parameters(self):
        return np.array([self.parameters[k] for k in CATALOG[self.name]], dtype=float)

    @cached_property
    def _const_mass(self):
        # only meaningful when constant_mass is set
        M = np.array(self.mass_matrix(np.zeros(self.manifold.ncoords)), dtype=float)
        return M, np.linalg.inv(M)

    def mass(self, q):
        """Mass matrix at chart coordinates ``q`` as a 2-D array."""
        if self.constant_mass:
            return self._const_mass[0]
        return np.atleast_2d(np.asarray(self.mass_matrix(q), dtype=float))

    def inverse_mass_times(self, q, p):
        """``M(q)^-1 p`` without forming the inverse for q-dependent mass."""
        if self.constant_mass:
            return self._const_mass[1] @ p
        return np.linalg.solve(self.mass(q), p)


@dataclass(frozen=True)
class SystemConfig:
    """Name plus numeric parameters, as read from a run configuration."""

    name: str
    parameters: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "parameters", dict(self.parameters))


# name -> required parameter names
CATALOG = {
    "free-particle": ("m",),
    "harmonic-particle": ("m", "k"),
    "pendulum": ("m", "l", "g"),
    "double-pendulum": ("m1", "m2", "l1", "l2", "g"),
}
# reduced system handled by geomech.symmetry, listed for the CLI
REDUCED_CATALOG = {"euler-top": ("i1", "i2", "i3")}

_NONNEGATIVE = {"g"}


def validate_parameters(config):
    """Check presence and sign of every parameter the named system needs."""
    required = {**CATALOG, **REDUCED_CATALOG}.get(config.name)
    if required is None:
        known = ", ".join(sorted({**CATALOG, **REDUCED_CATALOG}))
        raise ConfigurationError(f"unknown system {config.name!r} (known: {known})")
    values = {}
    for key in required:
        if key not in config.parameters:
            raise ConfigurationError(f"system {config.name!r} needs parameter {key!r}", key)
        value = float(config.parameters[key])
        if not np.isfinite(value):
            raise ConfigurationError(f"parameter {key!r} must be finite", key)
        if key in _NONNEGATIVE:
            if value < 0:
                raise ConfigurationError(f"parameter {key!r} must be >= 0", key)
        elif value <= 0:
            raise ConfigurationError(f"parameter {key!r} must be > 0", key)
        values[key] = value
    extra = set(config.parameters) - set(required)
    if extra:
        key = sorted(extra)[0]
        raise ConfigurationError(f"system {config.name!r} has no parameter {key!r}", key)
    return values


def build_system(config):
    """Construct the catalog system named by ``config``.

    Raises :class:`ConfigurationError` naming the offending parameter when a
    required one is missing or out of range.
    """
    prm = validate_parameters(config)
    name = config.name
    if name == "free-particle":
        m = prm["m"]
        M = m * np.eye(3)
        return MechanicalSystem(
            name, mf.euclidean(3),
            mass_matrix=lambda q: M,
            potential=lambda q: 0.0,
            potential_gradient=lambda q: np.zeros(3),
            constant_mass=True, parameters=prm, kernel=_kernels.FREE)
    if name == "harmonic-particle":
        m, k = prm["m"], prm["k"]
        M = m * np.eye(3)
        return MechanicalSystem(
            name, mf.euclidean(3),
            mass_matrix=lambda q: M,
            potential=lambda q: 0.5 * k * float(np.dot(q, q)),
            potential_gradient=lambda q: k * np.asarray(q, dtype=float),
            constant_mass=True, parameters=prm, kernel=_kernels.HARMONIC)
    if name == "pendulum":
        m, l, g = prm["m"], prm["l"], prm["g"]
        M = np.array([[m * l * l]])
        mgl = m * g * l
        return MechanicalSystem(
            name, mf.circle(),
            mass_matrix=lambda q: M,
            potential=lambda q: mgl * (1.0 - np.cos(q[0])),
            potential_gradient=lambda q: mgl * np.sin(q),
            constant_mass=True, parameters=prm, kernel=_kernels.PENDULUM)
    if name == "double-pendulum":
        return _double_pendulum(prm)
    raise ConfigurationError(f"{name!r} is not a MechanicalSystem (see geomech.symmetry)")


def _double_pendulum(prm):
    m1, m2, l1, l2, g = (prm[k] for k in ("m1", "m2", "l1", "l2", "g"))
    a11 = (m1 + m2) * l1 * l1
    a22 = m2 * l2 * l2
    a12 = m2 * l1 * l2
    c1 = (m1 + m2) * g * l1
    c2 = m2 * g * l2

    def mass_matrix(q):
        off = a12 * np.cos(q[0] - q[1])
        return np.array([[a11, off], [off, a22]])

    def potential(q):
        return c1 * (1.0 - np.cos(q[0])) + c2 * (1.0 - np.cos(q[1]))

    def potential_gradient(q):
        return np.array([c1 * np.sin(q[0]), c2 * np.sin(q[1])])

    return MechanicalSystem(
        "double-pendulum", mf.torus(2),
        mass_matrix=mass_matrix, potential=potential,
        potential_gradient=potential_gradient,
        constant_mass=False, parameters=prm, kernel=_kernels.DOUBLE)


def pendulum_small_period(m, l, g):
    """Small-oscillation period ``2 pi sqrt(l/g)``; the mass drops out."""
    if not (l > 0 and g > 0):
        raise InvalidInputError("pendulum period needs l > 0 and g > 0")
    return 2.0 * np.pi * np.sqrt(l / g)


def harmonic_reference(m, k, q0, p0, t):
    """Exact harmonic-oscillator state at time ``t`` as a PhaseState.

    ``q(t) = q0 cos(wt) + p0/(m w) sin(wt)``, ``p = m dq/dt``, ``w = sqrt(k/m)``.
    """
    from .hamiltonian import PhaseState

    if not (m > 0 and k > 0):
        raise InvalidInputError("harmonic_reference needs m > 0 and k > 0")
    q0 = np.asarray(q0, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    w = np.sqrt(k / m)
    c, s = np.cos(w * t), np.sin(w * t)
    q = q0 * c + p0 / (m * w) * s
    p = p0 * c - q0 * m * w * s
    return PhaseState.from_arrays(mf.euclidean(q0.size), q, p)


def sample_points(manifold, n, rng):
    """``n`` random canonical coordinate vectors for property sweeps."""
    out = np.empty((n, manifold.ncoords))
    for kind, c0, c1, _, _ in manifold._leaves:
        if kind == mf.CIRCLE:
            out[:, c0:c1] = rng.uniform(0.0, mf.TWO_PI, size=(n, c1 - c0))
        elif kind == mf.SO3:
            out[:, c0:c1] = rng.normal(size=(n, 4))
        else:
            out[:, c0:c1] = rng.normal(size=(n, c1 - c0))
    return mf.canonical_coords(manifold, out)
