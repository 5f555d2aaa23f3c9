"""Configuration manifolds as chart-coordinate spaces.

A :class:`Manifold` is one of ``Euclidean(n)``, ``Circle``, ``SO(3)`` or a
product of those.  Points carry chart coordinates: plain reals on Euclidean
factors, an angle in ``[0, 2*pi)`` on circles, and a unit quaternion
``(w, x, y, z)`` on rotation factors.  Tangent and cotangent components always
have length ``dim``; on a rotation factor they are body-frame rotation vectors.

Two layers are exposed.  The value types (:class:`ManifoldPoint`,
:class:`TangentValue`, :class:`CotangentValue`) and the operations on them
(:func:`canonicalize`, :func:`chart_displacement`, :func:`pair`) are the public
surface.  The ``*_coords`` helpers do the same work on bare arrays (with
broadcasting over leading axes) and are what the integrators use in their
inner loops.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidInputError

TWO_PI = 2.0 * np.pi

EUCLIDEAN = "euclidean"
CIRCLE = "circle"
SO3 = "so3"
PRODUCT = "product"


@dataclass(frozen=True)
class Manifold:
    """A configuration space described by its chart.

    Build instances with :func:`euclidean`, :func:`circle`, :func:`so3` and
    :func:`product` rather than calling the constructor directly.
    """

    kind: str
    n: int = 0
    factors: tuple = ()

    def __post_init__(self):
        if self.kind not in (EUCLIDEAN, CIRCLE, SO3, PRODUCT):
            raise InvalidInputError(f"unknown manifold kind {self.kind!r}")
        if self.kind == EUCLIDEAN and self.n < 1:
            raise InvalidInputError("euclidean dimension must be at least 1")
        if self.kind == PRODUCT:
            if len(self.factors) < 2:
                raise InvalidInputError("a product needs at least two factors")
            if not all(isinstance(f, Manifold) for f in self.factors):
                raise InvalidInputError("product factors must be Manifold instances")

    @property
    def dim(self):
        """Chart dimension, the length of tangent and cotangent vectors."""
        return self._leaves[-1][4]

    @property
    def ncoords(self):
        """Length of the stored coordinate vector (4 per rotation factor)."""
        return self._leaves[-1][2]

    @cached_property
    def _leaves(self):
        # (kind, coord_start, coord_stop, tan_start, tan_stop) per atomic factor
        leaves = []
        c = t = 0

        def walk(m):
            nonlocal c, t
            if m.kind == PRODUCT:
                for f in m.factors:
                    walk(f)
                return
            nc, nt = {EUCLIDEAN: (m.n, m.n), CIRCLE: (1, 1), SO3: (4, 3)}[m.kind]
            leaves.append((m.kind, c, c + nc, t, t + nt))
            c += nc
            t += nt

        walk(self)
        return tuple(leaves)

    @cached_property
    def is_flat(self):
        """True when no rotation factor is present (coords == tangent layout)."""
        return all(leaf[0] != SO3 for leaf in self._leaves)

    @cached_property
    def circle_mask(self):
        """Boolean mask over tangent components that live on a circle."""
        mask = np.zeros(self.dim, dtype=bool)
        for kind, _, _, t0, t1 in self._leaves:
            if kind == CIRCLE:
                mask[t0:t1] = True
        mask.flags.writeable = False
        return mask

    @cached_property
    def _circle_index(self):
        return np.flatnonzero(self.circle_mask)

    def __str__(self):
        if self.kind == EUCLIDEAN:
            return f"euclidean:{self.n}"
        if self.kind == PRODUCT:
            return "product(" + ",".join(str(f) for f in self.factors) + ")"
        return self.kind


def euclidean(n):
    return Manifold(EUCLIDEAN, n=int(n))


def circle():
    return Manifold(CIRCLE)


def so3():
    return Manifold(SO3)


def product(*factors):
    return Manifold(PRODUCT, factors=tuple(factors))


def torus(n=2):
    """The n-torus, built as a product of circles."""
    return product(*[circle() for _ in range(n)])


def parse_manifold(text):
    """Parse the config-file serialization produced by ``str(manifold)``.

    >>> str(parse_manifold("product(circle,product(euclidean:2,so3))"))
    'product(circle,product(euclidean:2,so3))'
    """
    text = text.strip()
    if text == CIRCLE:
        return circle()
    if text == SO3:
        return so3()
    if text.startswith("euclidean:"):
        try:
            return euclidean(int(text.split(":", 1)[1]))
        except ValueError:
            raise InvalidInputError(f"bad euclidean dimension in {text!r}") from None
    if text.startswith("product(") and text.endswith(")"):
        body = text[len("product("):-1]
        parts, depth, start = [], 0, 0
        for i, ch in enumerate(body):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == "," and depth == 0:
                parts.append(body[start:i])
                start = i + 1
        parts.append(body[start:])
        return product(*[parse_manifold(p) for p in parts])
    raise InvalidInputError(f"cannot parse manifold {text!r}")


# --------------------------------------------------------------------------
# quaternion helpers, scalar-first (w, x, y, z)

def _quat_mul(a, b):
    aw, ax, ay, az = np.moveaxis(a, -1, 0)
    bw, bx, by, bz = np.moveaxis(b, -1, 0)
    return np.stack([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ], axis=-1)


def _quat_conj(a):
    return a * np.array([1.0, -1.0, -1.0, -1.0])


def _quat_canonical(q):
    norm = np.linalg.norm(q, axis=-1, keepdims=True)
    # leave already-unit quaternions bitwise alone so canonicalization is idempotent
    q = np.where(np.abs(norm - 1.0) <= 1e-15, q, q / norm)
    # first nonzero component positive
    nz = q != 0.0
    first = np.argmax(nz, axis=-1)
    lead = np.take_along_axis(q, first[..., None], axis=-1)
    return np.where(lead < 0.0, -q, q)


def quat_exp(u):
    """Unit quaternion of the rotation vector ``u`` (axis times angle)."""
    u = np.asarray(u, dtype=float)
    angle = np.linalg.norm(u, axis=-1, keepdims=True)
    half = 0.5 * angle
    # sin(half)/angle, with its limit 1/2 at zero angle
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(angle > 1e-8, np.sin(half) / angle, 0.5 - angle**2 / 48.0)
    return np.concatenate([np.cos(half), scale * u], axis=-1)


def quat_log(q):
    """Rotation vector of the unit quaternion ``q``, angle in ``[0, pi]``."""
    q = np.asarray(q, dtype=float)
    q = np.where(q[..., :1] < 0.0, -q, q)
    w = q[..., :1]
    v = q[..., 1:]
    s = np.linalg.norm(v, axis=-1, keepdims=True)
    angle = 2.0 * np.arctan2(s, w)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(s > 1e-12, angle / s, 2.0 / w)
    return scale * v


def quat_to_matrix(q):
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


# --------------------------------------------------------------------------
# array-level chart operations (coordinates on the last axis)

def _wrap_angle(x):
    x = np.mod(x, TWO_PI)
    # mod can round up to exactly 2*pi for tiny negative inputs
    return np.where(x >= TWO_PI, 0.0, x)


def canonical_coords(manifold, coords):
    """Canonical chart coordinates for ``coords`` (angles wrapped, quaternions normalized)."""
    c = np.array(coords, dtype=float)
    if c.shape[-1] != manifold.ncoords:
        raise InvalidInputError(
            f"expected {manifold.ncoords} coordinates for {manifold}, got {c.shape[-1]}")
    if not np.all(np.isfinite(c)):
        raise InvalidInputError("coordinates must be finite")
    if manifold.is_flat:
        idx = manifold._circle_index
        if idx.size:
            c[..., idx] = _wrap_angle(c[..., idx])
        return c
    for kind, c0, c1, _, _ in manifold._leaves:
        if kind == CIRCLE:
            c[..., c0:c1] = _wrap_angle(c[..., c0:c1])
        elif kind == SO3:
            if np.any(np.linalg.norm(c[..., c0:c1], axis=-1) == 0.0):
                raise InvalidInputError("zero quaternion is not a rotation")
            c[..., c0:c1] = _quat_canonical(c[..., c0:c1])
    return c


def retract_coords(manifold, coords, u):
    """Move ``coords`` by the tangent vector ``u`` and canonicalize (``a ⊕ u``)."""
    if manifold.is_flat:
        return canonical_coords(manifold, np.asarray(coords, dtype=float) + u)
    coords = np.asarray(coords, dtype=float)
    u = np.asarray(u, dtype=float)
    shape = np.broadcast_shapes(coords.shape[:-1], u.shape[:-1]) + (manifold.ncoords,)
    out = np.empty(shape)
    for kind, c0, c1, t0, t1 in manifold._leaves:
        if kind == SO3:
            out[..., c0:c1] = _quat_mul(coords[..., c0:c1], quat_exp(u[..., t0:t1]))
        else:
            out[..., c0:c1] = coords[..., c0:c1] + u[..., t0:t1]
    return canonical_coords(manifold, out)


def displacement_coords(manifold, a, b):
    """Shortest chart difference from ``a`` to ``b`` (circle parts in ``(-pi, pi]``)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if manifold.is_flat:
        d = b - a
        idx = manifold._circle_index
        if idx.size:
            w = np.mod(d[..., idx], TWO_PI)
            d[..., idx] = np.where(w > np.pi, w - TWO_PI, w)
        return d
    shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1]) + (manifold.dim,)
    d = np.empty(shape)
    for kind, c0, c1, t0, t1 in manifold._leaves:
        if kind == SO3:
            rel = _quat_mul(_quat_conj(a[..., c0:c1]), b[..., c0:c1])
            d[..., t0:t1] = quat_log(rel)
        else:
            x = b[..., c0:c1] - a[..., c0:c1]
            if kind == CIRCLE:
                x = np.mod(x, TWO_PI)
                x = np.where(x > np.pi, x - TWO_PI, x)
            d[..., t0:t1] = x
    return d


def retractor(manifold):
    """A specialized ``(coords, u) -> coords ⊕ u`` for inner loops.

    Skips the validation done by :func:`retract_coords`; callers check
    finiteness themselves.
    """
    if manifold.is_flat:
        idx = manifold._circle_index
        if idx.size == 0:
            return lambda a, u: a + u
        if idx.size == manifold.dim:
            return lambda a, u: _wrap_angle(a + u)

        def flat(a, u):
            c = a + u
            c[idx] = _wrap_angle(c[idx])
            return c

        return flat
    return lambda a, u: retract_coords(manifold, a, u)


def midpoint_coords(manifold, a, b):
    """Chart midpoint ``a ⊕ d/2`` with ``d`` the shortest displacement a→b."""
    return retract_coords(manifold, a, 0.5 * displacement_coords(manifold, a, b))


# --------------------------------------------------------------------------
# value types

def _frozen_array(x, length, what):
    arr = np.array(x, dtype=float).reshape(-1)
    if arr.shape[0] != length:
        raise InvalidInputError(f"{what} must have length {length}, got {arr.shape[0]}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ManifoldPoint:
    """Chart coordinates of a configuration ``q`` on ``manifold``."""

    manifold: Manifold
    coords: np.ndarray = field(repr=True)

    def __post_init__(self):
        object.__setattr__(self, "coords",
                           _frozen_array(self.coords, self.manifold.ncoords, "coords"))

    def __eq__(self, other):
        if not isinstance(other, ManifoldPoint):
            return NotImplemented
        return self.manifold == other.manifold and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash((self.manifold, self.coords.tobytes()))


@dataclass(frozen=True, eq=False)
class TangentValue:
    """A velocity ``v`` in the tangent space at ``base``."""

    base: ManifoldPoint
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "components",
                           _frozen_array(self.components, self.base.manifold.dim, "components"))


@dataclass(frozen=True, eq=False)
class CotangentValue:
    """A momentum covector ``p`` in the cotangent space at ``base``."""

    base: ManifoldPoint
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "components",
                           _frozen_array(self.components, self.base.manifold.dim, "components"))


def point(manifold, coords):
    """Canonical :class:`ManifoldPoint` from raw coordinates."""
    return ManifoldPoint(manifold, canonical_coords(manifold, coords))


def canonicalize(p):
    """Return the canonical representative of the configuration ``p``.

    Angles are reduced to ``[0, 2*pi)``; quaternions are normalized with the
    first nonzero component made positive.  Raises :class:`InvalidInputError`
    on non-finite coordinates.
    """
    return ManifoldPoint(p.manifold, canonical_coords(p.manifold, p.coords))


def _check_same_manifold(a, b):
    if a.manifold != b.manifold:
        raise InvalidInputError(f"manifold mismatch: {a.manifold} vs {b.manifold}")


def chart_displacement(a, b):
    """Shortest-representative chart difference ``b ⊖ a``.

    Circle components land in ``(-pi, pi]`` (an exact half turn gives
    ``+pi``), Euclidean components are ``b - a`` and rotation components are
    the rotation vector of ``a^-1 b``.
    """
    _check_same_manifold(a, b)
    return displacement_coords(a.manifold, a.coords, b.coords)


def retract(p, u):
    """The point ``p ⊕ u``: chart addition followed by canonicalization."""
    u = np.asarray(u, dtype=float)
    if u.shape != (p.manifold.dim,):
        raise InvalidInputError(f"displacement must have length {p.manifold.dim}")
    return ManifoldPoint(p.manifold, retract_coords(p.manifold, p.coords, u))


def chart_midpoint(a, b):
    _check_same_manifold(a, b)
    return ManifoldPoint(a.manifold, midpoint_coords(a.manifold, a.coords, b.coords))


def pair(p, v):
    """Natural pairing ``p(v) = p . v`` of a covector with a vector at the same base."""
    if p.base != v.base:
        raise InvalidInputError("covector and vector are based at different points")
    return float(np.dot(p.components, v.components))
