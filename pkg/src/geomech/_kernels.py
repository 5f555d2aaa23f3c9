"""Compiled inner loops for the catalog systems and the reduced Euler top.

Everything here is written in the numba-compatible subset of Python and is
jitted when numba is importable; without numba the same functions run
interpreted (slowly but identically).  Catalog systems are selected by an
integer kind and a flat parameter array so that one compiled loop serves all
of them:

    FREE      [m]
    HARMONIC  [m, k]
    PENDULUM  [m, l, g]
    DOUBLE    [m1, m2, l1, l2, g]
"""
import math

import numpy as np

try:
    import numba

    jit = numba.njit(cache=True)
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    def jit(f):
        return f

    HAVE_NUMBA = False

TWO_PI = 2.0 * math.pi
FD_STEP = 1e-5

FREE, HARMONIC, PENDULUM, DOUBLE = 0, 1, 2, 3
SYMPLECTIC_EULER, VERLET, MIDPOINT, RK4 = 0, 1, 2, 3

OK, NOT_CONVERGED, NON_FINITE = 0, 1, 2


@jit
def wrap(q, mask):
    out = q.copy()
    for i in range(q.shape[0]):
        if mask[i]:
            x = q[i] % TWO_PI
            if x >= TWO_PI:
                x = 0.0
            out[i] = x
    return out


@jit
def maxabs(x):
    m = 0.0
    for v in x:
        a = abs(v)
        if a > m or a != a:
            m = a
    return m


@jit
def potential(kind, q, prm):
    if kind == FREE:
        return 0.0
    if kind == HARMONIC:
        return 0.5 * prm[1] * np.dot(q, q)
    if kind == PENDULUM:
        return prm[0] * prm[2] * prm[1] * (1.0 - math.cos(q[0]))
    m1, m2, l1, l2, g = prm[0], prm[1], prm[2], prm[3], prm[4]
    return (m1 + m2) * g * l1 * (1.0 - math.cos(q[0])) + m2 * g * l2 * (1.0 - math.cos(q[1]))


@jit
def potential_gradient(kind, q, prm):
    out = np.zeros(q.shape[0])
    if kind == HARMONIC:
        out[:] = prm[1] * q
    elif kind == PENDULUM:
        out[0] = prm[0] * prm[2] * prm[1] * math.sin(q[0])
    elif kind == DOUBLE:
        m1, m2, l1, l2, g = prm[0], prm[1], prm[2], prm[3], prm[4]
        out[0] = (m1 + m2) * g * l1 * math.sin(q[0])
        out[1] = m2 * g * l2 * math.sin(q[1])
    return out


@jit
def inverse_mass_times(kind, q, p, prm):
    if kind == FREE or kind == HARMONIC:
        return p / prm[0]
    if kind == PENDULUM:
        return p / (prm[0] * prm[1] * prm[1])
    m1, m2, l1, l2 = prm[0], prm[1], prm[2], prm[3]
    a = (m1 + m2) * l1 * l1
    b = m2 * l1 * l2 * math.cos(q[0] - q[1])
    d = m2 * l2 * l2
    det = a * d - b * b
    out = np.empty(2)
    out[0] = (d * p[0] - b * p[1]) / det
    out[1] = (a * p[1] - b * p[0]) / det
    return out


@jit
def hamiltonian(kind, q, p, prm):
    return 0.5 * np.dot(p, inverse_mass_times(kind, q, p, prm)) + potential(kind, q, prm)


@jit
def grad_q(kind, q, p, prm, mask):
    if kind != DOUBLE:
        return potential_gradient(kind, q, prm)
    # q-dependent mass: central differences of H at fixed p, wrapped perturbations
    n = q.shape[0]
    delta = FD_STEP * (1.0 + maxabs(q))
    out = np.empty(n)
    for j in range(n):
        e = np.zeros(n)
        e[j] = delta
        hp = hamiltonian(kind, wrap(q + e, mask), p, prm)
        hm = hamiltonian(kind, wrap(q - e, mask), p, prm)
        out[j] = (hp - hm) / (2.0 * delta)
    return out


@jit
def _midpoint_map(kind, prm, mask, q, p, h, dq, dp):
    qm = wrap(q + 0.5 * dq, mask)
    pm = p + 0.5 * dp
    return h * inverse_mass_times(kind, qm, pm, prm), -h * grad_q(kind, qm, pm, prm, mask)


@jit
def midpoint_step(kind, prm, mask, q, p, h, dq, dp, tol, max_iter, stall_limit):
    """Returns (q1, p1, dq, dp, converged, residual)."""
    n = q.shape[0]
    floor = 1e-15 * (1.0 + maxabs(p) + maxabs(q))
    prev = np.inf
    stalls = 0
    for _ in range(max_iter):
        gq, gp = _midpoint_map(kind, prm, mask, q, p, h, dq, dp)
        res = max(maxabs(dq - gq), maxabs(dp - gp))
        if not np.isfinite(res):
            break
        done = res <= tol and (res <= floor or res > 0.25 * prev)
        dq = gq
        dp = gp
        if done:
            return wrap(q + dq, mask), p + dp, dq, dp, True, res
        if res >= prev:
            stalls += 1
            if stalls >= stall_limit:
                break
        prev = res

    # Newton fallback with a finite-difference Jacobian
    gq, gp = _midpoint_map(kind, prm, mask, q, p, h, np.zeros(n), np.zeros(n))
    d = np.concatenate((gq, gp))
    res = np.inf
    for _ in range(max_iter):
        a, b = _midpoint_map(kind, prm, mask, q, p, h, d[:n].copy(), d[n:].copy())
        r = d - np.concatenate((a, b))
        res = maxabs(r)
        if not np.isfinite(res):
            break
        if res <= tol:
            return wrap(q + d[:n], mask), p + d[n:], d[:n].copy(), d[n:].copy(), True, res
        eps = 1e-7 * (1.0 + maxabs(d))
        J = np.empty((2 * n, 2 * n))
        for j in range(2 * n):
            e = np.zeros(2 * n)
            e[j] = eps
            dpl = d + e
            dmi = d - e
            a1, b1 = _midpoint_map(kind, prm, mask, q, p, h, dpl[:n].copy(), dpl[n:].copy())
            a2, b2 = _midpoint_map(kind, prm, mask, q, p, h, dmi[:n].copy(), dmi[n:].copy())
            rp = dpl - np.concatenate((a1, b1))
            rm = dmi - np.concatenate((a2, b2))
            J[:, j] = (rp - rm) / (2.0 * eps)
        if abs(np.linalg.det(J)) == 0.0:
            break
        d = d - np.linalg.solve(J, r)
    return q, p, dq, dp, False, res


@jit
def _vector_field(kind, prm, mask, q, p):
    return inverse_mass_times(kind, q, p, prm), -grad_q(kind, q, p, prm, mask)


@jit
def integrate(method, kind, prm, mask, q0, p0, h, n_steps, tol, max_iter, stall_limit):
    """Returns (qs, ps, status, failing_step, residual); rows past a failure are garbage."""
    d = q0.shape[0]
    qs = np.empty((n_steps + 1, d))
    ps = np.empty((n_steps + 1, d))
    qs[0] = q0
    ps[0] = p0
    q = q0.copy()
    p = p0.copy()
    dq = np.zeros(d)
    dp = np.zeros(d)
    if method == MIDPOINT:
        dq, dp = _midpoint_map(kind, prm, mask, q, p, h, dq, dp)
    for i in range(1, n_steps + 1):
        if method == SYMPLECTIC_EULER:
            p = p - h * potential_gradient(kind, q, prm)
            q = wrap(q + h * inverse_mass_times(kind, q, p, prm), mask)
        elif method == VERLET:
            p = p - 0.5 * h * potential_gradient(kind, q, prm)
            q = wrap(q + h * inverse_mass_times(kind, q, p, prm), mask)
            p = p - 0.5 * h * potential_gradient(kind, q, prm)
        elif method == MIDPOINT:
            q1, p1, dq, dp, ok, res = midpoint_step(
                kind, prm, mask, q, p, h, dq, dp, tol, max_iter, stall_limit)
            if not ok:
                return qs, ps, NOT_CONVERGED, i, res
            q = q1
            p = p1
        else:
            k1q, k1p = _vector_field(kind, prm, mask, q, p)
            k2q, k2p = _vector_field(kind, prm, mask, wrap(q + 0.5 * h * k1q, mask), p + 0.5 * h * k1p)
            k3q, k3p = _vector_field(kind, prm, mask, wrap(q + 0.5 * h * k2q, mask), p + 0.5 * h * k2p)
            k4q, k4p = _vector_field(kind, prm, mask, wrap(q + h * k3q, mask), p + h * k3p)
            q = wrap(q + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q), mask)
            p = p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            return qs, ps, NON_FINITE, i, np.inf
        qs[i] = q
        ps[i] = p
    return qs, ps, OK, -1, 0.0


@jit
def energies(kind, prm, qs, ps):
    out = np.empty(qs.shape[0])
    for i in range(qs.shape[0]):
        out[i] = hamiltonian(kind, qs[i], ps[i], prm)
    return out


# --------------------------------------------------------------------------
# reduced Euler top, Pi' = Pi x Omega with Omega_k = Pi_k / I_k

@jit
def euler_top_rhs(pi, inertia):
    w0 = pi[0] / inertia[0]
    w1 = pi[1] / inertia[1]
    w2 = pi[2] / inertia[2]
    out = np.empty(3)
    out[0] = pi[1] * w2 - pi[2] * w1
    out[1] = pi[2] * w0 - pi[0] * w2
    out[2] = pi[0] * w1 - pi[1] * w0
    return out


@jit
def _euler_top_jacobian(pi, inertia):
    # d(Pi x Omega)/dPi = -[Omega]x + [Pi]x diag(1/I)
    w = pi / inertia
    J = np.zeros((3, 3))
    J[0, 1] = w[2] - pi[2] / inertia[1]
    J[0, 2] = -w[1] + pi[1] / inertia[2]
    J[1, 0] = -w[2] + pi[2] / inertia[0]
    J[1, 2] = w[0] - pi[0] / inertia[2]
    J[2, 0] = w[1] - pi[1] / inertia[0]
    J[2, 1] = -w[0] + pi[0] / inertia[1]
    return J


@jit
def euler_top_integrate(pi0, inertia, h, n_steps, tol, max_iter, stall_limit):
    """Implicit midpoint on the reduced equations; returns (path, status, step, residual)."""
    out = np.empty((n_steps + 1, 3))
    out[0] = pi0
    pi = pi0.copy()
    d = h * euler_top_rhs(pi, inertia)
    for i in range(1, n_steps + 1):
        floor = 1e-15 * (1.0 + maxabs(pi))
        prev = np.inf
        stalls = 0
        converged = False
        res = np.inf
        for _ in range(max_iter):
            g = h * euler_top_rhs(pi + 0.5 * d, inertia)
            res = maxabs(d - g)
            if not np.isfinite(res):
                break
            done = res <= tol and (res <= floor or res > 0.25 * prev)
            d = g
            if done:
                converged = True
                break
            if res >= prev:
                stalls += 1
                if stalls >= stall_limit:
                    break
            prev = res
        if not converged:
            d = h * euler_top_rhs(pi, inertia)
            for _ in range(max_iter):
                r = d - h * euler_top_rhs(pi + 0.5 * d, inertia)
                res = maxabs(r)
                if not np.isfinite(res):
                    break
                if res <= tol:
                    converged = True
                    break
                J = np.eye(3) - 0.5 * h * _euler_top_jacobian(pi + 0.5 * d, inertia)
                d = d - np.linalg.solve(J, r)
        if not converged:
            return out, NOT_CONVERGED, i, res
        pi = pi + d
        out[i] = pi
    return out, OK, -1, 0.0
