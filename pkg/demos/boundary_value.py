"""
Stationary paths between two configurations
===========================================

solve_bvp finds the discrete path of stationary action joining two
points.  For the unit oscillator the answer from 0 to sin(T) is sin(t),
and the error falls by four each time the node count doubles.  Past
T = pi the stationary path stops being unique and the solver says so.
"""
import math

import numpy as np

from geomech import ConjugatePointError, SystemConfig, build_system, solve_bvp
from geomech import manifold as mf

ho = build_system(SystemConfig("harmonic-particle", {"m": 1.0, "k": 1.0}))
T = 1.5
qa = mf.point(ho.manifold, [0.0, 0.0, 0.0])
qb = mf.point(ho.manifold, [math.sin(T), 0.0, 0.0])

previous = None
for n in (25, 50, 100, 200):
    path = solve_bvp(ho, qa, qb, T, n)
    err = np.abs(path.coords[:, 0] - np.sin(path.times)).max()
    ratio = "" if previous is None else f"  ratio {previous / err:.3f}"
    print(f"N = {n:3d}  max error {err:.3e}{ratio}")
    previous = err

# with N segments the discrete oscillator has a conjugate point at T = 2N sin(pi / 2N)
n = 10
try:
    solve_bvp(ho, qa, mf.point(ho.manifold, [1.0, 0.0, 0.0]), 2 * n * math.sin(math.pi / (2 * n)), n)
except ConjugatePointError as exc:
    print("conjugate point:", exc)

# a pendulum path that winds once around the circle
pend = build_system(SystemConfig("pendulum", {"m": 1.0, "l": 1.0, "g": 9.81}))
path = solve_bvp(pend, mf.point(pend.manifold, [0.2]), mf.point(pend.manifold, [6.0]), 0.5, 40)
print("pendulum path crosses the seam:", np.round(path.coords[::8, 0], 3))
