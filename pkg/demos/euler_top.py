"""
Tennis-racket theorem on the reduced Euler top
==============================================

Rotation about the axis of middle inertia is unstable: a small wobble
grows until the body flips.  The other two axes only wobble.  |Pi|^2 and
the kinetic energy stay fixed throughout.
"""
import numpy as np

from geomech import symmetry as sym

inertia = [1.0, 2.0, 3.0]
h, n = 1e-3, 50000

for label, pi0 in (("smallest", [1.0, 0.01, 0.01]),
                   ("middle", [0.01, 1.0, 0.01]),
                   ("largest", [0.01, 0.01, 1.0])):
    path = sym.integrate_euler_top(sym.BodyAngularMomentum(pi0, inertia), h, n)
    dev = np.linalg.norm(path - path[0], axis=1).max()
    cas = sym.casimir_series(path)
    en = sym.energy_series(path, inertia)
    print(f"{label:>8} axis: max deviation {dev:.3f}, "
          f"casimir drift {np.abs(cas - cas[0]).max():.1e}, energy drift {np.abs(en - en[0]).max():.1e}")

# the flip: sign changes of Pi2 on the unstable run
path = sym.integrate_euler_top(sym.BodyAngularMomentum([0.01, 1.0, 0.01], inertia), h, n)
flips = np.flatnonzero(np.diff(np.sign(path[:, 1])))
print("Pi2 changes sign at t =", np.round(flips * h, 2))
