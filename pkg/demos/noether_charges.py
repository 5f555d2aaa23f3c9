"""
Which momenta are conserved?
============================

A charge is conserved exactly when the Hamiltonian is invariant under the
matching symmetry.  is_invariant checks this numerically and noether_drift
measures the charge along a trajectory.
"""
import numpy as np

from geomech import SystemConfig, build_system, integrate, phase_state
from geomech import symmetry as sym

systems = {
    "free-particle": build_system(SystemConfig("free-particle", {"m": 1.0})),
    "harmonic-particle": build_system(SystemConfig("harmonic-particle", {"m": 1.0, "k": 1.0})),
    "pendulum": build_system(SystemConfig("pendulum", {"m": 1.0, "l": 1.0, "g": 9.81})),
    "pendulum, g = 0": build_system(SystemConfig("pendulum", {"m": 1.0, "l": 1.0, "g": 0.0})),
}
starts = {
    "free-particle": ([0.1, 0.2, 0.3], [1.0, -0.5, 0.25]),
    "harmonic-particle": ([1.0, 0.2, -0.3], [0.1, 0.8, 0.4]),
    "pendulum": ([0.5], [0.0]),
    "pendulum, g = 0": ([0.5], [1.0]),
}
actions = {
    "translation x": sym.translation([1.0, 0.0, 0.0]),
    "rotation z": sym.rotation([0.0, 0.0, 1.0]),
    "phase rotation": sym.phase_rotation(0),
}

for name, system in systems.items():
    q, p = starts[name]
    traj = integrate(system, phase_state(system, q, p), 0.01, 10000)
    for label, action in actions.items():
        if (action.kind == sym.PHASE_ROTATION) != (system.manifold.dim == 1):
            continue
        invariant = sym.is_invariant(system, action)
        drift = sym.noether_drift(system, action, traj)
        print(f"{name:>18} / {label:<14} invariant={invariant!s:<5} drift {drift:.2e}")
