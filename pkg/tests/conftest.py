import os

import numpy as np
import pytest
from hypothesis import settings

from geomech import SystemConfig, build_system, phase_state
from geomech.hamiltonian import METHODS, integrate
from geomech.symmetry import BodyAngularMomentum, integrate_euler_top

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

PARAMS = {
    "free-particle": dict(m=1.0),
    "harmonic-particle": dict(m=1.0, k=1.0),
    "pendulum": dict(m=1.0, l=1.0, g=9.81),
    "double-pendulum": dict(m1=1.0, m2=1.0, l1=1.0, l2=1.0, g=9.81),
}

# filled by test_acceptance, printed at the end of the run
ACCEPTANCE_LINES = []


def make(name, **overrides):
    return build_system(SystemConfig(name, {**PARAMS[name], **overrides}))


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile (or load from cache) every kernel once so timings exclude JIT."""
    for name in PARAMS:
        system = make(name)
        s0 = phase_state(system, np.full(system.manifold.ncoords, 0.1),
                         np.zeros(system.manifold.dim))
        for method in METHODS:
            if system.constant_mass or method in ("implicit-midpoint", "rk4-reference"):
                integrate(system, s0, 0.01, 2, method)
    integrate_euler_top(BodyAngularMomentum([0.1, 1.0, 0.1], [1.0, 2.0, 3.0]), 1e-3, 2)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
