import math

import numpy as np
import pytest

from conftest import PARAMS, make
from geomech import ConfigurationError, InvalidInputError, SystemConfig, build_system, phase_state
from geomech.hamiltonian import grad_fd, hamiltonian_vector_field, integrate
from geomech import manifold as mf
from geomech.systems import harmonic_reference, pendulum_small_period, sample_points


def test_pendulum_potential_examples():
    pend = make("pendulum")
    assert pend.potential(np.array([0.0])) == 0.0
    assert pend.potential(np.array([math.pi])) == pytest.approx(19.62, abs=1e-12)


def test_harmonic_mass_is_constant():
    ho = make("harmonic-particle", m=2.0)
    for q in ([0, 0, 0], [1.0, -3.0, 7.0]):
        np.testing.assert_array_equal(ho.mass(np.array(q, dtype=float)), 2.0 * np.eye(3))


def test_catalog_manifolds():
    assert make("free-particle").manifold == mf.euclidean(3)
    assert make("harmonic-particle").manifold == mf.euclidean(3)
    assert make("pendulum").manifold == mf.circle()
    assert make("double-pendulum").manifold == mf.torus(2)


def test_double_pendulum_mass_and_potential():
    dp = make("double-pendulum", m1=2.0, m2=0.5, l1=1.5, l2=0.7, g=3.0)
    th, ph = 0.4, 1.3
    M = dp.mass(np.array([th, ph]))
    off = 0.5 * 1.5 * 0.7 * math.cos(th - ph)
    np.testing.assert_allclose(M, [[2.5 * 1.5**2, off], [off, 0.5 * 0.7**2]], rtol=1e-15)
    V = 2.5 * 3.0 * 1.5 * (1 - math.cos(th)) + 0.5 * 3.0 * 0.7 * (1 - math.cos(ph))
    assert dp.potential(np.array([th, ph])) == pytest.approx(V, rel=1e-15)
    assert dp.potential(np.zeros(2)) == 0.0


@pytest.mark.parametrize("name, params, key", [
    ("pendulum", dict(m=1.0, l=1.0), "g"),
    ("pendulum", dict(m=1.0, l=-1.0, g=9.81), "l"),
    ("harmonic-particle", dict(m=0.0, k=1.0), "m"),
    ("double-pendulum", dict(m1=1, m2=1, l1=1, l2=1, g=-1), "g"),
    ("free-particle", dict(m=1.0, k=2.0), "k"),
])
def test_bad_parameters_are_named(name, params, key):
    with pytest.raises(ConfigurationError) as info:
        build_system(SystemConfig(name, params))
    assert info.value.parameter == key
    assert key in str(info.value)


def test_unknown_system():
    with pytest.raises(ConfigurationError):
        build_system(SystemConfig("triple-pendulum", {}))


def test_zero_gravity_allowed():
    build_system(SystemConfig("pendulum", dict(m=1.0, l=1.0, g=0.0)))


def test_small_period_examples():
    assert pendulum_small_period(1, 1, 1) == pytest.approx(2 * math.pi, rel=1e-15)
    assert pendulum_small_period(3, 9.81, 9.81) == pytest.approx(2 * math.pi, rel=1e-15)
    assert pendulum_small_period(1, 1, 9.81) == pytest.approx(2.0061, abs=5e-5)
    with pytest.raises(InvalidInputError):
        pendulum_small_period(1, 0, 1)
    with pytest.raises(InvalidInputError):
        pendulum_small_period(1, 1, -9.81)


@pytest.mark.parametrize("t, q, p", [
    (0.0, [1, 0, 0], [0, 0, 0]),
    (math.pi / 2, [0, 0, 0], [-1, 0, 0]),
    (2 * math.pi, [1, 0, 0], [0, 0, 0]),
])
def test_harmonic_reference_examples(t, q, p):
    s = harmonic_reference(1, 1, [1, 0, 0], [0, 0, 0], t)
    np.testing.assert_allclose(s.q.coords, q, atol=1e-15)
    np.testing.assert_allclose(s.p.components, p, atol=1e-15)


def test_harmonic_reference_rejects_bad_parameters():
    with pytest.raises(InvalidInputError):
        harmonic_reference(0, 1, [1.0], [0.0], 1.0)


def test_harmonic_reference_solves_hamiltons_equations():
    ho = make("harmonic-particle", m=2.0, k=3.0)
    q0, p0 = [0.3, -1.0, 0.5], [1.0, 0.2, -0.4]
    dt = 1e-5
    for t in (0.0, 0.7, 4.2):
        s = harmonic_reference(2.0, 3.0, q0, p0, t)
        sp = harmonic_reference(2.0, 3.0, q0, p0, t + dt)
        sm = harmonic_reference(2.0, 3.0, q0, p0, t - dt)
        qdot, pdot = hamiltonian_vector_field(ho, s)
        np.testing.assert_allclose((sp.q.coords - sm.q.coords) / (2 * dt), qdot.components, atol=1e-6)
        np.testing.assert_allclose((sp.p.components - sm.p.components) / (2 * dt), pdot, atol=1e-6)


@pytest.mark.parametrize("name", list(PARAMS))
def test_mass_matrix_spd_on_samples(name):
    system = make(name)
    rng = np.random.default_rng(1)
    for q in sample_points(system.manifold, 100, rng):
        M = system.mass(q)
        assert np.abs(M - M.T).max() < 1e-12
        assert np.linalg.eigvalsh(M).min() > 0


@pytest.mark.parametrize("name", list(PARAMS))
def test_potential_gradient_matches_differences(name):
    system = make(name)
    rng = np.random.default_rng(2)
    for q in sample_points(system.manifold, 50, rng):
        g = system.potential_gradient(q)
        fd = grad_fd(system.potential, mf.point(system.manifold, q))
        scale = np.maximum(np.abs(g), 1.0)
        assert np.all(np.abs(g - fd) / scale <= 1e-6)


def test_light_lower_bob_recovers_single_pendulum():
    dp = make("double-pendulum", m2=1e-9)
    pend = make("pendulum")
    h, n = 1e-3, 5000
    a = integrate(dp, phase_state(dp, [0.3, 0.1], [0.0, 0.0]), h, n, "implicit-midpoint")
    b = integrate(pend, phase_state(pend, [0.3], [0.0]), h, n, "implicit-midpoint")
    diff = mf.displacement_coords(mf.circle(), b.qs, a.qs[:, :1])
    assert np.abs(diff).max() <= 1e-4
