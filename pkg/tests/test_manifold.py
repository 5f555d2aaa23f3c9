import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geomech import InvalidInputError
from geomech import manifold as mf

TWO_PI = 2.0 * math.pi

angles = st.floats(-50.0, 50.0, allow_nan=False)
small = st.floats(-1.5, 1.5, allow_nan=False)
reals = st.floats(-1e3, 1e3, allow_nan=False)


def test_dimensions():
    assert mf.euclidean(4).dim == 4
    assert mf.circle().dim == 1
    assert mf.so3().dim == 3
    assert mf.so3().ncoords == 4
    assert mf.product(mf.circle(), mf.euclidean(2)).dim == 3
    a, b, c = mf.circle(), mf.so3(), mf.euclidean(2)
    assert mf.product(mf.product(a, b), c).dim == mf.product(a, mf.product(b, c)).dim == 6


def test_torus_is_product_of_circles():
    assert mf.torus(2) == mf.product(mf.circle(), mf.circle())


@pytest.mark.parametrize("text", ["euclidean:3", "circle", "so3", "product(circle,circle)",
                                  "product(euclidean:2,product(circle,so3))"])
def test_serialization_round_trip(text):
    assert str(mf.parse_manifold(text)) == text
    assert mf.parse_manifold(str(mf.parse_manifold(text))) == mf.parse_manifold(text)


@pytest.mark.parametrize("bad", ["", "euclidean:0", "torus", "product(circle", "euclidean:x"])
def test_parse_rejects_garbage(bad):
    with pytest.raises(InvalidInputError):
        mf.parse_manifold(bad)


def test_canonicalize_examples():
    assert mf.point(mf.circle(), [TWO_PI + 0.5]).coords[0] == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_array_equal(mf.point(mf.euclidean(3), [1, 2, 3]).coords, [1, 2, 3])
    q = mf.point(mf.torus(2), [-0.1, 4 * math.pi]).coords
    np.testing.assert_allclose(q, [TWO_PI - 0.1, 0.0], atol=1e-15)


def test_canonicalize_rejects_non_finite():
    with pytest.raises(InvalidInputError):
        mf.point(mf.circle(), [np.nan])
    with pytest.raises(InvalidInputError):
        mf.point(mf.euclidean(2), [1.0, np.inf])


def test_quaternion_canonical_form():
    q = mf.point(mf.so3(), [-2.0, 0.0, 0.0, 0.0]).coords
    np.testing.assert_array_equal(q, [1.0, 0.0, 0.0, 0.0])
    q = mf.point(mf.so3(), [0.0, -1.0, 1.0, 0.0]).coords
    assert q[1] > 0
    assert np.linalg.norm(q) == pytest.approx(1.0, abs=1e-12)


def test_point_is_immutable():
    p = mf.point(mf.euclidean(2), [1.0, 2.0])
    with pytest.raises(ValueError):
        p.coords[0] = 5.0


def test_displacement_examples():
    c = mf.circle()
    d = mf.chart_displacement(mf.point(c, [0.1]), mf.point(c, [TWO_PI - 0.1]))
    assert d[0] == pytest.approx(-0.2, abs=1e-14)
    e = mf.euclidean(2)
    np.testing.assert_array_equal(mf.chart_displacement(mf.point(e, [0, 0]), mf.point(e, [3, 4])), [3, 4])
    assert mf.chart_displacement(mf.point(c, [1.0]), mf.point(c, [1.0]))[0] == 0.0


def test_half_turn_resolves_to_plus_pi():
    c = mf.circle()
    assert mf.chart_displacement(mf.point(c, [0.0]), mf.point(c, [math.pi]))[0] == math.pi
    assert mf.chart_displacement(mf.point(c, [math.pi]), mf.point(c, [0.0]))[0] == math.pi


def test_displacement_manifold_mismatch():
    with pytest.raises(InvalidInputError):
        mf.chart_displacement(mf.point(mf.circle(), [0.0]), mf.point(mf.euclidean(1), [0.0]))


def test_so3_displacement_is_rotation_vector():
    u = np.array([0.3, -0.2, 0.5])
    a = mf.point(mf.so3(), [1.0, 0.0, 0.0, 0.0])
    b = mf.retract(a, u)
    np.testing.assert_allclose(mf.chart_displacement(a, b), u, atol=1e-14)
    # independent oracle: exp(u) as a matrix via Rodrigues
    angle = np.linalg.norm(u)
    k = u / angle
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    R = np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * K @ K
    np.testing.assert_allclose(mf.quat_to_matrix(b.coords), R, atol=1e-14)


def test_pair_examples():
    e = mf.euclidean(3)
    q = mf.point(e, [0, 0, 0])
    assert mf.pair(mf.CotangentValue(q, [0, 3, 0]), mf.TangentValue(q, [0, 1, 0])) == 3.0
    assert mf.pair(mf.CotangentValue(q, [5, -1, 2]), mf.TangentValue(q, [0, 0, 0])) == 0.0
    v = np.array([1.0, 2.0, 2.0])
    assert mf.pair(mf.CotangentValue(q, 1.0 * v), mf.TangentValue(q, v)) == 2 * (0.5 * v @ v) == 9.0


def test_pair_base_mismatch():
    e = mf.euclidean(1)
    with pytest.raises(InvalidInputError):
        mf.pair(mf.CotangentValue(mf.point(e, [0]), [1]), mf.TangentValue(mf.point(e, [1]), [1]))


def test_value_length_checked():
    q = mf.point(mf.so3(), [1, 0, 0, 0])
    mf.TangentValue(q, [0.0, 0.0, 0.0])
    with pytest.raises(InvalidInputError):
        mf.TangentValue(q, [0.0, 0.0, 0.0, 0.0])


def test_chart_midpoint_across_seam():
    c = mf.circle()
    m = mf.chart_midpoint(mf.point(c, [TWO_PI - 0.2]), mf.point(c, [0.1]))
    assert m.coords[0] == pytest.approx(TWO_PI - 0.05, abs=1e-14)


# -- properties -------------------------------------------------------------

MANIFOLDS = [mf.circle(), mf.euclidean(3), mf.torus(2), mf.product(mf.circle(), mf.euclidean(2))]


@given(st.sampled_from(MANIFOLDS), st.lists(angles, min_size=3, max_size=3))
def test_canonicalize_idempotent(man, raw):
    p = mf.point(man, raw[:man.ncoords])
    assert mf.canonicalize(p) == p
    np.testing.assert_array_equal(mf.canonicalize(mf.canonicalize(p)).coords, p.coords)
    mask = man.circle_mask
    assert np.all((p.coords[mask] >= 0) & (p.coords[mask] < TWO_PI))


@given(st.lists(reals, min_size=4, max_size=4))
def test_canonical_quaternion_unit(raw):
    if np.linalg.norm(raw) < 1e-3:
        return
    q = mf.point(mf.so3(), raw)
    assert abs(np.linalg.norm(q.coords) - 1.0) <= 1e-12
    assert q.coords[np.flatnonzero(q.coords)[0]] > 0
    assert mf.canonicalize(q) == q


@given(st.sampled_from(MANIFOLDS), st.lists(angles, min_size=3, max_size=3),
       st.lists(angles, min_size=3, max_size=3))
def test_displacement_antisymmetric(man, ra, rb):
    a, b = mf.point(man, ra[:man.ncoords]), mf.point(man, rb[:man.ncoords])
    dab, dba = mf.chart_displacement(a, b), mf.chart_displacement(b, a)
    mask = man.circle_mask
    tie = mask & np.isclose(np.abs(dab), math.pi, atol=1e-12)
    np.testing.assert_allclose(dab[~tie], -dba[~tie], atol=1e-12)
    assert np.all(dab[mask] > -math.pi) and np.all(dab[mask] <= math.pi)


@given(st.sampled_from(MANIFOLDS + [mf.so3()]), st.lists(angles, min_size=4, max_size=4),
       st.lists(small, min_size=3, max_size=3))
def test_retract_then_displace(man, raw, u):
    if man == mf.so3() and np.linalg.norm(raw) < 1e-3:
        raw = [1.0, 0.0, 0.0, 0.0]
    a = mf.point(man, raw[:man.ncoords])
    u = np.array(u[:man.dim])
    if man == mf.so3() and np.linalg.norm(u) >= math.pi / 2:
        u = u / np.linalg.norm(u)
    np.testing.assert_allclose(mf.chart_displacement(a, mf.retract(a, u)), u, atol=1e-12)


@given(st.lists(reals, min_size=3, max_size=3), st.lists(reals, min_size=3, max_size=3),
       st.lists(reals, min_size=3, max_size=3), st.floats(-10, 10))
def test_pair_bilinear(p, u, v, alpha):
    q = mf.point(mf.euclidean(3), [0, 0, 0])
    P = np.array(p)
    u, v = np.array(u), np.array(v)
    lhs = mf.pair(mf.CotangentValue(q, alpha * P), mf.TangentValue(q, v))
    assert lhs == pytest.approx(alpha * mf.pair(mf.CotangentValue(q, P), mf.TangentValue(q, v)),
                                rel=1e-14, abs=1e-14 * (1 + abs(lhs)))
    split = (mf.pair(mf.CotangentValue(q, P), mf.TangentValue(q, u))
             + mf.pair(mf.CotangentValue(q, P), mf.TangentValue(q, v)))
    whole = mf.pair(mf.CotangentValue(q, P), mf.TangentValue(q, u + v))
    assert whole == pytest.approx(split, rel=1e-14, abs=1e-14 * np.abs(P).max() * (np.abs(u).max() + np.abs(v).max() + 1))
