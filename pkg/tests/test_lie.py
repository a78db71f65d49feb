import math

import numpy as np
import pytest

from groupoid_effect import lie
from groupoid_effect.errors import ConfigurationError

ACTIONS = [lie.so3_on_r3, lie.o2_on_r2, lie.so2_on_r2, lie.axis_flip_on_r3,
           lambda: lie.rotation_action("poly:0,1"), lambda: lie.rotation_action("texp:1,-0.5")]


def test_exp_of_generator_is_rotation():
    G = lie.so3()
    for th in (0.0, 0.4, -2.5, math.pi):
        assert np.allclose(G.exp([0, 0, th]), lie.rot_z(th), atol=1e-13)
        assert np.allclose(G.exp([th, 0, 0]), lie.rot_x(th), atol=1e-13)


def test_so3_adjoint_is_the_rotation(rng):
    # so(3) with the hat basis is equivariantly R^3, so Ad_g = g
    G = lie.so3()
    for _ in range(5):
        g = G.sample(rng)
        assert np.allclose(G.adjoint(g), g, atol=1e-12)


def test_samples_lie_in_the_group(rng):
    for G in (lie.so3(), lie.o2(), lie.so2(), lie.axis_flip_group()):
        for _ in range(10):
            g = G.sample(rng)
            assert np.allclose(g.T @ g, np.eye(G.matrix_size), atol=1e-12)
    P = lie.axis_flip_group().sample(rng)
    assert abs(abs(P[2, 2]) - 1) < 1e-12


@pytest.mark.parametrize("u,v", [([1, 0, 0], [0, 0, 1]), ([0, 0, 1], [0, 0, -2]),
                                 ([1, 2, 3], [1, 2, 3]), ([0.3, -1, 2], [-4, 0.1, 0.2])])
def test_rotation_taking(u, v):
    R = lie.rotation_taking(u, v)
    assert np.allclose(R @ (np.array(u) / np.linalg.norm(u)), np.array(v) / np.linalg.norm(v))
    assert np.linalg.det(R) == pytest.approx(1.0)


def test_frequency_family():
    w = lie.parse_frequency("poly:1,0,2")
    assert w(2.0) == 9.0 and w.derivative(2.0) == 8.0
    e = lie.parse_frequency("texp:2,0.5")
    assert e(1.0) == pytest.approx(2 * math.exp(0.5))
    assert e.derivative(0.0) == pytest.approx(2.0)
    assert lie.parse_frequency("poly:3").derivative(1.0) == 0.0
    for bad in ("sin:1", "poly:", "poly:a", "texp:1", "poly:nan"):
        with pytest.raises(ConfigurationError):
            lie.parse_frequency(bad)


def test_modulus_check():
    lie.check_same_modulus(lie.parse_frequency("poly:0,-1"), lie.parse_frequency("poly:0,1"))
    with pytest.raises(ConfigurationError):
        lie.check_same_modulus(lie.parse_frequency("poly:1,1"), lie.parse_frequency("poly:0,1"))


@pytest.mark.parametrize("make", ACTIONS)
def test_stabilizer_samples_fix_the_point(make, rng):
    a = make()
    pts = [np.zeros(a.base_dim), rng.standard_normal(a.base_dim)]
    if a.base_dim == 3:
        pts.append(np.array([0.0, 0.0, 1.3]))
    for x in pts:
        for _ in range(5):
            g = a.stabilizer_sample(rng, x)
            if g is not None:
                assert np.allclose(a.act(g, x), x, atol=1e-10)


def test_rotation_action_period():
    a = lie.rotation_action("poly:0,1")
    x = np.array([0.6, -0.2, 2.0])
    g = lie.translation_r(2 * math.pi / 2.0)
    assert np.allclose(a.act(g, x), x, atol=1e-12)
    assert not np.allclose(a.act(lie.translation_r(1.0), x), x)
    # on the fixed fiber every angle fixes the point
    z0 = np.array([0.0, 0.0, 2.0])
    assert np.allclose(a.act(lie.translation_r(0.7), z0), z0)


@pytest.mark.parametrize("make", ACTIONS)
def test_action_derivatives_match_differences(make, rng):
    a = make()
    for _ in range(20):
        res = lie.action_fd_check(a, a.group.sample(rng), rng.standard_normal(a.base_dim))
        assert max(res.values()) < 1e-5


def test_orbit_oracles(rng):
    a = lie.so3_on_r3()
    x = rng.standard_normal(3)
    assert a.same_orbit(x, lie.so3().sample(rng) @ x)
    assert not a.same_orbit(x, 2 * x)
    g = lie.axis_flip_on_r3()
    assert g.same_orbit(np.array([1.0, 0, 2]), np.array([0, 1.0, -2]))
    assert not g.same_orbit(np.array([1.0, 0, 2]), np.array([0, 0, math.sqrt(5)]))
