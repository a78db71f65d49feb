import math
from fractions import Fraction

import numpy as np
import pytest

from groupoid_effect import lie
from groupoid_effect import scenarios as S
from groupoid_effect.errors import CompositionError, ConfigurationError, MalformedArrowError
from groupoid_effect.groupoid import (RotationKernel, WeakPullbackPoint, build_translation,
                                      build_weak_pullback, check_groupoid_axioms,
                                      first_order_fd_check, quotient_by_kernel)


def _groupoids():
    e1 = S.ex1()
    b = S.ex2b()
    we = S.weak_equivalence()
    Z, _, _ = build_weak_pullback(S.inclusion_into_so3(we.sigma), we.pi)
    return {"translation": e1.down, "bundle": S.ex3().B, "quotient": b.Q,
            "pullback": we.P, "weak pullback": Z}


GROUPOIDS = _groupoids()


@pytest.mark.parametrize("name", sorted(GROUPOIDS))
def test_structure_axioms(name):
    rep = check_groupoid_axioms(GROUPOIDS[name], 300, seed=3)
    assert rep.passed(1e-8), rep.residuals


@pytest.mark.parametrize("name", ["translation", "bundle", "pullback", "weak pullback"])
def test_first_order_data_matches_differences(name, rng):
    G = GROUPOIDS[name]
    for _ in range(10):
        res = first_order_fd_check(G, G.sample_arrow(rng))
        assert max(res.values()) < 1e-5, res


def test_translation_source_target(so3x):
    g = lie.rot_z(0.5)
    a = so3x.arrow(g, [1.0, 0.0, 0.0])
    assert np.allclose(so3x.source(a), [1, 0, 0])
    assert np.allclose(so3x.target(a), [math.cos(0.5), math.sin(0.5), 0])
    assert so3x.is_unit(so3x.compose(so3x.inverse(a), a))


def test_composition_requires_matching_points(so3x):
    a = so3x.arrow(np.eye(3), [1.0, 0.0, 0.0])
    b = so3x.arrow(np.eye(3), [0.0, 1.0, 0.0])
    with pytest.raises(CompositionError):
        so3x.compose(b, a)


def test_isotropy_samples_are_isotropic(so3x, rng):
    for x in (np.zeros(3), np.array([0.0, 0.0, 2.0]), rng.standard_normal(3)):
        g = so3x.sample_isotropy(rng, x)
        assert so3x.is_isotropic(g)


def test_kernel_periods():
    K1 = RotationKernel("poly:0,1")
    K2 = RotationKernel("poly:0,1", Fraction(1, 2))
    generic, fixed = np.array([1.0, 0.0, 3.0]), np.array([0.0, 0.0, 3.0])
    assert K1.period(generic) == pytest.approx(2 * math.pi / 3)
    assert K2.period(fixed) == pytest.approx(math.pi / 3)
    # the refined kernel only differs on the fixed fiber
    assert K2.period(generic) == pytest.approx(K1.period(generic))
    assert K1.period(np.array([1.0, 0.0, 0.0])) is None
    assert K2.contains(math.pi / 3, fixed) and not K1.contains(math.pi / 3, fixed)
    assert K1.normalize(-2 * math.pi / 3 + 0.1, generic) == pytest.approx(0.1)


def test_section_limit_gap():
    K1 = RotationKernel("poly:0,1")
    K2 = RotationKernel("poly:0,1", Fraction(1, 2))
    x = np.array([0.0, 0.0, 3.0])
    d = np.array([1.0, 0.0, 0.0])
    assert K1.section_limit_gap(2 * math.pi / 3, x, d) < 1e-12
    assert K2.section_limit_gap(math.pi / 3, x, d) == pytest.approx(math.pi / 3)


def test_quotient_identifies_kernel_arrows():
    Q = S.ex2b().Q
    x = np.array([1.0, 0.5, 3.0])
    assert Q.arrows_equal(Q.arrow(2 * math.pi / 3, x), Q.unit(x))
    assert not Q.arrows_equal(Q.arrow(1.0, x), Q.unit(x))
    y = np.array([0.0, 0.0, 3.0])
    assert Q.arrows_equal(Q.arrow(0.4 + 2 * math.pi / 3, y), Q.arrow(0.4, y))


def test_quotient_rejects_mismatched_kernel():
    a = lie.rotation_action("poly:0,1")
    base = build_translation(a.group, a)
    with pytest.raises(ConfigurationError):
        quotient_by_kernel(base, RotationKernel("poly:0,2"))


def test_pullback_rejects_inconsistent_arrow():
    we = S.weak_equivalence()
    h = we.sigma.arrow(lie.rot_x(0.3), [0.0, 0.0, 1.0])
    with pytest.raises(MalformedArrowError):
        we.P.arrow([1.0], h, [1.0])
    good = we.sigma.arrow(lie.rot_z(0.3), [0.0, 0.0, 1.0])
    assert we.P.is_isotropic(we.P.arrow([1.0], good, [1.0]))


def test_weak_pullback_points(rng):
    we = S.weak_equivalence()
    incl = S.inclusion_into_so3(we.sigma)
    Z, pr_d, pr_g = build_weak_pullback(incl, we.pi)
    y = np.array([0.0, 2.0])
    z = Z.point_over(y)
    assert Z.point_residual(z) < 1e-10
    assert np.allclose(pr_d.base_map(z), y)
    bad = WeakPullbackPoint(y, we.sigma.unit(np.zeros(3)), np.array([1.0]))
    with pytest.raises(MalformedArrowError):
        Z.check_point(bad)
    # the orbit space of Z follows the left factor
    z2 = Z.point_over(np.array([2.0, 0.0]))
    assert Z.same_orbit(z, z2)
    assert not Z.same_orbit(z, Z.point_over(np.array([1.0, 0.0])))
