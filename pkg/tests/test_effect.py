import numpy as np
import pytest

from groupoid_effect import lie
from groupoid_effect import scenarios as S
from groupoid_effect.effect import (arrow_effect, effect, effect_functoriality_check,
                                    effective_infinitesimal_model, ineffective_subgroup_sample,
                                    is_ineffective, longitudinal_space, transversal_space)
from groupoid_effect.errors import PreconditionError


def _normal_projector(action, x):
    """Projector onto the orthogonal complement of the orbit tangent, from the generators."""
    A = action.generator_matrix(x)
    n = action.base_dim
    if A.size == 0 or np.allclose(A, 0):
        return np.eye(n)
    U, s, _ = np.linalg.svd(A)
    r = int(np.sum(s > 1e-9 * max(1.0, s[0])))
    return np.eye(n) - U[:, :r] @ U[:, :r].T


def _ambient(G, a):
    E = arrow_effect(G, a)
    return E.target.complement @ E.matrix @ E.source.complement.T


def test_effect_at_origin_is_the_rotation(so3x, rng):
    for _ in range(5):
        g = so3x.sample_isotropy(rng, np.zeros(3))
        assert np.allclose(_ambient(so3x, g), g.g, atol=1e-12)


def test_axis_rotations_are_ineffective(so3x):
    a = so3x.arrow(lie.rot_z(1.1), [0.0, 0.0, 2.0])
    flag, dev = is_ineffective(so3x, a)
    assert flag and dev < 1e-12
    assert transversal_space(so3x, np.array([0.0, 0.0, 2.0])).quotient.dim == 1


@pytest.mark.parametrize("make", [lambda: S.so3_space(), lambda: S.ex1().down,
                                  lambda: S.ex1().up, lambda: S.ex2b().base])
def test_effect_matches_projected_derivative(make, rng):
    G = make()
    for _ in range(10):
        a = G.sample_arrow(rng)
        x, y = G.source(a), G.target(a)
        oracle = (_normal_projector(G.action, y) @ G.action.base_jacobian(a.g, x)
                  @ _normal_projector(G.action, x))
        assert np.allclose(_ambient(G, a), oracle, atol=1e-8)


def test_rotation_action_effect_on_fixed_fiber():
    B = S.ex2b().base
    t, th = 1.5, 0.8
    x = np.array([0.0, 0.0, t])
    E = _ambient(B, B.arrow(lie.translation_r(th), x))
    expect = np.eye(3)
    expect[:2, :2] = lie.rot2(t * th)
    assert np.allclose(E, expect, atol=1e-12)


def test_longitudinal_dimensions(so3x, ex1):
    assert longitudinal_space(so3x, np.zeros(3)).dim == 0
    assert longitudinal_space(so3x, np.array([1.0, 2.0, 0.0])).dim == 2
    assert longitudinal_space(ex1.down, np.array([0.0, 0.0, 1.0])).dim == 0
    assert longitudinal_space(ex1.down, np.array([1.0, 0.0, 0.0])).dim == 1


def test_effect_needs_isotropy(so3x):
    with pytest.raises(PreconditionError):
        effect(so3x, so3x.arrow(lie.rot_x(0.4), [0.0, 0.0, 1.0]))


def test_partition_and_model(ex1):
    x = np.array([1.0, 0.0, 0.0])
    flip = ex1.down.arrow(lie.FLIP3, x)
    unit = ex1.down.unit(x)
    part = ineffective_subgroup_sample(ex1.down, x, [flip, unit])
    assert len(part.ineffective) == 1 and len(part.effective) == 1
    model = effective_infinitesimal_model(ex1.down, x, [flip, unit, flip])
    assert len(model.effects) == 2
    assert model.closure_residual() < 1e-12
    with pytest.raises(PreconditionError):
        ineffective_subgroup_sample(ex1.down, x, [ex1.down.unit(np.zeros(3))])


def test_functoriality_small(so3x, rng):
    x = np.zeros(3)
    pairs = [(so3x.sample_isotropy(rng, x), so3x.sample_isotropy(rng, x)) for _ in range(50)]
    assert effect_functoriality_check(so3x, pairs) < 1e-8
