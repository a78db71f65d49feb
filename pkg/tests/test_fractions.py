import numpy as np
import pytest

from groupoid_effect import lie
from groupoid_effect import scenarios as S
from groupoid_effect.errors import CompositionError, MalformedSkeletonError, RejectedWitnessError
from groupoid_effect.fractions import (Span, axiom_II_instance, axiom_III_instance, compose_spans,
                                       identity_span, isotropy_batch, model_isomorphism_check,
                                       skeleton_compose, skeleton_equivalence_check,
                                       skeleton_point, span_equivalence_check)
from groupoid_effect.homs import IdentityHom, NaturalTransformationWitness, compose_homs, group_hom


@pytest.fixture(scope="module")
def we():
    return S.weak_equivalence()


def test_span_refuses_right_leg_outside_E():
    e = S.ex2a()
    with pytest.raises(CompositionError):
        Span.make(e.phi, e.phi)


def test_span_refuses_left_leg_creating_effect(ex1):
    # the only ineffective isotropy of O(2) x R^2 sits off the origin, so
    # sample until the reflection at (1, 0) is seen
    with pytest.raises(CompositionError):
        for seed in range(20):
            Span.make(ex1.phi, IdentityHom(ex1.up), np.random.default_rng(seed), points=8)


def test_compose_spans(we, rng):
    incl = S.inclusion_into_so3(we.sigma)
    outer = Span.make(incl, IdentityHom(incl.domain), rng)
    inner = Span.make(IdentityHom(we.P), we.pi, rng)
    c = compose_spans(outer, inner, rng)
    assert c.classification.in_E is True
    assert c.left.codomain is we.P and c.right.codomain is incl.domain
    with pytest.raises(CompositionError):
        compose_spans(inner, outer, rng)


def test_span_equivalence_needs_both_taus(rng):
    e = S.ex3()
    s = identity_span(e.B, rng)
    i = IdentityHom(e.B)
    assert span_equivalence_check(s, s, (i, i), []).equivalent is None
    unit = NaturalTransformationWitness(lambda x: e.B.unit(x))
    r = span_equivalence_check(s, Span.make(e.endo(2), i, rng), (i, i),
                               [e.B.sample_arrow(rng) for _ in range(20)], unit, unit)
    assert r.equivalent is True


def test_axiom_II_small(we, rng):
    rep = axiom_II_instance(S.inclusion_into_so3(we.sigma), we.pi, rng, fuzz_samples=100,
                            preservation_samples=10)
    assert rep.verified is True, rep.flags
    assert rep.residuals["preservation_arrows"] >= 10


def test_axiom_III_detects_corrupted_tau(rng):
    f = S.ex2b("poly:1,1", "poly:1,1", "poly:1,1")
    ident = lambda x: np.asarray(x, float).copy()
    cover = {"f": ident, "df": lambda x: np.eye(3), "dim": 3, "sampler": f.Q.sample_point,
             "f_inverse": ident}
    unit = NaturalTransformationWitness(lambda x: f.sigma.unit(np.array([0.0, 0.0, x[2]])))
    fixed = [np.array([0.4, -0.3, 0.0]), np.array([1.0, 1.0, 0.0])]
    good = axiom_III_instance(f.h0, f.h0, IdentityHom(f.sigma), unit, cover, unit, 20, rng, fixed)
    assert good.verified is True

    def corrupt(x):
        if x[2] == 0.0:
            return f.sigma.arrow(lie.rot_x(0.3), np.zeros(3))
        return f.sigma.unit(np.array([0.0, 0.0, x[2]]))

    bad = axiom_III_instance(f.h0, f.h0, IdentityHom(f.sigma), unit, cover,
                             NaturalTransformationWitness(corrupt), 20, rng, fixed)
    assert bad.verified is False
    assert bad.flags["lifted_congruence"] is False


def test_skeleton_of_radial_projection(we, rng):
    t = np.array([2.0])
    p = skeleton_point(we.pi, t, isotropy_batch(we.P, rng, t, 5))
    assert np.allclose(np.abs(p.lam), [[1.0]])
    assert len(p.theta_table) == 1  # everything is ineffective on both sides


def test_skeleton_rejects_non_equivariant_map(ex1, rng):
    # forgets the group part but keeps the base map: not intertwining at 0
    fake = group_hom(ex1.up, ex1.down, lambda A: np.eye(3), [[0.0]],
                     lambda x: np.array([x[0], x[1], 0.0]), lambda x: np.eye(3)[:, :2])
    iso = isotropy_batch(ex1.up, rng, np.zeros(2), 4)
    with pytest.raises(MalformedSkeletonError):
        skeleton_point(fake, np.zeros(2), iso)


def test_skeleton_equivalence_along_an_arrow(ex1, rng):
    x = np.array([1.0, 0.0])
    g = ex1.up.arrow(lie.rot2(0.7), x)
    x2 = ex1.up.target(g)
    p1 = skeleton_point(ex1.phi, x, [ex1.arrow])
    p2 = skeleton_point(ex1.phi, x2, [ex1.up.arrow(lie.rot2(0.7) @ np.diag([1, -1]) @ lie.rot2(-0.7), x2)])
    h = ex1.phi.apply(g)
    assert skeleton_equivalence_check(p1, p2, ex1.up, ex1.down, (g, h)).equivalent
    with pytest.raises(RejectedWitnessError):
        skeleton_equivalence_check(p1, p2, ex1.up, ex1.down, (ex1.up.unit(x), h))


def test_skeleton_composition_is_functorial(ex1, we, rng):
    incl = S.axis_group_inclusion(ex1.down, we.sigma)
    x = np.zeros(2)
    iso = isotropy_batch(ex1.up, rng, x, 6)
    p = skeleton_point(ex1.phi, x, iso)
    q = skeleton_point(incl, ex1.phi.base_map(x), [ex1.phi.apply(g) for g in iso])
    direct = skeleton_point(compose_homs(ex1.phi, incl), x, iso)
    pq = skeleton_compose(p, q, ex1.down)
    assert np.allclose(pq.lam, direct.lam, atol=1e-8)
    assert len(pq.theta_table) == len(direct.theta_table)


def test_model_isomorphism(we, rng):
    pts = [we.P.sample_point(rng) for _ in range(3)]
    ups = [isotropy_batch(we.P, rng, t, 3) for t in pts]
    downs = [isotropy_batch(we.sigma, rng, we.pi.base_map(t), 3) for t in pts]
    assert model_isomorphism_check(we.pi, pts, ups, downs).passed is True
    e = S.ex2a()
    pts = [np.zeros(2)]
    rep = model_isomorphism_check(e.phi, pts, [isotropy_batch(e.up, rng, pts[0], 3)],
                                  [isotropy_batch(e.sigma, rng, e.phi.base_map(pts[0]), 3)])
    assert rep.passed is False
