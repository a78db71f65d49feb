import numpy as np
import pytest

from groupoid_effect import lie
from groupoid_effect import scenarios as S
from groupoid_effect.errors import ConfigurationError, RejectedWitnessError
from groupoid_effect.homs import (IdentityHom, PullbackProjection, NaturalTransformationWitness,
                                  TranslationHom, classify, compose_homs, congruence_obstruction,
                                  hom_jacobian_fd_check, intertwining_check,
                                  natural_congruence_check, natural_transformation_effect_check,
                                  orbit_map_check, transversal_map, tri_and)


@pytest.fixture(scope="module")
def we():
    return S.weak_equivalence()


def test_tri_and():
    assert tri_and(True, True) is True
    assert tri_and(True, None) is None
    assert tri_and(None, False) is False
    assert tri_and() is True


def test_ex1_image(ex1):
    img = ex1.phi.apply(ex1.arrow)
    assert np.allclose(img.g, lie.FLIP3)
    assert np.allclose(img.x, [1.0, 0.0, 0.0])


def test_homs_are_functors(ex1, we, rng):
    for phi in (ex1.phi, we.pi, S.ex2a().psi):
        G, D = phi.domain, phi.codomain
        for _ in range(20):
            a = G.sample_arrow(rng)
            b = G.sample_arrow(rng, G.target(a))
            assert D.arrows_equal(phi.apply(G.compose(b, a)), D.compose(phi.apply(b), phi.apply(a)))
            assert D.arrows_equal(phi.apply(G.inverse(a)), D.inverse(phi.apply(a)))


def test_transversal_map_ex1(ex1):
    lam = transversal_map(ex1.phi, ex1.point)
    M = lam.target.complement @ lam.matrix @ lam.source.complement.T
    # radial direction of R^2 goes to the radial direction of R^3
    assert np.allclose(M, [[1, 0], [0, 0], [0, 0]], atol=1e-12)


def test_classification_of_the_radial_projection(we, rng):
    c = classify(we.pi, [we.P.sample_point(rng) for _ in range(5)], rng)
    assert c.flags() == {k: True for k in c.FLAGS}
    assert c.consistent()


def test_classification_of_constant_orbit_hom(rng):
    e = S.ex2a()
    c = classify(e.phi, [np.zeros(2), np.array([1.0, 1.0])], rng)
    assert c.transversal is False
    assert c.faithfully_transversal is False
    assert c.cinfty_full is None  # no lift witness supplied
    assert c.in_E is False


def test_rejected_witness_is_undetermined(we, rng):
    # claims every point sits over radius 1 via a unit arrow, which is false
    pi2 = PullbackProjection(we.P, lambda y: (np.array([1.0]), we.sigma.unit(y)))
    c = classify(pi2, [we.P.sample_point(rng) for _ in range(3)], rng)
    assert c.completely_transversal is None
    assert c.evidence["surjectivity"] == "witness rejected"
    assert c.in_E is None


def test_identity_and_composites_are_in_E(we, rng):
    pts = [we.P.sample_point(rng) for _ in range(3)]
    assert classify(IdentityHom(we.P), pts, rng).in_E is True
    assert classify(compose_homs(IdentityHom(we.P), we.pi), pts, rng).in_E is True


def test_congruence_for_power_endos(rng):
    e = S.ex3()
    arrows = [e.B.sample_arrow(rng) for _ in range(50)]
    assert natural_congruence_check(e.tau, e.endo(1), e.endo(4), arrows).passed
    exact = NaturalTransformationWitness(e.tau.tau, "exact")
    r = natural_congruence_check(exact, e.endo(1), e.endo(4), arrows)
    assert not r.passed and r.max_deviation > 1e-3


def test_congruence_rejects_badly_typed_tau(rng):
    e = S.ex3()
    shifted = NaturalTransformationWitness(lambda x: e.B.unit(x + 1.0))
    with pytest.raises(RejectedWitnessError):
        natural_congruence_check(shifted, e.endo(1), e.endo(2), [e.B.sample_arrow(rng)])
    with pytest.raises(ConfigurationError):
        natural_congruence_check(e.tau, e.endo(1), S.ex1().phi, [])


def test_obstruction_without_candidates(rng):
    e = S.ex2a()
    g = e.up.sample_isotropy(rng, np.zeros(2))
    assert congruence_obstruction(e.phi, e.psi, np.zeros(2), g, []) is None
    assert congruence_obstruction(e.phi, e.psi, np.zeros(2), g, e.candidates) is False


def test_natural_transformation_effect(rng):
    cr = S.connecting_rotation()
    pts = [cr.U.sample_point(rng) for _ in range(10)]
    assert natural_transformation_effect_check(cr.tau, cr.phi, cr.psi, pts) < 1e-8


def test_orbit_map(ex1, rng):
    pairs = [(ex1.up.sample_point(rng), ex1.up.sample_point(rng)) for _ in range(10)]
    pairs.append((np.array([1.0, 0.0]), np.array([0.0, 1.0])))
    rep = orbit_map_check(ex1.phi, pairs)
    assert rep.injective is True
    assert rep.surjective is None  # no witness, no claim


def test_intertwining_ex1(ex1, rng):
    iso = [ex1.up.sample_isotropy(rng, np.zeros(2)) for _ in range(10)]
    assert intertwining_check(ex1.phi, np.zeros(2), iso) < 1e-12
    assert intertwining_check(ex1.phi, ex1.point, [ex1.arrow]) < 1e-12


def test_hom_jacobians(ex1, we, rng):
    b = S.ex2b()
    for phi in (ex1.phi, we.pi, b.h0, b.h1, S.ex3().endo(3)):
        dom = phi.domain.base if hasattr(phi.domain, "kernel") else phi.domain
        for _ in range(5):
            g = dom.group.sample(rng) if isinstance(phi, TranslationHom) else None
            res = hom_jacobian_fd_check(phi, phi.domain.sample_point(rng), g)
            assert max(res.values()) < 1e-5, (phi.name, res)
