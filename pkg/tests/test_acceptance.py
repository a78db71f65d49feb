"""Acceptance criteria 1-11. Each test carries a ``criterion`` marker; the
conftest prints one PASS/FAIL line per criterion at the end of the run."""

import json
import math
from fractions import Fraction

import numpy as np
import pytest

from groupoid_effect import lie
from groupoid_effect import scenarios as S
from groupoid_effect.effect import effect, effect_functoriality_check, is_ineffective
from groupoid_effect.fractions import axiom_II_instance, isotropy_batch
from groupoid_effect.groupoid import build_weak_pullback
from groupoid_effect.homs import (NaturalTransformationWitness, congruence_obstruction,
                                  ineffective_preservation_check, natural_congruence_check,
                                  orbit_map_check, transversal_map)
from groupoid_effect.report import emit_report
from groupoid_effect.runner import SUITE, ScenarioConfig, intertwining_sweep, run_scenario

SEED = 2024


@pytest.fixture(scope="module")
def suite_runs():
    first = [run_scenario(ScenarioConfig(name, seed=SEED)) for name in SUITE]
    second = [run_scenario(ScenarioConfig(name, seed=SEED)) for name in SUITE]
    return first, emit_report(first, "json", False), emit_report(second, "json", False)


@pytest.mark.criterion(1)
def test_ex1_effects():
    e = S.ex1()
    up = effect(e.up, e.arrow)
    assert np.allclose(up.matrix, [[1.0]], atol=1e-8)
    down = effect(e.down, e.phi.apply(e.arrow))
    C = down.map.target.complement
    assert down.matrix.shape == (2, 2)
    # diag(1, -1) on the transversal plane spanned by e1 and e3
    assert np.allclose(C @ down.matrix @ C.T, np.diag([1.0, 0.0, -1.0]), atol=1e-8)
    rep = ineffective_preservation_check(e.phi, [e.point], [[e.arrow]])
    assert rep.in_dotted_category is False


@pytest.mark.criterion(2)
def test_ex2a_congruence_and_obstruction():
    rng = np.random.default_rng(SEED)
    e = S.ex2a(3)
    arrows = [e.up.sample_arrow(rng, np.zeros(2) if i % 2 else None) for i in range(200)]
    r = natural_congruence_check(e.tau, e.phi, e.psi, arrows)
    assert r.passed and r.max_deviation <= 1e-12
    assert len(e.candidates) == 360
    found = []
    for i in range(10):
        x = np.zeros(2) if i == 0 else e.up.sample_point(rng)
        g = e.up.sample_arrow(rng, x)
        found.append(congruence_obstruction(e.phi, e.psi, x, g, e.candidates, "exact"))
    assert found == [False] * 10


@pytest.mark.criterion(3)
def test_ex2b_kernel_and_congruence():
    rng = np.random.default_rng(SEED)
    b = S.ex2b("poly:0,1", "poly:0,1", "poly:0,-1")
    devs = []
    while len(devs) < 100:
        x = rng.standard_normal(3)
        x[2] = rng.uniform(-3, 3)
        if abs(x[2]) <= 0.01 or np.linalg.norm(x[:2]) < 1e-3:
            continue
        m = int(rng.choice([-2, -1, 1, 2]))
        devs.append(is_ineffective(b.base, b.base.arrow(lie.translation_r(m * b.kernel.period(x)), x))[1])
    assert max(devs) < 1e-6

    def arrows(Q):
        out = [Q.sample_arrow(rng) for _ in range(100)]
        for _ in range(50):
            x = rng.standard_normal(3)
            x[2] = 0.0
            out.append(Q.sample_arrow(rng, x))
        return out

    unit = lambda f: NaturalTransformationWitness(
        lambda x: f.sigma.unit(np.array([0.0, 0.0, x[2]])))
    assert b.phi0(0.0) == b.phi1(0.0)
    assert natural_congruence_check(unit(b), b.h0, b.h1, arrows(b.Q)).passed
    # companion case with phi0(0) != phi1(0): the unit is not a congruence
    c = S.ex2b("poly:1,1", "poly:1,1", "poly:-1,-1")
    assert not natural_congruence_check(unit(c), c.h0, c.h1, arrows(c.Q)).passed

    found = []
    while len(found) < 10:
        t = rng.uniform(-3, 3)
        theta = rng.uniform(-math.pi, math.pi)
        if abs(t) < 0.01 or abs(math.remainder(2 * t * theta, 2 * math.pi)) < 1e-3:
            continue
        x = np.array([0.0, 0.0, t])
        cands = [b.sigma.arrow(lie.rot_z(2 * math.pi * j / 360), x) for j in range(360)]
        found.append(congruence_obstruction(b.h0, b.h1, x, b.Q.arrow(theta, x), cands, "exact"))
    assert found == [False] * 10


@pytest.mark.criterion(4)
def test_ex3_bundle():
    rng = np.random.default_rng(SEED)
    e = S.ex3()
    devs = [is_ineffective(e.B, e.B.sample_arrow(rng))[1] for _ in range(1000)]
    assert max(devs) < 1e-10
    for _ in range(20):
        k1, k2 = (int(k) for k in rng.integers(-5, 6, 2))
        arrows = [e.B.sample_arrow(rng) for _ in range(50)]
        assert natural_congruence_check(e.tau, e.endo(k1), e.endo(k2), arrows).passed


@pytest.mark.criterion(5)
def test_ex4_refined_kernel():
    rng = np.random.default_rng(SEED)
    e = S.ex4("poly:0,1", Fraction(1, 2))
    x = e.witness_point
    theta = e.witness_theta
    assert e.K2.contains(theta, x) and not e.K1.contains(theta, x)
    assert e.K1.normalize(theta, x) > 1e-3
    for _ in range(200):
        y = rng.standard_normal(3)
        if rng.random() < 0.5:
            y[:2] = 0.0
        assert e.K2.contains(0.0, y)
        th = e.K2.sample_member(rng, y)
        k = e.base.arrow(lie.translation_r(th), y)
        assert e.base.isotropy_residual(k) < 1e-8
        a = e.base.sample_arrow(rng, y)
        conj = e.base.compose(a, e.base.compose(k, e.base.inverse(a)))
        assert e.base.isotropy_residual(conj) < 1e-8
        assert e.K2.contains(float(conj.g[0, 1]), e.base.target(a))
        assert e.K2.contains(e.K1.sample_member(rng, y), y)


@pytest.mark.criterion(6)
def test_effect_functoriality():
    rng = np.random.default_rng(SEED)
    sigma = S.so3_space()
    for x in (np.array([0.0, 0.0, 1.0]), np.zeros(3)):
        pairs = [(sigma.sample_isotropy(rng, x), sigma.sample_isotropy(rng, x)) for _ in range(1000)]
        assert effect_functoriality_check(sigma, pairs) < 1e-8
    Q = S.ex2b().Q
    pairs = []
    while len(pairs) < 1000:
        x = rng.standard_normal(3)
        if rng.random() < 0.7:
            x[:2] = 0.0
        pairs += [(Q.sample_isotropy(rng, x), Q.sample_isotropy(rng, x)) for _ in range(10)]
    assert effect_functoriality_check(Q, pairs) < 1e-8


def _scenario_homs():
    we = S.weak_equivalence()
    incl = S.inclusion_into_so3(we.sigma)
    cr = S.connecting_rotation(sigma=we.sigma)
    e1, a, b, e3 = S.ex1(), S.ex2a(3), S.ex2b(), S.ex3()
    Z, pr_d, pr_g = build_weak_pullback(incl, we.pi)
    origin_or = lambda G, p: (lambda r: np.zeros(G.base_dim) if r.random() < p else G.sample_point(r))
    fixed = lambda r: np.array([0.0, 0.0, r.uniform(-3, 3)]) if r.random() < 0.5 else b.Q.sample_point(r)
    return [(e1.phi, origin_or(e1.up, 0.25)),
            (a.phi, origin_or(a.up, 0.5)), (a.psi, origin_or(a.up, 0.5)),
            (b.h0, fixed), (b.h1, fixed),
            (e3.endo(2), e3.B.sample_point), (e3.endo(-3), e3.B.sample_point),
            (we.pi, we.P.sample_point), (incl, origin_or(incl.domain, 0.25)),
            (cr.phi, cr.U.sample_point), (cr.psi, cr.U.sample_point),
            (pr_d, Z.sample_point), (pr_g, Z.sample_point)]


@pytest.mark.criterion(7)
def test_intertwining_every_hom():
    rng = np.random.default_rng(SEED)
    for hom, points in _scenario_homs():
        dev, n = intertwining_sweep(hom, rng, 500, points)
        assert n >= 500
        assert dev < 1e-8, hom.name


@pytest.mark.criterion(8)
def test_weak_equivalence_suite():
    rng = np.random.default_rng(SEED)
    we = S.weak_equivalence()
    ts = [we.P.sample_point(rng) for _ in range(100)]
    for t in ts:
        sv = transversal_map(we.pi, t).singular_values()
        assert sv.size == 1 and sv[0] > 0 and sv[0] / sv[-1] < 10
    iso = [isotropy_batch(we.P, rng, t, 3) for t in ts]
    rep = ineffective_preservation_check(we.pi, ts, iso)
    assert rep.passed and rep.equivalence_holds is True
    pairs = [(ts[i], ts[(i + 1) % 100]) for i in range(100)] + [(t, t.copy()) for t in ts]
    orbit = orbit_map_check(we.pi, pairs, [we.sigma.sample_point(rng) for _ in range(100)])
    assert orbit.bijective is True


@pytest.mark.criterion(9)
def test_weak_pullback_fuzz():
    rng = np.random.default_rng(SEED)
    we = S.weak_equivalence()
    rep = axiom_II_instance(S.inclusion_into_so3(we.sigma), we.pi, rng, 1000, 50)
    fuzz = rep.details["fuzz"]
    assert fuzz.samples == 1000
    for key in ("unit_source", "unit_target", "associativity", "left_unit", "right_unit",
                "inverse_left", "inverse_right", "target_of_inverse"):
        assert fuzz.residuals[key] < 1e-8, key
    assert rep.details["classification"].in_E is True
    pres = rep.details["preservation"]
    assert pres.checked_arrows >= 50 and pres.passed
    assert rep.verified is True


@pytest.mark.criterion(10)
def test_jacobian_cross_validation(suite_runs):
    reports = suite_runs[0]
    for r in reports:
        rec = next(c for c in r.checks if c.name == "jacobian_fd")
        assert rec.witnesses["points_per_item"] == 200
        assert rec.status == "pass" and rec.deviation < 1e-5, r.scenario


@pytest.mark.criterion(11)
def test_determinism(suite_runs):
    reports, a, b = suite_runs
    assert a == b
    assert "timing" not in json.loads(a)["reports"][0]
    assert all(r.exit_code == 0 for r in reports), [
        (r.scenario, c.name) for r in reports for c in r.checks if c.status != "pass"]
