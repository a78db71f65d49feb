"""Right fractions (spans), sample-level checks of the fraction axioms, and
pointwise transversal skeleton data."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .effect import arrow_effect, effect, is_ineffective, transversal_space
from .errors import (CompositionError, InputError, MalformedSkeletonError, RejectedWitnessError)
from .groupoid import (build_pullback, build_weak_pullback, check_groupoid_axioms,
                       GroupoidModel)
from .homs import (CompositeHom, GroupoidHom, HomClassification, IdentityHom,
                   NaturalTransformationWitness, classify, ineffective_preservation_check,
                   natural_congruence_check, transversal_map, tri_and)

__all__ = [
    "Span", "identity_span", "compose_spans", "span_equivalence_check", "axiom_II_instance",
    "axiom_III_instance", "SkeletonPoint", "skeleton_point", "skeleton_equivalence_check",
    "skeleton_compose", "model_isomorphism_check", "isotropy_batch",
]


def isotropy_batch(G: GroupoidModel, rng, x, count: int) -> list:
    out = []
    for _ in range(count):
        g = G.sample_isotropy(rng, x)
        if g is not None:
            out.append(g)
    return out


# -------------------------------------------------------------------- spans

@dataclass
class Span:
    """Right fraction (left o right^-1) with right in the class E."""

    apex: GroupoidModel
    left: GroupoidHom
    right: GroupoidHom
    classification: HomClassification = field(repr=False)
    dotted_left: Optional[bool] = None

    @classmethod
    def make(cls, left: GroupoidHom, right: GroupoidHom, rng=None, points: int = 6,
             isotropy: int = 4) -> "Span":
        if left.domain is not right.domain:
            raise InputError("span legs must share their domain")
        rng = np.random.default_rng(0) if rng is None else rng
        apex = left.domain
        pts = [apex.sample_point(rng) for _ in range(points)]
        c = classify(right, pts, rng)
        if c.in_E is not True:
            raise CompositionError(f"right leg {right.name} not certified in E "
                                   f"(in_E={c.in_E}, flags={c.flags()})")
        rep = ineffective_preservation_check(
            left, pts, [isotropy_batch(apex, rng, x, isotropy) for x in pts])
        if rep.in_dotted_category is False:
            raise CompositionError(f"left leg {left.name} sends ineffective arrows to effective ones")
        return cls(apex, left, right, c, rep.in_dotted_category)


def identity_span(G: GroupoidModel, rng=None) -> Span:
    i = IdentityHom(G)
    return Span.make(i, i, rng)


def compose_spans(outer: Span, inner: Span, rng=None) -> Span:
    """outer = (Gamma' -> Delta, Gamma' ~> Gamma), inner = (Delta' -> Sigma, Delta' ~> Delta)."""
    if inner.right.codomain is not outer.left.codomain:
        raise CompositionError("inner right leg must land where the outer left leg lands")
    Z, pr_outer, pr_inner = build_weak_pullback(outer.left, inner.right)
    left = CompositeHom([pr_inner, inner.left])
    right = CompositeHom([pr_outer, outer.right])
    return Span.make(left, right, rng)


@dataclass
class SpanEquivalenceResult:
    equivalent: Optional[bool]
    left_deviation: Optional[float]
    right_deviation: Optional[float]
    through_in_E: Optional[bool]


def span_equivalence_check(s1: Span, s2: Span, bridge: tuple, arrow_samples: Sequence,
                           tau_left: NaturalTransformationWitness | None = None,
                           tau_right: NaturalTransformationWitness | None = None,
                           rng=None) -> SpanEquivalenceResult:
    """bridge = (u1: B -> apex1, u2: B -> apex2); both triangles must commute up to
    natural congruence on the sampled arrows of B."""
    u1, u2 = bridge
    if u1.domain is not u2.domain:
        raise InputError("bridge homomorphisms must share their domain")
    if u1.codomain is not s1.apex or u2.codomain is not s2.apex:
        raise InputError("bridge homomorphisms must land on the span apexes")
    rng = np.random.default_rng(0) if rng is None else rng
    through = CompositeHom([u1, s1.right])
    pts = [u1.domain.sample_point(rng) for _ in range(6)]
    through_E = classify(through, pts, rng).in_E
    if tau_left is None or tau_right is None:
        return SpanEquivalenceResult(None, None, None, through_E)
    l = natural_congruence_check(tau_left, CompositeHom([u1, s1.left]),
                                 CompositeHom([u2, s2.left]), arrow_samples)
    r = natural_congruence_check(tau_right, through, CompositeHom([u2, s2.right]), arrow_samples)
    return SpanEquivalenceResult(tri_and(l.passed, r.passed, through_E), l.max_deviation,
                                 r.max_deviation, through_E)


# ------------------------------------------------------------- axiom checks

@dataclass
class AxiomInstanceReport:
    name: str
    verified: Optional[bool]
    flags: dict
    residuals: dict
    notes: list = field(default_factory=list)
    details: dict = field(default_factory=dict, repr=False)


def axiom_II_instance(psi: GroupoidHom, phi: GroupoidHom, rng=None, fuzz_samples: int = 1000,
                      preservation_samples: int = 50, points: int = 6) -> AxiomInstanceReport:
    """Weak pullback square for psi against phi in E; pr_Delta must be in E and
    pr_Gamma must preserve ineffective arrows."""
    rng = np.random.default_rng(0) if rng is None else rng
    Z, pr_d, pr_g = build_weak_pullback(psi, phi)
    fuzz = check_groupoid_axioms(Z, fuzz_samples, int(rng.integers(2**31)))
    pts = [Z.sample_point(rng) for _ in range(points)]
    c = classify(pr_d, pts, rng)
    pres_pts, pres_iso = [], []
    while sum(len(s) for s in pres_iso) < preservation_samples:
        z = Z.sample_point(rng)
        batch = isotropy_batch(Z, rng, z, 5)
        if not batch:
            break
        pres_pts.append(z)
        pres_iso.append(batch)
    pres = ineffective_preservation_check(pr_g, pres_pts, pres_iso)
    flags = {"pr_delta_in_E": c.in_E, "pr_delta_transversal": c.transversal,
             "pr_gamma_preserves_ineffective": pres.passed and pres.in_dotted_category is not False,
             "fuzz_max_residual_ok": fuzz.max_residual < Z.tol.map_abs_tol}
    residuals = {"fuzz_max_residual": fuzz.max_residual,
                 "preservation_arrows": pres.checked_arrows,
                 "max_upstairs_deviation": pres.max_upstairs_deviation}
    verified = tri_and(*flags.values())
    details = {"groupoid": Z, "projections": (pr_d, pr_g), "fuzz": fuzz, "classification": c,
               "preservation": pres}
    return AxiomInstanceReport("axiom II", verified, flags, residuals, [], details)


def axiom_III_instance(psi1: GroupoidHom, psi2: GroupoidHom, phi: GroupoidHom,
                       tau_prime: NaturalTransformationWitness, cover: dict,
                       tau: NaturalTransformationWitness, arrow_count: int = 200,
                       rng=None, extra_arrows: Sequence = ()) -> AxiomInstanceReport:
    """cover holds f, df, dim, sampler and optionally f_inverse for the cover map
    of the domain base; tau is the lifted congruence over the pullback."""
    rng = np.random.default_rng(0) if rng is None else rng
    G = psi1.domain
    P, pi = build_pullback(cover["f"], cover["df"], G, cover["dim"], cover.get("sampler"),
                           cover.get("f_inverse"))
    first = CompositeHom([pi, psi1])
    second = CompositeHom([pi, psi2])
    arrows = [P.sample_arrow(rng) for _ in range(arrow_count)]
    arrows += [P.sample_arrow(rng, np.asarray(x, float)) for x in extra_arrows]
    notes = []
    try:
        lifted = natural_congruence_check(tau, first, second, arrows)
    except RejectedWitnessError as exc:
        return AxiomInstanceReport("axiom III", False, {"lift_typed": False}, {}, [str(exc)])
    base_arrows = [pi.apply(a) for a in arrows]
    down = natural_congruence_check(tau_prime, CompositeHom([psi1, phi]),
                                    CompositeHom([psi2, phi]), base_arrows)
    # faithful transversality transfer on the sampled naturality defects
    D = psi1.codomain
    transfer_ok = True
    worst_transfer = 0.0
    for a in arrows:
        x, x2 = P.source(a), P.target(a)
        t_s, t_t = tau.tau(x), tau.tau(x2)
        h1 = D.compose(t_t, first.apply(a))
        h2 = D.compose(second.apply(a), t_s)
        d = D.compose(D.inverse(h2), h1)
        img_ineff = is_ineffective(phi.codomain, phi.apply(d))[0]
        ineff, dev = is_ineffective(D, d)
        if img_ineff and not ineff:
            transfer_ok = False
            worst_transfer = max(worst_transfer, dev)
    flags = {"lift_typed": True, "lifted_congruence": lifted.passed,
             "downstairs_congruence": down.passed, "transfer": transfer_ok}
    residuals = {"lifted_max_deviation": lifted.max_deviation,
                 "downstairs_max_deviation": down.max_deviation,
                 "transfer_max_deviation": worst_transfer}
    return AxiomInstanceReport("axiom III", tri_and(*flags.values()), flags, residuals, notes)


# ----------------------------------------------------------------- skeleton

@dataclass
class SkeletonPoint:
    x: object
    y: object
    theta_table: list  # (upstairs effect matrix, downstairs effect matrix)
    lam: np.ndarray
    equivariance_residual: float = 0.0


def _dedupe_table(table, bound):
    out = []
    for up, down in table:
        if not any(np.linalg.norm(up - u) <= bound and np.linalg.norm(down - d) <= bound
                   for u, d in out):
            out.append((up, down))
    return out


def skeleton_point(phi: GroupoidHom, x, isotropy_samples: Sequence) -> SkeletonPoint:
    G, D = phi.domain, phi.codomain
    src = transversal_space(G, x).quotient
    dst = transversal_space(D, phi.base_map(x)).quotient
    lam = transversal_map(phi, x, src, dst).matrix
    table = []
    worst = 0.0
    for g in isotropy_samples:
        up = effect(G, g, src).matrix
        down = effect(D, phi.apply(g), dst).matrix
        table.append((up, down))
        if lam.size:
            worst = max(worst, float(np.linalg.norm(lam @ up - down @ lam)))
    if worst > G.tol.map_abs_tol:
        raise MalformedSkeletonError(f"transversal map not equivariant (residual {worst:.3e})")
    table = [(np.eye(src.dim), np.eye(dst.dim))] + table
    return SkeletonPoint(x, phi.base_map(x), _dedupe_table(table, G.tol.map_abs_tol), lam, worst)


@dataclass
class SkeletonEquivalence:
    equivalent: bool
    lambda_deviation: float
    table_deviation: float
    unmatched: int


def skeleton_equivalence_check(p1: SkeletonPoint, p2: SkeletonPoint, G: GroupoidModel,
                               D: GroupoidModel, witness: tuple, bound: float | None = None
                               ) -> SkeletonEquivalence:
    """witness = (g in G(p1.x, p2.x), h in D(p1.y, p2.y))."""
    g, h = witness
    tol = G.tol
    bound = tol.map_abs_tol if bound is None else bound
    if not (G.points_equal(G.source(g), p1.x) and G.points_equal(G.target(g), p2.x)):
        raise RejectedWitnessError("g does not connect the two base points")
    if not (D.points_equal(D.source(h), p1.y) and D.points_equal(D.target(h), p2.y)):
        raise RejectedWitnessError("h does not connect the two image points")
    eg = arrow_effect(G, g).matrix
    eh = arrow_effect(D, h).matrix
    lam_dev = float(np.linalg.norm(p2.lam @ eg - eh @ p1.lam)) if p1.lam.size else 0.0
    eg_inv = np.linalg.inv(eg) if eg.size else eg
    eh_inv = np.linalg.inv(eh) if eh.size else eh
    worst = 0.0
    unmatched = 0
    for up, down in p1.theta_table:
        cu = eg @ up @ eg_inv
        cd = eh @ down @ eh_inv
        best = min((max(np.linalg.norm(cu - u2), np.linalg.norm(cd - d2))
                    for u2, d2 in p2.theta_table), default=np.inf)
        if best > bound:
            unmatched += 1
        else:
            worst = max(worst, float(best))
    ok = lam_dev <= bound and unmatched == 0
    return SkeletonEquivalence(ok, lam_dev, worst, unmatched)


def skeleton_compose(p: SkeletonPoint, q: SkeletonPoint, D: GroupoidModel) -> SkeletonPoint:
    """q after p; D is the groupoid carrying p.y = q.x."""
    if not D.points_equal(p.y, q.x):
        raise InputError("skeleton points do not compose: base points differ")
    bound = D.tol.map_abs_tol
    table = []
    for up, mid in p.theta_table:
        for mid2, down in q.theta_table:
            if np.linalg.norm(mid - mid2) <= bound:
                table.append((up, down))
                break
    lam = q.lam @ p.lam
    return SkeletonPoint(p.x, q.y, _dedupe_table(table, bound), lam)


@dataclass
class ModelIsomorphismReport:
    passed: Optional[bool]
    min_singular_value: float
    max_condition_number: float
    theta_injective: bool
    theta_surjective: bool
    points: int


def model_isomorphism_check(phi: GroupoidHom, sample_points: Sequence,
                            isotropy_samples: Sequence[Sequence],
                            codomain_isotropy: Sequence[Sequence]) -> ModelIsomorphismReport:
    G, D = phi.domain, phi.codomain
    bound = G.tol.map_abs_tol
    min_sv = np.inf
    max_cond = 0.0
    inj = surj = True
    lam_ok = True
    for x, ups, downs in zip(sample_points, isotropy_samples, codomain_isotropy):
        src = transversal_space(G, x).quotient
        dst = transversal_space(D, phi.base_map(x)).quotient
        lam = transversal_map(phi, x, src, dst)
        sv = lam.singular_values()
        if src.dim != dst.dim:
            lam_ok = False
            min_sv = 0.0
            max_cond = np.inf
        elif src.dim:
            smin = float(sv[-1])
            min_sv = min(min_sv, smin)
            if smin <= G.tol.rank_rel_tol * src.dim * max(1.0, float(sv[0])):
                lam_ok = False
                max_cond = np.inf
            else:
                max_cond = max(max_cond, float(sv[0] / smin))
        pairs = [(np.eye(src.dim), np.eye(dst.dim))]
        pairs += [(effect(G, g, src).matrix, effect(D, phi.apply(g), dst).matrix) for g in ups]
        for i, (u1, d1) in enumerate(pairs):
            for u2, d2 in pairs[i + 1:]:
                if np.linalg.norm(d1 - d2) <= bound and np.linalg.norm(u1 - u2) > bound:
                    inj = False
        images = [d for _, d in pairs]
        for h in downs:
            e = effect(D, h, dst).matrix
            if min(np.linalg.norm(e - d) for d in images) > bound:
                surj = False
    if not np.isfinite(min_sv):
        min_sv = float("nan")
    return ModelIsomorphismReport(lam_ok and inj and surj, min_sv, max_cond, inj, surj,
                                  len(sample_points))
