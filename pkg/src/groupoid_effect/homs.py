"""Homomorphisms of the concrete groupoids, their transversal maps, the
witness-based classification, and natural congruences."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .effect import arrow_effect, effect, is_ineffective, transversal_space
from .errors import (ConfigurationError, InputError, NotWellDefinedError, RejectedWitnessError)
from .groupoid import (ActionArrow, GroupoidModel, PullbackGroupoid, QuotientArrow,
                       QuotientGroupoid, WeakPullbackArrow, WeakPullbackGroupoid,
                       WeakPullbackPoint)
from .numlin import QuotientLinearMap, induced_quotient_map, null_space, numeric_rank

__all__ = [
    "HomWitnesses", "GroupoidHom", "TranslationHom", "group_hom", "PullbackProjection",
    "WeakPullbackProjection", "QuotientProjection", "IdentityHom", "CompositeHom", "compose_homs",
    "HomClassification", "NaturalTransformationWitness", "CongruenceResult",
    "transversal_map", "intertwining_check", "classify", "ineffective_preservation_check",
    "natural_congruence_check", "congruence_obstruction", "abelian_obstruction",
    "natural_transformation_effect_check", "orbit_map_check", "hom_jacobian_fd_check", "tri_and",
]


@dataclass
class HomWitnesses:
    """Evidence used by ``classify``.

    surjectivity(y) -> (x, h) with h in Delta(y, f(x)).
    lift(x, x2, h) -> g in Gamma(x, x2) with phi(g) = h, for h in Delta(f x, f x2).
    lift_cases(rng) -> list of (x, x2, h) on which lift is exercised.
    """

    surjectivity: Optional[Callable] = None
    lift: Optional[Callable] = None
    lift_cases: Optional[Callable] = None


def _vec(x):
    return np.asarray(x, dtype=float).ravel()


class GroupoidHom:
    kind = "abstract"

    def __init__(self, domain: GroupoidModel, codomain: GroupoidModel, name="",
                 witnesses: HomWitnesses | None = None):
        self.domain = domain
        self.codomain = codomain
        self.name = name or self.kind
        self.witnesses = witnesses if witnesses is not None else HomWitnesses()

    def apply(self, a):
        raise NotImplementedError

    def base_map(self, x):
        raise NotImplementedError

    def base_jacobian(self, x) -> np.ndarray:
        raise NotImplementedError

    def arrow_jacobian(self, a) -> np.ndarray:
        raise NotImplementedError

    def default_lift_cases(self, rng, count=20):
        """(s a, t a, phi(a)) for sampled domain arrows a."""
        out = []
        for _ in range(count):
            a = self.domain.sample_arrow(rng)
            out.append((self.domain.source(a), self.domain.target(a), self.apply(a)))
        return out

    def lift_cases(self, rng, count=20):
        if self.witnesses.lift_cases is not None:
            return list(self.witnesses.lift_cases(rng))
        return self.default_lift_cases(rng, count)

    def __repr__(self):
        return f"<{self.kind} {self.name}: {self.domain.name} -> {self.codomain.name}>"


def _rep(a):
    return a.rep if isinstance(a, QuotientArrow) else a


class TranslationHom(GroupoidHom):
    """(g, x) -> (group_map(g, x), f(x)) between translation type groupoids.

    group_jacobian(g, x) returns (G_xi, G_x): the body-coordinate derivative
    of the group part with respect to the domain body coordinates and x.
    """

    kind = "TranslationHom"

    def __init__(self, domain, codomain, group_map, group_jacobian, f, df, name="",
                 witnesses=None):
        super().__init__(domain, codomain, name, witnesses)
        self.group_map = group_map
        self.group_jacobian = group_jacobian
        self.f = f
        self.df = df

    def base_map(self, x):
        return _vec(self.f(_vec(x)))

    def base_jacobian(self, x):
        return np.asarray(self.df(_vec(x)), float).reshape(self.codomain.base_dim,
                                                            self.domain.base_dim)

    def apply(self, a):
        r = _rep(a)
        out = ActionArrow(np.asarray(self.group_map(r.g, r.x), float), self.base_map(r.x))
        if isinstance(self.codomain, QuotientGroupoid):
            return self.codomain.cls(out)
        return out

    def arrow_jacobian(self, a):
        r = _rep(a)
        Gxi, Gx = self.group_jacobian(r.g, r.x)
        dc = self.codomain.arrow_dim - self.codomain.base_dim
        dd = self.domain.arrow_dim - self.domain.base_dim
        top = np.hstack([np.asarray(Gxi, float).reshape(dc, dd),
                         np.asarray(Gx, float).reshape(dc, self.domain.base_dim)])
        bot = np.hstack([np.zeros((self.codomain.base_dim, dd)), self.base_jacobian(r.x)])
        return np.vstack([top, bot])


def group_hom(domain, codomain, theta, dtheta, f, df, name="", witnesses=None) -> TranslationHom:
    """theta x f for a Lie group homomorphism theta with algebra differential dtheta."""
    dtheta = np.asarray(dtheta, float)
    nx = domain.base_dim
    return TranslationHom(domain, codomain, lambda g, x: theta(g),
                          lambda g, x: (dtheta, np.zeros((dtheta.shape[0], nx))), f, df,
                          name, witnesses)


class PullbackProjection(GroupoidHom):
    kind = "PullbackProjection"

    def __init__(self, P: PullbackGroupoid, surjectivity=None, name=""):
        w = HomWitnesses(surjectivity=surjectivity,
                         lift=lambda x, x2, h: P.arrow(x2, h, x))
        super().__init__(P, P.delta, name or "pi", w)

    def set_surjectivity(self, fn):
        self.witnesses.surjectivity = fn
        return self

    def apply(self, a):
        return a.h

    def base_map(self, x):
        return self.domain.fmap(x)

    def base_jacobian(self, x):
        return self.domain.Df(x)

    def arrow_jacobian(self, a):
        n, p = self.domain.base_dim, self.codomain.arrow_dim
        return np.hstack([np.zeros((p, n)), np.eye(p), np.zeros((p, n))])


class WeakPullbackProjection(GroupoidHom):
    """pr_Delta or pr_Gamma; witnesses are transported from the opposite leg."""

    kind = "WeakPullbackProjection"

    def __init__(self, Z: WeakPullbackGroupoid, side: str):
        if side not in ("delta", "gamma"):
            raise InputError("side must be 'delta' or 'gamma'")
        self.side = side
        cod = Z.delta if side == "delta" else Z.gamma
        super().__init__(Z, cod, f"pr_{side}")
        self.witnesses = self._transported_witnesses()

    def _transported_witnesses(self) -> HomWitnesses:
        Z = self.domain
        S = Z.sigma
        other = Z.phi if self.side == "delta" else Z.psi
        ow = getattr(other, "witnesses", HomWitnesses())
        surj = lift = None
        if self.side == "delta":
            if ow.surjectivity is not None:
                def surj(y):
                    return Z.point_over(y), Z.delta.unit(y)
            if ow.lift is not None:
                def lift(z, z2, h):
                    target = S.compose(S.inverse(z2.k), S.compose(Z.psi.apply(h), z.k))
                    return WeakPullbackArrow(h, z.k, ow.lift(z.x, z2.x, target))
        else:
            if ow.surjectivity is not None:
                def surj(x):
                    y, hh = ow.surjectivity(Z.phi.base_map(x))
                    return WeakPullbackPoint(y, hh, x), Z.gamma.unit(x)
            if ow.lift is not None:
                def lift(z, z2, g):
                    target = S.compose(z2.k, S.compose(Z.phi.apply(g), S.inverse(z.k)))
                    return WeakPullbackArrow(ow.lift(z.y, z2.y, target), z.k, g)
        return HomWitnesses(surj, lift)

    def apply(self, a):
        return a.h if self.side == "delta" else a.g

    def base_map(self, z):
        return z.y if self.side == "delta" else z.x

    def _select(self, sizes):
        nd, nk, ng = sizes
        out = np.zeros((nd if self.side == "delta" else ng, nd + nk + ng))
        if self.side == "delta":
            out[:, :nd] = np.eye(nd)
        else:
            out[:, nd + nk:] = np.eye(ng)
        return out

    def base_jacobian(self, z):
        Z = self.domain
        return self._select((Z.delta.base_dim, Z.sigma.arrow_dim, Z.gamma.base_dim))

    def arrow_jacobian(self, a):
        Z = self.domain
        return self._select((Z.delta.arrow_dim, Z.sigma.arrow_dim, Z.gamma.arrow_dim))


class QuotientProjection(GroupoidHom):
    kind = "QuotientProjection"

    def __init__(self, Q: QuotientGroupoid, name=""):
        w = HomWitnesses(surjectivity=lambda y: (_vec(y), Q.unit(y)),
                         lift=lambda x, x2, h: Q.base.arrow(h.rep.g, h.rep.x))
        super().__init__(Q.base, Q, name or "quotient", w)

    def apply(self, a):
        return self.codomain.cls(a)

    def base_map(self, x):
        return _vec(x)

    def base_jacobian(self, x):
        return np.eye(self.domain.base_dim)

    def arrow_jacobian(self, a):
        return np.eye(self.domain.arrow_dim)


class IdentityHom(GroupoidHom):
    kind = "Identity"

    def __init__(self, G: GroupoidModel):
        w = HomWitnesses(surjectivity=lambda y: (y, G.unit(y)), lift=lambda x, x2, h: h)
        super().__init__(G, G, "id", w)

    def apply(self, a):
        return a

    def base_map(self, x):
        return x

    def base_jacobian(self, x):
        return np.eye(self.domain.base_dim)

    def arrow_jacobian(self, a):
        return np.eye(self.domain.arrow_dim)


class CompositeHom(GroupoidHom):
    """homs[-1] after ... after homs[0]."""

    kind = "Composite"

    def __init__(self, homs: Sequence[GroupoidHom], name=""):
        homs = list(homs)
        if not homs:
            raise InputError("empty composite")
        for a, b in zip(homs, homs[1:]):
            if a.codomain is not b.domain:
                raise ConfigurationError(f"cannot compose {a.name} with {b.name}")
        self.homs = homs
        super().__init__(homs[0].domain, homs[-1].codomain,
                         name or " o ".join(h.name for h in reversed(homs)))
        self.witnesses = self._composed_witnesses()

    def _composed_witnesses(self) -> HomWitnesses:
        ws = [h.witnesses for h in self.homs]
        surj = lift = None
        if all(w.surjectivity is not None for w in ws):
            def surj(z):
                h_total = None
                cur = z
                # walk down the chain from the last hom
                for i in range(len(self.homs) - 1, -1, -1):
                    x, h = self.homs[i].witnesses.surjectivity(cur)
                    # push h through the later homs so it lives in the final codomain
                    for later in self.homs[i + 1:]:
                        h = later.apply(h)
                    cod = self.codomain
                    h_total = h if h_total is None else cod.compose(h, h_total)
                    cur = x
                return cur, h_total
        if all(w.lift is not None for w in ws):
            def lift(x, x2, h):
                xs = [x]
                x2s = [x2]
                for hom in self.homs[:-1]:
                    xs.append(hom.base_map(xs[-1]))
                    x2s.append(hom.base_map(x2s[-1]))
                for i in range(len(self.homs) - 1, -1, -1):
                    h = self.homs[i].witnesses.lift(xs[i], x2s[i], h)
                return h
        return HomWitnesses(surj, lift)

    def apply(self, a):
        for h in self.homs:
            a = h.apply(a)
        return a

    def base_map(self, x):
        for h in self.homs:
            x = h.base_map(x)
        return x

    def base_jacobian(self, x):
        J = np.eye(self.domain.base_dim)
        for h in self.homs:
            J = h.base_jacobian(x) @ J
            x = h.base_map(x)
        return J

    def arrow_jacobian(self, a):
        J = np.eye(self.domain.arrow_dim)
        for h in self.homs:
            J = h.arrow_jacobian(a) @ J
            a = h.apply(a)
        return J


def compose_homs(*homs, name="") -> CompositeHom:
    """compose_homs(f, g) is g after f."""
    return CompositeHom(homs, name)


# ------------------------------------------------------------- transversal maps

def transversal_map(phi: GroupoidHom, x, src=None, dst=None) -> QuotientLinearMap:
    """Map induced by the base Jacobian on transversal spaces; raises
    NotWellDefinedError when longitudinal spaces are not preserved."""
    src = transversal_space(phi.domain, x).quotient if src is None else src
    dst = transversal_space(phi.codomain, phi.base_map(x)).quotient if dst is None else dst
    return induced_quotient_map(phi.base_jacobian(x), src, dst, phi.domain.tol)


def intertwining_check(phi: GroupoidHom, x, isotropy_samples: Sequence) -> float:
    src = transversal_space(phi.domain, x).quotient
    dst = transversal_space(phi.codomain, phi.base_map(x)).quotient
    lam = transversal_map(phi, x, src, dst).matrix
    worst = 0.0
    for g in isotropy_samples:
        up = effect(phi.domain, g, src).matrix
        down = effect(phi.codomain, phi.apply(g), dst).matrix
        if lam.size:
            worst = max(worst, float(np.linalg.norm(lam @ up - down @ lam)))
    return worst


# -------------------------------------------------------------- classification

def tri_and(*flags):
    if any(f is False for f in flags):
        return False
    if any(f is None for f in flags):
        return None
    return True


@dataclass
class HomClassification:
    hom: str
    in_dotted_category: Optional[bool] = None
    transversal: Optional[bool] = None
    completely_transversal: Optional[bool] = None
    cinfty_full: Optional[bool] = None
    faithful_at_samples: Optional[bool] = None
    faithfully_transversal: Optional[bool] = None
    weak_equivalence: Optional[bool] = None
    in_E: Optional[bool] = None
    evidence: dict = field(default_factory=dict)

    FLAGS = ("in_dotted_category", "transversal", "completely_transversal", "cinfty_full",
             "faithful_at_samples", "faithfully_transversal", "weak_equivalence", "in_E")

    def flags(self) -> dict:
        return {k: getattr(self, k) for k in self.FLAGS}

    def consistent(self) -> bool:
        """in_E implies transversal; a weak equivalence is faithfully transversal."""
        if self.in_E is True and self.transversal is False:
            return False
        if self.weak_equivalence is True and self.faithfully_transversal is False:
            return False
        return True


def transversality_rank(phi: GroupoidHom, x, h) -> tuple:
    """(rank of d(s o pr2) on T(X x_{f,t} Delta) at (x, h), dim T_{s h} Delta-base)."""
    D = phi.codomain
    BX = phi.domain.base_tangent(x).basis
    TH = D.arrow_tangent(h)
    M = np.hstack([phi.base_jacobian(x) @ BX, -D.dt(h) @ TH])
    N = null_space(M, phi.domain.tol, ncols=M.shape[1])
    image = D.ds(h) @ TH @ N[BX.shape[1]:]
    return numeric_rank(image, phi.domain.tol), D.base_tangent(D.source(h)).dim


def _witness_point_ok(G, p, q) -> bool:
    return G.points_equal(p, q)


def check_surjectivity_witness(phi: GroupoidHom, y):
    """Residual of the witness at y, or None without a witness."""
    w = phi.witnesses.surjectivity
    if w is None:
        return None
    D = phi.codomain
    x, h = w(y)
    return max(D.point_distance(D.source(h), y), D.point_distance(D.target(h), phi.base_map(x)))


def check_lift_witness(phi: GroupoidHom, x, x2, h):
    w = phi.witnesses.lift
    if w is None:
        return None
    G, D = phi.domain, phi.codomain
    g = w(x, x2, h)
    return max(G.point_distance(G.source(g), x), G.point_distance(G.target(g), x2),
               D.arrow_distance(phi.apply(g), h))


def classify(phi: GroupoidHom, sample_points: Sequence, rng=None, codomain_points=None,
             isotropy_per_point: int = 4) -> HomClassification:
    rng = np.random.default_rng(0) if rng is None else rng
    G, D = phi.domain, phi.codomain
    tol = G.tol
    out = HomClassification(phi.name)
    ev = out.evidence

    # transversality: rank witness at the unit over f(x) and at a random arrow into f(x)
    deficit = 0
    for x in sample_points:
        y = phi.base_map(x)
        hs = [D.unit(y), D.inverse(D.sample_arrow(rng, y))]
        for h in hs:
            r, n = transversality_rank(phi, x, h)
            deficit = max(deficit, n - r)
    out.transversal = deficit == 0
    ev["transversal_rank_deficit"] = int(deficit)

    # complete transversality: surjectivity witnesses at sampled codomain points
    if codomain_points is None:
        codomain_points = [D.sample_point(rng) for _ in range(len(sample_points))]
    if phi.witnesses.surjectivity is None:
        surj = None
        ev["surjectivity"] = "no witness"
    else:
        worst = max((check_surjectivity_witness(phi, y) for y in codomain_points), default=0.0)
        ev["surjectivity_residual"] = worst
        surj = True if worst <= tol.map_abs_tol * 10 else None
        if surj is None:
            ev["surjectivity"] = "witness rejected"
        else:
            ev["surjectivity_points"] = len(codomain_points)
    out.completely_transversal = tri_and(out.transversal, surj)

    # C-infinity fullness: supplied lifts checked against the defining square
    if phi.witnesses.lift is None:
        out.cinfty_full = None
        ev["lift"] = "no witness"
    else:
        cases = phi.lift_cases(rng)
        worst = max((check_lift_witness(phi, *c) for c in cases), default=0.0)
        ev["lift_residual"] = worst
        ev["lift_cases"] = len(cases)
        out.cinfty_full = True if worst <= tol.map_abs_tol * 10 else None
        if out.cinfty_full is None:
            ev["lift"] = "witness rejected"

    # isotropy based flags
    faithful = True
    dotted = True
    have_iso = False
    min_sv = np.inf
    ft = True
    for x in sample_points:
        src = transversal_space(G, x).quotient
        dst = transversal_space(D, phi.base_map(x)).quotient
        try:
            lam = transversal_map(phi, x, src, dst)
            if src.dim:
                sv = lam.singular_values()
                smin = sv[-1] if sv.size == src.dim else 0.0
                if dst.dim < src.dim:
                    smin = 0.0
                min_sv = min(min_sv, float(smin))
                bound = tol.rank_rel_tol * max(lam.matrix.shape) * max(1.0, float(sv[0]) if sv.size else 1.0)
                if smin <= bound:
                    ft = False
        except NotWellDefinedError as exc:
            ft = False
            ev["transversal_map_violation"] = exc.residual
        iso = []
        for _ in range(isotropy_per_point):
            g = G.sample_isotropy(rng, x)
            if g is not None:
                iso.append(g)
        if iso:
            have_iso = True
        for g in iso:
            img = phi.apply(g)
            if D.is_unit(img) and not G.is_unit(g):
                faithful = False
            if is_ineffective(G, g, src)[0] and not is_ineffective(D, img, dst)[0]:
                dotted = False
        for i, g1 in enumerate(iso):
            for g2 in iso[i + 1:]:
                if D.arrows_equal(phi.apply(g1), phi.apply(g2)) and not G.arrows_equal(g1, g2):
                    faithful = False
    out.faithfully_transversal = ft
    ev["min_singular_value"] = None if not np.isfinite(min_sv) else min_sv
    out.faithful_at_samples = faithful if have_iso else None
    out.in_dotted_category = dotted if have_iso else None
    out.in_E = tri_and(out.cinfty_full, out.completely_transversal)
    out.weak_equivalence = tri_and(out.transversal, out.faithfully_transversal, out.cinfty_full,
                                   out.faithful_at_samples, out.completely_transversal)
    return out


@dataclass
class PreservationReport:
    points: int
    violations: list
    in_dotted_category: Optional[bool]
    equivalence_holds: Optional[bool]
    max_upstairs_deviation: float
    max_downstairs_deviation: float
    checked_arrows: int

    @property
    def passed(self) -> bool:
        return not self.violations


def ineffective_preservation_check(phi: GroupoidHom, sample_points: Sequence,
                                   isotropy_samples: Sequence[Sequence]) -> PreservationReport:
    """Check the implications between surjective / injective transversal maps and
    preservation of ineffective arrows at each sampled point."""
    G, D = phi.domain, phi.codomain
    tol = G.tol
    violations = []
    dotted = True
    equiv = None
    up_max = down_max = 0.0
    count = 0
    for x, samples in zip(sample_points, isotropy_samples):
        src = transversal_space(G, x).quotient
        dst = transversal_space(D, phi.base_map(x)).quotient
        lam = transversal_map(phi, x, src, dst).matrix
        r = numeric_rank(lam, tol) if lam.size else 0
        surjective = r == dst.dim
        injective = r == src.dim
        for g in samples:
            count += 1
            up, du = is_ineffective(G, g, src)
            down, dd = is_ineffective(D, phi.apply(g), dst)
            up_max, down_max = max(up_max, du), max(down_max, dd)
            if up and not down:
                dotted = False
                if surjective:
                    violations.append(("surjective map but ineffective image effective", du, dd))
            if down and not up and injective:
                violations.append(("injective map but effective arrow maps to ineffective", du, dd))
            if surjective and injective:
                equiv = (equiv is not False) and (up == down)
    return PreservationReport(len(sample_points), violations, dotted if count else None, equiv,
                              up_max, down_max, count)


# ------------------------------------------------------------ natural congruence

@dataclass
class NaturalTransformationWitness:
    tau: Callable
    mode: str = "congruence"

    def __post_init__(self):
        if self.mode not in ("exact", "congruence"):
            raise InputError("mode must be 'exact' or 'congruence'")


@dataclass
class CongruenceResult:
    passed: bool
    max_deviation: float
    deviations: list
    mode: str


def _check_tau(tau_fn, phi, psi, x):
    D = phi.codomain
    t = tau_fn(x)
    r = max(D.point_distance(D.source(t), phi.base_map(x)),
            D.point_distance(D.target(t), psi.base_map(x)))
    if r > D.tol.map_abs_tol * max(1.0, D._point_scale(phi.base_map(x))):
        raise RejectedWitnessError(f"tau(x) is not an arrow phi(x) -> psi(x) (residual {r:.3e})")
    return t


def _defect(D, phi, psi, t_s, t_t, g):
    """[psi(g) tau(s g)]^-1 [tau(t g) phi(g)], an isotropic arrow at phi(s g)."""
    lhs = D.compose(t_t, phi.apply(g))
    rhs = D.compose(psi.apply(g), t_s)
    d = D.compose(D.inverse(rhs), lhs)
    if not D.is_isotropic(d):
        raise RejectedWitnessError(
            f"naturality defect is not isotropic (residual {D.isotropy_residual(d):.3e})")
    return d


def natural_congruence_check(tau: NaturalTransformationWitness, phi: GroupoidHom,
                             psi: GroupoidHom, arrow_samples: Sequence) -> CongruenceResult:
    if phi.domain is not psi.domain or phi.codomain is not psi.codomain:
        raise ConfigurationError("phi and psi must share domain and codomain")
    G, D = phi.domain, phi.codomain
    devs = []
    for g in arrow_samples:
        t_s = _check_tau(tau.tau, phi, psi, G.source(g))
        t_t = _check_tau(tau.tau, phi, psi, G.target(g))
        d = _defect(D, phi, psi, t_s, t_t, g)
        if tau.mode == "exact":
            devs.append(D.arrow_distance(d, D.unit(D.source(d))))
        else:
            devs.append(is_ineffective(D, d)[1])
    worst = max(devs, default=0.0)
    return CongruenceResult(worst <= D.tol.map_abs_tol, worst, devs, tau.mode)


def congruence_obstruction(phi: GroupoidHom, psi: GroupoidHom, x, g, candidates: Sequence,
                           mode: str = "exact") -> Optional[bool]:
    """True iff some candidate h in Delta(phi x, psi x) has h phi(g) = psi(g) h
    (modulo ineffective arrows in congruence mode); None without candidates."""
    if not candidates:
        return None
    D = phi.codomain
    pg, qg = phi.apply(g), psi.apply(g)
    for h in candidates:
        d = D.compose(D.inverse(D.compose(qg, h)), D.compose(h, pg))
        if mode == "exact":
            ok = D.arrows_equal(d, D.unit(D.source(d)))
        else:
            ok = is_ineffective(D, d)[0]
        if ok:
            return True
    return False


def abelian_obstruction(phi: GroupoidHom, psi: GroupoidHom, g) -> bool:
    """Closed form of the exact search when phi(x) = psi(x) and the candidates
    commute with phi(g), psi(g): a witness exists iff phi(g) = psi(g)."""
    return phi.codomain.arrows_equal(phi.apply(g), psi.apply(g))


def natural_transformation_effect_check(tau: NaturalTransformationWitness, phi: GroupoidHom,
                                        psi: GroupoidHom, sample_points: Sequence) -> float:
    D = phi.codomain
    worst = 0.0
    for x in sample_points:
        t = _check_tau(tau.tau, phi, psi, x)
        src = transversal_space(phi.domain, x).quotient
        qa = transversal_space(D, phi.base_map(x)).quotient
        qb = transversal_space(D, psi.base_map(x)).quotient
        e = arrow_effect(D, t, qa, qb).matrix
        lhs = e @ transversal_map(phi, x, src, qa).matrix
        rhs = transversal_map(psi, x, src, qb).matrix
        if lhs.size:
            worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return worst


@dataclass
class OrbitMapReport:
    injective: Optional[bool]
    surjective: Optional[bool]
    pairs_checked: int
    points_checked: int
    detail: dict = field(default_factory=dict)

    @property
    def bijective(self) -> Optional[bool]:
        return tri_and(self.injective, self.surjective)


def orbit_map_check(phi: GroupoidHom, point_pairs: Sequence, codomain_points: Sequence = ()) -> OrbitMapReport:
    G, D = phi.domain, phi.codomain
    injective = True
    merged = 0
    for x, x2 in point_pairs:
        down = D.same_orbit(phi.base_map(x), phi.base_map(x2))
        up = G.same_orbit(x, x2)
        if down is None or up is None:
            injective = None
            break
        if down and not up:
            injective = False
            merged += 1
    surjective = None
    worst = None
    if phi.witnesses.surjectivity is not None and len(codomain_points):
        worst = max(check_surjectivity_witness(phi, y) for y in codomain_points)
        surjective = True if worst <= G.tol.map_abs_tol * 10 else None
    return OrbitMapReport(injective, surjective, len(point_pairs), len(codomain_points),
                          {"merged_pairs": merged, "surjectivity_residual": worst})


# ---------------------------------------------------------- finite differences

def hom_jacobian_fd_check(phi: GroupoidHom, x, g=None) -> dict:
    """Central-difference residuals of the analytic base Jacobian and, for
    translation homs, of the group part of the arrow Jacobian at (g, x)."""
    tol = phi.domain.tol
    h = tol.fd_step
    x = _vec(x)
    J = phi.base_jacobian(x)
    fd = np.column_stack([(_vec(phi.base_map(x + h * e)) - _vec(phi.base_map(x - h * e))) / (2 * h)
                          for e in np.eye(x.size)])
    out = {"base_jacobian": float(np.max(np.abs(J - fd)))}
    if g is not None and isinstance(phi, TranslationHom):
        dom = phi.domain.base if isinstance(phi.domain, QuotientGroupoid) else phi.domain
        cod = phi.codomain.base if isinstance(phi.codomain, QuotientGroupoid) else phi.codomain
        gm = lambda gg, xx: np.asarray(phi.group_map(gg, xx), float)
        G0 = gm(g, x)
        G0inv = cod.group.invert(G0)
        Gxi, Gx = phi.group_jacobian(g, x)
        cols = []
        for i in range(dom.group.group_dim):
            e = np.zeros(dom.group.group_dim)
            e[i] = h
            dG = (gm(g @ dom.group.exp(e), x) - gm(g @ dom.group.exp(-e), x)) / (2 * h)
            cols.append(cod.group.algebra_coords(G0inv @ dG))
        for i in range(x.size):
            e = np.zeros(x.size)
            e[i] = h
            dG = (gm(g, x + e) - gm(g, x - e)) / (2 * h)
            cols.append(cod.group.algebra_coords(G0inv @ dG))
        if cols:
            fd_g = np.column_stack(cols)
            an = np.hstack([np.asarray(Gxi, float).reshape(cod.group.group_dim, -1),
                            np.asarray(Gx, float).reshape(cod.group.group_dim, -1)])
            out["group_jacobian"] = float(np.max(np.abs(an - fd_g))) if an.size else 0.0
    return out
