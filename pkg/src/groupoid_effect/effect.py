"""Longitudinal and transversal tangent spaces, effects of arrows, and
sampled effective isotropy models."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConsistencyError, NotWellDefinedError, PreconditionError
from .groupoid import GroupoidModel
from .numlin import (QuotientLinearMap, QuotientSpace, Subspace, induced_quotient_map,
                     quotient_space, span_columns)

__all__ = [
    "TransversalData", "Effect", "EffectiveIsotropyModel", "IsotropyPartition",
    "longitudinal_space", "transversal_space", "section_jacobian", "arrow_effect", "effect",
    "is_ineffective", "ineffective_subgroup_sample", "effective_infinitesimal_model",
    "effect_functoriality_check",
]


@dataclass(frozen=True)
class TransversalData:
    point: object
    longitudinal: Subspace
    quotient: QuotientSpace


@dataclass(frozen=True)
class Effect:
    arrow: object
    map: QuotientLinearMap

    @property
    def matrix(self) -> np.ndarray:
        return self.map.matrix

    @property
    def deviation(self) -> float:
        return self.map.deviation_from_identity()


@dataclass
class EffectiveIsotropyModel:
    point: object
    quotient: QuotientSpace
    effects: list = field(default_factory=list)  # (label, matrix)

    def matrices(self):
        return [m for _, m in self.effects]

    def index_of(self, M, bound: float) -> int:
        for i, (_, E) in enumerate(self.effects):
            if np.linalg.norm(E - M) <= bound:
                return i
        return -1

    def closure_residual(self) -> float:
        """Worst distance from a product of two members to the member set."""
        mats = self.matrices()
        worst = 0.0
        for A in mats:
            for B in mats:
                P = A @ B
                worst = max(worst, min(np.linalg.norm(P - E) for E in mats))
        return float(worst)


@dataclass
class IsotropyPartition:
    point: object
    ineffective: list
    effective: list
    deviations: list
    closure_residual: float


def longitudinal_space(G: GroupoidModel, x) -> Subspace:
    """Image of the target derivative on the source fiber at the unit."""
    u = G.unit(x)
    return span_columns(G.dt(u) @ G.fiber_basis(u), G.tol)


def transversal_space(G: GroupoidModel, x) -> TransversalData:
    L = longitudinal_space(G, x)
    T = G.base_tangent(x)
    Q = quotient_space(L, None if T.dim == T.ambient_dim else T, G.tol)
    return TransversalData(x, L, Q)


def section_jacobian(G: GroupoidModel, a) -> np.ndarray:
    """Derivative of t composed with a local section of s through a."""
    return G.dt(a) @ G.source_lift(a)


def arrow_effect(G: GroupoidModel, a, src: QuotientSpace | None = None,
                 dst: QuotientSpace | None = None) -> QuotientLinearMap:
    """Linear map T_bar(s a) -> T_bar(t a) induced by any arrow a."""
    src = transversal_space(G, G.source(a)).quotient if src is None else src
    dst = transversal_space(G, G.target(a)).quotient if dst is None else dst
    try:
        return induced_quotient_map(section_jacobian(G, a), src, dst, G.tol)
    except NotWellDefinedError as exc:
        raise ConsistencyError(f"arrow does not preserve longitudinal spaces: {exc}") from exc


def effect(G: GroupoidModel, g, quotient: QuotientSpace | None = None) -> Effect:
    r = G.isotropy_residual(g)
    if not G.is_isotropic(g):
        raise PreconditionError(f"arrow is not isotropic (residual {r:.3e})")
    if quotient is None:
        quotient = transversal_space(G, G.source(g)).quotient
    return Effect(g, arrow_effect(G, g, quotient, quotient))


def is_ineffective(G: GroupoidModel, g, quotient: QuotientSpace | None = None):
    """(flag, deviation) with deviation the spectral distance of the effect to the identity."""
    dev = effect(G, g, quotient).deviation
    return dev <= G.tol.map_abs_tol, dev


def ineffective_subgroup_sample(G: GroupoidModel, x, samples: Sequence) -> IsotropyPartition:
    Q = transversal_space(G, x).quotient
    ineff, eff, devs = [], [], []
    for g in samples:
        if not G.points_equal(G.source(g), x):
            raise PreconditionError("isotropy sample based at a different point")
        flag, dev = is_ineffective(G, g, Q)
        devs.append(dev)
        (ineff if flag else eff).append(g)
    closure = 0.0
    for a in ineff:
        for b in ineff:
            closure = max(closure, is_ineffective(G, G.compose(a, b), Q)[1])
    return IsotropyPartition(x, ineff, eff, devs, closure)


def effective_infinitesimal_model(G: GroupoidModel, x, samples: Sequence,
                                  labels: Sequence | None = None) -> EffectiveIsotropyModel:
    """Deduplicated effect matrices of the samples, identity first."""
    Q = transversal_space(G, x).quotient
    model = EffectiveIsotropyModel(x, Q, [("unit", np.eye(Q.dim))])
    bound = G.tol.map_abs_tol
    for i, g in enumerate(samples):
        M = effect(G, g, Q).matrix
        if model.index_of(M, bound) < 0:
            model.effects.append((labels[i] if labels is not None else f"s{i}", M))
    return model


def effect_functoriality_check(G: GroupoidModel, pairs: Sequence) -> float:
    """Max of |e(g2 g1) - e(g2) e(g1)| over pairs (g2, g1) isotropic at one point."""
    worst = 0.0
    for g2, g1 in pairs:
        Q = transversal_space(G, G.source(g1)).quotient
        lhs = effect(G, G.compose(g2, g1), Q).matrix
        rhs = effect(G, g2, Q).matrix @ effect(G, g1, Q).matrix
        worst = max(worst, float(np.linalg.norm(lhs - rhs)) if lhs.size else 0.0)
    return worst
