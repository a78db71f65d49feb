"""Concrete Lie groupoids with uniform structure maps and first-order data.

Every groupoid works in parameter coordinates.  Base points of translation
type groupoids are vectors in R^n; arrows are perturbed in body coordinates
of the group, (g exp(eps xi), x + eps dx), so an arrow tangent vector is the
stacked vector (xi, dx).  The first-order data each model exposes:

    ds(a), dt(a)      derivative of source / target (P_base x P_arr)
    fiber_basis(a)    basis of ker ds inside the arrow tangent space
    source_lift(a)    derivative of a local section of the source through a
    arrow_tangent(a)  basis of the arrow tangent space (constraints applied)
    base_tangent(x)   tangent space of the base at x (a Subspace)

Longitudinal spaces, effects and transversal maps are built from these in
the effect and homs modules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .errors import (CompositionError, ConfigurationError, ConsistencyError, InputError,
                     MalformedArrowError)
from .lie import (TWO_PI, Frequency, LieGroupModel, SmoothActionModel, parse_frequency,
                  trivial_action, translation_r)
from .numlin import DEFAULT_TOL, Subspace, ToleranceProfile, null_space

__all__ = [
    "ActionArrow", "QuotientArrow", "PullbackArrow", "WeakPullbackPoint", "WeakPullbackArrow",
    "GroupoidModel", "TranslationGroupoid", "GroupBundle", "QuotientGroupoid",
    "PullbackGroupoid", "WeakPullbackGroupoid", "RotationKernel",
    "build_translation", "build_group_bundle", "quotient_by_kernel", "build_pullback",
    "build_weak_pullback", "check_groupoid_axioms", "AxiomReport",
]


# ------------------------------------------------------------------ arrows

@dataclass(frozen=True)
class ActionArrow:
    g: np.ndarray
    x: np.ndarray


@dataclass(frozen=True)
class QuotientArrow:
    rep: ActionArrow
    theta: float  # normalized angle parameter, canonical for equality


@dataclass(frozen=True)
class PullbackArrow:
    xt: np.ndarray
    h: object
    xs: np.ndarray


@dataclass(frozen=True)
class WeakPullbackPoint:
    y: object
    k: object
    x: object


@dataclass(frozen=True)
class WeakPullbackArrow:
    h: object
    k: object
    g: object


def _vec(x) -> np.ndarray:
    return np.asarray(x, dtype=float).ravel()


def _dist(a, b) -> float:
    d = _vec(a) - _vec(b)
    return math.sqrt(float(d @ d))


# ------------------------------------------------------------- base class

class GroupoidModel:
    """Abstract interface shared by the five constructors."""

    kind: str = "abstract"
    base_dim: int
    arrow_dim: int
    tol: ToleranceProfile = DEFAULT_TOL
    name: str = ""

    # structure maps
    def source(self, a):
        raise NotImplementedError

    def target(self, a):
        raise NotImplementedError

    def compose(self, a2, a1):
        """Arrow a2 after a1; requires s(a2) = t(a1)."""
        raise NotImplementedError

    def inverse(self, a):
        raise NotImplementedError

    def unit(self, x):
        raise NotImplementedError

    # equality
    def point_distance(self, x, y) -> float:
        return _dist(x, y)

    def arrow_distance(self, a, b) -> float:
        raise NotImplementedError

    def _point_scale(self, x) -> float:
        return 1.0

    def points_equal(self, x, y) -> bool:
        return self.point_distance(x, y) <= self.tol.map_abs_tol * self._point_scale(x)

    def arrows_equal(self, a, b) -> bool:
        return self.arrow_distance(a, b) <= self.tol.map_abs_tol * self._point_scale(self.source(a))

    def isotropy_residual(self, a) -> float:
        return self.point_distance(self.source(a), self.target(a))

    def is_isotropic(self, a) -> bool:
        return self.isotropy_residual(a) <= self.tol.map_abs_tol * self._point_scale(self.source(a))

    def is_unit(self, a) -> bool:
        return self.arrows_equal(a, self.unit(self.source(a)))

    def _check_composable(self, a2, a1):
        r = self.point_distance(self.source(a2), self.target(a1))
        if r > self.tol.map_abs_tol * self._point_scale(self.target(a1)):
            raise CompositionError(f"{self.kind}: arrows not composable (residual {r:.3e})")

    # sampling and oracles
    def sample_point(self, rng):
        raise NotImplementedError

    def sample_arrow(self, rng, x=None):
        raise NotImplementedError

    def sample_isotropy(self, rng, x):
        """An isotropic arrow at x, or None when no stabilizer sampler is known."""
        return None

    def same_orbit(self, x, y) -> Optional[bool]:
        return None

    # first-order data
    def base_tangent(self, x) -> Subspace:
        return Subspace.full(self.base_dim)

    def arrow_tangent(self, a) -> np.ndarray:
        return np.eye(self.arrow_dim)

    def ds(self, a) -> np.ndarray:
        raise NotImplementedError

    def dt(self, a) -> np.ndarray:
        raise NotImplementedError

    def fiber_basis(self, a) -> np.ndarray:
        raise NotImplementedError

    def source_lift(self, a) -> np.ndarray:
        raise NotImplementedError

    def compose_jacobian(self, a2, a1):
        raise NotImplementedError(f"{self.kind} groupoids do not expose composition Jacobians")

    def retract(self, a, v):
        raise NotImplementedError

    def arrow_log(self, a, b) -> np.ndarray:
        """Coordinates v with retract(a, v) close to b (b near a)."""
        raise NotImplementedError

    def point_retract(self, x, v):
        return _vec(x) + _vec(v)

    def point_log(self, x, y) -> np.ndarray:
        return _vec(y) - _vec(x)

    def inverse_jacobian(self, a):
        raise NotImplementedError(f"{self.kind} groupoids do not expose inversion Jacobians")

    def __repr__(self):
        return f"<{self.kind} {self.name}>"


# ------------------------------------------------------ translation groupoid

class TranslationGroupoid(GroupoidModel):
    kind = "Translation"

    def __init__(self, group: LieGroupModel, action: SmoothActionModel,
                 point_sampler: Callable | None = None, orbit_oracle: Callable | None = None,
                 tol: ToleranceProfile = DEFAULT_TOL, name: str = ""):
        if action.group.group_dim != group.group_dim or action.group.matrix_size != group.matrix_size:
            raise ConfigurationError("action is defined for a different group")
        self.group = group
        self.action = action
        self.base_dim = action.base_dim
        self.arrow_dim = group.group_dim + action.base_dim
        self._point_sampler = point_sampler
        self._orbit_oracle = orbit_oracle
        self.tol = tol
        self.name = name or f"{group.name} x R^{self.base_dim}"

    def _point_scale(self, x) -> float:
        return max(1.0, float(np.linalg.norm(x)))

    def source(self, a):
        return a.x

    def target(self, a):
        return self.action.act(a.g, a.x)

    def compose(self, a2, a1):
        self._check_composable(a2, a1)
        return ActionArrow(self.group.multiply(a2.g, a1.g), a1.x)

    def inverse(self, a):
        return ActionArrow(self.group.invert(a.g), self.target(a))

    def unit(self, x):
        return ActionArrow(self.group.identity(), _vec(x).copy())

    def arrow(self, g, x):
        return ActionArrow(np.asarray(g, float), _vec(x).copy())

    def arrow_distance(self, a, b) -> float:
        return max(self.group.distance(a.g, b.g), _dist(a.x, b.x))

    def sample_point(self, rng):
        if self._point_sampler is not None:
            return _vec(self._point_sampler(rng))
        return rng.standard_normal(self.base_dim)

    def sample_arrow(self, rng, x=None):
        x = self.sample_point(rng) if x is None else _vec(x)
        return ActionArrow(self.group.sample(rng), x.copy())

    def sample_isotropy(self, rng, x):
        g = self.action.stabilizer_sample(rng, x, self.tol)
        return None if g is None else ActionArrow(np.asarray(g, float), _vec(x).copy())

    def same_orbit(self, x, y):
        if self._orbit_oracle is not None:
            return bool(self._orbit_oracle(_vec(x), _vec(y)))
        return self.action.same_orbit(x, y, self.tol)

    # first-order data in body coordinates (xi, dx)
    def _split(self):
        return self.group.group_dim, self.base_dim

    def ds(self, a):
        d, n = self._split()
        return np.hstack([np.zeros((n, d)), np.eye(n)])

    def dt(self, a):
        J = self.action.base_jacobian(a.g, a.x)
        return np.hstack([J @ self.action.generator_matrix(a.x), J])

    def fiber_basis(self, a):
        d, n = self._split()
        return np.vstack([np.eye(d), np.zeros((n, d))])

    def source_lift(self, a):
        d, n = self._split()
        return np.vstack([np.zeros((d, n)), np.eye(n)])

    def compose_jacobian(self, a2, a1):
        d, n = self._split()
        J2 = np.zeros((d + n, d + n))
        J2[:d, :d] = self.group.adjoint(self.group.invert(a1.g))
        return J2, np.eye(d + n)

    def inverse_jacobian(self, a):
        d, n = self._split()
        out = np.zeros((d + n, d + n))
        out[:d, :d] = -self.group.adjoint(a.g)
        out[d:, :] = self.dt(a)
        return out

    def retract(self, a, v):
        """Arrow reached from a along the body-coordinate vector v."""
        d, _ = self._split()
        v = _vec(v)
        return ActionArrow(a.g @ self.group.exp(v[:d]), a.x + v[d:])

    def arrow_log(self, a, b):
        d, _ = self._split()
        rel = self.group.invert(a.g) @ b.g
        xi = self.group.algebra_coords(np.real(scipy.linalg.logm(rel))) if d else np.zeros(0)
        return np.concatenate([xi, _vec(b.x) - _vec(a.x)])


class GroupBundle(TranslationGroupoid):
    """Trivial Lie group bundle: the translation groupoid of the trivial action."""

    kind = "GroupBundle"

    def __init__(self, group: LieGroupModel, base_dim: int, point_sampler=None,
                 tol: ToleranceProfile = DEFAULT_TOL, name: str = ""):
        super().__init__(group, trivial_action(group, base_dim), point_sampler, None, tol,
                         name or f"{group.name} bundle over R^{base_dim}")

    def target(self, a):
        return a.x

    def dt(self, a):
        return self.ds(a)


def build_translation(group, action, point_sampler=None, orbit_oracle=None,
                      tol=DEFAULT_TOL, name="") -> TranslationGroupoid:
    return TranslationGroupoid(group, action, point_sampler, orbit_oracle, tol, name)


def build_group_bundle(group, base_dim, point_sampler=None, tol=DEFAULT_TOL, name="") -> GroupBundle:
    return GroupBundle(group, base_dim, point_sampler, tol, name)


# ------------------------------------------------------------ rotation kernel

@dataclass(frozen=True)
class RotationKernel:
    """Totally isotropic subgroupoid of the rotation-action groupoid on C x R.

    With scale p/q the member angles at (z, t), omega(t) != 0, are the
    multiples of p 2pi/|omega(t)| when z != 0 and of (p/q) 2pi/|omega(t)|
    when z = 0; only theta = 0 where omega(t) = 0.  Scale 1 is the kernel
    of the rotation homomorphisms; at z != 0 larger periods than p would
    leave the isotropy, so only the fixed fiber z = 0 is refined.
    """

    omega: Frequency
    scale: Fraction = Fraction(1)
    tol: ToleranceProfile = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "omega", parse_frequency(self.omega))
        s = Fraction(self.scale).limit_denominator(10**6)
        if s <= 0:
            raise InputError("kernel scale must be positive")
        object.__setattr__(self, "scale", s)

    def on_fixed_fiber(self, x) -> bool:
        return float(np.linalg.norm(_vec(x)[:2])) <= self.tol.map_abs_tol

    def period(self, x) -> Optional[float]:
        """Spacing of member angles at x, or None where only theta = 0 belongs."""
        w = self.omega(_vec(x)[2])
        if w == 0.0:
            return None
        factor = self.scale if self.on_fixed_fiber(x) else Fraction(self.scale.numerator)
        return float(factor) * TWO_PI / abs(w)

    def normalize(self, theta: float, x) -> float:
        p = self.period(x)
        if p is None:
            return float(theta)
        r = math.fmod(float(theta), p)
        if r < 0:
            r += p
        if p - r <= self.tol.map_abs_tol * max(1.0, abs(theta)):
            r = 0.0
        return r

    def angle_distance(self, a: float, b: float, x) -> float:
        p = self.period(x)
        if p is None:
            return abs(a - b)
        r = math.fmod(abs(a - b), p)
        return min(r, p - r)

    def membership_residual(self, theta: float, x) -> float:
        return self.angle_distance(theta, 0.0, x)

    def contains(self, theta: float, x) -> bool:
        return self.membership_residual(theta, x) <= self.tol.map_abs_tol * max(1.0, abs(theta))

    def sample_member(self, rng, x, max_multiple=3) -> float:
        p = self.period(x)
        if p is None:
            return 0.0
        return int(rng.integers(-max_multiple, max_multiple + 1)) * p

    def section_limit_gap(self, theta0: float, x0, approach, steps=(1e-1, 1e-2, 1e-3, 1e-4)) -> float:
        """How far (theta0, x0) sits from limits of members over nearby points.

        ``approach`` is a direction in C x R along which x0 + h*approach is
        approached.  A member reachable by a continuous local section has a
        gap tending to zero; the last gap is returned.
        """
        x0 = _vec(x0)
        d = _vec(approach)
        gap = float("inf")
        for h in steps:
            xn = x0 + h * d
            p = self.period(xn)
            if p is None:
                gap = abs(theta0)
            else:
                m = round(theta0 / p)
                gap = abs(theta0 - m * p)
        return gap


# ----------------------------------------------------------- quotient groupoid

class QuotientGroupoid(GroupoidModel):
    """Rotation-action groupoid modulo a RotationKernel.

    Arrows keep their representative; the normalized angle decides equality.
    First-order data are those of the representative.
    """

    kind = "Quotient"

    def __init__(self, base: TranslationGroupoid, kernel: RotationKernel, point_sampler=None,
                 name=""):
        freq = base.action.frequency
        if freq is None:
            raise ConfigurationError("quotient_by_kernel needs the rotation action on C x R")
        if freq.spec != kernel.omega.spec:
            raise ConfigurationError(
                f"kernel frequency {kernel.omega.spec!r} does not match action frequency {freq.spec!r}")
        self.base = base
        self.kernel = kernel
        self.base_dim = base.base_dim
        self.arrow_dim = base.arrow_dim
        self.tol = base.tol
        self._point_sampler = point_sampler
        self.name = name or f"({base.name})/K[{kernel.scale}]"

    def _point_scale(self, x):
        return self.base._point_scale(x)

    def cls(self, rep: ActionArrow) -> QuotientArrow:
        return QuotientArrow(rep, self.kernel.normalize(rep.g[0, 1], rep.x))

    def arrow(self, theta, x):
        return self.cls(ActionArrow(translation_r(theta), _vec(x).copy()))

    def source(self, a):
        return a.rep.x

    def target(self, a):
        return self.base.target(a.rep)

    def compose(self, a2, a1):
        self._check_composable(a2, a1)
        return self.cls(self.base.compose(a2.rep, a1.rep))

    def inverse(self, a):
        return self.cls(self.base.inverse(a.rep))

    def unit(self, x):
        return self.cls(self.base.unit(x))

    def arrow_distance(self, a, b):
        return max(self.kernel.angle_distance(a.theta, b.theta, a.rep.x), _dist(a.rep.x, b.rep.x))

    def sample_point(self, rng):
        for _ in range(1000):
            x = (_vec(self._point_sampler(rng)) if self._point_sampler is not None
                 else rng.standard_normal(self.base_dim))
            if abs(self.kernel.omega(x[2])) >= self.tol.fd_step:
                return x
        raise ConfigurationError("could not sample a point with omega away from zero")

    def sample_arrow(self, rng, x=None):
        x = self.sample_point(rng) if x is None else _vec(x)
        return self.cls(self.base.sample_arrow(rng, x))

    def sample_isotropy(self, rng, x):
        a = self.base.sample_isotropy(rng, x)
        return None if a is None else self.cls(a)

    def sample_kernel_arrow(self, rng, x) -> QuotientArrow:
        """A kernel member at x, kept as its (non-normalized) representative."""
        return self.arrow(self.kernel.sample_member(rng, x), x)

    def same_orbit(self, x, y):
        return self.base.same_orbit(x, y)

    def ds(self, a):
        return self.base.ds(a.rep)

    def dt(self, a):
        return self.base.dt(a.rep)

    def fiber_basis(self, a):
        return self.base.fiber_basis(a.rep)

    def source_lift(self, a):
        return self.base.source_lift(a.rep)

    def compose_jacobian(self, a2, a1):
        return self.base.compose_jacobian(a2.rep, a1.rep)

    def inverse_jacobian(self, a):
        return self.base.inverse_jacobian(a.rep)

    def retract(self, a, v):
        return self.cls(self.base.retract(a.rep, v))

    def arrow_log(self, a, b):
        return self.base.arrow_log(a.rep, b.rep)


def quotient_by_kernel(base: TranslationGroupoid, kernel: RotationKernel, point_sampler=None,
                       name="") -> QuotientGroupoid:
    return QuotientGroupoid(base, kernel, point_sampler, name)


# ------------------------------------------------------------ pullback groupoid

class PullbackGroupoid(GroupoidModel):
    """f*Delta over X: arrows (x', h, x) with f(x') = t(h), f(x) = s(h).

    Arrow tangent coordinates are (dx', dh, dx).
    """

    kind = "Pullback"

    def __init__(self, f: Callable, df: Callable, delta: GroupoidModel, base_dim: int,
                 point_sampler: Callable | None = None, f_inverse: Callable | None = None,
                 orbit_oracle: Callable | None = None, name: str = ""):
        self.f = f
        self.df = df
        self.delta = delta
        self.base_dim = base_dim
        self.arrow_dim = 2 * base_dim + delta.arrow_dim
        self.tol = delta.tol
        self._point_sampler = point_sampler
        self._f_inverse = f_inverse
        self._orbit_oracle = orbit_oracle
        self.name = name or f"f*({delta.name})"

    def _point_scale(self, x):
        return max(1.0, float(np.linalg.norm(x)))

    def Df(self, x) -> np.ndarray:
        return np.asarray(self.df(_vec(x)), float).reshape(self.delta.base_dim, self.base_dim)

    def fmap(self, x):
        return _vec(self.f(_vec(x)))

    def check_arrow(self, a) -> float:
        r = max(self.delta.point_distance(self.fmap(a.xt), self.delta.target(a.h)),
                self.delta.point_distance(self.fmap(a.xs), self.delta.source(a.h)))
        if r > self.tol.map_abs_tol * self._point_scale(a.xs):
            raise MalformedArrowError(f"pullback arrow incompatible with f (residual {r:.3e})")
        return r

    def arrow(self, xt, h, xs):
        a = PullbackArrow(_vec(xt).copy(), h, _vec(xs).copy())
        self.check_arrow(a)
        return a

    def source(self, a):
        return a.xs

    def target(self, a):
        return a.xt

    def compose(self, a2, a1):
        self._check_composable(a2, a1)
        return PullbackArrow(a2.xt, self.delta.compose(a2.h, a1.h), a1.xs)

    def inverse(self, a):
        return PullbackArrow(a.xs, self.delta.inverse(a.h), a.xt)

    def unit(self, x):
        x = _vec(x).copy()
        return PullbackArrow(x, self.delta.unit(self.fmap(x)), x)

    def arrow_distance(self, a, b):
        return max(_dist(a.xt, b.xt), self.delta.arrow_distance(a.h, b.h), _dist(a.xs, b.xs))

    def sample_point(self, rng):
        if self._point_sampler is not None:
            return _vec(self._point_sampler(rng))
        return rng.standard_normal(self.base_dim)

    def sample_arrow(self, rng, x=None):
        x = self.sample_point(rng) if x is None else _vec(x)
        if self._f_inverse is not None:
            h = self.delta.sample_arrow(rng, self.fmap(x))
            return PullbackArrow(_vec(self._f_inverse(self.delta.target(h))), h, x.copy())
        h = self.delta.sample_isotropy(rng, self.fmap(x))
        if h is None:
            raise ConfigurationError("pullback arrow sampling needs f_inverse or an isotropy sampler")
        return PullbackArrow(x.copy(), h, x.copy())

    def sample_isotropy(self, rng, x):
        h = self.delta.sample_isotropy(rng, self.fmap(x))
        return None if h is None else PullbackArrow(_vec(x).copy(), h, _vec(x).copy())

    def same_orbit(self, x, y):
        if self._orbit_oracle is not None:
            return bool(self._orbit_oracle(_vec(x), _vec(y)))
        return self.delta.same_orbit(self.fmap(x), self.fmap(y))

    def _blocks(self):
        n, p = self.base_dim, self.delta.arrow_dim
        return n, p

    def arrow_tangent(self, a):
        n, p = self._blocks()
        T = self.delta.arrow_tangent(a.h)
        m = T.shape[1]
        C = np.zeros((2 * self.delta.base_dim, 2 * n + m))
        C[: self.delta.base_dim, :n] = self.Df(a.xt)
        C[: self.delta.base_dim, n:n + m] = -self.delta.dt(a.h) @ T
        C[self.delta.base_dim:, n:n + m] = -self.delta.ds(a.h) @ T
        C[self.delta.base_dim:, n + m:] = self.Df(a.xs)
        N = null_space(C, self.tol, ncols=2 * n + m)
        out = np.vstack([N[:n], T @ N[n:n + m], N[n + m:]])
        return out

    def ds(self, a):
        n, p = self._blocks()
        return np.hstack([np.zeros((n, n + p)), np.eye(n)])

    def dt(self, a):
        n, p = self._blocks()
        return np.hstack([np.eye(n), np.zeros((n, p + n))])

    def _fiber_system(self, a):
        F = self.delta.fiber_basis(a.h)
        return F, np.hstack([self.Df(a.xt), -self.delta.dt(a.h) @ F])

    def fiber_basis(self, a):
        n, p = self._blocks()
        F, M = self._fiber_system(a)
        N = null_space(M, self.tol, ncols=M.shape[1])
        return np.vstack([N[:n], F @ N[n:], np.zeros((n, N.shape[1]))])

    def source_lift(self, a):
        n, p = self._blocks()
        F, M = self._fiber_system(a)
        L = self.delta.source_lift(a.h)
        rhs = self.delta.dt(a.h) @ L @ self.Df(a.xs)
        sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
        res = float(np.linalg.norm(M @ sol - rhs)) if rhs.size else 0.0
        if res > self.tol.map_abs_tol * max(1.0, float(np.linalg.norm(rhs))):
            raise ConsistencyError(f"no local source section through the pullback arrow "
                                   f"(f not essentially submersive here, residual {res:.3e})")
        dh = L @ self.Df(a.xs) + F @ sol[n:]
        return np.vstack([sol[:n], dh, np.eye(n)])

    def retract(self, a, v):
        n, p = self._blocks()
        v = _vec(v)
        return PullbackArrow(a.xt + v[:n], self.delta.retract(a.h, v[n:n + p]), a.xs + v[n + p:])

    def arrow_log(self, a, b):
        n, _ = self._blocks()
        return np.concatenate([_vec(b.xt) - _vec(a.xt), self.delta.arrow_log(a.h, b.h),
                               _vec(b.xs) - _vec(a.xs)])


def build_pullback(f, df, delta, base_dim, point_sampler=None, f_inverse=None, orbit_oracle=None,
                   name=""):
    """Pullback groupoid and its projection homomorphism onto delta."""
    from .homs import PullbackProjection

    P = PullbackGroupoid(f, df, delta, base_dim, point_sampler, f_inverse, orbit_oracle, name)
    return P, PullbackProjection(P)


# ------------------------------------------------------- weak pullback groupoid

class WeakPullbackGroupoid(GroupoidModel):
    """Weak pullback of psi: Delta -> Sigma and phi: Gamma -> Sigma.

    Base points (y, k, x) with k in Sigma(phi(x), psi(y)); arrows (h, k, g)
    with source (s h, k, s g) and target (t h, psi(h) k phi(g)^-1, t g).
    Sigma must expose composition and inversion Jacobians.
    """

    kind = "WeakPullback"

    def __init__(self, psi, phi, name=""):
        if psi.codomain is not phi.codomain:
            raise ConfigurationError("weak pullback needs homomorphisms with a common codomain")
        self.psi = psi
        self.phi = phi
        self.delta = psi.domain
        self.gamma = phi.domain
        self.sigma = psi.codomain
        self.tol = self.sigma.tol
        D, S, G = self.delta, self.sigma, self.gamma
        self.base_dim = D.base_dim + S.arrow_dim + G.base_dim
        self.arrow_dim = D.arrow_dim + S.arrow_dim + G.arrow_dim
        self.name = name or f"{D.name} x_Sigma {G.name}"

    def _point_scale(self, z):
        return max(self.delta._point_scale(z.y), self.gamma._point_scale(z.x))

    # validation
    def point_residual(self, z) -> float:
        S = self.sigma
        return max(S.point_distance(S.target(z.k), self.psi.base_map(z.y)),
                   S.point_distance(S.source(z.k), self.phi.base_map(z.x)))

    def check_point(self, z):
        r = self.point_residual(z)
        if r > self.tol.map_abs_tol * self._point_scale(z):
            raise MalformedArrowError(f"weak pullback point off the fibered product (residual {r:.3e})")
        return r

    def check_arrow(self, a):
        return self.check_point(self.source(a))

    # structure maps
    def source(self, a):
        return WeakPullbackPoint(self.delta.source(a.h), a.k, self.gamma.source(a.g))

    def _target_k(self, a):
        S = self.sigma
        return S.compose(self.psi.apply(a.h), S.compose(a.k, S.inverse(self.phi.apply(a.g))))

    def target(self, a):
        return WeakPullbackPoint(self.delta.target(a.h), self._target_k(a), self.gamma.target(a.g))

    def compose(self, a2, a1):
        self._check_composable(a2, a1)
        return WeakPullbackArrow(self.delta.compose(a2.h, a1.h), a1.k, self.gamma.compose(a2.g, a1.g))

    def inverse(self, a):
        return WeakPullbackArrow(self.delta.inverse(a.h), self._target_k(a), self.gamma.inverse(a.g))

    def unit(self, z):
        return WeakPullbackArrow(self.delta.unit(z.y), z.k, self.gamma.unit(z.x))

    def point_distance(self, z1, z2):
        return max(self.delta.point_distance(z1.y, z2.y), self.sigma.arrow_distance(z1.k, z2.k),
                   self.gamma.point_distance(z1.x, z2.x))

    def arrow_distance(self, a, b):
        return max(self.delta.arrow_distance(a.h, b.h), self.sigma.arrow_distance(a.k, b.k),
                   self.gamma.arrow_distance(a.g, b.g))

    # sampling through the witnesses of phi
    def _witnesses(self):
        w = getattr(self.phi, "witnesses", None)
        if w is None:
            raise ConfigurationError("weak pullback sampling needs witnesses on phi")
        return w

    def point_over(self, y) -> WeakPullbackPoint:
        """A base point over y built from phi's surjectivity witness."""
        w = self._witnesses()
        if w.surjectivity is None:
            raise ConfigurationError("phi carries no surjectivity witness")
        x, hh = w.surjectivity(self.psi.base_map(y))
        return WeakPullbackPoint(y, self.sigma.inverse(hh), x)

    def sample_point(self, rng):
        return self.point_over(self.delta.sample_point(rng))

    def sample_arrow(self, rng, z=None):
        z = self.sample_point(rng) if z is None else z
        return WeakPullbackArrow(self.delta.sample_arrow(rng, z.y), z.k,
                                 self.gamma.sample_arrow(rng, z.x))

    def sample_isotropy(self, rng, z):
        h = self.delta.sample_isotropy(rng, z.y)
        if h is None:
            return None
        w = self._witnesses()
        if w.lift is None:
            return None
        S = self.sigma
        target_arrow = S.compose(S.inverse(z.k), S.compose(self.psi.apply(h), z.k))
        g = w.lift(z.x, z.x, target_arrow)
        return WeakPullbackArrow(h, z.k, g)

    def same_orbit(self, z1, z2):
        return self.delta.same_orbit(z1.y, z2.y)

    # first-order data; base coordinates (dy, dk, dx), arrow coordinates (dh, dk, dg)
    def base_tangent(self, z):
        D, S, G = self.delta, self.sigma, self.gamma
        BY = D.base_tangent(z.y).basis
        BK = S.arrow_tangent(z.k)
        BX = G.base_tangent(z.x).basis
        ny, nk, nx = BY.shape[1], BK.shape[1], BX.shape[1]
        m = S.base_dim
        C = np.zeros((2 * m, ny + nk + nx))
        C[:m, :ny] = -self.psi.base_jacobian(z.y) @ BY
        C[:m, ny:ny + nk] = S.dt(z.k) @ BK
        C[m:, ny:ny + nk] = S.ds(z.k) @ BK
        C[m:, ny + nk:] = -self.phi.base_jacobian(z.x) @ BX
        N = null_space(C, self.tol, ncols=ny + nk + nx)
        V = np.vstack([BY @ N[:ny], BK @ N[ny:ny + nk], BX @ N[ny + nk:]])
        q, _ = np.linalg.qr(V) if V.shape[1] else (V, None)
        return Subspace(self.base_dim, q)

    def arrow_tangent(self, a):
        D, S, G = self.delta, self.sigma, self.gamma
        TH, TK, TG = D.arrow_tangent(a.h), S.arrow_tangent(a.k), G.arrow_tangent(a.g)
        nh, nk, ng = TH.shape[1], TK.shape[1], TG.shape[1]
        m = S.base_dim
        C = np.zeros((2 * m, nh + nk + ng))
        C[:m, :nh] = -self.psi.base_jacobian(D.source(a.h)) @ D.ds(a.h) @ TH
        C[:m, nh:nh + nk] = S.dt(a.k) @ TK
        C[m:, nh:nh + nk] = S.ds(a.k) @ TK
        C[m:, nh + nk:] = -self.phi.base_jacobian(G.source(a.g)) @ G.ds(a.g) @ TG
        N = null_space(C, self.tol, ncols=nh + nk + ng)
        return scipy.linalg.block_diag(TH, TK, TG) @ N

    def ds(self, a):
        return scipy.linalg.block_diag(self.delta.ds(a.h), np.eye(self.sigma.arrow_dim),
                                       self.gamma.ds(a.g))

    def dt(self, a):
        D, S, G = self.delta, self.sigma, self.gamma
        A = self.psi.apply(a.h)
        Cphi = self.phi.apply(a.g)
        C = S.inverse(Cphi)
        B = S.compose(a.k, C)
        J2ab, J1ab = S.compose_jacobian(A, B)
        J2kc, J1kc = S.compose_jacobian(a.k, C)
        Mh = J2ab @ self.psi.arrow_jacobian(a.h)
        Mk = J1ab @ J2kc
        Mg = J1ab @ J1kc @ S.inverse_jacobian(Cphi) @ self.phi.arrow_jacobian(a.g)
        pd, pk, pg = D.arrow_dim, S.arrow_dim, G.arrow_dim
        top = np.hstack([D.dt(a.h), np.zeros((D.base_dim, pk + pg))])
        mid = np.hstack([Mh, Mk, Mg])
        bot = np.hstack([np.zeros((G.base_dim, pd + pk)), G.dt(a.g)])
        return np.vstack([top, mid, bot])

    def fiber_basis(self, a):
        FD = self.delta.fiber_basis(a.h)
        FG = self.gamma.fiber_basis(a.g)
        return scipy.linalg.block_diag(FD, np.zeros((self.sigma.arrow_dim, 0)), FG)

    def source_lift(self, a):
        return scipy.linalg.block_diag(self.delta.source_lift(a.h), np.eye(self.sigma.arrow_dim),
                                       self.gamma.source_lift(a.g))

    def _cuts(self, dims):
        a, b, _ = dims
        return slice(0, a), slice(a, a + b), slice(a + b, None)

    def retract(self, a, v):
        v = _vec(v)
        ih, ik, ig = self._cuts((self.delta.arrow_dim, self.sigma.arrow_dim, self.gamma.arrow_dim))
        return WeakPullbackArrow(self.delta.retract(a.h, v[ih]), self.sigma.retract(a.k, v[ik]),
                                 self.gamma.retract(a.g, v[ig]))

    def arrow_log(self, a, b):
        return np.concatenate([self.delta.arrow_log(a.h, b.h), self.sigma.arrow_log(a.k, b.k),
                               self.gamma.arrow_log(a.g, b.g)])

    def point_retract(self, z, v):
        v = _vec(v)
        iy, ik, ix = self._cuts((self.delta.base_dim, self.sigma.arrow_dim, self.gamma.base_dim))
        return WeakPullbackPoint(self.delta.point_retract(z.y, v[iy]),
                                 self.sigma.retract(z.k, v[ik]),
                                 self.gamma.point_retract(z.x, v[ix]))

    def point_log(self, z1, z2):
        return np.concatenate([self.delta.point_log(z1.y, z2.y), self.sigma.arrow_log(z1.k, z2.k),
                               self.gamma.point_log(z1.x, z2.x)])


def build_weak_pullback(psi, phi, name=""):
    """Weak pullback groupoid with its two projection homomorphisms."""
    from .homs import WeakPullbackProjection

    Z = WeakPullbackGroupoid(psi, phi, name)
    return Z, WeakPullbackProjection(Z, "delta"), WeakPullbackProjection(Z, "gamma")


def first_order_fd_check(G: GroupoidModel, a, step: float | None = None) -> dict:
    """Central differences of source and target along the arrow tangent basis,
    compared with ds and dt."""
    h = G.tol.fd_step if step is None else step
    T = G.arrow_tangent(a)
    out = {"ds": 0.0, "dt": 0.0}
    for name, fn, D in (("ds", G.source, G.ds(a)), ("dt", G.target, G.dt(a))):
        base = fn(a)
        for j in range(T.shape[1]):
            v = T[:, j]
            plus = G.point_log(base, fn(G.retract(a, h * v)))
            minus = G.point_log(base, fn(G.retract(a, -h * v)))
            fd = (plus - minus) / (2 * h)
            out[name] = max(out[name], float(np.max(np.abs(fd - D @ v))))
    return out


# ---------------------------------------------------------------- axiom fuzzer

@dataclass
class AxiomReport:
    groupoid: str
    samples: int
    residuals: dict

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values()) if self.residuals else 0.0

    def passed(self, bound: float) -> bool:
        return self.max_residual < bound


def check_groupoid_axioms(G: GroupoidModel, samples: int = 1000, seed: int = 0) -> AxiomReport:
    """Max residuals of the structure axioms over sampled composable triples."""
    rng = np.random.default_rng(seed)
    keys = ["unit_source", "unit_target", "compose_source", "compose_target", "associativity",
            "left_unit", "right_unit", "inverse_left", "inverse_right", "target_of_inverse",
            "inverse_of_product"]
    res = dict.fromkeys(keys, 0.0)

    def bump(k, v):
        res[k] = max(res[k], float(v))

    for _ in range(samples):
        a1 = G.sample_arrow(rng)
        a2 = G.sample_arrow(rng, G.target(a1))
        a3 = G.sample_arrow(rng, G.target(a2))
        x = G.source(a1)
        u = G.unit(x)
        bump("unit_source", G.point_distance(G.source(u), x))
        bump("unit_target", G.point_distance(G.target(u), x))
        a21 = G.compose(a2, a1)
        bump("compose_source", G.point_distance(G.source(a21), G.source(a1)))
        bump("compose_target", G.point_distance(G.target(a21), G.target(a2)))
        bump("associativity", G.arrow_distance(G.compose(G.compose(a3, a2), a1),
                                               G.compose(a3, a21)))
        bump("left_unit", G.arrow_distance(G.compose(G.unit(G.target(a1)), a1), a1))
        bump("right_unit", G.arrow_distance(G.compose(a1, u), a1))
        inv = G.inverse(a1)
        bump("inverse_left", G.arrow_distance(G.compose(inv, a1), u))
        bump("inverse_right", G.arrow_distance(G.compose(a1, inv), G.unit(G.target(a1))))
        bump("target_of_inverse", G.point_distance(G.target(inv), G.source(a1)))
        bump("inverse_of_product", G.arrow_distance(G.inverse(a21),
                                                    G.compose(inv, G.inverse(a2))))
    return AxiomReport(G.name, samples, res)
