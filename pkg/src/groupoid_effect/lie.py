"""Matrix Lie groups, their smooth actions, and the frequency functions used
by the rotation actions on C x R."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg
from scipy.spatial.transform import Rotation

from .errors import ConfigurationError, InputError
from .numlin import DEFAULT_TOL, ToleranceProfile

TWO_PI = 2.0 * math.pi

LX = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
LY = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
LZ = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
J2 = np.array([[0.0, -1.0], [1.0, 0.0]])
E12 = np.array([[0.0, 1.0], [0.0, 0.0]])
FLIP3 = np.diag([1.0, -1.0, -1.0])


def rot2(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s], [s, c]])


def rot_z(a: float) -> np.ndarray:
    out = np.eye(3)
    out[:2, :2] = rot2(a)
    return out


def rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def translation_r(theta: float) -> np.ndarray:
    """Element of the additive reals as a unipotent 2x2 matrix."""
    return np.array([[1.0, float(theta)], [0.0, 1.0]])


def rotation_taking(u, v) -> np.ndarray:
    """Some rotation R in SO(3) with R @ u/|u| = v/|v|."""
    u = np.asarray(u, float) / np.linalg.norm(u)
    v = np.asarray(v, float) / np.linalg.norm(v)
    axis = np.cross(u, v)
    s = np.linalg.norm(axis)
    c = float(np.dot(u, v))
    if s < 1e-14:
        if c > 0:
            return np.eye(3)
        # antipodal: rotate by pi about any axis orthogonal to u
        w = np.cross(u, [1.0, 0.0, 0.0])
        if np.linalg.norm(w) < 1e-8:
            w = np.cross(u, [0.0, 1.0, 0.0])
        return Rotation.from_rotvec(math.pi * w / np.linalg.norm(w)).as_matrix()
    return Rotation.from_rotvec(axis / s * math.atan2(s, c)).as_matrix()


@dataclass(frozen=True)
class LieGroupModel:
    name: str
    matrix_size: int
    algebra_basis: tuple
    sampler: Callable[[np.random.Generator], np.ndarray] = field(repr=False)
    orthogonal: bool = False

    @property
    def group_dim(self) -> int:
        return len(self.algebra_basis)

    def identity(self) -> np.ndarray:
        return np.eye(self.matrix_size)

    def multiply(self, a, b) -> np.ndarray:
        return a @ b

    def invert(self, g) -> np.ndarray:
        return g.T.copy() if self.orthogonal else np.linalg.inv(g)

    def algebra_element(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float).ravel()
        if xi.size != self.group_dim:
            raise InputError(f"{self.name}: expected {self.group_dim} algebra coordinates")
        out = np.zeros((self.matrix_size, self.matrix_size))
        for c, b in zip(xi, self.algebra_basis):
            out = out + c * b
        return out

    def exp(self, xi) -> np.ndarray:
        if self.group_dim == 0:
            return self.identity()
        return scipy.linalg.expm(self.algebra_element(xi))

    def algebra_coords(self, X) -> np.ndarray:
        """Coordinates of an algebra matrix (least squares against the basis)."""
        if self.group_dim == 0:
            return np.zeros(0)
        B = np.column_stack([b.ravel() for b in self.algebra_basis])
        return np.linalg.lstsq(B, np.asarray(X, float).ravel(), rcond=None)[0]

    def adjoint(self, g) -> np.ndarray:
        """Matrix of Ad_g in algebra coordinates."""
        d = self.group_dim
        if d == 0:
            return np.zeros((0, 0))
        gi = self.invert(g)
        return np.column_stack([self.algebra_coords(g @ b @ gi) for b in self.algebra_basis])

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return np.asarray(self.sampler(rng), dtype=float)

    def distance(self, a, b) -> float:
        return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))


def _sample_so3(rng):
    return Rotation.random(random_state=rng).as_matrix()


def _sample_o2(rng):
    g = rot2(rng.uniform(-math.pi, math.pi))
    if rng.random() < 0.5:
        g = g @ np.diag([1.0, -1.0])
    return g


def _sample_g(rng):
    g = rot_z(rng.uniform(-math.pi, math.pi))
    if rng.random() < 0.5:
        g = g @ FLIP3
    return g


def so3() -> LieGroupModel:
    return LieGroupModel("SO(3)", 3, (LX, LY, LZ), _sample_so3, orthogonal=True)


def so2() -> LieGroupModel:
    return LieGroupModel("SO(2)", 2, (J2,), lambda rng: rot2(rng.uniform(-math.pi, math.pi)),
                         orthogonal=True)


def o2() -> LieGroupModel:
    return LieGroupModel("O(2)", 2, (J2,), _sample_o2, orthogonal=True)


def axis_flip_group() -> LieGroupModel:
    """Rotations P of R^3 with P e3 = +-e3."""
    return LieGroupModel("G", 3, (LZ,), _sample_g, orthogonal=True)


def additive_reals(span: float = TWO_PI) -> LieGroupModel:
    return LieGroupModel("R", 2, (E12,), lambda rng: translation_r(rng.uniform(-span, span)))


def trivial_group() -> LieGroupModel:
    return LieGroupModel("1", 1, (), lambda rng: np.eye(1), orthogonal=True)


# ---------------------------------------------------------------- frequencies

@dataclass(frozen=True)
class Frequency:
    """Smooth real function of one variable from a small closed family.

    ``poly:c0,c1,...`` is c0 + c1 t + ...; ``texp:a,b`` is a t exp(b t).
    """

    spec: str
    kind: str
    coeffs: tuple

    def __call__(self, t: float) -> float:
        if self.kind == "poly":
            return float(np.polynomial.polynomial.polyval(t, self.coeffs))
        a, b = self.coeffs
        return float(a * t * math.exp(b * t))

    def derivative(self, t: float) -> float:
        if self.kind == "poly":
            d = np.polynomial.polynomial.polyder(self.coeffs) if len(self.coeffs) > 1 else [0.0]
            return float(np.polynomial.polynomial.polyval(t, d))
        a, b = self.coeffs
        return float(a * math.exp(b * t) * (1.0 + b * t))


def parse_frequency(spec: str) -> Frequency:
    if isinstance(spec, Frequency):
        return spec
    kind, sep, rest = str(spec).partition(":")
    kind = kind.strip().lower()
    if not sep or kind not in ("poly", "texp"):
        raise ConfigurationError(f"unknown function spec {spec!r}; use poly:c0,c1,... or texp:a,b")
    try:
        coeffs = tuple(float(c) for c in rest.split(",") if c.strip())
    except ValueError:
        raise ConfigurationError(f"bad coefficients in {spec!r}") from None
    if not coeffs or any(not math.isfinite(c) for c in coeffs):
        raise ConfigurationError(f"bad coefficients in {spec!r}")
    if kind == "texp" and len(coeffs) != 2:
        raise ConfigurationError("texp takes exactly two coefficients a,b")
    return Frequency(str(spec), kind, coeffs)


def check_same_modulus(phi: Frequency, omega: Frequency, lo=-3.0, hi=3.0, n=601, tol=1e-9):
    """Raise unless |phi| = |omega| on a grid over [lo, hi]."""
    for t in np.linspace(lo, hi, n):
        a, b = abs(phi(t)), abs(omega(t))
        if abs(a - b) > tol * max(1.0, b):
            raise ConfigurationError(
                f"|{phi.spec}| differs from |{omega.spec}| at t={t:.4g} ({a:.6g} vs {b:.6g})")


# ------------------------------------------------------------------- actions

@dataclass(frozen=True)
class SmoothActionModel:
    group: LieGroupModel
    base_dim: int
    act_fn: Callable = field(repr=False)
    jacobian_fn: Callable = field(repr=False)
    generator_fn: Callable = field(repr=False)
    stabilizer_fn: Optional[Callable] = field(default=None, repr=False)
    orbit_fn: Optional[Callable] = field(default=None, repr=False)
    name: str = ""
    frequency: Optional[Frequency] = None

    def act(self, g, x) -> np.ndarray:
        return np.asarray(self.act_fn(g, np.asarray(x, float)), dtype=float)

    def base_jacobian(self, g, x) -> np.ndarray:
        return np.asarray(self.jacobian_fn(g, np.asarray(x, float)), dtype=float)

    def generator(self, A, x) -> np.ndarray:
        return np.asarray(self.generator_fn(A, np.asarray(x, float)), dtype=float)

    def generator_matrix(self, x) -> np.ndarray:
        """Columns are the fundamental fields of the algebra basis at x."""
        if self.group.group_dim == 0:
            return np.zeros((self.base_dim, 0))
        return np.column_stack([self.generator(A, x) for A in self.group.algebra_basis])

    def stabilizer_sample(self, rng, x, tol: ToleranceProfile = DEFAULT_TOL):
        if self.stabilizer_fn is None:
            return None
        return self.stabilizer_fn(rng, np.asarray(x, float), tol)

    def same_orbit(self, x, y, tol: ToleranceProfile = DEFAULT_TOL):
        if self.orbit_fn is None:
            return None
        return bool(self.orbit_fn(np.asarray(x, float), np.asarray(y, float), tol))


def _norm_orbit(x, y, tol):
    return abs(np.linalg.norm(x) - np.linalg.norm(y)) <= tol.map_abs_tol * max(1.0, np.linalg.norm(x))


def _linear(group, n, stab, orbit, name):
    return SmoothActionModel(
        group, n,
        act_fn=lambda g, x: g @ x,
        jacobian_fn=lambda g, x: np.array(g, dtype=float),
        generator_fn=lambda A, x: A @ x,
        stabilizer_fn=stab, orbit_fn=orbit, name=name)


def _so3_stab(rng, x, tol):
    r = np.linalg.norm(x)
    if r <= tol.map_abs_tol:
        return _sample_so3(rng)
    return Rotation.from_rotvec(rng.uniform(-math.pi, math.pi) * x / r).as_matrix()


def _o2_stab(rng, x, tol):
    r = np.linalg.norm(x)
    if r <= tol.map_abs_tol:
        return _sample_o2(rng)
    if rng.random() < 0.5:
        return np.eye(2)
    u = x / r
    return 2.0 * np.outer(u, u) - np.eye(2)


def _so2_stab(rng, x, tol):
    if np.linalg.norm(x) <= tol.map_abs_tol:
        return rot2(rng.uniform(-math.pi, math.pi))
    return np.eye(2)


def _g_stab(rng, x, tol):
    planar = math.hypot(x[0], x[1])
    on_axis = planar <= tol.map_abs_tol
    in_plane = abs(x[2]) <= tol.map_abs_tol
    if on_axis and in_plane:
        return _sample_g(rng)
    if on_axis:
        return rot_z(rng.uniform(-math.pi, math.pi))
    if in_plane:
        if rng.random() < 0.5:
            return np.eye(3)
        return rot_z(2.0 * math.atan2(x[1], x[0])) @ FLIP3
    return np.eye(3)


def _g_orbit(x, y, tol):
    s = tol.map_abs_tol * max(1.0, np.linalg.norm(x))
    return (abs(math.hypot(x[0], x[1]) - math.hypot(y[0], y[1])) <= s
            and abs(abs(x[2]) - abs(y[2])) <= s)


def so3_on_r3() -> SmoothActionModel:
    return _linear(so3(), 3, _so3_stab, _norm_orbit, "SO(3) on R^3")


def o2_on_r2() -> SmoothActionModel:
    return _linear(o2(), 2, _o2_stab, _norm_orbit, "O(2) on R^2")


def so2_on_r2() -> SmoothActionModel:
    return _linear(so2(), 2, _so2_stab, _norm_orbit, "SO(2) on R^2")


def axis_flip_on_r3() -> SmoothActionModel:
    return _linear(axis_flip_group(), 3, _g_stab, _g_orbit, "G on R^3")


def trivial_action(group: LieGroupModel, n: int) -> SmoothActionModel:
    """Every element acts as the identity (group bundles)."""
    return SmoothActionModel(
        group, n,
        act_fn=lambda g, x: x.copy(),
        jacobian_fn=lambda g, x: np.eye(n),
        generator_fn=lambda A, x: np.zeros(n),
        stabilizer_fn=lambda rng, x, tol: group.sample(rng),
        orbit_fn=lambda x, y, tol: np.linalg.norm(x - y) <= tol.map_abs_tol * max(1.0, np.linalg.norm(x)),
        name=f"{group.name} acting trivially on R^{n}")


def rotation_action(omega: Frequency | str, max_multiple: int = 3) -> SmoothActionModel:
    """Additive reals acting on C x R = R^3 by (re, im, t) -> (e^{i omega(t) theta} z, t)."""
    omega = parse_frequency(omega)
    group = additive_reals()

    def act(g, x):
        th = g[0, 1]
        out = x.copy()
        out[:2] = rot2(omega(x[2]) * th) @ x[:2]
        return out

    def jac(g, x):
        th = g[0, 1]
        w = omega(x[2])
        R = rot2(w * th)
        out = np.eye(3)
        out[:2, :2] = R
        out[:2, 2] = th * omega.derivative(x[2]) * (J2 @ R @ x[:2])
        return out

    def gen(A, x):
        c = A[0, 1]
        out = np.zeros(3)
        out[:2] = c * omega(x[2]) * (J2 @ x[:2])
        return out

    def stab(rng, x, tol):
        w = omega(x[2])
        if np.linalg.norm(x[:2]) > tol.map_abs_tol and w != 0.0:
            m = int(rng.integers(-max_multiple, max_multiple + 1))
            return translation_r(m * TWO_PI / abs(w))
        return translation_r(rng.uniform(-TWO_PI, TWO_PI))

    def orbit(x, y, tol):
        s = tol.map_abs_tol * max(1.0, np.linalg.norm(x))
        if abs(x[2] - y[2]) > s:
            return False
        if omega(x[2]) == 0.0:
            return np.linalg.norm(x[:2] - y[:2]) <= s
        return abs(np.linalg.norm(x[:2]) - np.linalg.norm(y[:2])) <= s

    return SmoothActionModel(group, 3, act, jac, gen, stab, orbit,
                             name=f"R on C x R, omega={omega.spec}", frequency=omega)


def action_fd_check(action: SmoothActionModel, g, x, tol: ToleranceProfile = DEFAULT_TOL) -> dict:
    """Max abs difference between analytic and central-difference derivatives."""
    h = tol.fd_step
    x = np.asarray(x, float)
    J = action.base_jacobian(g, x)
    fd = np.column_stack([(action.act(g, x + h * e) - action.act(g, x - h * e)) / (2 * h)
                          for e in np.eye(x.size)])
    out = {"base_jacobian": float(np.max(np.abs(J - fd)))}
    worst = 0.0
    group = action.group
    for i, A in enumerate(group.algebra_basis):
        e = np.zeros(group.group_dim)
        e[i] = h
        fd_gen = (action.act(group.exp(e), x) - action.act(group.exp(-e), x)) / (2 * h)
        worst = max(worst, float(np.max(np.abs(action.generator(A, x) - fd_gen))))
    out["generator"] = worst
    if action.frequency is not None:
        w = action.frequency
        t = float(x[2])
        out["frequency_derivative"] = abs(w.derivative(t) - (w(t + h) - w(t - h)) / (2 * h))
    return out
