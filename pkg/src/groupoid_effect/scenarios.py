"""Builders for the concrete groupoids and homomorphisms used by the CLI
scenarios and the acceptance suite."""

from __future__ import annotations

import math
from fractions import Fraction
from types import SimpleNamespace

import numpy as np

from . import lie
from .errors import ConfigurationError
from .groupoid import (RotationKernel, build_group_bundle, build_pullback, build_translation,
                       quotient_by_kernel)
from .homs import NaturalTransformationWitness, TranslationHom, group_hom
from .numlin import DEFAULT_TOL, ToleranceProfile

E3 = np.array([0.0, 0.0, 1.0])


def _shell(dim, lo=0.2, hi=3.0):
    """Sampler for points of R^dim with norm in [lo, hi]."""
    def sample(rng):
        v = rng.standard_normal(dim)
        return v / np.linalg.norm(v) * rng.uniform(lo, hi)
    return sample


def embed_o2(A) -> np.ndarray:
    """O(2) -> SO(3), A -> diag(A, det A)."""
    out = np.zeros((3, 3))
    out[:2, :2] = A
    out[2, 2] = np.linalg.det(A)
    return out


def embed_so2(A) -> np.ndarray:
    out = np.eye(3)
    out[:2, :2] = A
    return out


def angle_of(A) -> float:
    return math.atan2(A[1, 0], A[0, 0])


def so3_space(tol: ToleranceProfile = DEFAULT_TOL, name="SO(3) x R^3"):
    return build_translation(lie.so3(), lie.so3_on_r3(), _shell(3), tol=tol, name=name)


# ------------------------------------------------------------------ ex1

def ex1(tol: ToleranceProfile = DEFAULT_TOL):
    """O(2) x R^2 -> G x R^3 via diag(A, det A) and (x, y) -> (x, y, 0)."""
    up = build_translation(lie.o2(), lie.o2_on_r2(), _shell(2), tol=tol, name="O(2) x R^2")
    down = build_translation(lie.axis_flip_group(), lie.axis_flip_on_r3(), _shell(3), tol=tol,
                             name="G x R^3")
    embed = lambda x: np.array([x[0], x[1], 0.0])
    D_embed = lambda x: np.eye(3)[:, :2]
    phi = group_hom(up, down, embed_o2, [[1.0]], embed, D_embed, name="theta x f")
    reflection = np.diag([1.0, -1.0])
    return SimpleNamespace(up=up, down=down, phi=phi, point=np.array([1.0, 0.0]),
                           arrow=up.arrow(reflection, [1.0, 0.0]),
                           image_point=np.array([1.0, 0.0, 0.0]))


def inclusion_into_so3(sigma, name="O(2) -> SO(3)"):
    """O(2) x (R^2 minus 0) -> SO(3) x (R^3 minus 0)."""
    up = build_translation(lie.o2(), lie.o2_on_r2(), _shell(2), tol=sigma.tol, name="O(2) x R^2")
    return group_hom(up, sigma, embed_o2, [[0.0], [0.0], [1.0]],
                     lambda x: np.array([x[0], x[1], 0.0]), lambda x: np.eye(3)[:, :2], name=name)


def axis_group_inclusion(down, sigma):
    """G x R^3 -> SO(3) x R^3, the subgroup inclusion covering the identity."""
    return group_hom(down, sigma, lambda g: g, [[0.0], [0.0], [1.0]], lambda x: x,
                     lambda x: np.eye(3), name="G in SO(3)")


# ----------------------------------------------------------------- ex2a

def ex2a(k: int = 3, tol: ToleranceProfile = DEFAULT_TOL, sigma=None):
    """Constant-orbit homomorphisms SO(2) x R^2 -> SO(3) x R^3 at (0, 0, 1)."""
    up = build_translation(lie.so2(), lie.so2_on_r2(), lambda rng: rng.uniform(-2, 2, 2), tol=tol,
                           name="SO(2) x R^2")
    sigma = so3_space(tol) if sigma is None else sigma
    const = lambda x: E3.copy()
    zero = lambda x: np.zeros((3, 2))
    lz = [[0.0], [0.0], [1.0]]
    phi = group_hom(up, sigma, embed_so2, lz, const, zero, name="theta x f")
    psi = group_hom(up, sigma, lambda A: embed_so2(np.linalg.matrix_power(A, k) if k >= 0
                                                   else np.linalg.matrix_power(A.T, -k)),
                    [[0.0], [0.0], [float(k)]], const, zero, name=f"(theta o eta_{k}) x f")
    unit_tau = NaturalTransformationWitness(lambda x: sigma.unit(E3), "congruence")
    return SimpleNamespace(up=up, sigma=sigma, phi=phi, psi=psi, k=k, tau=unit_tau,
                           candidates=[sigma.arrow(lie.rot_z(2 * math.pi * j / 360), E3)
                                       for j in range(360)])


# ------------------------------------------------------------- weak equivalence

def radial_pullback(sigma, lo=0.2, hi=5.0):
    """Pullback of sigma along (0, inf) -> R^3 minus 0, t -> (0, 0, t), with its projection."""
    f = lambda x: np.array([0.0, 0.0, x[0]])
    df = lambda x: E3.reshape(3, 1).copy()
    same_radius = lambda a, b: abs(a[0] - b[0]) <= sigma.tol.map_abs_tol * max(1.0, abs(a[0]))
    P, pi = build_pullback(f, df, sigma, 1, lambda rng: np.array([rng.uniform(lo, hi)]),
                           orbit_oracle=same_radius, name="radial pullback")

    def surj(y):
        y = np.asarray(y, float)
        r = float(np.linalg.norm(y))
        return np.array([r]), sigma.arrow(lie.rotation_taking(y, E3), y)

    pi.set_surjectivity(surj)
    return P, pi


def weak_equivalence(tol: ToleranceProfile = DEFAULT_TOL):
    sigma = so3_space(tol)
    P, pi = radial_pullback(sigma)
    return SimpleNamespace(sigma=sigma, P=P, pi=pi)


# ----------------------------------------------------------------- ex2b

def phi_hom(Q, sigma, phi_fn: lie.Frequency, name):
    """(theta; z, t) -> (R_z(phi(t) theta); 0, 0, t) on the quotient groupoid."""
    f = lambda x: np.array([0.0, 0.0, x[2]])
    df = lambda x: np.diag([0.0, 0.0, 1.0])

    def gmap(g, x):
        return lie.rot_z(phi_fn(x[2]) * g[0, 1])

    def gjac(g, x):
        Gx = np.zeros((3, 3))
        Gx[2, 2] = phi_fn.derivative(x[2]) * g[0, 1]
        return np.array([[0.0], [0.0], [phi_fn(x[2])]]), Gx

    return TranslationHom(Q, sigma, gmap, gjac, f, df, name=name)


def ex2b(omega="poly:0,1", phi0="poly:0,1", phi1="poly:0,-1",
              tol: ToleranceProfile = DEFAULT_TOL, sigma=None):
    omega = lie.parse_frequency(omega)
    p0, p1 = lie.parse_frequency(phi0), lie.parse_frequency(phi1)
    lie.check_same_modulus(p0, omega)
    lie.check_same_modulus(p1, omega)
    action = lie.rotation_action(omega)

    def sampler(rng):
        x = rng.standard_normal(3)
        x[2] = rng.uniform(-3.0, 3.0)
        return x

    base = build_translation(action.group, action, sampler, tol=tol, name="R x (C x R)")
    K = RotationKernel(omega, Fraction(1), tol)
    Q = quotient_by_kernel(base, K, sampler, name="(R x (C x R))/K")
    sigma = so3_space(tol) if sigma is None else sigma
    h0 = phi_hom(Q, sigma, p0, "phi_0")
    h1 = phi_hom(Q, sigma, p1, "phi_1")
    return SimpleNamespace(omega=omega, phi0=p0, phi1=p1, action=action, base=base, kernel=K,
                           Q=Q, sigma=sigma, h0=h0, h1=h1)


# ------------------------------------------------------------------ ex3

def power_endo(B, k: int):
    def gmap(g, x):
        return np.linalg.matrix_power(g, k) if k >= 0 else np.linalg.matrix_power(g.T, -k)
    return TranslationHom(B, B, gmap, lambda g, x: (np.array([[float(k)]]), np.zeros((1, 1))),
                          lambda x: x, lambda x: np.eye(1), name=f"power {k}")


def ex3(tol: ToleranceProfile = DEFAULT_TOL):
    B = build_group_bundle(lie.so2(), 1, lambda rng: rng.uniform(-3, 3, 1), tol, "SO(2) x R")
    return SimpleNamespace(B=B, endo=lambda k: power_endo(B, k),
                           tau=NaturalTransformationWitness(lambda x: B.unit(x), "congruence"))


# ------------------------------------------------------------------ ex4

def ex4(omega="poly:0,1", scale=Fraction(1, 2), tol: ToleranceProfile = DEFAULT_TOL):
    omega = lie.parse_frequency(omega)
    action = lie.rotation_action(omega)
    base = build_translation(action.group, action, tol=tol, name="R x (C x R)")
    K1 = RotationKernel(omega, Fraction(1), tol)
    K2 = RotationKernel(omega, Fraction(scale), tol)
    witness_point = np.array([0.0, 0.0, 3.0])
    return SimpleNamespace(omega=omega, base=base, K1=K1, K2=K2, witness_point=witness_point,
                           witness_theta=math.pi / 3)


# ----------------------------------------------- natural transformation effect

def connecting_rotation(tol: ToleranceProfile = DEFAULT_TOL, sigma=None):
    """Two homomorphisms from the unit groupoid over (0, inf) into SO(3) x R^3,
    t -> (0, 0, t) and t -> R_x(t)(0, 0, t), joined by the arrows R_x(t)."""
    sigma = so3_space(tol) if sigma is None else sigma
    U = build_group_bundle(lie.trivial_group(), 1, lambda rng: np.array([rng.uniform(0.2, 5.0)]),
                           tol, "unit groupoid over (0, inf)")
    ident = lambda g, x: np.eye(3)
    nojac = lambda g, x: (np.zeros((3, 0)), np.zeros((3, 1)))
    f0 = lambda x: np.array([0.0, 0.0, x[0]])
    df0 = lambda x: E3.reshape(3, 1).copy()
    f1 = lambda x: lie.rot_x(x[0]) @ np.array([0.0, 0.0, x[0]])

    def df1(x):
        t = x[0]
        dR = lie.LX @ lie.rot_x(t)
        return (lie.rot_x(t) @ E3 + t * dR @ E3).reshape(3, 1)

    a = TranslationHom(U, sigma, ident, nojac, f0, df0, name="sigma_0")
    b = TranslationHom(U, sigma, ident, nojac, f1, df1, name="sigma_1")
    tau = NaturalTransformationWitness(lambda x: sigma.arrow(lie.rot_x(x[0]), f0(x)), "exact")
    return SimpleNamespace(U=U, sigma=sigma, phi=a, psi=b, tau=tau)


# ---------------------------------------------------------------- custom

GROUPS = {
    "so3": lie.so3_on_r3,
    "o2": lie.o2_on_r2,
    "so2": lie.so2_on_r2,
    "g": lie.axis_flip_on_r3,
}


def custom(group: str, point, tol: ToleranceProfile = DEFAULT_TOL):
    key = str(group).lower()
    if key not in GROUPS:
        raise ConfigurationError(f"unknown group {group!r}; choose from {sorted(GROUPS)}")
    action = GROUPS[key]()
    x = np.asarray(point, float).ravel()
    if x.size != action.base_dim:
        raise ConfigurationError(f"point must have {action.base_dim} coordinates")
    G = build_translation(action.group, action, tol=tol, name=f"{action.group.name} x R^{x.size}")
    return SimpleNamespace(G=G, point=x)
