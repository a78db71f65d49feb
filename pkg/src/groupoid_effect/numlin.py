"""Tolerance-aware dense linear algebra.

Subspaces are stored through orthonormal bases, quotient spaces through the
orthogonal complement of the subspace being divided out, and linear maps on
quotients as matrices in those complement bases.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields, replace
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .errors import InputError, NotWellDefinedError

__all__ = [
    "ToleranceProfile",
    "DEFAULT_TOL",
    "Subspace",
    "QuotientSpace",
    "QuotientLinearMap",
    "orthonormalize",
    "numeric_rank",
    "null_space",
    "quotient_space",
    "induced_quotient_map",
    "subspace_distance",
]


@dataclass(frozen=True)
class ToleranceProfile:
    rank_rel_tol: float = 1e-10
    map_abs_tol: float = 1e-8
    fd_abs_tol: float = 1e-5
    fd_step: float = 1e-6

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not np.isfinite(value) or value <= 0:
                raise InputError(f"tolerance {f.name} must be positive, got {value!r}")
        if self.fd_abs_tol < self.map_abs_tol:
            raise InputError("fd_abs_tol must be >= map_abs_tol")

    def with_overrides(self, overrides: dict) -> "ToleranceProfile":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise InputError(f"unknown tolerance field(s): {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})

    @classmethod
    def from_env(cls, var: str = "GE_TOL_OVERRIDE") -> "ToleranceProfile":
        """Profile with overrides read from ``var``.

        The variable holds either a JSON object or ``key=value`` pairs
        separated by commas, e.g. ``map_abs_tol=1e-9,fd_step=1e-5``.
        """
        raw = os.environ.get(var, "").strip()
        if not raw:
            return cls()
        return cls().with_overrides(parse_overrides(raw))

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def parse_overrides(raw: str) -> dict:
    raw = raw.strip()
    if raw.startswith("{"):
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise InputError(f"bad tolerance override JSON: {exc}") from None
        if not isinstance(data, dict):
            raise InputError("tolerance override JSON must be an object")
        return data
    out = {}
    for item in raw.split(","):
        if not item.strip():
            continue
        key, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"bad tolerance override item {item!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise InputError(f"bad tolerance value in {item!r}") from None
    return out


DEFAULT_TOL = ToleranceProfile()


def _rank_threshold(singular_values, shape, tol: ToleranceProfile) -> float:
    if singular_values.size == 0:
        return 0.0
    return tol.rank_rel_tol * max(shape) * float(singular_values[0])


def numeric_rank(A, tol: ToleranceProfile = DEFAULT_TOL) -> int:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > _rank_threshold(s, A.shape, tol)))


def null_space(A, tol: ToleranceProfile = DEFAULT_TOL, ncols: int | None = None) -> np.ndarray:
    """Orthonormal basis of the numerical kernel of ``A``.

    ``ncols`` gives the domain dimension when ``A`` has no rows.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise InputError("null_space expects a matrix")
    n = A.shape[1] if ncols is None else ncols
    if A.shape[0] == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(A, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(n)
    r = int(np.sum(s > _rank_threshold(s, A.shape, tol)))
    return vt[r:].T.copy()


@dataclass(frozen=True)
class Subspace:
    """Span of the orthonormal columns of ``basis`` inside R^ambient_dim."""

    ambient_dim: int
    basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float).reshape(self.ambient_dim, -1)
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(n, np.zeros((n, 0)))

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(n, np.eye(n))

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def residual(self, vectors) -> float:
        """Largest norm of the component of ``vectors`` (columns) off this subspace."""
        V = np.asarray(vectors, dtype=float).reshape(self.ambient_dim, -1)
        if V.shape[1] == 0:
            return 0.0
        off = V - self.basis @ (self.basis.T @ V)
        return float(np.max(np.linalg.norm(off, axis=0)))

    def contains(self, vectors, tol: ToleranceProfile = DEFAULT_TOL) -> bool:
        return self.residual(vectors) <= tol.map_abs_tol

    def orthogonal_complement(self, within: "Subspace | None" = None,
                              tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
        """Orthonormal basis of ``within`` ∩ self^⊥ (``within`` defaults to everything)."""
        n = self.ambient_dim
        if within is None:
            if self.dim == 0:
                return np.eye(n)
            return null_space(self.basis.T, tol, ncols=n)
        W = within.basis
        if W.shape[1] == 0:
            return np.zeros((n, 0))
        if self.dim == 0:
            return W.copy()
        coeffs = null_space(self.basis.T @ W, tol, ncols=W.shape[1])
        return orthonormalize(list((W @ coeffs).T), tol, ambient_dim=n).basis

    def distance(self, other: "Subspace") -> float:
        return subspace_distance(self, other)


def subspace_distance(a: Subspace, b: Subspace) -> float:
    """Largest principal angle; ``pi/2`` when dimensions differ."""
    if a.ambient_dim != b.ambient_dim:
        raise InputError("subspaces live in different ambient spaces")
    if a.dim != b.dim:
        return float(np.pi / 2)
    if a.dim == 0:
        return 0.0
    return float(np.max(scipy.linalg.subspace_angles(a.basis, b.basis)))


def orthonormalize(vectors: Sequence | Iterable, tol: ToleranceProfile = DEFAULT_TOL,
                   ambient_dim: int | None = None) -> Subspace:
    vecs = [np.asarray(v, dtype=float).ravel() for v in vectors]
    if not vecs:
        if ambient_dim is None:
            raise InputError("ambient dimension required for an empty family")
        return Subspace.zero(ambient_dim)
    n = vecs[0].size
    if any(v.size != n for v in vecs):
        raise InputError("vectors have mismatched dimensions")
    if ambient_dim is not None and ambient_dim != n:
        raise InputError(f"vectors have dimension {n}, expected {ambient_dim}")
    if n == 0:
        raise InputError("vectors must have dimension >= 1")
    M = np.column_stack(vecs)
    u, s, _ = np.linalg.svd(M, full_matrices=False)
    if s[0] == 0.0:
        return Subspace.zero(n)
    r = int(np.sum(s > tol.rank_rel_tol * max(n, len(vecs)) * s[0]))
    return Subspace(n, u[:, :r].copy())


def span_columns(M, tol: ToleranceProfile = DEFAULT_TOL) -> Subspace:
    M = np.asarray(M, dtype=float)
    return orthonormalize(list(M.T), tol, ambient_dim=M.shape[0])


@dataclass(frozen=True)
class QuotientSpace:
    """``tangent / longitudinal`` realized on the orthogonal complement.

    ``tangent`` is ``None`` when the tangent space is the whole ambient
    space (open subsets of coordinate space).
    """

    ambient_dim: int
    longitudinal: Subspace
    complement: np.ndarray = field(repr=False)
    tangent: Subspace | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.complement.shape[1]

    def tangent_dim(self) -> int:
        return self.ambient_dim if self.tangent is None else self.tangent.dim

    def coordinates(self, v) -> np.ndarray:
        return self.complement.T @ np.asarray(v, dtype=float)


def quotient_space(longitudinal: Subspace, tangent: Subspace | None = None,
                   tol: ToleranceProfile = DEFAULT_TOL) -> QuotientSpace:
    if tangent is not None:
        if tangent.ambient_dim != longitudinal.ambient_dim:
            raise InputError("tangent and longitudinal ambient dimensions differ")
        if tangent.dim == tangent.ambient_dim:
            tangent = None
        elif not tangent.contains(longitudinal.basis, tol):
            raise InputError("longitudinal subspace is not contained in the tangent space")
    comp = longitudinal.orthogonal_complement(within=tangent, tol=tol)
    return QuotientSpace(longitudinal.ambient_dim, longitudinal, comp, tangent)


@dataclass(frozen=True)
class QuotientLinearMap:
    source: QuotientSpace
    target: QuotientSpace
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float).reshape(self.target.dim, self.source.dim)
        object.__setattr__(self, "matrix", m)

    def __matmul__(self, other: "QuotientLinearMap") -> "QuotientLinearMap":
        return QuotientLinearMap(other.source, self.target, self.matrix @ other.matrix)

    def deviation_from_identity(self) -> float:
        if self.source.dim != self.target.dim:
            return float("inf")
        return float(np.linalg.norm(self.matrix - np.eye(self.source.dim), 2)) if self.source.dim else 0.0

    def singular_values(self) -> np.ndarray:
        if self.matrix.size == 0:
            return np.zeros(0)
        return np.linalg.svd(self.matrix, compute_uv=False)


def _scale(A) -> float:
    return max(1.0, float(np.linalg.norm(A, 2))) if A.size else 1.0


def induced_quotient_map(A, src: QuotientSpace, dst: QuotientSpace,
                         tol: ToleranceProfile = DEFAULT_TOL) -> QuotientLinearMap:
    """Matrix of the map induced by ``A`` from ``src`` to ``dst``.

    Raises NotWellDefinedError unless ``A`` carries the source longitudinal
    subspace into the target one (and the source tangent space into the
    target tangent space), both within ``map_abs_tol`` relative to ``|A|``.
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (dst.ambient_dim, src.ambient_dim):
        raise InputError(f"map has shape {A.shape}, expected {(dst.ambient_dim, src.ambient_dim)}")
    bound = tol.map_abs_tol * _scale(A)
    res = dst.longitudinal.residual(A @ src.longitudinal.basis)
    if res > bound:
        raise NotWellDefinedError("longitudinal subspace not preserved", res)
    if dst.tangent is not None:
        src_t = np.eye(src.ambient_dim) if src.tangent is None else src.tangent.basis
        res_t = dst.tangent.residual(A @ src_t)
        if res_t > bound:
            raise NotWellDefinedError("tangent space not preserved", res_t)
    return QuotientLinearMap(src, dst, dst.complement.T @ A @ src.complement)
