import math

import numpy as np
import pytest

from groupoid_effect.errors import InputError, NotWellDefinedError
from groupoid_effect.numlin import (DEFAULT_TOL, Subspace, ToleranceProfile, induced_quotient_map,
                                    null_space, numeric_rank, orthonormalize, parse_overrides,
                                    quotient_space, subspace_distance)


def test_rank_of_known_matrices():
    assert numeric_rank(np.eye(3), DEFAULT_TOL) == 3
    assert numeric_rank(np.outer([1, 2, 3], [4, 5, 6]), DEFAULT_TOL) == 1
    assert numeric_rank(np.zeros((2, 4)), DEFAULT_TOL) == 0
    # a tiny perturbation stays below the relative threshold
    A = np.diag([1.0, 1.0, 1e-14])
    assert numeric_rank(A, DEFAULT_TOL) == 2


def test_null_space_is_annihilated(rng):
    A = rng.standard_normal((2, 5))
    N = null_space(A, DEFAULT_TOL, ncols=5)
    assert N.shape == (5, 3)
    assert np.allclose(A @ N, 0, atol=1e-12)
    assert np.allclose(N.T @ N, np.eye(3), atol=1e-12)


def test_orthonormalize_drops_dependent_columns():
    S = orthonormalize([[1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 1.0, 1.0]], DEFAULT_TOL, 3)
    assert S.dim == 2
    assert np.allclose(S.basis.T @ S.basis, np.eye(2))
    assert S.contains(np.array([3.0, 1.0, 1.0]))


def test_principal_angle_between_lines():
    a = Subspace(2, np.array([[1.0], [0.0]]))
    b = Subspace(2, np.array([[math.cos(0.3)], [math.sin(0.3)]]))
    assert subspace_distance(a, b) == pytest.approx(0.3, abs=1e-12)
    assert subspace_distance(a, Subspace.full(2)) == pytest.approx(math.pi / 2)


def test_complement_and_projector(rng):
    S = orthonormalize(rng.standard_normal((2, 4)), DEFAULT_TOL, 4)
    C = Subspace(4, S.orthogonal_complement())
    assert C.dim == 2
    P = S.projector() + C.projector()
    assert np.allclose(P, np.eye(4), atol=1e-12)
    assert S.contains(S.basis @ np.array([1.0, -2.0]))


def test_quotient_map_of_a_reflection():
    # R^2 modulo the x axis; the reflection y -> -y induces -1
    L = Subspace(2, np.array([[1.0], [0.0]]))
    Q = quotient_space(L, None, DEFAULT_TOL)
    M = induced_quotient_map(np.diag([1.0, -1.0]), Q, Q, DEFAULT_TOL)
    assert M.matrix.shape == (1, 1)
    assert abs(abs(M.matrix[0, 0]) - 1) < 1e-12 and M.matrix[0, 0] < 0
    assert M.deviation_from_identity() == pytest.approx(2.0)


def test_quotient_map_requires_preserved_subspace():
    L = Subspace(2, np.array([[1.0], [0.0]]))
    Q = quotient_space(L, None, DEFAULT_TOL)
    shear = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(NotWellDefinedError) as info:
        induced_quotient_map(shear, Q, Q, DEFAULT_TOL)
    assert info.value.residual == pytest.approx(1.0)


def test_tolerance_profile_validation_and_overrides(monkeypatch):
    with pytest.raises(InputError):
        ToleranceProfile(map_abs_tol=0.0)
    assert parse_overrides("map_abs_tol=1e-9, fd_step=1e-5") == {"map_abs_tol": 1e-9, "fd_step": 1e-5}
    assert parse_overrides('{"rank_rel_tol": 1e-11}') == {"rank_rel_tol": 1e-11}
    monkeypatch.setenv("GE_TOL_OVERRIDE", "map_abs_tol=1e-9")
    assert ToleranceProfile.from_env().map_abs_tol == 1e-9
    with pytest.raises(InputError):
        DEFAULT_TOL.with_overrides({"nope": 1})
