"""Finite-dimensional Lie algebras and matrix Lie groups.

A Lie algebra is stored through its structure constants ``c[k, i, j]``,
meaning ``[xi_i, xi_j] = sum_k c[k, i, j] xi_k`` in a fixed basis
``xi_1, ..., xi_n``.  Optionally the basis carries a matrix realization,
which unlocks the group-level operations: the matrix exponential and the
adjoint representation ``Ad_g``.

All objects are immutable after construction; every operation is a pure
function, so instances can be shared freely across threads.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "StructuredLieAlgebra",
    "GroupElement",
    "expm",
    "expand_in_matrix_basis",
]

# Antisymmetry violations below this are treated as representation noise
# and canonicalized away; anything larger is a modeling error and rejected.
ANTISYMMETRY_TOL = 1e-12
JACOBI_TOL = 1e-12
COMMUTATOR_TOL = 1e-10
BASIS_RESIDUAL_TOL = 1e-8
DET_FLOOR = 1e-12
GROUP_DRIFT_TOL = 1e-8

# Scaling-and-squaring parameters: scale until the 1-norm is at most 0.5,
# then evaluate a Taylor block of this order.  Remainder < 0.5^13/13! ~ 2e-14.
_EXPM_SERIES_ORDER = 12
_EXPM_NORM_CAP = 0.5


def expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring with a truncated series."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expm expects a square matrix, got shape {a.shape}")
    d = a.shape[0]
    norm1 = np.linalg.norm(a, 1)
    squarings = 0
    if norm1 > _EXPM_NORM_CAP:
        squarings = int(np.ceil(np.log2(norm1 / _EXPM_NORM_CAP)))
    b = a / (2.0 ** squarings)
    eye = np.eye(d)
    out = eye.copy()
    for j in range(_EXPM_SERIES_ORDER, 0, -1):
        out = eye + (b @ out) / j
    for _ in range(squarings):
        out = out @ out
    return out


def expand_in_matrix_basis(
    basis: np.ndarray,
    targets: np.ndarray,
    residual_tol: float = BASIS_RESIDUAL_TOL,
    what: str = "matrix",
    strict: bool = True,
):
    """Express matrices as linear combinations of a matrix basis.

    ``basis`` has shape (n, d, d) and ``targets`` (m, d, d) or (d, d).
    Returns the coefficient array of shape (m, n) (or (n,)).  In strict
    mode the least squares residual of each expansion must stay below
    ``residual_tol`` relative to the target scale, otherwise the target
    does not lie in the span and a ValueError is raised.  With
    ``strict=False`` the per-target relative residuals are returned
    alongside the coefficients instead.
    """
    basis = np.asarray(basis, dtype=float)
    targets = np.asarray(targets, dtype=float)
    single = targets.ndim == 2
    if single:
        targets = targets[None]
    n = basis.shape[0]
    mat = basis.reshape(n, -1).T          # (d*d, n)
    rhs = targets.reshape(targets.shape[0], -1).T
    coeffs, *_ = np.linalg.lstsq(mat, rhs, rcond=None)
    resid = mat @ coeffs - rhs
    scale = np.maximum(1.0, np.max(np.abs(rhs), axis=0))
    worst = np.max(np.abs(resid), axis=0) / scale
    out = coeffs.T
    if not strict:
        return (out[0], worst[0]) if single else (out, worst)
    if np.any(worst > residual_tol):
        k = int(np.argmax(worst))
        raise ValueError(
            f"{what} #{k} is not in the span of the algebra basis "
            f"(residual {worst[k]:.3e} > {residual_tol:.1e})"
        )
    return out[0] if single else out


def _check_vector(coords, dim: int) -> np.ndarray:
    v = np.asarray(coords, dtype=float)
    if v.shape != (dim,):
        raise ValueError(f"expected coefficient vector of length {dim}, got shape {v.shape}")
    return v


class StructuredLieAlgebra:
    """A Lie algebra given by structure constants, optionally matrix-realized.

    Construction validates antisymmetry (violations beyond 1e-12 are
    rejected, smaller ones canonicalized exactly), the Jacobi identity,
    and, when a matrix basis is supplied, that matrix commutators match
    the structure constants and that the basis matrices are linearly
    independent.
    """

    def __init__(self, structure_constants, matrix_basis=None, name: str = "",
                 orthogonal: bool = False):
        c = np.array(structure_constants, dtype=float)
        if c.ndim != 3 or len(set(c.shape)) != 1:
            raise ValueError(f"structure constants must be a cubic array, got shape {c.shape}")
        n = c.shape[0]

        asym = np.max(np.abs(c + np.swapaxes(c, 1, 2)))
        if asym > ANTISYMMETRY_TOL:
            raise ValueError(
                f"structure constants violate antisymmetry by {asym:.3e} "
                f"(> {ANTISYMMETRY_TOL:.1e}); refusing to repair"
            )
        c = 0.5 * (c - np.swapaxes(c, 1, 2))

        jac = (
            np.einsum("mij,lmk->lijk", c, c)
            + np.einsum("mjk,lmi->lijk", c, c)
            + np.einsum("mki,lmj->lijk", c, c)
        )
        jac_max = float(np.max(np.abs(jac))) if n else 0.0
        if jac_max > JACOBI_TOL:
            raise ValueError(f"Jacobi identity violated: max residual {jac_max:.3e}")

        self.dim = n
        self.structure_constants = c
        self.name = name or f"lie-algebra(dim={n})"
        self.orthogonal = orthogonal
        self.matrix_basis = None
        self.matrix_dim = None

        if matrix_basis is not None:
            basis = np.array(matrix_basis, dtype=float)
            if basis.ndim != 3 or basis.shape[0] != n or basis.shape[1] != basis.shape[2]:
                raise ValueError(
                    f"matrix basis must have shape ({n}, d, d), got {basis.shape}"
                )
            rank = np.linalg.matrix_rank(basis.reshape(n, -1))
            if rank < n:
                raise ValueError("matrix basis is linearly dependent")
            comm = np.einsum("iab,jbc->ijac", basis, basis) - np.einsum(
                "jab,ibc->ijac", basis, basis
            )
            model = np.einsum("kij,kab->ijab", c, basis)
            err = float(np.max(np.abs(comm - model)))
            if err > COMMUTATOR_TOL:
                raise ValueError(
                    f"matrix commutators disagree with structure constants by {err:.3e}"
                )
            self.matrix_basis = basis
            self.matrix_dim = basis.shape[1]

        for arr in (self.structure_constants, self.matrix_basis):
            if arr is not None:
                arr.setflags(write=False)

    # -- algebra-level operations -------------------------------------------------

    def bracket(self, a, b) -> np.ndarray:
        """Lie bracket [a, b] in basis coordinates."""
        a = _check_vector(a, self.dim)
        b = _check_vector(b, self.dim)
        return np.einsum("kij,i,j->k", self.structure_constants, a, b)

    def ad(self, a) -> np.ndarray:
        """Matrix of ad_a = [a, .] acting on coordinate vectors."""
        a = _check_vector(a, self.dim)
        return np.einsum("kij,i->kj", self.structure_constants, a)

    def matrix(self, a) -> np.ndarray:
        """Matrix realization of a coordinate vector."""
        self._require_matrices()
        a = _check_vector(a, self.dim)
        return np.einsum("i,iab->ab", a, self.matrix_basis)

    def coords(self, mat: np.ndarray) -> np.ndarray:
        """Coordinates of a matrix lying in the realized algebra."""
        self._require_matrices()
        return expand_in_matrix_basis(self.matrix_basis, mat, what="algebra element")

    # -- group-level operations ---------------------------------------------------

    def group_exp(self, a, t: float = 1.0) -> "GroupElement":
        """Group element exp(t a) from the matrix exponential."""
        self._require_matrices()
        return GroupElement(expm(float(t) * self.matrix(a)), self)

    def adjoint_Ad(self, g: "GroupElement") -> np.ndarray:
        """Matrix of Ad_g : xi -> g xi g^-1 in the chosen basis.

        Fails if some conjugated basis matrix leaves the span of the
        realized algebra, which signals that g does not normalize it.
        """
        self._require_matrices()
        mat = g.matrix if isinstance(g, GroupElement) else np.asarray(g, dtype=float)
        ginv = np.linalg.inv(mat)
        conj = np.einsum("ab,ibc,cd->iad", mat, self.matrix_basis, ginv)
        coeffs = expand_in_matrix_basis(
            self.matrix_basis, conj, what="Ad-conjugated basis matrix"
        )
        return coeffs.T  # column i = coords of g xi_i g^-1

    def identity(self) -> "GroupElement":
        self._require_matrices()
        return GroupElement(np.eye(self.matrix_dim), self)

    def _require_matrices(self):
        if self.matrix_basis is None:
            raise ValueError(f"{self.name} has no matrix realization")

    def __repr__(self):
        real = f", d={self.matrix_dim}" if self.matrix_basis is not None else ""
        return f"StructuredLieAlgebra({self.name!r}, n={self.dim}{real})"


class GroupElement:
    """An invertible matrix tagged with the algebra whose group it belongs to."""

    def __init__(self, matrix, algebra: StructuredLieAlgebra, drift_tol: float = GROUP_DRIFT_TOL):
        mat = np.array(matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"group element must be a square matrix, got shape {mat.shape}")
        det = np.linalg.det(mat)
        if abs(det) < DET_FLOOR:
            raise ValueError(f"matrix is numerically singular (|det| = {abs(det):.3e})")
        if algebra.orthogonal:
            drift = float(np.max(np.abs(mat.T @ mat - np.eye(mat.shape[0]))))
            if drift > drift_tol:
                raise ValueError(
                    f"orthogonality drift {drift:.3e} exceeds {drift_tol:.1e}"
                )
        mat.setflags(write=False)
        self.matrix = mat
        self.algebra = algebra

    def inverse(self) -> "GroupElement":
        return GroupElement(np.linalg.inv(self.matrix), self.algebra)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        if self.algebra is not other.algebra:
            raise ValueError("group elements belong to different algebras")
        return GroupElement(self.matrix @ other.matrix, self.algebra)

    def __repr__(self):
        return f"GroupElement(d={self.matrix.shape[0]}, algebra={self.algebra.name!r})"
