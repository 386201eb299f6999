"""Invariant covariant derivatives as coefficient data on m.

An invariant covariant derivative on the quotient is determined by a
bilinear map ``alpha: m x m -> m`` commuting with the isotropy action.  We
store alpha as a rank-3 coefficient array ``a[k, i, j]`` over the chosen
m-basis, i.e. ``alpha(A_i, A_j) = sum_k a[k, i, j] A_k``.  Everything else
in this module (value at the base point, torsion, curvature, metric
diagnostics) is a contraction of that array with the bracket tables cached
on the decomposition.

Conventions, with all vectors in m-coordinates:

* value at the base point:   ``-[X, Y]_m + alpha(X, Y)``
* torsion:                   ``alpha(X, Y) - alpha(Y, X) - [X, Y]_m``
* curvature:                 ``alpha(X, alpha(Y, Z)) - [[X, Y]_h, Z]
  - alpha([X, Y]_m, Z) - alpha(Y, alpha(X, Z))``
* metric compatibility:      ``alpha(X, .)`` skew-adjoint for every X
* Levi-Civita:               ``alpha = 1/2 [X, Y]_m + U`` with
  ``2 <U(X,Y), Z> = <[Z,X]_m, Y> + <X, [Z,Y]_m>``
"""

from __future__ import annotations

import numpy as np

from .reductive import (
    MetricOnM,
    ReductiveDecomposition,
    check_ad_H_invariance_bilinear,
    check_metric_invariance,
)
from .reporting import CheckReport, DEFAULT_TOLERANCES

__all__ = [
    "AlphaMap",
    "TensorAtOrigin",
    "canonical_first",
    "canonical_second",
    "levi_civita_alpha",
    "nabla_at_origin",
    "torsion",
    "curvature",
    "naturally_reductive_check",
    "is_metric",
    "sectional_curvature",
]

INVARIANCE_TOL = DEFAULT_TOLERANCES["invariance"]
ALGEBRAIC_TOL = DEFAULT_TOLERANCES["naturally_reductive"]
H_LEAK_TOL = DEFAULT_TOLERANCES["curvature_h_leak"]

LABELS = ("explicit", "canonical_first", "canonical_second", "levi_civita")


class AlphaMap:
    """Coefficient model of an isotropy-invariant bilinear map on m.

    Invariance is enforced at construction unless ``unchecked=True`` is
    passed, in which case the map is marked tainted and every downstream
    report says so (a non-invariant alpha does not define a connection on
    the quotient; integrating with one is exploratory only).
    """

    def __init__(self, dec: ReductiveDecomposition, coeffs, label: str = "explicit",
                 unchecked: bool = False):
        if label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}")
        coeffs = np.array(coeffs, dtype=float)
        if coeffs.shape != (dec.N, dec.N, dec.N):
            raise ValueError(
                f"alpha coefficients must have shape ({dec.N},) * 3, got {coeffs.shape}"
            )
        if not unchecked:
            report = check_ad_H_invariance_bilinear(dec, coeffs)
            if not report.passed:
                raise ValueError(
                    "bilinear map is not Ad(H)-invariant "
                    f"(residual {report.max_residual:.3e} > {report.tolerance:.1e}); "
                    "pass unchecked=True to build it anyway (tainted)"
                )
        coeffs.setflags(write=False)
        self.dec = dec
        self.coeffs = coeffs
        self.label = label
        self.checked = not unchecked

    def __call__(self, x, y) -> np.ndarray:
        """Evaluate alpha(X, Y) in m-coordinates."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != (self.dec.N,) or y.shape != (self.dec.N,):
            raise ValueError(f"expected m-coordinate vectors of length {self.dec.N}")
        return np.einsum("kij,i,j->k", self.coeffs, x, y)

    def left_matrix(self, x) -> np.ndarray:
        """Matrix of Y -> alpha(X, Y) for fixed X."""
        return np.einsum("kij,i->kj", self.coeffs, np.asarray(x, dtype=float))

    def __repr__(self):
        taint = "" if self.checked else ", unchecked"
        return f"AlphaMap({self.label}, N={self.dec.N}{taint})"


class TensorAtOrigin:
    """Torsion (rank 3) or curvature (rank 4) coefficients on the m-basis."""

    def __init__(self, kind: str, coeffs: np.ndarray, tainted: bool = False):
        if kind not in ("torsion", "curvature"):
            raise ValueError("kind must be 'torsion' or 'curvature'")
        coeffs = np.asarray(coeffs, dtype=float)
        coeffs.setflags(write=False)
        self.kind = kind
        self.coeffs = coeffs
        self.tainted = tainted

    def __call__(self, *vectors) -> np.ndarray:
        want = self.coeffs.ndim - 1
        if len(vectors) != want:
            raise ValueError(f"{self.kind} tensor takes {want} vectors")
        out = self.coeffs
        for v in vectors:
            out = np.tensordot(out, np.asarray(v, dtype=float), axes=([1], [0]))
        return out

    def __repr__(self):
        return f"TensorAtOrigin({self.kind}, shape={self.coeffs.shape})"


def canonical_first(dec: ReductiveDecomposition) -> AlphaMap:
    """alpha(X, Y) = 1/2 [X, Y]_m: the torsion-free canonical derivative."""
    return AlphaMap(dec, 0.5 * dec.m_bracket_tensor, label="canonical_first")


def canonical_second(dec: ReductiveDecomposition) -> AlphaMap:
    """alpha = 0: one-parameter curves are geodesics and frames are parallel."""
    return AlphaMap(dec, np.zeros((dec.N,) * 3), label="canonical_second")


def levi_civita_alpha(dec: ReductiveDecomposition, metric: MetricOnM,
                      unchecked: bool = False) -> AlphaMap:
    """alpha of the Levi-Civita derivative of an invariant metric.

    For each basis pair the symmetric part U solves ``2 G u = r`` with
    ``r_l = <[A_l, A_i]_m, A_j> + <A_i, [A_l, A_j]_m>``; the gram matrix is
    factored once and reused for all N^2 right-hand sides.  A metric failing
    the invariance check is rejected unless ``unchecked=True``, which
    yields a tainted map (the formula still defines the Levi-Civita
    derivative at the base point, but not an invariant one).
    """
    if not unchecked:
        report = check_metric_invariance(dec, metric)
        if not report.passed:
            raise ValueError(
                f"metric is not Ad(H)-invariant (residual {report.max_residual:.3e}); "
                "its Levi-Civita derivative is not invariant"
            )
    g = metric.gram
    b = dec.m_bracket_tensor
    n = dec.N
    # r[l, i, j] = <[A_l, A_i]_m, A_j> + <A_i, [A_l, A_j]_m>
    r = np.einsum("kli,kj->lij", b, g) + np.einsum("klj,ki->lij", b, g)
    u = np.linalg.solve(2.0 * g, r.reshape(n, n * n)).reshape(n, n, n)
    return AlphaMap(dec, 0.5 * b + u, label="levi_civita", unchecked=unchecked)


def nabla_at_origin(alpha: AlphaMap, x, y) -> np.ndarray:
    """Covariant derivative of fundamental fields at the base point: -[X,Y]_m + alpha(X,Y)."""
    return -alpha.dec.bracket_m(x, y) + alpha(x, y)


def torsion(alpha: AlphaMap) -> TensorAtOrigin:
    """Torsion tensor; exactly antisymmetric in its two inputs by construction."""
    a = alpha.coeffs
    t = a - np.swapaxes(a, 1, 2) - alpha.dec.m_bracket_tensor
    return TensorAtOrigin("torsion", t, tainted=not alpha.checked)


def curvature(alpha: AlphaMap) -> TensorAtOrigin:
    """Curvature tensor R[l, i, j, k] = coords of R(A_i, A_j) A_k.

    The term [[X, Y]_h, Z] is a full-algebra bracket; reductivity guarantees
    it lands in m, and this is asserted (h-leak <= 1e-10) rather than
    silently projected away.
    """
    dec = alpha.dec
    a = alpha.coeffs
    n, q = dec.N, dec.q

    # alpha(A_i, alpha(A_j, A_k)) and the swap
    a_aa = np.einsum("lim,mjk->lijk", a, a)
    term1 = a_aa
    term4 = np.einsum("ljm,mik->lijk", a, a)
    # alpha([A_i, A_j]_m, A_k)
    term3 = np.einsum("lmk,mij->lijk", a, dec.m_bracket_tensor)

    # [[A_i, A_j]_h, A_k]: ambient bracket of the h-part with A_k
    if q:
        hpart = np.einsum("rij,ra->aij", dec._m_pair_bracket_h, dec.h_basis)  # ambient
        amb = np.einsum("kab,aij,bc->kijc", dec.algebra.structure_constants,
                        hpart, dec.m_basis.T)
        coords = dec._cob_inv @ amb.reshape(dec.algebra.dim, -1)
        coords = coords.reshape(dec.algebra.dim, n, n, n)
        leak = float(np.max(np.abs(coords[:q]))) if coords[:q].size else 0.0
        if leak > H_LEAK_TOL:
            raise ValueError(
                f"[[X, Y]_h, Z] leaves m by {leak:.3e}; decomposition is inconsistent"
            )
        term2 = coords[q:]
    else:
        term2 = np.zeros((n, n, n, n))

    r = term1 - term2 - term3 - term4
    return TensorAtOrigin("curvature", r, tainted=not alpha.checked)


def naturally_reductive_check(dec: ReductiveDecomposition, metric: MetricOnM,
                              tol: float = ALGEBRAIC_TOL) -> CheckReport:
    """Residual of <[X, Y]_m, Z> = <X, [Y, Z]_m> over all basis triples."""
    g = metric.gram
    b = dec.m_bracket_tensor
    lhs = np.einsum("lij,lk->ijk", b, g)
    rhs = np.einsum("il,ljk->ijk", g, b)
    diff = np.abs(lhs - rhs)
    worst = float(np.max(diff)) if diff.size else 0.0
    witnesses = []
    if diff.size and worst > tol:
        i, j, k = np.unravel_index(int(np.argmax(diff)), diff.shape)
        witnesses = [{"triple": [int(i), int(j), int(k)], "residual": worst}]
    return CheckReport.from_residual(
        "naturally_reductive", worst, tol, witnesses=witnesses, mandatory=False
    )


def is_metric(alpha: AlphaMap, metric: MetricOnM,
              tol: float = ALGEBRAIC_TOL) -> CheckReport:
    """Residual of skew-adjointness <alpha(X, Y), Z> = -<Y, alpha(X, Z)>."""
    g = metric.gram
    a = alpha.coeffs
    lhs = np.einsum("kij,kl->ijl", a, g)   # <alpha(A_i, A_j), A_l>
    rhs = np.einsum("kil,kj->ijl", a, g)   # <A_j, alpha(A_i, A_l)>
    diff = np.abs(lhs + rhs)
    worst = float(np.max(diff)) if diff.size else 0.0
    witnesses = []
    if diff.size and worst > tol:
        i, j, k = np.unravel_index(int(np.argmax(diff)), diff.shape)
        witnesses = [{"triple": [int(i), int(j), int(k)], "residual": worst}]
    return CheckReport.from_residual(
        "is_metric", worst, tol, witnesses=witnesses, mandatory=False,
        tainted=not alpha.checked,
    )


def sectional_curvature(alpha: AlphaMap, metric: MetricOnM, x, y,
                        riem: TensorAtOrigin | None = None) -> float:
    """<R(X, Y)Y, X> normalized by the gram area of the (X, Y) plane.

    Indefinite metrics make some planes null; a denominator below 1e-12 is
    refused instead of divided by.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    g = metric.gram
    denom = (x @ g @ x) * (y @ g @ y) - (x @ g @ y) ** 2
    if abs(denom) < 1e-12:
        raise ValueError(f"degenerate plane: gram area {denom:.3e} below 1e-12")
    r = riem if riem is not None else curvature(alpha)
    num = r(x, y, y) @ g @ x
    return float(num / denom)
