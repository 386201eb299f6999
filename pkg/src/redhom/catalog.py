"""Ready-made spaces: rotation groups, the 2-sphere, Stiefel and Grassmann quotients.

Two so(n) conventions coexist here.  ``so_n(n)`` carries the lexicographic
skew basis ``E_ab = e_a e_b^T - e_b e_a^T`` (a < b), which scales to any n
and is orthonormal for the bi-invariant product <X, Y> = tr(X^T Y)/2.
``so3()`` carries the familiar rotation generators L1, L2, L3 about the
coordinate axes with the cyclic table [L1, L2] = L3 etc., matching the
cross-product picture used in the rigid-body example.

Every bundle constructed here is run through the full diagnostic battery;
a catalog constructor returning an invalid space is a bug, not a report.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import StructuredLieAlgebra
from .connection import (
    AlphaMap,
    canonical_first,
    canonical_second,
    curvature,
    is_metric,
    levi_civita_alpha,
    naturally_reductive_check,
    torsion,
)
from .reductive import (
    MetricOnM,
    ReductiveDecomposition,
    build_decomposition,
    check_ad_H_invariance_bilinear,
    check_metric_invariance,
    normal_decomposition,
    symmetric_decomposition,
)
from .reporting import CheckReport, resolve_tolerances

__all__ = [
    "SpaceBundle",
    "so_n",
    "so3",
    "sphere2",
    "stiefel",
    "grassmann_like",
    "group_as_space",
    "diagnostic_battery",
]


@dataclass
class SpaceBundle:
    """An algebra, a validated decomposition, an optional metric, and suggested alphas."""

    algebra: StructuredLieAlgebra
    dec: ReductiveDecomposition
    metric: MetricOnM | None
    suggested_alphas: list[AlphaMap] = field(default_factory=list)
    provenance: str = ""
    name: str = ""

    def alpha(self, label: str) -> AlphaMap:
        for a in self.suggested_alphas:
            if a.label == label:
                return a
        raise KeyError(f"no suggested alpha labelled {label!r}")


def _pair_index(n):
    return [(a, b) for a in range(n) for b in range(a + 1, n)]


def so_n(n: int) -> StructuredLieAlgebra:
    """Skew-symmetric matrices with the lexicographic E_ab basis (a < b)."""
    if n < 2:
        raise ValueError("so(n) needs n >= 2")
    pairs = _pair_index(n)
    dim = len(pairs)
    basis = np.zeros((dim, n, n))
    for idx, (a, b) in enumerate(pairs):
        basis[idx, a, b] = 1.0
        basis[idx, b, a] = -1.0
    pos = {p: i for i, p in enumerate(pairs)}

    def coeff(a, b):
        # signed index of E_ab for arbitrary a != b
        if a < b:
            return pos[(a, b)], 1.0
        return pos[(b, a)], -1.0

    c = np.zeros((dim, dim, dim))
    # [E_ab, E_cd] = delta_bc E_ad + delta_ad E_bc - delta_bd E_ac - delta_ac E_bd
    for i, (a, b) in enumerate(pairs):
        for j, (cc, dd) in enumerate(pairs):
            for (p, q, s) in (((a, dd), b == cc, 1.0), ((b, cc), a == dd, 1.0),
                              ((a, cc), b == dd, -1.0), ((b, dd), a == cc, -1.0)):
                if q and p[0] != p[1]:
                    k, sign = coeff(*p)
                    c[k, i, j] += s * sign
    return StructuredLieAlgebra(c, basis, name=f"so({n})", orthogonal=True)


def so3() -> StructuredLieAlgebra:
    """so(3) in the rotation-generator basis: [L1, L2] = L3 cyclically."""
    l1 = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
    l2 = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    l3 = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    c = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        c[k, i, j] = 1.0
        c[k, j, i] = -1.0
    return StructuredLieAlgebra(c, np.array([l1, l2, l3]), name="so(3)",
                                orthogonal=True)


def sphere2() -> SpaceBundle:
    """The round 2-sphere as the rotation group modulo rotations about one axis.

    h = span(L3), m = span(L1, L2); the split is the canonical one of the
    symmetric pair given by conjugation with diag(-1, -1, 1), so [m, m] lies
    in h and the first canonical derivative (equal to Levi-Civita for the
    round metric) has vanishing coefficients.
    """
    alg = so3()
    dec = build_decomposition(alg, h_basis=[[0.0, 0.0, 1.0]],
                              m_basis=[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    metric = MetricOnM(np.eye(2))
    bundle = SpaceBundle(
        algebra=alg,
        dec=dec,
        metric=metric,
        suggested_alphas=[canonical_first(dec)],
        provenance="SO(3)/SO(2) via the symmetric pair fixing the third axis; round metric",
        name="sphere2",
    )
    _assert_battery(bundle)
    return bundle


def biinvariant_gram(algebra: StructuredLieAlgebra) -> np.ndarray:
    """Gram matrix of <X, Y> = tr(X^T Y)/2 on the realized basis."""
    algebra._require_matrices()
    b = algebra.matrix_basis
    return 0.5 * np.einsum("iab,jab->ij", b, b)


def stiefel(n: int, k: int) -> SpaceBundle:
    """SO(n)/SO(n-k) with the normal metric from the bi-invariant product.

    The subgroup is the lower-right SO(n-k) block; m is its orthogonal
    complement, and the restricted metric makes the space naturally
    reductive, so the first canonical and Levi-Civita derivatives agree.
    """
    if not 1 <= k < n:
        raise ValueError("stiefel(n, k) needs 1 <= k < n")
    alg = so_n(n)
    pairs = _pair_index(n)
    h_rows = [i for i, (a, b) in enumerate(pairs) if a >= k and b >= k]
    h_basis = np.eye(alg.dim)[h_rows]
    dec, metric = normal_decomposition(alg, biinvariant_gram(alg), h_basis)
    alphas = [canonical_first(dec), levi_civita_alpha(dec, metric)]
    bundle = SpaceBundle(
        algebra=alg,
        dec=dec,
        metric=metric,
        suggested_alphas=alphas,
        provenance=f"SO({n})/SO({n - k}) normal decomposition w.r.t. tr(X^T Y)/2",
        name=f"stiefel({n},{k})",
    )
    _assert_battery(bundle)
    return bundle


def grassmann_like(n: int, k: int) -> SpaceBundle:
    """The symmetric quotient of SO(n) fixed by conjugation with diag(I_k, -I_{n-k}).

    h is the block algebra so(k) + so(n-k), m the off-diagonal block of
    dimension k(n-k); both canonical derivatives vanish.  The quotient by
    the center is not modeled; all computation lives on the pair.
    """
    if not 1 <= k < n:
        raise ValueError("grassmann_like(n, k) needs 1 <= k < n")
    alg = so_n(n)
    pairs = _pair_index(n)
    # conjugation by diag(I_k, -I_{n-k}) fixes same-block E_ab, flips crossing ones
    signs = np.array([1.0 if (a < k) == (b < k) else -1.0 for a, b in pairs])
    sigma = np.diag(signs)
    dec = symmetric_decomposition(alg, sigma)
    metric = MetricOnM(dec.m_basis @ biinvariant_gram(alg) @ dec.m_basis.T)
    alphas = [canonical_first(dec), canonical_second(dec)]
    bundle = SpaceBundle(
        algebra=alg,
        dec=dec,
        metric=metric,
        suggested_alphas=alphas,
        provenance=f"SO({n}) symmetric pair under conjugation by diag(I_{k}, -I_{n - k})",
        name=f"grassmann({n},{k})",
    )
    _assert_battery(bundle)
    return bundle


def group_as_space(algebra: StructuredLieAlgebra, gram=None,
                   name: str = "") -> SpaceBundle:
    """A Lie group viewed as the quotient by the trivial subgroup.

    h = {0}, m = g, every projection is the identity, and any scalar
    product is invariant since there is no isotropy to respect.
    """
    dec = build_decomposition(algebra, h_basis=[], m_basis=np.eye(algebra.dim))
    metric = MetricOnM(gram) if gram is not None else None
    alphas = [canonical_first(dec)]
    if metric is not None:
        alphas.append(levi_civita_alpha(dec, metric))
    bundle = SpaceBundle(
        algebra=algebra,
        dec=dec,
        metric=metric,
        suggested_alphas=alphas,
        provenance=f"{algebra.name} as the quotient by the trivial subgroup",
        name=name or f"{algebra.name}/{{e}}",
    )
    _assert_battery(bundle)
    return bundle


# -- diagnostic battery -------------------------------------------------------------


def diagnostic_battery(bundle: SpaceBundle, tolerances=None) -> list[CheckReport]:
    """Run every construction-level check of a bundle and return the reports.

    Mandatory reports cover the algebra identities, the projections, the
    splitting conditions and the invariance of the attached metric and
    alphas; classification checks (natural reductivity, metric
    compatibility of each alpha) are informational.
    """
    tols = resolve_tolerances(tolerances)
    alg = bundle.algebra
    dec = bundle.dec
    reports = []

    c = alg.structure_constants
    asym = float(np.max(np.abs(c + np.swapaxes(c, 1, 2)))) if c.size else 0.0
    reports.append(CheckReport.from_residual("antisymmetry", asym, tols["antisymmetry"]))
    jac = (
        np.einsum("mij,lmk->lijk", c, c)
        + np.einsum("mjk,lmi->lijk", c, c)
        + np.einsum("mki,lmj->lijk", c, c)
    )
    reports.append(CheckReport.from_residual(
        "jacobi", float(np.max(np.abs(jac))) if c.size else 0.0, tols["jacobi"]))

    if alg.matrix_basis is not None:
        b = alg.matrix_basis
        comm = np.einsum("iab,jbc->ijac", b, b) - np.einsum("jab,ibc->ijac", b, b)
        model = np.einsum("kij,kab->ijab", c, b)
        reports.append(CheckReport.from_residual(
            "commutator_consistency", float(np.max(np.abs(comm - model))),
            tols["commutator_consistency"]))

    n = alg.dim
    eye = np.eye(n)
    proj = max(
        float(np.max(np.abs(dec.pr_h + dec.pr_m - eye))),
        float(np.max(np.abs(dec.pr_m @ dec.pr_m - dec.pr_m))),
        float(np.max(np.abs(dec.pr_h @ dec.pr_h - dec.pr_h))),
        float(np.max(np.abs(dec.pr_m @ dec.pr_h))),
    ) if n else 0.0
    reports.append(CheckReport.from_residual("projection_identities", proj,
                                             tols["projection"]))

    sub = 0.0
    for r in range(dec.q):
        for s in range(r + 1, dec.q):
            br = alg.bracket(dec.h_basis[r], dec.h_basis[s])
            sub = max(sub, float(np.max(np.abs(dec.pr_m @ br))) if dec.N else 0.0)
    reports.append(CheckReport.from_residual("h_subalgebra", sub, tols["subalgebra"]))

    red = 0.0
    for r in range(dec.q):
        for i in range(dec.N):
            br = alg.bracket(dec.h_basis[r], dec.m_basis[i])
            red = max(red, float(np.max(np.abs(dec.pr_h @ br))))
    reports.append(CheckReport.from_residual("reductivity", red, tols["reductivity"]))

    if dec.h_generators:
        worst = 0.0
        for gen in dec.h_generators:
            _, leak = dec.restrict_to_m(alg.adjoint_Ad(gen))
            worst = max(worst, leak)
        reports.append(CheckReport.from_residual(
            "generator_stability", worst, tols["generator_stability"]))

    if bundle.metric is not None:
        rep = check_metric_invariance(dec, bundle.metric, tol=tols["metric_invariance"])
        reports.append(rep)
        reports.append(naturally_reductive_check(dec, bundle.metric,
                                                 tol=tols["naturally_reductive"]))

    for a in bundle.suggested_alphas:
        rep = check_ad_H_invariance_bilinear(dec, a, tol=tols["invariance"])
        rep.check = f"alpha_invariance[{a.label}]"
        rep.tainted = not a.checked
        reports.append(rep)
        # tensor assembly must go through; the curvature h-leak assert lives inside
        tor = torsion(a)
        try:
            curvature(a)
            assembled = 0.0
        except ValueError as exc:
            assembled = float("inf")
            rep_note = str(exc)
        reports.append(CheckReport.from_residual(
            f"tensor_assembly[{a.label}]", assembled, tols["curvature_h_leak"],
            note="" if assembled == 0.0 else rep_note))
        if a.label == "canonical_first":
            reports.append(CheckReport.from_residual(
                "torsion_free[canonical_first]",
                float(np.max(np.abs(tor.coeffs))) if tor.coeffs.size else 0.0,
                1e-12))
        if bundle.metric is not None:
            reports.append(is_metric(a, bundle.metric, tol=tols["is_metric"]))

    return reports


def _assert_battery(bundle: SpaceBundle):
    failed = [r for r in diagnostic_battery(bundle) if r.mandatory and not r.passed]
    if failed:
        lines = ", ".join(f"{r.check} ({r.max_residual:.3e})" for r in failed)
        raise AssertionError(f"catalog construction failed its own battery: {lines}")
