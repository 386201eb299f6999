"""Reductive decompositions g = h (+) m with projections and invariance checks.

The decomposition is encoded by coefficient bases of the subalgebra h and
the complement m inside an ambient :class:`~redhom.algebra.StructuredLieAlgebra`.
Validity means: direct sum, h a subalgebra, and [h, m] contained in m (the
infinitesimal form of stability of m under the isotropy action).  Stability
under disconnected parts of the isotropy group cannot be certified from h
alone; callers may supply discrete generators, which are then spot-checked,
and reports state that otherwise only the identity component was verified.
"""

from __future__ import annotations

import warnings

import numpy as np

from .algebra import StructuredLieAlgebra, GroupElement, expm
from .reporting import CheckReport, DEFAULT_TOLERANCES

__all__ = [
    "MetricOnM",
    "ReductiveDecomposition",
    "DecompositionError",
    "build_decomposition",
    "symmetric_decomposition",
    "normal_decomposition",
    "check_ad_H_invariance_bilinear",
    "check_metric_invariance",
]

PROJECTION_TOL = DEFAULT_TOLERANCES["projection"]
SUBALGEBRA_TOL = DEFAULT_TOLERANCES["subalgebra"]
REDUCTIVITY_TOL = DEFAULT_TOLERANCES["reductivity"]
GENERATOR_TOL = DEFAULT_TOLERANCES["generator_stability"]
INVARIANCE_TOL = DEFAULT_TOLERANCES["invariance"]

# Parameters at which the finite (group-level) invariance condition is
# sampled along exp(t eta) for each identity-component direction eta.
_FINITE_SAMPLE_TIMES = (0.3, 0.7, 1.1)


class DecompositionError(ValueError):
    """Raised when the requested splitting is not a reductive decomposition."""


class MetricOnM:
    """Gram matrix of a scalar product on m; indefinite signatures allowed."""

    def __init__(self, gram, signature=None):
        g = np.array(gram, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError(f"gram matrix must be square, got shape {g.shape}")
        asym = float(np.max(np.abs(g - g.T))) if g.size else 0.0
        if asym > 1e-12:
            raise ValueError(f"gram matrix is asymmetric by {asym:.3e}")
        g = 0.5 * (g + g.T)
        if g.size:
            svals = np.linalg.svd(g, compute_uv=False)
            if svals[-1] < 1e-10 * svals[0]:
                raise ValueError(
                    f"gram matrix is numerically degenerate "
                    f"(condition {svals[0] / max(svals[-1], 1e-300):.3e})"
                )
            eigs = np.linalg.eigvalsh(g)
            sig = (int(np.sum(eigs > 0)), int(np.sum(eigs < 0)))
        else:
            sig = (0, 0)
        if signature is not None and tuple(signature) != sig:
            raise ValueError(f"declared signature {tuple(signature)} but eigenvalues give {sig}")
        g.setflags(write=False)
        self.gram = g
        self.signature = sig
        self.dim = g.shape[0]

    def inner(self, x, y) -> float:
        return float(np.asarray(x) @ self.gram @ np.asarray(y))

    def __repr__(self):
        return f"MetricOnM(dim={self.dim}, signature={self.signature})"


class ReductiveDecomposition:
    """Validated splitting g = h (+) m with projections and cached contractions.

    Not constructed directly; use :func:`build_decomposition`,
    :func:`symmetric_decomposition` or :func:`normal_decomposition`.
    """

    def __init__(self, algebra, h_basis, m_basis, pr_h, pr_m, h_generators,
                 cob, cob_inv):
        self.algebra = algebra
        self.h_basis = h_basis            # (q, n) rows = coordinate vectors
        self.m_basis = m_basis            # (N, n)
        self.pr_h = pr_h                  # (n, n)
        self.pr_m = pr_m
        self.h_generators = h_generators  # tuple of GroupElement or ()
        self._cob = cob                   # columns: h basis then m basis
        self._cob_inv = cob_inv
        self.q = h_basis.shape[0]
        self.N = m_basis.shape[0]

        c = algebra.structure_constants
        # ambient coordinates of [A_i, A_j] for the m-basis
        self._m_pair_bracket = np.einsum("kab,ia,jb->kij", c, m_basis, m_basis)
        coords = cob_inv @ self._m_pair_bracket.reshape(algebra.dim, -1)
        coords = coords.reshape(algebra.dim, self.N, self.N)
        bm = coords[self.q:]
        # enforce exact antisymmetry of the m-bracket table: i<j entries are
        # authoritative, the mirror is their exact negation
        iu = np.triu_indices(self.N, 1)
        exact = np.zeros_like(bm)
        exact[:, iu[0], iu[1]] = bm[:, iu[0], iu[1]]
        exact[:, iu[1], iu[0]] = -bm[:, iu[0], iu[1]]
        self.m_bracket_tensor = exact     # (N, N, N): coords of [A_i, A_j]_m
        self._m_pair_bracket_h = coords[: self.q]

        # action of each h-basis vector on m: L[r][k, l] = m-coords of [eta_r, A_l]
        act = np.einsum("kab,ra,lb->krl", c, h_basis, m_basis)
        act = (cob_inv @ act.reshape(algebra.dim, -1)).reshape(algebra.dim, self.q, self.N)
        self.h_action = np.ascontiguousarray(np.swapaxes(act[self.q:], 0, 1))  # (q, N, N)

        if algebra.matrix_basis is not None:
            self.m_matrices = np.einsum("ia,abc->ibc", m_basis, algebra.matrix_basis)
            self.h_matrices = np.einsum("ra,abc->rbc", h_basis, algebra.matrix_basis)
        else:
            self.m_matrices = None
            self.h_matrices = None

        for arr in (self.h_basis, self.m_basis, self.pr_h, self.pr_m,
                    self.m_bracket_tensor):
            arr.setflags(write=False)

    # -- coordinate plumbing ------------------------------------------------------

    def m_coords(self, v) -> np.ndarray:
        """m-coordinates (w.r.t. the A-basis) of an ambient coordinate vector."""
        return (self._cob_inv @ np.asarray(v, dtype=float))[self.q:]

    def h_coords(self, v) -> np.ndarray:
        return (self._cob_inv @ np.asarray(v, dtype=float))[: self.q]

    def m_embed(self, x) -> np.ndarray:
        """Ambient coordinates of an m-vector given in the A-basis."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.N,):
            raise ValueError(f"expected m-coordinates of length {self.N}, got shape {x.shape}")
        return self.m_basis.T @ x

    def h_embed(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return self.h_basis.T @ y

    def project_m(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.algebra.dim,):
            raise ValueError(f"expected ambient vector of length {self.algebra.dim}")
        return self.pr_m @ v

    def project_h(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.algebra.dim,):
            raise ValueError(f"expected ambient vector of length {self.algebra.dim}")
        return self.pr_h @ v

    def bracket_m(self, x, y) -> np.ndarray:
        """[X, Y]_m in m-coordinates for X, Y given in m-coordinates."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.einsum("kij,i,j->k", self.m_bracket_tensor, x, y)

    def ad_m_matrix(self, x) -> np.ndarray:
        """Matrix of Y -> [X, Y]_m on m-coordinates."""
        x = np.asarray(x, dtype=float)
        return np.einsum("kij,i->kj", self.m_bracket_tensor, x)

    def m_matrix(self, x) -> np.ndarray:
        """Matrix realization of an m-vector (requires a realized algebra)."""
        if self.m_matrices is None:
            self.algebra._require_matrices()
        return np.einsum("i,ibc->bc", np.asarray(x, dtype=float), self.m_matrices)

    def restrict_to_m(self, op: np.ndarray):
        """Restrict an ambient-coordinates linear map to m.

        Returns the (N, N) block in the A-basis together with the leak, the
        largest h-component the map produces out of m.
        """
        s = self._cob_inv @ np.asarray(op, dtype=float) @ self._cob
        block = s[self.q:, self.q:]
        leak = float(np.max(np.abs(s[: self.q, self.q:]))) if self.q and self.N else 0.0
        return block, leak

    def symmetric_pair_residual(self) -> float:
        """Largest m-component of [m, m]; zero characterizes symmetric pairs."""
        if self.N == 0:
            return 0.0
        return float(np.max(np.abs(self.m_bracket_tensor)))

    def __repr__(self):
        return (
            f"ReductiveDecomposition({self.algebra.name!r}, "
            f"dim h={self.q}, dim m={self.N})"
        )


def build_decomposition(algebra: StructuredLieAlgebra, h_basis, m_basis,
                        h_generators=None) -> ReductiveDecomposition:
    """Validate bases of h and m and assemble the projections.

    Raises :class:`DecompositionError` when the sum is not direct, h is not
    a subalgebra, or some [eta, X] leaks out of m (the offending pair and
    its leak norm are reported).
    """
    n = algebra.dim
    h = np.array(h_basis, dtype=float).reshape(-1, n) if len(h_basis) else np.zeros((0, n))
    m = np.array(m_basis, dtype=float).reshape(-1, n) if len(m_basis) else np.zeros((0, n))
    q, N = h.shape[0], m.shape[0]
    if q + N != n:
        raise DecompositionError(f"dim h + dim m = {q}+{N} != {n} = dim g")

    cob = np.vstack([h, m]).T if n else np.zeros((0, 0))
    if N + q:
        svals = np.linalg.svd(cob, compute_uv=False)
        if svals.size and svals[-1] < 1e-12 * max(svals[0], 1.0):
            raise DecompositionError("h-basis and m-basis do not form a direct sum")
    cob_inv = np.linalg.inv(cob) if n else cob.copy()

    sel_h = np.zeros((n, n))
    sel_h[: q, : q] = np.eye(q)
    pr_h = cob @ sel_h @ cob_inv
    pr_m = np.eye(n) - pr_h

    c = algebra.structure_constants
    # h must close under the bracket
    for r in range(q):
        for s in range(r + 1, q):
            br = np.einsum("kij,i,j->k", c, h[r], h[s])
            leak = float(np.max(np.abs(pr_m @ br))) if N else 0.0
            if leak > SUBALGEBRA_TOL:
                raise DecompositionError(
                    f"h is not a subalgebra: [h[{r}], h[{s}]] leaks into m "
                    f"with norm {leak:.3e}"
                )
    # [h, m] must stay in m
    for r in range(q):
        for i in range(N):
            br = np.einsum("kij,i,j->k", c, h[r], m[i])
            leak = float(np.max(np.abs(pr_h @ br)))
            if leak > REDUCTIVITY_TOL:
                raise DecompositionError(
                    f"not reductive: [h[{r}], m[{i}]] has h-leak {leak:.3e} "
                    f"(> {REDUCTIVITY_TOL:.1e})"
                )

    gens = []
    if h_generators:
        if algebra.matrix_basis is None:
            raise DecompositionError("h_generators require a matrix-realized algebra")
        for k, gen in enumerate(h_generators):
            g = gen if isinstance(gen, GroupElement) else GroupElement(gen, algebra)
            ad = algebra.adjoint_Ad(g)
            s = cob_inv @ ad @ cob
            leak = float(np.max(np.abs(s[: q, q:]))) if q and N else 0.0
            if leak > GENERATOR_TOL:
                raise DecompositionError(
                    f"generator #{k} does not stabilize m (leak {leak:.3e})"
                )
            gens.append(g)

    dec = ReductiveDecomposition(algebra, h, m, pr_h, pr_m, tuple(gens), cob, cob_inv)

    # projector identities are structural; verify they hold to tolerance
    resid = max(
        float(np.max(np.abs(pr_h + pr_m - np.eye(n)))) if n else 0.0,
        float(np.max(np.abs(pr_h @ pr_h - pr_h))) if n else 0.0,
        float(np.max(np.abs(pr_m @ pr_m - pr_m))) if n else 0.0,
        float(np.max(np.abs(pr_m @ pr_h))) if n else 0.0,
    )
    if resid > PROJECTION_TOL:
        raise DecompositionError(f"projection identities violated by {resid:.3e}")
    return dec


def symmetric_decomposition(algebra: StructuredLieAlgebra, sigma) -> ReductiveDecomposition:
    """Canonical decomposition from an involutive algebra automorphism.

    h is the +1 eigenspace, m the -1 eigenspace of sigma, extracted from the
    projectors (I +- sigma)/2 with rank threshold 1e-10.  The result always
    satisfies [m, m] in h, which is verified before returning.
    """
    n = algebra.dim
    s = np.asarray(sigma, dtype=float)
    if s.shape != (n, n):
        raise ValueError(f"sigma must be a {n}x{n} coefficient matrix, got {s.shape}")
    if float(np.max(np.abs(s @ s - np.eye(n)))) > 1e-12:
        raise ValueError("sigma is not involutive (sigma^2 != identity)")
    c = algebra.structure_constants
    lhs = np.einsum("lk,kij->lij", s, c)
    rhs = np.einsum("kab,ai,bj->kij", c, s, s)
    auto = float(np.max(np.abs(lhs - rhs)))
    if auto > 1e-10:
        raise ValueError(f"sigma is not a Lie algebra automorphism (residual {auto:.3e})")

    def eigenbasis(projector):
        u, sv, _ = np.linalg.svd(projector)
        rank = int(np.sum(sv > 1e-10))
        return u[:, :rank].T

    h = eigenbasis(0.5 * (np.eye(n) + s))
    m = eigenbasis(0.5 * (np.eye(n) - s))
    if m.shape[0] == 0:
        warnings.warn(
            "sigma fixes the whole algebra: m = {0}, the isotropy group is open",
            stacklevel=2,
        )
    dec = build_decomposition(algebra, h, m)
    resid = dec.symmetric_pair_residual()
    if resid > SUBALGEBRA_TOL:
        raise DecompositionError(
            f"eigenspace split fails [m, m] in h by {resid:.3e}"
        )
    return dec


def normal_decomposition(algebra: StructuredLieAlgebra, biinvariant_gram, h_basis):
    """Orthogonal-complement decomposition from an ad-invariant scalar product.

    Returns ``(decomposition, metric)`` where m is the gram-orthogonal
    complement of h and the metric is the gram matrix restricted to m.  The
    input gram must be symmetric, nondegenerate and ad-invariant; h must be
    nondegenerate with respect to it, otherwise the complement is not a
    complement and an error is raised.
    """
    n = algebra.dim
    g = np.asarray(biinvariant_gram, dtype=float)
    if g.shape != (n, n):
        raise ValueError(f"gram must be {n}x{n}, got {g.shape}")
    if float(np.max(np.abs(g - g.T))) > 1e-12:
        raise ValueError("bi-invariant gram must be symmetric")
    svals = np.linalg.svd(g, compute_uv=False)
    if svals[-1] < 1e-10 * svals[0]:
        raise ValueError("bi-invariant gram is numerically degenerate")
    c = algebra.structure_constants
    t1 = np.einsum("kab,kc->abc", c, g)      # <[xi_a, xi_b], xi_c>
    t2 = np.einsum("bk,kac->abc", g, c)      # <xi_b, [xi_a, xi_c]>
    adres = float(np.max(np.abs(t1 + t2)))
    if adres > 1e-10:
        raise ValueError(f"gram is not ad-invariant (residual {adres:.3e})")

    h = np.array(h_basis, dtype=float).reshape(-1, n) if len(h_basis) else np.zeros((0, n))
    q = h.shape[0]
    if q:
        gh = h @ g @ h.T
        sv = np.linalg.svd(gh, compute_uv=False)
        if sv[-1] < 1e-10 * max(sv[0], 1.0):
            raise DecompositionError(
                "h is degenerate w.r.t. the gram: orthogonal complement is not a complement"
            )
        # null space of (h . gram): vectors gram-orthogonal to every h row
        _, sv_full, vt = np.linalg.svd(h @ g)
        rank = int(np.sum(sv_full > 1e-12 * max(sv_full[0], 1.0)))
        m = vt[rank:]
    else:
        m = np.eye(n)
    dec = build_decomposition(algebra, h, m)
    metric = MetricOnM(dec.m_basis @ g @ dec.m_basis.T)
    return dec, metric


# -- invariance checks ------------------------------------------------------------


def _alpha_coeffs(alpha, dec) -> np.ndarray:
    coeffs = getattr(alpha, "coeffs", alpha)
    coeffs = np.asarray(coeffs, dtype=float)
    N = dec.N
    if coeffs.shape != (N, N, N):
        raise ValueError(f"alpha coefficients must have shape ({N}, {N}, {N})")
    return coeffs


def _bilinear_equivariance_residual(coeffs, op) -> float:
    """max | R a(X, Y) - a(R X, R Y) | over basis pairs for a linear map R on m."""
    lhs = np.einsum("kl,lij->kij", op, coeffs)
    rhs = np.einsum("kpq,pi,qj->kij", coeffs, op, op)
    return float(np.max(np.abs(lhs - rhs))) if coeffs.size else 0.0


def _bilinear_derivation_residual(coeffs, act) -> float:
    """max | L a(X, Y) - a(L X, Y) - a(X, L Y) | for the infinitesimal action L."""
    lhs = np.einsum("kl,lij->kij", act, coeffs)
    rhs = np.einsum("klj,li->kij", coeffs, act) + np.einsum("kil,lj->kij", coeffs, act)
    return float(np.max(np.abs(lhs - rhs))) if coeffs.size else 0.0


def check_ad_H_invariance_bilinear(dec: ReductiveDecomposition, alpha,
                                   tol: float = INVARIANCE_TOL) -> CheckReport:
    """Verify that a bilinear map m x m -> m commutes with the isotropy action.

    Checks the infinitesimal condition for every h-basis direction, the
    finite condition along exp(t eta) at a few sample times, and the finite
    condition for any supplied discrete generators.  Failures are reported,
    never raised.
    """
    coeffs = _alpha_coeffs(alpha, dec)
    worst = 0.0
    witnesses = []

    for r in range(dec.q):
        res = _bilinear_derivation_residual(coeffs, dec.h_action[r])
        if res > worst:
            worst = res
            witnesses = [{"kind": "infinitesimal", "h_index": r, "residual": res}]

    for r in range(dec.q):
        ad_eta = dec.algebra.ad(dec.h_basis[r])
        for t in _FINITE_SAMPLE_TIMES:
            op, _ = dec.restrict_to_m(expm(t * ad_eta))
            res = _bilinear_equivariance_residual(coeffs, op)
            if res > worst:
                worst = res
                witnesses = [{"kind": "finite", "h_index": r, "t": t, "residual": res}]

    for k, gen in enumerate(dec.h_generators):
        op, _ = dec.restrict_to_m(dec.algebra.adjoint_Ad(gen))
        res = _bilinear_equivariance_residual(coeffs, op)
        if res > worst:
            worst = res
            witnesses = [{"kind": "generator", "index": k, "residual": res}]

    note = (
        "identity-component verified"
        if not dec.h_generators
        else f"identity-component verified plus {len(dec.h_generators)} discrete generator(s)"
    )
    return CheckReport.from_residual(
        "ad_H_invariance_bilinear", worst, tol, witnesses=witnesses, note=note
    )


def check_metric_invariance(dec: ReductiveDecomposition, metric: MetricOnM,
                            tol: float = INVARIANCE_TOL) -> CheckReport:
    """Verify isotropy invariance of a scalar product on m (report, never raise)."""
    g = metric.gram
    if g.shape != (dec.N, dec.N):
        raise ValueError(f"metric dimension {g.shape[0]} does not match dim m = {dec.N}")
    worst = 0.0
    witnesses = []

    for r in range(dec.q):
        act = dec.h_action[r]
        res = float(np.max(np.abs(act.T @ g + g @ act)))
        if res > worst:
            worst = res
            witnesses = [{"kind": "infinitesimal", "h_index": r, "residual": res}]

    for r in range(dec.q):
        ad_eta = dec.algebra.ad(dec.h_basis[r])
        for t in _FINITE_SAMPLE_TIMES:
            op, _ = dec.restrict_to_m(expm(t * ad_eta))
            res = float(np.max(np.abs(op.T @ g @ op - g)))
            if res > worst:
                worst = res
                witnesses = [{"kind": "finite", "h_index": r, "t": t, "residual": res}]

    for k, gen in enumerate(dec.h_generators):
        op, _ = dec.restrict_to_m(dec.algebra.adjoint_Ad(gen))
        res = float(np.max(np.abs(op.T @ g @ op - g)))
        if res > worst:
            worst = res
            witnesses = [{"kind": "generator", "index": k, "residual": res}]

    note = (
        "identity-component verified"
        if not dec.h_generators
        else f"identity-component verified plus {len(dec.h_generators)} discrete generator(s)"
    )
    return CheckReport.from_residual(
        "metric_invariance", worst, tol, witnesses=witnesses, note=note
    )
