import numpy as np
import pytest

import redhom as rh
from redhom.algebra import expand_in_matrix_basis

from conftest import commutator_coords

E1, E2, E3 = np.eye(3)


def rodrigues(axis, angle):
    """Closed-form rotation about a unit axis: the oracle for group_exp on so(3)."""
    k = np.array([[0.0, -axis[2], axis[1]],
                  [axis[2], 0.0, -axis[0]],
                  [-axis[1], axis[0], 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def ad_series(algebra, a, terms=20):
    """Oracle for Ad(exp(a)): the exponential of ad_a summed to `terms`."""
    ada = algebra.ad(a)
    out = np.eye(algebra.dim)
    power = np.eye(algebra.dim)
    for j in range(1, terms + 1):
        power = power @ ada / j
    # recompute cleanly: sum_j ad^j / j!
    out = np.zeros((algebra.dim, algebra.dim))
    power = np.eye(algebra.dim)
    fact = 1.0
    for j in range(terms + 1):
        out += power / fact
        power = power @ ada
        fact *= j + 1
    return out


class TestBracket:
    def test_so3_cyclic_table_matches_commutator_oracle(self, so3):
        assert np.allclose(so3.bracket(E1, E2), commutator_coords(so3, E1, E2), atol=1e-12)
        assert np.allclose(so3.bracket(E1, E2), E3, atol=1e-14)
        assert np.allclose(so3.bracket(E2, E3), E1, atol=1e-14)
        assert np.allclose(so3.bracket(E3, E1), E2, atol=1e-14)

    def test_bracket_of_vector_with_itself_vanishes(self, so3, rng):
        for _ in range(5):
            v = rng.standard_normal(3)
            assert np.allclose(so3.bracket(v, v), 0.0, atol=1e-14)

    def test_bilinearity(self, so3):
        assert np.allclose(so3.bracket(2.0 * E1, E2), 2.0 * E3, atol=1e-14)

    def test_dimension_mismatch(self, so3):
        with pytest.raises(ValueError):
            so3.bracket([1.0, 0.0], E2)

    def test_matches_commutator_on_100_random_pairs(self, so3, so4, rng):
        for alg in (so3, so4):
            for _ in range(100):
                a = rng.standard_normal(alg.dim)
                b = rng.standard_normal(alg.dim)
                assert np.max(np.abs(alg.bracket(a, b) - commutator_coords(alg, a, b))) <= 1e-10


class TestAd:
    def test_ad_of_zero(self, so3):
        assert np.array_equal(so3.ad(np.zeros(3)), np.zeros((3, 3)))

    def test_columns_agree_with_bracket_oracle(self, so3):
        ad3 = so3.ad(E3)
        for i, e in enumerate(np.eye(3)):
            assert np.allclose(ad3[:, i], so3.bracket(E3, e), atol=1e-14)
        assert np.allclose(ad3 @ E1, E2, atol=1e-14)  # [E3, E1] = E2

    def test_ad_applied_to_itself(self, so3, rng):
        v = rng.standard_normal(3)
        assert np.allclose(so3.ad(v) @ v, 0.0, atol=1e-14)


class TestGroupExp:
    def test_zero_time_gives_identity(self, so3, rng):
        v = rng.standard_normal(3)
        assert np.allclose(so3.group_exp(v, 0.0).matrix, np.eye(3), atol=1e-15)

    def test_rodrigues_oracle(self, so3, rng):
        for _ in range(10):
            axis = rng.standard_normal(3)
            axis /= np.linalg.norm(axis)
            angle = rng.uniform(-3.0, 3.0)
            got = so3.group_exp(axis, angle).matrix
            assert np.max(np.abs(got - rodrigues(axis, angle))) <= 1e-13

    def test_rotation_about_z(self, so3):
        theta = 0.7
        got = so3.group_exp(E3, theta).matrix
        want = np.array([[np.cos(theta), -np.sin(theta), 0.0],
                         [np.sin(theta), np.cos(theta), 0.0],
                         [0.0, 0.0, 1.0]])
        assert np.max(np.abs(got - want)) <= 1e-14

    def test_one_parameter_inverse(self, so3, rng):
        v = rng.standard_normal(3)
        prod = so3.group_exp(v, 1.3).matrix @ so3.group_exp(v, -1.3).matrix
        assert np.max(np.abs(prod - np.eye(3))) <= 1e-12

    def test_one_parameter_homomorphism(self, so3, so4, rng):
        for alg in (so3, so4):
            v = rng.standard_normal(alg.dim)
            for _ in range(5):
                s, t = rng.uniform(-2.0, 2.0, size=2)
                lhs = alg.group_exp(v, s + t).matrix
                rhs = alg.group_exp(v, s).matrix @ alg.group_exp(v, t).matrix
                assert np.max(np.abs(lhs - rhs)) <= 1e-10

    def test_requires_matrix_realization(self):
        abelian = rh.StructuredLieAlgebra(np.zeros((2, 2, 2)), name="r2")
        with pytest.raises(ValueError, match="matrix realization"):
            abelian.group_exp([1.0, 0.0])


class TestExpm:
    def test_against_scipy(self, rng):
        scipy_linalg = pytest.importorskip("scipy.linalg")
        for scale in (0.1, 1.0, 10.0):
            a = scale * rng.standard_normal((6, 6))
            assert np.max(np.abs(rh.expm(a) - scipy_linalg.expm(a))) <= 1e-10 * max(
                1.0, np.max(np.abs(scipy_linalg.expm(a))))

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            rh.expm(np.zeros((2, 3)))


class TestAdjointAd:
    def test_identity(self, so3):
        assert np.allclose(so3.adjoint_Ad(so3.identity()), np.eye(3), atol=1e-14)

    def test_matches_ad_series_oracle(self, so3, so4, rng):
        for alg in (so3, so4):
            v = 0.6 * rng.standard_normal(alg.dim)
            got = alg.adjoint_Ad(alg.group_exp(v, 1.0))
            assert np.max(np.abs(got - ad_series(alg, v))) <= 1e-10

    def test_automorphism_property(self, so3, rng):
        g = so3.group_exp(rng.standard_normal(3), 1.0)
        ad_g = so3.adjoint_Ad(g)
        for _ in range(10):
            a, b = rng.standard_normal((2, 3))
            lhs = ad_g @ so3.bracket(a, b)
            rhs = so3.bracket(ad_g @ a, ad_g @ b)
            assert np.max(np.abs(lhs - rhs)) <= 1e-10

    def test_homomorphism(self, so4, rng):
        g = so4.group_exp(rng.standard_normal(6), 0.8)
        h = so4.group_exp(rng.standard_normal(6), -0.5)
        lhs = so4.adjoint_Ad(g @ h)
        rhs = so4.adjoint_Ad(g) @ so4.adjoint_Ad(h)
        assert np.max(np.abs(lhs - rhs)) <= 1e-9

    def test_non_normalizing_element_rejected(self, so3):
        g = rh.StructuredLieAlgebra(so3.structure_constants, so3.matrix_basis,
                                    name="so3-loose")  # no orthogonality guard
        bad = rh.GroupElement(np.diag([2.0, 1.0, 1.0]), g)
        with pytest.raises(ValueError, match="span"):
            g.adjoint_Ad(bad)


class TestConstructionValidation:
    def test_antisymmetry_violation_rejected(self):
        c = np.zeros((2, 2, 2))
        c[0, 0, 1] = 1.0
        c[0, 1, 0] = -1.0 + 1e-6
        with pytest.raises(ValueError, match="antisymmetry"):
            rh.StructuredLieAlgebra(c)

    def test_tiny_antisymmetry_noise_canonicalized(self):
        c = np.zeros((2, 2, 2))
        c[0, 0, 1] = 1.0
        c[0, 1, 0] = -1.0 + 1e-13
        alg = rh.StructuredLieAlgebra(c)
        cc = alg.structure_constants
        assert np.array_equal(cc, -np.swapaxes(cc, 1, 2))

    def test_jacobi_violation_rejected(self):
        c = np.zeros((3, 3, 3))
        # [e1,e2]=e1, [e2,e3]=e2, [e3,e1]=e3: the cyclic sum is -(e1+e2+e3)
        for (k, i, j, v) in ((0, 0, 1, 1.0), (1, 1, 2, 1.0), (2, 2, 0, 1.0)):
            c[k, i, j] = v
            c[k, j, i] = -v
        with pytest.raises(ValueError, match="Jacobi"):
            rh.StructuredLieAlgebra(c)

    def test_matrix_commutator_consistency_enforced(self, so3):
        wrong = np.array([so3.matrix_basis[0], so3.matrix_basis[1],
                          2.0 * so3.matrix_basis[2]])
        with pytest.raises(ValueError, match="commutators"):
            rh.StructuredLieAlgebra(so3.structure_constants, wrong)

    def test_dependent_matrix_basis_rejected(self, so3):
        dep = np.array([so3.matrix_basis[0], so3.matrix_basis[1],
                        so3.matrix_basis[0] + so3.matrix_basis[1]])
        with pytest.raises(ValueError):
            rh.StructuredLieAlgebra(so3.structure_constants, dep)

    def test_jacobi_passes_for_catalog(self, so3, so4):
        for alg in (so3, so4):
            c = alg.structure_constants
            jac = (np.einsum("mij,lmk->lijk", c, c)
                   + np.einsum("mjk,lmi->lijk", c, c)
                   + np.einsum("mki,lmj->lijk", c, c))
            assert np.max(np.abs(jac)) <= 1e-12


class TestGroupElement:
    def test_singular_rejected(self, so3):
        with pytest.raises(ValueError, match="singular"):
            rh.GroupElement(np.zeros((3, 3)), so3)

    def test_orthogonality_drift_guard(self, so3):
        with pytest.raises(ValueError, match="drift"):
            rh.GroupElement(np.diag([1.0 + 1e-5, 1.0, 1.0]), so3)

    def test_inverse_and_product(self, so3, rng):
        g = so3.group_exp(rng.standard_normal(3), 0.9)
        prod = g @ g.inverse()
        assert np.max(np.abs(prod.matrix - np.eye(3))) <= 1e-12


class TestExpandInBasis:
    def test_residual_gate(self, so3):
        sym = np.eye(3)  # symmetric matrix is not in the skew span
        with pytest.raises(ValueError, match="span"):
            expand_in_matrix_basis(so3.matrix_basis, sym)
        coeffs, resid = expand_in_matrix_basis(so3.matrix_basis, sym, strict=False)
        assert resid > 1e-2

    def test_roundtrip(self, so4, rng):
        v = rng.standard_normal(6)
        mat = np.einsum("i,iab->ab", v, so4.matrix_basis)
        back = expand_in_matrix_basis(so4.matrix_basis, mat)
        assert np.max(np.abs(back - v)) <= 1e-12
