import numpy as np
import pytest

import redhom as rh

E1, E2, E3 = np.eye(3)
X1, X2 = np.eye(2)


@pytest.fixture(scope="module")
def free_so3():
    """so(3) as a quotient by the trivial subgroup: every bilinear map is invariant."""
    return rh.build_decomposition(rh.so3(), [], np.eye(3))


class TestAlphaMap:
    def test_canonical_first_on_sphere_vanishes(self, sphere2):
        a = rh.canonical_first(sphere2.dec)
        assert np.max(np.abs(a.coeffs)) == 0.0
        assert np.allclose(a(X1, X2), 0.0)

    def test_canonical_first_on_group(self, free_so3):
        a = rh.canonical_first(free_so3)
        # oracle: half the commutator, [E1, E2] = E3
        assert np.allclose(a(E1, E2), 0.5 * E3, atol=1e-14)

    def test_canonical_second_is_zero_map(self, stiefel42, rng):
        a = rh.canonical_second(stiefel42.dec)
        x, y = rng.standard_normal((2, stiefel42.dec.N))
        assert np.array_equal(a(x, y), np.zeros(stiefel42.dec.N))

    def test_bilinearity_zero_argument(self, free_so3, rng):
        a = rh.canonical_first(free_so3)
        x = rng.standard_normal(3)
        assert np.allclose(a(x, np.zeros(3)), 0.0)

    def test_invariance_enforced_at_construction(self, sphere2):
        coeffs = np.zeros((2, 2, 2))
        coeffs[0, 0, 0] = 1.0
        with pytest.raises(ValueError, match="invariant"):
            rh.AlphaMap(sphere2.dec, coeffs)
        tainted = rh.AlphaMap(sphere2.dec, coeffs, unchecked=True)
        assert not tainted.checked

    def test_shape_validated(self, sphere2):
        with pytest.raises(ValueError, match="shape"):
            rh.AlphaMap(sphere2.dec, np.zeros((3, 3, 3)))


class TestLeviCivita:
    def test_naturally_reductive_collapse_to_canonical_first(self, sphere2, stiefel42):
        for bundle in (sphere2, stiefel42):
            lc = rh.levi_civita_alpha(bundle.dec, bundle.metric)
            cf = rh.canonical_first(bundle.dec)
            assert np.max(np.abs(lc.coeffs - cf.coeffs)) <= 1e-10

    def test_sphere_levi_civita_vanishes(self, sphere2):
        lc = rh.levi_civita_alpha(sphere2.dec, sphere2.metric)
        assert np.max(np.abs(lc.coeffs)) <= 1e-14

    def test_rigid_body_matches_euler_equations(self, rigid_body, rng):
        # oracle: omega' = I^-1 (I omega x omega), hand-coded cross product
        lc = rigid_body.alpha("levi_civita")
        inertia = np.diag([1.0, 2.0, 3.0])
        for _ in range(20):
            x = rng.standard_normal(3)
            euler_rhs = np.linalg.solve(inertia, np.cross(inertia @ x, x))
            assert np.max(np.abs(lc(x, x) + euler_rhs)) <= 1e-12

    def test_non_invariant_metric_rejected(self, sphere2):
        bad = rh.MetricOnM(np.diag([1.0, 2.0]))
        with pytest.raises(ValueError, match="invariant"):
            rh.levi_civita_alpha(sphere2.dec, bad)
        tainted = rh.levi_civita_alpha(sphere2.dec, bad, unchecked=True)
        assert not tainted.checked

    def test_u_part_symmetric(self, rigid_body):
        lc = rigid_body.alpha("levi_civita")
        u = lc.coeffs - 0.5 * rigid_body.dec.m_bracket_tensor
        assert np.max(np.abs(u - np.swapaxes(u, 1, 2))) <= 1e-13


class TestNablaAtOrigin:
    def test_canonical_second_gives_minus_bracket(self, free_so3, rng):
        a = rh.canonical_second(free_so3)
        x, y = rng.standard_normal((2, 3))
        want = -free_so3.bracket_m(x, y)
        assert np.allclose(rh.nabla_at_origin(a, x, y), want, atol=1e-14)

    def test_symmetric_space_first_kind_vanishes(self, sphere2):
        a = rh.canonical_first(sphere2.dec)
        assert np.allclose(rh.nabla_at_origin(a, X1, X2), 0.0, atol=1e-15)

    def test_first_kind_is_minus_half_bracket(self, free_so3, rng):
        a = rh.canonical_first(free_so3)
        x, y = rng.standard_normal((2, 3))
        want = -0.5 * free_so3.bracket_m(x, y)
        assert np.allclose(rh.nabla_at_origin(a, x, y), want, atol=1e-14)


class TestTorsion:
    def test_canonical_first_exactly_torsion_free(self, sphere2, stiefel42,
                                                  grassmann42, rigid_body):
        for bundle in (sphere2, stiefel42, grassmann42, rigid_body):
            t = rh.torsion(rh.canonical_first(bundle.dec))
            assert np.max(np.abs(t.coeffs)) == 0.0

    def test_canonical_second_torsion_is_minus_bracket(self, free_so3, rng):
        t = rh.torsion(rh.canonical_second(free_so3))
        x, y = rng.standard_normal((2, 3))
        assert np.allclose(t(x, y), -free_so3.bracket_m(x, y), atol=1e-14)

    def test_levi_civita_torsion_free(self, rigid_body):
        t = rh.torsion(rigid_body.alpha("levi_civita"))
        assert np.max(np.abs(t.coeffs)) <= 1e-10

    def test_exactly_antisymmetric(self, rigid_body, rng):
        t = rh.torsion(rigid_body.alpha("levi_civita"))
        x, y = rng.standard_normal((2, 3))
        assert np.array_equal(t(x, y), -t(y, x))


class TestCurvature:
    def test_sphere_spot_value(self, sphere2):
        # hand evaluation: alpha = 0, so R(A1, A2)A2 = -[[A1, A2]_h, A2] = A1
        r = rh.curvature(sphere2.alpha("canonical_first"))
        assert np.allclose(r(X1, X2, X2), X1, atol=1e-13)
        assert rh.sectional_curvature(sphere2.alpha("canonical_first"),
                                      sphere2.metric, X1, X2) == pytest.approx(1.0, abs=1e-12)

    def test_abelian_algebra_flat(self):
        abelian = rh.StructuredLieAlgebra(np.zeros((2, 2, 2)), name="r2")
        dec = rh.build_decomposition(abelian, [], np.eye(2))
        r = rh.curvature(rh.canonical_second(dec))
        assert np.max(np.abs(r.coeffs)) == 0.0

    def test_group_with_zero_alpha_flat(self, free_so3):
        r = rh.curvature(rh.canonical_second(free_so3))
        assert np.max(np.abs(r.coeffs)) == 0.0

    def test_antisymmetry_in_first_slots(self, stiefel42, grassmann42, rng):
        for bundle in (stiefel42, grassmann42):
            r = rh.curvature(bundle.alpha("canonical_first"))
            assert np.max(np.abs(r.coeffs + np.swapaxes(r.coeffs, 1, 2))) <= 1e-12
            x, y, z = rng.standard_normal((3, bundle.dec.N))
            assert np.max(np.abs(r(x, y, z) + r(y, x, z))) <= 1e-12

    def test_infinitesimal_invariance_identity(self, sphere2, stiefel42, grassmann42):
        # [eta, R(X,Y)Z]_m = R([eta,X]_m,Y)Z + R(X,[eta,Y]_m)Z + R(X,Y)[eta,Z]_m
        for bundle in (sphere2, stiefel42, grassmann42):
            dec = bundle.dec
            r = rh.curvature(bundle.alpha("canonical_first")).coeffs
            for idx in range(dec.q):
                act = dec.h_action[idx]
                lhs = np.einsum("kl,lijm->kijm", act, r)
                rhs = (np.einsum("kljm,li->kijm", r, act)
                       + np.einsum("kilm,lj->kijm", r, act)
                       + np.einsum("kijl,lm->kijm", r, act))
                assert np.max(np.abs(lhs - rhs)) <= 1e-8

    def test_grassmann_matches_direct_bracket_contraction(self, grassmann42):
        # alpha = 0 there, so R(X,Y)Z must equal -[[X,Y]_h, Z] assembled by hand
        dec = grassmann42.dec
        alg = grassmann42.algebra
        r = rh.curvature(grassmann42.alpha("canonical_first"))
        rng = np.random.default_rng(7)
        for _ in range(10):
            x, y, z = rng.standard_normal((3, dec.N))
            full = alg.bracket(dec.m_embed(x), dec.m_embed(y))
            hpart = dec.project_h(full)
            want = dec.m_coords(alg.bracket(hpart, dec.m_embed(z)))
            assert np.max(np.abs(r(x, y, z) + want)) <= 1e-10


class TestNaturallyReductive:
    def test_normal_and_symmetric_spaces_pass(self, sphere2, stiefel42, grassmann42):
        for bundle in (sphere2, stiefel42, grassmann42):
            assert rh.naturally_reductive_check(bundle.dec, bundle.metric).passed

    def test_rigid_body_fails_with_witness(self, rigid_body):
        rep = rh.naturally_reductive_check(rigid_body.dec, rigid_body.metric)
        assert not rep.passed
        assert rep.witnesses and "triple" in rep.witnesses[0]
        assert not rep.mandatory


class TestIsMetric:
    def test_canonical_second_always_metric(self, rigid_body, stiefel42):
        for bundle in (rigid_body, stiefel42):
            a = rh.canonical_second(bundle.dec)
            rep = rh.is_metric(a, bundle.metric)
            assert rep.passed and rep.max_residual == 0.0

    def test_levi_civita_metric_for_its_own_gram(self, rigid_body, stiefel42):
        for bundle in (rigid_body, stiefel42):
            lc = rh.levi_civita_alpha(bundle.dec, bundle.metric)
            assert rh.is_metric(lc, bundle.metric).passed

    def test_canonical_first_metric_iff_naturally_reductive(self, stiefel42, rigid_body):
        assert rh.is_metric(rh.canonical_first(stiefel42.dec), stiefel42.metric).passed
        rep = rh.is_metric(rh.canonical_first(rigid_body.dec), rigid_body.metric)
        assert not rep.passed

    def test_equivalence_with_skewness_on_20_random_maps(self, free_so3, rng):
        # exact-skew constructions pass, symmetric perturbations fail
        gram = np.diag([1.0, 2.0, 3.0])
        metric = rh.MetricOnM(gram)
        ginv = np.linalg.inv(gram)
        for trial in range(20):
            coeffs = np.empty((3, 3, 3))
            for i in range(3):
                s = rng.standard_normal((3, 3))
                skew = 0.5 * (s - s.T)
                coeffs[:, i, :] = ginv @ skew  # G @ alpha(A_i, .) = skew
            a = rh.AlphaMap(free_so3, coeffs)
            assert rh.is_metric(a, metric).passed
            bad = coeffs.copy()
            bad[0, trial % 3, 0] += 0.1  # symmetric-direction bump
            rep = rh.is_metric(rh.AlphaMap(free_so3, bad), metric)
            assert not rep.passed


class TestSectionalCurvature:
    def test_degenerate_plane_refused(self):
        abelian = rh.StructuredLieAlgebra(np.zeros((3, 3, 3)), name="r3")
        dec = rh.build_decomposition(abelian, [], np.eye(3))
        metric = rh.MetricOnM(np.diag([1.0, -1.0, 1.0]))
        a = rh.canonical_second(dec)
        # (1, 1, 0) is a null direction orthogonal to (0, 0, 1)
        with pytest.raises(ValueError, match="degenerate plane"):
            rh.sectional_curvature(a, metric, [1.0, 1.0, 0.0], [0.0, 0.0, 1.0])

    def test_tainted_flag_propagates(self, sphere2):
        coeffs = np.zeros((2, 2, 2))
        coeffs[0, 0, 0] = 1.0
        tainted = rh.AlphaMap(sphere2.dec, coeffs, unchecked=True)
        assert rh.torsion(tainted).tainted
        assert rh.is_metric(tainted, sphere2.metric).tainted
