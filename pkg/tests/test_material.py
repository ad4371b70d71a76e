import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from porocrack import material as mat
from porocrack.errors import DegenerateStiffness, InvalidPoisson, NonphysicalDensity
from porocrack.material import MaterialParams


def sym(a11=0.0, a22=0.0, a33=0.0, a23=0.0, a13=0.0, a12=0.0):
    return np.array([a11, a22, a33, a23, a13, a12])


class TestLame:
    def test_nu_zero_decouples(self):
        lame = mat.classical_lame(MaterialParams(E=1.0, nu=0.0))
        assert lame.lam == 0.0
        assert lame.mu == 0.5

    def test_hand_value(self):
        lame = mat.classical_lame(MaterialParams(E=2.5, nu=0.25))
        assert lame.lam == pytest.approx(1.0, rel=1e-15)
        assert lame.mu == pytest.approx(1.0, rel=1e-15)

    @pytest.mark.parametrize("nu", [0.5, 0.7, -1.0, -1.5])
    def test_inadmissible_poisson(self, nu):
        with pytest.raises(InvalidPoisson):
            MaterialParams(E=1.0, nu=nu)

    def test_classical_lame_guards_duck_typed_params(self):
        class P:
            E, nu = 1.0, 0.5

        with pytest.raises(InvalidPoisson):
            mat.classical_lame(P())

    def test_compliances_from_young_and_poisson(self):
        p = MaterialParams(E=2.0, nu=0.3)
        assert p.C1 == pytest.approx(1.3 / 2.0)
        assert p.C2 == pytest.approx(-0.15)
        assert p.C1 == pytest.approx(1.0 / (2.0 * mat.classical_lame(p).mu))


class TestEffectiveLame:
    base = mat.LamePair(1.0, 1.0)

    def test_beta_zero_is_classical(self):
        assert mat.effective_lame(self.base, 0.0, 0.3) == self.base

    def test_divides_by_density_factor(self):
        eff = mat.effective_lame(self.base, -2.0, 0.1)
        assert eff.lam == pytest.approx(1.25, rel=1e-14)
        assert eff.mu == pytest.approx(1.25, rel=1e-14)

    def test_degenerate(self):
        with pytest.raises(DegenerateStiffness):
            mat.effective_lame(self.base, -8.0, 0.2)

    def test_floor_is_strict(self):
        with pytest.raises(DegenerateStiffness):
            mat.effective_lame(self.base, -1.0, 1.0 - mat.POSITIVITY_FLOOR / 2)
        with pytest.raises(DegenerateStiffness):
            mat.density_factor(-1.0, 1.0 - 0.99 * mat.POSITIVITY_FLOOR)
        assert mat.density_factor(-1.0, 1.0 - 2 * mat.POSITIVITY_FLOOR) > mat.POSITIVITY_FLOOR

    def test_zero_trace_is_exactly_classical(self):
        base = mat.classical_lame(MaterialParams())
        assert mat.effective_lame(base, 7.5, 0.0) == base


class TestStressStrain:
    def test_zero_strain(self):
        np.testing.assert_array_equal(mat.stress_from_strain(np.zeros(6), MaterialParams(beta=3)),
                                      np.zeros(6))

    def test_hooke_limit(self):
        p = MaterialParams(E=2.5, nu=0.25)
        a = 1e-3
        T = mat.stress_from_strain(sym(a), p)
        np.testing.assert_allclose(T, sym(3 * a, a, a), rtol=1e-14)

    def test_hand_value_with_beta(self):
        p = MaterialParams(E=2.5, nu=0.25, beta=1.0)
        T = mat.stress_from_strain(sym(0.1, 0.1, 0.1), p)
        np.testing.assert_allclose(T, sym(0.5, 0.5, 0.5) / 1.3, rtol=1e-14)

    def test_shear_uses_tensor_component(self):
        p = MaterialParams(E=2.5, nu=0.25)
        T = mat.stress_from_strain(sym(a12=0.01), p)
        assert T[5] == pytest.approx(2 * 1.0 * 0.01)

    def test_degenerate_stress(self):
        with pytest.raises(DegenerateStiffness):
            mat.stress_from_strain(sym(0.1, 0.1, 0.1), MaterialParams(beta=-4.0))

    def test_zero_stress_gives_zero_strain(self):
        np.testing.assert_array_equal(mat.strain_from_stress(np.zeros(6), 0.2, MaterialParams()),
                                      np.zeros(6))

    def test_beta_zero_round_trip(self, rng):
        p = MaterialParams(E=7.0, nu=0.2)
        eps = rng.uniform(-0.1, 0.1, size=(50, 6))
        back = mat.strain_from_stress(mat.stress_from_strain(eps, p), mat.trace(eps), p)
        np.testing.assert_allclose(back, eps, rtol=1e-13, atol=1e-16)


admissible_strain = st.lists(st.floats(-0.2, 0.2), min_size=6, max_size=6)


@settings(max_examples=300, deadline=None)
@given(eps=admissible_strain, beta=st.floats(-8.0, 8.0), nu=st.floats(-0.9, 0.49),
       E=st.floats(1e-2, 1e9))
def test_round_trip_property(eps, beta, nu, E):
    eps = np.array(eps)
    assume(1.0 + beta * mat.trace(eps) > 0.05)
    p = MaterialParams(E=E, nu=nu, beta=beta)
    back = mat.strain_from_stress(mat.stress_from_strain(eps, p), mat.trace(eps), p)
    np.testing.assert_allclose(back, eps, rtol=1e-12, atol=1e-12 * np.abs(eps).max())


@settings(max_examples=300, deadline=None)
@given(eps=admissible_strain, beta=st.floats(-8.0, 8.0))
def test_invertible_subclass_residual_vanishes(eps, beta):
    eps = np.array(eps)
    assume(1.0 + beta * mat.trace(eps) > 0.05)
    p = MaterialParams(beta=beta, delta1=beta, delta2=beta, delta3=0.0)
    T = mat.stress_from_strain(eps, p)
    res = mat.implicit_residual(T, eps, p)
    assert np.max(np.abs(res)) < 1e-10


class TestImplicitResidual:
    def test_zero(self):
        p = MaterialParams(delta1=3.0, delta2=-1.0, delta3=0.5)
        np.testing.assert_array_equal(mat.implicit_residual(np.zeros(6), np.zeros(6), p),
                                      np.zeros(6))

    def test_classical_limit(self, rng):
        p = MaterialParams(E=3.0e4, nu=0.27)
        eps = rng.uniform(-0.01, 0.01, size=(20, 6))
        T = mat.stress_from_strain(eps, p)
        assert np.abs(mat.implicit_residual(T, eps, p)).max() < 1e-12

    def test_general_formula(self):
        p = MaterialParams(E=1.0, nu=0.25, delta1=2.0, delta2=3.0, delta3=5.0)
        T = sym(1.0, 2.0, 3.0, 0.5)
        eps = sym(0.1, 0.0, 0.0, 0.0, 0.2)
        # (1 + 5*6) eps - 1.25 (1 + 0.2) T + 0.25 (1 + 0.3) * 6 I
        expected = 31 * eps - 1.5 * T + 1.95 * sym(1, 1, 1)
        np.testing.assert_allclose(mat.implicit_residual(T, eps, p), expected, rtol=1e-14)


class TestDensity:
    def test_unit(self):
        assert mat.density_ratio(0.0) == 1.0

    def test_direct(self):
        assert mat.density_ratio(0.1) == pytest.approx(1.1)

    def test_nonphysical(self):
        with pytest.raises(NonphysicalDensity):
            mat.density_ratio(-1.0)

    @given(st.floats(-0.99, 10.0).filter(lambda t: abs(t) > 1e-15))
    def test_dilatation_increases_ratio(self, tr):
        assert (mat.density_ratio(tr) > 1.0) == (tr > 0.0)


class TestEnergy:
    def test_zero(self):
        assert mat.strain_energy_density(np.zeros(6), np.zeros(6)) == 0.0

    def test_uniaxial(self):
        p = MaterialParams(E=1.0, nu=0.0)
        eps = sym(0.1)
        T = mat.stress_from_strain(eps, p)
        assert mat.strain_energy_density(T, eps) == pytest.approx(0.005, rel=1e-14)

    def test_rotation_invariance(self, rng):
        eps = rng.uniform(-0.05, 0.05, 6)
        T = mat.stress_from_strain(eps, MaterialParams(beta=2.0))
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        rot = lambda t: mat.from_matrix(q @ mat.to_matrix(t) @ q.T)  # noqa: E731
        assert mat.strain_energy_density(rot(T), rot(eps)) == pytest.approx(
            mat.strain_energy_density(T, eps), rel=1e-12)

    def test_ddot_matches_full_contraction(self, rng):
        a, b = rng.normal(size=(2, 6))
        full = np.sum(mat.to_matrix(a) * mat.to_matrix(b))
        assert mat.ddot(a, b) == pytest.approx(full, rel=1e-14)

    @settings(max_examples=200, deadline=None)
    @given(eps=admissible_strain, nu=st.floats(-0.9, 0.49))
    def test_classical_energy_nonnegative(self, eps, nu):
        eps = np.array(eps)
        p = MaterialParams(E=1.0, nu=nu)
        assert mat.strain_energy_density(mat.stress_from_strain(eps, p), eps) >= -1e-15


def test_compliance_coefficients_reduce_to_constants():
    p = MaterialParams(beta=4.0)
    c = mat.compliance_coeffs(p, 0.0)
    assert (c.phi1, c.phi2) == (p.C1, p.C2)
    c = mat.compliance_coeffs(p.with_beta(0.0), 0.3)
    assert (c.phi1, c.phi2) == (p.C1, p.C2)
