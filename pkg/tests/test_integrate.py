"""Tests for quadrature, renormalized volumes, and the Gauss-Bonnet-type
verification suites."""

import math
from fractions import Fraction

import numpy as np
import pytest

from rcint.geometry import get_model, sphere_volume
from rcint.integrate import (
    LaurentSeries,
    divergence_identity_checks,
    integrate_scalar,
    remark_divergence_scalars,
    renormalized_volume,
    renormalized_volume_exact,
    verify_cgb,
    verify_gbc,
    verify_main_theorem_coefficient,
    verify_worked_examples,
)
from rcint.invariants import weyl_norm2_field
from rcint.jets import const_poly


def _one(geo):
    return const_poly(np.ones(geo.g.value().shape[0]), geo.basis, 1)


class TestQuadrature:
    def test_sphere_volume_quadrature(self):
        m = get_model("S4")
        got = integrate_scalar(_one, m, order=0, force_quadrature=True)
        assert got == pytest.approx(sphere_volume(4), rel=1e-10)

    def test_cp2_volume_quadrature(self):
        m = get_model("CP2")
        got = integrate_scalar(_one, m, order=0, force_quadrature=True)
        assert got == pytest.approx(math.pi ** 2 / 2, rel=1e-9)

    def test_quadrature_convergence(self):
        # doubling the nodes changes the answer by less than 1e-8 (relative)
        m = get_model("perturbed-S4")
        a = integrate_scalar(weyl_norm2_field, m, order=2, nodes_per_axis=24)
        b = integrate_scalar(weyl_norm2_field, m, order=2, nodes_per_axis=48)
        assert abs(a - b) / abs(b) < 1e-8
        assert b == pytest.approx(0.145366600945, rel=1e-8)

    def test_homogeneous_shortcut_matches_quadrature(self):
        m = get_model("S2xS2")
        fast = integrate_scalar(weyl_norm2_field, m, order=2)
        slow = integrate_scalar(weyl_norm2_field, m, order=2,
                                force_quadrature=True)
        assert fast == pytest.approx(slow, rel=1e-9)
        assert fast == pytest.approx(256 * math.pi ** 2 / 3, rel=1e-12)

    def test_cp2_weyl_integral(self):
        m = get_model("CP2")
        assert integrate_scalar(weyl_norm2_field, m, order=2) == \
            pytest.approx(48 * math.pi ** 2, rel=1e-9)

    def test_noncompact_rejected(self):
        with pytest.raises(ValueError):
            integrate_scalar(_one, get_model("H4"), order=0)


class TestLaurentSeries:
    def test_fp_reads_constant_term(self):
        s = LaurentSeries()
        s.add(-2, Fraction(5)).add(0, Fraction(3, 7)).add(2, Fraction(1))
        assert s.fp() == Fraction(3, 7)

    def test_pure_divergent_fp_is_zero(self):
        s = LaurentSeries()
        s.add(-4, Fraction(1)).add(-2, Fraction(-2))
        assert s.fp() == 0

    def test_log_term_blocks_fp(self):
        s = LaurentSeries(log_coeff=Fraction(1, 2))
        with pytest.raises(ValueError):
            s.fp()

    def test_arithmetic(self):
        a = LaurentSeries({0: Fraction(1), -2: Fraction(3)})
        b = LaurentSeries({0: Fraction(2)}, log_coeff=Fraction(1))
        c = a + 2 * b
        assert c.coeffs[0] == Fraction(5)
        assert c.coeffs[-2] == Fraction(3)
        assert c.log_coeff == Fraction(2)


class TestRenormalizedVolume:
    def test_exact_values(self):
        # V(H^4) = 4 pi^2 / 3, V(H^6) = -8 pi^3 / 15
        assert renormalized_volume_exact(4) == Fraction(4, 3)
        assert renormalized_volume_exact(6) == Fraction(-8, 15)

    def test_float_wrapper(self):
        assert renormalized_volume(4) == pytest.approx(4 * math.pi ** 2 / 3,
                                                       abs=1e-12)
        assert renormalized_volume(6) == pytest.approx(-8 * math.pi ** 3 / 15,
                                                       abs=1e-12)

    def test_odd_dimension_rejected(self):
        with pytest.raises(ValueError):
            renormalized_volume_exact(5)


class TestGaussBonnet:
    @pytest.mark.parametrize("name", ["S4", "S2xS2", "CP2", "S2xS2xS2"])
    def test_cgb(self, name):
        rep = verify_cgb(get_model(name))
        assert rep.passed, rep

    @pytest.mark.parametrize("name", ["S4", "S2xS2", "CP2", "S2xS2xS2"])
    def test_gbc_both_routes(self, name):
        for rep in verify_gbc(get_model(name)):
            assert rep.passed, rep

    def test_gbc_rejects_nonhomogeneous(self):
        with pytest.raises(ValueError):
            verify_gbc(get_model("perturbed-S4"))


class TestMainTheorem:
    def test_dim6_weyl_norm2(self):
        rep = verify_main_theorem_coefficient(get_model("S2xS2xS2"),
                                              "weyl-norm2")
        assert rep.passed, rep

    def test_unknown_field_rejected(self):
        with pytest.raises(ValueError):
            verify_main_theorem_coefficient(get_model("S2xS2xS2"), "nope")

    def test_wrong_k_rejected(self):
        with pytest.raises(ValueError):
            verify_main_theorem_coefficient(get_model("S2xS2xS2"),
                                            "weyl-norm2", k=3)


class TestDivergenceIdentities:
    @pytest.mark.parametrize("name", ["S2xS2", "CP2"])
    def test_worked_examples_homogeneous(self, name):
        for rep in verify_worked_examples(get_model(name)):
            assert rep.passed, rep

    def test_worked_examples_perturbed(self):
        for rep in verify_worked_examples(get_model("perturbed-S4")):
            assert rep.passed, rep

    def test_remark_scalars_vanish(self):
        for rep in remark_divergence_scalars(get_model("S2xS2xS2xS2")):
            assert rep.passed, rep

    def test_divergence_identity_suite(self):
        for rep in divergence_identity_checks():
            assert rep.passed, rep
