"""Tests for generalized Pfaffians, Weyl-basis identities, and the
iterated-Laplacian operator."""

import itertools
import math

import numpy as np
import pytest

from rcint.geometry import get_model
from rcint.invariants import (
    STRAIGHTENABLE_FIELDS,
    _pf_classes,
    curvature_symmetry_residuals,
    divergence_construction,
    double_factorial,
    einstein_pfaffian_expansion,
    i_ell_closed_form_coeff,
    i_ell_operator,
    low_order_pfaffian_identity,
    pf_ell,
    pf_ell_brute,
    pf_ell_poly,
    pfaffian,
    raise_last_two,
    random_weyl,
    weyl_norm2_field,
)


class TestHelpers:
    def test_double_factorial(self):
        assert [double_factorial(m) for m in (-1, 0, 1, 3, 5, 7)] == \
            [1, 1, 1, 3, 15, 105]

    def test_class_counts(self):
        # Conjugation by the pair-block group plus inversion collapses
        # S_{2l} to these many contraction classes.
        assert [len(_pf_classes(ell)) for ell in (1, 2, 3, 4)] == [2, 8, 34, 171]

    def test_class_multiplicities_cover_group(self):
        for ell in (1, 2, 3):
            total = sum(abs(mult) for mult, _ in _pf_classes(ell))
            assert total == math.factorial(2 * ell)


class TestPfEll:
    @pytest.mark.parametrize("dim,ell", [(4, 1), (4, 2), (5, 2), (6, 2), (6, 3)])
    def test_matches_brute_force(self, dim, ell):
        W = random_weyl(dim, seed=10 * dim + ell, nsamples=3)
        g = np.broadcast_to(np.eye(dim), (3, dim, dim))
        assert pf_ell(W, ell, g) == pytest.approx(pf_ell_brute(W, ell, g),
                                                  rel=1e-12, abs=1e-12)

    def test_nonidentity_metric(self):
        rng = np.random.default_rng(7)
        dim = 4
        W = random_weyl(dim, seed=3)
        a = rng.normal(size=(dim, dim))
        g = a @ a.T + 3 * np.eye(dim)
        # abstract-index value: consistent between the two evaluators
        assert pf_ell(W, 2, g) == pytest.approx(pf_ell_brute(W, 2, g), rel=1e-12)

    def test_dimension_guard(self):
        T = np.zeros((4,) * 4)
        with pytest.raises(ValueError):
            pf_ell(T, 3)
        with pytest.raises(ValueError):
            pfaffian(np.zeros((3,) * 4))

    def test_pf_zero_is_one(self):
        assert pf_ell(np.zeros((2, 4, 4, 4, 4)), 0) == pytest.approx([1.0, 1.0])

    @pytest.mark.parametrize("name,value", [("S4", 3.0), ("S2xS2", 1.0),
                                            ("CP2", 24.0)])
    def test_pfaffian_model_values(self, name, value):
        # (2 pi)^{n/2} chi = Pf * Vol on these homogeneous spaces.
        m = get_model(name)
        geo = m.geometry(order=2)
        pf = pfaffian(geo.riemann.value(), geo.g.value())[0]
        assert pf == pytest.approx(value, rel=1e-10)
        assert pf * m.volume == pytest.approx((2 * np.pi) ** (m.dim // 2) * m.chi,
                                              rel=1e-10)

    def test_pf2_weyl_s2xs2(self):
        # Pf_2(W) = |W|^2 / 8 = 2/3 on S^2 x S^2.
        m = get_model("S2xS2")
        geo = m.geometry(order=2)
        val = pf_ell(geo.weyl.value(), 2, geo.g.value())[0]
        assert val == pytest.approx(2.0 / 3.0, rel=1e-12)

    def test_pf_ell_poly_matches_values(self):
        m = get_model("S2xS2xS2")
        rng = np.random.default_rng(11)
        pts = m.base_point[None, :] + 0.1 * rng.uniform(-1, 1, size=(2, m.dim))
        geo = m.geometry(pts, order=2)
        Wud = raise_last_two(geo.weyl, geo.ginv)
        for ell in (2, 3):
            jet = pf_ell_poly(Wud, ell).value()
            direct = pf_ell(geo.weyl.value(), ell, geo.g.value())
            assert jet == pytest.approx(direct, rel=1e-11)


class TestRandomWeyl:
    @pytest.mark.parametrize("dim", [4, 5, 6])
    def test_symmetries(self, dim):
        W = random_weyl(dim, seed=dim, nsamples=2)
        res = curvature_symmetry_residuals(W)
        assert max(res.values()) < 1e-12
        assert np.abs(W).max() > 0.1  # not degenerate

    def test_dim_guard(self):
        with pytest.raises(ValueError):
            random_weyl(3, seed=0)


class TestWeylBasisIdentity:
    @pytest.mark.parametrize("dim,ell", [(4, 2), (5, 2), (6, 2), (6, 3), (8, 4)])
    def test_low_order_identity(self, dim, ell):
        W = random_weyl(dim, seed=100 + dim + ell, nsamples=5)
        rep = low_order_pfaffian_identity(W, None, ell, tol=1e-10)
        assert rep.passed, rep

    @pytest.mark.parametrize("name", ["S4", "S2xS2", "CP2", "S2xS2xS2"])
    def test_einstein_expansion(self, name):
        rep = einstein_pfaffian_expansion(get_model(name))
        assert rep.passed, rep


class TestIellOperator:
    def test_closed_form_coefficients(self):
        assert i_ell_closed_form_coeff(6, 2, 1, 1.0) == pytest.approx(-4.0 / 3.0)
        assert i_ell_closed_form_coeff(8, 2, 2, 1.0) == pytest.approx(4.5)
        assert i_ell_closed_form_coeff(8, 3, 1, 1.0) == pytest.approx(-1.5)
        # ell = 0 is the identity
        assert i_ell_closed_form_coeff(6, 2, 0, 2.3) == pytest.approx(1.0)

    def test_operator_matches_closed_form_homogeneous(self):
        # On a homogeneous Einstein space I is constant, so I_ell reduces to
        # the closed-form multiple pointwise.
        m = get_model("S2xS2xS2")
        geo0 = m.geometry(order=2)
        base = weyl_norm2_field(geo0).value()[0]
        got = i_ell_operator(weyl_norm2_field, 2, 1, m)[0]
        want = i_ell_closed_form_coeff(m.dim, 2, 1, m.j_value) * base
        assert got == pytest.approx(want, rel=1e-9)

    def test_operator_rejects_non_einstein(self):
        m = get_model("perturbed-S4")
        with pytest.raises(ValueError):
            i_ell_operator(weyl_norm2_field, 2, 1, m)

    def test_field_catalog_entries(self):
        m = get_model("S2xS2xS2")  # dim 6, so pf3-weyl is defined
        geo = m.geometry(order=2)
        for name, (fn, k, base_order) in STRAIGHTENABLE_FIELDS.items():
            vals = fn(geo).value()
            assert np.all(np.isfinite(vals)), name
            assert k in (2, 3) and base_order == 2


class TestDivergenceConstruction:
    def test_singular_weight_rejected(self):
        m = get_model("S4")
        geo = m.geometry(order=3)
        T = geo.ricci  # rank 2, symmetric
        with pytest.raises(ValueError):
            divergence_construction(geo, T, w=2.0)  # w = 2k-2 with k = 2

    def test_rank_and_shape(self):
        m = get_model("S2xS2")
        geo = m.geometry(order=3)
        U = divergence_construction(geo, geo.ricci, w=0.0)
        assert U.rank == 1
        assert np.all(np.isfinite(U.value()))
