"""Truncated multivariate Taylor (jet) arithmetic."""

import numpy as np
import pytest

from rcint.jets import (
    PolyTensor,
    TaylorScalar,
    basis,
    const_poly,
    contract,
    poly_matrix_inverse,
    scalars_to_poly,
)


def _random_poly(b, comp_shape=(), batch=(), seed=0):
    rng = np.random.default_rng(seed)
    return PolyTensor(rng.standard_normal(batch + comp_shape + (b.size,)),
                      b, len(batch))


def _eval_poly(p: PolyTensor, x):
    """Direct monomial evaluation of the jet at offset x."""
    mono = np.prod(np.asarray(x) ** p.basis.exps, axis=1)
    return p.coeffs @ mono


class TestBasis:
    def test_sizes(self):
        assert basis(2, 3).size == 10
        assert basis(4, 2).size == 15
        assert basis(10, 6).size == 8008

    def test_degree_prefix_property(self):
        b = basis(3, 4)
        assert list(b.degs) == sorted(b.degs)
        for order in range(5):
            sub = basis(3, order)
            assert np.array_equal(sub.exps, b.exps[: sub.size])

    def test_lookup_roundtrip(self):
        b = basis(4, 3)
        idx = b.lookup(b.exps)
        assert np.array_equal(idx, np.arange(b.size))


class TestContract:
    def test_product_matches_direct_evaluation(self):
        b = basis(3, 4)
        p = _random_poly(b, seed=1)
        q = _random_poly(b, seed=2)
        prod = contract(",->", p, q, 4)
        x = np.array([0.0025, -0.005, 0.00375])
        # degree-truncation error is O(|x|^5)
        assert _eval_poly(prod, x) == pytest.approx(
            _eval_poly(p, x) * _eval_poly(q, x), abs=1e-10)

    def test_einsum_on_components(self):
        b = basis(2, 2)
        a = _random_poly(b, (3, 3), batch=(4,), seed=3)
        c = _random_poly(b, (3, 3), batch=(4,), seed=4)
        out = contract("ae,eb->ab", a, c, 0)
        want = np.einsum("...ae,...eb->...ab",
                         a.coeffs[..., 0], c.coeffs[..., 0])
        assert np.allclose(out.coeffs[..., 0], want)

    def test_order_zero_is_value_product(self):
        b = basis(3, 3)
        p = _random_poly(b, (2,), seed=5)
        q = _random_poly(b, (2,), seed=6)
        out = contract("a,a->", p, q, 0)
        assert np.allclose(out.value(),
                           np.sum(p.value() * q.value(), axis=-1))


class TestDiff:
    def test_diff_of_monomials(self):
        b = basis(2, 3)
        p = PolyTensor(np.zeros(b.size), b)
        # x^2 y
        i = b.index((2, 1))
        p.coeffs[i] = 5.0
        dx = p.diff(0)
        assert dx.coeffs[dx.basis.index((1, 1))] == 10.0
        dy = p.diff(1)
        assert dy.coeffs[dy.basis.index((2, 0))] == 5.0

    def test_gradient_stacks_all_vars(self):
        b = basis(3, 2)
        p = _random_poly(b, seed=7)
        g = p.gradient()
        assert g.comp_shape == (3,)
        for v in range(3):
            assert np.allclose(g.coeffs[v], p.diff(v).coeffs)


class TestMatrixInverse:
    def test_inverse_is_exact_to_order(self):
        b = basis(3, 4)
        rng = np.random.default_rng(8)
        coeffs = 0.1 * rng.standard_normal((2, 3, 3, b.size))
        coeffs[..., 0] = np.eye(3) + 0.05 * rng.standard_normal((2, 3, 3))
        coeffs[..., 0] += coeffs[..., 0].swapaxes(-1, -2) + 2 * np.eye(3)
        g = PolyTensor(coeffs, b, 1)
        gi = poly_matrix_inverse(g, 4)
        prod = contract("ae,eb->ab", g, gi, 4)
        ident = np.zeros_like(prod.coeffs)
        ident[..., 0] = np.eye(3)
        assert np.allclose(prod.coeffs, ident, atol=1e-12)


class TestTaylorScalar:
    def test_trig_jets_match_derivatives(self):
        b = basis(2, 5)
        x = TaylorScalar.coordinate(b, 0, np.array([0.3, 1.1]))
        s = x.sin()
        # coefficient of t^k about the base point is sin^(k)(x0)/k!
        i2 = b.index((2, 0))
        assert np.allclose(s.coeffs[:, i2], -np.sin([0.3, 1.1]) / 2)
        i3 = b.index((3, 0))
        assert np.allclose(s.coeffs[:, i3], -np.cos([0.3, 1.1]) / 6)

    def test_identity_sin2_cos2(self):
        b = basis(2, 4)
        x = TaylorScalar.coordinate(b, 0, np.array([0.7]))
        one = x.sin() * x.sin() + x.cos() * x.cos()
        want = np.zeros(b.size)
        want[0] = 1.0
        assert np.allclose(one.coeffs, want, atol=1e-14)

    def test_sqrt_squares_back(self):
        b = basis(1, 4)
        x = TaylorScalar.coordinate(b, 0, np.array([2.0]))
        r = x.sqrt()
        assert np.allclose((r * r).coeffs, x.coeffs, atol=1e-12)

    def test_negative_power(self):
        b = basis(1, 3)
        x = TaylorScalar.coordinate(b, 0, np.array([2.0]))
        inv = x ** (-1.0)
        prod = inv * x
        want = np.zeros(b.size)
        want[0] = 1.0
        assert np.allclose(prod.coeffs, want, atol=1e-13)

    def test_division_and_affine(self):
        b = basis(1, 3)
        x = TaylorScalar.coordinate(b, 0, np.array([0.5]))
        y = (1.0 + 2.0 * x) / (1.0 - x)
        # y(t) about 0.5: values and derivative via explicit formula
        assert np.allclose(y.coeffs[:, 0], 4.0)
        # y' = 3/(1-x)^2 = 12 at x = 0.5
        assert np.allclose(y.coeffs[:, 1], 12.0)


class TestScalarsToPoly:
    def test_mixed_entries_broadcast(self):
        b = basis(2, 2)
        x = TaylorScalar.coordinate(b, 0, np.array([0.1, 0.2, 0.3]))
        m = scalars_to_poly([[x * x, 0.0], [1.5, x]], b, batch_ndim=1)
        assert m.comp_shape == (2, 2)
        assert np.allclose(m.value()[:, 0, 0], [0.01, 0.04, 0.09])
        assert np.allclose(m.value()[:, 0, 1], 0.0)
        assert np.allclose(m.value()[:, 1, 0], 1.5)

    def test_truncate_and_value(self):
        b = basis(2, 3)
        p = _random_poly(b, seed=9)
        t = p.truncate(1)
        assert t.basis.order == 1
        assert np.allclose(t.coeffs, p.coeffs[: t.basis.size])
        assert const_poly(2.5, b).value() == 2.5
