"""Truncated multivariate Taylor (jet) arithmetic.

Every derivative in this package is obtained by propagating truncated Taylor
coefficients through closed-form metric components, so sixth-order mixed
partials come out to machine precision.  A polynomial of total degree <= K in
m variables is stored as a dense coefficient vector over the multi-indices of
a `PolyBasis`, ordered by (total degree, lex).  That ordering makes
truncation a slice and embedding a zero-pad.

Two layers sit on top of the basis:

* `TaylorScalar` -- a scalar jet with operator overloading and the analytic
  functions needed by the metric catalog (sin, cos, exp, real powers).
  Coefficient arrays may carry leading batch axes, so a chart can be expanded
  at many points at once.
* `PolyTensor` + `contract` -- tensors whose components are jets, with an
  einsum-like contraction that convolves the coefficient axis.  This is what
  the curvature pipeline runs on.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


# ---------------------------------------------------------------------------
# basis bookkeeping


def _gen_multi_indices(nvars: int, order: int):
    """All exponent tuples with total degree <= order, sorted by (degree, lex)."""

    def fixed_degree(deg, nv):
        if nv == 1:
            yield (deg,)
            return
        for first in range(deg, -1, -1):
            for rest in fixed_degree(deg - first, nv - 1):
                yield (first,) + rest

    out = []
    for deg in range(order + 1):
        out.extend(sorted(fixed_degree(deg, nvars)))
    return out


class PolyBasis:
    """Multi-index bookkeeping for jets in `nvars` variables up to `order`."""

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        exps = _gen_multi_indices(nvars, order)
        self.exps = np.array(exps, dtype=np.int64).reshape(len(exps), nvars)
        self.degs = self.exps.sum(axis=1)
        self.size = len(exps)
        self._codes = self._encode(self.exps)
        csort = np.argsort(self._codes)
        self._codes_sorted = self._codes[csort]
        self._code_order = csort
        # first index of each total degree (prefix property of the ordering)
        self.deg_start = np.searchsorted(self.degs, np.arange(order + 2))

    def _encode(self, exps):
        base = self.order + 1
        weights = base ** np.arange(self.nvars, dtype=np.int64)
        return exps @ weights

    def lookup(self, exps):
        """Indices of the given exponent rows; caller guarantees membership."""
        codes = self._encode(np.asarray(exps, dtype=np.int64))
        pos = np.searchsorted(self._codes_sorted, codes)
        return self._code_order[pos]

    def index(self, alpha):
        return int(self.lookup(np.asarray(alpha).reshape(1, -1))[0])

    def __repr__(self):
        return f"PolyBasis(nvars={self.nvars}, order={self.order})"


@lru_cache(maxsize=None)
def basis(nvars: int, order: int) -> PolyBasis:
    return PolyBasis(nvars, order)


@lru_cache(maxsize=None)
def _pair_table(nvars: int, order_a: int, order_b: int, order_out: int):
    """Convolution table for jet products.

    Returns (I, J, uniq_k, seg_starts): multiply A[..., I] * B[..., J],
    reduce contiguous segments, and write the sums to out[..., uniq_k].
    """
    ba, bb, bo = basis(nvars, order_a), basis(nvars, order_b), basis(nvars, order_out)
    ii, jj = [], []
    for i in range(ba.size):
        da = ba.degs[i]
        if da > order_out:
            break
        jmax = bb.deg_start[min(order_out - da, order_b) + 1]
        ii.append(np.full(jmax, i, dtype=np.int64))
        jj.append(np.arange(jmax, dtype=np.int64))
    I = np.concatenate(ii)
    J = np.concatenate(jj)
    K = bo.lookup(ba.exps[I] + bb.exps[J])
    order_idx = np.argsort(K, kind="stable")
    I, J, K = I[order_idx], J[order_idx], K[order_idx]
    uniq_k, seg_starts = np.unique(K, return_index=True)
    return I, J, uniq_k, seg_starts


@lru_cache(maxsize=None)
def _diff_table(nvars: int, order: int, var: int):
    """(gather, factor): d/dx_var maps coeffs[..., gather] * factor."""
    bin_ = basis(nvars, order)
    bout = basis(nvars, order - 1)
    shifted = bout.exps.copy()
    shifted[:, var] += 1
    gather = bin_.lookup(shifted)
    factor = shifted[:, var].astype(np.float64)
    return gather, factor


_CHUNK = 1 << 23  # max scratch elements per contraction chunk


class PolyTensor:
    """A tensor whose components are truncated Taylor polynomials.

    `coeffs` has shape (*batch, *comps, basis.size); `batch_ndim` leading axes
    are broadcast point batches shared by every component.
    """

    __slots__ = ("coeffs", "basis", "batch_ndim")

    def __init__(self, coeffs, basis_, batch_ndim=0):
        self.coeffs = np.asarray(coeffs)
        self.basis = basis_
        self.batch_ndim = batch_ndim
        if self.coeffs.shape[-1] != basis_.size:
            raise ValueError("coefficient axis does not match basis size")

    # -- structure ---------------------------------------------------------
    @property
    def comp_shape(self):
        return self.coeffs.shape[self.batch_ndim:-1]

    @property
    def rank(self):
        return len(self.comp_shape)

    def value(self):
        """Order-zero part: the component values at the base point."""
        return self.coeffs[..., 0]

    def truncate(self, order: int) -> "PolyTensor":
        if order > self.basis.order:
            raise ValueError("cannot raise truncation order")
        if order == self.basis.order:
            return self
        b = basis(self.basis.nvars, order)
        return PolyTensor(self.coeffs[..., : b.size], b, self.batch_ndim)

    def diff(self, var: int) -> "PolyTensor":
        gather, factor = _diff_table(self.basis.nvars, self.basis.order, var)
        b = basis(self.basis.nvars, self.basis.order - 1)
        return PolyTensor(self.coeffs[..., gather] * factor, b, self.batch_ndim)

    def gradient(self) -> "PolyTensor":
        """Stack of partial derivatives; the new axis is the first comp axis."""
        parts = [self.diff(v).coeffs for v in range(self.basis.nvars)]
        stacked = np.stack(parts, axis=self.batch_ndim)
        return PolyTensor(stacked, basis(self.basis.nvars, self.basis.order - 1),
                          self.batch_ndim)

    # -- linear ops ---------------------------------------------------------
    def _align(self, other):
        o = min(self.basis.order, other.basis.order)
        return self.truncate(o), other.truncate(o)

    def __add__(self, other):
        a, b = self._align(other)
        return PolyTensor(a.coeffs + b.coeffs, a.basis, self.batch_ndim)

    def __sub__(self, other):
        a, b = self._align(other)
        return PolyTensor(a.coeffs - b.coeffs, a.basis, self.batch_ndim)

    def __neg__(self):
        return PolyTensor(-self.coeffs, self.basis, self.batch_ndim)

    def __mul__(self, scalar):
        return PolyTensor(self.coeffs * scalar, self.basis, self.batch_ndim)

    __rmul__ = __mul__


def const_poly(values, basis_, batch_ndim=0) -> PolyTensor:
    values = np.asarray(values, dtype=np.float64)
    coeffs = np.zeros(values.shape + (basis_.size,))
    coeffs[..., 0] = values
    return PolyTensor(coeffs, basis_, batch_ndim)


def contract(pattern: str, a: PolyTensor, b: PolyTensor, order: int | None = None,
             ) -> PolyTensor:
    """Einsum over component axes with convolution of the coefficient axes.

    `pattern` names only the component axes, e.g. ``'ae,eb->ab'``; batch axes
    are broadcast and the jet axis is convolved and truncated to `order`.
    """
    if order is None:
        order = min(a.basis.order, b.basis.order)
    order = min(order, a.basis.order + b.basis.order)
    I, J, uniq_k, seg_starts = _pair_table(
        a.basis.nvars, a.basis.order, b.basis.order, order)
    bout = basis(a.basis.nvars, order)
    ins, outs = pattern.split("->")
    in_a, in_b = ins.split(",")
    ein = f"...{in_a}P,...{in_b}P->...{outs}P"

    batch_shape = np.broadcast_shapes(
        a.coeffs.shape[: a.batch_ndim], b.coeffs.shape[: b.batch_ndim])
    batch_ndim = len(batch_shape)

    # probe output component shape
    dims = {}
    for letters, arr in ((in_a, a), (in_b, b)):
        for ax, letter in enumerate(letters):
            dims[letter] = arr.comp_shape[ax]
    out_comp = tuple(dims[c] for c in outs)
    out = np.zeros(batch_shape + out_comp + (bout.size,))

    npairs = len(I)
    # chunk the pair axis only between segments so reduceat stays valid;
    # the scratch per pair is dominated by the widest of the two gathered
    # operands and the einsum product
    nbatch = max(int(np.prod(batch_shape, dtype=np.int64)), 1)
    widest = max(int(np.prod(a.comp_shape, dtype=np.int64)),
                 int(np.prod(b.comp_shape, dtype=np.int64)),
                 int(np.prod(out_comp, dtype=np.int64)), 1)
    est = nbatch * widest
    nseg_per_chunk = max(1, int(_CHUNK // max(est, 1)))
    s = 0
    while s < len(seg_starts):
        e = min(s + max(nseg_per_chunk, 1), len(seg_starts))
        lo = seg_starts[s]
        hi = seg_starts[e] if e < len(seg_starts) else npairs
        ga = a.coeffs[..., I[lo:hi]]
        gb = b.coeffs[..., J[lo:hi]]
        prod = np.einsum(ein, ga, gb, optimize=True)
        sums = np.add.reduceat(prod, seg_starts[s:e] - lo, axis=-1)
        out[..., uniq_k[s:e]] = sums
        s = e
    return PolyTensor(out, bout, batch_ndim)


def poly_matrix_inverse(g: PolyTensor, order: int) -> PolyTensor:
    """Jet inverse of a square matrix of polynomials.

    Linear iteration X <- X - X0 (g X - I); each pass fixes one more degree,
    so `order` passes give the exact truncated inverse.
    """
    g = g.truncate(order) if g.basis.order > order else g
    g0 = g.value()
    x0 = np.linalg.inv(g0)
    b = basis(g.basis.nvars, order)
    dim = g.comp_shape[-1]
    x = const_poly(x0, b, g.batch_ndim)
    x0p = const_poly(x0, b, g.batch_ndim)
    eye = const_poly(np.broadcast_to(np.eye(dim), g0.shape).copy(), b, g.batch_ndim)
    for _ in range(order):
        resid = contract("ab,bc->ac", g, x, order) - eye
        x = x - contract("ab,bc->ac", x0p, resid, order)
    return x


# ---------------------------------------------------------------------------
# scalar jets with analytic functions


class TaylorScalar:
    """Scalar jet; thin wrapper over a coefficient vector with batch axes."""

    __slots__ = ("basis", "coeffs")

    def __init__(self, basis_, coeffs):
        self.basis = basis_
        self.coeffs = np.asarray(coeffs)

    @classmethod
    def coordinate(cls, basis_, var: int, value):
        value = np.asarray(value, dtype=np.float64)
        coeffs = np.zeros(value.shape + (basis_.size,))
        coeffs[..., 0] = value
        if basis_.order >= 1:
            e = np.zeros(basis_.nvars, dtype=np.int64)
            e[var] = 1
            coeffs[..., basis_.index(e)] = 1.0
        return cls(basis_, coeffs)

    @classmethod
    def constant(cls, basis_, value):
        value = np.asarray(value)
        coeffs = np.zeros(value.shape + (basis_.size,), dtype=value.dtype)
        coeffs[..., 0] = value
        return cls(basis_, coeffs)

    @property
    def value(self):
        return self.coeffs[..., 0]

    def _coerce(self, other):
        if isinstance(other, TaylorScalar):
            return other
        return TaylorScalar.constant(self.basis, np.asarray(other))

    def __add__(self, other):
        other = self._coerce(other)
        return TaylorScalar(self.basis, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return TaylorScalar(self.basis, self.coeffs - other.coeffs)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return TaylorScalar(self.basis, -self.coeffs)

    def __mul__(self, other):
        if not isinstance(other, TaylorScalar):
            return TaylorScalar(self.basis, self.coeffs * np.asarray(other)[..., None]
                                if np.ndim(other) else self.coeffs * other)
        I, J, uniq_k, seg_starts = _pair_table(
            self.basis.nvars, self.basis.order, other.basis.order, self.basis.order)
        prod = self.coeffs[..., I] * other.coeffs[..., J]
        sums = np.add.reduceat(prod, seg_starts, axis=-1)
        out = np.zeros(prod.shape[:-1] + (self.basis.size,), dtype=prod.dtype)
        out[..., uniq_k] = sums
        return TaylorScalar(self.basis, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TaylorScalar):
            return self * other._reciprocal()
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self._reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, int) and p >= 0:
            out = TaylorScalar.constant(self.basis, np.ones_like(self.value))
            for _ in range(p):
                out = out * self
            return out
        return self._compose(lambda a, k: _pow_series(a, p, k))

    def _reciprocal(self):
        return self.__pow__(-1.0)

    def _compose(self, series_coeff):
        """sum_k c_k (self - a)^k with c_k = series_coeff(a, k), via Horner."""
        a = self.value
        k_max = self.basis.order
        h = TaylorScalar(self.basis, self.coeffs.copy())
        h.coeffs = h.coeffs.copy()
        h.coeffs[..., 0] = 0.0
        out = TaylorScalar.constant(self.basis, series_coeff(a, k_max))
        for k in range(k_max - 1, -1, -1):
            out = out * h + series_coeff(a, k)
        return out

    def sin(self):
        return self._compose(lambda a, k: _trig_series(a, k, 0))

    def cos(self):
        return self._compose(lambda a, k: _trig_series(a, k, 1))

    def exp(self):
        return self._compose(lambda a, k: np.exp(a) / math.factorial(k))

    def sqrt(self):
        return self.__pow__(0.5)


def _trig_series(a, k, shift):
    f = [np.sin, np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x)]
    return f[(k + shift) % 4](a) / math.factorial(k)


def _pow_series(a, p, k):
    c = 1.0
    for j in range(k):
        c *= (p - j) / (j + 1)
    return c * np.asarray(a, dtype=np.complex128 if np.iscomplexobj(a) else np.float64) ** (p - k)


def scalars_to_poly(entries, basis_, batch_ndim=0) -> PolyTensor:
    """Assemble a nested list of TaylorScalar/constants into a PolyTensor."""
    batch_shape = ()
    def scan(node):
        nonlocal batch_shape
        if isinstance(node, (list, tuple)):
            for n in node:
                scan(n)
        elif isinstance(node, TaylorScalar):
            batch_shape = np.broadcast_shapes(batch_shape, node.coeffs.shape[:-1])
    scan(entries)

    def to_coeffs(e):
        if isinstance(e, TaylorScalar):
            return np.broadcast_to(e.coeffs, batch_shape + (basis_.size,))
        arr = np.zeros(batch_shape + (basis_.size,))
        arr[..., 0] = float(e)
        return arr

    def recurse(node):
        if isinstance(node, (list, tuple)):
            return [recurse(n) for n in node]
        return to_coeffs(node)

    nested = recurse(entries)

    def stack(node):
        if isinstance(node, list):
            return np.stack([stack(n) for n in node], axis=batch_ndim)
        return node

    return PolyTensor(stack(nested), basis_, batch_ndim)
