"""Curvature invariants: generalized Pfaffians, Weyl contraction bases,
the iterated-Laplacian operator on weighted scalars, and divergence-built
invariants.

The generalized Pfaffian of a rank-4 tensor T with both pairs of indices
antisymmetric is

    Pf_l(T) = 2^{-l} (2l-1)!! delta^{a1..a_{2l}}_{b1..b_{2l}}
              T_{a1 a2}{}^{b1 b2} ... T_{a_{2l-1} a_{2l}}{}^{b_{2l-1} b_{2l}},

where delta is the *normalized* generalized Kronecker delta
(1/k!) det(delta^{a_i}_{b_j}).  Expanding delta as a signed sum over
S_{2l} gives (2l)! complete contractions; the optimized evaluator groups
permutations into equivalence classes under relabelings that preserve the
term value for any T with the pair symmetries (conjugation by pair-block
permutations and inversion), so only one contraction per class is computed.
A naive full-permutation evaluator is kept as an independent oracle.
"""

from __future__ import annotations

import itertools
import math
import string
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .jets import PolyTensor, contract as jcontract
from .geometry import Geometry, pt_trace
from .reports import CheckReport


def double_factorial(m: int) -> int:
    """(2k-1)!! style double factorial with the convention (-1)!! = 1."""
    if m < -1:
        raise ValueError(f"double factorial undefined for {m}")
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


@dataclass
class InvariantValue:
    """A named scalar invariant value together with its scaling weight."""

    name: str
    weight: int
    value: float


# ---------------------------------------------------------------------------
# permutation bookkeeping for Pf_l


def _perm_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, clen = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            clen += 1
        if clen % 2 == 0:
            sign = -sign
    return sign


@lru_cache(maxsize=None)
def _pair_block_group(ell: int):
    """The hyperoctahedral group on 2*ell points: permute the ell blocks
    {2j, 2j+1} and optionally swap within blocks."""
    out = []
    for block_perm in itertools.permutations(range(ell)):
        for swaps in itertools.product((False, True), repeat=ell):
            pi = [0] * (2 * ell)
            for j in range(ell):
                a, b = 2 * block_perm[j], 2 * block_perm[j] + 1
                if swaps[j]:
                    a, b = b, a
                pi[2 * j], pi[2 * j + 1] = a, b
            out.append(tuple(pi))
    return tuple(out)


def _compose(p, q):
    """(p o q)(i) = p[q[i]]."""
    return tuple(p[i] for i in q)


def _invert(p):
    inv = [0] * len(p)
    for i, v in enumerate(p):
        inv[v] = i
    return tuple(inv)


@lru_cache(maxsize=None)
def _pf_classes(ell: int):
    """Group S_{2l} into classes with equal contraction value.

    For T antisymmetric in each index pair and symmetric under pair
    exchange, the complete contraction defined by sigma is unchanged under
    sigma -> pi o sigma o pi^{-1} for pi in the pair-block group (dummy
    index relabeling; the two antisymmetry sign flips cancel) and under
    sigma -> sigma^{-1} (pair-exchange symmetry).  Signs are constant on
    each class, so the delta expansion collapses to one einsum per class.

    Returns a list of (signed_multiplicity, representative sigma).
    """
    group = _pair_block_group(ell)
    seen = {}
    classes = []
    for sigma in itertools.permutations(range(2 * ell)):
        if sigma in seen:
            continue
        orbit = set()
        for pi in group:
            pinv = _invert(pi)
            for s in (sigma, _invert(sigma)):
                orbit.add(_compose(pi, _compose(s, pinv)))
        for s in orbit:
            seen[s] = True
        classes.append((_perm_sign(sigma) * len(orbit), sigma))
    return classes


def _term_subscripts(sigma, ell):
    """Per-factor index letters of the contraction defined by sigma."""
    letters = string.ascii_lowercase
    return ["".join(letters[i] for i in
                    (2 * j, 2 * j + 1, sigma[2 * j], sigma[2 * j + 1]))
            for j in range(ell)]


def _pf_prefactor(ell):
    return 2.0 ** (-ell) * double_factorial(2 * ell - 1) / math.factorial(2 * ell)


def _raise_pair(T, metric):
    """T_{ab}{}^{cd} for batched arrays; identity metric short-circuits."""
    T = np.asarray(T, dtype=np.float64)
    if metric is None:
        return T
    g = np.asarray(metric, dtype=np.float64)
    gi = np.linalg.inv(g)
    return np.einsum("...abef,...ec,...fd->...abcd", T, gi, gi)


def pf_ell(T, ell: int, metric=None):
    """Generalized Pfaffian Pf_l(T); batched over leading axes of T.

    `metric` is the (batched) covariant metric used to raise the second
    index pair; None means the identity.  Evaluated by the class-grouped
    signed-permutation expansion, never materializing the rank-4l delta.
    """
    T = np.asarray(T, dtype=np.float64)
    dim = T.shape[-1]
    if ell == 0:
        return np.ones(T.shape[:-4]) if T.ndim > 4 else 1.0
    if 2 * ell > dim:
        raise ValueError(f"Pf_{ell} requires dimension >= {2 * ell}, got {dim}")
    Tud = _raise_pair(T, metric)
    total = 0.0
    for mult, sigma in _pf_classes(ell):
        subs = _term_subscripts(sigma, ell)
        expr = ",".join("..." + s for s in subs) + "->..."
        total = total + mult * np.einsum(expr, *([Tud] * ell), optimize=True)
    return _pf_prefactor(ell) * total


def pf_ell_brute(T, ell: int, metric=None):
    """Pf_l by the naive full sum over S_{2l} (independent oracle)."""
    T = np.asarray(T, dtype=np.float64)
    dim = T.shape[-1]
    if ell == 0:
        return np.ones(T.shape[:-4]) if T.ndim > 4 else 1.0
    if 2 * ell > dim:
        raise ValueError(f"Pf_{ell} requires dimension >= {2 * ell}, got {dim}")
    Tud = _raise_pair(T, metric)
    total = 0.0
    for sigma in itertools.permutations(range(2 * ell)):
        subs = _term_subscripts(sigma, ell)
        expr = ",".join("..." + s for s in subs) + "->..."
        total = total + _perm_sign(sigma) * np.einsum(
            expr, *([Tud] * ell), optimize=True)
    return _pf_prefactor(ell) * total


def pfaffian(Rm, metric=None):
    """Pf_{n/2}(Rm), the Gauss-Bonnet integrand normalization."""
    dim = np.asarray(Rm).shape[-1]
    if dim % 2:
        raise ValueError("Pfaffian requires even dimension")
    return pf_ell(Rm, dim // 2, metric)


# -- jet-valued Pfaffian (for ambient Laplacians of Pf_l) ---------------------


def raise_last_two(T: PolyTensor, ginv: PolyTensor, order=None) -> PolyTensor:
    """T_{ab}{}^{cd} from all-lower jets T_{abcd}."""
    half = jcontract("abed,ec->abcd", T, ginv, order)
    return jcontract("abce,ed->abcd", half, ginv, order)


def pf_ell_poly(Tud: PolyTensor, ell: int, order=None) -> PolyTensor:
    """Pf_l of a jet-valued tensor T_{ab}{}^{cd} (scalar PolyTensor).

    Each class contraction is evaluated by repeated pairwise contraction,
    always joining the two factors sharing the most letters to keep
    intermediate ranks small.
    """
    if order is None:
        order = Tud.basis.order
    dim = Tud.comp_shape[-1]
    if 2 * ell > dim:
        raise ValueError(f"Pf_{ell} requires dimension >= {2 * ell}, got {dim}")
    total = None
    for mult, sigma in _pf_classes(ell):
        subs = _term_subscripts(sigma, ell)
        term = _contract_term_poly(subs, Tud, order)
        term = float(mult) * term
        total = term if total is None else total + term
    return _pf_prefactor(ell) * total


def _contract_term_poly(subs, Tud, order):
    factors = []
    for s in subs:
        t, s2 = Tud, s
        # resolve self-traces (repeated letter within one factor)
        while len(set(s2)) < len(s2):
            for i in range(len(s2)):
                j = s2.find(s2[i], i + 1)
                if j > 0:
                    t = pt_trace(t, i, j)
                    s2 = s2[:i] + s2[i + 1:j] + s2[j + 1:]
                    break
        factors.append((s2, t))
    while len(factors) > 1:
        best = None
        for i in range(len(factors)):
            for j in range(i + 1, len(factors)):
                shared = len(set(factors[i][0]) & set(factors[j][0]))
                if best is None or shared > best[0]:
                    best = (shared, i, j)
        _, i, j = best
        si, ti = factors[i]
        sj, tj = factors[j]
        out = "".join(c for c in si + sj if (si + sj).count(c) == 1)
        merged = jcontract(f"{si},{sj}->{out}", ti, tj, order)
        factors = [f for k, f in enumerate(factors) if k not in (i, j)]
        factors.append((out, merged))
    s, t = factors[0]
    if s:
        raise AssertionError("incomplete contraction")
    return t


# ---------------------------------------------------------------------------
# Weyl contraction bases


def _variants(W, metric):
    """Mixed-variance versions of a rank-4 tensor needed by the bases."""
    W = np.asarray(W, dtype=np.float64)
    if metric is None:
        gi = np.eye(W.shape[-1])
    else:
        gi = np.linalg.inv(np.asarray(metric, dtype=np.float64))

    def raise_slots(t, slots):
        for s in slots:
            sub = "abcd"
            out = sub[:s] + "z" + sub[s + 1:]
            t = np.einsum(f"...{sub},...{sub[s]}z->...{out}", t, gi,
                          optimize=True)
        return t

    return {
        "llll": W,
        "uuuu": raise_slots(W, (0, 1, 2, 3)),
        "lluu": raise_slots(W, (2, 3)),
        "uull": raise_slots(W, (0, 1)),
        "ulul": raise_slots(W, (0, 2)),
        "lulu": raise_slots(W, (1, 3)),
        "luuu": raise_slots(W, (1, 2, 3)),
        "ulll": raise_slots(W, (0,)),
    }


def weyl_basis(W, metric=None, k: int = 2):
    """The complete-contraction bases of W^(x)k for k in {2, 3, 4}.

    Returns [W_{2,1}], [W_{3,1}, W_{3,2}], or [W_{4,1} ... W_{4,7}]
    (batched over leading axes).
    """
    if k not in (2, 3, 4):
        raise ValueError("k must be one of 2, 3, 4")
    v = _variants(W, metric)
    ll, uu = v["llll"], v["uuuu"]
    m, lu = v["lluu"], v["lulu"]
    ul, luu = v["ulul"], v["luuu"]
    w21 = np.einsum("...abcd,...abcd->...", ll, uu, optimize=True)
    if k == 2:
        return [w21]
    if k == 3:
        w31 = np.einsum("...abcd,...cdef,...efab->...", m, m, m, optimize=True)
        w32 = np.einsum("...acbd,...cedf,...eafb->...", lu, lu, lu,
                        optimize=True)
        return [w31, w32]
    w41 = w21 ** 2
    w42 = np.einsum("...abcd,...cdef,...efgh,...ghab->...", m, m, m, m,
                    optimize=True)
    A = np.einsum("...acde,...bcde->...ab", ll, luu, optimize=True)
    Aup = np.einsum("...afgh,...bfgh->...ab", v["ulll"], uu, optimize=True)
    w43 = np.einsum("...ab,...ab->...", A, Aup, optimize=True)
    w44 = np.einsum("...abcd,...cdef,...ageh,...bgfh->...",
                    ll, v["uull"], ul, uu, optimize=True)
    w45 = np.einsum("...abcd,...cdef,...aegh,...bfgh->...",
                    ll, v["uull"], v["uull"], uu, optimize=True)
    w46 = np.einsum("...acbd,...cedf,...egfh,...gahb->...",
                    lu, lu, lu, lu, optimize=True)
    w47 = np.einsum("...acbd,...ecfd,...ageh,...bgfh->...",
                    lu, ll, ul, uu, optimize=True)
    return [w41, w42, w43, w44, w45, w46, w47]


WEYL_PF_COEFFS = {
    2: [1 / 8],
    3: [1 / 12, -1 / 6],
    4: [1 / 128, 1 / 64, -1 / 8, -1 / 4, 1 / 8, 1 / 8, -1 / 4],
}


def low_order_pfaffian_identity(W, metric=None, ell: int = 2,
                                tol=1e-10) -> CheckReport:
    """Residual of Pf_l(W) against its Weyl-basis expansion, l in {2,3,4}."""
    lhs = pf_ell(W, ell, metric)
    basis_vals = weyl_basis(W, metric, ell)
    rhs = sum(c * v for c, v in zip(WEYL_PF_COEFFS[ell], basis_vals))
    return CheckReport.compare(f"pfaffian-identity-l{ell}", "Lemma 5.2",
                               lhs, rhs, tol)


def einstein_pfaffian_expansion(model, points=None, tol=1e-9) -> CheckReport:
    """Pf = sum_l (n-2l-1)!! (2J/n)^{n/2-l} Pf_l(W) at an Einstein model."""
    if model.lam is None:
        raise ValueError(f"{model.name} is not a catalog Einstein model")
    n = model.dim
    if n % 2:
        raise ValueError("even dimension required")
    geo = model.geometry(points, order=2)
    g = geo.g.value()
    Rm = geo.riemann.value()
    W = geo.weyl.value()
    J = model.j_value
    lhs = pfaffian(Rm, g)
    rhs = 0.0
    for ell in range(n // 2 + 1):
        rhs = rhs + (double_factorial(n - 2 * ell - 1)
                     * (2 * J / n) ** (n // 2 - ell) * pf_ell(W, ell, g))
    return CheckReport.compare(f"einstein-pfaffian-{model.name}", "Lemma 5.1",
                               lhs, rhs, tol)


# ---------------------------------------------------------------------------
# random algebraic Weyl tensors


def bianchi_project(T):
    """Project a pair-antisymmetric, pair-symmetric tensor onto the
    first-Bianchi subspace by removing its totally antisymmetric part."""
    A = (np.einsum("...abcd->...abcd", T) + np.einsum("...abcd->...bcad", T)
         + np.einsum("...abcd->...cabd", T)) / 3.0
    return T - A


def curvature_project(T):
    """Project a rank-4 tensor onto algebraic curvature tensors
    (pair antisymmetry, pair exchange, first Bianchi)."""
    T = np.asarray(T, dtype=np.float64)
    T = (T - np.einsum("...abcd->...bacd", T)
         - np.einsum("...abcd->...abdc", T)
         + np.einsum("...abcd->...badc", T)) / 4.0
    T = (T + np.einsum("...abcd->...cdab", T)) / 2.0
    return bianchi_project(T)


def weyl_project(T):
    """Project onto totally trace-free algebraic curvature (Weyl) tensors.

    The background metric is the identity.  Applied after
    curvature_project, removes the Kulkarni-Nomizu part carrying the Ricci
    trace, mirroring the Weyl tensor construction.
    """
    T = curvature_project(T)
    dim = T.shape[-1]
    ric = np.einsum("...acbc->...ab", T)
    scal = np.einsum("...aa->...", ric)
    Jt = scal / (2 * (dim - 1))
    eye = np.broadcast_to(np.eye(dim), T.shape[:-4] + (dim, dim))
    P = (ric - Jt[..., None, None] * eye) / (dim - 2)
    kn = (np.einsum("...ac,...bd->...abcd", P, eye)
          - np.einsum("...ad,...bc->...abcd", P, eye)
          + np.einsum("...bd,...ac->...abcd", P, eye)
          - np.einsum("...bc,...ad->...abcd", P, eye))
    return T - kn


def random_weyl(dim: int, seed, nsamples=None):
    """Random Weyl-type tensors on a flat background (identity metric)."""
    if dim < 4:
        raise ValueError("dim must be >= 4")
    rng = np.random.default_rng(seed)
    shape = (dim,) * 4 if nsamples is None else (nsamples,) + (dim,) * 4
    return weyl_project(rng.normal(size=shape))


def curvature_symmetry_residuals(T):
    """Max residuals of the five algebraic symmetry/trace conditions."""
    T = np.asarray(T)
    return {
        "antisym12": np.abs(T + np.einsum("...abcd->...bacd", T)).max(),
        "antisym34": np.abs(T + np.einsum("...abcd->...abdc", T)).max(),
        "pair-exchange": np.abs(T - np.einsum("...abcd->...cdab", T)).max(),
        "bianchi": np.abs(T - bianchi_project(T)).max(),
        "trace-free": np.abs(np.einsum("...acbc->...ab", T)).max(),
    }


# ---------------------------------------------------------------------------
# the iterated-Laplacian straightenable operator


def i_ell_closed_form_coeff(n: int, k: int, ell: int, J: float) -> float:
    """Constant multiple relating I_ell to I on homogeneous Einstein
    manifolds (all Laplacian terms vanish)."""
    num = math.factorial(k + ell - 1) * double_factorial(n - 2 * k - 1)
    den = math.factorial(k - 1) * double_factorial(n - 2 * k - 2 * ell - 1)
    return (-4.0 * J / n) ** ell * num / den


def i_ell_operator(field_fn, k: int, ell: int, model, points=None,
                   base_order: int = 2):
    """I_ell = prod_{j=0}^{ell-1} (Delta - 4(k+j)(n-2k-2j-1) J / n) I.

    `field_fn(geo) -> scalar PolyTensor` builds I from a Geometry;
    `base_order` is the metric jet order field_fn itself consumes.
    Returns the values of I_ell at the points (shape (B,)).
    """
    if model.lam is None:
        raise ValueError(f"{model.name} has no Einstein constant")
    n = model.dim
    J = model.j_value
    geo = model.geometry(points, order=base_order + 2 * ell)
    u = field_fn(geo)
    for j in range(ell):
        c = 4.0 * (k + j) * (n - 2 * k - 2 * j - 1) / n * J
        u = geo.laplacian(u) - c * u
    return u.value()


# ---------------------------------------------------------------------------
# divergence construction (ambient divergence on symmetric tensors)


def divergence_construction(geo: Geometry, T: PolyTensor, w: float,
                            order=None) -> PolyTensor:
    """U_{a1..a_{k-1}} = div T + (k-1)/(w-2k+2) * grad of the trace.

    T must be a symmetric all-lower rank-k jet tensor of scaling weight w;
    the result has rank k-1 and weight w-2.  Rejects w = 2k-2 where the
    trace coefficient blows up.
    """
    k = T.rank
    if k < 1:
        raise ValueError("T must have rank >= 1")
    if w == 2 * k - 2:
        raise ValueError("weight w = 2k-2 is singular for this construction")
    if order is None:
        order = T.basis.order - 1
    dT = geo.covariant_derivative(T)  # (der, a1..ak)
    letters = string.ascii_lowercase
    idx = letters[:k - 1]
    div = jcontract(f"e{idx}b,eb->{idx}", dT, geo.ginv, order)
    if k == 1:
        return div
    rest = letters[:k - 2]
    tr = jcontract(f"{rest}eb,eb->{rest}", T, geo.ginv, order + 1)
    dtr = geo.covariant_derivative(tr).truncate(order)  # rank k-1
    sym = _symmetrize_poly(dtr)
    return div + ((k - 1) / (w - 2 * k + 2)) * sym


def _symmetrize_poly(t: PolyTensor) -> PolyTensor:
    k = t.rank
    nb = t.batch_ndim
    acc = None
    for perm in itertools.permutations(range(k)):
        axes = (tuple(range(nb)) + tuple(nb + p for p in perm)
                + (t.coeffs.ndim - 1,))
        term = np.transpose(t.coeffs, axes)
        acc = term if acc is None else acc + term
    return PolyTensor(acc / math.factorial(k), t.basis, nb)


# ---------------------------------------------------------------------------
# field catalog: straightenable scalar invariants as Geometry -> jets maps


def weyl_norm2_field(geo: Geometry) -> PolyTensor:
    """|W|^2; weight -4 (k = 2)."""
    return geo.norm_squared(geo.weyl)


def w31_field(geo: Geometry) -> PolyTensor:
    """W_{ab}{}^{cd} W_{cd}{}^{ef} W_{ef}{}^{ab}; weight -6 (k = 3)."""
    Wud = raise_last_two(geo.weyl, geo.ginv)
    t = jcontract("abcd,cdef->abef", Wud, Wud)
    return jcontract("abef,efab->", t, Wud)


def w32_field(geo: Geometry) -> PolyTensor:
    """W_a{}^c{}_b{}^d W_c{}^e{}_d{}^f W_e{}^a{}_f{}^b; weight -6 (k = 3)."""
    W = geo.weyl
    tmp = jcontract("aebf,ec->acbf", W, geo.ginv)
    Wm = jcontract("acbe,ed->acbd", tmp, geo.ginv)
    t = jcontract("acbd,cedf->abef", Wm, Wm)
    return jcontract("abef,eafb->", t, Wm)


def pf3_weyl_field(geo: Geometry) -> PolyTensor:
    """Pf_3(W); weight -6 (k = 3)."""
    Wud = raise_last_two(geo.weyl, geo.ginv)
    return pf_ell_poly(Wud, 3)


def pf_ell_weyl_field(geo: Geometry, ell: int) -> PolyTensor:
    Wud = raise_last_two(geo.weyl, geo.ginv)
    return pf_ell_poly(Wud, ell)


#: name -> (field_fn, k, metric jet order consumed by the field itself)
STRAIGHTENABLE_FIELDS = {
    "weyl-norm2": (weyl_norm2_field, 2, 2),
    "W31": (w31_field, 3, 2),
    "W32": (w32_field, 3, 2),
    "pf3-weyl": (pf3_weyl_field, 3, 2),
}
