"""Deterministic factoring of split squarefree polynomials by ideal refinement.

The driver builds the essential levels of the quotient algebra of f over a
field extension with enough roots of unity, then refines each level's
orthogonal ideal decomposition until either level 1 splits (a factor) or
the induced combinatorial structure is a homogeneous antisymmetric scheme
with no matchings (a certified stuck state).

Every ideal is tracked by its support idempotent plus a reduced-row-echelon
basis, so dimensions are exact and all splits are deterministic.  Zero
divisors are converted to idempotents by powering with |k|-1, which is exact
on split algebras; the public automorphism splitter also handles non-split
inputs through a universal exponent.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from . import mscheme as _mscheme
from .assoc import TheoremContradiction
from .gf import (
    FieldCtx,
    Poly,
    extension_for_levels,
    field_ctx,
    find_nonresidue,
    is_prime,
    is_split_squarefree,
    lift_poly,
)
from .levels import LevelAlgebra, build_levels
from .linalg import KOps

DIM_CAP = 10**6
ORDER_CAP = 10**6


class NotSplit(ValueError):
    pass


class DimCapExceeded(RuntimeError):
    pass


class ZeroAlgebra(ValueError):
    pass


class InvalidSystem(ValueError):
    pass


class TrivialAutomorphism(ValueError):
    pass


class MissingRootOfUnity(RuntimeError):
    pass


class NotAMatching(ValueError):
    pass


class NotPrimeDegree(ValueError):
    pass


class SmoothDivisorTooSmall(ValueError):
    pass


# ---------------------------------------------------------------------------
# small-scale algebras with explicit structure constants


class Algebra:
    """Commutative algebra given by structure constants over a FieldCtx."""

    def __init__(self, ctx: FieldCtx, structure, identity):
        self.ctx = ctx
        self.kops = KOps(ctx)
        self.structure = np.asarray(structure, dtype=np.int64)
        self.dim = self.structure.shape[0]
        self.identity = np.asarray(identity, dtype=np.int64)

    def zero(self):
        return self.kops.zeros((self.dim,))

    def mult(self, u, v):
        # w_k = sum_{i,j} u_i v_j S_{ijk}, all products in the field
        uv = self.kops.mul(u[:, None, :], v[None, :, :])  # (N, N, d)
        w = self.kops.mul(uv[:, :, None, :], self.structure)
        return w.sum(axis=(0, 1)) % self.kops.p

    def power(self, u, e: int):
        result = self.identity.copy()
        base = u
        while e:
            if e & 1:
                result = self.mult(result, base)
            base = self.mult(base, base) if e > 1 else base
            e >>= 1
        return result

    def elem(self, coeffs):
        vec = self.zero()
        for i, c in enumerate(coeffs):
            vec[i] = self.kops.scalar(c)
        return vec

    def __repr__(self):
        return f"Algebra(dim={self.dim} over F_{self.ctx.p}^{self.ctx.d})"


@dataclass
class AlgElem:
    algebra: Algebra
    vec: np.ndarray

    def __mul__(self, other):
        return AlgElem(self.algebra, self.algebra.mult(self.vec, other.vec))

    def __eq__(self, other):
        return isinstance(other, AlgElem) and np.array_equal(self.vec, other.vec)


def quotient_algebra(f: Poly, k: FieldCtx | None = None) -> Algebra:
    """A = k[x]/(f) with basis 1, x, ..., x^(n-1); requires f split squarefree."""
    g = f.monic()
    if not is_split_squarefree(g):
        raise NotSplit("polynomial is not squarefree and fully split over its field")
    if k is not None and k != g.ctx:
        g = lift_poly(g, k)
    ctx = g.ctx
    n = g.degree
    kops = KOps(ctx)
    structure = kops.zeros((n, n, n))
    x = Poly(ctx, [0, 1])
    pows = [Poly(ctx, [1])]
    for _ in range(2 * n - 1):
        pows.append((pows[-1] * x) % g)
    for i in range(n):
        for j in range(n):
            prod = pows[i + j]
            for kk, c in enumerate(prod.coeffs):
                structure[i, j, kk] = np.array(c.coeffs, dtype=np.int64)
    identity = kops.zeros((n,))
    identity[0, 0] = 1
    alg = Algebra(ctx, structure, identity)
    alg.modulus = g
    return alg


class EssentialAlgebra(Algebra):
    """Essential part of a tensor power, with its ambient embedding data."""

    def __init__(self, ctx, structure, identity, base, level, ambient_basis):
        super().__init__(ctx, structure, identity)
        self.base = base
        self.level = level
        self.ambient_basis = ambient_basis  # (dim, base.dim**level, d)


def _ambient_mult(base: Algebra, s: int, u, v):
    """Product in the s-fold tensor power; u, v flat (n^s, d).

    Slot-by-slot contraction: before handling slot t the work tensor has
    axes (i_t..i_{s-1}, j_t..j_{s-1}, k_0..k_{t-1}, d); contracting the
    leading i and j axes against the structure constants appends k_t.
    """
    n = base.dim
    kops = base.kops
    T = kops.mul(u.reshape((n**s, 1, kops.d)), v.reshape((1, n**s, kops.d)))
    T = T.reshape((n,) * s + (n,) * s + (kops.d,))
    for slot in range(s):
        ni = s - slot
        Tm = np.moveaxis(T, [0, ni], [0, 1])
        rest_shape = Tm.shape[2:-1]
        Tm = Tm.reshape(n, n, -1, kops.d)
        out_flat = kops.zeros((Tm.shape[2], n))
        for a in range(n):
            for b in range(n):
                coeffs = Tm[a, b]
                if not coeffs.any():
                    continue
                row = base.structure[a, b]
                contrib = kops.mul(coeffs[:, None, :], row[None, :, :])
                out_flat = (out_flat + contrib) % kops.p
        T = out_flat.reshape(rest_shape + (n, kops.d))
    return T.reshape((n**s, kops.d))


def essential_part(a: Algebra, s: int, dim_cap: int = DIM_CAP) -> EssentialAlgebra:
    """Essential part of the s-th tensor power, computed as the intersection
    of the diagonal-vanishing ideals D_ij inside the ambient tensor power."""
    n = a.dim
    if s < 1:
        raise ValueError("level must be >= 1")
    target = 1
    for j in range(s):
        target *= n - j
    if target == 0:
        raise ZeroAlgebra(f"no essential {s}-tuples on {n} points")
    ambient = n**s
    if ambient > dim_cap:
        raise DimCapExceeded(f"ambient dimension {ambient} exceeds cap {dim_cap}")
    kops = a.kops
    if s == 1:
        basis = kops.eye(n)
        return EssentialAlgebra(a.ctx, a.structure, a.identity, a, 1, basis)

    def iota(vec, slot):
        """Insert the identity of A at `slot` (0-based)."""
        shape = (n,) * (s - 1) + (kops.d,)
        t = vec.reshape(shape) if vec.ndim == 2 else vec
        expanded = np.zeros((n,) * s + (kops.d,), dtype=np.int64)
        idx = [slice(None)] * s
        # identity has coefficients a.identity over the inserted slot
        for c in range(n):
            if not a.identity[c].any():
                continue
            idx2 = list(idx)
            idx2[slot] = c
            sub = kops.mul(t, np.broadcast_to(a.identity[c], t.shape))
            expanded[tuple(idx2)] = (expanded[tuple(idx2)] + sub) % kops.p
        return expanded.reshape(ambient, kops.d)

    # D_ij = ideal generated by {iota_i(b) - iota_j(b)}: span of gen * monomial
    inter = None
    eye_small = kops.eye(n)
    for i, j in itertools.combinations(range(s), 2):
        gens = []
        for b in range(n):
            gens.append((iota(eye_small[b], i) - iota(eye_small[b], j)) % kops.p)
        rows = []
        for g in gens:
            for mono in range(ambient):
                m = kops.zeros((ambient,))
                m[mono, 0] = 1
                rows.append(_ambient_mult(a, s, g, m))
        rows = np.stack(rows)
        dij, _ = kops.rref(rows)
        inter = dij if inter is None else kops.intersect_row_spaces(inter, dij)
    basis, _ = kops.rref(inter)
    if basis.shape[0] != target:
        raise InvalidSystem(f"essential dimension {basis.shape[0]} != {target}")
    # identity of the essential part: e with e * b_r = b_r for all basis rows
    # solve in coordinates: sum_a lam_a (b_a * b_r) = b_r
    prods = np.stack([
        np.stack([_ambient_mult(a, s, basis[x], basis[y]) for y in range(target)])
        for x in range(target)
    ])  # (target, target, ambient, d)
    _, pivots = kops.rref(basis)
    coords = prods[:, :, pivots, :]  # products in essential coordinates
    # lam solves sum_a lam_a coords[a, r, :] = delta_r
    A_mat = coords.transpose(1, 2, 0, 3).reshape(target * target, target, kops.d)
    rhs = kops.eye(target).reshape(target * target, kops.d)
    lam = kops.solve_right(A_mat, rhs)
    if lam is None:
        raise InvalidSystem("essential part has no identity")
    ident_amb = kops.zeros((ambient,))
    for x in range(target):
        if basis[x].any() and lam[x].any():
            ident_amb = (ident_amb + kops.mul(np.broadcast_to(lam[x], basis[x].shape), basis[x])) % kops.p
    # structure constants on the essential basis
    structure = coords.copy()  # structure[i][j][k]
    identity_coords = ident_amb[pivots]
    ess = EssentialAlgebra(a.ctx, structure, identity_coords, a, s, basis)
    ess.ambient_identity = ident_amb
    ess.pivots = pivots
    return ess


def embed(a: AlgElem, j: int, target: EssentialAlgebra) -> AlgElem:
    """iota_j (1-based slot) from one essential level into the next, then
    multiplied by the target's identity."""
    src = a.algebra
    if not isinstance(src, EssentialAlgebra) or target.level != src.level + 1:
        raise ValueError("embed expects consecutive essential levels")
    base = src.base
    n = base.dim
    kops = base.kops
    s = target.level
    amb_vec = kops.zeros((n ** src.level,))
    for x in range(src.dim):
        if a.vec[x].any():
            amb_vec = (amb_vec + kops.mul(np.broadcast_to(a.vec[x], src.ambient_basis[x].shape), src.ambient_basis[x])) % kops.p
    t = amb_vec.reshape((n,) * src.level + (kops.d,))
    expanded = np.zeros((n,) * s + (kops.d,), dtype=np.int64)
    for c in range(n):
        if not base.identity[c].any():
            continue
        idx = [slice(None)] * s
        idx[j - 1] = c
        sub = kops.mul(t, np.broadcast_to(base.identity[c], t.shape))
        expanded[tuple(idx)] = (expanded[tuple(idx)] + sub) % kops.p
    amb = _ambient_mult(base, s, expanded.reshape(n**s, kops.d), target.ambient_identity)
    coords = amb[target.pivots]
    return AlgElem(target, coords)


# ---------------------------------------------------------------------------
# generic automorphism splitting (the zero-divisor engine)


class NoSplit:
    def __repr__(self):
        return "NoSplit"


@dataclass
class ZeroDivisor:
    vec: np.ndarray


class _Ops:
    """Uniform element operations for the splitting engine."""

    def __init__(self, ctx, mult, identity, idem_exponent):
        self.ctx = ctx
        self.kops = KOps(ctx)
        self.mult = mult
        self.identity = identity
        self.idem_exponent = idem_exponent

    def power(self, u, e: int):
        result = self.identity.copy()
        base = u
        while e:
            if e & 1:
                result = self.mult(result, base)
            base = self.mult(base, base) if e > 1 else base
            e >>= 1
        return result

    def idem(self, z):
        return self.power(z, self.idem_exponent)

    def scale(self, u, elem):
        s = self.kops.scalar(elem)
        return self.kops.mul(u, np.broadcast_to(s, u.shape))

    @staticmethod
    def eq(u, v):
        return np.array_equal(u, v)

    def is_zero(self, u):
        return not u.any()


def _coords_in(kops, basis, pivots, vec):
    return vec[pivots]


def _from_coords(kops, basis, coords):
    out = np.zeros(basis.shape[1:], dtype=np.int64)
    for i in range(basis.shape[0]):
        if coords[i].any():
            out = (out + kops.mul(np.broadcast_to(coords[i], basis[i].shape), basis[i])) % kops.p
    return out


def _algebra_amm(ops: _Ops, u, r: int):
    """r-th root of u over the algebra; ('root', y) or ('zerodiv', z) or
    ('opaque', None) when values escape the scalar Sylow tower."""
    ctx = ops.ctx
    q1 = ctx.order - 1
    t, s = 0, q1
    while s % r == 0:
        s //= r
        t += 1
    g = find_nonresidue(r, ctx)
    h = g**s
    omega = h ** (r ** (t - 1))
    alpha = pow(r, -1, s)
    x = ops.power(u, alpha)
    c = ops.power(u, (1 - r * alpha) % q1)
    e_val = 0
    cc = c
    for i in range(t):
        val = ops.power(cc, r ** (t - 1 - i))
        digit = None
        w = ctx.one()
        for cand in range(r):
            diff = (val - ops.scale(ops.identity, w)) % ops.kops.p
            if ops.is_zero(diff):
                digit = cand
                break
            e_d = ops.idem(diff)
            if not ops.eq(e_d, ops.identity) and e_d.any():
                return ("zerodiv", diff)
            w = w * omega
        if digit is None:
            return ("opaque", None)
        e_val += digit * r**i
        if digit:
            cc = ops.scale(cc, h ** ((-digit * r**i) % q1))
    if e_val % r:
        return ("opaque", None)
    y = ops.scale(x, h ** (e_val // r))
    return ("root", y)


def _split_with_automorphism(ops: _Ops, basis, pivots, e_B, sigma_mat, r: int):
    """Deterministic zero-divisor search for a prime-order automorphism.

    Eigenspace route when r | Q-1, additive (Artin-Schreier) route when
    r = char; returns ZeroDivisor or NoSplit.
    """
    kops = ops.kops
    ctx = ops.ctx
    dim = basis.shape[0]
    if kops.mat_eq(sigma_mat, kops.eye(dim)):
        raise TrivialAutomorphism("automorphism is the identity")
    if r == ctx.p:
        return _split_char_order(ops, basis, pivots, e_B, sigma_mat)
    if (ctx.order - 1) % r != 0:
        raise MissingRootOfUnity(f"{r}-th roots of unity missing from the field")
    zeta = find_nonresidue(r, ctx) ** ((ctx.order - 1) // r)
    z = None
    for j in range(1, r):
        lam = zeta**j
        M = (sigma_mat - kops.scalar_mul(np.array(lam.coeffs, dtype=np.int64), kops.eye(dim))) % kops.p
        ker = kops.nullspace(np.swapaxes(M, 0, 1))
        if ker.shape[0]:
            z = _from_coords(kops, basis, ker[0])
            break
    if z is None:
        raise TrivialAutomorphism("no nontrivial eigenspace")
    e_z = ops.idem(z)
    if not ops.eq(e_z, e_B):
        return ZeroDivisor((e_B - e_z) % kops.p)
    u = ops.power(z, r)
    v_chk = ops.power(u, (ctx.order - 1) // r)
    if not ops.eq(v_chk, e_B):
        w = ctx.one()
        for _ in range(r):
            diff = (v_chk - ops.scale(e_B, w)) % kops.p
            if ops.is_zero(diff):
                return NoSplit()
            e_d = ops.idem(diff)
            if not ops.eq(e_d, e_B) and e_d.any():
                return ZeroDivisor(diff)
            w = w * zeta
        return NoSplit()
    kind, payload = _algebra_amm(ops, u, r)
    if kind == "zerodiv":
        return ZeroDivisor(payload)
    if kind == "opaque":
        return NoSplit()
    y = payload
    w_elem = ops.mult(y, ops.power(z, ops.idem_exponent - 1))
    wp = ctx.one()
    for _ in range(r):
        diff = (w_elem - ops.scale(e_B, wp)) % kops.p
        if ops.is_zero(diff):
            return NoSplit()
        e_d = ops.idem(diff)
        if not ops.eq(e_d, e_B) and e_d.any():
            return ZeroDivisor(diff)
        wp = wp * zeta
    raise RuntimeError("w is an r-th root of unity; some factor must be singular")


def _split_char_order(ops: _Ops, basis, pivots, e_B, sigma_mat):
    """Order-p automorphism in characteristic p: either the fixed/moved
    support splits, or an Artin-Schreier solve produces an element with
    values 0..p-1 along every orbit."""
    kops = ops.kops
    ctx = ops.ctx
    p = ctx.p
    dim = basis.shape[0]

    def apply_sigma(vec):
        coords = _coords_in(kops, basis, pivots, vec)
        img = kops.matmul(coords[None, :, :], sigma_mat)[0]
        return _from_coords(kops, basis, img)

    acc = e_B.copy()
    moved_any = False
    for i in range(dim):
        d_elem = (apply_sigma(basis[i]) - basis[i]) % kops.p
        if ops.is_zero(d_elem):
            continue
        moved_any = True
        e_i = ops.idem(d_elem)
        acc = ops.mult(acc, (e_B - e_i) % kops.p)
        if ops.is_zero(acc):
            break
    if not moved_any:
        raise TrivialAutomorphism("automorphism is the identity")
    moved = (e_B - acc) % kops.p
    if not ops.eq(moved, e_B):
        return ZeroDivisor(moved)
    # solve (sigma - 1) z = e_B in coordinates
    M = (sigma_mat - kops.eye(dim)) % kops.p
    e_co = _coords_in(kops, basis, pivots, e_B)
    sol = kops.solve_right(np.swapaxes(M, 0, 1), e_co)
    if sol is None:
        raise InvalidSystem("sigma - 1 must reach the identity on moved support")
    z = _from_coords(kops, basis, sol)
    u = (ops.power(z, p) - z) % kops.p
    # fixed subalgebra F = ker(sigma - 1), as rows in ambient coordinates
    kerF = kops.nullspace(np.swapaxes(M, 0, 1))
    F = np.stack([_from_coords(kops, basis, kerF[i]) for i in range(kerF.shape[0])])
    F, fpiv = kops.rref(F)
    dimF = F.shape[0]
    d = kops.d
    # Frobenius-minus-identity as an F_p-linear map on F
    pops = KOps(field_ctx(p, 1))
    cols = []
    for a in range(dimF):
        for t in range(d):
            theta_t = [0] * d
            theta_t[t] = 1
            el = ops.scale(F[a], ctx.elem(theta_t))
            img = (ops.power(el, p) - el) % p
            co = _coords_in(kops, F, fpiv, img)  # (dimF, d)
            cols.append(co.reshape(-1))
    A_fp = np.stack(cols, axis=1)[..., None]  # (dimF*d, dimF*d, 1)
    rhs = _coords_in(kops, F, fpiv, (-u) % p).reshape(-1)[..., None]
    x = pops.solve_right(A_fp, rhs)
    if x is None:
        raise InvalidSystem("Artin-Schreier system must be solvable")
    w = np.zeros_like(e_B)
    xi = 0
    for a in range(dimF):
        for t in range(d):
            if x[xi, 0]:
                theta_t = [0] * d
                theta_t[t] = 1
                w = (w + int(x[xi, 0]) * ops.scale(F[a], ctx.elem(theta_t))) % p
            xi += 1
    z2 = (z + w) % p
    e2 = ops.idem(z2)
    if ops.eq(e2, e_B) or ops.is_zero(e2):
        raise InvalidSystem("Artin-Schreier element must vanish once per orbit")
    return ZeroDivisor(z2)


def _universal_exponent(ctx: FieldCtx, dim: int) -> int:
    """z^this is idempotent even when components live in extensions <= dim."""
    lam = 1
    for t in range(1, dim + 1):
        lam = math.lcm(lam, ctx.order**t - 1)
    return lam


def split_by_automorphism(b: Algebra, sigma, r: int):
    """Ronyai-style split of an algebra under a prime-order automorphism.

    sigma is a dim x dim matrix (entries ints or digit vectors) giving the
    action on basis coordinates.  Returns ZeroDivisor (as an AlgElem) or
    NoSplit; a NoSplit on a split-semisimple input means it is a field.
    """
    kops = b.kops
    sigma = np.asarray(sigma, dtype=np.int64)
    if sigma.ndim == 2:
        sig = kops.zeros((b.dim, b.dim))
        sig[..., 0] = sigma % kops.p
        sigma = sig
    if not is_prime(r):
        raise ValueError("r must be prime")
    # sigma^r must be the identity
    acc = kops.eye(b.dim)
    for _ in range(r):
        acc = kops.matmul(acc, sigma)
    if not kops.mat_eq(acc, kops.eye(b.dim)):
        raise ValueError("sigma^r is not the identity")
    if (b.ctx.order - 1) % r != 0 and r != b.ctx.p:
        # adjoin the missing roots of unity, split there, and descend:
        # the support idempotent of any zero divisor has 0/1 components,
        # hence lives in the base field
        ord_t = 1
        acc_q = b.ctx.order % r
        while acc_q != 1:
            acc_q = acc_q * b.ctx.order % r
            ord_t += 1
        try:
            K = field_ctx(b.ctx.p, b.ctx.d * ord_t)
        except Exception as exc:
            raise MissingRootOfUnity(str(exc)) from exc
        from .gf import embed_field

        emb = embed_field(b.ctx, K)
        kopsK = KOps(K)

        def lift(arr):
            out = kopsK.zeros(arr.shape[:-1])
            flat_in = arr.reshape(-1, kops.d)
            flat_out = out.reshape(-1, kopsK.d)
            for i in range(flat_in.shape[0]):
                el = emb(b.ctx.elem([int(v) for v in flat_in[i]]))
                flat_out[i] = np.array(el.coeffs, dtype=np.int64)
            return out

        bK = Algebra(K, lift(b.structure), lift(b.identity))
        res = split_by_automorphism(bK, lift(sigma), r)
        if isinstance(res, NoSplit):
            return res
        opsK = _Ops(K, bK.mult, bK.identity, _universal_exponent(K, b.dim))
        eK = opsK.idem(res.vec)
        # descend: components of the support idempotent are 0/1
        inv = {}
        for a in b.ctx.elements():
            inv[emb(a).coeffs] = a.coeffs
        down = kops.zeros((b.dim,))
        for i in range(b.dim):
            key = tuple(int(v) for v in eK[i])
            if key not in inv:
                raise InvalidSystem("idempotent failed to descend to the base field")
            down[i] = np.array(inv[key], dtype=np.int64)
        return ZeroDivisor(down)
    ops = _Ops(b.ctx, b.mult, b.identity, _universal_exponent(b.ctx, b.dim))
    basis = kops.eye(b.dim)
    res = _split_with_automorphism(ops, basis, list(range(b.dim)), b.identity, sigma, r)
    return res


# ---------------------------------------------------------------------------
# the refinement pipeline

@dataclass
class Ideal:
    uid: int
    level: int
    idem: np.ndarray
    basis: np.ndarray
    pivots: tuple

    @property
    def dim(self):
        return self.basis.shape[0]


@dataclass
class Refined:
    system: "IdealSystem"


@dataclass
class Factor:
    g: Poly
    log: list | None = None


@dataclass
class NoChange:
    pass


@dataclass
class StuckScheme:
    system: "IdealSystem"
    certificate: dict
    log: list | None = None


class IdealSystem:
    """Orthogonal ideal decompositions of every essential level, plus the
    ordered refinement log.  Refinement returns new systems sharing the
    immutable per-level machinery."""

    def __init__(self, f: Poly, m: int, dim_cap: int = DIM_CAP, _clone=None):
        if _clone is not None:
            other = _clone
            self.f = other.f
            self.ctx = other.ctx
            self.m = other.m
            self.algebras = other.algebras
            self.levels = {s: list(other.levels[s]) for s in other.levels}
            self.log = list(other.log)
            self.shared = other.shared
            return
        if not f.is_monic():
            f = f.monic()
        if not is_split_squarefree(f):
            raise NotSplit("pipeline input must be squarefree and fully split")
        if f.ctx.p < f.degree:
            # fibre counts are field scalars; p >= n keeps them faithful
            raise InvalidSystem("characteristic must be at least deg f for exact fibre counts")
        self.f = f
        self.ctx = f.ctx
        self.m = m
        self.algebras = build_levels(f, m, dim_cap)
        self.levels = {}
        self.log = []
        self.shared = {"uid": itertools.count(), "checks": {}, "embeds": {}, "perms": {}, "traces": {}, "proj": {}}
        for s in range(1, m + 1):
            alg = self.algebras[s - 1]
            kops = alg.ops
            basis = kops.eye(alg.dim)
            ideal = Ideal(next(self.shared["uid"]), s, alg.identity(), basis, tuple(range(alg.dim)))
            self.levels[s] = [ideal]

    def clone(self):
        return IdealSystem(self.f, self.m, _clone=self)

    def algebra(self, s: int) -> LevelAlgebra:
        return self.algebras[s - 1]

    # -- cached element machinery -------------------------------------------

    def _embed_idem(self, s: int, ideal: Ideal, j: int):
        """iota_j of a level s-1 idempotent into level s."""
        key = (ideal.uid, s, j)
        cache = self.shared["embeds"]
        if key not in cache:
            cache[key] = self.algebra(s).embed_from_below(self.algebra(s - 1), j, ideal.idem)
        return cache[key]

    def _perm_idem(self, ideal: Ideal, tau: tuple):
        key = (ideal.uid, tau)
        cache = self.shared["perms"]
        if key not in cache:
            cache[key] = self.algebra(ideal.level).apply_perm(tau, ideal.idem)
        return cache[key]

    def _trace_idem(self, s: int, ideal: Ideal, j: int):
        """Fibre-count function of a level-s idempotent along coordinate j."""
        key = (ideal.uid, j)
        cache = self.shared["traces"]
        if key not in cache:
            alg = self.algebra(s)
            below = self.algebra(s - 1)
            vec = ideal.idem
            if j != s:
                vec = alg.apply_perm(alg.move_axis_last(j), vec)
            cache[key] = alg.rel_trace_last(below, vec)
        return cache[key]

    def _split(self, s: int, idx: int, u: np.ndarray, rule: str, detail: dict):
        """New system with levels[s][idx] split along idempotent u."""
        alg = self.algebra(s)
        kops = alg.ops
        ideal = self.levels[s][idx]
        rest = (ideal.idem - u) % kops.p
        rows_u = alg.mult_batch(ideal.basis, u)
        rows_r = alg.mult_batch(ideal.basis, rest)
        b_u, p_u = kops.rref(rows_u)
        b_r, p_r = kops.rref(rows_r)
        if b_u.shape[0] + b_r.shape[0] != ideal.dim or not b_u.shape[0] or not b_r.shape[0]:
            raise InvalidSystem("split parts must partition the ideal")
        new = self.clone()
        uid = self.shared["uid"]
        part1 = Ideal(next(uid), s, u, b_u, tuple(p_u))
        part2 = Ideal(next(uid), s, rest, b_r, tuple(p_r))
        new.levels[s][idx: idx + 1] = [part1, part2]
        entry = {"rule": rule, "level": s, "ideal": idx, "dims": [part1.dim, part2.dim]}
        entry.update(detail)
        new.log.append(entry)
        return Refined(new)

    # -- factor extraction --------------------------------------------------

    def _ideal_min_poly(self, ideal: Ideal) -> Poly:
        """Monic minimal polynomial of x acting on a level-1 ideal."""
        alg = self.algebra(1)
        kops = alg.ops
        x = alg.zero()
        x[min(1, alg.dim - 1), 0] = 1
        rows = [ideal.idem]
        cur = ideal.idem
        while True:
            cur = alg.mult(cur, x)
            stack = np.stack(rows + [cur])
            if kops.rank(stack) < stack.shape[0]:
                break
            rows.append(cur)
        A = np.stack(rows)
        coeffs = kops.solve_right(np.swapaxes(A, 0, 1), cur)
        assert coeffs is not None
        deg = len(rows)
        poly_coeffs = [-self.ctx.elem([int(v) for v in coeffs[i]]) for i in range(deg)]
        poly_coeffs.append(self.ctx.one())
        return Poly(self.ctx, poly_coeffs)


def _factor_key(g: Poly):
    return (g.degree, tuple((-c).index for c in g.coeffs[:-1]))


def _rule_r4(sys: IdealSystem):
    if len(sys.levels[1]) < 2:
        return NoChange()
    candidates = [sys._ideal_min_poly(i) for i in sys.levels[1]]
    for g in candidates:
        if not (sys.f % g).is_zero():
            raise InvalidSystem("level-1 minimal polynomial must divide f")
    g = min(candidates, key=_factor_key)
    new = sys.clone()
    new.log.append({"rule": "R4", "level": 1, "factor": g.int_coeffs()})
    return Factor(g, new.log)


def _rule_r1(sys: IdealSystem):
    checks = sys.shared["checks"]
    for s in range(2, sys.m + 1):
        alg = sys.algebra(s)
        for i, below in enumerate(sys.levels[s - 1]):
            for j in range(1, s + 1):
                emb = sys._embed_idem(s, below, j)
                for ip, here in enumerate(sys.levels[s]):
                    key = ("R1", below.uid, here.uid, j)
                    if key in checks:
                        continue
                    u = alg.mult(emb, here.idem)
                    if not u.any() or np.array_equal(u, here.idem):
                        checks[key] = True
                        continue
                    return sys._split(s, ip, u, "R1", {"below": i, "j": j})
    return NoChange()


def _rule_r2(sys: IdealSystem):
    checks = sys.shared["checks"]
    n = sys.f.degree
    for s in range(2, sys.m + 1):
        below_alg = sys.algebra(s - 1)
        for ip, here in enumerate(sys.levels[s]):
            for j in range(1, s + 1):
                tr = sys._trace_idem(s, here, j)
                for i, below in enumerate(sys.levels[s - 1]):
                    key = ("R2", here.uid, below.uid, j)
                    if key in checks:
                        continue
                    t_elem = below_alg.mult(tr, below.idem)
                    split_u = None
                    for c in range(min(n, sys.ctx.p - 1) + 1):
                        diff = (t_elem - c * below.idem) % below_alg.ops.p
                        if not diff.any():
                            break  # constant fibre count c
                        e_d = below_alg.idempotent_of(diff)
                        if np.array_equal(e_d, below.idem):
                            continue  # c is not a value of the fibre count
                        split_u = (below.idem - e_d) % below_alg.ops.p
                        break
                    if split_u is None:
                        checks[key] = True
                        continue
                    return sys._split(s - 1, i, split_u, "R2", {"here": ip, "j": j})
    return NoChange()


def _rule_r3(sys: IdealSystem):
    checks = sys.shared["checks"]
    for s in range(2, sys.m + 1):
        alg = sys.algebra(s)
        idems = [h.idem for h in sys.levels[s]]
        for tau in itertools.permutations(range(s)):
            if tau == tuple(range(s)):
                continue
            for i, here in enumerate(sys.levels[s]):
                key = ("R3", here.uid, tau, tuple(h.uid for h in sys.levels[s]))
                if key in checks:
                    continue
                img = sys._perm_idem(here, tau)
                if any(np.array_equal(img, e) for e in idems):
                    checks[key] = True
                    continue
                for ip, other in enumerate(sys.levels[s]):
                    u = alg.mult(img, other.idem)
                    if u.any() and not np.array_equal(u, other.idem):
                        return sys._split(s, ip, u, "R3", {"tau": list(tau), "source": i})
                raise InvalidSystem("tau-image must overlap some ideal properly")
    return NoChange()


def _perm_order(tau: tuple) -> int:
    order = 1
    seen = [False] * len(tau)
    for start in range(len(tau)):
        if seen[start]:
            continue
        length = 0
        x = start
        while not seen[x]:
            seen[x] = True
            x = tau[x]
            length += 1
        order = math.lcm(order, length)
    return order


def _perm_power(tau: tuple, e: int) -> tuple:
    out = tuple(range(len(tau)))
    for _ in range(e):
        out = tuple(tau[i] for i in out)
    return out


def _level_ops(sys: IdealSystem, s: int, e_B) -> _Ops:
    """Element ops local to one ideal: the unit is the ideal's idempotent,
    so powers and comparisons are componentwise on its support only."""
    alg = sys.algebra(s)
    return _Ops(sys.ctx, alg.mult, e_B, sys.ctx.order - 1)


def _sigma_matrix_from_perm(sys: IdealSystem, ideal: Ideal, tau: tuple):
    alg = sys.algebra(ideal.level)
    imgs = np.stack([alg.apply_perm(tau, row) for row in ideal.basis])
    return imgs[:, ideal.pivots, :]


def _split_ideal_with_zero_divisor(sys, s, idx, z, rule, detail):
    alg = sys.algebra(s)
    u = alg.idempotent_of(z)
    ideal = sys.levels[s][idx]
    if not u.any() or np.array_equal(u, ideal.idem):
        raise InvalidSystem("zero divisor must cut the ideal properly")
    return sys._split(s, idx, u, rule, detail)


def _split_level_ideal(sys: IdealSystem, s: int, idx: int, sigma_mat, r: int, rule: str, detail: dict):
    """Run the splitting engine on an ideal, extending scalars if needed."""
    ideal = sys.levels[s][idx]
    ops = _level_ops(sys, s, ideal.idem)
    try:
        res = _split_with_automorphism(ops, ideal.basis, list(ideal.pivots), ideal.idem, sigma_mat, r)
    except MissingRootOfUnity:
        res = _split_in_extension(sys, s, idx, sigma_mat, r)
    if isinstance(res, NoSplit):
        raise InvalidSystem("split algebras always admit a split under a nontrivial automorphism")
    return _split_ideal_with_zero_divisor(sys, s, idx, res.vec, rule, detail)


def _split_in_extension(sys: IdealSystem, s: int, idx: int, sigma_mat, r: int):
    """Adjoin the r-th roots of unity, split there, descend the idempotent."""
    from .gf import embed_field

    ctx = sys.ctx
    ord_t = 1
    acc = ctx.order % r
    while acc != 1:
        acc = acc * ctx.order % r
        ord_t += 1
    K = field_ctx(ctx.p, ctx.d * ord_t)
    fK = lift_poly(sys.f, K)
    algK = build_levels(fK, s, dim_cap=DIM_CAP)[s - 1]
    emb = embed_field(ctx, K)
    # embedding on digit vectors is F_p-linear: build the (d, dK) matrix
    E = np.zeros((ctx.d, K.d), dtype=np.int64)
    for t in range(ctx.d):
        basis_el = [0] * ctx.d
        basis_el[t] = 1
        E[t] = np.array(emb(ctx.elem(basis_el)).coeffs, dtype=np.int64)

    def lift_vec(v):
        return (v.astype(np.int64) @ E) % ctx.p

    ideal = sys.levels[s][idx]
    basisK = lift_vec(ideal.basis)
    idemK = lift_vec(ideal.idem)
    sigK = lift_vec(sigma_mat)
    opsK = _Ops(K, algK.mult, algK.identity(), K.order - 1)
    res = _split_with_automorphism(opsK, basisK, list(ideal.pivots), idemK, sigK, r)
    if isinstance(res, NoSplit):
        return res
    eK = opsK.idem(res.vec)
    # e has 0/1 component values, so its digit vectors lie in the image of E
    pops = KOps(field_ctx(ctx.p, 1))
    sol = pops.solve_right_many(E.T[..., None], eK.reshape(-1, K.d).T[..., None])
    if sol is None:
        raise InvalidSystem("extension idempotent failed to descend")
    down = sol[:, :, 0].T.reshape(eK.shape[:-1] + (ctx.d,)) % ctx.p
    if not np.array_equal((down @ E) % ctx.p, eK):
        raise InvalidSystem("descended idempotent does not lift back")
    return ZeroDivisor(down)


def _rule_r5(sys: IdealSystem):
    checks = sys.shared["checks"]
    for s in range(2, sys.m + 1):
        for i, here in enumerate(sys.levels[s]):
            for tau in itertools.permutations(range(s)):
                if tau == tuple(range(s)):
                    continue
                key = ("R5", here.uid, tau)
                if key in checks:
                    continue
                img = sys._perm_idem(here, tau)
                if not np.array_equal(img, here.idem):
                    checks[key] = True
                    continue
                order = _perm_order(tau)
                r = min(p for p in range(2, order + 1) if order % p == 0 and is_prime(p))
                sig_perm = _perm_power(tau, order // r)
                sigma = _sigma_matrix_from_perm(sys, here, sig_perm)
                return _split_level_ideal(sys, s, i, sigma, r, "R5", {"tau": list(tau), "r": r})
    return NoChange()


_RULES = {"R4": _rule_r4, "R1": _rule_r1, "R2": _rule_r2, "R3": _rule_r3, "R5": _rule_r5}
RULE_ORDER = ("R4", "R1", "R2", "R3", "R5")


def refine_step(sys: IdealSystem, rule: str):
    """Apply one refinement rule; first effective action wins.

    Returns Refined(new system), Factor(g), or NoChange().
    """
    if rule not in _RULES:
        raise ValueError(f"unknown rule {rule!r}")
    return _RULES[rule](sys)


# -- matchings on the induced scheme (no root access) -----------------------


def _composite_embed(sys: IdealSystem, s: int, dropped: tuple, vec):
    """Composite iota re-inserting the `dropped` (1-based) coordinates.

    Inserting in ascending order keeps every slot index valid: when slot
    i_t is inserted, all final positions below i_t are already present.
    """
    lvl = s - len(dropped)
    out = vec
    for drop in sorted(dropped):
        lvl += 1
        out = sys.algebra(lvl).embed_from_below(sys.algebra(lvl - 1), drop, out)
    return out


def _project_color(sys: IdealSystem, s: int, idx: int, dropped: tuple):
    """Index of the unique lower ideal whose cylinder contains this one."""
    here = sys.levels[s][idx]
    below_uids = tuple(i.uid for i in sys.levels[s - len(dropped)])
    key = ("proj", here.uid, dropped, below_uids)
    cache = sys.shared["proj"]
    if key in cache:
        return cache[key]
    alg = sys.algebra(s)
    target = None
    for bi, below in enumerate(sys.levels[s - len(dropped)]):
        cyl = _composite_embed(sys, s, dropped, below.idem)
        u = alg.mult(cyl, here.idem)
        if np.array_equal(u, here.idem):
            target = bi
            break
    cache[key] = target
    return target


def _detect_matchings(sys: IdealSystem):
    out = []
    for s in range(2, sys.m + 1):
        for l, here in enumerate(sys.levels[s]):
            for k in range(1, s):
                drops = list(itertools.combinations(range(1, s + 1), k))
                proj = {}
                for dcom in drops:
                    proj[dcom] = _project_color(sys, s, l, dcom)
                for d1, d2 in itertools.combinations(drops, 2):
                    l1, l2 = proj[d1], proj[d2]
                    if l1 is None or l1 != l2:
                        continue
                    if sys.levels[s - k][l1].dim == here.dim:
                        out.append(_mscheme.Matching(s, l, d1, d2))
    return out


def matching_refinement(sys: IdealSystem, m: _mscheme.Matching):
    """Use a matching's pair of embeddings to build an ideal automorphism
    and split with it; a level-1 split yields a factor."""
    s = m.level
    k = len(m.drop_i)
    if m.drop_i == m.drop_j or len(m.drop_i) != len(m.drop_j):
        raise NotAMatching("index tuples must differ and have equal size")
    if not (0 <= m.color < len(sys.levels[s])):
        raise NotAMatching("no such ideal")
    here = sys.levels[s][m.color]
    l1 = _project_color(sys, s, m.color, m.drop_i)
    l2 = _project_color(sys, s, m.color, m.drop_j)
    if l1 is None or l1 != l2:
        raise NotAMatching("the two projections select different ideals")
    below = sys.levels[s - k][l1]
    if below.dim != here.dim:
        raise NotAMatching("projection is not size-preserving")
    alg = sys.algebra(s)
    kops = alg.ops
    X1 = np.stack([alg.mult(_composite_embed(sys, s, m.drop_i, row), here.idem) for row in below.basis])
    X2 = np.stack([alg.mult(_composite_embed(sys, s, m.drop_j, row), here.idem) for row in below.basis])
    # both embeddings must be isomorphisms onto the matched ideal
    psi = kops.solve_right_many(np.swapaxes(X1, 0, 1), np.swapaxes(X2, 0, 1))
    if psi is None or kops.rank(X1) != below.dim or kops.rank(X2) != below.dim:
        raise NotAMatching("embeddings are not isomorphisms onto the ideal")
    psi = np.swapaxes(psi, 0, 1)  # rows: psi(basis_i) in below-coordinates
    if kops.mat_eq(psi, kops.eye(below.dim)):
        raise TrivialAutomorphism("matching induced the identity map")
    order = 1
    acc = psi
    while not kops.mat_eq(acc, kops.eye(below.dim)):
        acc = kops.matmul(acc, psi)
        order += 1
        if order > ORDER_CAP:
            raise InvalidSystem("automorphism order exceeds cap")
    r = min(q for q in range(2, order + 1) if order % q == 0 and is_prime(q))
    acc = kops.eye(below.dim)
    for _ in range(order // r):
        acc = kops.matmul(acc, psi)
    res = _split_level_ideal(
        sys, s - k, l1, acc, r, "matching",
        {"matching_level": s, "matching_ideal": m.color, "drop_i": list(m.drop_i), "drop_j": list(m.drop_j), "r": r},
    )
    new_sys = res.system
    if s - k == 1:
        return _rule_r4(new_sys)
    return res


# -- drivers ------------------------------------------------------------------


def _certificate(sys: IdealSystem, stable: bool, matchings: list) -> dict:
    cert = {"stable": stable, "no_matching": not matchings}
    cert["homogeneous"] = len(sys.levels[1]) == 1
    ortho = True
    dims_ok = True
    antisym = True
    dims = {}
    for s in range(1, sys.m + 1):
        alg = sys.algebra(s)
        total = alg.zero()
        for ideal in sys.levels[s]:
            e2 = alg.mult(ideal.idem, ideal.idem)
            if not np.array_equal(e2, ideal.idem):
                ortho = False
            total = (total + ideal.idem) % alg.ops.p
        if not np.array_equal(total, alg.identity()):
            ortho = False
        level_dims = [i.dim for i in sys.levels[s]]
        dims[s] = level_dims
        if sum(level_dims) != alg.dim:
            dims_ok = False
        if s >= 2:
            for ideal in sys.levels[s]:
                for tau in itertools.permutations(range(s)):
                    if tau == tuple(range(s)):
                        continue
                    if np.array_equal(sys._perm_idem(ideal, tau), ideal.idem):
                        antisym = False
    cert["orthogonal_partition"] = ortho
    cert["dimension_sums"] = dims
    cert["dimension_sums_ok"] = dims_ok
    cert["antisymmetric"] = antisym
    cert["valid"] = all([stable, not matchings, cert["homogeneous"], ortho, dims_ok, antisym])
    return cert


def validate_certificate(stuck: StuckScheme) -> bool:
    """Recheck a stuck certificate from scratch: stability, partition,
    dimension sums, absence of matchings."""
    sys = stuck.system
    for rule in RULE_ORDER:
        if not isinstance(refine_step(sys, rule), NoChange):
            return False
    matchings = _detect_matchings(sys)
    cert = _certificate(sys, True, matchings)
    return cert["valid"]


def iks_factor(f: Poly, m: int, dim_cap: int = DIM_CAP, stage_hook=None):
    """Factor-or-stuck driver with iterative deepening up to m.

    Returns Factor(g) or StuckScheme(sys); both carry the refinement log.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    g = f.monic()
    if g.degree < 2:
        raise ValueError("degree must be >= 2 to have a nontrivial factor")
    if not is_split_squarefree(g):
        raise NotSplit("input must be monic, squarefree, and fully split")
    base = g.ctx
    full_log = []
    last_sys = None
    for m_try in range(2, min(m, g.degree) + 1):
        k = extension_for_levels(base, m_try)
        fk = lift_poly(g, k)
        sys = IdealSystem(fk, m_try, dim_cap)
        attempt = {"m": m_try, "field": {"p": k.p, "d": k.d}}
        while True:
            acted = False
            for rule in RULE_ORDER:
                res = refine_step(sys, rule)
                if isinstance(res, Factor):
                    attempt["events"] = res.log
                    attempt["outcome"] = "factor"
                    full_log.append(attempt)
                    if stage_hook:
                        stage_hook(sys)
                    gg = res.g if res.g.ctx == base else _project_factor(res.g, base)
                    return Factor(gg, full_log)
                if isinstance(res, Refined):
                    sys = res.system
                    acted = True
                    if stage_hook:
                        stage_hook(sys)
                    break
            if acted:
                continue
            matchings = _detect_matchings(sys)
            if not matchings:
                attempt["events"] = sys.log
                attempt["outcome"] = "stuck"
                full_log.append(attempt)
                last_sys = sys
                break
            res = matching_refinement(sys, matchings[0])
            if isinstance(res, Factor):
                attempt["events"] = res.log
                attempt["outcome"] = "factor"
                full_log.append(attempt)
                gg = res.g if res.g.ctx == base else _project_factor(res.g, base)
                return Factor(gg, full_log)
            sys = res.system
            if stage_hook:
                stage_hook(sys)
    cert = _certificate(last_sys, True, [])
    return StuckScheme(last_sys, cert, full_log)


def _project_factor(g: Poly, base: FieldCtx) -> Poly:
    """Map a factor with base-field values back to the base context."""
    from .gf import embed_field

    emb = embed_field(base, g.ctx)
    table = {}
    for a in base.elements():
        table[emb(a).coeffs] = a
    out = []
    for c in g.coeffs:
        if c.coeffs not in table:
            raise InvalidSystem("factor does not lie over the base field")
        out.append(table[c.coeffs])
    return Poly(base, out)


def log_to_json(log) -> str:
    return json.dumps(log, sort_keys=True, separators=(",", ":"))


def prime_degree_factor(f: Poly, r: int, ell: int, dim_cap: int = DIM_CAP):
    """Prime-degree driver: with a large r-smooth divisor of n-1 the stuck
    outcome is impossible, so this always returns a factor."""
    n = f.degree
    if not is_prime(n):
        raise NotPrimeDegree(f"degree {n} is not prime")
    if ell < 1:
        raise ValueError("ell must be >= 1")
    s_val = 1
    rem = n - 1
    for q in range(2, r + 1):
        while rem % q == 0:
            s_val *= q
            rem //= q
    if ell * (s_val - 1) ** 2 < n:
        raise SmoothDivisorTooSmall(f"largest {r}-smooth divisor {s_val} < sqrt(n/ell)+1")
    ell_p = 2 * ell + 1
    m = min(n, max(r + 1, math.ceil(2 * math.log2(ell_p)) + 3))
    try:
        res = iks_factor(f, m, dim_cap=dim_cap)
    except DimCapExceeded as exc:
        raise DimCapExceeded(f"required m={m}: {exc}") from exc
    if isinstance(res, StuckScheme):
        raise TheoremContradiction("prime-degree refinement must never get stuck")
    return res


class NotAPartition(AssertionError):
    """Ideal supports failed to partition the tuples (test-fatal)."""


def supports(sys: IdealSystem, roots) -> _mscheme.MCollection:
    """Transparent-model supports: evaluate every ideal at every essential
    tuple and return the induced collection (test instrumentation)."""
    ctx = sys.ctx
    n = sys.f.degree
    roots = [ctx.elem(r) for r in roots]
    check = Poly(ctx, [1])
    for r in roots:
        check = check * Poly(ctx, [-r, ctx.one()])
    if check != sys.f:
        raise ValueError("roots must be exactly the roots of f")
    levels_map = {}
    for s in range(1, sys.m + 1):
        alg = sys.algebra(s)
        tuples = _mscheme.tuple_table(n, s)
        count = tuples.shape[0]
        colors = np.full(count, -1, dtype=np.int32)
        vals_cache = _monomial_values(alg, roots, tuples)
        for ci, ideal in enumerate(sys.levels[s]):
            v = _eval_vec(alg, vals_cache, ideal.idem)
            nz = v.any(axis=1)
            if (colors[nz] != -1).any():
                raise NotAPartition("ideal supports overlap")
            colors[nz] = ci
        if (colors == -1).any():
            raise NotAPartition("ideal supports do not cover the tuples")
        levels_map[s] = colors
    return _mscheme.MCollection(n, levels_map)


def _monomial_values(alg: LevelAlgebra, roots, tuples):
    """(count, dim, d) values of every canonical monomial at every tuple."""
    ops = alg.ops
    n = len(roots)
    maxe = max(alg.extents)
    pows = np.zeros((n, maxe, ops.d), dtype=np.int64)
    for vi, rv in enumerate(roots):
        acc = alg.ctx.one()
        for e in range(maxe):
            pows[vi, e] = np.array(acc.coeffs, dtype=np.int64)
            acc = acc * rv
    count = tuples.shape[0]
    vals = np.zeros((count, 1, ops.d), dtype=np.int64)
    vals[:, 0, 0] = 1
    for ax in range(alg.s):
        ext = alg.extents[ax]
        axis_vals = pows[tuples[:, ax], :ext]  # (count, ext, d)
        vals = ops.mul(vals[:, :, None, :], axis_vals[:, None, :, :]).reshape(count, -1, ops.d)
    return vals


def _eval_vec(alg: LevelAlgebra, vals, vec):
    ops = alg.ops
    prods = ops.mul(vals, vec[None, :, :])
    return prods.sum(axis=1) % ops.p
