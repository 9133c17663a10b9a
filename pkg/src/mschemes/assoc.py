"""Association schemes on explicit point sets.

A scheme is stored as a dense color matrix on X x X with color 0 reserved
for the identity relation.  Everything is exact integer arithmetic; all
searches scan in ascending index order, so outputs are deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .gf import NotPrime, is_prime


class NotAScheme(ValueError):
    pass


class EDoesNotDivide(ValueError):
    pass


class BadEll(ValueError):
    pass


class TheoremContradiction(AssertionError):
    """Hypotheses held but the guaranteed witness is missing; must never fire."""


class TooSmall(ValueError):
    pass


class NotHomogeneous(ValueError):
    pass


class Not3Scheme(ValueError):
    pass


@dataclass(frozen=True)
class Violation:
    axiom: int
    f: int | None
    g: int | None
    h: int | None
    pair1: tuple
    pair2: tuple
    message: str


@dataclass(frozen=True)
class FailedIdentity:
    identity: int  # 1..4 from the identity suite, 5 = quadrilateral double count
    witness: tuple


@dataclass(frozen=True)
class Witness:
    u: int
    v: int
    w: int
    w_prime: int
    c1: int
    c2: int


@dataclass(frozen=True)
class BoundsProfile:
    k: int
    delta1: Fraction
    delta1p: Fraction
    delta2p: Fraction
    c: int
    ell: int

    def valid_for(self, tensor: "IntersectionTensor") -> bool:
        lo = self.delta1 * self.k
        hi = self.delta1p * self.k
        cap = self.delta2p * self.c
        for g in range(1, tensor.num_colors):
            if not (lo <= tensor.n_g[g] <= hi and tensor.c_g[g] <= cap):
                return False
        return 1 < self.ell < (self.delta1**2 / self.delta1p) * self.k

    def group_size_bound(self) -> Fraction:
        return 2 * (self.delta1p / self.delta1) ** 3 * self.delta2p * Fraction(self.c, self.ell - 1) + 2


@dataclass(frozen=True)
class SmallIntersectionResult:
    witness: Witness | None
    hypothesis_held: bool
    profile: BoundsProfile


class Scheme:
    """Color partition of X x X; color 0 must be the identity relation."""

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=np.int32)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("color matrix must be square")
        colors = np.unique(m)
        if colors[0] != 0 or colors[-1] != len(colors) - 1:
            raise ValueError("color ids must be dense 0..d")
        self.n = m.shape[0]
        self.num_colors = len(colors)
        m.setflags(write=False)
        self.matrix = m
        self._adjoint = None

    @property
    def adjoint(self):
        """g -> g* (transpose class map); requires transpose closure."""
        if self._adjoint is None:
            adj = np.empty(self.num_colors, dtype=np.int32)
            t = self.matrix.T
            for g in range(self.num_colors):
                vals = np.unique(t[self.matrix == g])
                if len(vals) != 1:
                    raise NotAScheme(f"transpose of color {g} is not a single color")
                adj[g] = vals[0]
            self._adjoint = adj
        return self._adjoint

    def __eq__(self, other):
        return (
            isinstance(other, Scheme)
            and self.n == other.n
            and np.array_equal(self.matrix, other.matrix)
        )

    def __repr__(self):
        return f"Scheme(n={self.n}, colors={self.num_colors})"


def verify_scheme(s: Scheme):
    """None if the three axioms hold, else a Violation witness."""
    m = s.matrix
    n, G = s.n, s.num_colors
    # axiom 1: color 0 is exactly the diagonal
    diag = np.diag(m)
    if (diag != 0).any():
        x = int(np.nonzero(diag != 0)[0][0])
        return Violation(1, None, None, None, (x, x), (x, x), "diagonal pair not in color 0")
    off = m.copy()
    np.fill_diagonal(off, -1)
    zero_off = np.argwhere(off == 0)
    if len(zero_off):
        x, y = map(int, zero_off[0])
        return Violation(1, None, None, None, (x, y), (x, y), "off-diagonal pair in color 0")
    # axiom 2: transpose closure
    t = m.T
    for g in range(G):
        mask = m == g
        vals = np.unique(t[mask])
        if len(vals) != 1:
            pos = np.argwhere(mask)
            seen = {}
            for x, y in pos:
                v = int(t[x, y])
                if v in seen:
                    continue
                seen[v] = (int(x), int(y))
                if len(seen) == 2:
                    (p1, p2) = list(seen.values())
                    return Violation(2, g, None, None, p1, p2, "transpose class is mixed")
    # axiom 3: pair-independent intersection numbers
    codes = m[:, None, :].astype(np.int64) * G + m.T[None, :, :]
    sorted_codes = np.sort(codes.reshape(n * n, n), axis=1)
    flat_colors = m.reshape(n * n)
    for h in range(G):
        idx = np.nonzero(flat_colors == h)[0]
        rows = sorted_codes[idx]
        same = (rows == rows[0]).all(axis=1)
        if not same.all():
            bad = idx[int(np.nonzero(~same)[0][0])]
            rep = idx[0]
            h1 = np.bincount(sorted_codes[rep], minlength=G * G)
            h2 = np.bincount(sorted_codes[bad], minlength=G * G)
            code = int(np.nonzero(h1 != h2)[0][0])
            f, g = code // G, code % G
            pair1 = (int(rep // n), int(rep % n))
            pair2 = (int(bad // n), int(bad % n))
            return Violation(3, int(f), int(g), h, pair1, pair2, "intersection count differs")
    return None


class IntersectionTensor:
    """Dense c[h][f][g] plus per-color valency and indistinguishing number."""

    def __init__(self, c, adjoint):
        self.c = c
        self.adjoint = adjoint
        self.num_colors = c.shape[0]
        self.n_g = c[0, np.arange(self.num_colors), adjoint].copy()
        # c(g) = sum_v c^g_{v v*}
        self.c_g = c[:, np.arange(self.num_colors), adjoint].sum(axis=1)

    def valency(self, g):
        return int(self.n_g[g])


def intersection_tensor(s: Scheme) -> IntersectionTensor:
    bad = verify_scheme(s)
    if bad is not None:
        raise NotAScheme(f"axiom {bad.axiom} fails: {bad.message}")
    m = s.matrix
    n, G = s.n, s.num_colors
    c = np.zeros((G, G, G), dtype=np.int64)
    reps = [None] * G
    for x in range(n):
        for y in range(n):
            h = m[x, y]
            if reps[h] is None:
                reps[h] = (x, y)
        if all(r is not None for r in reps):
            break
    else:
        pass
    for h in range(G):
        a, b = reps[h]
        codes = m[a, :].astype(np.int64) * G + m[:, b]
        c[h] = np.bincount(codes, minlength=G * G).reshape(G, G)
    return IntersectionTensor(c, s.adjoint.copy())


def check_tensor_identities(t: IntersectionTensor):
    """None if identities (1)-(4) and the quadrilateral double count hold."""
    c, adj, G = t.c, t.adjoint, t.num_colors
    n_g = t.n_g
    # (1) c^f_{de} = c^{f*}_{e*d*}
    rhs = c[np.ix_(adj, adj, adj)].transpose(0, 2, 1)
    if not np.array_equal(c, rhs):
        w = tuple(int(v) for v in np.argwhere(c != rhs)[0])
        return FailedIdentity(1, w)
    # (2) c^e_{df} * n_e = c^d_{ef*} * n_d
    lhs = c.transpose(1, 0, 2) * n_g[None, :, None]
    rhs = c[:, :, adj] * n_g[:, None, None]
    if not np.array_equal(lhs, rhs):
        w = tuple(int(v) for v in np.argwhere(lhs != rhs)[0])
        return FailedIdentity(2, w)
    # (3) sum_g c^f_{ge} = n_{e*}
    lhs = c.sum(axis=1)
    rhs = np.broadcast_to(n_g[adj][None, :], (G, G))
    if not np.array_equal(lhs, rhs):
        w = tuple(int(v) for v in np.argwhere(lhs != rhs)[0])
        return FailedIdentity(3, w)
    # (4) sum_g c^g_{ef} * n_g = n_e * n_f
    lhs = np.einsum("gef,g->ef", c, n_g)
    rhs = np.outer(n_g, n_g)
    if not np.array_equal(lhs, rhs):
        w = tuple(int(v) for v in np.argwhere(lhs != rhs)[0])
        return FailedIdentity(4, w)
    # (5) |S_v| two ways, for u != 1, v not in {1, u}
    m1 = np.einsum("ubu->ub", c)  # c^u_{bu}
    m2 = c[:, np.arange(G), adj]  # c^b_{v v*} indexed [b, v]
    lhs = m1[:, 1:] @ m2[1:, :]
    t1 = c[:, adj, :]  # t1[w, u, v] = c^w_{u* v}
    c2 = c[:, :, adj]  # c2[u, v, w] = c^u_{v w*}
    rhs = np.einsum("uvw,wuv->uv", c2, np.where(t1 > 0, t1 - 1, 0))
    for u in range(1, G):
        for v in range(1, G):
            if v == u:
                continue
            if lhs[u, v] != rhs[u, v]:
                return FailedIdentity(5, (u, v, int(lhs[u, v]), int(rhs[u, v])))
    return None


def verify_identities(s: Scheme):
    return check_tensor_identities(intersection_tensor(s))


def least_primitive_root(p: int) -> int:
    if p == 2:
        return 1
    phi = p - 1
    primes = []
    t, q = phi, 2
    while q * q <= t:
        if t % q == 0:
            primes.append(q)
            while t % q == 0:
                t //= q
        q += 1
    if t > 1:
        primes.append(t)
    for g in range(2, p):
        if all(pow(g, phi // q, p) != 1 for q in primes):
            return g
    raise RuntimeError("unreachable: primitive root exists")


def cyclotomic_scheme(p: int, e: int) -> Scheme:
    """Cyclotomic scheme in (p, e): difference cosets of the index-e subgroup."""
    if not is_prime(p):
        raise NotPrime(f"{p} is not prime")
    if e < 1 or (p - 1) % e != 0:
        raise EDoesNotDivide(f"{e} does not divide {p - 1}")
    alpha = least_primitive_root(p)
    label = np.zeros(p, dtype=np.int32)
    k = (p - 1) // e
    for i in range(1, e + 1):
        base = pow(alpha, i, p)
        step = pow(alpha, e, p)
        x = base
        for _ in range(k):
            label[x] = i
            x = x * step % p
    diff = (np.arange(p)[:, None] - np.arange(p)[None, :]) % p
    s = Scheme(label[diff])
    t = intersection_tensor(s)
    if len(set(int(v) for v in t.n_g[1:])) != 1 or int(t.n_g[1]) != k:
        raise AssertionError("cyclotomic valencies must all equal (p-1)/e")
    return s


def complete_scheme(n: int) -> Scheme:
    m = np.ones((n, n), dtype=np.int32)
    np.fill_diagonal(m, 0)
    if n == 1:
        m = np.zeros((1, 1), dtype=np.int32)
    return Scheme(m)


def auto_profile(t: IntersectionTensor, ell: int) -> BoundsProfile:
    """Profile with k = min valency (tightest delta1) and c = max c(g)."""
    if t.num_colors == 1:
        return BoundsProfile(1, Fraction(1), Fraction(1), Fraction(1), 0, ell)
    k = int(t.n_g[1:].min())
    kmax = int(t.n_g[1:].max())
    c = int(t.c_g[1:].max())
    return BoundsProfile(k, Fraction(1), Fraction(kmax, k), Fraction(1), c, ell)


def small_intersection_search(s: Scheme, ell: int, profile: BoundsProfile | None = None) -> SmallIntersectionResult:
    """Lexicographically-first nontrivial (u, v, w, w') with
    0 < c^w_{u* v} <= c^{w'}_{u* v} < ell, plus the hypothesis verdict."""
    if ell < 2:
        raise BadEll("ell must be >= 2")
    t = intersection_tensor(s)
    G = t.num_colors
    if profile is None:
        profile = auto_profile(t, ell)
    hypothesis = profile.valid_for(t) and Fraction(G) >= profile.group_size_bound()
    adj = t.adjoint
    witness = None
    for u in range(1, G):
        if witness:
            break
        for v in range(1, G):
            if v == u:
                continue
            vec = t.c[:, adj[u], v]
            found = None
            for w in range(1, G):
                if not (0 < vec[w] < ell):
                    continue
                for wp in range(1, G):
                    if wp == w or not (0 < vec[wp] < ell):
                        continue
                    if vec[w] <= vec[wp]:
                        found = Witness(u, v, w, wp, int(vec[w]), int(vec[wp]))
                        break
                if found:
                    break
            if found:
                witness = found
                break
    if hypothesis and witness is None:
        raise TheoremContradiction(
            f"|G|={G} meets the bound {profile.group_size_bound()} but no witness exists"
        )
    return SmallIntersectionResult(witness, hypothesis, profile)


def scheme_to_3scheme(s: Scheme):
    """3-scheme with P_2 = nontrivial colors and P_3 keyed by pair-color triples."""
    from . import mscheme

    if s.n < 3:
        raise TooSmall("need at least 3 points")
    n, G = s.n, s.num_colors
    m = s.matrix
    lvl1 = np.zeros(n, dtype=np.int32)
    tuples2 = mscheme.tuple_table(n, 2)
    lvl2 = (m[tuples2[:, 0], tuples2[:, 1]] - 1).astype(np.int32)
    tuples3 = mscheme.tuple_table(n, 3)
    a, b, c3 = tuples3[:, 0], tuples3[:, 1], tuples3[:, 2]
    keys = (m[a, b].astype(np.int64) * G + m[a, c3]) * G + m[b, c3]
    lvl3 = _first_occurrence_ids(keys)
    return mscheme.MCollection(n, {1: lvl1, 2: lvl2, 3: lvl3})


def _first_occurrence_ids(keys):
    uniq, first, inv = np.unique(keys, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first, kind="stable"), kind="stable")
    return order[inv].astype(np.int32)


def level2_to_scheme(pi) -> Scheme:
    """Association scheme from levels 1-2 of a homogeneous 3-scheme."""
    from . import mscheme

    if pi.m < 3:
        raise Not3Scheme("need levels up to 3")
    report = mscheme.check_properties(pi)
    if not report.homogeneous:
        raise NotHomogeneous("level 1 must be a single color")
    if not report.is_scheme:
        raise Not3Scheme("P1-P3 must hold at every level")
    n = pi.n
    tuples2 = mscheme.tuple_table(n, 2)
    m = np.zeros((n, n), dtype=np.int32)
    m[tuples2[:, 0], tuples2[:, 1]] = pi.levels[2] + 1
    s = Scheme(m)
    if verify_scheme(s) is not None:
        raise Not3Scheme("level-2 colors do not form an association scheme")
    return s


@dataclass(frozen=True)
class DeviationReport:
    p: int
    e: int
    rows: tuple  # (r, s, t, count, deviation as Fraction)
    max_deviation: Fraction
    slack: int
    bound_ok: bool


def cyclotomic_deviation_report(p: int, e: int) -> DeviationReport:
    """Exact c^t_{rs} for nontrivial triples with deviation from (p+1)/e^2.

    The bound side uses slack e for the unspecified O(1): the report
    states whether max |c - (p+1)/e^2| <= sqrt(p) + e, decided exactly.
    """
    s = cyclotomic_scheme(p, e)
    t = intersection_tensor(s)
    target = Fraction(p + 1, e * e)
    rows = []
    max_dev = Fraction(0)
    for r in range(1, e + 1):
        for s2 in range(1, e + 1):
            for t3 in range(1, e + 1):
                cnt = int(t.c[t3, r, s2])
                dev = abs(Fraction(cnt) - target)
                rows.append((r, s2, t3, cnt, dev))
                if dev > max_dev:
                    max_dev = dev
    # exact test of max_dev <= sqrt(p) + e
    excess = max_dev - e
    bound_ok = excess <= 0 or excess * excess <= p
    return DeviationReport(p, e, tuple(rows), max_dev, e, bound_ok)


def scheme_to_json(s: Scheme) -> str:
    payload = {
        "n": s.n,
        "colors": [int(v) for v in s.matrix.reshape(-1)],
        "adjoint": [int(v) for v in s.adjoint],
    }
    return json.dumps(payload, sort_keys=True)


def scheme_from_json(text: str) -> Scheme:
    data = json.loads(text)
    n = data["n"]
    return Scheme(np.array(data["colors"], dtype=np.int32).reshape(n, n))
