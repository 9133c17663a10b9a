"""m-collections and m-schemes on explicit point sets.

Levels are partitions of the essential tuple sets V^(s).  Tuples are
addressed by their Lehmer-style mixed-radix code, which coincides with the
position in lexicographic enumeration; level s is stored as a dense int32
array of color ids in code order.  Color ids are assigned by least tuple,
and every search below scans in ascending (level, color, index) order.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

WORK_CAP = 10**7


class WorkCapExceeded(RuntimeError):
    pass


class NotAProjection(ValueError):
    pass


class NonIntegral(ValueError):
    """|P| / |Q| is not integral: a regularity violation."""


class NotAntisymmetric(ValueError):
    pass


class DepthExhausted(RuntimeError):
    """The chase ran out of levels; contradicts the halving argument."""


class PreconditionFailed(ValueError):
    pass


# ---------------------------------------------------------------------------
# tuple codes

def falling(n: int, s: int) -> int:
    out = 1
    for j in range(s):
        out *= n - j
    return out


@lru_cache(maxsize=None)
def tuple_table(n: int, s: int) -> np.ndarray:
    """All essential s-tuples over [0, n) in code (= lexicographic) order."""
    arr = np.fromiter(
        itertools.chain.from_iterable(itertools.permutations(range(n), s)),
        dtype=np.int8,
        count=falling(n, s) * s,
    )
    arr = arr.reshape(-1, s)
    arr.setflags(write=False)
    return arr


def encode_tuples(a: np.ndarray, n: int) -> np.ndarray:
    """Mixed-radix codes of essential tuples (rows of a)."""
    a = np.asarray(a, dtype=np.int64)
    s = a.shape[1]
    digits = a.copy()
    for i in range(1, s):
        smaller = np.zeros(a.shape[0], dtype=np.int64)
        for j in range(i):
            smaller += a[:, j] < a[:, i]
        digits[:, i] -= smaller
    code = np.zeros(a.shape[0], dtype=np.int64)
    stride = 1
    strides = [0] * s
    for i in range(s - 1, -1, -1):
        strides[i] = stride
        stride *= n - i
    for i in range(s):
        code += digits[:, i] * strides[i]
    return code


@lru_cache(maxsize=None)
def proj_table(n: int, s: int, i: int) -> np.ndarray:
    """code -> code of the tuple with 1-based coordinate i dropped."""
    t = tuple_table(n, s)
    out = encode_tuples(np.delete(t, i - 1, axis=1), n)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def multi_proj_table(n: int, s: int, dropped: tuple) -> np.ndarray:
    """code -> code with all 1-based coordinates in `dropped` removed."""
    t = tuple_table(n, s)
    cols = [j for j in range(s) if (j + 1) not in dropped]
    out = encode_tuples(t[:, cols], n)
    out.setflags(write=False)
    return out


def act_table(n: int, s: int, tau: tuple) -> np.ndarray:
    """code -> code of the coordinate-permuted tuple (v^tau)_j = v_{tau(j)}."""
    t = tuple_table(n, s)
    return encode_tuples(t[:, list(tau)], n)


# ---------------------------------------------------------------------------
# collections

class MCollection:
    """Partitions of V^(1)..V^(m); levels[s] maps tuple code -> color id."""

    def __init__(self, n: int, levels: dict):
        self.n = n
        self.m = max(levels)
        self.levels = {}
        self.sizes = {}
        for s in range(1, self.m + 1):
            if s not in levels:
                raise ValueError(f"missing level {s}")
            lv = np.asarray(levels[s], dtype=np.int32)
            if lv.shape != (falling(n, s),):
                raise ValueError(f"level {s} has wrong length")
            t = lv.max() + 1 if lv.size else 0
            if lv.size and sorted(np.unique(lv)) != list(range(t)):
                raise ValueError(f"level {s} color ids not dense")
            lv = lv.copy()
            lv.setflags(write=False)
            self.levels[s] = lv
            self.sizes[s] = np.bincount(lv, minlength=t)

    def num_colors(self, s: int) -> int:
        return len(self.sizes[s])

    def color_size(self, s: int, c: int) -> int:
        return int(self.sizes[s][c])

    def color_of_tuple(self, tup) -> int:
        s = len(tup)
        code = int(encode_tuples(np.array([tup]), self.n)[0])
        return int(self.levels[s][code])

    def tuples_of_color(self, s: int, c: int) -> np.ndarray:
        return tuple_table(self.n, s)[self.levels[s] == c]

    def __eq__(self, other):
        return (
            isinstance(other, MCollection)
            and self.n == other.n
            and self.m == other.m
            and all(np.array_equal(self.levels[s], other.levels[s]) for s in self.levels)
        )

    def __repr__(self):
        counts = [self.num_colors(s) for s in range(1, self.m + 1)]
        return f"MCollection(n={self.n}, m={self.m}, colors={counts})"


def collection_to_json(pi: MCollection) -> str:
    payload = {
        "n": pi.n,
        "m": pi.m,
        "levels": {str(s): [int(v) for v in pi.levels[s]] for s in pi.levels},
    }
    return json.dumps(payload, sort_keys=True)


def collection_from_json(text: str) -> MCollection:
    data = json.loads(text)
    return MCollection(data["n"], {int(s): np.array(v, dtype=np.int32) for s, v in data["levels"].items()})


# ---------------------------------------------------------------------------
# property checkers

@dataclass(frozen=True)
class PropertyViolation:
    prop: str  # "P1".."P6"
    level: int
    detail: dict


@dataclass
class PropertyReport:
    homogeneous: bool
    compatible: dict
    regular: dict
    invariant: dict
    antisymmetric_at: dict
    symmetric_at: dict
    violations: list = field(default_factory=list)

    @property
    def is_scheme(self) -> bool:
        return all(self.compatible.values()) and all(self.regular.values()) and all(self.invariant.values())

    @property
    def antisymmetric(self) -> bool:
        return all(self.antisymmetric_at.values())

    @property
    def symmetric(self) -> bool:
        return all(self.symmetric_at.values())


def _group_minmax(groups, values, num_groups):
    mn = np.full(num_groups, np.iinfo(np.int64).max, dtype=np.int64)
    mx = np.full(num_groups, -1, dtype=np.int64)
    np.minimum.at(mn, groups, values)
    np.maximum.at(mx, groups, values)
    return mn, mx


def check_properties(pi: MCollection) -> PropertyReport:
    """Evaluate P1-P6 by direct definition; witnesses are replayable."""
    n = pi.n
    report = PropertyReport(
        homogeneous=pi.num_colors(1) == 1,
        compatible={}, regular={}, invariant={}, antisymmetric_at={}, symmetric_at={},
    )
    if not report.homogeneous:
        report.violations.append(PropertyViolation("P4", 1, {"num_colors": pi.num_colors(1)}))
    for s in range(2, pi.m + 1):
        colors = pi.levels[s].astype(np.int64)
        t_s = pi.num_colors(s)
        below = pi.levels[s - 1].astype(np.int64)
        t_b = pi.num_colors(s - 1)
        # P1
        ok = True
        for i in range(1, s + 1):
            pc = below[proj_table(n, s, i)]
            mn, mx = _group_minmax(colors, pc, t_s)
            bad = np.nonzero(mn != mx)[0]
            if bad.size:
                c = int(bad[0])
                idx = np.nonzero(colors == c)[0]
                pcs = pc[idx]
                u = tuple(int(v) for v in tuple_table(n, s)[idx[0]])
                other = idx[int(np.nonzero(pcs != pcs[0])[0][0])]
                v = tuple(int(x) for x in tuple_table(n, s)[other])
                report.violations.append(
                    PropertyViolation("P1", s, {"i": i, "color": c, "tuple_u": u, "tuple_v": v})
                )
                ok = False
                break
        report.compatible[s] = ok
        # P2
        ok = True
        for i in range(1, s + 1):
            pr = proj_table(n, s, i).astype(np.int64)
            key = colors * falling(n, s - 1) + pr
            uniq, counts = np.unique(key, return_counts=True)
            up = uniq // falling(n, s - 1)
            ub = uniq % falling(n, s - 1)
            uq = below[ub]
            gkey = up * t_b + uq
            guniq, ginv = np.unique(gkey, return_inverse=True)
            mn, mx = _group_minmax(ginv, counts, len(guniq))
            npairs = np.bincount(ginv, minlength=len(guniq))
            qsizes = pi.sizes[s - 1][(guniq % t_b).astype(np.int64)]
            bad = np.nonzero((mn != mx) | (npairs != qsizes))[0]
            if bad.size:
                g = int(guniq[bad[0]])
                p_color, q_color = g // t_b, g % t_b
                report.violations.append(
                    PropertyViolation(
                        "P2", s,
                        {"i": i, "color": int(p_color), "base_color": int(q_color),
                         "min_fibre": int(mn[bad[0]]) if mn[bad[0]] != np.iinfo(np.int64).max else 0,
                         "max_fibre": int(mx[bad[0]])},
                    )
                )
                ok = False
                break
        report.regular[s] = ok
        # P3 / P5 / P6 via the full coordinate-permutation action
        inv_ok = True
        anti_ok = True
        sym_ok = True
        ident = tuple(range(s))
        for tau in itertools.permutations(range(s)):
            img = colors[act_table(n, s, tau)]
            mn, mx = _group_minmax(colors, img, t_s)
            const = mn == mx
            if not const.all() and inv_ok:
                c = int(np.nonzero(~const)[0][0])
                report.violations.append(
                    PropertyViolation("P3", s, {"tau": tau, "color": c})
                )
                inv_ok = False
            if tau != ident:
                fixed = np.nonzero(const & (mn == np.arange(t_s)))[0]
                if fixed.size and anti_ok:
                    report.violations.append(
                        PropertyViolation("P5", s, {"tau": tau, "color": int(fixed[0])})
                    )
                    anti_ok = False
                if not (const.all() and (mn == np.arange(t_s)).all()) and sym_ok:
                    report.violations.append(
                        PropertyViolation("P6", s, {"tau": tau})
                    )
                    sym_ok = False
        report.invariant[s] = inv_ok
        report.antisymmetric_at[s] = anti_ok
        report.symmetric_at[s] = sym_ok
    return report


# ---------------------------------------------------------------------------
# orbit m-schemes

def orbit_mscheme(generators, m: int, work_cap: int = WORK_CAP) -> MCollection:
    """Colors = orbits of the generated group on V^(s), numbered by least tuple."""
    gens = [np.asarray(g, dtype=np.int64) for g in generators]
    if not gens:
        raise ValueError("need at least one generator")
    n = len(gens[0])
    for g in gens:
        if sorted(g.tolist()) != list(range(n)):
            raise ValueError("generators must be permutations of range(n)")
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    levels = {}
    for s in range(1, m + 1):
        count = falling(n, s)
        if count > work_cap:
            raise WorkCapExceeded(f"level {s} has {count} tuples > work cap {work_cap}")
        t = tuple_table(n, s)
        rows, cols = [], []
        for g in gens:
            img = encode_tuples(g[t], n)
            rows.append(np.arange(count, dtype=np.int64))
            cols.append(img)
        graph = coo_matrix(
            (np.ones(count * len(gens), dtype=np.int8),
             (np.concatenate(rows), np.concatenate(cols))),
            shape=(count, count),
        )
        ncomp, labels = connected_components(graph, directed=True, connection="weak")
        first = np.full(ncomp, count, dtype=np.int64)
        np.minimum.at(first, labels, np.arange(count, dtype=np.int64))
        rank = np.argsort(np.argsort(first, kind="stable"), kind="stable")
        levels[s] = rank[labels].astype(np.int32)
    return MCollection(n, levels)


# ---------------------------------------------------------------------------
# matchings

@dataclass(frozen=True)
class Matching:
    level: int
    color: int
    drop_i: tuple  # 1-based dropped coordinate indices, strictly increasing
    drop_j: tuple

    def verify(self, pi: MCollection) -> bool:
        """Recheck the two defining equalities from raw partitions."""
        n, s = pi.n, self.level
        if self.drop_i == self.drop_j or len(self.drop_i) != len(self.drop_j):
            return False
        idx = np.nonzero(pi.levels[s] == self.color)[0]
        img_i = np.unique(multi_proj_table(n, s, self.drop_i)[idx])
        img_j = np.unique(multi_proj_table(n, s, self.drop_j)[idx])
        return len(img_i) == len(idx) and np.array_equal(img_i, img_j)


def find_matchings(pi: MCollection) -> list:
    """All matchings, scanned in (level, color, k, drop_i, drop_j) order."""
    out = []
    n = pi.n
    for s in range(2, pi.m + 1):
        colors = pi.levels[s]
        index_sets = {}
        for k in range(1, s):
            for dropped in itertools.combinations(range(1, s + 1), k):
                index_sets[dropped] = multi_proj_table(n, s, dropped)
        order = np.argsort(colors, kind="stable")
        bounds = np.searchsorted(colors[order], np.arange(pi.num_colors(s) + 1))
        for c in range(pi.num_colors(s)):
            idx = order[bounds[c]:bounds[c + 1]]
            size = len(idx)
            images = {}
            for k in range(1, s):
                drops = list(itertools.combinations(range(1, s + 1), k))
                for d in drops:
                    img = np.unique(index_sets[d][idx])
                    images[d] = img
                for di, dj in itertools.combinations(drops, 2):
                    if len(images[di]) == size and np.array_equal(images[di], images[dj]):
                        out.append(Matching(s, c, di, dj))
    for m in out:
        assert m.verify(pi)
    return out


def subdegree(pi: MCollection, level_p: int, color_p: int, level_q: int, color_q: int) -> int:
    """|P| / |Q| for Q a multi-projection of P; integral under regularity."""
    n = pi.n
    k = level_p - level_q
    if k < 1 or level_q < 1:
        raise NotAProjection("Q must live at a lower level")
    idx = np.nonzero(pi.levels[level_p] == color_p)[0]
    q_codes = np.nonzero(pi.levels[level_q] == color_q)[0]
    for dropped in itertools.combinations(range(1, level_p + 1), k):
        img = np.unique(multi_proj_table(n, level_p, dropped)[idx])
        if np.array_equal(img, q_codes):
            size_p, size_q = len(idx), len(q_codes)
            if size_p % size_q:
                raise NonIntegral(f"|P|={size_p} not divisible by |Q|={size_q}")
            return size_p // size_q
    raise NotAProjection("no index set projects P onto Q")


def _level_antisymmetric(pi: MCollection, s: int) -> bool:
    colors = pi.levels[s].astype(np.int64)
    t_s = pi.num_colors(s)
    for tau in itertools.permutations(range(s)):
        if tau == tuple(range(s)):
            continue
        img = colors[act_table(pi.n, s, tau)]
        mn, mx = _group_minmax(colors, img, t_s)
        if ((mn == mx) & (mn == np.arange(t_s))).any():
            return False
    return True


def _color_image(pi: MCollection, s: int, color: int, tau) -> int:
    colors = pi.levels[s]
    idx = np.nonzero(colors == color)[0]
    img = np.unique(colors[act_table(pi.n, s, tau)[idx]])
    if len(img) != 1:
        raise ValueError("collection is not invariant; color image undefined")
    return int(img[0])


def _derived_matching(pi: MCollection, s: int, color: int):
    idx = np.nonzero(pi.levels[s] == color)[0]
    size = len(idx)
    for k in range(1, s):
        drops = list(itertools.combinations(range(1, s + 1), k))
        images = {d: np.unique(multi_proj_table(pi.n, s, d)[idx]) for d in drops}
        for di, dj in itertools.combinations(drops, 2):
            if len(images[di]) == size and np.array_equal(images[di], images[dj]):
                return Matching(s, color, di, dj)
    return None


def matching_chase(pi: MCollection, t_level: int, color: int, i: int, ell: int) -> Matching:
    """Iterative halving: duplicate the projected coordinate, pick the least
    color inside, and strictly halve the subdegree until it reaches 1."""
    if not _level_antisymmetric(pi, 2):
        raise NotAntisymmetric("level 2 has a coordinate-permutation-fixed color")
    n = pi.n
    s = t_level
    # normalize: move coordinate i to the last slot via invariance
    if i != s:
        tau = tuple(list(range(i - 1)) + list(range(i, s)) + [i - 1])
        color = _color_image(pi, s, color, tau)
    size_p = pi.color_size(s, color)
    proj = proj_table(n, s, s)
    idx = np.nonzero(pi.levels[s] == color)[0]
    img = np.unique(proj[idx])
    size_q = len(img)
    if size_p % size_q:
        raise NonIntegral("subdegree is not integral")
    sub = size_p // size_q
    if sub == 1:
        m = _derived_matching(pi, s, color)
        if m is None:
            raise PreconditionFailed("subdegree 1 but the color is not a matching")
        return m
    if sub > ell:
        raise PreconditionFailed(f"subdegree {sub} exceeds ell={ell}")
    cur_level, cur_color, cur_sub = s, color, sub
    while True:
        nxt = cur_level + 1
        if nxt > pi.m:
            raise DepthExhausted(f"needed level {nxt} > m={pi.m}")
        pt1 = proj_table(n, nxt, nxt - 1)
        pt2 = proj_table(n, nxt, nxt)
        cur = pi.levels[cur_level]
        mask = (cur[pt1] == cur_color) & (cur[pt2] == cur_color)
        inside = np.unique(pi.levels[nxt][mask])
        if inside.size == 0:
            raise DepthExhausted("duplication set is empty")
        new_color = int(inside[0])
        new_size = pi.color_size(nxt, new_color)
        prev_size = pi.color_size(cur_level, cur_color)
        if new_size % prev_size:
            raise NonIntegral("subdegree is not integral")
        new_sub = new_size // prev_size
        assert 2 * new_sub <= cur_sub - 1, "antisymmetry must strictly halve the subdegree"
        if new_sub == 1:
            return Matching(nxt, new_color, (nxt - 1,), (nxt,))
        cur_level, cur_color, cur_sub = nxt, new_color, new_sub


def prime_matching(pi: MCollection, ell: int) -> Matching:
    """Matching in a homogeneous antisymmetric m-scheme on a prime number of
    points, via a small-intersection witness on the level-2 scheme."""
    from . import assoc
    from .gf import is_prime

    if ell < 2:
        raise PreconditionFailed("ell must be >= 2")
    n = pi.n
    if not is_prime(n):
        raise PreconditionFailed("n not prime")
    need_m = math.ceil(2 * math.log2(ell)) + 3
    if pi.m < need_m:
        raise PreconditionFailed(f"m={pi.m} < 2*log2(ell)+3 = {need_m}")
    report = check_properties(pi)
    if not report.homogeneous:
        raise PreconditionFailed("collection is not homogeneous")
    if not report.antisymmetric:
        raise PreconditionFailed("collection is not antisymmetric")
    if not report.is_scheme:
        raise PreconditionFailed("collection is not an m-scheme")
    scheme = assoc.level2_to_scheme(pi)
    t = assoc.intersection_tensor(scheme)
    k = t.valency(1)
    t2 = pi.num_colors(2)
    if Fraction(t2) < 2 * Fraction(k - 1, ell - 1) + 1:
        raise PreconditionFailed(f"|P_2|={t2} < 2(k-1)/(ell-1)+1 with k={k}")
    if k == 1:
        m = _derived_matching(pi, 2, 0)
        if m is None:
            raise AssertionError("thin level-2 colors must be matchings")
        return m
    res = assoc.small_intersection_search(scheme, ell)
    if res.witness is None:
        raise PreconditionFailed("no small-intersection witness (requires ell < k)")
    w = res.witness
    m2 = scheme.matrix
    quad = None
    for beta in range(n):
        for gamma in range(n):
            if m2[beta, gamma] != w.w:
                continue
            for alpha in range(n):
                if m2[alpha, beta] != w.u or m2[alpha, gamma] != w.v:
                    continue
                for gamma2 in range(n):
                    if m2[alpha, gamma2] == w.v and m2[beta, gamma2] == w.w_prime:
                        quad = (beta, alpha, gamma, gamma2)
                        break
                if quad:
                    break
            if quad:
                break
        if quad:
            break
    if quad is None:
        raise AssertionError("witness tuple must exist by the counting argument")
    p4 = pi.color_of_tuple(quad)
    v_color = w.v - 1  # level-2 color id of v
    idx = np.nonzero(pi.levels[4] == p4)[0]
    img13 = np.unique(multi_proj_table(n, 4, (1, 3))[idx])
    img14 = np.unique(multi_proj_table(n, 4, (1, 4))[idx])
    v_codes = np.nonzero(pi.levels[2] == v_color)[0]
    assert np.array_equal(img13, v_codes) and np.array_equal(img14, v_codes)
    size_p = pi.color_size(4, p4)
    size_v = len(v_codes)
    if size_p == size_v:
        return Matching(4, p4, (1, 3), (1, 4))
    q3 = pi.color_of_tuple(quad[:3])
    size_q = pi.color_size(3, q3)
    if size_q > size_v:
        return matching_chase(pi, 3, q3, 1, ell * ell)
    return matching_chase(pi, 4, p4, 4, ell * ell)


# ---------------------------------------------------------------------------
# non-existence check

@dataclass(frozen=True)
class ContradictionWitness:
    r: int
    n: int
    message: str


def nonexistence_check(pi: MCollection, report: PropertyReport | None = None):
    """None unless a homogeneous antisymmetric m-scheme exists on n points
    with a prime r | n, r <= m -- which is impossible, so a witness is
    test-fatal."""
    n, m = pi.n, pi.m
    r = None
    for cand in range(2, m + 1):
        from .gf import is_prime

        if is_prime(cand) and n % cand == 0:
            r = cand
            break
    if r is None:
        return None
    if report is None:
        report = check_properties(pi)
    if report.homogeneous and report.antisymmetric and report.is_scheme:
        prod = 1
        for j in range(1, r):
            prod *= n - j
        return ContradictionWitness(
            r, n, f"{math.factorial(r)}*{n} would divide {n}*{prod}, impossible since {r} | {n}"
        )
    return None


# ---------------------------------------------------------------------------
# built-in group catalog

@lru_cache(maxsize=None)
def load_catalog() -> dict:
    """Named generator lists: cyclic, dihedral, S3, A4, Frobenius F21."""
    text = resources.files("mschemes.data").joinpath("groups.json").read_text()
    raw = json.loads(text)
    return {name: (entry["degree"], [tuple(g) for g in entry["generators"]]) for name, entry in raw.items()}


def catalog_mscheme(name: str, m: int, work_cap: int = WORK_CAP) -> MCollection:
    cat = load_catalog()
    if name not in cat:
        raise KeyError(f"unknown catalog group {name!r}")
    degree, gens = cat[name]
    return orbit_mscheme(gens, min(m, degree), work_cap=work_cap)
