"""Brute-force F-module analysis on small, fully enumerable groups.

Two kinds of enumerated group share one interface (:class:`EnumeratedGroup`):

* :class:`SmallMatrixGroup` -- the closure of explicit GF(3) matrices (or
  block-diagonal stacks), elements identified by their entries;
* :class:`Class2Table` -- all of E(Omega) for small Omega, elements identified
  by their normal-form coordinates.

Elements are integer indices. Subgroups are frozensets of indices together
with a canonical generating set. The checks here are deliberately naive:
they are the oracles the symbolic engine is measured against.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import gfp
from .class2 import Omega, all_elements, batch_mul, coords, encode, from_coords, matrix_inverse
from .reps import JValue, MatrixModule, Module

P = 3


class BudgetExceeded(RuntimeError):
    pass


def _log3(m: int) -> int | None:
    k = 0
    while m > 1 and m % 3 == 0:
        m //= 3
        k += 1
    return k if m == 1 else None


def pack_rows(stack: np.ndarray) -> np.ndarray:
    """Exact byte rows for a stack of GF(3) arrays (five entries per byte)."""
    flat = stack.reshape(stack.shape[0], -1).astype(np.int64)
    pad = (-flat.shape[1]) % 5
    if pad:
        flat = np.hstack([flat, np.zeros((flat.shape[0], pad), dtype=np.int64)])
    return (flat.reshape(flat.shape[0], -1, 5) @ np.array([1, 3, 9, 27, 81])).astype(np.uint8)


def pack_keys(stack: np.ndarray) -> np.ndarray:
    """One sortable void scalar per array in the stack."""
    rows = np.ascontiguousarray(pack_rows(stack))
    return rows.view(np.dtype((np.void, rows.shape[1]))).ravel()


def _bmm(a: np.ndarray, b: np.ndarray, chunk: int = 8192) -> np.ndarray:
    if a.shape[0] <= chunk:
        return gfp.mat_mul(a, b)
    out = np.empty(np.broadcast_shapes(a.shape[:-2], b.shape[:-2]) + (a.shape[-2], b.shape[-1]),
                   dtype=gfp.DTYPE)
    for s in range(0, a.shape[0], chunk):
        bb = b[s:s + chunk] if b.ndim == a.ndim and b.shape[0] == a.shape[0] else b
        out[s:s + chunk] = gfp.mat_mul(a[s:s + chunk], bb)
    return out


@dataclass(frozen=True)
class Subgroup:
    elements: frozenset
    gens: tuple

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def log3_order(self) -> int:
        k = _log3(self.order)
        if k is None:
            raise ValueError("subgroup order is not a power of 3")
        return k

    def __le__(self, other: "Subgroup") -> bool:
        return self.elements <= other.elements


class EnumeratedGroup:
    order: int
    identity: int = 0
    generators: tuple

    def mul_many(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def module_element(self, i: int):
        raise NotImplementedError

    def describe(self, i: int) -> str:
        raise NotImplementedError

    # -- derived operations -----------------------------------------------------

    def mul(self, i: int, j: int) -> int:
        return int(self.mul_many(np.array([i]), np.array([j]))[0])

    def inverses(self) -> np.ndarray:
        if getattr(self, "_inv", None) is None:
            ids = np.arange(self.order)
            power, k = ids.copy(), 1
            while np.any(power != self.identity):
                p2 = self.mul_many(power, power)
                power = self.mul_many(p2, power)
                k *= 3
                if k > 3 ** 20:
                    raise ValueError("element orders are not powers of 3")
            inv = self.identity * np.ones_like(ids)
            base, e = ids.copy(), k - 1
            while e:
                if e & 1:
                    inv = self.mul_many(inv, base)
                base = self.mul_many(base, base)
                e >>= 1
            self._inv = inv
        return self._inv

    def inv(self, i: int) -> int:
        return int(self.inverses()[i])

    def power(self, i: int, k: int) -> int:
        out = self.identity
        for _ in range(k % self.exponent_bound()):
            out = self.mul(out, i)
        return out

    def exponent_bound(self) -> int:
        return 3 ** 20

    def comm(self, i: int, j: int) -> int:
        return self.mul(self.mul(self.inv(i), self.inv(j)), self.mul(i, j))

    def commutes(self, i: int, j: int) -> bool:
        return self.mul(i, j) == self.mul(j, i)

    def conj(self, i: int, g: int) -> int:
        return self.mul(self.mul(self.inv(g), i), g)

    def closure(self, ids) -> frozenset:
        ids = [int(i) for i in ids]
        seen = np.zeros(self.order, dtype=bool)
        seen[self.identity] = True
        frontier = np.array([self.identity])
        while frontier.size:
            fresh_all = []
            for g in ids:
                prods = self.mul_many(frontier, np.full(frontier.shape, g))
                fresh = np.unique(prods[~seen[prods]])
                seen[fresh] = True
                fresh_all.append(fresh)
            frontier = np.concatenate(fresh_all) if fresh_all else np.array([], dtype=np.int64)
        return frozenset(int(x) for x in np.nonzero(seen)[0])

    def subgroup(self, ids) -> Subgroup:
        els = self.closure(ids)
        return Subgroup(els, canonical_gens(self, els))

    def whole(self) -> Subgroup:
        return self.subgroup(self.generators)

    def centre(self) -> frozenset:
        ids = np.arange(self.order)
        ok = np.ones(self.order, dtype=bool)
        for g in self.generators:
            gg = np.full(self.order, g)
            ok &= self.mul_many(ids, gg) == self.mul_many(gg, ids)
        return frozenset(int(x) for x in np.nonzero(ok)[0])

    def is_normal(self, S: Subgroup) -> bool:
        return all(self.conj(s, g) in S.elements for s in S.gens for g in self.generators)

    def is_abelian(self, S: Subgroup) -> bool:
        return all(self.commutes(a, b) for a, b in itertools.combinations(S.gens, 2))

    def commutator_subgroup(self, A: Subgroup, B: Subgroup) -> Subgroup:
        """[A, B] as the normal closure (in G) of the generator commutators."""
        seeds = {self.comm(a, b) for a in A.gens for b in B.gens}
        gens = set(seeds)
        frontier = list(seeds)
        while frontier:
            nxt = []
            for x in frontier:
                for g in self.generators:
                    y = self.conj(x, g)
                    if y not in gens:
                        gens.add(y)
                        nxt.append(y)
            frontier = nxt
        return self.subgroup(sorted(gens))

    def centraliser(self, S: Subgroup) -> Subgroup:
        ids = np.arange(self.order)
        ok = np.ones(self.order, dtype=bool)
        for s in S.gens:
            ss = np.full(self.order, s)
            ok &= self.mul_many(ids, ss) == self.mul_many(ss, ids)
        return self.subgroup(_generating_subset(self, np.nonzero(ok)[0]))


def _generating_subset(G: EnumeratedGroup, elements, abelian: bool = False) -> list[int]:
    gens: list[int] = []
    current = frozenset({G.identity})
    for x in sorted(int(e) for e in elements):
        if x in current:
            continue
        gens.append(x)
        if abelian:
            # elementary abelian: <S, x> = S u Sx u Sx^2
            arr = np.array(sorted(current))
            a = G.mul_many(arr, np.full(arr.shape, x))
            b = G.mul_many(a, np.full(arr.shape, x))
            current = current | frozenset(a.tolist()) | frozenset(b.tolist())
        else:
            current = G.closure(gens)
    return gens


def canonical_gens(G: EnumeratedGroup, elements, abelian: bool = False) -> tuple:
    """Greedy generating set: smallest index not yet generated, repeatedly."""
    return tuple(_generating_subset(G, elements, abelian))


class SmallMatrixGroup(EnumeratedGroup):
    """A matrix group listed element by element; index 0 is the identity.

    Products are looked up by binary search over the packed entries, or read
    from a full multiplication table when the group is small.
    """

    table_limit = 729

    def __init__(self, elements: np.ndarray, generators):
        self.elements = elements
        self.order = elements.shape[0]
        self.generators = tuple(generators)
        keys = pack_keys(elements)
        self._sort = np.argsort(keys, kind="stable")
        self._sorted = keys[self._sort]
        if np.any(self._sorted[1:] == self._sorted[:-1]):
            raise ValueError("duplicate group elements")
        self._inv = None
        self._table = None
        if self.order <= self.table_limit:
            ids = np.arange(self.order)
            self._table = np.stack([self._lookup_products(np.full(self.order, i), ids)
                                    for i in range(self.order)])

    @property
    def shape(self) -> tuple:
        return self.elements.shape[1:]

    @property
    def dim(self) -> int:
        s = self.shape
        return s[-1] * (s[0] if len(s) == 3 else 1)

    def lookup(self, stack: np.ndarray) -> np.ndarray:
        keys = pack_keys(stack)
        pos = np.minimum(np.searchsorted(self._sorted, keys), self.order - 1)
        if np.any(self._sorted[pos] != keys):
            raise KeyError("matrix is not an element of the group")
        return self._sort[pos]

    def index_of(self, m) -> int:
        return int(self.lookup(np.asarray(m, dtype=gfp.DTYPE)[None])[0])

    def _lookup_products(self, a, b):
        return self.lookup(_bmm(self.elements[a], self.elements[b]))

    def mul_many(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self._table is not None:
            return self._table[a, b]
        return self._lookup_products(a, b)

    def module_element(self, i: int) -> np.ndarray:
        return self.elements[i]

    def describe(self, i: int) -> str:
        m = self.elements[i]
        if m.ndim == 2:
            return " / ".join(" ".join(str(int(x)) for x in row) for row in m)
        return f"element #{i}"

    def exponent_bound(self) -> int:
        return 3 ** 12


def enumerate_group(gens, cap: int = 3 ** 11) -> SmallMatrixGroup:
    """Closure of matrices (or equally-shaped block stacks) under multiplication."""
    gens = [gfp.as_f3(g) for g in gens]
    if not gens:
        raise ValueError("use trivial_group(dim) for an empty generator list")
    shape = gens[0].shape
    if any(g.shape != shape for g in gens):
        raise ValueError("generators have different shapes")
    for g in gens:
        blocks = g if g.ndim == 3 else g[None]
        if not all(gfp.is_invertible(b) for b in blocks):
            raise ValueError("generator is not invertible")
    eye = np.broadcast_to(gfp.identity(shape[-1]), shape).astype(gfp.DTYPE)
    elements = [eye]
    index = {pack_rows(eye[None])[0].tobytes(): 0}
    frontier = eye[None]
    gen_idx = []
    for g in gens:
        k = pack_rows(g[None])[0].tobytes()
        if k not in index:
            index[k] = len(elements)
            elements.append(g)
            frontier = np.concatenate([frontier, g[None]])
        gen_idx.append(index[k])
    while frontier.shape[0]:
        fresh = []
        for g in gens:
            prods = _bmm(frontier, g)
            for m, row in zip(prods, pack_rows(prods)):
                k = row.tobytes()
                if k not in index:
                    index[k] = len(elements)
                    elements.append(m)
                    fresh.append(m)
                    if len(elements) > cap:
                        raise BudgetExceeded(f"group order exceeds cap {cap}")
        frontier = np.array(fresh, dtype=gfp.DTYPE).reshape((-1,) + shape)
    return SmallMatrixGroup(np.array(elements, dtype=gfp.DTYPE), gen_idx)


def trivial_group(dim: int) -> SmallMatrixGroup:
    return SmallMatrixGroup(gfp.identity(dim)[None], [])


class Class2Table(EnumeratedGroup):
    """All of E(Omega) for small Omega; the index of an element is its base-3 code."""

    def __init__(self, omega: Omega):
        self.omega = omega
        self.rows = all_elements(omega)
        self.order = self.rows.shape[0]
        self.generators = tuple(3 ** i for i in range(omega.n))
        self._inv = None

    def mul_many(self, a, b):
        return encode(batch_mul(self.omega, self.rows[np.asarray(a)], self.rows[np.asarray(b)]))

    def inverses(self) -> np.ndarray:
        if self._inv is None:
            # u -> -u; c -> -c - u_i u_j (inverse of a normal-form word)
            n = self.omega.n
            ii = np.array([i for i, _ in self.omega.pairs])
            jj = np.array([j for _, j in self.omega.pairs])
            r = self.rows.astype(np.int64)
            inv = -r
            inv[:, n:] -= r[:, ii] * r[:, jj]
            self._inv = encode(np.mod(inv, P))
        return self._inv

    def element(self, i: int):
        return from_coords(self.omega, self.rows[i])

    def index_of(self, h) -> int:
        return int(encode(coords(h))[0])

    module_element = element

    def describe(self, i: int) -> str:
        return str(self.element(i))

    def exponent_bound(self) -> int:
        return 3


# -- subgroup enumeration ------------------------------------------------------


@dataclass
class EAList:
    subgroups: list[Subgroup]
    complete: bool  # no elementary abelian subgroup of larger rank exists


def order3_elements(G: EnumeratedGroup) -> list[int]:
    ids = np.arange(G.order)
    cube = G.mul_many(G.mul_many(ids, ids), ids)
    return [int(i) for i in np.nonzero((cube == G.identity) & (ids != G.identity))[0]]


def elementary_abelians(G: EnumeratedGroup, max_rank: int = 4, max_subgroups: int = 10 ** 6,
                        within: frozenset | None = None) -> EAList:
    """All elementary abelian subgroups 1 < E <= G (or <= ``within``) of rank <= max_rank.

    Rank-r subgroups are grown from rank-(r-1) ones by adjoining a commuting
    order-3 element, and deduplicated as element sets. ``complete`` is False
    when some rank-max_rank subgroup still extends.
    """
    cand = order3_elements(G)
    if within is not None:
        cand = [g for g in cand if g in within]
    cand_arr = np.array(cand, dtype=np.int64)

    def centralising(gens) -> np.ndarray:
        ok = np.ones(cand_arr.shape, dtype=bool)
        for x in gens:
            xx = np.full(cand_arr.shape, x)
            ok &= G.mul_many(cand_arr, xx) == G.mul_many(xx, cand_arr)
        return cand_arr[ok]

    def extend(S: frozenset, g: int) -> frozenset:
        arr = np.array(sorted(S))
        a = G.mul_many(arr, np.full(arr.shape, g))
        b = G.mul_many(a, np.full(arr.shape, g))
        return S | frozenset(a.tolist()) | frozenset(b.tolist())

    level: dict[frozenset, tuple] = {}
    for g in cand:
        S = frozenset({G.identity, g, G.mul(g, g)})
        level.setdefault(S, (g,))
    found: list[Subgroup] = []
    complete = True
    rank = 1
    while level:
        found.extend(Subgroup(S, gens) for S, gens in level.items())
        if len(found) > max_subgroups:
            raise BudgetExceeded(f"more than {max_subgroups} elementary abelian subgroups")
        nxt: dict[frozenset, tuple] = {}
        for S, gens in level.items():
            ext = [int(g) for g in centralising(gens) if int(g) not in S]
            if not ext:
                continue
            if rank == max_rank:
                complete = False
                break
            for g in ext:
                T = extend(S, g)
                if T not in nxt:
                    nxt[T] = gens + (g,)
        if rank == max_rank:
            break
        level = nxt
        rank += 1
    found = [Subgroup(S.elements, canonical_gens(G, S.elements, abelian=True)) for S in found]
    found.sort(key=lambda s: (s.order, sorted(s.elements)))
    return EAList(found, complete)


# -- j-values, offenders --------------------------------------------------------


def jlog_of(G: EnumeratedGroup, S: Subgroup, module: Module) -> JValue:
    gens = [G.module_element(i) for i in S.gens]
    return JValue(S.log3_order + module.fixed_space_dim(gens) - module.dim)


def fixed_dim_of(G: EnumeratedGroup, S: Subgroup, module: Module) -> int:
    return module.fixed_space_dim([G.module_element(i) for i in S.gens])


def is_quadratic_sub(G: EnumeratedGroup, S: Subgroup, module: Module) -> bool:
    gens = [G.module_element(i) for i in S.gens]
    return bool(gens) and all(module.pair_annihilates(a, b) for a in gens for b in gens)


@dataclass
class OffenderReport:
    subgroup: Subgroup = field(repr=False)
    gens: tuple
    jvalue: JValue
    is_best: bool
    is_quadratic: bool


def offenders(G: EnumeratedGroup, module: Module, eas: EAList | None = None,
              max_rank: int = 4, max_subgroups: int = 10 ** 6) -> list[OffenderReport]:
    eas = eas or elementary_abelians(G, max_rank, max_subgroups)
    jv = {S.elements: jlog_of(G, S, module) for S in eas.subgroups}
    out = []
    for E in eas.subgroups:
        j = jv[E.elements]
        if not j.is_offender:
            continue
        best = all(jv[F.elements].log3 <= j.log3 for F in eas.subgroups if F.elements <= E.elements)
        out.append(OffenderReport(E, E.gens, j, best, is_quadratic_sub(G, E, module)))
    return out


def every_offender_contains_best(reports: list[OffenderReport]) -> bool:
    best = [r.subgroup.elements for r in reports if r.is_best]
    return all(any(b <= r.subgroup.elements for b in best) for r in reports)


def quadratic_elements(G: EnumeratedGroup, module: Module) -> frozenset:
    return frozenset(i for i in range(G.order) if module.is_quadratic_element(G.module_element(i)))


def central_quadratics(G: EnumeratedGroup, module: Module) -> list[int]:
    return sorted(z for z in G.centre() if z != G.identity
                  and module.is_quadratic_element(G.module_element(z)))


def element_codim_bound(G: EnumeratedGroup, module: Module) -> int:
    """min over g != 1 of codim C_V(g); an offender E needs rank(E) >= this."""
    best = module.dim
    for i in range(G.order):
        if i != G.identity:
            best = min(best, module.dim - module.fixed_space_dim([G.module_element(i)]))
    return best


# -- the lemma predicates ----------------------------------------------------------


def _minus_one_stack(module: Module, g) -> np.ndarray:
    m = module.minus_one(g)
    return m if m.ndim == 3 else m[None]


def commutator_space(module: Module, gens) -> list[np.ndarray]:
    """Per-block basis of [V, E] = sum of the images of (g - 1)."""
    stacks = [_minus_one_stack(module, g) for g in gens]
    return [gfp.row_basis(np.vstack([s[b] for s in stacks])) for b in range(stacks[0].shape[0])]


@dataclass
class TimmesfeldResult:
    passed: bool
    F: Subgroup | None
    detail: dict


def timmesfeld_check(G: EnumeratedGroup, E: Subgroup, module: Module, eas: EAList) -> TimmesfeldResult:
    """F = C_E([V, E]) must be a quadratic best offender with j_F = j_E."""
    W = commutator_space(module, [G.module_element(i) for i in E.gens])
    keep = []
    for e in sorted(E.elements):
        n = _minus_one_stack(module, G.module_element(e))
        if all(w.shape[0] == 0 or gfp.is_zero(gfp.mat_mul(w, n[b])) for b, w in enumerate(W)):
            keep.append(e)
    F = Subgroup(frozenset(keep), canonical_gens(G, keep, abelian=True))
    detail: dict = {"order_E": E.order, "order_F": F.order}
    if F.order == 1:
        return TimmesfeldResult(False, F, {**detail, "reason": "F trivial"})
    jE, jF = jlog_of(G, E, module), jlog_of(G, F, module)
    jv_sub = [jlog_of(G, S, module).log3 for S in eas.subgroups if S.elements <= F.elements]
    quad = is_quadratic_sub(G, F, module)
    best = all(x <= jF.log3 for x in jv_sub)
    detail.update(jE=jE.log3, jF=jF.log3, F_quadratic=quad, F_best=best)
    return TimmesfeldResult(quad and best and jE == jF, F, detail)


@dataclass
class MSResult:
    inequality_ok: bool
    equality: bool
    product_condition: bool
    fixed_condition: bool

    @property
    def consistent(self) -> bool:
        return self.inequality_ok and self.equality == (self.product_condition and self.fixed_condition)


def ms_check(G: EnumeratedGroup, H: Subgroup, K: Subgroup, module: Module) -> MSResult:
    J = G.subgroup(H.gens + K.gens)
    I_els = H.elements & K.elements
    I = Subgroup(I_els, canonical_gens(G, I_els))
    fH, fK, fI, fJ = (fixed_dim_of(G, S, module) for S in (H, K, I, J))
    lh = H.log3_order + fH + K.log3_order + fK
    rh = I.log3_order + fI + J.log3_order + fJ
    product_condition = H.order * K.order == I.order * J.order
    # C_V(H) meet C_V(K) = C_V(<H, K>)
    fixed_condition = fI == fH + fK - fJ
    return MSResult(lh <= rh, lh == rh, product_condition, fixed_condition)


def descent_check(G: EnumeratedGroup, a: int, b: int, module: Module) -> str:
    """'pass', 'fail' or 'skipped' (preconditions unmet)."""
    c = G.comm(a, b)
    if c == G.identity or not (G.commutes(c, a) and G.commutes(c, b)):
        return "skipped"
    mb = G.module_element(b)
    if not module.is_quadratic_element(mb):
        return "skipped"
    mc = G.module_element(c)
    ok = all(module.pair_annihilates(x, y) for x in (mb, mc) for y in (mb, mc))
    return "pass" if ok else "fail"


def perp(G: EnumeratedGroup, g: int, h: int, module: Module) -> bool:
    return G.commutes(g, h) and module.pair_annihilates(G.module_element(g), G.module_element(h))


def no_rank_one_check(G: EnumeratedGroup, module: Module, eas: EAList) -> str:
    """'unmet' when there are central quadratics, else 'pass'/'fail'."""
    if central_quadratics(G, module):
        return "unmet"
    bad = [S for S in eas.subgroups if S.order == 3 and jlog_of(G, S, module).is_offender]
    return "fail" if bad else "pass"


def weak_closure_bruteforce(G: EnumeratedGroup, E: Subgroup, chunk: int = 8192):
    """(True, None) iff every conjugate E^g centralising E equals E; else (False, g)."""
    inv = G.inverses()
    ids = np.arange(G.order)
    for s in range(0, G.order, chunk):
        gs = ids[s:s + chunk]
        conj = []
        for e in E.gens:
            ee = np.full(gs.shape, e)
            conj.append(G.mul_many(G.mul_many(inv[gs], ee), gs))
        centralising = np.ones(gs.shape, dtype=bool)
        for ce in conj:
            for f in E.gens:
                ff = np.full(gs.shape, f)
                centralising &= G.mul_many(ce, ff) == G.mul_many(ff, ce)
        for k in np.nonzero(centralising)[0]:
            if not all(int(ce[k]) in E.elements for ce in conj):
                return False, int(gs[k])
    return True, None


# -- Hypothesis (N, A) instances -------------------------------------------------


@dataclass
class NAResult:
    status: str  # "unmet", "vacuous", "pass", "fail"
    conditions: dict
    n_family: int = 0
    detail: dict = field(default_factory=dict)


def hypothesis_conditions(G: EnumeratedGroup, N: Subgroup, A: Subgroup, module: Module) -> dict:
    NN = G.commutator_subgroup(N, N)
    NA = G.commutator_subgroup(N, A)
    return {
        "A_abelian": G.is_abelian(A),
        "A_le_N": A.elements <= N.elements,
        "A_normal": G.is_normal(A),
        "N_normal": G.is_normal(N),
        "NN_le_A": NN.elements <= A.elements,
        "NA_trivial": NA.order == 1,
        "no_central_quadratics": not central_quadratics(G, module),
    }


def hypothesis_na_check(G: EnumeratedGroup, N: Subgroup, A: Subgroup, module: Module,
                        eas: EAList, offender_list: list[OffenderReport] | None = None) -> NAResult:
    """Conditions of the (N, A) hypothesis, then: no member of the family is weakly closed.

    The family is the offenders E <= N with |E : E meet A| = 3. For each member
    the j-value identities (j_E = 1, j_{E meet A} = 1/3, equal fixed spaces) and
    the structure of C_E([V, E]) are checked as well.
    """
    cond = hypothesis_conditions(G, N, A, module)
    if not all(cond.values()):
        return NAResult("unmet", cond)
    offs = offender_list if offender_list is not None else offenders(G, module, eas)
    family = [r for r in offs if r.subgroup.elements <= N.elements
              and r.subgroup.order == 3 * len(r.subgroup.elements & A.elements)]
    if not family:
        return NAResult("vacuous", cond)
    detail: dict = {"weakly_closed": 0, "lemma_j_values": 0, "lemma_structure": 0, "best": 0}
    ok = True
    for r in family:
        E = r.subgroup
        F_els = E.elements & A.elements
        F = Subgroup(F_els, canonical_gens(G, F_els, abelian=True))
        jE, jF = r.jvalue.log3, jlog_of(G, F, module).log3
        same_fixed = fixed_dim_of(G, E, module) == fixed_dim_of(G, F, module)
        if jE == 0 and jF == -1 and same_fixed and F.order > 1:
            detail["lemma_j_values"] += 1
        else:
            ok = False
        if r.is_best:
            detail["best"] += 1
        else:
            ok = False
        # C_E([V, E]) minus A is nonempty; each x there gives E = <x, F> and [V, x] <= C_V(E)
        W = commutator_space(module, [G.module_element(i) for i in E.gens])
        cent = []
        for e in sorted(E.elements):
            n = _minus_one_stack(module, G.module_element(e))
            if all(w.shape[0] == 0 or gfp.is_zero(gfp.mat_mul(w, n[b])) for b, w in enumerate(W)):
                cent.append(e)
        outside = [x for x in cent if x not in A.elements]
        struct_ok = bool(outside)
        for x in outside:
            struct_ok &= G.closure([x] + list(F.gens)) == E.elements
            mx = G.module_element(x)
            struct_ok &= all(module.pair_annihilates(mx, G.module_element(e)) for e in E.gens)
        if struct_ok:
            detail["lemma_structure"] += 1
        else:
            ok = False
        closed, _ = weak_closure_bruteforce(G, E)
        if closed:
            detail["weakly_closed"] += 1
            ok = False
    return NAResult("pass" if ok else "fail", cond, len(family), detail)


def normal_abelian_check(G: EnumeratedGroup, A: Subgroup, module: Module,
                         offender_list: list[OffenderReport]) -> str:
    """No offender inside an abelian normal subgroup, given no central quadratics."""
    if central_quadratics(G, module) or not (G.is_abelian(A) and G.is_normal(A)):
        return "unmet"
    inside = [r for r in offender_list if r.subgroup.elements <= A.elements]
    return "fail" if inside else "pass"


def na_candidates(G: EnumeratedGroup) -> list[tuple[Subgroup, Subgroup]]:
    """(N, A) pairs worth testing: A abelian normal, N = C_G(A) when [N, N] <= A, and N = A."""
    whole = G.whole()
    Z = G.centre()
    Zs = Subgroup(Z, canonical_gens(G, Z))
    D = G.commutator_subgroup(whole, whole)
    cands = [Zs, D, G.subgroup(Zs.gens + D.gens)]
    out = []
    seen = set()
    for A in cands:
        if A.elements in seen or A.order == 1 or not G.is_abelian(A):
            continue
        seen.add(A.elements)
        N = G.centraliser(A)
        if G.commutator_subgroup(N, N).elements <= A.elements:
            out.append((N, A))
        if N.elements != A.elements:
            out.append((A, A))
    return out


# -- batched matrix engine for E(Omega) --------------------------------------------


def word_factor_table(omega: Omega, images, group: int = 6) -> list[np.ndarray]:
    """Matrices of every exponent pattern on consecutive runs of normal-form letters.

    Letter k < n is generator k; letter n + m is the commutator of pair m,
    formed as a^-1 b^-1 a b from the images. Letters are cut into runs of
    ``group``; run tables are indexed by the base-3 code of their exponents,
    so a word costs one product per run. Built from the images by matrix
    products only.
    """
    images = [gfp.as_f3(m) for m in images]
    if len(images) != omega.n:
        raise ValueError("need one image per generator")
    inverses = [matrix_inverse(m) for m in images]
    letters = list(images)
    for i, j in omega.pairs:
        letters.append(gfp.mat_mul(gfp.mat_mul(inverses[i], inverses[j]), gfp.mat_mul(images[i], images[j])))
    eye = np.broadcast_to(gfp.identity(images[0].shape[-1]), images[0].shape).astype(gfp.DTYPE)
    runs = []
    for start in range(0, len(letters), group):
        table = eye[None]
        for m in letters[start:start + group]:
            powers = np.stack([eye, m, gfp.mat_mul(m, m)])
            # index c + 3^pos * e: the new letter is the most significant digit
            table = gfp.mat_mul(table[None], powers[:, None]).reshape((-1,) + eye.shape)
        runs.append(table)
    return runs


def evaluate_many(rows: np.ndarray, runs: list[np.ndarray], group: int = 6) -> np.ndarray:
    """Matrices of many normal-form words at once."""
    rows = np.asarray(rows, dtype=np.int64)
    out = None
    for r, table in enumerate(runs):
        digits = rows[:, r * group:(r + 1) * group]
        code = digits @ (3 ** np.arange(digits.shape[1], dtype=np.int64))
        out = table[code] if out is None else gfp.mat_mul(out, table[code])
    return out


def engine_agreement(table: "Class2Table", images, rng: np.random.Generator, samples: int) -> dict:
    """Compare normal-form arithmetic with matrix products of evaluated words."""
    om = table.omega
    ftab = word_factor_table(om, images)
    a = rng.integers(table.order, size=samples)
    b = rng.integers(table.order, size=samples)
    inv = table.inverses()
    A, B = evaluate_many(table.rows[a], ftab), evaluate_many(table.rows[b], ftab)
    A2, B2 = gfp.mat_mul(A, A), gfp.mat_mul(B, B)
    eye = np.broadcast_to(gfp.identity(A.shape[-1]), A.shape)
    cubes_ok = np.all(gfp.mat_mul(A2, A) == eye, axis=tuple(range(1, A.ndim)))
    ab = table.mul_many(a, b)
    comm = table.mul_many(table.mul_many(inv[a], inv[b]), ab)
    conj = table.mul_many(table.mul_many(inv[b], a), b)
    axes = tuple(range(1, A.ndim))
    prod_ok = np.all(evaluate_many(table.rows[ab], ftab) == gfp.mat_mul(A, B), axis=axes)
    # inverses as squares, justified by the cube check above
    comm_ok = np.all(evaluate_many(table.rows[comm], ftab)
                     == gfp.mat_mul(gfp.mat_mul(A2, B2), gfp.mat_mul(A, B)), axis=axes)
    conj_ok = np.all(evaluate_many(table.rows[conj], ftab) == gfp.mat_mul(gfp.mat_mul(B2, A), B), axis=axes)
    bad = np.nonzero(~(cubes_ok & prod_ok & comm_ok & conj_ok))[0]
    return {
        "samples": int(samples),
        "products": int(prod_ok.sum()),
        "commutators": int(comm_ok.sum()),
        "conjugations": int(conj_ok.sum()),
        "first_mismatch": None if bad.size == 0 else [table.describe(int(a[bad[0]])),
                                                      table.describe(int(b[bad[0]]))],
    }


def block_flags(module, rows: np.ndarray, chunk: int = 4096) -> tuple[np.ndarray, np.ndarray]:
    """(trivial, square-zero) masks on V0-type modules for many H-elements.

    Each block only sees the (alpha, beta, delta) triples of its two pairs,
    so the 27 x 27 local cases are tabulated once.
    """
    om = module.omega
    n = om.n
    triples = np.array(list(itertools.product(range(3), repeat=3)))
    mats = np.zeros((27, 3, 3), dtype=np.int64)
    mats[:, 0, 0] = mats[:, 1, 1] = mats[:, 2, 2] = 1
    mats[:, 0, 1], mats[:, 1, 2], mats[:, 0, 2] = triples[:, 0], triples[:, 1], triples[:, 2]
    mats = gfp.as_f3(mats)
    big = gfp.as_f3(np.einsum("aij,bkl->abikjl", mats.astype(np.int64), mats.astype(np.int64))
                    .reshape(27, 27, 9, 9))
    nm = gfp.mat_sub(big, gfp.identity(9))
    local_triv = ~np.any(nm.reshape(27, 27, -1), axis=2)
    local_sq0 = ~np.any(gfp.mat_mul(nm, nm).reshape(27, 27, -1), axis=2)
    pair_k = {p: k for k, p in enumerate(om.pairs)}
    t = module._t

    def codes(r, i, j):
        al, be = r[:, i], r[:, j]
        if i < j:
            de = al * be + r[:, n + pair_k[(i, j)]]
        else:
            de = -r[:, n + pair_k[(j, i)]]
        return (al % 3) * 9 + (be % 3) * 3 + de % 3

    triv = np.ones(rows.shape[0], dtype=bool)
    sq0 = np.ones(rows.shape[0], dtype=bool)
    for s in range(0, rows.shape[0], chunk):
        r = rows[s:s + chunk].astype(np.int64)
        for (i, j, k, l) in t:
            c1, c2 = codes(r, i, j), codes(r, k, l)
            triv[s:s + chunk] &= local_triv[c1, c2]
            sq0[s:s + chunk] &= local_sq0[c1, c2]
    return triv, sq0


# -- instance builders ------------------------------------------------------------


@dataclass
class Instance:
    name: str
    G: EnumeratedGroup
    module: Module


def sym2_matrix(g) -> np.ndarray:
    """Action on the symmetric square, basis e_i e_j (i <= j) in lexicographic order."""
    g = np.asarray(g, dtype=np.int64)
    n = g.shape[0]
    idx = [(i, j) for i in range(n) for j in range(i, n)]
    pos = {p: k for k, p in enumerate(idx)}
    out = np.zeros((len(idx), len(idx)), dtype=np.int64)
    for k, (i, j) in enumerate(idx):
        for a in range(n):
            for b in range(n):
                if g[i, a] and g[j, b]:
                    out[k, pos[(min(a, b), max(a, b))]] += g[i, a] * g[j, b]
    return gfp.as_f3(out)


def direct_sum(*mats) -> np.ndarray:
    d = sum(m.shape[0] for m in mats)
    out = np.zeros((d, d), dtype=gfp.DTYPE)
    o = 0
    for m in mats:
        k = m.shape[0]
        out[o:o + k, o:o + k] = m
        o += k
    return out


def extraspecial_instance() -> Instance:
    from .class2 import V1_A, V1_B
    return Instance("E(a,b) on V1", enumerate_group([V1_A, V1_B]), MatrixModule(3, name="V1"))


def tripled_instance() -> Instance:
    from .class2 import V1_A, V1_B
    gens = [direct_sum(m, m, m) for m in (V1_A, V1_B)]
    return Instance("E(a,b) on V1+V1+V1", enumerate_group(gens), MatrixModule(9, name="3V1"))


def random_unitriangular(rng: np.random.Generator, n: int) -> np.ndarray:
    m = np.eye(n, dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.5:
                m[i, j] = rng.integers(1, 3)
    return gfp.as_f3(m)


def random_instances(rng: np.random.Generator, count: int, cap: int = 3 ** 6):
    """Seeded small instances: unitriangular groups on natural and symmetric-square modules,
    and 2-generated subgroups of E(Omega_4) on the 216-dimensional block module.

    Yields (instance or None, reason); instances over the cap are reported, not dropped.
    """
    from .class2 import SemidirectGroup, omega_of_size, random_h
    from .reps import BlockModule
    om4 = omega_of_size(4)
    mini = BlockModule(SemidirectGroup(om4))
    recipes = ("natural", "sym2", "natural+sym2", "mini-subgroup")
    for k in range(count):
        recipe = recipes[k % len(recipes)]
        if recipe == "mini-subgroup":
            gens = [mini.local_matrices(random_h(om4, rng)) for _ in range(2)]
            dim = mini.dim
        else:
            n = int(rng.integers(3, 5))
            base = [random_unitriangular(rng, n) for _ in range(int(rng.integers(2, 4)))]
            if recipe == "natural":
                gens = base
            elif recipe == "sym2":
                gens = [sym2_matrix(b) for b in base]
            else:
                gens = [direct_sum(b, sym2_matrix(b)) for b in base]
            dim = gens[0].shape[0]
        try:
            G = enumerate_group(gens, cap=cap)
        except BudgetExceeded:
            yield None, f"{recipe}: over cap"
            continue
        yield Instance(f"{recipe}#{k}", G, MatrixModule(dim, name=recipe)), "ok"
