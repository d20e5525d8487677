"""Normal-form arithmetic in the free class-two exponent-3 group and in H x| Q.

An element of ``H = E(Omega)`` is stored as

    prod_i g_i^{u_i}  *  prod_{i<j} [g_i, g_j]^{c_ij}

with generators taken in ``Omega`` order and commutators ``[x, y] = x^-1 y^-1 x y``.
The commutators are central, so multiplication only has to move generator
powers past each other; each swap of ``g_j^a`` past ``g_i^b`` (``i < j``)
contributes ``[g_i, g_j]^{-ab}``.

``Q`` elements are permutations of the positions of ``Omega``; the product
``q1 * q2`` means "apply q1, then q2", which makes ``h -> q_act(h, q)`` a right
action matching ``x_i^{sigma_x} = x_{i+1}``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, reduce

import numpy as np

from . import faults, gfp

P = 3

MAIN_LABELS = ("x1", "x2", "x3", "y1", "y2", "y3", "z1", "z2", "z3")


@dataclass(frozen=True)
class Omega:
    """Ordered generating set; its order fixes the commutator coordinates."""

    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) < 2:
            raise ValueError("Omega needs at least two labels")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("Omega labels must be distinct")

    @property
    def n(self) -> int:
        return len(self.labels)

    @cached_property
    def index(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.labels)}

    @cached_property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple(itertools.combinations(range(self.n), 2))

    @cached_property
    def pair_index(self) -> dict[tuple[int, int], int]:
        return {pr: k for k, pr in enumerate(self.pairs)}

    @property
    def npairs(self) -> int:
        return len(self.pairs)

    @property
    def log3_order(self) -> int:
        """Exponent n of |E(Omega)| = 3^n, counted from the coordinates."""
        return self.n + self.npairs

    def pos(self, label) -> int:
        if isinstance(label, int):
            return label
        return self.index[label]

    def pair_label(self, k: int) -> str:
        i, j = self.pairs[k]
        return f"[{self.labels[i]},{self.labels[j]}]"


def omega_of_size(n: int) -> Omega:
    if n == 9:
        return Omega(MAIN_LABELS)
    if n == 2:
        return Omega(("a", "b"))
    if n <= 26:
        return Omega(tuple("abcdefghijklmnopqrstuvwxyz"[:n]))
    raise ValueError(f"unsupported Omega size {n}")


@dataclass(frozen=True)
class HElement:
    omega: Omega = field(repr=False)
    u: tuple[int, ...]
    c: tuple[int, ...]

    def __mul__(self, other: "HElement") -> "HElement":
        return h_mul(self, other)

    def __pow__(self, k: int) -> "HElement":
        return h_pow(self, k)

    def inverse(self) -> "HElement":
        return h_inv(self)

    def is_identity(self) -> bool:
        return not any(self.u) and not any(self.c)

    def is_central(self) -> bool:
        """True iff the element lies in H' = Z(H)."""
        return not any(self.u)

    def __str__(self):
        return h_to_text(self)


def h_identity(omega: Omega) -> HElement:
    return HElement(omega, (0,) * omega.n, (0,) * omega.npairs)


def h_gen(omega: Omega, label) -> HElement:
    u = [0] * omega.n
    u[omega.pos(label)] = 1
    return HElement(omega, tuple(u), (0,) * omega.npairs)


def h_from(omega: Omega, u, c) -> HElement:
    u = tuple(int(x) % P for x in u)
    c = tuple(int(x) % P for x in c)
    if len(u) != omega.n or len(c) != omega.npairs:
        raise ValueError("coordinate length does not match Omega")
    return HElement(omega, u, c)


def _check(a: HElement, b: HElement):
    if a.omega is not b.omega and a.omega != b.omega:
        raise ValueError("elements live over different Omega")


def h_mul(a: HElement, b: HElement) -> HElement:
    _check(a, b)
    om = a.omega
    au, bu = a.u, b.u
    u = tuple((x + y) % P for x, y in zip(au, bu))
    if faults.active("collection-sign"):
        c = tuple((a.c[k] + b.c[k] + au[j] * bu[i]) % P for k, (i, j) in enumerate(om.pairs))
    else:
        c = tuple((a.c[k] + b.c[k] - au[j] * bu[i]) % P for k, (i, j) in enumerate(om.pairs))
    return HElement(om, u, c)


def h_inv(a: HElement) -> HElement:
    u = a.u
    c = tuple((-a.c[k] - u[i] * u[j]) % P for k, (i, j) in enumerate(a.omega.pairs))
    return HElement(a.omega, tuple((-x) % P for x in u), c)


def h_pow(a: HElement, k: int) -> HElement:
    # (u, c)^k = (k u, k c - binom(k, 2) u_i u_j); exponent 3 lets us reduce k
    k %= P
    b = k * (k - 1) // 2
    u = a.u
    c = tuple((k * a.c[t] - b * u[i] * u[j]) % P for t, (i, j) in enumerate(a.omega.pairs))
    return HElement(a.omega, tuple((k * x) % P for x in u), c)


def h_comm(a: HElement, b: HElement) -> HElement:
    """[a, b] = a^-1 b^-1 a b, central, bilinear in the generator exponents."""
    _check(a, b)
    au, bu = a.u, b.u
    c = tuple((au[i] * bu[j] - au[j] * bu[i]) % P for i, j in a.omega.pairs)
    return HElement(a.omega, (0,) * a.omega.n, c)


def h_comm_gen(omega: Omega, x, y) -> HElement:
    return h_comm(h_gen(omega, x), h_gen(omega, y))


def h_product(elements, omega: Omega | None = None) -> HElement:
    elements = list(elements)
    if not elements:
        if omega is None:
            raise ValueError("empty product needs an Omega")
        return h_identity(omega)
    return reduce(h_mul, elements)


def log_coords(h: HElement) -> np.ndarray:
    """Coordinates ``u ++ (c_ij + u_i u_j / 2)``.

    On any abelian subgroup of H these are additive, so abelian subgroups
    become linear subspaces of GF(3)^(n + n(n-1)/2).
    """
    u = h.u
    half = 2  # 1/2 in GF(3)
    c = [(h.c[k] + half * u[i] * u[j]) % P for k, (i, j) in enumerate(h.omega.pairs)]
    return np.array(list(u) + c, dtype=gfp.DTYPE)


def from_log_coords(omega: Omega, v) -> HElement:
    v = [int(x) % P for x in v]
    u = v[: omega.n]
    c = [(v[omega.n + k] - 2 * u[i] * u[j]) % P for k, (i, j) in enumerate(omega.pairs)]
    return HElement(omega, tuple(u), tuple(c))


def h_to_text(h: HElement) -> str:
    return "u: " + "".join(map(str, h.u)) + " | c: " + "".join(map(str, h.c))


def h_from_text(omega: Omega, text: str) -> HElement:
    try:
        left, right = text.split("|")
        u = left.strip().removeprefix("u:").strip()
        c = right.strip().removeprefix("c:").strip()
        return h_from(omega, [int(ch) for ch in u], [int(ch) for ch in c])
    except ValueError as exc:
        raise ValueError(f"cannot parse H element {text!r}") from exc


def random_h(omega: Omega, rng: np.random.Generator, central: bool = False) -> HElement:
    u = (0,) * omega.n if central else tuple(int(x) for x in rng.integers(0, P, omega.n))
    c = tuple(int(x) for x in rng.integers(0, P, omega.npairs))
    return HElement(omega, u, c)


# -- the 3x3 projections f_{a,b} : E(Omega) -> E(a,b) ------------------------

V1_A = np.array([[1, 1, 0], [0, 1, 0], [0, 0, 1]], dtype=gfp.DTYPE)
V1_B = np.array([[1, 0, 0], [0, 1, 1], [0, 0, 1]], dtype=gfp.DTYPE)
V1_C = np.array([[1, 0, 1], [0, 1, 0], [0, 0, 1]], dtype=gfp.DTYPE)


def _antisym(h: HElement) -> np.ndarray:
    n = h.omega.n
    cm = np.zeros((n, n), dtype=np.int64)
    for k, (i, j) in enumerate(h.omega.pairs):
        cm[i, j] = h.c[k]
        cm[j, i] = -h.c[k]
    return cm


def pair_projections(h: HElement) -> np.ndarray:
    """All ordered-pair projections at once, shape ``(n, n, 3, 3)``.

    The image of ``h`` in ``E(a, b)`` is ``I + alpha E12 + beta E23 + delta E13``
    where ``alpha, beta`` are the exponents of ``a, b`` and ``delta`` collects
    the ``[a, b]`` exponent plus the reordering term ``alpha beta`` when ``a``
    precedes ``b`` in Omega. Diagonal entries ``(a, a)`` are meaningless.
    """
    n = h.omega.n
    u = np.array(h.u, dtype=np.int64)
    alpha = np.broadcast_to(u[:, None], (n, n))
    beta = np.broadcast_to(u[None, :], (n, n))
    order = np.triu(np.ones((n, n), dtype=np.int64), 1)
    delta = alpha * beta * order
    if not faults.active("v1-commutator"):
        delta = delta + _antisym(h)
    out = np.zeros((n, n, 3, 3), dtype=np.int64)
    out[:, :, 0, 0] = out[:, :, 1, 1] = out[:, :, 2, 2] = 1
    out[:, :, 0, 1] = alpha
    out[:, :, 1, 2] = beta
    out[:, :, 0, 2] = delta
    return gfp.as_f3(out)


def projection_f(h: HElement, pair) -> np.ndarray:
    """Image of ``h`` under ``E(Omega) -> E(a, b)`` realised by the 3x3 matrices."""
    a, b = (h.omega.pos(x) for x in pair)
    if a == b:
        raise ValueError("projection needs two distinct labels")
    return pair_projections(h)[a, b]


def evaluate(h: HElement, images) -> np.ndarray:
    """Evaluate the normal-form word of ``h`` on matrix images of the generators.

    Uses only matrix products and inverses of the supplied images; no group
    arithmetic. ``images`` may be square matrices or stacks of blocks.
    """
    om = h.omega
    images = [np.asarray(m) for m in images]
    eye = np.broadcast_to(gfp.identity(images[0].shape[-1]), images[0].shape).copy()
    inverses = [matrix_inverse(m) for m in images]
    out = eye
    for i, e in enumerate(h.u):
        if e:
            out = gfp.mat_mul(out, gfp.mat_pow(images[i], e))
    for k, (i, j) in enumerate(om.pairs):
        e = h.c[k]
        if e:
            comm = gfp.mat_mul(gfp.mat_mul(inverses[i], inverses[j]), gfp.mat_mul(images[i], images[j]))
            out = gfp.mat_mul(out, gfp.mat_pow(comm, e))
    return out


def matrix_inverse(m) -> np.ndarray:
    """Inverse of a matrix (or block stack) of 3-power order, as m^(3^k - 1)."""
    m = np.asarray(m)
    eye = np.broadcast_to(gfp.identity(m.shape[-1]), m.shape)
    order, power = 1, m
    while not np.array_equal(power, eye):
        power = gfp.mat_pow(power, 3)
        order *= 3
        if order > 3 ** 12:
            raise ValueError("matrix is not of 3-power order")
    return gfp.mat_pow(m, order - 1)


# -- Q as a permutation group on positions ---------------------------------


@dataclass(frozen=True)
class QElement:
    perm: tuple[int, ...]

    def __mul__(self, other: "QElement") -> "QElement":
        # self first, then other
        return QElement(tuple(other.perm[i] for i in self.perm))

    def inverse(self) -> "QElement":
        inv = [0] * len(self.perm)
        for i, j in enumerate(self.perm):
            inv[j] = i
        return QElement(tuple(inv))

    def __pow__(self, k: int) -> "QElement":
        if k < 0:
            return self.inverse() ** (-k)
        out = QElement(tuple(range(len(self.perm))))
        for _ in range(k):
            out = out * self
        return out

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.perm))

    def __call__(self, i: int) -> int:
        return self.perm[i]

    def __str__(self):
        return " ".join(str(x) for x in self.perm)


def q_identity(n: int) -> QElement:
    return QElement(tuple(range(n)))


def perm_from_cycles(n: int, cycles) -> QElement:
    perm = list(range(n))
    for cyc in cycles:
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            perm[a] = b
    return QElement(tuple(perm))


def wreath_generators(omega: Omega) -> dict[str, QElement]:
    """sigma_x, sigma_y, sigma_z and tau for the 9-point main construction."""
    if omega.labels != MAIN_LABELS:
        raise ValueError("the wreath product is defined on x1..z3 only")
    ix = omega.index
    blocks = {s: [ix[f"{s}{i}"] for i in (1, 2, 3)] for s in "xyz"}
    gens = {f"sigma_{s}": perm_from_cycles(9, [blocks[s]]) for s in "xyz"}
    if faults.active("tau-generator"):
        gens["tau"] = perm_from_cycles(9, [[ix["x1"], ix["y1"], ix["z1"]]])
    else:
        gens["tau"] = perm_from_cycles(9, [[ix[f"x{i}"], ix[f"y{i}"], ix[f"z{i}"]] for i in (1, 2, 3)])
    return gens


def closure(gens, identity) -> list:
    """All products of ``gens``; sorted for determinism when elements are orderable."""
    seen = {identity}
    frontier = [identity]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = x * g
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return sorted(seen, key=lambda q: q.perm) if isinstance(identity, QElement) else list(seen)


def q_act(h: HElement, q: QElement) -> HElement:
    """h^q: generator g_i goes to g_{q(i)}, followed by re-collection into normal form."""
    om = h.omega
    pi = om.pair_index
    perm = q.perm
    u = [0] * om.n
    for i, e in enumerate(h.u):
        u[perm[i]] = e
    c = [0] * om.npairs
    skip_inversions = faults.active("q-action-inversions")
    for k, (i, j) in enumerate(om.pairs):
        a, b = perm[i], perm[j]
        if a < b:
            c[pi[a, b]] += h.c[k]
        else:
            # [g_a, g_b] = [g_b, g_a]^-1, and g_a^{u_i} now precedes g_b^{u_j}
            t = pi[b, a]
            c[t] -= h.c[k]
            if not skip_inversions:
                c[t] -= h.u[i] * h.u[j]
    return HElement(om, tuple(u), tuple(x % P for x in c))


def q_matrix_on_commutators(omega: Omega, q: QElement) -> np.ndarray:
    """Row-action matrix of q on the commutator space H' (a signed permutation)."""
    m = np.zeros((omega.npairs, omega.npairs), dtype=gfp.DTYPE)
    zero_u = (0,) * omega.n
    for k in range(omega.npairs):
        e = [0] * omega.npairs
        e[k] = 1
        m[k] = q_act(HElement(omega, zero_u, tuple(e)), q).c
    return m


# -- G = H x| Q ---------------------------------------------------------------


@dataclass(frozen=True)
class GElement:
    h: HElement
    q: QElement

    def __mul__(self, other: "GElement") -> "GElement":
        return g_mul(self, other)

    def inverse(self) -> "GElement":
        return g_inv(self)

    def is_identity(self) -> bool:
        return self.h.is_identity() and self.q.is_identity()

    def in_H(self) -> bool:
        return self.q.is_identity()

    def __str__(self):
        return g_to_text(self)


def g_mul(a: GElement, b: GElement) -> GElement:
    """(h1, q1)(h2, q2) = (h1 * h2^(q1^-1), q1 q2)."""
    return GElement(h_mul(a.h, q_act(b.h, a.q.inverse())), a.q * b.q)


def g_inv(a: GElement) -> GElement:
    return GElement(q_act(h_inv(a.h), a.q), a.q.inverse())


def g_conj(a: GElement, g: GElement) -> GElement:
    """a^g = g^-1 a g."""
    return g_mul(g_inv(g), g_mul(a, g))


def g_comm(a: GElement, b: GElement) -> GElement:
    return g_mul(g_mul(g_inv(a), g_inv(b)), g_mul(a, b))


def g_pow(a: GElement, k: int) -> GElement:
    if k < 0:
        return g_pow(g_inv(a), -k)
    out = GElement(h_identity(a.h.omega), q_identity(a.h.omega.n))
    for _ in range(k):
        out = g_mul(out, a)
    return out


def g_to_text(g: GElement) -> str:
    return h_to_text(g.h) + " | q: " + str(g.q)


def g_from_text(omega: Omega, text: str) -> GElement:
    head, _, qpart = text.rpartition("| q:")
    if not head:
        raise ValueError(f"cannot parse G element {text!r}")
    perm = tuple(int(t) for t in qpart.split())
    if sorted(perm) != list(range(omega.n)):
        raise ValueError("q part is not a permutation")
    return GElement(h_from_text(omega, head), QElement(perm))


class SemidirectGroup:
    """G = E(Omega) x| Q for a permutation group Q given by named generators."""

    def __init__(self, omega: Omega, q_gens: dict[str, QElement] | None = None):
        self.omega = omega
        self.q_gens = dict(q_gens or {})
        self.q_id = q_identity(omega.n)
        self.Q = closure(list(self.q_gens.values()), self.q_id)
        self._q_log3 = _log3_exact(len(self.Q))

    @property
    def log3_order(self) -> int | None:
        """log_3 |G| from the coordinate count of H and |Q|; None if |Q| is not a 3-power."""
        if self._q_log3 is None:
            return None
        return self.omega.log3_order + self._q_log3

    def identity(self) -> GElement:
        return GElement(h_identity(self.omega), self.q_id)

    def embed(self, h: HElement) -> GElement:
        return GElement(h, self.q_id)

    def gen(self, label) -> GElement:
        return self.embed(h_gen(self.omega, label))

    def comm_gen(self, x, y) -> GElement:
        return self.embed(h_comm_gen(self.omega, x, y))

    def qel(self, name_or_q) -> GElement:
        q = self.q_gens[name_or_q] if isinstance(name_or_q, str) else name_or_q
        return GElement(h_identity(self.omega), q)

    def random(self, rng: np.random.Generator) -> GElement:
        q = self.Q[int(rng.integers(len(self.Q)))]
        return GElement(random_h(self.omega, rng), q)

    def random_h(self, rng: np.random.Generator, central: bool = False) -> GElement:
        return self.embed(random_h(self.omega, rng, central=central))


def _log3_exact(m: int) -> int | None:
    k = 0
    while m % 3 == 0:
        m //= 3
        k += 1
    return k if m == 1 else None


def main_group() -> SemidirectGroup:
    omega = Omega(MAIN_LABELS)
    return SemidirectGroup(omega, wreath_generators(omega))


# -- centre, orbit products, the subgroup E ----------------------------------


def center_of_G(G: SemidirectGroup) -> list[HElement]:
    """Basis of the Q-fixed subspace of the commutator space H' = Z(H)."""
    om = G.omega
    blocks = [gfp.mat_sub(q_matrix_on_commutators(om, q), gfp.identity(om.npairs))
              for q in G.q_gens.values()]
    if not blocks:
        basis = gfp.identity(om.npairs)
    else:
        basis = gfp.kernel_basis(np.hstack(blocks))
    zero_u = (0,) * om.n
    return [HElement(om, zero_u, tuple(int(x) for x in row)) for row in basis]


def orbit_product(h: HElement, Q) -> HElement:
    if not h.is_central():
        raise ValueError("orbit products are only defined for central elements")
    images = {q_act(h, q) for q in Q}
    return h_product(sorted(images, key=lambda x: x.c), h.omega)


def orbit_size(h: HElement, Q) -> int:
    return len({q_act(h, q) for q in Q})


def support(h: HElement) -> int:
    return sum(1 for x in h.c if x) + sum(1 for x in h.u if x)


class ElementaryAbelianSubgroup:
    """Elementary abelian subgroup of H, kept as a subspace in log coordinates."""

    def __init__(self, gens):
        gens = [g.h if isinstance(g, GElement) else g for g in gens]
        if not gens:
            raise ValueError("need at least one generator")
        self.omega = gens[0].omega
        for a, b in itertools.combinations(gens, 2):
            if not h_comm(a, b).is_identity():
                raise ValueError("generators do not commute")
        for g in gens:
            if not h_pow(g, 3).is_identity():
                raise ValueError("generator of order not dividing 3")
        self.gens = tuple(gens)
        self.basis = gfp.row_basis(np.vstack([log_coords(g) for g in gens]))

    @property
    def order_log3(self) -> int:
        return self.basis.shape[0]

    def contains(self, h) -> bool:
        if isinstance(h, GElement):
            if not h.in_H():
                return False
            h = h.h
        return gfp.in_row_space(log_coords(h), self.basis)

    def central_part(self) -> "np.ndarray":
        """Basis of E meet H' in log coordinates."""
        n = self.omega.n
        sub = self.basis[:, :n]
        if self.basis.shape[0] == 0:
            return self.basis
        # rows of basis combinations with vanishing u-part
        ker = gfp.kernel_basis(sub)
        if ker.shape[0] == 0:
            return np.zeros((0, self.basis.shape[1]), dtype=gfp.DTYPE)
        return gfp.row_basis(gfp.mat_mul(ker, self.basis))

    def elements(self) -> list[HElement]:
        out = []
        for coeffs in itertools.product(range(P), repeat=self.order_log3):
            v = gfp.mat_mul(np.array(coeffs, dtype=np.int64), self.basis) if coeffs else []
            out.append(from_log_coords(self.omega, v))
        return out


def build_E(G: SemidirectGroup, base: str = "x1") -> ElementaryAbelianSubgroup:
    om = G.omega
    x = h_gen(om, base)
    gens = [x] + [h_comm(x, h_gen(om, a)) for a in om.labels if a != base]
    return ElementaryAbelianSubgroup(gens)


@dataclass
class CheckResult:
    passed: bool
    detail: dict = field(default_factory=dict)
    witness: object = None


def weak_closure_structural(G: SemidirectGroup, E: ElementaryAbelianSubgroup,
                            rng: np.random.Generator, samples: int = 100,
                            base: str = "x1") -> CheckResult:
    """Structural weak-closure certificate for E = <x1, [x1, a]> in the main construction.

    (i)   K = <H, sigma_y, sigma_z> normalises E (checked on generators);
    (ii)  for each nontrivial coset representative r = sigma_x^i tau^j,
          [x1, x1^r] != 1;
    (iii) x1^(k r) lies in x1^r H' for sampled k in K, so (ii) holds on whole cosets.
    """
    om = G.omega
    x1 = G.gen(base)
    k_gens = [G.gen(a) for a in om.labels] + [G.qel("sigma_y"), G.qel("sigma_z")]
    detail: dict = {}

    bad_i = None
    count_i = 0
    for e in E.gens:
        eg = G.embed(e)
        for k in k_gens:
            count_i += 1
            if not E.contains(g_conj(eg, k)):
                bad_i = (g_to_text(eg), g_to_text(k))
                break
        if bad_i:
            break
    detail["normaliser_checks"] = count_i
    detail["normaliser_ok"] = bad_i is None

    sx, tau = G.q_gens["sigma_x"], G.q_gens["tau"]
    reps = [(i, j, (sx ** i) * (tau ** j)) for j in range(3) for i in range(3) if (i, j) != (0, 0)]
    bad_ii = None
    comms = {}
    for i, j, r in reps:
        xr = g_conj(x1, G.qel(r))
        cm = h_comm(x1.h, xr.h)
        comms[f"sigma_x^{i} tau^{j}"] = h_to_text(cm)
        if cm.is_identity() or not xr.in_H():
            bad_ii = f"sigma_x^{i} tau^{j}"
    detail["coset_reps"] = len(reps)
    detail["coset_commutators_ok"] = bad_ii is None

    kq = closure([G.q_gens["sigma_y"], G.q_gens["sigma_z"]], G.q_id)
    bad_iii = None
    n_iii = 0
    for _ in range(samples):
        k = GElement(random_h(om, rng), kq[int(rng.integers(len(kq)))])
        for i, j, r in reps:
            n_iii += 1
            lhs = g_conj(x1, g_mul(k, G.qel(r)))
            rhs = g_conj(x1, G.qel(r))
            diff = g_mul(lhs, g_inv(rhs))
            if not (diff.in_H() and diff.h.is_central()):
                bad_iii = (g_to_text(k), f"sigma_x^{i} tau^{j}")
    detail["coset_samples"] = n_iii
    detail["coset_independence_ok"] = bad_iii is None

    passed = bad_i is None and bad_ii is None and bad_iii is None
    witness = bad_i or bad_ii or bad_iii
    return CheckResult(passed, detail, witness)


def lemma42_elements(G: SemidirectGroup) -> dict[str, HElement]:
    """The commutator products used to rule out quadratic elements outside H."""
    om = G.omega
    cg = lambda a, b: h_comm_gen(om, a, b)  # noqa: E731
    w = h_product([h_mul(cg(f"x{i}", f"y{j}"), cg(f"x{i}", f"z{j}"))
                   for i in (1, 2, 3) for j in (1, 2, 3)])
    w_prime = h_product([
        h_product([h_inv(cg("x1", f"y{i}")), h_inv(cg("x1", f"z{i}")),
                   cg("x2", f"y{i}"), cg("x2", f"z{i}")])
        for i in (1, 2, 3)])
    c1 = orbit_product(cg("x1", "x2"), G.Q)
    c2 = orbit_product(cg("x1", "y1"), G.Q)
    return {"w": w, "w_prime": w_prime, "c1": c1, "c2": c2}


def lemma42_identities(G: SemidirectGroup, rng: np.random.Generator, samples: int = 50) -> CheckResult:
    """Commutator identities behind "every quadratic element lies in H".

    * w = prod [x_i, y_j][x_i, z_j] is fixed by sigma_x, sigma_y, sigma_z and by H;
    * [w, g] = c2 for g in K tau and c2^2 for g in K tau^2;
    * [w', k] = w for k in H <sigma_y, sigma_z> sigma_x, where
      w' = prod_i [x1, y_i]^-1 [x1, z_i]^-1 [x2, y_i][x2, z_i].
    """
    el = lemma42_elements(G)
    w, wp, c2 = el["w"], el["w_prime"], el["c2"]
    W, WP = G.embed(w), G.embed(wp)
    detail = {}
    ok = True
    inv_sigma = all(q_act(w, G.q_gens[s]) == w for s in ("sigma_x", "sigma_y", "sigma_z"))
    inv_h = all(g_conj(W, G.random_h(rng)) == W for _ in range(samples))
    detail["w_sigma_invariant"] = inv_sigma
    detail["w_H_invariant"] = inv_h
    ok &= inv_sigma and inv_h

    kq = closure([G.q_gens["sigma_y"], G.q_gens["sigma_z"]], G.q_id)
    tau, sx = G.q_gens["tau"], G.q_gens["sigma_x"]
    c2sq = h_pow(c2, 2)
    tau_ok = tau2_ok = sx_ok = True
    for _ in range(samples):
        k = GElement(random_h(G.omega, rng), kq[int(rng.integers(len(kq)))])
        g1 = g_mul(k, G.qel(tau))
        g2 = g_mul(k, G.qel(tau * tau))
        g3 = g_mul(k, G.qel(sx))
        tau_ok &= g_comm(W, g1) == G.embed(c2)
        tau2_ok &= g_comm(W, g2) == G.embed(c2sq)
        sx_ok &= g_comm(WP, g3) == W
    detail["comm_w_Ktau_is_c2"] = tau_ok
    detail["comm_w_Ktau2_is_c2_squared"] = tau2_ok
    detail["comm_wprime_Ksigmax_is_w"] = sx_ok
    detail["samples"] = samples
    ok &= tau_ok and tau2_ok and sx_ok
    return CheckResult(bool(ok), detail)


# -- vectorised arithmetic for small Omega (used by the toolkit) -------------


def batch_mul(omega: Omega, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Multiply stacks of coordinate rows ``(N, n + npairs)`` elementwise."""
    n = omega.n
    ii = np.array([i for i, _ in omega.pairs])
    jj = np.array([j for _, j in omega.pairs])
    out = (a.astype(np.int64) + b.astype(np.int64))
    sign = 1 if faults.active("collection-sign") else -1
    out[:, n:] += sign * a[:, jj].astype(np.int64) * b[:, ii].astype(np.int64)
    return np.mod(out, P).astype(gfp.DTYPE)


def coords(h: HElement) -> np.ndarray:
    return np.array(h.u + h.c, dtype=gfp.DTYPE)


def from_coords(omega: Omega, v) -> HElement:
    v = [int(x) % P for x in v]
    return HElement(omega, tuple(v[: omega.n]), tuple(v[omega.n:]))


def encode(rows: np.ndarray) -> np.ndarray:
    """Base-3 integer code of coordinate rows (exact for up to 39 coordinates)."""
    rows = np.atleast_2d(rows).astype(np.int64)
    if rows.shape[1] > 39:
        raise ValueError("too many coordinates for an int64 code")
    weights = 3 ** np.arange(rows.shape[1], dtype=np.int64)
    return rows @ weights


def all_elements(omega: Omega) -> np.ndarray:
    """Every element of E(Omega) as coordinate rows, in code order."""
    m = omega.log3_order
    if m > 13:
        raise ValueError("group too large to enumerate")
    codes = np.arange(3 ** m, dtype=np.int64)
    digits = (codes[:, None] // (3 ** np.arange(m, dtype=np.int64))[None, :]) % 3
    return digits.astype(gfp.DTYPE)
