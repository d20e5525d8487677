"""The modules V1 (3-dim), V2 = V1 (x) V1 (9-dim) and the block module V0.

V0 is the direct sum of copies of V2(a, b; c, d), one for every 4-tuple of
distinct labels. An element ``(h, q)`` of G sends block ``t`` to block
``t^q`` after applying the 9x9 matrix of ``h`` on block ``t``, so its action
is stored as a :class:`BlockOperator`: an index permutation plus one local
matrix per source block.

Everything uses row vectors acting on the right.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import gfp
from .class2 import (
    GElement,
    HElement,
    Omega,
    QElement,
    SemidirectGroup,
    pair_projections,
    projection_f,
)

P = 3


class CouplingError(RuntimeError):
    """A fixed-space system couples more blocks than the configured bound."""


def v1_matrix(e: HElement, pair) -> np.ndarray:
    """3x3 image of ``e`` in V1(a, b)."""
    return projection_f(e, pair)


def v2_matrix(e: HElement, idx) -> np.ndarray:
    """9x9 image of ``e`` in V2(a, b; c, d) = V1(a, b) (x) V1(c, d)."""
    a, b, c, d = idx
    if len({e.omega.pos(x) for x in idx}) != 4:
        raise ValueError("summand index needs four distinct labels")
    return gfp.kronecker(projection_f(e, (a, b)), projection_f(e, (c, d)))


@dataclass(frozen=True)
class JValue:
    """log_3 of j_H(V) = |H| |C_V(H)| / |V|."""

    log3: int

    @property
    def is_offender(self) -> bool:
        return self.log3 >= 0

    def as_fraction(self) -> str:
        return f"3^{self.log3}"


@dataclass
class BlockOperator:
    """Action of one group element on a block module.

    ``perm[t]`` is the target block of source block ``t`` and ``local[t]`` the
    matrix applied on the way.
    """

    perm: np.ndarray
    local: np.ndarray

    @property
    def nblocks(self) -> int:
        return self.perm.shape[0]

    def compose(self, other: "BlockOperator") -> "BlockOperator":
        """self followed by other."""
        return BlockOperator(other.perm[self.perm], gfp.mat_mul(self.local, other.local[self.perm]))

    def is_block_diagonal(self) -> bool:
        return bool(np.all(self.perm == np.arange(self.nblocks)))

    def is_identity(self) -> bool:
        eye = gfp.identity(self.local.shape[-1])
        return self.is_block_diagonal() and bool(np.all(self.local == eye))

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Image of a dense block vector of shape ``(nblocks, block_dim)``."""
        out = np.zeros_like(v)
        out[self.perm] = gfp.mat_mul(v[:, None, :], self.local)[:, 0, :]
        return out

    def __eq__(self, other):
        return (isinstance(other, BlockOperator)
                and np.array_equal(self.perm, other.perm)
                and np.array_equal(self.local, other.local))


@dataclass
class BlockVector:
    """Sparse vector of a block module: block index -> 9-vector; absent blocks are zero."""

    nblocks: int
    blocks: dict[int, np.ndarray] = field(default_factory=dict)

    def to_dense(self, block_dim: int = 9) -> np.ndarray:
        out = np.zeros((self.nblocks, block_dim), dtype=gfp.DTYPE)
        for t, v in self.blocks.items():
            out[t] = v
        return out

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "BlockVector":
        nz = np.nonzero(np.any(dense, axis=1))[0]
        return cls(dense.shape[0], {int(t): dense[t].copy() for t in nz})

    def __add__(self, other: "BlockVector") -> "BlockVector":
        out = {t: v.copy() for t, v in self.blocks.items()}
        for t, v in other.blocks.items():
            out[t] = gfp.mat_add(out[t], v) if t in out else v.copy()
        return BlockVector(self.nblocks, {t: v for t, v in out.items() if np.any(v)})

    def apply(self, op: BlockOperator) -> "BlockVector":
        out = {}
        for t, v in self.blocks.items():
            w = gfp.mat_mul(v, op.local[t])
            tgt = int(op.perm[t])
            out[tgt] = gfp.mat_add(out[tgt], w) if tgt in out else w
        return BlockVector(self.nblocks, {t: v for t, v in out.items() if np.any(v)})


class Module:
    """Common interface: a finite-dimensional right GF(3)-module of some group."""

    dim: int

    def fixed_space_dim(self, gens) -> int:
        raise NotImplementedError

    def is_quadratic_element(self, g) -> bool:
        raise NotImplementedError

    def pair_annihilates(self, g, h) -> bool:
        """[V, g, h] = 0, i.e. (g - 1)(h - 1) = 0."""
        raise NotImplementedError


class MatrixModule(Module):
    """Explicit module: ``action(g)`` returns the matrix of ``g``.

    The matrix may also be a block-diagonal stack of shape ``(k, d, d)``; the
    module is then the direct sum of the ``k`` blocks. With ``action=None``
    the group elements are themselves matrices.
    """

    def __init__(self, dim: int, action=None, name: str = "matrix"):
        self.dim = dim
        self.action = action or (lambda g: np.asarray(g))
        self.name = name

    def matrix(self, g) -> np.ndarray:
        m = np.asarray(self.action(g))
        size = m.shape[-1] * (m.shape[0] if m.ndim == 3 else 1)
        if m.shape[-1] != m.shape[-2] or size != self.dim:
            raise ValueError(f"action gave shape {m.shape} for a module of dimension {self.dim}")
        return m

    def minus_one(self, g) -> np.ndarray:
        m = self.matrix(g)
        return gfp.mat_sub(m, np.broadcast_to(gfp.identity(m.shape[-1]), m.shape))

    def _stack(self, gens) -> np.ndarray:
        mats = [self.minus_one(g) for g in gens]
        mats = [m if m.ndim == 3 else m[None] for m in mats]
        return np.concatenate(mats, axis=2)

    def fixed_space_blocks(self, gens) -> list[np.ndarray]:
        """Per-block bases of the joint fixed space (one block unless the action is stacked)."""
        gens = list(gens)
        if not gens:
            raise ValueError("need at least one generator to read off the block shape")
        return [gfp.kernel_basis(block) for block in self._stack(gens)]

    def fixed_space(self, gens) -> np.ndarray:
        gens = list(gens)
        if not gens:
            return gfp.identity(self.dim)
        blocks = self.fixed_space_blocks(gens)
        if len(blocks) == 1:
            return blocks[0]
        d = self.dim // len(blocks)
        rows = []
        for t, basis in enumerate(blocks):
            for v in basis:
                full = np.zeros(self.dim, dtype=gfp.DTYPE)
                full[t * d:(t + 1) * d] = v
                rows.append(full)
        return np.array(rows, dtype=gfp.DTYPE).reshape(len(rows), self.dim)

    def fixed_space_dim(self, gens) -> int:
        gens = list(gens)
        if not gens:
            return self.dim
        stack = self._stack(gens)
        return int((stack.shape[1] - gfp.batch_rank(stack)).sum())

    def is_quadratic_element(self, g) -> bool:
        n = self.minus_one(g)
        return not gfp.is_zero(n) and gfp.is_zero(gfp.mat_mul(n, n))

    def pair_annihilates(self, g, h) -> bool:
        return gfp.is_zero(gfp.mat_mul(self.minus_one(g), self.minus_one(h)))


def v1_module(omega: Omega, pair=None) -> MatrixModule:
    pair = pair or omega.labels[:2]
    return MatrixModule(3, lambda g: v1_matrix(_as_h(g), pair), name=f"V1{tuple(pair)}")


def v2_module(omega: Omega, idx=None) -> MatrixModule:
    idx = idx or omega.labels[:4]
    return MatrixModule(9, lambda g: v2_matrix(_as_h(g), idx), name=f"V2{tuple(idx)}")


def _as_h(g) -> HElement:
    if isinstance(g, GElement):
        if not g.in_H():
            raise ValueError("element has a nontrivial Q-part")
        return g.h
    return g


class BlockModule(Module):
    """V0 = sum over 4-tuples of distinct labels of V2(a, b; c, d), for G = H x| Q.

    With the 9-point Omega and the wreath product this is the 27216-dimensional
    module of the main construction; with |Omega| = 4 and trivial Q it is the
    216-dimensional mini-instance.
    """

    block_dim = 9

    def __init__(self, G: SemidirectGroup, cycle_bound: int = 81):
        self.G = G
        self.omega = G.omega
        self.cycle_bound = cycle_bound
        self.tuples: list[tuple[int, int, int, int]] = list(itertools.permutations(range(self.omega.n), 4))
        self.index = {t: k for k, t in enumerate(self.tuples)}
        tarr = np.array(self.tuples, dtype=np.int64)
        self._t = tarr
        self.dim = self.block_dim * len(self.tuples)
        self._perm_cache: dict[QElement, np.ndarray] = {}

    @property
    def nblocks(self) -> int:
        return len(self.tuples)

    def label(self, t: int) -> str:
        return "(" + ",".join(self.omega.labels[i] for i in self.tuples[t]) + ")"

    def block_of(self, labels) -> int:
        return self.index[tuple(self.omega.pos(x) for x in labels)]

    def block_perm(self, q: QElement) -> np.ndarray:
        if q not in self._perm_cache:
            perm = np.array(q.perm, dtype=np.int64)
            self._perm_cache[q] = np.array([self.index[tuple(perm[list(t)])] for t in self.tuples],
                                           dtype=np.int64)
        return self._perm_cache[q]

    def local_matrices(self, h: HElement) -> np.ndarray:
        proj = pair_projections(h)
        t = self._t
        return gfp.batch_kronecker(proj[t[:, 0], t[:, 1]], proj[t[:, 2], t[:, 3]])

    def operator(self, g) -> BlockOperator:
        if isinstance(g, HElement):
            return BlockOperator(np.arange(self.nblocks), self.local_matrices(g))
        return BlockOperator(self.block_perm(g.q), self.local_matrices(g.h))

    def dense_matrix(self, g) -> np.ndarray:
        """Full matrix of the action; only sensible for small instances."""
        op = self.operator(g)
        d = self.block_dim
        out = np.zeros((self.dim, self.dim), dtype=gfp.DTYPE)
        for t in range(self.nblocks):
            s = int(op.perm[t])
            out[t * d:(t + 1) * d, s * d:(s + 1) * d] = op.local[t]
        return out

    # -- fixed spaces -------------------------------------------------------

    def fixed_space_dims_blockwise(self, gens) -> np.ndarray:
        """Per-block fixed-space dimensions for block-diagonal generators."""
        gens = list(gens)
        d = self.block_dim
        if not gens:
            return np.full(self.nblocks, d, dtype=np.int64)
        eye = gfp.identity(d)
        locals_ = []
        for g in gens:
            op = self.operator(g)
            if not op.is_block_diagonal():
                raise ValueError("generator moves blocks")
            locals_.append(gfp.mat_sub(op.local, eye))
        stacked = np.concatenate(locals_, axis=2)
        return d - gfp.batch_rank(stacked)

    def fixed_space_dim(self, gens) -> int:
        gens = list(gens)
        ops = [self.operator(g) for g in gens]
        if all(op.is_block_diagonal() for op in ops):
            return int(self.fixed_space_dims_blockwise(gens).sum())
        return self._coupled_fixed_dim(ops)

    def _orbits(self, perms) -> list[list[int]]:
        seen = np.zeros(self.nblocks, dtype=bool)
        orbits = []
        for start in range(self.nblocks):
            if seen[start]:
                continue
            orb = [start]
            seen[start] = True
            k = 0
            while k < len(orb):
                t = orb[k]
                for p in perms:
                    s = int(p[t])
                    if not seen[s]:
                        seen[s] = True
                        orb.append(s)
                k += 1
            orbits.append(sorted(orb))
        return orbits

    def _coupled_fixed_dim(self, ops) -> int:
        d = self.block_dim
        total = 0
        for orb in self._orbits([op.perm for op in ops]):
            if len(orb) > self.cycle_bound:
                raise CouplingError(f"orbit of {len(orb)} blocks exceeds bound {self.cycle_bound}")
            pos = {t: k for k, t in enumerate(orb)}
            m = len(orb) * d
            mats = []
            for op in ops:
                full = np.zeros((m, m), dtype=gfp.DTYPE)
                for t in orb:
                    s = pos[int(op.perm[t])]
                    full[pos[t] * d:(pos[t] + 1) * d, s * d:(s + 1) * d] = op.local[t]
                mats.append(gfp.mat_sub(full, gfp.identity(m)))
            total += m - gfp.rank(np.hstack(mats))
        return total

    # -- quadratic action -----------------------------------------------------

    def square_minus_one(self, g) -> dict[int, np.ndarray]:
        """(rho(g) - 1)^2 as sparse (source, target) blocks, zero blocks dropped.

        Expands to rho^2 - 2 rho + 1 and sums the contributions that land in
        the same target block.
        """
        op = self.operator(g)
        op2 = op.compose(op)
        eye = gfp.identity(self.block_dim)
        out: dict[tuple[int, int], np.ndarray] = {}
        for t in range(self.nblocks):
            terms = [(int(op2.perm[t]), op2.local[t].astype(np.int64)),
                     (int(op.perm[t]), -2 * op.local[t].astype(np.int64)),
                     (t, eye.astype(np.int64))]
            acc: dict[int, np.ndarray] = {}
            for tgt, m in terms:
                acc[tgt] = acc[tgt] + m if tgt in acc else m
            for tgt, m in acc.items():
                m = gfp.as_f3(m)
                if np.any(m):
                    out[(t, tgt)] = m
        return out

    def quadratic_witness(self, g):
        """None if (rho(g) - 1)^2 = 0, else (source block, basis index, image vector, target block)."""
        op = self.operator(g)
        if op.is_block_diagonal():
            n = gfp.mat_sub(op.local, gfp.identity(self.block_dim))
            sq = gfp.mat_mul(n, n)
            bad = np.nonzero(np.any(sq.reshape(self.nblocks, -1), axis=1))[0]
            if bad.size == 0:
                return None
            t = int(bad[0])
            i = int(np.nonzero(np.any(sq[t], axis=1))[0][0])
            return t, i, sq[t, i], t
        blocks = self.square_minus_one(g)
        if not blocks:
            return None
        (t, tgt), m = min(blocks.items())
        i = int(np.nonzero(np.any(m, axis=1))[0][0])
        return t, i, m[i], tgt

    def minus_one(self, g) -> np.ndarray:
        """Stack of per-block ``local - 1`` for a block-diagonal element."""
        op = self.operator(g)
        if not op.is_block_diagonal():
            raise ValueError("element moves blocks")
        return gfp.mat_sub(op.local, gfp.identity(self.block_dim))

    def is_trivial_element(self, g) -> bool:
        return self.operator(g).is_identity()

    def is_quadratic_element(self, g) -> bool:
        return not self.is_trivial_element(g) and self.quadratic_witness(g) is None

    def pair_annihilates(self, g, h) -> bool:
        a, b = self.operator(g), self.operator(h)
        if not (a.is_block_diagonal() and b.is_block_diagonal()):
            raise ValueError("pair products are only evaluated for block-diagonal elements")
        eye = gfp.identity(self.block_dim)
        return gfp.is_zero(gfp.mat_mul(gfp.mat_sub(a.local, eye), gfp.mat_sub(b.local, eye)))


def fixed_space_dim(gens, module: Module) -> int:
    return module.fixed_space_dim(gens)


def jlog(gens, order_log3: int, module: Module) -> JValue:
    return JValue(order_log3 + module.fixed_space_dim(gens) - module.dim)


def is_quadratic_element(g, module: Module) -> bool:
    return module.is_quadratic_element(g)


def is_quadratic_subgroup(gens, module: Module) -> bool:
    """[V, E, E] = 0, checked on all ordered generator pairs including repeats."""
    gens = list(gens.gens if hasattr(gens, "gens") else gens)
    if not gens:
        raise ValueError("the trivial subgroup is not quadratic by definition")
    return all(module.pair_annihilates(a, b) for a in gens for b in gens)
