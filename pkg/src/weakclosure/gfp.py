"""Exact linear algebra over GF(3).

Matrices are plain ``numpy`` arrays with entries in ``{0, 1, 2}`` (stored as
``uint8``). Vectors are row vectors and act on the right, so ``v @ m`` is the
image of ``v`` and kernels are left null spaces ``{v : v m = 0}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

P = 3
DTYPE = np.uint8

# x * x = 1 for x in {1, 2}, so every unit is its own inverse
_INV = np.array([0, 1, 2], dtype=np.int64)


class DimensionError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class FScalar:
    """An element of GF(3)."""

    value: int

    def __post_init__(self):
        object.__setattr__(self, "value", int(self.value) % P)

    def __add__(self, other):
        return FScalar(self.value + int(other))

    __radd__ = __add__

    def __sub__(self, other):
        return FScalar(self.value - int(other))

    def __rsub__(self, other):
        return FScalar(int(other) - self.value)

    def __mul__(self, other):
        return FScalar(self.value * int(other))

    __rmul__ = __mul__

    def __neg__(self):
        return FScalar(-self.value)

    def __truediv__(self, other):
        return self * FScalar(other).inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        return FScalar(pow(self.value, k, P))

    def inverse(self) -> "FScalar":
        if self.value == 0:
            raise ZeroDivisionError("0 has no inverse in GF(3)")
        return FScalar(int(_INV[self.value]))

    def __int__(self):
        return self.value

    def __index__(self):
        return self.value

    def __repr__(self):
        return f"FScalar({self.value})"


def as_f3(a) -> np.ndarray:
    """Reduce an integer array-like mod 3."""
    return np.mod(np.asarray(a, dtype=np.int64), P).astype(DTYPE)


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=DTYPE)


def zeros(rows: int, cols: int) -> np.ndarray:
    return np.zeros((rows, cols), dtype=DTYPE)


def unit_vector(n: int, i: int) -> np.ndarray:
    v = np.zeros(n, dtype=DTYPE)
    v[i] = 1
    return v


def mat_mul(a, b) -> np.ndarray:
    """Exact product mod 3. Works on stacks of matrices too (leading axes broadcast)."""
    a = np.asarray(a)
    b = np.asarray(b)
    inner = a.shape[-1]
    if inner != b.shape[-2 if b.ndim > 1 else 0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    if inner <= 63 and a.dtype == DTYPE and b.dtype == DTYPE:
        # entries < 3, so every partial sum stays below 256
        return np.matmul(a, b) % P
    return np.mod(np.matmul(a.astype(np.int64), b.astype(np.int64)), P).astype(DTYPE)


def mat_sub(a, b) -> np.ndarray:
    return np.mod(np.asarray(a, dtype=np.int64) - np.asarray(b, dtype=np.int64), P).astype(DTYPE)


def mat_add(a, b) -> np.ndarray:
    return np.mod(np.asarray(a, dtype=np.int64) + np.asarray(b, dtype=np.int64), P).astype(DTYPE)


def mat_pow(a, k: int) -> np.ndarray:
    a = np.asarray(a)
    result = np.broadcast_to(identity(a.shape[-1]), a.shape).copy()
    base = a.copy()
    while k > 0:
        if k & 1:
            result = mat_mul(result, base)
        base = mat_mul(base, base)
        k >>= 1
    return result


def kronecker(a, b) -> np.ndarray:
    """Kronecker product; basis vector e_i (x) e_j sits at index i * dim(b) + j."""
    return as_f3(np.kron(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)))


def batch_kronecker(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Blockwise Kronecker product of two stacks ``(k, m, m)`` and ``(k, n, n)``."""
    k, m, _ = a.shape
    _, n, _ = b.shape
    out = np.einsum("tij,tkl->tikjl", a.astype(np.int64), b.astype(np.int64))
    return as_f3(out.reshape(k, m * n, m * n))


def is_zero(a) -> bool:
    return not np.any(np.asarray(a) % P)


def rref(m, ncols: int | None = None) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form with leftmost pivots and deterministic row order.

    Pivots are only searched in the first ``ncols`` columns (all by default),
    which lets callers carry an augmented block along.
    """
    work = np.mod(np.array(m, dtype=np.int64, copy=True), P)
    if work.ndim != 2:
        raise DimensionError("rref needs a 2-d array")
    rows, cols = work.shape
    limit = cols if ncols is None else ncols
    pivots: list[int] = []
    r = 0
    for c in range(limit):
        if r == rows:
            break
        nz = np.nonzero(work[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            work[[r, piv]] = work[[piv, r]]
        work[r] = (work[r] * _INV[work[r, c]]) % P
        col = work[:, c].copy()
        col[r] = 0
        hit = np.nonzero(col)[0]
        if hit.size:
            work[hit] = (work[hit] - np.outer(col[hit], work[r])) % P
        pivots.append(c)
        r += 1
    return work.astype(DTYPE), pivots


def rank(m) -> int:
    m = np.asarray(m)
    if m.size == 0:
        return 0
    return len(rref(m)[1])


def row_basis(m) -> np.ndarray:
    """Canonical (reduced echelon) basis of the row space."""
    m = np.asarray(m)
    if m.size == 0:
        return np.zeros((0, m.shape[-1] if m.ndim == 2 else 0), dtype=DTYPE)
    r, piv = rref(m)
    return r[: len(piv)]


def kernel_basis(m) -> np.ndarray:
    """Basis of the left null space ``{v : v m = 0}`` as the rows of the result.

    The basis is returned in reduced echelon form, so equal subspaces give
    byte-identical output.
    """
    m = np.asarray(m)
    rows = m.shape[0]
    cols = m.shape[1] if m.ndim == 2 else 0
    if rows == 0:
        return np.zeros((0, 0), dtype=DTYPE)
    aug = np.hstack([m.reshape(rows, cols).astype(np.int64), np.eye(rows, dtype=np.int64)])
    red, piv = rref(aug, ncols=cols)
    null = red[len(piv):, cols:]
    return row_basis(null) if null.shape[0] else np.zeros((0, rows), dtype=DTYPE)


def in_row_space(v, basis) -> bool:
    basis = np.asarray(basis)
    if basis.shape[0] == 0:
        return is_zero(v)
    return rank(np.vstack([basis, np.asarray(v).reshape(1, -1)])) == rank(basis)


def is_invertible(m) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and rank(m) == m.shape[0]


def batch_rank(stack) -> np.ndarray:
    """Row ranks of a stack of matrices ``(B, rows, cols)``, eliminated in lockstep."""
    work = np.mod(np.array(stack, dtype=np.int64, copy=True), P)
    nb, rows, cols = work.shape
    r = np.zeros(nb, dtype=np.int64)
    row_ids = np.arange(rows)
    batch_ids = np.arange(nb)
    for c in range(cols):
        cand = (work[:, :, c] != 0) & (row_ids[None, :] >= r[:, None])
        has = cand.any(axis=1)
        if not has.any():
            continue
        b = batch_ids[has]
        piv = np.argmax(cand[has], axis=1)
        rb = r[has]
        pivot_rows = work[b, piv].copy()
        work[b, piv] = work[b, rb]
        pivot_rows = (pivot_rows * _INV[pivot_rows[:, c]][:, None]) % P
        work[b, rb] = pivot_rows
        factors = work[b, :, c].copy()
        factors[np.arange(b.size), rb] = 0
        work[b] = (work[b] - factors[:, :, None] * pivot_rows[:, None, :]) % P
        r[has] += 1
        if np.all(r == rows):
            break
    return r


def format_matrix(m) -> str:
    """Text form: ``rows cols`` then one line of space-separated digits per row."""
    m = np.atleast_2d(np.asarray(m))
    lines = [f"{m.shape[0]} {m.shape[1]}"]
    lines += [" ".join(str(int(x) % P) for x in row) for row in m]
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    return parse_matrix_lines(lines)[0]


def parse_matrix_lines(lines: list[str], start: int = 0) -> tuple[np.ndarray, int]:
    """Parse one matrix starting at ``lines[start]``; return it and the next line index."""
    try:
        rows, cols = (int(t) for t in lines[start].split())
    except (IndexError, ValueError) as exc:
        raise ValueError(f"bad matrix header at line {start + 1}") from exc
    out = np.zeros((rows, cols), dtype=DTYPE)
    for i in range(rows):
        try:
            digits = [int(t) for t in lines[start + 1 + i].split()]
        except IndexError as exc:
            raise ValueError("matrix truncated") from exc
        if len(digits) != cols or any(d not in (0, 1, 2) for d in digits):
            raise ValueError(f"bad matrix row at line {start + 2 + i}")
        out[i] = digits
    return out, start + 1 + rows


def format_vector(v) -> str:
    return format_matrix(np.asarray(v).reshape(1, -1))
