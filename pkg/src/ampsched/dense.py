"""Dense matrix storage, blocked partitioning and reference kernels.

Matrices are plain float64 numpy arrays in column-major (Fortran) order.
The reference kernels here are deliberately simple per-element routines:
they act as independent oracles for the cache-blocked kernels in
:mod:`ampsched.kernels` and as the diagonal-block factorization used by the
runtime.
"""

from __future__ import annotations

import math

import numpy as np


class NotPositiveDefiniteError(ValueError):
    """Raised when a Cholesky pivot is non-positive.

    ``index`` is the failing row/column inside the factored matrix. The
    runtime attaches the partial trace before re-raising.
    """

    def __init__(self, index: int, message: str | None = None):
        self.index = index
        self.trace = None
        super().__init__(message or f"matrix not positive definite at pivot {index}")


class SingularTriangularError(ValueError):
    """Raised when a triangular solve meets a zero diagonal entry."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"zero diagonal entry at index {index} in triangular solve")


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {a.shape}")
    return a


def make_spd(n: int, seed: int) -> np.ndarray:
    """Deterministic symmetric positive definite test matrix.

    Off-diagonal entries are uniform in [0, 1); the diagonal is set to
    n + 1, which makes the matrix strictly diagonally dominant and hence
    positive definite.
    """
    if n < 1:
        raise ValueError("matrix order must be >= 1")
    rng = np.random.default_rng(seed)
    m = rng.random((n, n))
    a = np.asfortranarray((m + m.T) / 2.0)
    np.fill_diagonal(a, float(n + 1))
    return a


def ref_potrf(a: np.ndarray) -> np.ndarray:
    """Unblocked textbook Cholesky factorization, A = U^T U.

    Returns the upper-triangular factor U with zero strictly-lower part.
    """
    a = _as_matrix(a)
    n = a.shape[0]
    if a.shape[1] != n:
        raise ValueError("ref_potrf requires a square matrix")
    u = np.zeros((n, n), order="F")
    for j in range(n):
        d = a[j, j] - np.dot(u[:j, j], u[:j, j])
        if d <= 0.0 or not math.isfinite(d):
            raise NotPositiveDefiniteError(j)
        ujj = math.sqrt(d)
        u[j, j] = ujj
        if j + 1 < n:
            u[j, j + 1:] = (a[j, j + 1:] - u[:j, j] @ u[:j, j + 1:]) / ujj
    return u


def ref_gemm(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Naive matrix multiply-update, C := C - A^T B, per-element dot products.

    A is k-by-m, B is k-by-n, C is m-by-n. Returns a new array.
    """
    a, b, c = _as_matrix(a), _as_matrix(b), _as_matrix(c)
    k, m = a.shape
    k2, n = b.shape
    if k2 != k or c.shape != (m, n):
        raise ValueError(f"nonconformal gemm operands {a.shape} {b.shape} {c.shape}")
    out = np.array(c, order="F")
    for i in range(m):
        col = a[:, i]
        for j in range(n):
            out[i, j] -= np.dot(col, b[:, j])
    return out


def ref_syrk(a: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Naive symmetric rank-k update, C := C - A^T A on the full block.

    The update is applied to the whole (symmetric) block; only the upper
    triangle is ever consumed by the factorization.
    """
    a, c = _as_matrix(a), _as_matrix(c)
    k, m = a.shape
    if c.shape != (m, m):
        raise ValueError(f"nonconformal syrk operands {a.shape} {c.shape}")
    out = np.array(c, order="F")
    for i in range(m):
        col = a[:, i]
        for j in range(m):
            out[i, j] -= np.dot(col, a[:, j])
    return out


def ref_trsm(u: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve U^T X = B by forward substitution, U upper triangular.

    This is the panel update of the blocked factorization. Returns X.
    """
    u, b = _as_matrix(u), _as_matrix(b)
    n = u.shape[0]
    if u.shape[1] != n or b.shape[0] != n:
        raise ValueError(f"nonconformal trsm operands {u.shape} {b.shape}")
    x = np.array(b, order="F")
    for i in range(n):
        if u[i, i] == 0.0:
            raise SingularTriangularError(i)
        if i > 0:
            x[i, :] = (b[i, :] - u[:i, i] @ x[:i, :]) / u[i, i]
        else:
            x[i, :] = b[i, :] / u[i, i]
    return x


def residual(a: np.ndarray, u: np.ndarray) -> float:
    """Relative factorization residual ||A - U^T U||_F / ||A||_F."""
    a, u = _as_matrix(a), _as_matrix(u)
    num = np.linalg.norm(a - u.T @ u)
    den = np.linalg.norm(a)
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return float(num / den)


class BlockedMatrix:
    """A square matrix partitioned into a grid of b-by-b tiles.

    Tiles are contiguous Fortran-order copies so that concurrent kernel
    lanes touch disjoint memory. The last tile row/column may be ragged
    when b does not divide n.
    """

    def __init__(self, n: int, b: int, blocks: list[list[np.ndarray]]):
        self.n = n
        self.b = b
        self.s = -(-n // b)
        self.blocks = blocks

    @classmethod
    def from_matrix(cls, a: np.ndarray, b: int) -> "BlockedMatrix":
        a = _as_matrix(a)
        n = a.shape[0]
        if a.shape[1] != n:
            raise ValueError("only square matrices can be block-partitioned")
        if not 1 <= b <= n:
            raise ValueError(f"block size {b} out of range [1, {n}]")
        s = -(-n // b)
        blocks = [
            [np.asfortranarray(a[i * b:min((i + 1) * b, n), j * b:min((j + 1) * b, n)].copy())
             for j in range(s)]
            for i in range(s)
        ]
        return cls(n, b, blocks)

    def block_dim(self, i: int) -> int:
        """Row/column extent of the i-th tile (the last one may be ragged)."""
        return min((i + 1) * self.b, self.n) - i * self.b

    def assemble(self) -> np.ndarray:
        """Reassemble the original matrix; bitwise inverse of from_matrix."""
        out = np.empty((self.n, self.n), order="F")
        for i in range(self.s):
            r0 = i * self.b
            for j in range(self.s):
                c0 = j * self.b
                blk = self.blocks[i][j]
                out[r0:r0 + blk.shape[0], c0:c0 + blk.shape[1]] = blk
        return out

    def upper_factor(self) -> np.ndarray:
        """Assemble and keep only the upper triangle (the Cholesky factor)."""
        return np.asfortranarray(np.triu(self.assemble()))


def save_csv(a: np.ndarray, path) -> None:
    """Write a matrix as CSV, one row per line. Debugging aid only."""
    np.savetxt(path, np.asarray(a), delimiter=",")


def load_csv(path) -> np.ndarray:
    a = np.loadtxt(path, delimiter=",", ndmin=2)
    return np.asfortranarray(a.astype(np.float64))
