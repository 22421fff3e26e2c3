"""Sparse assembly, homogeneous constraint elimination and linear solves."""
import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ArgumentError, ConstraintRankError, SolverError

log = logging.getLogger(__name__)

RANK_TOL = 1e-10
DIRECT_LIMIT = 200_000
CG_RTOL = 1e-12
RESIDUAL_TOL = 1e-10
# accepted multiple of the rounding floor eps * || |A| |x| + |b| || / ||b||
FLOOR_FACTOR = 10.0


class TripletList:
    """Growable (row, col, value) storage; duplicates are summed on assembly."""

    def __init__(self, dimension):
        self.dimension = int(dimension)
        self._rows, self._cols, self._vals = [], [], []

    def add(self, rows, cols, values):
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        values = np.asarray(values, dtype=float).ravel()
        if not (len(rows) == len(cols) == len(values)):
            raise ArgumentError("triplet arrays differ in length")
        self._rows.append(rows)
        self._cols.append(cols)
        self._vals.append(values)

    def add_blocks(self, dofs, blocks):
        """Scatter dense element blocks ``blocks[e]`` at ``dofs[e] x dofs[e]``."""
        dofs = np.asarray(dofs, dtype=np.int64)
        n = dofs.shape[1]
        self.add(np.repeat(dofs, n, axis=1), np.tile(dofs, (1, n)), blocks)

    def arrays(self):
        if not self._rows:
            empty = np.zeros(0)
            return empty.astype(np.int64), empty.astype(np.int64), empty
        return (np.concatenate(self._rows), np.concatenate(self._cols),
                np.concatenate(self._vals))


def assemble(triplets):
    """Compress a TripletList into CSR, summing duplicates in a fixed order."""
    rows, cols, vals = triplets.arrays()
    n = triplets.dimension
    if len(rows) and (rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n):
        raise ArgumentError("triplet index out of range")
    A = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def assemble_vector(dofs, values, n):
    return np.bincount(np.asarray(dofs).ravel(), weights=np.asarray(values).ravel(), minlength=n)


@dataclass
class ConstraintBlock:
    indices: np.ndarray
    matrix: np.ndarray
    null_basis: np.ndarray
    rank: int


class LinearConstraintSet:
    """Homogeneous constraints ``C_b x[indices_b] = 0`` on disjoint index blocks."""

    def __init__(self, dimension):
        self.dimension = int(dimension)
        self.blocks = []
        self._used = np.zeros(self.dimension, dtype=bool)

    def __len__(self):
        return len(self.blocks)

    def add_block(self, indices, matrix, expected_rank=None):
        indices = np.asarray(indices, dtype=np.int64)
        C = np.atleast_2d(np.asarray(matrix, dtype=float))
        block_id = len(self.blocks)
        if C.shape[1] != len(indices):
            raise ArgumentError(f"block {block_id}: matrix has {C.shape[1]} columns for {len(indices)} indices")
        if np.any(self._used[indices]) or len(np.unique(indices)) != len(indices):
            raise ArgumentError(f"block {block_id}: indices overlap an existing block")
        if not np.all(np.isfinite(C)):
            raise ConstraintRankError(block_id, "non-finite constraint coefficients")
        Z = scipy.linalg.null_space(C, rcond=RANK_TOL)
        rank = len(indices) - Z.shape[1]
        if expected_rank is not None and rank != expected_rank:
            raise ConstraintRankError(block_id, f"numerical rank {rank}, expected {expected_rank}")
        self._used[indices] = True
        self.blocks.append(ConstraintBlock(indices, C, Z, rank))
        return block_id

    def fix(self, indices):
        """Constrain each index to zero individually."""
        for i in np.asarray(indices, dtype=np.int64).ravel():
            self.add_block([i], [[1.0]])

    def permuted(self, order):
        out = LinearConstraintSet(self.dimension)
        for i in order:
            b = self.blocks[i]
            out.add_block(b.indices, b.matrix)
        return out

    def expansion(self):
        """Sparse basis Z of the admissible subspace, shape (n, m)."""
        free = np.flatnonzero(~self._used)
        rows = [free]
        cols = [np.arange(len(free))]
        vals = [np.ones(len(free))]
        m = len(free)
        for b in self.blocks:
            k = b.null_basis.shape[1]
            if k == 0:
                continue
            rows.append(np.repeat(b.indices, k))
            cols.append(np.tile(np.arange(m, m + k), len(b.indices)))
            vals.append(b.null_basis.ravel())
            m += k
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(self.dimension, m))

    def residuals(self, x):
        return np.array([np.abs(b.matrix @ x[b.indices]).max() for b in self.blocks] or [0.0])


def reduce(A, b, constraints):
    """Return ``(Z^T A Z, Z^T b, Z)``; expand reduced solutions with ``Z @ y``."""
    if constraints is None or len(constraints) == 0:
        Z = sp.identity(A.shape[0], format="csr")
        return A, np.asarray(b, dtype=float), Z
    Z = constraints.expansion()
    Ar = (Z.T @ A @ Z).tocsr()
    Ar = 0.5 * (Ar + Ar.T)
    return Ar.tocsr(), Z.T @ np.asarray(b, dtype=float), Z


@dataclass
class SolverReport:
    method: str
    iterations: int
    relative_residual: float
    wall_time: float
    condition_estimate: float = float("nan")
    extra: dict = field(default_factory=dict)


class Factorization:
    """Sparse LU of the diagonally equilibrated matrix in symmetric mode.

    When no row swaps occur the pivots double as an SPD check.
    """

    def __init__(self, A):
        d = A.diagonal()
        if np.any(~(d > 0)):
            raise SolverError("non-positive diagonal entry; matrix is not positive definite",
                              {"min_diagonal": float(d.min())})
        self.scale = 1.0 / np.sqrt(d)
        S = sp.diags(self.scale)
        self.A = sp.csc_matrix(S @ A @ S)
        self.lu = spla.splu(self.A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                            options={"SymmetricMode": True})
        self.symmetric_pivoting = bool(np.array_equal(self.lu.perm_r, self.lu.perm_c))

    def min_pivot(self):
        if not self.symmetric_pivoting:
            return float("nan")
        return float(self.lu.U.diagonal().min())

    def solve(self, b):
        return self.scale * self.lu.solve(self.scale * np.asarray(b, dtype=float))


def condition_estimate(A, solve, steps=50, seed=0):
    """Crude 2-norm condition estimate by power iteration on A and its inverse."""
    n = A.shape[0]
    if n == 0:
        return 1.0
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    y = x.copy()
    lmax = lmin_inv = 0.0
    for _ in range(steps):
        x = A @ (x / np.linalg.norm(x))
        lmax = np.linalg.norm(x)
        y = solve(y / np.linalg.norm(y))
        lmin_inv = np.linalg.norm(y)
    return float(lmax * lmin_inv)


def residual_floor(A, x, b):
    """Relative residual attainable in double precision for this x."""
    bnorm = np.linalg.norm(b)
    return float(np.finfo(float).eps * np.linalg.norm(abs(A) @ np.abs(x) + np.abs(b)) / bnorm)


def _jacobi_cg(A, b):
    d = A.diagonal()
    if np.any(d <= 0):
        raise SolverError("non-positive diagonal entry; matrix is not positive definite",
                          {"min_diagonal": float(d.min())})
    M = sp.diags(1.0 / d)
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = spla.cg(A, b, rtol=CG_RTOL, atol=0.0, M=M, maxiter=20 * A.shape[0], callback=cb)
    if info != 0:
        raise SolverError("conjugate gradients did not converge", {"info": info, "iterations": count[0]})
    return x, count[0]


def solve(A, b, estimate_condition=True, direct_limit=DIRECT_LIMIT, factorization=None):
    """Solve the SPD system ``A x = b``; returns ``(x, SolverReport)``.

    A previously computed `factorization` of `A` is reused when given.
    """
    t0 = time.perf_counter()
    b = np.asarray(b, dtype=float)
    n = A.shape[0]
    if n == 0:
        return np.zeros(0), SolverReport("direct", 0, 0.0, 0.0, 1.0)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), SolverReport("direct", 0, 0.0, time.perf_counter() - t0)
    cond = float("nan")
    if n <= direct_limit or factorization is not None:
        try:
            fac = factorization or Factorization(A)
        except RuntimeError as exc:
            raise SolverError(f"factorization failed: {exc}", {"dimension": n}) from exc
        pivot = fac.min_pivot()
        if pivot == pivot and pivot <= 0.0:
            raise SolverError("matrix is not positive definite", {"min_pivot": pivot, "dimension": n})
        x = fac.solve(b)
        it = 1
        for _ in range(2):
            r = b - A @ x
            if np.linalg.norm(r) <= 1e-14 * bnorm:
                break
            x = x + fac.solve(r)
            it += 1
        method = "direct"
        if estimate_condition:
            cond = condition_estimate(A, fac.solve)
    else:
        x, it = _jacobi_cg(A, b)
        method = "iterative"
    res = float(np.linalg.norm(A @ x - b) / bnorm)
    floor = residual_floor(A, x, b)
    energy = float(x @ b)
    diag = {"relative_residual": res, "residual_floor": floor, "dimension": n, "energy": energy}
    if not np.all(np.isfinite(x)) or res > max(RESIDUAL_TOL, FLOOR_FACTOR * floor):
        raise SolverError("linear solve did not reach the residual tolerance", diag)
    if energy <= 0.0:
        raise SolverError("non-positive energy x.b; matrix is not positive definite", diag)
    report = SolverReport(method, it, res, time.perf_counter() - t0, cond,
                          {"residual_floor": floor, "at_floor": res > RESIDUAL_TOL})
    log.debug("solve n=%d method=%s residual=%.2e cond~%.2e", n, method, res, cond)
    return x, report


def solve_constrained(A, b, constraints, **kwargs):
    Ar, br, Z = reduce(A, b, constraints)
    y, report = solve(Ar, br, **kwargs)
    return Z @ y, report


def write_matrix_market(path, A):
    scipy.io.mmwrite(str(path), sp.coo_matrix(A), symmetry="general")
