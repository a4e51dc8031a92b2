"""Weighted-Laplacian pressure system for one source and many sinks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import cg, splu

from .model import NetworkInstance

DENSE_LIMIT = 2_000
ITERATIVE_LIMIT = 100_000


class PressureSolveError(RuntimeError):
    pass


class SingularSystemError(PressureSolveError):
    def __init__(self, message, component=None):
        super().__init__(message)
        self.component = component


@dataclass(frozen=True)
class LinearSystem:
    dimension: int
    matrix: sp.csr_matrix
    rhs: np.ndarray
    ground: int


def default_ground(inst: NetworkInstance) -> int:
    """Highest-numbered retailer."""
    return max(inst.demands)


def assemble_system(inst: NetworkInstance, D, L, ground: int | None = None) -> LinearSystem:
    """Build the ungrounded Laplacian with conductances ``D/L`` and the demand vector.

    Links are treated as undirected conductors.  The firm injects the total
    demand and each retailer withdraws its own.
    """
    D = np.asarray(D, dtype=float)
    L = np.asarray(L, dtype=float)
    if D.shape != (inst.n_links,) or L.shape != (inst.n_links,):
        raise ValueError("D and L need one entry per link")
    if np.any(~(D > 0)) or np.any(~(L > 0)):
        raise ValueError("conductivities and lengths must be strictly positive")

    w = D / L
    t, h = inst.tails, inst.heads
    n = inst.n_nodes
    rows = np.concatenate([t, h, t, h])
    cols = np.concatenate([t, h, h, t])
    vals = np.concatenate([w, w, -w, -w])
    matrix = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    matrix.sum_duplicates()

    rhs = np.zeros(n)
    for node, d in inst.demands.items():
        rhs[node] -= d
    rhs[inst.source] += inst.total_demand

    if ground is None:
        ground = default_ground(inst)
    if not 0 <= ground < n:
        raise ValueError(f"ground node {ground} out of range")
    return LinearSystem(n, matrix, rhs, int(ground))


def solve_pressures(system: LinearSystem) -> np.ndarray:
    """Node pressures with ``p[ground] == 0``.

    Dense Cholesky for small systems, sparse LU up to ``ITERATIVE_LIMIT``
    nodes and Jacobi-preconditioned CG beyond that.
    """
    n = system.dimension
    g = system.ground
    keep = np.flatnonzero(np.arange(n) != g)

    n_comp, labels = connected_components(system.matrix, directed=False)
    if n_comp > 1:
        lost = sorted({int(c) for c in labels} - {int(labels[g])})
        nodes = np.flatnonzero(labels == lost[0]).tolist()
        raise SingularSystemError(
            f"pressure system is singular: nodes {nodes} are disconnected from ground node {g}",
            component=nodes,
        )

    A = system.matrix[keep][:, keep]
    b = system.rhs[keep]
    p = np.zeros(n)
    if n - 1 == 0:
        return p

    if n - 1 <= DENSE_LIMIT:
        try:
            factor = scipy.linalg.cho_factor(A.toarray(), lower=True, check_finite=True)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(f"grounded Laplacian is not positive definite: {exc}") from exc
        x = scipy.linalg.cho_solve(factor, b)
    elif n - 1 <= ITERATIVE_LIMIT:
        try:
            x = splu(A.tocsc()).solve(b)
        except RuntimeError as exc:
            raise SingularSystemError(f"grounded Laplacian is singular: {exc}") from exc
    else:
        diag = A.diagonal()
        M = sp.diags(1.0 / diag)
        scale = max(1.0, float(np.abs(b).max()))
        x, info = cg(A, b, M=M, rtol=1e-12, atol=1e-10 * scale, maxiter=10 * n)
        if info != 0:
            raise PressureSolveError(f"conjugate gradient did not converge (info={info})")

    p[keep] = x
    resid = np.abs(system.matrix @ p - system.rhs)
    resid[g] = 0.0
    tol = 1e-9 * max(1.0, float(np.abs(system.rhs).max()))
    if not np.all(np.isfinite(p)) or resid.max() > tol:
        raise PressureSolveError(f"pressure residual {resid.max():.3e} exceeds {tol:.3e}")
    return p
