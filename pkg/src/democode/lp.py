"""Dense revised simplex for small standard-form linear programs.

Solves ``min c^T z  s.t.  A z = b, z >= 0`` starting from a caller-supplied
feasible basis.  Entering columns are priced with Dantzig's rule; after a run
of degenerate pivots the solver switches to Bland's rule (smallest index
enters, smallest basic index leaves) until the objective moves again, which
rules out cycling.  The basis inverse is kept explicitly, updated by rank-one
pivots and refactorized periodically.
"""

import numpy as np

from .errors import SolverFailure

PIVOT_TOL = 1e-9
COST_TOL = 1e-11
DEGENERATE_STREAK = 30
REFACTOR_EVERY = 64


class SimplexResult:
    __slots__ = ("z", "basis", "objective", "iterations")

    def __init__(self, z, basis, objective, iterations):
        self.z = z
        self.basis = basis
        self.objective = objective
        self.iterations = iterations


def _basic_solution(A, b, basis):
    B = A[:, basis]
    return np.linalg.inv(B), np.linalg.solve(B, b)


def simplex(A, b, c, basis, max_iter=None, allowed=None):
    """Run primal simplex from the feasible ``basis``.

    ``allowed`` optionally masks which columns may enter the basis.
    Raises :class:`SolverFailure` on unboundedness or when ``max_iter``
    pivots are exceeded.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, ncols = A.shape
    basis = np.array(basis, dtype=int)
    if max_iter is None:
        max_iter = 50 * (m + ncols)
    enter_ok = np.ones(ncols, dtype=bool) if allowed is None else np.array(allowed, dtype=bool)

    Binv, xB = _basic_solution(A, b, basis)
    xB = np.maximum(xB, 0.0)
    streak = 0
    since_refactor = 0
    for it in range(max_iter):
        y = c[basis] @ Binv
        d = c - y @ A
        d[basis] = 0.0
        d[~enter_ok] = 0.0
        bland = streak >= DEGENERATE_STREAK
        if bland:
            candidates = np.flatnonzero(d < -COST_TOL)
            if candidates.size == 0:
                break
            q = int(candidates[0])
        else:
            q = int(np.argmin(d))
            if d[q] >= -COST_TOL:
                break

        col = Binv @ A[:, q]
        pos = col > PIVOT_TOL
        if not pos.any():
            raise SolverFailure("linear program is unbounded")
        ratios = np.full(m, np.inf)
        ratios[pos] = xB[pos] / col[pos]
        theta = ratios.min()
        ties = np.flatnonzero(ratios <= theta + 1e-12)
        if bland:
            r = int(ties[np.argmin(basis[ties])])
        else:
            r = int(ties[np.argmax(col[ties])])
        theta = max(ratios[r], 0.0)
        streak = streak + 1 if theta <= 1e-13 else 0

        piv = col[r]
        xB -= theta * col
        xB[r] = theta
        row = Binv[r] / piv
        Binv -= np.outer(col, row)
        Binv[r] = row
        basis[r] = q
        np.maximum(xB, 0.0, out=xB)

        since_refactor += 1
        if since_refactor >= REFACTOR_EVERY:
            Binv, xB = _basic_solution(A, b, basis)
            xB = np.maximum(xB, 0.0)
            since_refactor = 0
    else:
        raise SolverFailure(f"simplex did not terminate within {max_iter} pivots")

    _, xB = _basic_solution(A, b, basis)
    z = np.zeros(ncols)
    z[basis] = xB
    return SimplexResult(z, basis, float(c @ z), it)


def linf_min(S, y, max_iter=None):
    """Minimum-l_inf solution of ``S x = y`` for a full-row-rank ``S``.

    Variables are the slacks ``a = t - x >= 0``, ``b = t + x >= 0`` and
    ``t >= 0``; rows are ``a_i + b_i - 2t = 0`` and ``S (b - a) = 2y``.  The
    start basis takes every ``a_i`` plus one artificial per ``S`` row, which
    is feasible by construction, so Phase I only has to price out ``n``
    artificials.  Returns ``(x, t, pivots)``.
    """
    S = np.asarray(S, dtype=float)
    y = np.asarray(y, dtype=float)
    n, N = S.shape
    m = N + n
    sgn = np.where(y < 0, -1.0, 1.0)

    A = np.zeros((m, 2 * N + 1 + n))
    idx = np.arange(N)
    A[idx, idx] = 1.0
    A[idx, N + idx] = 1.0
    A[:N, 2 * N] = -2.0
    A[N:, :N] = -S
    A[N:, N:2 * N] = S
    A[N + np.arange(n), 2 * N + 1 + np.arange(n)] = sgn
    rhs = np.concatenate([np.zeros(N), 2.0 * y])

    art = np.arange(2 * N + 1, 2 * N + 1 + n)
    basis = np.concatenate([idx, art])
    c1 = np.zeros(A.shape[1])
    c1[art] = 1.0
    phase1 = simplex(A, rhs, c1, basis, max_iter=max_iter)
    scale = max(1.0, float(np.abs(rhs).max()))
    if phase1.objective > 1e-9 * scale:
        raise SolverFailure("no feasible embedding: frame is not full row rank")

    basis = phase1.basis.copy()
    real = 2 * N + 1
    Binv = np.linalg.inv(A[:, basis])
    for r in np.flatnonzero(basis >= real):
        row = Binv[r] @ A[:, :real]
        row[basis[basis < real]] = 0.0
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) < PIVOT_TOL:
            raise SolverFailure("redundant constraint row in embedding LP")
        basis[r] = j
        Binv = np.linalg.inv(A[:, basis])

    c2 = np.zeros(A.shape[1])
    c2[2 * N] = 1.0
    allowed = np.zeros(A.shape[1], dtype=bool)
    allowed[:real] = True
    phase2 = simplex(A, rhs, c2, basis, max_iter=max_iter, allowed=allowed)
    z = phase2.z
    x = 0.5 * (z[N:2 * N] - z[:N])
    return x, float(z[2 * N]), phase1.iterations + phase2.iterations
