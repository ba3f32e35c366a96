"""Exact rational linear programming for the weighted-l1 molecule problem.

The norm extension repeatedly minimizes  sum_j |beta_j| * cost_j  subject to
sum_j beta_j * molecule_j = target,  over real beta.  Optima of rational
data are rational and attained at basic solutions, so everything here is
exact ``Fraction`` arithmetic; no floating point touches any stored value.

``MoleculeLP`` is a revised two-phase simplex with Bland's rule; the basis
is dual feasible independently of the right-hand side, so re-solving for a
new target warm-starts with a handful of dual-simplex pivots (usually
none).  ``basic_solution_oracle`` independently enumerates all candidate
supports and is the cross-check required of the LP route.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Optional, Sequence

Vec = tuple[Fraction, ...]


class InfeasibleLP(ValueError):
    """Target vector outside the span of the elementary differences."""


def _row_reduce(matrix: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Gaussian elimination; returns (reduced rows, pivot column indices)."""
    rows = [row[:] for row in matrix]
    pivots: list[int] = []
    r = 0
    for c in range(len(rows[0]) if rows else 0):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = Fraction(1) / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                factor = rows[i][c]
                rows[i] = [a - factor * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


class MoleculeLP:
    """min sum c_j |beta_j| s.t. sum beta_j m_j = v, resolved for many v.

    Columns are the signed molecules (+m_j and -m_j, each at cost c_j >= 0).
    The constraint matrix is row-reduced once so the working system has full
    row rank; targets inconsistent with the dropped rows are infeasible.
    """

    def __init__(self, molecules: Sequence[Vec], costs: Sequence[Fraction]):
        if not molecules:
            raise ValueError("no molecules")
        self.dim = len(molecules[0])
        self.molecules = [tuple(m) for m in molecules]
        self.costs = [Fraction(c) for c in costs]
        if any(c < 0 for c in self.costs):
            raise ValueError("negative molecule cost")

        # Coordinate rows of the constraint matrix may be dependent; eliminate
        # to full row rank, remembering the operator E so each target can be
        # mapped into the reduced system and checked for consistency.
        d, J = self.dim, len(self.molecules)
        work = [
            [self.molecules[j][i] for j in range(J)]
            + [Fraction(1 if i == k else 0) for k in range(d)]
            for i in range(d)
        ]
        rank = 0
        for c in range(J):
            pivot = next((i for i in range(rank, d) if work[i][c] != 0), None)
            if pivot is None:
                continue
            work[rank], work[pivot] = work[pivot], work[rank]
            inv = Fraction(1) / work[rank][c]
            work[rank] = [x * inv for x in work[rank]]
            for i in range(d):
                if i != rank and work[i][c] != 0:
                    f = work[i][c]
                    work[i] = [a - f * b for a, b in zip(work[i], work[rank])]
            rank += 1
            if rank == d:
                break
        self._op = [row[J:] for row in work]  # d x d elimination operator
        self.m = rank
        reduced = [row[:J] for row in work[:rank]]  # rank x J, full row rank
        self.ncols = 2 * J
        self.A = [reduced[i] + [-x for x in reduced[i]] for i in range(rank)]
        self.c = self.costs + self.costs
        self._basis: Optional[list[int]] = None
        self._binv: Optional[list[list[Fraction]]] = None
        self._cbar: Optional[list[Fraction]] = None

    def _reduce_vec(self, v: Vec) -> list[Fraction]:
        """Right-hand side of the reduced system; raises if v leaves the span."""
        image = [sum(self._op[i][k] * v[k] for k in range(self.dim)) for i in range(self.dim)]
        for i in range(self.m, self.dim):
            if image[i] != 0:
                raise InfeasibleLP("target outside molecule span")
        return image[: self.m]

    # -- simplex core ----------------------------------------------------

    def _column(self, j: int) -> list[Fraction]:
        return [self.A[i][j] for i in range(self.m)]

    def _phase_one(self, rhs: list[Fraction]) -> None:
        """Dense two-phase start; establishes a dual-feasible optimal basis."""
        m, n = self.m, self.ncols
        # artificial tableau: rows = constraints (sign-fixed), art columns last
        T = [[Fraction(0)] * (n + m + 1) for _ in range(m)]
        for i in range(m):
            sign = -1 if rhs[i] < 0 else 1
            for j in range(n):
                T[i][j] = sign * self.A[i][j]
            T[i][n + i] = Fraction(1)
            T[i][-1] = sign * rhs[i]
        basis = [n + i for i in range(m)]

        def run(cost: list[Fraction], limit: int) -> None:
            while True:
                y = [cost[basis[i]] for i in range(m)]
                entering = None
                for j in range(limit):
                    if j in basis:
                        continue
                    red = cost[j] - sum(y[i] * T[i][j] for i in range(m))
                    if red < 0:
                        entering = j
                        break  # Bland: first improving column
                if entering is None:
                    return
                ratios = [
                    (T[i][-1] / T[i][entering], basis[i], i)
                    for i in range(m)
                    if T[i][entering] > 0
                ]
                if not ratios:
                    raise InfeasibleLP("unbounded phase; molecule costs degenerate")
                _, _, r = min(ratios, key=lambda t: (t[0], t[1]))
                piv = T[r][entering]
                T[r] = [x / piv for x in T[r]]
                for i in range(m):
                    if i != r and T[i][entering] != 0:
                        f = T[i][entering]
                        T[i] = [a - f * b for a, b in zip(T[i], T[r])]
                basis[r] = entering

        art_cost = [Fraction(0)] * n + [Fraction(1)] * m
        run(art_cost, n + m)
        if sum(T[i][-1] * art_cost[basis[i]] for i in range(m)) != 0:
            raise InfeasibleLP("phase one optimum positive")
        # drive zero-level artificials out of the basis
        for i in range(m):
            if basis[i] >= n:
                pivot_col = next((j for j in range(n) if T[i][j] != 0 and j not in basis), None)
                if pivot_col is None:
                    raise InfeasibleLP("redundant row survived row reduction")
                piv = T[i][pivot_col]
                T[i] = [x / piv for x in T[i]]
                for k in range(m):
                    if k != i and T[k][pivot_col] != 0:
                        f = T[k][pivot_col]
                        T[k] = [a - f * b for a, b in zip(T[k], T[i])]
                basis[i] = pivot_col
        run(self.c + [Fraction(0)] * m, n)
        if any(b >= n for b in basis):
            raise InfeasibleLP("artificial column stuck in basis")
        self._set_basis(basis)

    def _set_basis(self, basis: list[int]) -> None:
        m = self.m
        B = [[self.A[i][j] for j in basis] for i in range(m)]
        # invert by elimination on [B | I]
        aug = [B[i][:] + [Fraction(int(i == k)) for k in range(m)] for i in range(m)]
        for col in range(m):
            pivot = next(i for i in range(col, m) if aug[i][col] != 0)
            aug[col], aug[pivot] = aug[pivot], aug[col]
            inv = Fraction(1) / aug[col][col]
            aug[col] = [x * inv for x in aug[col]]
            for i in range(m):
                if i != col and aug[i][col] != 0:
                    f = aug[i][col]
                    aug[i] = [a - f * b for a, b in zip(aug[i], aug[col])]
        self._basis = basis
        self._binv = [row[m:] for row in aug]
        y = [sum(self.c[basis[i]] * self._binv[i][k] for i in range(m)) for k in range(m)]
        self._cbar = [
            self.c[j] - sum(y[i] * self.A[i][j] for i in range(m)) for j in range(self.ncols)
        ]

    def solve(self, target: Vec) -> Fraction:
        return self.solve_full(target)[0]

    def solve_full(self, target: Vec):
        """(value, signed molecule solution, dual certificate) for one target.

        The dual certificate y satisfies |<y, molecule_j>| <= cost_j for all
        j and <y, target> = value, so it witnesses optimality by weak
        duality without trusting the pivoting path.  Warm-starts from the
        previous basis (dual feasibility is independent of the target)."""
        rhs = self._reduce_vec(target)
        if self._basis is None:
            self._phase_one(rhs)
        m = self.m
        basis, binv, cbar = self._basis, self._binv, self._cbar
        guard = 0
        while True:
            guard += 1
            if guard > 10_000:
                raise InfeasibleLP("dual simplex failed to terminate")
            xb = [sum(binv[i][k] * rhs[k] for k in range(m)) for i in range(m)]
            row_leave = None
            for i in range(m):
                if xb[i] < 0:
                    if row_leave is None or basis[i] < basis[row_leave]:
                        row_leave = i
            if row_leave is None:
                value = sum(self.c[basis[i]] * xb[i] for i in range(m))
                nmol = len(self.molecules)
                beta: dict[int, Fraction] = {}
                for i in range(m):
                    if xb[i] == 0:
                        continue
                    j = basis[i]
                    mol = j if j < nmol else j - nmol
                    sgn = 1 if j < nmol else -1
                    beta[mol] = beta.get(mol, Fraction(0)) + sgn * xb[i]
                y_red = [
                    sum(self.c[basis[i]] * binv[i][k] for i in range(m))
                    for k in range(m)
                ]
                # lift the dual into original coordinates through the
                # elimination operator
                y = [
                    sum(y_red[i] * self._op[i][k] for i in range(m))
                    for k in range(self.dim)
                ]
                return value, beta, tuple(y)
            # pivot row over all columns
            arow = [
                sum(binv[row_leave][k] * self.A[k][j] for k in range(m))
                for j in range(self.ncols)
            ]
            best = None
            for j in range(self.ncols):
                if j in basis or arow[j] >= 0:
                    continue
                ratio = cbar[j] / (-arow[j])
                if best is None or ratio < best[0] or (ratio == best[0] and j < best[1]):
                    best = (ratio, j)
            if best is None:
                raise InfeasibleLP("dual unbounded: target infeasible")
            _, enter = best
            col = [sum(binv[i][k] * self.A[k][enter] for k in range(m)) for i in range(m)]
            piv = col[row_leave]
            binv[row_leave] = [x / piv for x in binv[row_leave]]
            for i in range(m):
                if i != row_leave and col[i] != 0:
                    f = col[i]
                    binv[i] = [a - f * b for a, b in zip(binv[i], binv[row_leave])]
            theta = cbar[enter] / (-arow[enter])
            for j in range(self.ncols):
                if arow[j] != 0:
                    cbar[j] += theta * arow[j]
            basis[row_leave] = enter
            # keep caches exact after the rank-one update
            self._cbar = cbar


def verify_certificate(
    molecules: Sequence[Vec],
    costs: Sequence[Fraction],
    target: Vec,
    value: Fraction,
    beta: dict[int, Fraction],
    dual: Vec,
) -> bool:
    """Exact optimality proof: the primal solution reproduces the target at
    the claimed cost, and the dual functional shows no decomposition can be
    cheaper.  Independent of the pivoting that produced the solution."""
    dim = len(target)
    acc = [Fraction(0)] * dim
    cost = Fraction(0)
    for j, b in beta.items():
        for i in range(dim):
            acc[i] += b * molecules[j][i]
        cost += abs(b) * costs[j]
    if tuple(acc) != tuple(target) or cost != value:
        return False
    for mol, c in zip(molecules, costs):
        pairing = sum(y * x for y, x in zip(dual, mol))
        if abs(pairing) > c:
            return False
    lower = sum(y * x for y, x in zip(dual, target))
    return lower == value


def basic_solution_oracle(
    molecules: Sequence[Vec], costs: Sequence[Fraction], target: Vec
) -> Optional[Fraction]:
    """Exhaustive enumeration of basic feasible supports.

    Any optimum of the weighted-l1 problem is attained on a linearly
    independent molecule subset, so trying every subset of size <= rank and
    solving exactly yields the true minimum.  Returns None when the target
    is not in the molecule span.  Intended for small instances only.
    """
    if all(x == 0 for x in target):
        return Fraction(0)
    dim = len(target)
    _, pivots = _row_reduce([list(col) for col in zip(*molecules)])
    rank = len(pivots)
    best: Optional[Fraction] = None
    idx = range(len(molecules))
    for k in range(1, rank + 1):
        for subset in combinations(idx, k):
            cols = [molecules[j] for j in subset]
            aug = [[cols[j][i] for j in range(k)] + [target[i]] for i in range(dim)]
            reduced, piv = _row_reduce(aug)
            if any(p == k for p in piv):
                continue  # inconsistent: pivot in the rhs column
            if len(piv) < k:
                continue  # dependent subset; a smaller one covers it
            beta = [Fraction(0)] * k
            for row, p in zip(reduced, piv):
                beta[p] = row[k]
            value = sum(abs(b) * costs[j] for b, j in zip(beta, subset))
            if best is None or value < best:
                best = value
    return best
