"""Dense two-phase revised simplex.

Every decoder in the package reduces to a small dense linear program, so the
engine favours a simple, deterministic implementation over speed on large
sparse models: the basis inverse is held explicitly, updated by rank-one
pivots and recomputed from scratch every ``REFACTOR_EVERY`` pivots.

Pricing is Dantzig's most-negative reduced cost.  After a run of
``5 * (rows + cols)`` consecutive degenerate pivots the engine falls back to
Bland's rule until the objective moves again, which rules out cycling.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg.blas import dger

from .exceptions import InvalidArgumentError, SolverFailure

__all__ = [
    "LE",
    "GE",
    "EQ",
    "TOL_FEAS",
    "TOL_PIVOT",
    "LpProblem",
    "LpSolution",
    "solve_lp",
    "feasible_point",
    "format_lp",
]

LE, GE, EQ = "<=", ">=", "=="
_RELATIONS = (LE, GE, EQ)

TOL_FEAS = 1e-8
TOL_PIVOT = 1e-9
REFACTOR_EVERY = 64

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"


@dataclass(frozen=True, eq=False)
class LpProblem:
    """``minimize objective @ v`` subject to ``A[i] @ v  relations[i]  rhs[i]``.

    ``lower`` holds a per-variable lower bound, either ``0`` or ``-inf``; every
    upper bound is ``+inf``.
    """

    objective: np.ndarray
    A: np.ndarray
    relations: Tuple[str, ...]
    rhs: np.ndarray
    lower: np.ndarray = field(default=None)

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).ravel()
        n = c.shape[0]
        A = np.asarray(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(0, n)
        if A.ndim != 2 or A.shape[1] != n:
            raise InvalidArgumentError(
                f"constraint matrix must have {n} columns, got shape {A.shape}"
            )
        rhs = np.asarray(self.rhs, dtype=float).ravel()
        rel = tuple(self.relations)
        if rhs.shape[0] != A.shape[0] or len(rel) != A.shape[0]:
            raise InvalidArgumentError("one relation and one rhs per constraint row")
        bad = [r for r in rel if r not in _RELATIONS]
        if bad:
            raise InvalidArgumentError(f"unknown relation(s) {sorted(set(bad))}")
        if self.lower is None:
            lower = np.zeros(n)
        else:
            lower = np.asarray(self.lower, dtype=float).ravel()
        if lower.shape[0] != n:
            raise InvalidArgumentError("one lower bound per variable")
        if not np.all((lower == 0.0) | (lower == -np.inf)):
            raise InvalidArgumentError("lower bounds must be 0 or -inf")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(rhs))):
            raise InvalidArgumentError("LP data must be finite")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "relations", rel)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "lower", lower)

    @property
    def num_vars(self) -> int:
        return self.objective.shape[0]

    @property
    def num_constraints(self) -> int:
        return self.A.shape[0]

    @classmethod
    def from_constraints(
        cls,
        objective: Sequence[float],
        constraints: Iterable[Tuple[Sequence[float], str, float]],
        lower: Optional[Sequence[float]] = None,
    ) -> "LpProblem":
        """Build from a list of ``(row, relation, rhs)`` triples."""
        objective = np.asarray(objective, dtype=float).ravel()
        rows, rels, rhs = [], [], []
        for row, rel, b in constraints:
            rows.append(np.asarray(row, dtype=float).ravel())
            rels.append(rel)
            rhs.append(float(b))
        A = np.array(rows, dtype=float) if rows else np.zeros((0, objective.shape[0]))
        return cls(objective, A, tuple(rels), np.array(rhs), lower)


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: str
    point: Optional[np.ndarray]
    objective_value: Optional[float]
    iterations: int
    # Row multipliers of the original constraints; only set when optimal.
    duals: Optional[np.ndarray] = None

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL


class _StandardForm:
    """``S @ w = beta, w >= 0`` with ``beta >= 0`` and an identity start basis."""

    def __init__(self, p: LpProblem):
        k, n = p.A.shape
        free = p.lower == -np.inf
        # Structural columns: one per variable plus a mirrored one per free variable.
        self.n = n
        self.free_idx = np.flatnonzero(free)
        n_struct = n + self.free_idx.size

        flip = np.zeros(k, dtype=bool)
        rel = np.array(p.relations, dtype=object)
        for i in range(k):
            if rel[i] == LE:
                flip[i] = p.rhs[i] < 0
            elif rel[i] == GE:
                # ">= nonpositive" becomes "<= nonnegative": a slack can start basic.
                flip[i] = p.rhs[i] <= 0
            else:
                flip[i] = p.rhs[i] < 0
        sign = np.where(flip, -1.0, 1.0)
        A = p.A * sign[:, None]
        beta = p.rhs * sign
        eff = []
        for i in range(k):
            r = rel[i]
            if flip[i] and r != EQ:
                r = GE if r == LE else LE
            eff.append(r)

        n_slack = sum(r != EQ for r in eff)
        art_rows = [i for i in range(k) if eff[i] != LE]
        n_art = len(art_rows)
        N = n_struct + n_slack + n_art
        S = np.zeros((k, N))
        S[:, :n] = A
        S[:, n:n_struct] = -A[:, self.free_idx]
        basis = np.empty(k, dtype=np.intp)
        col = n_struct
        for i in range(k):
            if eff[i] == LE:
                S[i, col] = 1.0
                basis[i] = col
                col += 1
            elif eff[i] == GE:
                S[i, col] = -1.0
                col += 1
        self.art_start = col
        for j, i in enumerate(art_rows):
            S[i, col + j] = 1.0
            basis[i] = col + j

        self.S = S
        self.beta = beta
        self.row_sign = sign
        self.basis = basis
        self.n_struct = n_struct
        self.n_art = n_art
        cost = np.zeros(N)
        cost[:n] = p.objective
        cost[n:n_struct] = -p.objective[self.free_idx]
        self.cost = cost

    def structural_point(self, basis, xB):
        w = np.zeros(self.S.shape[1])
        w[basis] = xB
        v = w[: self.n].copy()
        v[self.free_idx] -= w[self.n: self.n_struct]
        return v


class _Simplex:
    def __init__(self, S, beta, basis, tol_pivot, tol_feas):
        self.S = S
        self.beta = beta
        self.basis = basis.copy()
        self.tol_pivot = tol_pivot
        self.tol_feas = tol_feas
        k, N = S.shape
        self.iterations = 0
        self.max_iter = 50 * (k + N) + 1000
        self.stall_window = 5 * (k + N)
        self._refactor()

    def _refactor(self):
        B = self.S[:, self.basis]
        k = B.shape[0]
        if k == 0:
            self.Binv = np.zeros((0, 0))
            self.xB = np.zeros(0)
            self._since_refactor = 0
            return
        try:
            Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            Binv = None
        if Binv is None or not np.all(np.isfinite(Binv)) or np.abs(B @ Binv - np.eye(k)).max() > 1e-6:
            raise SolverFailure("basis matrix is numerically singular")
        self.Binv = np.asfortranarray(Binv)
        self.xB = Binv @ self.beta
        self.xB[np.abs(self.xB) < 1e-14] = 0.0
        self._since_refactor = 0

    def reduced_costs(self, cost):
        y = cost[self.basis] @ self.Binv
        d = cost - y @ self.S
        d[self.basis] = 0.0
        return d

    def run(self, cost, allowed):
        """Iterate to optimality; returns OPTIMAL or UNBOUNDED."""
        tol = self.tol_pivot
        bland = False
        stall = 0
        while True:
            if self.iterations >= self.max_iter:
                raise SolverFailure(f"iteration cap {self.max_iter} reached")
            d = self.reduced_costs(cost)
            cand = allowed & (d < -tol)
            if not cand.any():
                return OPTIMAL
            if bland:
                q = int(np.flatnonzero(cand)[0])
            else:
                q = int(np.argmin(np.where(cand, d, np.inf)))
            alpha = self.Binv @ self.S[:, q]
            pos = alpha > tol
            if not pos.any():
                return UNBOUNDED
            xB = np.maximum(self.xB, 0.0)
            rows = np.flatnonzero(pos)
            ratios = xB[rows] / alpha[rows]
            theta = ratios.min()
            ties = rows[ratios <= theta + 1e-12 * (1.0 + theta)]
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(alpha[ties])])
            self._pivot(r, q, alpha)
            if theta * -d[q] > 1e-12:
                stall = 0
                bland = False
            else:
                stall += 1
                if stall > self.stall_window:
                    bland = True

    def _pivot(self, r, q, alpha):
        a_r = alpha[r]
        theta = max(self.xB[r], 0.0) / a_r
        self.xB -= theta * alpha
        self.xB[r] = theta
        pivot_row = self.Binv[r] / a_r
        self.Binv = dger(-1.0, alpha, pivot_row, a=self.Binv, overwrite_a=True)
        self.Binv[r] = pivot_row
        self.basis[r] = q
        self.iterations += 1
        self._since_refactor += 1
        if self._since_refactor >= REFACTOR_EVERY:
            self._refactor()

    def drive_out(self, art_start):
        """Pivot zero-level artificials out of the basis where a structural
        or slack column can replace them; rows where none can are redundant."""
        for r in range(len(self.basis)):
            if self.basis[r] < art_start:
                continue
            row = self.Binv[r] @ self.S[:, :art_start]
            row[self.basis[self.basis < art_start]] = 0.0
            j = int(np.argmax(np.abs(row))) if row.size else 0
            if row.size and abs(row[j]) > 1e-7:
                alpha = self.Binv @ self.S[:, j]
                self._pivot(r, j, alpha)


def _phase_one(sf: _StandardForm, tol_feas, tol_pivot):
    sx = _Simplex(sf.S, sf.beta, sf.basis, tol_pivot, tol_feas)
    N = sf.S.shape[1]
    if sf.n_art:
        cost = np.zeros(N)
        cost[sf.art_start:] = 1.0
        sx.run(cost, np.ones(N, dtype=bool))
        infeas = float(np.maximum(sx.xB[sx.basis >= sf.art_start], 0.0).sum())
        if infeas > tol_feas:
            return sx, False
        sx.drive_out(sf.art_start)
    return sx, True


def solve_lp(p: LpProblem, tol_feas: float = TOL_FEAS, tol_pivot: float = TOL_PIVOT) -> LpSolution:
    """Solve ``p`` with the two-phase primal simplex method.

    Raises :class:`SolverFailure` when the basis becomes numerically singular
    or the iteration cap is hit.
    """
    sf = _StandardForm(p)
    sx, feasible = _phase_one(sf, tol_feas, tol_pivot)
    if not feasible:
        return LpSolution(INFEASIBLE, None, None, sx.iterations)
    N = sf.S.shape[1]
    allowed = np.ones(N, dtype=bool)
    allowed[sf.art_start:] = False
    status = sx.run(sf.cost, allowed)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, None, None, sx.iterations)
    if sx._since_refactor:
        sx._refactor()
    point = sf.structural_point(sx.basis, np.maximum(sx.xB, 0.0))
    y = sf.cost[sx.basis] @ sx.Binv if sx.basis.size else np.zeros(0)
    return LpSolution(
        OPTIMAL,
        point,
        float(p.objective @ point),
        sx.iterations,
        duals=y * sf.row_sign,
    )


def feasible_point(
    A,
    relations: Sequence[str],
    rhs,
    lower=None,
    tol_feas: float = TOL_FEAS,
    tol_pivot: float = TOL_PIVOT,
) -> Optional[np.ndarray]:
    """Any point of the polyhedron, or ``None`` when it is empty (phase 1 only)."""
    A = np.asarray(A, dtype=float)
    p = LpProblem(np.zeros(A.shape[1]), A, tuple(relations), rhs, lower)
    sf = _StandardForm(p)
    sx, feasible = _phase_one(sf, tol_feas, tol_pivot)
    if not feasible:
        return None
    return sf.structural_point(sx.basis, np.maximum(sx.xB, 0.0))


def format_lp(p: LpProblem) -> str:
    """Plain-text fixed-format listing of ``p``, stable enough to diff."""
    lines = [f"NVARS {p.num_vars}", f"NROWS {p.num_constraints}"]
    lines.append("OBJ  " + " ".join(f"{v:24.17e}" for v in p.objective))
    lines.append("LOW  " + " ".join(f"{v:>24}" if np.isinf(v) else f"{v:24.17e}" for v in p.lower))
    for i in range(p.num_constraints):
        row = " ".join(f"{v:24.17e}" for v in p.A[i])
        lines.append(f"R{i:<4d}{row} {p.relations[i]:>2} {p.rhs[i]:24.17e}")
    return "\n".join(lines) + "\n"
