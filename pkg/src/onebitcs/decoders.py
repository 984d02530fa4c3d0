"""Sparse recovery from one-bit measurements with sign-consistency constraints.

All decoders look for ``z`` with ``sign(A @ z - tau) == bits``.  A linear
program cannot express the strict side of that constraint (``bits == +1``
needs ``A @ z - tau > 0``), so those rows carry a small positive margin::

    bits[i] * (A[i] @ z - tau[i]) >= margin[i]
    margin[i] = STRICT_MARGIN * (1 + |tau[i]|)   if bits[i] == +1 else 0

The weighted l1 program ``min sum(w * |z|)`` is written with ``z = u - v``
(``u, v >= 0``) and handed to the simplex engine through its dual,

    min  -rhs @ lam   s.t.  [M.T; -M.T] @ lam <= [w; w],  lam >= 0,

with ``M = bits[:, None] * A``.  The dual has ``2n`` rows instead of ``m``
and the origin is a feasible start, so phase 1 is empty.  ``(u, v)`` are
the optimal multipliers of the dual rows; an unbounded dual means no
consistent signal exists.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import List, Optional

import numpy as np

from ._validation import check_problem, check_vector
from .exceptions import (
    InfeasibleAtSparsityError,
    InfeasibleMeasurementsError,
    InvalidArgumentError,
    SolverFailure,
    TooLargeError,
)
from .lpcore import GE, LE, TOL_FEAS, LpProblem, feasible_point, solve_lp

__all__ = [
    "STRICT_MARGIN",
    "SUPPORT_TRUNCATION",
    "DECODER_TOL_PIVOT",
    "L0_GUARD",
    "DecodeResult",
    "LogSumConfig",
    "strict_margins",
    "is_consistent",
    "sparsify",
    "support_of",
    "nmse",
    "decode_l1",
    "decode_weighted_l1",
    "decode_logsum",
    "decode_l0_bruteforce",
]

STRICT_MARGIN = 1e-9
SUPPORT_TRUNCATION = 1e-6
# The dual's reduced costs are the primal constraint slacks, so the pricing
# tolerance must sit well below STRICT_MARGIN.
DECODER_TOL_PIVOT = 1e-11
L0_GUARD = 10**6
LOGSUM_STOP = 1e-8


@dataclass(eq=False)
class DecodeResult:
    xhat: np.ndarray
    objective: float
    outer_iterations: int = 1
    lp_status_trace: List[str] = field(default_factory=list)
    consistency_ok: bool = True
    lp_iterations: int = 0
    objective_trace: List[float] = field(default_factory=list)
    support: Optional[tuple] = None

    def nmse(self, x) -> float:
        return nmse(x, self.xhat)

    def residual_norm(self, x) -> float:
        return float(np.linalg.norm(self.xhat - np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class LogSumConfig:
    epsilon_smooth: float = 0.01
    max_outer: int = 10
    weight_floor: float = 0.0

    def __post_init__(self):
        if not self.epsilon_smooth > 0:
            raise InvalidArgumentError("epsilon_smooth must be positive")
        if self.max_outer < 1:
            raise InvalidArgumentError("max_outer must be at least 1")
        if not self.weight_floor >= 0:
            raise InvalidArgumentError("weight_floor must be nonnegative")


def strict_margins(tau, bits) -> np.ndarray:
    return np.where(np.asarray(bits) > 0, STRICT_MARGIN * (1.0 + np.abs(tau)), 0.0)


def is_consistent(A, tau, bits, z) -> bool:
    """Sign consistency of ``z`` under the margin policy.

    ``+1`` rows must clear their margin (up to roundoff), which keeps them
    strictly positive; ``-1`` rows may exceed zero by roundoff only.
    """
    A = np.asarray(A, dtype=float)
    z = np.asarray(z, dtype=float)
    r = A @ z - tau
    roundoff = 64 * np.finfo(float).eps * (1.0 + np.abs(tau) + np.abs(A) @ np.abs(z))
    plus = bits > 0
    ok_plus = r[plus] >= strict_margins(tau, bits)[plus] - roundoff[plus]
    ok_minus = r[~plus] <= roundoff[~plus]
    return bool(ok_plus.all() and ok_minus.all())


def sparsify(z, rel: float = SUPPORT_TRUNCATION) -> np.ndarray:
    """Zero entries with ``|z_i| <= rel * max|z|``."""
    z = np.asarray(z, dtype=float).copy()
    zmax = np.abs(z).max() if z.size else 0.0
    z[np.abs(z) <= rel * zmax] = 0.0
    return z


def support_of(z, rel: float = SUPPORT_TRUNCATION) -> tuple:
    return tuple(int(i) for i in np.flatnonzero(sparsify(z, rel)))


def nmse(x, xhat) -> float:
    """``||x - xhat||^2 / ||x||^2``."""
    x = np.asarray(x, dtype=float)
    return float(np.sum((x - xhat) ** 2) / np.sum(x ** 2))


def _solve_weighted(A, tau, bits, w, tol_feas, tol_pivot):
    m, n = A.shape
    M = bits[:, None] * A
    rhs = bits * tau + strict_margins(tau, bits)
    p = LpProblem(-rhs, np.vstack([M.T, -M.T]), (LE,) * (2 * n), np.concatenate([w, w]))
    sol = solve_lp(p, tol_feas=tol_feas, tol_pivot=tol_pivot)
    if sol.status == "unbounded":
        raise InfeasibleMeasurementsError(
            "no signal reproduces the observed bits at these thresholds"
        )
    if sol.status != "optimal":
        raise SolverFailure(f"dual of the decoding LP reported {sol.status}")
    uv = np.maximum(-sol.duals, 0.0)
    z = uv[:n] - uv[n:]
    return z, sol.iterations


def decode_weighted_l1(
    A, tau, bits, w, tol_feas: float = TOL_FEAS, tol_pivot: float = DECODER_TOL_PIVOT
) -> DecodeResult:
    """``min sum(w * |z|)`` subject to sign consistency."""
    A, tau, bits = check_problem(A, tau, bits)
    w = check_vector(w, A.shape[1], "w")
    if np.any(w < 0):
        raise InvalidArgumentError("weights must be nonnegative")
    z, its = _solve_weighted(A, tau, bits, w, tol_feas, tol_pivot)
    obj = float(w @ np.abs(z))
    return DecodeResult(
        xhat=z,
        objective=obj,
        lp_status_trace=["optimal"],
        consistency_ok=is_consistent(A, tau, bits, z),
        lp_iterations=its,
        objective_trace=[obj],
    )


def decode_l1(A, tau, bits, tol_feas: float = TOL_FEAS, tol_pivot: float = DECODER_TOL_PIVOT) -> DecodeResult:
    """Minimum l1-norm signal consistent with the bits."""
    A = np.asarray(A, dtype=float)
    return decode_weighted_l1(A, tau, bits, np.ones(A.shape[1]), tol_feas, tol_pivot)


def logsum_objective(z, epsilon_smooth: float) -> float:
    return float(np.sum(np.log(np.abs(z) + epsilon_smooth)))


def decode_logsum(
    A, tau, bits, cfg: LogSumConfig = LogSumConfig(),
    tol_feas: float = TOL_FEAS, tol_pivot: float = DECODER_TOL_PIVOT,
) -> DecodeResult:
    """Log-sum penalty minimization by iterative reweighting.

    The first pass uses unit weights (plain l1).  Each later pass minimizes
    the weighted l1 majorizer with ``w_i = 1 / (|z_i| + epsilon_smooth)``
    at the previous solution, so ``objective_trace`` (the log-sum penalty
    after every pass) never increases.  Stops when the penalty drops by
    less than 1e-8 or after ``cfg.max_outer`` passes.
    """
    A, tau, bits = check_problem(A, tau, bits)
    n = A.shape[1]
    w = np.ones(n)
    trace: List[float] = []
    statuses: List[str] = []
    its = 0
    z = np.zeros(n)
    for _ in range(cfg.max_outer):
        z, k = _solve_weighted(A, tau, bits, w, tol_feas, tol_pivot)
        its += k
        statuses.append("optimal")
        trace.append(logsum_objective(z, cfg.epsilon_smooth))
        if len(trace) > 1 and trace[-2] - trace[-1] < LOGSUM_STOP:
            break
        w = np.maximum(1.0 / (np.abs(z) + cfg.epsilon_smooth), cfg.weight_floor)
    return DecodeResult(
        xhat=z,
        objective=trace[-1],
        outer_iterations=len(trace),
        lp_status_trace=statuses,
        consistency_ok=is_consistent(A, tau, bits, z),
        lp_iterations=its,
        objective_trace=trace,
    )


def decode_l0_bruteforce(A, tau, bits, Kmax: int, tol_feas: float = TOL_FEAS) -> DecodeResult:
    """Sparsest consistent signal by exhaustive search over supports.

    Supports are tried by increasing size and, within a size, in
    lexicographic order; the first one whose restricted sign-constraint
    system is feasible wins and its phase-1 point is returned.
    """
    A, tau, bits = check_problem(A, tau, bits)
    m, n = A.shape
    if Kmax < 0 or Kmax > n:
        raise InvalidArgumentError(f"Kmax must lie in [0, {n}]")
    if comb(n, Kmax) > L0_GUARD:
        raise TooLargeError(f"C({n}, {Kmax}) supports exceed the guard of {L0_GUARD}")
    M = bits[:, None] * A
    rhs = bits * tau + strict_margins(tau, bits)
    z = np.zeros(n)
    if is_consistent(A, tau, bits, z):
        return DecodeResult(z, 0.0, lp_status_trace=[], support=())
    trace: List[str] = []
    for k in range(1, Kmax + 1):
        lower = np.full(k, -np.inf)
        for T in combinations(range(n), k):
            cols = list(T)
            point = feasible_point(M[:, cols], (GE,) * m, rhs, lower, tol_feas=tol_feas)
            if point is None:
                trace.append("infeasible")
                continue
            trace.append("optimal")
            z = np.zeros(n)
            z[cols] = point
            return DecodeResult(
                xhat=z,
                objective=float(k),
                lp_status_trace=trace,
                consistency_ok=is_consistent(A, tau, bits, z),
                support=T,
            )
    raise InfeasibleAtSparsityError(f"no consistent signal with at most {Kmax} nonzeros")
