"""Checkable pieces of the recovery guarantee for the l0 decoder.

* :func:`compute_mu` -- the largest ``mu`` with ``||A[S] u||^2 >= mu ||u||^2``
  for every ``kappa``-row subset ``S`` and every ``2K``-sparse ``u``.
* :func:`check_measurement_condition` -- the sufficient condition on ``m``.
* :func:`error_bound` -- ``||xhat - x|| <= ||delta|| / sqrt(mu)``.
* :func:`orthant_bound` / :func:`sample_orthant_count` -- how many sign
  patterns a ``k``-dimensional subspace of ``R^m`` can realize.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from ._validation import check_problem, check_sensing_matrix
from .decoders import decode_l0_bruteforce, strict_margins
from .exceptions import InvalidArgumentError, TooLargeError
from .lpcore import GE, LpProblem, feasible_point, solve_lp
from .model import (
    DeviationSpec,
    as_generator,
    gen_deviation,
    gen_gaussian_matrix,
    gen_sparse_signal,
    measure,
    quantize,
    thresholds_from_deviation,
)

__all__ = [
    "MU_GUARD",
    "ORTHANT_MAX_M",
    "TheoryReport",
    "BoundTrialRecord",
    "compute_mu",
    "measurement_constant",
    "check_measurement_condition",
    "tightest_eta",
    "error_bound",
    "verify_bound_trial",
    "worst_case_deviation",
    "orthant_bound",
    "sample_orthant_count",
]

MU_GUARD = 10**6
ORTHANT_MAX_M = 40
VIOLATION_SLACK = 1e-9


@dataclass(frozen=True)
class TheoryReport:
    mu: float
    kappa: int
    K: int
    condition_lhs: float
    condition_rhs: float
    condition_holds: bool
    eta: float
    c_const: float

    @property
    def lam(self) -> Optional[float]:
        return 1.0 / math.sqrt(self.mu) if self.mu > 0 else None


@dataclass(frozen=True)
class BoundTrialRecord:
    seed: Optional[int]
    deviation_norm: float
    residual_norm: float
    mu: float
    bound: float
    violated: bool
    worst_case_radius: Optional[float]
    support_found: tuple
    true_support: tuple


def compute_mu(A, K: int, kappa: int) -> float:
    """Minimum over row subsets of size ``kappa`` and column supports of size
    ``2K`` of the smallest eigenvalue of the ``2K x 2K`` Gram matrix."""
    A = check_sensing_matrix(A)
    m, n = A.shape
    s = 2 * K
    if K < 1 or s > kappa:
        raise InvalidArgumentError(f"need K >= 1 and kappa >= 2K, got K={K}, kappa={kappa}")
    if kappa > m or s > n:
        raise InvalidArgumentError(f"kappa <= m and 2K <= n required for a {m}x{n} matrix")
    if math.comb(m, kappa) * math.comb(n, s) > MU_GUARD:
        raise TooLargeError(
            f"C({m},{kappa})*C({n},{s}) submatrices exceed the guard of {MU_GUARD}"
        )
    supports = np.array(list(combinations(range(n), s)), dtype=np.intp)
    rows_idx = supports[:, :, None]
    cols_idx = supports[:, None, :]
    best = np.inf
    for S in combinations(range(m), kappa):
        As = A[list(S)]
        G = As.T @ As
        lam_min = np.linalg.eigvalsh(G[rows_idx, cols_idx])[:, 0].min()
        best = min(best, float(lam_min))
        if best <= 0.0:
            return 0.0
    return best


def measurement_constant(kappa: int) -> float:
    """``(kappa - 1) * (log2(e / (kappa - 1)) + 1)``."""
    return (kappa - 1) * (math.log2(math.e / (kappa - 1)) + 1.0)


def check_measurement_condition(m: int, n: int, K: int, kappa: int, eta: float):
    """Both sides of the sufficient condition on ``m`` (base-2 logarithms).

    Returns ``(lhs, rhs, lhs >= rhs)``.
    """
    if not (m >= kappa >= 2 * K >= 2):
        raise InvalidArgumentError(f"need m >= kappa >= 2K >= 2, got m={m}, kappa={kappa}, K={K}")
    if n < 1:
        raise InvalidArgumentError("n must be positive")
    if not 0.0 < eta < 1.0:
        raise InvalidArgumentError("eta must lie in (0, 1)")
    log2 = math.log2
    lhs = m - 2 * K * log2(m - kappa + 1) - (kappa - 1) * log2(m)
    rhs = (
        2 * K * (log2(n * math.e ** 2) - 2 * log2(2 * K) + 1)
        + log2(1.0 / eta)
        + measurement_constant(kappa)
    )
    return lhs, rhs, lhs >= rhs


def tightest_eta(m: int, n: int, K: int, kappa: int) -> Optional[float]:
    """Smallest ``eta`` for which the condition holds, or ``None`` when it
    fails for every ``eta < 1``.  The condition then holds for any larger
    ``eta`` as well, so this is the strongest guarantee available at ``m``."""
    lhs, rhs_at_one, _ = check_measurement_condition(m, n, K, kappa, 0.5)
    # rhs = (terms independent of eta) + log2(1/eta)
    slack = lhs - (rhs_at_one - 1.0)
    if slack <= 0:
        return None
    return min(2.0 ** -slack, 1.0)


def error_bound(deviation_norm: float, mu: float) -> float:
    if not mu > 0:
        raise InvalidArgumentError("mu must be positive")
    if deviation_norm < 0:
        raise InvalidArgumentError("deviation_norm must be nonnegative")
    return deviation_norm / math.sqrt(mu)


def worst_case_deviation(A, tau, bits, support: Sequence[int], x) -> float:
    """Upper bound on ``||z - x||`` over every consistent ``z`` supported on
    ``support``.

    Each support coordinate is pushed to both ends of the consistent set
    by two LPs; the per-coordinate worst distance from ``x`` is combined in
    l2, together with the part of ``x`` outside ``support``.  Returns
    ``inf`` when the consistent set is unbounded.
    """
    A, tau, bits = check_problem(A, tau, bits)
    x = np.asarray(x, dtype=float).ravel()
    cols = [int(j) for j in support]
    m = A.shape[0]
    k = len(cols)
    M = (bits[:, None] * A)[:, cols]
    rhs = bits * tau + strict_margins(tau, bits)
    lower = np.full(k, -np.inf)
    if feasible_point(M, (GE,) * m, rhs, lower) is None:
        raise InvalidArgumentError("support admits no consistent signal")
    off = np.ones(x.size, dtype=bool)
    off[cols] = False
    total = float(np.sum(x[off] ** 2))
    for i, j in enumerate(cols):
        reach = 0.0
        for direction in (1.0, -1.0):
            c = np.zeros(k)
            c[i] = -direction
            sol = solve_lp(LpProblem(c, M, (GE,) * m, rhs, lower))
            if sol.status == "unbounded":
                return math.inf
            reach = max(reach, direction * (sol.point[i] - x[j]))
        total += reach ** 2
    return math.sqrt(total)


def verify_bound_trial(
    n: int,
    m: int,
    K: int,
    kappa: int,
    dev: DeviationSpec,
    rng=None,
    with_worst_case: bool = True,
) -> BoundTrialRecord:
    """One Monte-Carlo check of the l0 error bound with ``tau = y - delta``."""
    seed = int(rng) if isinstance(rng, (int, np.integer)) else None
    rng = as_generator(rng)
    x = gen_sparse_signal(n, K, rng)
    A = gen_gaussian_matrix(m, n, rng).entries
    delta = gen_deviation(dev, m, rng)
    y = measure(A, x)
    tau = thresholds_from_deviation(y, delta, sign=-1)
    bits = quantize(y, tau).bits
    res = decode_l0_bruteforce(A, tau, bits, K)
    mu = compute_mu(A, K, kappa)
    eps = float(np.linalg.norm(delta))
    xd = x.dense()
    residual = float(np.linalg.norm(res.xhat - xd))
    bound = error_bound(eps, mu) if mu > 0 else math.inf
    worst = None
    if with_worst_case and res.support:
        worst = worst_case_deviation(A, tau, bits, res.support, xd)
    return BoundTrialRecord(
        seed=seed,
        deviation_norm=eps,
        residual_norm=residual,
        mu=mu,
        bound=bound,
        violated=residual > bound + VIOLATION_SLACK,
        worst_case_radius=worst,
        support_found=tuple(res.support or ()),
        true_support=tuple(int(i) for i in x.support),
    )


def orthant_bound(m: int, k: int) -> int:
    """``2**k * C(m, k)``, exact."""
    if not 1 <= k <= m:
        raise InvalidArgumentError(f"need 1 <= k <= m, got m={m}, k={k}")
    if m > ORTHANT_MAX_M:
        raise TooLargeError(f"m={m} exceeds the supported maximum {ORTHANT_MAX_M}")
    return (1 << k) * math.comb(m, k)


def sample_orthant_count(basis, num_samples: int, rng=None, chunk: int = 65536) -> int:
    """Distinct sign patterns among ``num_samples`` random points of the row
    space of ``basis`` (``k x m``), zero counted as negative."""
    basis = np.asarray(basis, dtype=float)
    if basis.ndim != 2:
        raise InvalidArgumentError("basis must be a k x m array")
    k, m = basis.shape
    if m > ORTHANT_MAX_M:
        raise TooLargeError(f"m={m} exceeds the supported maximum {ORTHANT_MAX_M}")
    if num_samples < 1:
        raise InvalidArgumentError("num_samples must be positive")
    rng = as_generator(rng)
    weights = np.left_shift(np.uint64(1), np.arange(m, dtype=np.uint64))
    seen = np.zeros(0, dtype=np.uint64)
    done = 0
    while done < num_samples:
        size = min(chunk, num_samples - done)
        pts = rng.standard_normal((size, k)) @ basis
        codes = ((pts > 0).astype(np.uint64) * weights).sum(axis=1, dtype=np.uint64)
        seen = np.union1d(seen, codes)
        done += size
    return int(seen.size)
