"""scikit-learn style front ends for the decoders and the adaptive loop.

The sensing matrix plays the role of ``X`` and the sign bits the role of
``y``; thresholds travel as a fit parameter, the way ``sample_weight`` does
for ordinary estimators.  After ``fit`` the reconstruction is in ``coef_``
and ``predict(X)`` returns the measurements it implies, ``X @ coef_``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_problem, check_sensing_matrix, check_vector
from .adaptive import AdaptiveConfig, Encoder, adapt_recover
from .decoders import (
    LogSumConfig,
    decode_l0_bruteforce,
    decode_l1,
    decode_logsum,
    decode_weighted_l1,
    support_of,
)
from .exceptions import InvalidArgumentError
from .lpcore import TOL_FEAS
from .model import DeviationSpec, one_bit_sign

__all__ = [
    "L1Decoder",
    "WeightedL1Decoder",
    "LogSumDecoder",
    "L0Decoder",
    "AdaptiveOneBitRecovery",
]


class _OneBitDecoder(BaseEstimator):
    """Shared ``fit`` / ``predict`` plumbing; subclasses implement ``_decode``."""

    def fit(self, X, y, thresholds=0.0):
        """Recover a sparse signal from sensing matrix ``X`` and bits ``y``.

        ``thresholds`` is a scalar or a length-``m`` vector.
        """
        A, tau, bits = check_problem(X, thresholds, y)
        result = self._decode(A, tau, bits)
        self.coef_ = result.xhat
        self.objective_ = result.objective
        self.consistency_ok_ = result.consistency_ok
        self.n_iter_ = result.outer_iterations
        self.support_ = np.array(support_of(result.xhat), dtype=np.intp)
        self.result_ = result
        self.n_features_in_ = A.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return self._check_X(X) @ self.coef_

    def predict_bits(self, X, thresholds=0.0):
        """Bits the fitted signal would produce at ``thresholds``."""
        z = self.predict(X)
        return one_bit_sign(z - check_vector(thresholds, z.shape[0], "thresholds"))

    def score(self, X, y, thresholds=0.0):
        """Fraction of bits in ``y`` reproduced by the fitted signal."""
        return float(np.mean(self.predict_bits(X, thresholds) == np.asarray(y, dtype=float)))

    def _check_X(self, X):
        A = check_sensing_matrix(X)
        if A.shape[1] != self.n_features_in_:
            raise InvalidArgumentError(f"X has {A.shape[1]} columns, expected {self.n_features_in_}")
        return A


class L1Decoder(_OneBitDecoder):
    """Minimum l1-norm signal consistent with the observed bits.

    Parameters
    ----------
    tol_feas : float
        Feasibility tolerance of the simplex engine.
    """

    def __init__(self, tol_feas=TOL_FEAS):
        self.tol_feas = tol_feas

    def _decode(self, A, tau, bits):
        return decode_l1(A, tau, bits, tol_feas=self.tol_feas)


class WeightedL1Decoder(_OneBitDecoder):
    """Minimum weighted l1-norm consistent signal; ``weights=None`` means all ones."""

    def __init__(self, weights=None, tol_feas=TOL_FEAS):
        self.weights = weights
        self.tol_feas = tol_feas

    def _decode(self, A, tau, bits):
        w = np.ones(A.shape[1]) if self.weights is None else self.weights
        return decode_weighted_l1(A, tau, bits, w, tol_feas=self.tol_feas)


class LogSumDecoder(_OneBitDecoder):
    """Log-sum penalty decoder solved by reweighted l1.

    After ``fit``, ``objective_trace_`` holds the penalty after every
    reweighting pass.
    """

    def __init__(self, epsilon_smooth=0.01, max_outer=10, weight_floor=0.0, tol_feas=TOL_FEAS):
        self.epsilon_smooth = epsilon_smooth
        self.max_outer = max_outer
        self.weight_floor = weight_floor
        self.tol_feas = tol_feas

    def _decode(self, A, tau, bits):
        cfg = LogSumConfig(self.epsilon_smooth, self.max_outer, self.weight_floor)
        res = decode_logsum(A, tau, bits, cfg, tol_feas=self.tol_feas)
        self.objective_trace_ = list(res.objective_trace)
        return res


class L0Decoder(_OneBitDecoder):
    """Exhaustive sparsest consistent signal, for tiny problems only."""

    def __init__(self, max_sparsity=1, tol_feas=TOL_FEAS):
        self.max_sparsity = max_sparsity
        self.tol_feas = tol_feas

    def _decode(self, A, tau, bits):
        return decode_l0_bruteforce(A, tau, bits, self.max_sparsity, tol_feas=self.tol_feas)


class AdaptiveOneBitRecovery(BaseEstimator):
    """Adaptive threshold refinement against an :class:`Encoder`.

    ``fit(X, encoder)`` takes the encoder in place of ``y``: the
    unquantized measurements never leave it.

    Parameters
    ----------
    xi0, decay : float
        Initial deviation scale and its per-round divisor.
    omega : float
        Stop once the reconstruction moves by at most this much (l2).
    max_rounds : int
    deviation : str
        ``"gaussian"`` or ``"rademacher"`` unit deviations.
    decoder : str
        ``"l1"`` or ``"logsum"``.
    random_state : int, Generator or None
    """

    def __init__(self, xi0=1.0, decay=10.0, omega=0.01, max_rounds=20, deviation="gaussian",
                 decoder="l1", epsilon_smooth=0.01, random_state=None):
        self.xi0 = xi0
        self.decay = decay
        self.omega = omega
        self.max_rounds = max_rounds
        self.deviation = deviation
        self.decoder = decoder
        self.epsilon_smooth = epsilon_smooth
        self.random_state = random_state

    def fit(self, X, encoder: Encoder, x_true=None):
        A = check_sensing_matrix(X)
        cfg = AdaptiveConfig(
            xi0=self.xi0, decay=self.decay, omega=self.omega, max_rounds=self.max_rounds,
            deviation=DeviationSpec(self.deviation, 1.0), decoder=self.decoder,
            logsum=LogSumConfig(self.epsilon_smooth),
        )
        trace = adapt_recover(encoder, A, cfg, self.random_state, x_true=x_true)
        self.trace_ = trace
        self.coef_ = trace.xhat
        self.n_rounds_ = trace.rounds_used
        self.stop_reason_ = trace.stop_reason
        self.n_features_in_ = A.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return check_sensing_matrix(X) @ self.coef_
