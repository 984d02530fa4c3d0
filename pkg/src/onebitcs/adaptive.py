"""Closed-loop threshold refinement between a one-bit encoder and a decoder.

The encoder keeps the unquantized measurements private and only answers
threshold queries with sign bits.  The decoder starts from thresholds drawn
around zero, and at every later round centres fresh random thresholds on
the measurements predicted by its latest reconstruction, shrinking the
random spread geometrically.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ._validation import check_sensing_matrix, check_vector
from .decoders import DecodeResult, LogSumConfig, decode_l1, decode_logsum, nmse
from .exceptions import InfeasibleMeasurementsError, InvalidArgumentError
from .model import DeviationSpec, SparseSignal, as_generator, gen_deviation, measure, quantize

__all__ = [
    "Encoder",
    "AdaptiveConfig",
    "RoundRecord",
    "AdaptiveTrace",
    "AdaptiveAbort",
    "encoder_respond",
    "adapt_recover",
    "nonadaptive_recover",
]

XI_FLOOR = 1e-12


class Encoder:
    """Holds ``y`` and answers ``respond(tau) -> sign(y - tau)``."""

    def __init__(self, y):
        y = np.asarray(y, dtype=float).ravel()
        if y.size < 1:
            raise InvalidArgumentError("the encoder needs at least one measurement")
        self.__y = y
        self.query_count = 0

    @classmethod
    def from_signal(cls, A, x) -> "Encoder":
        return cls(measure(A, x))

    @property
    def m(self) -> int:
        return self.__y.size

    def respond(self, tau) -> np.ndarray:
        tau = check_vector(tau, self.m, "tau")
        self.query_count += 1
        return quantize(self.__y, tau).bits

    def __repr__(self):
        return f"Encoder(m={self.m}, queries={self.query_count})"


def encoder_respond(enc: Encoder, tau) -> np.ndarray:
    return enc.respond(tau)


@dataclass(frozen=True)
class AdaptiveConfig:
    xi0: float = 1.0
    decay: float = 10.0
    omega: float = 0.01
    max_rounds: int = 20
    deviation: DeviationSpec = DeviationSpec.gaussian(1.0)
    decoder: str = "l1"
    logsum: LogSumConfig = LogSumConfig()

    def __post_init__(self):
        if not self.xi0 > 0:
            raise InvalidArgumentError("xi0 must be positive")
        if not self.decay > 1:
            raise InvalidArgumentError("decay must exceed 1")
        if not self.omega > 0:
            raise InvalidArgumentError("omega must be positive")
        if self.max_rounds < 1:
            raise InvalidArgumentError("max_rounds must be at least 1")
        if self.decoder not in ("l1", "logsum"):
            raise InvalidArgumentError(f"unknown decoder {self.decoder!r}")


@dataclass(eq=False)
class RoundRecord:
    round: int
    xi: float
    tau: np.ndarray
    bits: np.ndarray
    xhat: np.ndarray
    nmse: Optional[float] = None
    l2_change: Optional[float] = None
    retried: bool = False


@dataclass(eq=False)
class AdaptiveTrace:
    m: int
    rounds: List[RoundRecord] = field(default_factory=list)
    stop_reason: Optional[str] = None
    queries: int = 0

    @property
    def rounds_used(self) -> int:
        return len(self.rounds)

    @property
    def total_bits(self) -> int:
        return self.m * self.queries

    @property
    def xhat(self) -> np.ndarray:
        return self.rounds[-1].xhat

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "xi", "nmse", "l2_change", "stop_reason"])
        for i, r in enumerate(self.rounds):
            last = i == len(self.rounds) - 1
            w.writerow([
                r.round,
                format(r.xi, ".17g"),
                "" if r.nmse is None else format(r.nmse, ".17g"),
                "" if r.l2_change is None else format(r.l2_change, ".17g"),
                self.stop_reason if last else "",
            ])
        return buf.getvalue()


class AdaptiveAbort(InfeasibleMeasurementsError):
    """A round stayed infeasible after its retry; ``trace`` holds the rounds so far."""

    def __init__(self, message, trace: AdaptiveTrace):
        super().__init__(message)
        self.trace = trace


def _decode(A, tau, bits, cfg: AdaptiveConfig) -> DecodeResult:
    if cfg.decoder == "logsum":
        return decode_logsum(A, tau, bits, cfg.logsum)
    return decode_l1(A, tau, bits)


def adapt_recover(enc: Encoder, A, cfg: AdaptiveConfig = AdaptiveConfig(), rng=None, x_true=None) -> AdaptiveTrace:
    """Run the refinement loop until the reconstruction moves by at most
    ``cfg.omega`` (l2) between rounds, or ``cfg.max_rounds`` rounds.

    Round 0 uses ``tau = xi0 * delta``. Round ``t`` uses
    ``tau = A @ xhat_prev + xi_t * delta`` with ``xi_t = xi0 / decay**t``,
    floored at ``1e-12 * (1 + max|A @ xhat_prev|)``, and a fresh ``delta``.
    A round whose bits admit no consistent signal is retried once with a
    new ``delta``; a second failure raises :class:`AdaptiveAbort`.
    ``x_true`` is only used to fill in per-round NMSE.
    """
    A = check_sensing_matrix(A)
    if A.shape[0] != enc.m:
        raise InvalidArgumentError(f"A has {A.shape[0]} rows but the encoder holds {enc.m} samples")
    rng = as_generator(rng)
    if isinstance(x_true, SparseSignal):
        x_true = x_true.dense()
    m = enc.m
    trace = AdaptiveTrace(m=m)
    yhat = np.zeros(m)
    prev = None
    for t in range(cfg.max_rounds):
        xi = cfg.xi0 / cfg.decay ** t
        if prev is not None:
            yhat = A @ prev
            xi = max(xi, XI_FLOOR * (1.0 + np.abs(yhat).max()))
        res = None
        for attempt in range(2):
            tau = yhat + xi * gen_deviation(cfg.deviation, m, rng)
            bits = enc.respond(tau)
            trace.queries += 1
            try:
                res = _decode(A, tau, bits, cfg)
                break
            except InfeasibleMeasurementsError:
                if attempt == 1:
                    trace.stop_reason = "aborted"
                    raise AdaptiveAbort(
                        f"round {t} infeasible twice at xi={xi:.3g}", trace
                    ) from None
        rec = RoundRecord(round=t, xi=xi, tau=tau, bits=bits, xhat=res.xhat, retried=attempt == 1)
        if x_true is not None:
            rec.nmse = nmse(x_true, res.xhat)
        if prev is not None:
            rec.l2_change = float(np.linalg.norm(res.xhat - prev))
        trace.rounds.append(rec)
        if rec.l2_change is not None and rec.l2_change <= cfg.omega:
            trace.stop_reason = "tolerance"
            return trace
        prev = res.xhat
    trace.stop_reason = "max_rounds"
    return trace


def nonadaptive_recover(enc: Encoder, A, cfg: AdaptiveConfig = AdaptiveConfig(), rng=None) -> DecodeResult:
    """Single decode with the round-0 thresholds ``tau = xi0 * delta``."""
    A = check_sensing_matrix(A)
    if A.shape[0] != enc.m:
        raise InvalidArgumentError(f"A has {A.shape[0]} rows but the encoder holds {enc.m} samples")
    rng = as_generator(rng)
    tau = cfg.xi0 * gen_deviation(cfg.deviation, enc.m, rng)
    return _decode(A, tau, enc.respond(tau), cfg)
