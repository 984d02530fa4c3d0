"""Signals, sensing matrices, threshold deviations and the one-bit quantizer."""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .exceptions import InvalidArgumentError

__all__ = [
    "SparseSignal",
    "SensingEnsemble",
    "DeviationSpec",
    "QuantizationRound",
    "as_generator",
    "gen_sparse_signal",
    "gen_gaussian_matrix",
    "measure",
    "quantize",
    "one_bit_sign",
    "gen_deviation",
    "thresholds_from_deviation",
    "format_vector",
    "format_matrix",
    "format_bits",
    "parse_vector",
    "parse_matrix",
    "parse_bits",
]

RNGLike = Union[None, int, np.random.Generator]


def as_generator(rng: RNGLike) -> np.random.Generator:
    """Turn ``None``, an integer seed or a Generator into a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True, eq=False)
class SparseSignal:
    n: int
    support: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.intp).ravel()
        values = np.asarray(self.values, dtype=float).ravel()
        if support.shape != values.shape:
            raise InvalidArgumentError("support and values must have equal length")
        if support.size > self.n:
            raise InvalidArgumentError("support larger than the dimension")
        if support.size and (support[0] < 0 or support[-1] >= self.n or np.any(np.diff(support) <= 0)):
            raise InvalidArgumentError("support must be strictly increasing within [0, n)")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "values", values)

    @property
    def K(self) -> int:
        return int(self.support.size)

    def dense(self) -> np.ndarray:
        x = np.zeros(self.n)
        x[self.support] = self.values
        return x

    @classmethod
    def from_dense(cls, x) -> "SparseSignal":
        x = np.asarray(x, dtype=float).ravel()
        support = np.flatnonzero(x)
        return cls(x.size, support, x[support])


@dataclass(frozen=True, eq=False)
class SensingEnsemble:
    entries: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        A = np.ascontiguousarray(self.entries, dtype=float)
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise InvalidArgumentError(f"sensing matrix must be a non-empty 2-d array, got {A.shape}")
        if not np.all(np.isfinite(A)):
            raise InvalidArgumentError("sensing matrix entries must be finite")
        object.__setattr__(self, "entries", A)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class DeviationSpec:
    """Distribution of the threshold deviation: ``rademacher`` draws
    ``+-scale`` with equal probability, ``gaussian`` draws ``N(0, scale**2)``."""

    kind: str
    scale: float

    def __post_init__(self):
        if self.kind not in ("rademacher", "gaussian"):
            raise InvalidArgumentError(f"unknown deviation kind {self.kind!r}")
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise InvalidArgumentError("deviation scale must be a positive finite number")

    @classmethod
    def rademacher(cls, a: float) -> "DeviationSpec":
        return cls("rademacher", float(a))

    @classmethod
    def gaussian(cls, sigma: float) -> "DeviationSpec":
        return cls("gaussian", float(sigma))

    @classmethod
    def parse(cls, text: str) -> "DeviationSpec":
        """Parse ``"rademacher:0.001"`` or ``"gaussian:0.1"``."""
        kind, _, scale = text.partition(":")
        try:
            return cls(kind.strip(), float(scale) if scale else 1.0)
        except ValueError as exc:
            raise InvalidArgumentError(f"bad deviation spec {text!r}") from exc

    def with_scale(self, scale: float) -> "DeviationSpec":
        return DeviationSpec(self.kind, float(scale))


@dataclass(frozen=True, eq=False)
class QuantizationRound:
    tau: np.ndarray
    bits: np.ndarray
    delta: Optional[np.ndarray] = None

    @property
    def m(self) -> int:
        return int(self.bits.size)


def gen_sparse_signal(n: int, K: int, rng: RNGLike = None) -> SparseSignal:
    """Uniformly random support of size ``K`` with standard normal values."""
    if n < 1 or K < 0 or K > n:
        raise InvalidArgumentError(f"need 0 <= K <= n and n >= 1, got n={n}, K={K}")
    rng = as_generator(rng)
    support = np.sort(rng.choice(n, size=K, replace=False))
    values = rng.standard_normal(K)
    return SparseSignal(n, support, values)


def gen_gaussian_matrix(m: int, n: int, rng: RNGLike = None) -> SensingEnsemble:
    if m < 1 or n < 1:
        raise InvalidArgumentError(f"matrix dimensions must be positive, got {m}x{n}")
    seed = rng if isinstance(rng, (int, np.integer)) else None
    rng = as_generator(rng)
    return SensingEnsemble(rng.standard_normal((m, n)), seed=seed)


def _matrix(A) -> np.ndarray:
    if isinstance(A, SensingEnsemble):
        return A.entries
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise InvalidArgumentError("sensing matrix must be 2-d")
    return A


def measure(A, x) -> np.ndarray:
    """Unquantized measurements ``A @ x``; only the support columns are touched
    when ``x`` is a :class:`SparseSignal`."""
    A = _matrix(A)
    if isinstance(x, SparseSignal):
        if A.shape[1] != x.n:
            raise InvalidArgumentError(f"A has {A.shape[1]} columns but x has dimension {x.n}")
        return A[:, x.support] @ x.values
    x = np.asarray(x, dtype=float).ravel()
    if A.shape[1] != x.size:
        raise InvalidArgumentError(f"A has {A.shape[1]} columns but x has dimension {x.size}")
    return A @ x


def one_bit_sign(t) -> np.ndarray:
    """``+1`` where ``t > 0`` and ``-1`` elsewhere, zero included."""
    return np.where(np.asarray(t, dtype=float) > 0, 1.0, -1.0)


def quantize(y, tau) -> QuantizationRound:
    y = np.asarray(y, dtype=float).ravel()
    tau = np.asarray(tau, dtype=float)
    tau = np.full(y.shape, float(tau)) if tau.ndim == 0 else tau.ravel()
    if y.shape != tau.shape:
        raise InvalidArgumentError(f"y has length {y.size} but tau has length {tau.size}")
    return QuantizationRound(tau=tau, bits=one_bit_sign(y - tau))


def gen_deviation(spec: DeviationSpec, m: int, rng: RNGLike = None) -> np.ndarray:
    if m < 1:
        raise InvalidArgumentError("m must be positive")
    rng = as_generator(rng)
    if spec.kind == "rademacher":
        unit = np.where(rng.random(m) < 0.5, -1.0, 1.0)
    else:
        unit = rng.standard_normal(m)
    return spec.scale * unit


def thresholds_from_deviation(y, delta, sign: int = +1) -> np.ndarray:
    """``y + delta`` (``sign=+1``) or ``y - delta`` (``sign=-1``)."""
    if sign not in (1, -1):
        raise InvalidArgumentError("sign must be +1 or -1")
    y = np.asarray(y, dtype=float).ravel()
    delta = np.asarray(delta, dtype=float).ravel()
    if y.shape != delta.shape:
        raise InvalidArgumentError("y and delta must have equal length")
    return y + sign * delta


# CSV serialization: 17 significant digits so that values round-trip exactly.

def format_vector(v) -> str:
    return ",".join(format(float(t), ".17g") for t in np.asarray(v).ravel()) + "\n"


def format_matrix(A) -> str:
    return "".join(format_vector(row) for row in _matrix(A))


def format_bits(bits) -> str:
    return ",".join("+1" if b > 0 else "-1" for b in np.asarray(bits).ravel()) + "\n"


def _lines(text: str):
    return [ln for ln in io.StringIO(text).read().splitlines() if ln.strip()]


def parse_vector(text: str) -> np.ndarray:
    lines = _lines(text)
    if len(lines) != 1:
        raise InvalidArgumentError("a vector is serialized as exactly one line")
    return np.array([float(t) for t in lines[0].split(",")])


def parse_matrix(text: str) -> np.ndarray:
    rows = [[float(t) for t in ln.split(",")] for ln in _lines(text)]
    if not rows or len({len(r) for r in rows}) != 1:
        raise InvalidArgumentError("matrix rows must be non-empty and of equal length")
    return np.array(rows)


def parse_bits(text: str) -> np.ndarray:
    v = parse_vector(text)
    if not np.all(np.abs(v) == 1.0):
        raise InvalidArgumentError("bits must be +1 or -1")
    return v
