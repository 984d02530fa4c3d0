"""Input checks shared by the functional API and the estimators."""
import numpy as np
from sklearn.utils import check_array

from .exceptions import InvalidArgumentError
from .model import SensingEnsemble


def check_sensing_matrix(A) -> np.ndarray:
    if isinstance(A, SensingEnsemble):
        return A.entries
    try:
        return check_array(A, dtype=np.float64, ensure_2d=True)
    except ValueError as exc:
        raise InvalidArgumentError(str(exc)) from exc


def check_vector(v, length: int, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        v = np.full(length, float(v))
    v = v.ravel()
    if v.shape[0] != length:
        raise InvalidArgumentError(f"{name} has length {v.shape[0]}, expected {length}")
    if not np.all(np.isfinite(v)):
        raise InvalidArgumentError(f"{name} must be finite")
    return v


def check_bits(bits, length: int) -> np.ndarray:
    bits = check_vector(bits, length, "bits")
    if not np.all((bits == 1.0) | (bits == -1.0)):
        raise InvalidArgumentError("bits must be +1 or -1")
    return bits


def check_problem(A, tau, bits):
    """Validate a one-bit recovery instance ``(A, tau, bits)``."""
    A = check_sensing_matrix(A)
    m = A.shape[0]
    return A, check_vector(tau, m, "tau"), check_bits(bits, m)
