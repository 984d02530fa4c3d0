"""One-bit compressed sensing with designed quantization thresholds."""
from .adaptive import AdaptiveConfig, AdaptiveTrace, Encoder, adapt_recover, nonadaptive_recover
from .decoders import (
    DecodeResult,
    LogSumConfig,
    decode_l0_bruteforce,
    decode_l1,
    decode_logsum,
    decode_weighted_l1,
)
from .estimators import AdaptiveOneBitRecovery, L0Decoder, L1Decoder, LogSumDecoder, WeightedL1Decoder
from .exceptions import (
    InfeasibleAtSparsityError,
    InfeasibleMeasurementsError,
    InvalidArgumentError,
    SolverFailure,
    TooLargeError,
)
from .model import (
    DeviationSpec,
    QuantizationRound,
    SensingEnsemble,
    SparseSignal,
    gen_deviation,
    gen_gaussian_matrix,
    gen_sparse_signal,
    measure,
    quantize,
)

__all__ = [
    "AdaptiveConfig", "AdaptiveTrace", "Encoder", "adapt_recover", "nonadaptive_recover",
    "DecodeResult", "LogSumConfig", "decode_l0_bruteforce", "decode_l1", "decode_logsum",
    "decode_weighted_l1",
    "AdaptiveOneBitRecovery", "L0Decoder", "L1Decoder", "LogSumDecoder", "WeightedL1Decoder",
    "InfeasibleAtSparsityError", "InfeasibleMeasurementsError", "InvalidArgumentError",
    "SolverFailure", "TooLargeError",
    "DeviationSpec", "QuantizationRound", "SensingEnsemble", "SparseSignal",
    "gen_deviation", "gen_gaussian_matrix", "gen_sparse_signal", "measure", "quantize",
]

__version__ = "0.1.0"
