from .code import PolarCodeSpec
from .decoder import (LLR_CLAMP, KernelFunctions, path_metric_update, posteriors_teacher_forced,
                      sc_decode, sc_decode_numpy, scl_decode)
from .transform import bit_reversal_permutation, butterfly, log2_exact, polar_transform

__all__ = [
    "LLR_CLAMP", "KernelFunctions", "PolarCodeSpec", "bit_reversal_permutation", "butterfly",
    "log2_exact", "path_metric_update", "polar_transform", "posteriors_teacher_forced",
    "sc_decode", "sc_decode_numpy", "scl_decode",
]
