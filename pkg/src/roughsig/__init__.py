"""Signatures, rough paths, controlled RDEs and branched rough paths on sampled data."""

from .errors import DimensionMismatch, InputError, LevelCapError, NumericalError, RoughSigError
from .pvar_sewing import PathSamples, p_variation, young_integral
from .rough_path import RoughPathGrid, brownian_lift, chen_defect, lift_piecewise_linear, rough_distance, rough_pvar
from .signature import expected_signature, extend, log_signature, signature
from .tensor_algebra import TruncatedTensor, group_inverse, shuffle, tensor_exp, tensor_log, tensor_mul

__version__ = "0.1.0"

__all__ = [
    "DimensionMismatch", "InputError", "LevelCapError", "NumericalError", "RoughSigError",
    "PathSamples", "p_variation", "young_integral",
    "RoughPathGrid", "brownian_lift", "chen_defect", "lift_piecewise_linear", "rough_distance", "rough_pvar",
    "expected_signature", "extend", "log_signature", "signature",
    "TruncatedTensor", "group_inverse", "shuffle", "tensor_exp", "tensor_log", "tensor_mul",
]
