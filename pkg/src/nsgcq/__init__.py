"""Invertible constant-Q transforms built from painless nonstationary Gabor frames."""
from .design import CqParams, build_cq_system, cq_layout, q_factor, upsampled_system
from .errors import (DesignFailure, InvalidParams, InvalidTarget, LengthMismatch, NonRealResult,
                     NotAFrame, NsgError, OddCoefCount, RangeError, ShapeMismatch)
from .frames import (Filter, FrameCheck, NsgSystem, canonical_dual, frame_diagonal,
                     is_painless_frame)
from .processing import (Mask, RasterCoefficients, apply_mask, derasterize, rasterize,
                         transpose_bins)
from .slicq import (SliceStream, SlicedCoefficients, dual_slicing_window, make_slicing_window,
                    slice_system, slicq_analyze, slicq_synthesize)
from .transform import (RaggedCoefficients, analyze, real_analyze, real_synthesize,
                        synthesize)

__all__ = [
    "CqParams", "build_cq_system", "cq_layout", "q_factor", "upsampled_system",
    "DesignFailure", "InvalidParams", "InvalidTarget", "LengthMismatch", "NonRealResult",
    "NotAFrame", "NsgError", "OddCoefCount", "RangeError", "ShapeMismatch",
    "Filter", "FrameCheck", "NsgSystem", "canonical_dual", "frame_diagonal",
    "is_painless_frame",
    "Mask", "RasterCoefficients", "apply_mask", "derasterize", "rasterize", "transpose_bins",
    "SliceStream", "SlicedCoefficients", "dual_slicing_window", "make_slicing_window",
    "slice_system", "slicq_analyze", "slicq_synthesize",
    "RaggedCoefficients", "analyze", "real_analyze", "real_synthesize", "synthesize",
]
