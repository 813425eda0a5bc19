from .fsq import FsqLevels, fsq_bound, fsq_quantize, fsq_dequantize
from .vq import Codebook, vq_quantize, vq_ema_update
from .lfq import lfq_quantize, lfq_dequantize
from .rvq import RvqStack, rvq_quantize, rvq_dequantize
from .util import codebook_utilization
from .wrappers import (
    QuantizerBase, FsqQuantizer, VqQuantizer, LfqQuantizer, RvqQuantizer,
    make_quantizer,
)

__all__ = [
    "FsqLevels", "fsq_bound", "fsq_quantize", "fsq_dequantize",
    "Codebook", "vq_quantize", "vq_ema_update",
    "lfq_quantize", "lfq_dequantize",
    "RvqStack", "rvq_quantize", "rvq_dequantize",
    "codebook_utilization",
    "QuantizerBase", "FsqQuantizer", "VqQuantizer", "LfqQuantizer",
    "RvqQuantizer", "make_quantizer",
]
