"""Compression of intermediate CNN feature tensors for split inference.

The package covers the full transfer pipeline (min/max quantization,
channel-to-image tiling, lossless and QP-controlled lossy coding, a
self-describing container) together with the evaluation machinery around
it: rate accounting in KBPI, Bjontegaard-Delta rate comparison, per-layer
profiling with latency-optimal split selection, and a desk-scale CNN
trainer supporting compression-augmented training.
"""

from .codec import (Bitstream, ContainerError, compress_tensor,
                    decode_lossless, decode_lossy, decompress_tensor,
                    encode_lossless, encode_lossy, pack, qstep, unpack)
from .metrics import (Box, CellObject, CellPrediction, GridTruth, LossWeights,
                      RDCurve, bd_delta_rate, iou, kbpi, mse, psnr_from_mse,
                      read_rd_csv, write_rd_csv, yolo_loss)
from .qlayer import QuantHeader, QuantizedTensor, dequantize, quantize
from .tensor import (FeatureTensor, TensorFormatError, TensorStats,
                     load_tensor, load_tensor_file, minmax, save_tensor,
                     save_tensor_file)
from .tiler import (TileImage, TileLayout, plan_layout, quilt, tile, unquilt,
                    untile)

__version__ = "0.1.0"

__all__ = [
    "FeatureTensor", "TensorFormatError", "TensorStats", "minmax",
    "save_tensor", "load_tensor", "save_tensor_file", "load_tensor_file",
    "QuantHeader", "QuantizedTensor", "quantize", "dequantize",
    "TileLayout", "TileImage", "plan_layout", "tile", "quilt", "untile",
    "unquilt",
    "Bitstream", "ContainerError", "encode_lossless", "decode_lossless",
    "encode_lossy", "decode_lossy", "pack", "unpack", "qstep",
    "compress_tensor", "decompress_tensor",
    "Box", "CellObject", "CellPrediction", "GridTruth", "LossWeights",
    "RDCurve", "bd_delta_rate", "iou", "kbpi", "mse", "psnr_from_mse",
    "yolo_loss", "read_rd_csv", "write_rd_csv",
    "__version__",
]
