"""Pluggable per-block compression: "none", "pca", or "wavelet".

Encoders take the representative matrix from deduplication and produce one
byte payload per block plus (for PCA) a model that decoding needs; the
decoder is the exact structural inverse at the payload level.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from ..errors import BlockDecodeError
from .entropy import rle_huffman_decode, rle_huffman_encode
from .pca import PcaModel, fit_pca, pca_decode, pca_encode
from .wavelet import (
    dequantize,
    haar_forward,
    haar_inverse,
    quantize,
    soft_threshold,
    universal_threshold,
)

KINDS = ("none", "pca", "wavelet")


@dataclass(frozen=True)
class ReductionConfig:
    kind: str
    components: int | None = None
    quality: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown reduction kind {self.kind!r}")
        if self.kind == "pca":
            if self.components is None or self.components < 1:
                raise ValueError("pca reduction needs components >= 1")
        elif self.components is not None:
            raise ValueError("components only applies to pca reduction")
        if self.kind == "wavelet":
            if self.quality is None or not 0.0 <= self.quality <= 100.0:
                raise ValueError("wavelet reduction needs quality in [0, 100]")
        elif self.quality is not None:
            raise ValueError("quality only applies to wavelet reduction")

    def check_block_dims(self, block_dims: tuple[int, int, int]) -> None:
        if self.kind == "wavelet" and any(d & (d - 1) for d in block_dims):
            raise ValueError(
                f"wavelet reduction needs power-of-two block dims, got {block_dims}"
            )
        if self.kind == "pca":
            n = int(np.prod(block_dims))
            if self.components > n:
                raise ValueError(f"components {self.components} > block elements {n}")

    @property
    def label(self) -> str:
        if self.kind == "pca":
            return f"pca(m={self.components})"
        if self.kind == "wavelet":
            return f"wavelet(q={self.quality:g})"
        return "none"


def encode_wavelet_block(vector: np.ndarray, block_dims, quality: float) -> bytes:
    block = np.asarray(vector, dtype=np.float64).reshape(block_dims, order="F")
    coeffs = soft_threshold(haar_forward(block), quality)
    scale, ints = quantize(coeffs)
    return struct.pack("<f", scale) + rle_huffman_encode(ints)


def decode_wavelet_block(payload: bytes, block_dims) -> np.ndarray:
    if len(payload) < 4:
        raise BlockDecodeError("wavelet payload shorter than its scale field")
    (scale,) = struct.unpack_from("<f", payload, 0)
    n = int(np.prod(block_dims))
    ints = rle_huffman_decode(payload[4:], n)
    coeffs = dequantize(scale, ints).reshape(block_dims)
    return haar_inverse(coeffs).astype(np.float32).ravel(order="F")


def encode_representatives(
    representatives: np.ndarray,
    block_dims: tuple[int, int, int],
    config: ReductionConfig,
) -> tuple[list[bytes], PcaModel | None]:
    """Payload bytes per canonical ID, plus the PCA model when applicable."""
    config.check_block_dims(block_dims)
    if config.kind == "none":
        return [row.astype("<f4").tobytes() for row in representatives], None
    if config.kind == "pca":
        model = fit_pca(representatives, config.components)
        return [pca_encode(row, model).astype("<f4").tobytes() for row in representatives], model
    payloads = [
        encode_wavelet_block(row, block_dims, config.quality) for row in representatives
    ]
    return payloads, None


def decode_payload(
    payload: bytes,
    block_dims: tuple[int, int, int],
    config: ReductionConfig,
    model: PcaModel | None = None,
) -> np.ndarray:
    """Decode one payload back to a flattened float32 block."""
    n = int(np.prod(block_dims))
    if config.kind == "none":
        if len(payload) != 4 * n:
            raise BlockDecodeError(f"raw payload is {len(payload)} bytes, expected {4 * n}")
        return np.frombuffer(payload, dtype="<f4").copy()
    if config.kind == "pca":
        if model is None:
            raise BlockDecodeError("pca codebook is missing its model metadata")
        if len(payload) != 4 * model.m:
            raise BlockDecodeError(
                f"pca payload is {len(payload)} bytes, expected {4 * model.m}"
            )
        return pca_decode(np.frombuffer(payload, dtype="<f4"), model).astype(np.float32)
    return decode_wavelet_block(payload, block_dims)


__all__ = [
    "KINDS",
    "PcaModel",
    "ReductionConfig",
    "decode_payload",
    "decode_wavelet_block",
    "dequantize",
    "encode_representatives",
    "encode_wavelet_block",
    "fit_pca",
    "haar_forward",
    "haar_inverse",
    "pca_decode",
    "pca_encode",
    "quantize",
    "rle_huffman_decode",
    "rle_huffman_encode",
    "soft_threshold",
    "universal_threshold",
]
