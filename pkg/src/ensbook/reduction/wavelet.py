"""Orthonormal Haar transform with soft thresholding and 16-bit quantization.

Separable multi-level 3-D Haar on power-of-two blocks: per level, each axis
of length >= 2 maps pairs (a, b) to ((a+b)/sqrt2, (a-b)/sqrt2), then the
next level recurses into the approximation corner.  The soft threshold is a
Universal Threshold scaled by a quality factor in [0, 100]; quality 100
turns thresholding off entirely.
"""

from __future__ import annotations

import math

import numpy as np

_SQRT2 = math.sqrt(2.0)


def _check_dims(dims) -> None:
    for d in dims:
        if d < 1 or d & (d - 1):
            raise ValueError(f"block dims must be powers of two, got {tuple(dims)}")


def _forward_axis(box: np.ndarray, axis: int) -> None:
    view = np.moveaxis(box, axis, 0)
    even, odd = view[0::2].copy(), view[1::2].copy()
    half = view.shape[0] // 2
    view[:half] = (even + odd) / _SQRT2
    view[half:] = (even - odd) / _SQRT2


def _inverse_axis(box: np.ndarray, axis: int) -> None:
    view = np.moveaxis(box, axis, 0)
    half = view.shape[0] // 2
    sums, diffs = view[:half].copy(), view[half:].copy()
    view[0::2] = (sums + diffs) / _SQRT2
    view[1::2] = (sums - diffs) / _SQRT2


def haar_forward(block: np.ndarray) -> np.ndarray:
    """Full multi-level transform; log2(d) levels per axis of length d."""
    _check_dims(block.shape)
    coeffs = np.asarray(block, dtype=np.float64).copy()
    extents = list(coeffs.shape)
    while any(e >= 2 for e in extents):
        box = coeffs[tuple(slice(0, e) for e in extents)]
        for axis in range(3):
            if extents[axis] >= 2:
                _forward_axis(box, axis)
        extents = [e // 2 if e >= 2 else e for e in extents]
    return coeffs


def haar_inverse(coeffs: np.ndarray) -> np.ndarray:
    """Exact inverse of :func:`haar_forward`."""
    _check_dims(coeffs.shape)
    out = np.asarray(coeffs, dtype=np.float64).copy()
    levels = max(int(math.log2(d)) for d in out.shape) if max(out.shape) > 1 else 0
    for level in range(levels, 0, -1):
        extents = [max(d >> (level - 1), 1) for d in out.shape]
        box = out[tuple(slice(0, e) for e in extents)]
        for axis in (2, 1, 0):
            if extents[axis] >= 2:
                _inverse_axis(box, axis)
    return out


def universal_threshold(n: int, mad: float, quality: float) -> float:
    """lambda = sqrt(2 ln n) * sigma_hat with sigma_hat = 2 (100-q)/100 MAD."""
    if not 0.0 <= quality <= 100.0:
        raise ValueError(f"quality must be in [0, 100], got {quality}")
    sigma_hat = 2.0 * (100.0 - quality) / 100.0 * mad
    return math.sqrt(2.0 * math.log(n)) * sigma_hat


def soft_threshold(coeffs: np.ndarray, quality: float) -> np.ndarray:
    """Soft-threshold the detail coefficients in place-like fashion.

    The single approximation coefficient at [0, 0, 0] is exempt from both
    the threshold and the MAD estimate.
    """
    out = np.asarray(coeffs, dtype=np.float64).copy()
    flat = out.ravel()
    details = flat[1:]
    if details.size == 0:
        return out
    med = np.median(details)
    mad = float(np.median(np.abs(details - med)))
    lam = universal_threshold(out.size, mad, quality)
    if lam > 0.0:
        flat[1:] = np.sign(details) * np.maximum(np.abs(details) - lam, 0.0)
    return out


def quantize(coeffs: np.ndarray) -> tuple[float, np.ndarray]:
    """Uniform 16-bit quantizer with a per-block scale (0 for all-zero)."""
    flat = np.asarray(coeffs, dtype=np.float64).ravel()
    peak = float(np.abs(flat).max(initial=0.0))
    if peak == 0.0:
        return 0.0, np.zeros(flat.size, dtype=np.int16)
    scale = peak / 32767.0
    return scale, np.rint(flat / scale).astype(np.int16)


def dequantize(scale: float, ints: np.ndarray) -> np.ndarray:
    return np.asarray(ints, dtype=np.float64) * scale
