"""Principal-component transform coding of flattened blocks.

Each block is a point in an n-dimensional space (n = block elements); the
model keeps the top m principal directions of the mean-centered
representative set.  Encoding projects onto that basis, decoding is the
orthogonal reconstruction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class PcaModel:
    mean: np.ndarray   # (n,) float32
    basis: np.ndarray  # (m, n) float32, orthonormal rows
    degenerate: bool = False

    @property
    def n(self) -> int:
        return self.mean.shape[0]

    @property
    def m(self) -> int:
        return self.basis.shape[0]


def _fix_signs(basis: np.ndarray) -> np.ndarray:
    """Make each row's largest-magnitude entry positive (ties: earliest)."""
    for row in basis:
        pivot = np.argmax(np.abs(row))
        if row[pivot] < 0:
            row *= -1.0
    return basis


def _complete_basis(rows: list[np.ndarray], n: int, m: int) -> list[np.ndarray]:
    """Extend an orthonormal row set to m rows via Gram-Schmidt over e_i."""
    for i in range(n):
        if len(rows) == m:
            break
        v = np.zeros(n)
        v[i] = 1.0
        for r in rows:
            v -= (r @ v) * r
        norm = np.linalg.norm(v)
        if norm > 1e-6:
            rows.append(v / norm)
    return rows


def fit_pca(representatives: np.ndarray, m: int) -> PcaModel:
    """Fit mean + top-m orthonormal directions by descending variance.

    Degenerate inputs (rank below m, e.g. all blocks identical) are padded
    with an arbitrary-but-orthonormal completion and flagged.
    """
    data = np.asarray(representatives, dtype=np.float64)
    if data.ndim != 2 or len(data) < 1:
        raise ValueError("representatives must be a non-empty (N, n) matrix")
    n = data.shape[1]
    if not 1 <= m <= n:
        raise ValueError(f"components must be in [1, {n}], got {m}")

    mean = data.mean(axis=0)
    centered = data - mean
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    tol = max(svals[0], 1.0) * 1e-10 if len(svals) else 0.0
    rank = int((svals > tol).sum())

    rows = [vt[i].copy() for i in range(min(m, rank))]
    degenerate = m > rank
    if degenerate:
        rows = _complete_basis(rows, n, m)
    basis = _fix_signs(np.stack(rows))
    return PcaModel(
        mean=mean.astype(np.float32),
        basis=basis.astype(np.float32),
        degenerate=degenerate,
    )


def pca_encode(block: np.ndarray, model: PcaModel) -> np.ndarray:
    block = np.asarray(block, dtype=np.float32)
    if block.shape != (model.n,):
        raise ValueError(f"block has {block.shape}, model expects ({model.n},)")
    return model.basis @ (block - model.mean)


def pca_decode(coeffs: np.ndarray, model: PcaModel) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=np.float32)
    if coeffs.shape != (model.m,):
        raise ValueError(f"coeffs have {coeffs.shape}, model expects ({model.m},)")
    return model.mean + model.basis.T @ coeffs
