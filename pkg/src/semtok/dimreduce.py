"""Embedding dimension reduction: drop trailing coordinates, pad back.

Truncation keeps the leading ``d`` columns untouched (no projection);
zero-padding restores a target width with exact zeros. Only the word
embedding matrix is transformed.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .store import EmbeddingMatrix


def truncate(emb: EmbeddingMatrix, d: int) -> EmbeddingMatrix:
    """First ``d`` columns, bitwise."""
    if not 1 <= d <= emb.dim:
        raise ConfigError(f"d={d} out of range [1, {emb.dim}]")
    return EmbeddingMatrix(np.ascontiguousarray(emb.array[:, :d]))


def zero_pad(emb: EmbeddingMatrix, target_dim: int) -> EmbeddingMatrix:
    """Original columns bitwise, then exact zeros up to ``target_dim``."""
    if target_dim < emb.dim:
        raise ConfigError(
            f"target dim {target_dim} smaller than current dim {emb.dim}"
        )
    if target_dim == emb.dim:
        return EmbeddingMatrix(emb.array)
    out = np.zeros((emb.rows, target_dim), dtype=np.float32)
    out[:, : emb.dim] = emb.array
    return EmbeddingMatrix(out)
