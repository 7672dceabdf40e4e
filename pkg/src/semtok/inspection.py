"""Cluster inspection reports and parameter accounting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, UnknownTokenError
from .grouping import GroupingMap, grouping_ratio
from .store import EmbeddingMatrix, Vocabulary


@dataclass(frozen=True)
class ClusterReport:
    semantic_id: int
    members: tuple[tuple[int, str], ...]  # (subword_id, token), ascending id
    size: int
    label: str | None

    def to_dict(self) -> dict:
        return {
            "semantic_id": self.semantic_id,
            "size": self.size,
            "label": self.label,
            "members": [{"id": i, "token": t} for i, t in self.members],
        }


def cluster_members(
    grouping: GroupingMap,
    vocab: Vocabulary,
    g: int,
    emb: EmbeddingMatrix | None = None,
) -> ClusterReport:
    """Members of semantic group ``g`` in ascending subword-id order.

    With embeddings available, the label is the member token whose row is
    nearest (cosine) to the group's mean row, ties toward the lowest id;
    a singleton's label is its token either way.
    """
    if not 0 <= g < grouping.num_semantic:
        raise DataError(f"semantic id {g} out of range [0, {grouping.num_semantic})")
    if len(vocab) != len(grouping.assignment):
        raise DataError(
            f"vocabulary size {len(vocab)} != assignment length {len(grouping.assignment)}"
        )
    ids = grouping.members(g)
    members = tuple((int(i), vocab.tokens[int(i)]) for i in ids)
    label: str | None = None
    if len(members) == 1:
        label = members[0][1]
    elif emb is not None:
        rows = emb.array[ids].astype(np.float64)
        mean = rows.mean(axis=0)
        norms = np.sqrt(np.einsum("ij,ij->i", rows, rows))
        mean_norm = float(np.sqrt(mean @ mean))
        if mean_norm > 0.0 and (norms > 0.0).all():
            cos = (rows @ mean) / (norms * mean_norm)
            label = members[int(np.argmax(cos))][1]
        else:
            label = members[0][1]
    return ClusterReport(semantic_id=g, members=members, size=len(members), label=label)


def find_token(
    grouping: GroupingMap,
    vocab: Vocabulary,
    token: str,
    emb: EmbeddingMatrix | None = None,
) -> tuple[int, int, ClusterReport]:
    """(subword_id, semantic_id, report of that token's group)."""
    sub_id = vocab.token_to_id(token)
    if sub_id is None:
        raise UnknownTokenError(token)
    sem_id = grouping.group_of(sub_id)
    return sub_id, sem_id, cluster_members(grouping, vocab, sem_id, emb)


@dataclass(frozen=True)
class ClusterStats:
    size_histogram: dict  # size -> number of groups of that size
    max_size: int
    singleton_count: int
    num_semantic: int
    vocab_size: int
    grouping_ratio: float

    def to_dict(self) -> dict:
        return {
            "size_histogram": {str(k): v for k, v in sorted(self.size_histogram.items())},
            "max_size": self.max_size,
            "singleton_count": self.singleton_count,
            "num_semantic": self.num_semantic,
            "vocab_size": self.vocab_size,
            "grouping_ratio": self.grouping_ratio,
        }


def cluster_stats(grouping: GroupingMap) -> ClusterStats:
    sizes = np.bincount(grouping.assignment, minlength=grouping.num_semantic)
    hist: dict[int, int] = {}
    for s in sizes:
        hist[int(s)] = hist.get(int(s), 0) + 1
    return ClusterStats(
        size_histogram=hist,
        max_size=int(sizes.max()),
        singleton_count=int((sizes == 1).sum()),
        num_semantic=grouping.num_semantic,
        vocab_size=len(grouping.assignment),
        grouping_ratio=float(grouping_ratio(grouping)),
    )


def embedding_param_ratio(v_size: int, d_full: int, d: int, r_g: float) -> float:
    """Embedding-parameter fraction (r_g * V * d) / (V * D)."""
    if v_size <= 0 or d_full <= 0 or d <= 0:
        raise ConfigError("sizes must be positive")
    if d > d_full:
        raise ConfigError(f"d={d} exceeds full dimension {d_full}")
    if not 0 < r_g <= 1:
        raise ConfigError(f"grouping ratio must be in (0, 1], got {r_g}")
    return (r_g * v_size * d) / (v_size * d_full)


def model_param_count(v_prime: int, d: int, non_embedding_params: int) -> int:
    """Total parameters: |V'| x d embedding table plus everything else."""
    if v_prime < 0 or d < 0 or non_embedding_params < 0:
        raise ConfigError("parameter counts must be non-negative")
    return v_prime * d + non_embedding_params
