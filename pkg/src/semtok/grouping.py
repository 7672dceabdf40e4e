"""Grouping maps: which subwords share a semantic token.

Three producers: seeded spherical k-means over the embedding rows, the
first-k baseline (keep the earliest k content subwords, sink the rest
into the unknown token's group), and connected components of a bilingual
lexicon. ``merge_embeddings`` averages member rows per group.

Special tokens are never clustered; they keep singleton groups appended
after the k-means clusters. Semantic ids are numbered by first
appearance in ascending subword-id order, so an all-singleton grouping
is the identity map and outputs are stable golden files.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as kernels
from .errors import ConfigError, DataError, FormatError, NumericError, RowCountMismatchError, ZeroRowError
from .store import EmbeddingMatrix, Issue, Vocabulary

METHODS = ("kmeans", "first_k", "lexicon")
METRICS = ("cosine", "euclidean")

# Tolerated relative objective increase; covers float64 round-off in the
# objective sums near convergence, nothing more.
OBJECTIVE_FP_GUARD = 1e-9


@dataclass
class KMeansConfig:
    k: int
    metric: str = "cosine"
    max_iters: int = 100
    rel_tol: float = 1e-6
    seed: int = 0
    init: str = "kmeans_pp"
    empty_cluster_policy: str = "reassign_farthest"

    def check(self, n_clusterable: int) -> None:
        if self.metric not in METRICS:
            raise ConfigError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.init != "kmeans_pp":
            raise ConfigError(f"unsupported init {self.init!r}")
        if self.empty_cluster_policy != "reassign_farthest":
            raise ConfigError(f"unsupported empty_cluster_policy {self.empty_cluster_policy!r}")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.rel_tol < 0:
            raise ConfigError(f"rel_tol must be >= 0, got {self.rel_tol}")
        if not 1 <= self.k <= n_clusterable:
            raise ConfigError(
                f"k={self.k} out of range: must be in [1, {n_clusterable}] "
                "(number of clusterable rows)"
            )


@dataclass(frozen=True)
class GroupingMap:
    """Total, surjective assignment of subword ids to semantic ids."""

    assignment: np.ndarray  # int32, length |V|
    num_semantic: int
    method: str
    seed: int
    k: int

    def __post_init__(self):
        arr = np.ascontiguousarray(self.assignment, dtype=np.int32)
        view = arr.view()
        view.flags.writeable = False
        object.__setattr__(self, "assignment", view)

    def __len__(self) -> int:
        return len(self.assignment)

    def group_of(self, subword_id: int) -> int:
        return int(self.assignment[subword_id])

    def members(self, semantic_id: int) -> np.ndarray:
        return np.nonzero(self.assignment == semantic_id)[0]


@dataclass
class KMeansResult:
    map: GroupingMap
    centroids: np.ndarray  # (k, dim) float64; unit rows under cosine
    objective_trace: list[float] = field(default_factory=list)
    n_iters: int = 0
    converged: bool = False


def grouping_ratio(grouping: GroupingMap) -> Fraction:
    """r = |V'| / |V| as an exact rational; ``float()`` gives the f64 value."""
    n = len(grouping.assignment)
    if n == 0:
        raise DataError("empty grouping map")
    return Fraction(grouping.num_semantic, n)


def clusters_for_ratio(n_rows: int, ratio: float) -> int:
    """Cluster count targeting ``ratio`` of ``n_rows`` (excluded specials
    are appended on top as singletons)."""
    if not 0 < ratio <= 1:
        raise ConfigError(f"grouping ratio must be in (0, 1], got {ratio}")
    return max(1, math.ceil(ratio * n_rows))


def _renumber_first_appearance(raw_labels, n: int, excluded: Sequence[int], cluster_ids):
    """Contiguous semantic ids: clusters by first appearance in ascending
    subword-id order, then excluded ids as singletons, ascending."""
    assignment = np.empty(n, dtype=np.int32)
    remap: dict[int, int] = {}
    for pos, sub_id in enumerate(cluster_ids):
        lab = int(raw_labels[pos])
        if lab not in remap:
            remap[lab] = len(remap)
        assignment[sub_id] = remap[lab]
    next_id = len(remap)
    for sub_id in excluded:
        assignment[sub_id] = next_id
        next_id += 1
    return assignment, next_id, remap


def spherical_kmeans(
    emb: EmbeddingMatrix, cfg: KMeansConfig, exclude: Iterable[int] = ()
) -> KMeansResult:
    """Seeded k-means on the embedding rows (cosine or squared-L2).

    Under cosine, rows are L2-normalized, assignment maximizes the dot
    product with unit centroids, and centroids are renormalized means of
    the assigned unit rows. Excluded ids become singleton groups after
    the k clusters. Deterministic for fixed (inputs, seed).
    """
    n = emb.rows
    excluded = sorted({int(i) for i in exclude})
    for i in excluded:
        if not 0 <= i < n:
            raise DataError(f"excluded id {i} out of range [0, {n})")
    excluded_set = set(excluded)
    cluster_ids = np.array([i for i in range(n) if i not in excluded_set], dtype=np.int64)
    m = len(cluster_ids)
    cfg.check(m)

    x = emb.array[cluster_ids].astype(np.float64)
    if cfg.metric == "cosine":
        norms = np.sqrt(np.einsum("ij,ij->i", x, x))
        zeros = np.nonzero(norms == 0.0)[0]
        if len(zeros):
            raise ZeroRowError(int(cluster_ids[zeros[0]]))
        points = np.ascontiguousarray(x / norms[:, None])
        assign = kernels.assign_cosine
        min_dist_update = kernels.min_dist_update_cosine
    else:
        points = np.ascontiguousarray(x)
        assign = kernels.assign_euclidean
        min_dist_update = kernels.min_dist_update_euclidean

    rng = np.random.default_rng(cfg.seed)
    centers = _kmeans_plus_plus(points, cfg.k, rng, min_dist_update)

    labels, obj, dists = assign(points, centers)
    trace = [obj]
    converged = False
    n_iters = 0
    for _ in range(cfg.max_iters):
        _repair_empty_clusters(points, labels, dists, centers, cfg.k)
        _update_centers(points, labels, centers, cfg.k, cfg.metric)
        new_labels, new_obj, new_dists = assign(points, centers)
        n_iters += 1
        trace.append(new_obj)
        if new_obj > obj + OBJECTIVE_FP_GUARD * max(1.0, abs(obj)):
            raise NumericError(
                f"k-means objective increased from {obj} to {new_obj}"
            )
        same = bool(np.array_equal(new_labels, labels))
        small_change = abs(obj - new_obj) <= cfg.rel_tol * max(abs(obj), 1e-300)
        labels, obj, dists = new_labels, new_obj, new_dists
        if same or small_change:
            converged = True
            break

    _repair_empty_clusters(points, labels, dists, centers, cfg.k)
    _update_centers(points, labels, centers, cfg.k, cfg.metric)

    assignment, num_semantic, remap = _renumber_first_appearance(
        labels, n, excluded, cluster_ids
    )
    ordered_centers = np.empty((len(remap), centers.shape[1]), dtype=np.float64)
    for old, new in remap.items():
        ordered_centers[new] = centers[old]
    grouping = GroupingMap(
        assignment=assignment,
        num_semantic=num_semantic,
        method="kmeans",
        seed=cfg.seed,
        k=cfg.k,
    )
    return KMeansResult(
        map=grouping,
        centroids=ordered_centers,
        objective_trace=trace,
        n_iters=n_iters,
        converged=converged,
    )


def _kmeans_plus_plus(points, k: int, rng, min_dist_update):
    """Seeded k-means++: each next center is sampled with probability
    proportional to the point's current cost contribution."""
    n, d = points.shape
    centers = np.empty((k, d), dtype=np.float64)
    first = int(rng.integers(n))
    centers[0] = points[first]
    d2 = np.full(n, np.inf, dtype=np.float64)
    min_dist_update(points, centers[0], d2)
    np.maximum(d2, 0.0, out=d2)
    for c in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            r = float(rng.random()) * total
            idx = int(np.searchsorted(np.cumsum(d2), r, side="right"))
            idx = min(idx, n - 1)
        centers[c] = points[idx]
        min_dist_update(points, centers[c], d2)
        np.maximum(d2, 0.0, out=d2)
    return centers


def _repair_empty_clusters(points, labels, dists, centers, k: int) -> None:
    """Give each empty cluster the globally farthest point (ties toward
    the lowest row id), skipping points that would empty their source."""
    counts = np.bincount(labels, minlength=k)
    empties = np.nonzero(counts == 0)[0]
    if not len(empties):
        return
    order = np.argsort(-dists, kind="stable")
    cursor = 0
    for e in empties:
        while cursor < len(order):
            p = int(order[cursor])
            cursor += 1
            src = int(labels[p])
            if counts[src] > 1:
                counts[src] -= 1
                labels[p] = e
                counts[e] = 1
                centers[e] = points[p]
                dists[p] = 0.0
                break


def _update_centers(points, labels, centers, k: int, metric: str) -> None:
    """Centroids = per-cluster means, accumulated in ascending row order;
    renormalized to unit length under cosine."""
    sums, counts = kernels.accumulate_rows(points, labels, k)
    nonempty = counts > 0
    means = sums[nonempty] / counts[nonempty, None].astype(np.float64)
    if metric == "cosine":
        norms = np.sqrt(np.einsum("ij,ij->i", means, means))
        ok = norms > 0.0
        means[ok] = means[ok] / norms[ok, None]
        # a zero mean (exactly antipodal members) keeps the old centroid
        idx = np.nonzero(nonempty)[0][ok]
        centers[idx] = means[ok]
    else:
        centers[nonempty] = means


def first_k(vocab: Vocabulary, k: int) -> GroupingMap:
    """Keep the first k non-special subwords (file order) as singletons;
    every other content subword joins the unknown token's group."""
    n = len(vocab)
    specials = sorted(vocab.special_token_ids)
    if k < len(specials) or k > n:
        raise ConfigError(
            f"k={k} out of range: need |specials|={len(specials)} <= k <= |V|={n}"
        )
    special_set = vocab.special_token_ids
    non_special = [i for i in range(n) if i not in special_set]
    kept = set(non_special[: min(k, len(non_special))])

    assignment = np.empty(n, dtype=np.int32)
    group_ids: dict[tuple, int] = {}
    for i in range(n):
        if i == vocab.unk_id or (i not in special_set and i not in kept):
            key = ("unk",)
        elif i in special_set:
            key = ("special", i)
        else:
            key = ("kept", i)
        if key not in group_ids:
            group_ids[key] = len(group_ids)
        assignment[i] = group_ids[key]
    return GroupingMap(
        assignment=assignment,
        num_semantic=len(group_ids),
        method="first_k",
        seed=0,
        k=k,
    )


class UnionFind:
    """Disjoint sets over 0..n-1 with path compression."""

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def lexicon_group(vocab: Vocabulary, pairs, *, lowercase: bool = False):
    """Semantic groups = connected components of the surviving word pairs.

    Pairs whose words do not map to a single non-special subword are
    dropped. Returns ``(GroupingMap, FilterReport)``; an empty surviving
    set yields the identity map.
    """
    from .alignment import filter_single_subword

    id_pairs, report = filter_single_subword(pairs, vocab, lowercase=lowercase)
    n = len(vocab)
    uf = UnionFind(n)
    for a, b in id_pairs:
        uf.union(a, b)
    assignment = np.empty(n, dtype=np.int32)
    group_ids: dict[int, int] = {}
    for i in range(n):
        root = uf.find(i)
        if root not in group_ids:
            group_ids[root] = len(group_ids)
        assignment[i] = group_ids[root]
    grouping = GroupingMap(
        assignment=assignment,
        num_semantic=len(group_ids),
        method="lexicon",
        seed=0,
        k=len(group_ids),
    )
    return grouping, report


def merge_embeddings(emb: EmbeddingMatrix, grouping: GroupingMap) -> EmbeddingMatrix:
    """Row g = unweighted mean of member rows, accumulated in ascending
    subword-id order in float64, stored float32."""
    n = len(grouping.assignment)
    if emb.rows != n:
        raise RowCountMismatchError(n, emb.rows)
    labels = np.ascontiguousarray(grouping.assignment, dtype=np.int32)
    x = np.ascontiguousarray(emb.array, dtype=np.float64)
    sums, counts = kernels.accumulate_rows(x, labels, grouping.num_semantic)
    if (counts == 0).any():
        missing = int(np.nonzero(counts == 0)[0][0])
        raise DataError(f"semantic id {missing} has no members")
    means = sums / counts[:, None].astype(np.float64)
    return EmbeddingMatrix(means.astype(np.float32))


def validate_grouping_map(grouping: GroupingMap, vocab: Vocabulary | None = None) -> list[Issue]:
    """Report violated map invariants; empty iff the map is sound."""
    issues: list[Issue] = []
    a = grouping.assignment
    n = len(a)
    if n == 0:
        issues.append(Issue("EmptyAssignment", ()))
        return issues
    k = grouping.num_semantic
    if a.min() < 0 or a.max() >= k:
        issues.append(Issue("SemanticIdOutOfRange", (int(a.min()), int(a.max()), k)))
        return issues
    counts = np.bincount(a, minlength=k)
    for g in np.nonzero(counts == 0)[0]:
        issues.append(Issue("MissingSemanticId", (int(g),)))
    if vocab is not None:
        if len(vocab) != n:
            issues.append(Issue("AssignmentLength", (len(vocab), n)))
        else:
            for s in sorted(vocab.special_token_ids):
                size = int(counts[a[s]])
                if s == vocab.unk_id:
                    others = [
                        t for t in vocab.special_token_ids if t != s and a[t] == a[s]
                    ]
                    if others:
                        issues.append(Issue("SpecialsMerged", (s, others[0])))
                    if size > 1 and grouping.method != "first_k":
                        issues.append(Issue("SpecialNotSingleton", (s, size)))
                elif size != 1:
                    issues.append(Issue("SpecialNotSingleton", (s, size)))
    return issues


GROUPING_HEADER_RE = re.compile(
    r"^#semtok-grouping v1  method=(?P<method>\S+) seed=(?P<seed>-?\d+) k=(?P<k>\d+)$"
)


def save_grouping_map(grouping: GroupingMap, vocab: Vocabulary, path) -> None:
    """TSV: header, then ``subword_id<TAB>semantic_id<TAB>token`` rows."""
    if len(vocab) != len(grouping.assignment):
        raise RowCountMismatchError(len(vocab), len(grouping.assignment))
    lines = [
        f"#semtok-grouping v1  method={grouping.method} "
        f"seed={grouping.seed} k={grouping.k}"
    ]
    for i, tok in enumerate(vocab.tokens):
        lines.append(f"{i}\t{grouping.assignment[i]}\t{tok}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_grouping_map(path) -> tuple[GroupingMap, list[str]]:
    """Inverse of :func:`save_grouping_map`; returns (map, tokens)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise FormatError(f"{path}: empty file")
    m = GROUPING_HEADER_RE.match(lines[0])
    if not m:
        raise FormatError(f"{path}: malformed header {lines[0]!r}")
    method, seed, k = m.group("method"), int(m.group("seed")), int(m.group("k"))
    if method not in METHODS:
        raise FormatError(f"{path}: unknown method {method!r}")
    assignment = []
    tokens = []
    for ln, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != 3:
            raise FormatError(f"{path}:{ln}: expected 3 tab-separated fields")
        sub_id, sem_id, tok = fields
        if int(sub_id) != len(assignment):
            raise FormatError(f"{path}:{ln}: subword ids must be 0,1,2,...")
        assignment.append(int(sem_id))
        tokens.append(tok)
    if not assignment:
        raise FormatError(f"{path}: no rows")
    arr = np.array(assignment, dtype=np.int32)
    num = int(arr.max()) + 1
    present = np.bincount(arr, minlength=num)
    if (present == 0).any():
        g = int(np.nonzero(present == 0)[0][0])
        raise FormatError(f"{path}: semantic ids not contiguous (missing {g})")
    return (
        GroupingMap(assignment=arr, num_semantic=num, method=method, seed=seed, k=k),
        tokens,
    )
