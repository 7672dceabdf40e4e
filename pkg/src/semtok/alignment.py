"""Cross-lingual subword alignment: lexicon ingestion, round-trip pair
mining, and contrastive training of the embedding rows.

Word pairs come from bilingual dictionaries (``pair_tsv``:
``lang_a<TAB>word_a<TAB>lang_b<TAB>word_b``) and multilingual concept
lists (``concept_tsv``: ``concept_id<TAB>lang<TAB>word``). Only words
that tokenize to a single non-special subword survive. Training is plain
SGD on an InfoNCE loss over cosine similarities with in-batch negatives;
only embedding rows referenced by the surviving pairs are touched.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as kernels
from .errors import ConfigError, DataError, FormatError, IdOutOfRangeError, ZeroRowError
from .store import EmbeddingMatrix, Vocabulary
from .tokenizer import encode

logger = logging.getLogger(__name__)

LEXICON_FORMATS = ("pair_tsv", "concept_tsv")


@dataclass(frozen=True)
class LexiconPair:
    word_a: str
    lang_a: str
    word_b: str
    lang_b: str
    source: str = ""


@dataclass(frozen=True)
class ConceptSet:
    concept_id: str
    entries: tuple[tuple[str, str], ...]  # (lang, word)


@dataclass
class ClsaConfig:
    temperature: float = 0.05
    learning_rate: float = 1e-3
    batch_size: int = 256
    epochs: int = 5
    seed: int = 0
    similarity: str = "cosine"
    symmetric_loss: bool = True

    def check(self) -> None:
        if self.temperature <= 0:
            raise ConfigError(f"temperature must be > 0, got {self.temperature}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 2:
            raise ConfigError(
                f"batch_size must be >= 2 so in-batch negatives exist, got {self.batch_size}"
            )
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.similarity != "cosine":
            raise ConfigError(f"unsupported similarity {self.similarity!r}")


def _check_word(word: str) -> str | None:
    if word == "":
        return "empty word"
    if any(ch.isspace() for ch in word):
        return "word contains whitespace"
    return None


def ingest_lexicon(
    path, format: str, *, strict: bool = True
) -> tuple[list[LexiconPair], list[ConceptSet]]:
    """Parse a lexicon file; records come back in file order.

    Duplicates are preserved (collapsing them is a separate step). In
    strict mode a malformed line aborts with its line number; lenient
    mode logs and skips it.
    """
    if format not in LEXICON_FORMATS:
        raise FormatError(f"unknown lexicon format {format!r}; expected {LEXICON_FORMATS}")
    path = Path(path)
    pairs: list[LexiconPair] = []
    concept_entries: dict[str, list[tuple[str, str]]] = {}
    concept_order: list[str] = []

    def bad(line_no: int, reason: str) -> None:
        msg = f"{path}:{line_no}: {reason}"
        if strict:
            raise FormatError(msg)
        logger.warning("skipping malformed lexicon line: %s", msg)

    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if line == "":
                continue
            fields = line.split("\t")
            if format == "pair_tsv":
                if len(fields) != 4:
                    bad(line_no, f"expected 4 tab-separated fields, got {len(fields)}")
                    continue
                lang_a, word_a, lang_b, word_b = fields
                problem = _check_word(word_a) or _check_word(word_b)
                if problem:
                    bad(line_no, problem)
                    continue
                pairs.append(
                    LexiconPair(
                        word_a=word_a,
                        lang_a=lang_a,
                        word_b=word_b,
                        lang_b=lang_b,
                        source=path.name,
                    )
                )
            else:
                if len(fields) != 3:
                    bad(line_no, f"expected 3 tab-separated fields, got {len(fields)}")
                    continue
                concept_id, lang, word = fields
                if concept_id == "":
                    bad(line_no, "empty concept id")
                    continue
                problem = _check_word(word)
                if problem:
                    bad(line_no, problem)
                    continue
                if concept_id not in concept_entries:
                    concept_entries[concept_id] = []
                    concept_order.append(concept_id)
                if (lang, word) not in concept_entries[concept_id]:
                    concept_entries[concept_id].append((lang, word))
    concepts = [
        ConceptSet(concept_id=cid, entries=tuple(concept_entries[cid]))
        for cid in concept_order
    ]
    return pairs, concepts


def expand_concepts(sets: Sequence[ConceptSet]) -> list[LexiconPair]:
    """All C(m, 2) unordered pairs per concept, source = concept id."""
    pairs: list[LexiconPair] = []
    for cs in sets:
        for (lang_a, word_a), (lang_b, word_b) in combinations(cs.entries, 2):
            pairs.append(
                LexiconPair(
                    word_a=word_a,
                    lang_a=lang_a,
                    word_b=word_b,
                    lang_b=lang_b,
                    source=cs.concept_id,
                )
            )
    return pairs


@dataclass
class FilterReport:
    total_pairs: int = 0
    kept_pairs: int = 0
    drops: dict = field(default_factory=dict)
    covered_subwords: int = 0
    vocab_size: int = 0

    @property
    def coverage(self) -> float:
        return self.covered_subwords / self.vocab_size if self.vocab_size else 0.0

    def coverage_percent(self) -> str:
        return f"{100.0 * self.coverage:.1f}%"

    def summary(self) -> str:
        dropped = ", ".join(f"{k}={v}" for k, v in sorted(self.drops.items())) or "none"
        return (
            f"pairs: {self.kept_pairs}/{self.total_pairs} kept (drops: {dropped}); "
            f"vocabulary coverage {self.coverage_percent()}"
        )


def _single_subword_id(
    word: str, vocab: Vocabulary, lowercase: bool
) -> tuple[int | None, str | None]:
    result = encode(word, vocab, lowercase=lowercase)
    if len(result.ids) != 1 or result.ids[0] == vocab.unk_id:
        return None, "MultiPiece"
    sid = result.ids[0]
    if vocab.is_special(sid):
        return None, "SpecialToken"
    return sid, None


def filter_single_subword(
    pairs: Iterable[LexiconPair], vocab: Vocabulary, *, lowercase: bool = False
) -> tuple[list[tuple[int, int]], FilterReport]:
    """Keep pairs whose both words are single non-special subwords.

    Survivors come back as (id_a, id_b); the report counts drops by
    reason and the fraction of the vocabulary covered by survivors.
    """
    report = FilterReport(vocab_size=len(vocab))
    kept: list[tuple[int, int]] = []
    covered: set[int] = set()
    for pair in pairs:
        report.total_pairs += 1
        problem = _check_word(pair.word_a) or _check_word(pair.word_b)
        if problem:
            report.drops["InvalidWord"] = report.drops.get("InvalidWord", 0) + 1
            continue
        id_a, why_a = _single_subword_id(pair.word_a, vocab, lowercase)
        if id_a is None:
            report.drops[why_a] = report.drops.get(why_a, 0) + 1
            continue
        id_b, why_b = _single_subword_id(pair.word_b, vocab, lowercase)
        if id_b is None:
            report.drops[why_b] = report.drops.get(why_b, 0) + 1
            continue
        kept.append((id_a, id_b))
        covered.add(id_a)
        covered.add(id_b)
    report.kept_pairs = len(kept)
    report.covered_subwords = len(covered)
    return kept, report


def dedup_pairs(id_pairs: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    """Collapse duplicate id pairs (unordered), keeping first occurrences."""
    seen: set[tuple[int, int]] = set()
    out: list[tuple[int, int]] = []
    for a, b in id_pairs:
        key = (a, b) if a <= b else (b, a)
        if key not in seen:
            seen.add(key)
            out.append((a, b))
    return out


def mine_roundtrip(
    emb: EmbeddingMatrix, candidate_ids: Iterable[int]
) -> list[tuple[int, int]]:
    """Pairs (i, j), i < j, that are each other's cosine nearest neighbor
    among the candidates (self excluded; ties toward the lowest id)."""
    cands = sorted({int(i) for i in candidate_ids})
    if len(cands) < 2:
        raise DataError(f"need at least 2 candidates, got {len(cands)}")
    for i in cands:
        if not 0 <= i < emb.rows:
            raise IdOutOfRangeError(i, emb.rows)
    x = emb.array[cands].astype(np.float64)
    norms = np.sqrt(np.einsum("ij,ij->i", x, x))
    zeros = np.nonzero(norms == 0.0)[0]
    if len(zeros):
        raise ZeroRowError(cands[int(zeros[0])])
    unit = np.ascontiguousarray(x / norms[:, None])
    nn = kernels.nearest_neighbor_cosine(unit)
    out: list[tuple[int, int]] = []
    for i in range(len(cands)):
        j = int(nn[i])
        if i < j and int(nn[j]) == i:
            out.append((cands[i], cands[j]))
    return out


def clsa_loss(
    batch: Sequence[tuple[int, int]],
    emb: EmbeddingMatrix,
    tau: float,
    *,
    symmetric: bool = True,
) -> tuple[float, dict[int, np.ndarray]]:
    """InfoNCE loss of one batch and its gradient per involved row.

    Each pair's positive similarity competes against the other batch
    members as negatives. Gradients are float64, keyed by embedding row
    id; rows appearing several times accumulate.
    """
    if tau <= 0:
        raise ConfigError(f"temperature must be > 0, got {tau}")
    if len(batch) == 0:
        raise DataError("batch must contain at least one pair")
    a_ids = [int(a) for a, _ in batch]
    b_ids = [int(b) for _, b in batch]
    for i in a_ids + b_ids:
        if not 0 <= i < emb.rows:
            raise IdOutOfRangeError(i, emb.rows)
    w = emb.array
    loss, ga, gb = _batch_loss_grad(w, a_ids, b_ids, tau, symmetric)
    grads: dict[int, np.ndarray] = {}
    for pos, rid in enumerate(a_ids):
        if rid in grads:
            grads[rid] = grads[rid] + ga[pos]
        else:
            grads[rid] = ga[pos].copy()
    for pos, rid in enumerate(b_ids):
        if rid in grads:
            grads[rid] = grads[rid] + gb[pos]
        else:
            grads[rid] = gb[pos].copy()
    return loss, grads


def _batch_loss_grad(w, a_ids, b_ids, tau, symmetric):
    a = w[a_ids].astype(np.float64)
    b = w[b_ids].astype(np.float64)
    for rows, ids in ((a, a_ids), (b, b_ids)):
        norms = np.einsum("ij,ij->i", rows, rows)
        zeros = np.nonzero(norms == 0.0)[0]
        if len(zeros):
            raise ZeroRowError(ids[int(zeros[0])])
    return kernels.infonce_loss_grad(
        np.ascontiguousarray(a), np.ascontiguousarray(b), float(tau), bool(symmetric)
    )


def train_clsa(
    emb: EmbeddingMatrix, pairs: Sequence[tuple[int, int]], cfg: ClsaConfig
) -> tuple[EmbeddingMatrix, list[tuple[int, float]]]:
    """Plain SGD over shuffled batches of surviving id pairs.

    Returns the updated matrix and the per-batch loss trace. Rows not
    referenced by any pair are bitwise untouched. Batches shorter than 2
    pairs are dropped (no negatives). Gradients accumulate in float64 and
    are applied in float32.
    """
    cfg.check()
    if len(pairs) == 0:
        raise DataError("training needs at least one surviving pair")
    for a, b in pairs:
        for i in (int(a), int(b)):
            if not 0 <= i < emb.rows:
                raise IdOutOfRangeError(i, emb.rows)
    w = emb.array.copy()
    rng = np.random.default_rng(cfg.seed)
    trace: list[tuple[int, float]] = []
    step = 0
    lr = cfg.learning_rate
    for _ in range(cfg.epochs):
        perm = rng.permutation(len(pairs))
        for lo in range(0, len(perm), cfg.batch_size):
            chunk = perm[lo : lo + cfg.batch_size]
            if len(chunk) < 2:
                continue
            a_ids = [int(pairs[t][0]) for t in chunk]
            b_ids = [int(pairs[t][1]) for t in chunk]
            loss, ga, gb = _batch_loss_grad(w, a_ids, b_ids, cfg.temperature, cfg.symmetric_loss)
            trace.append((step, float(loss)))
            merged: dict[int, np.ndarray] = {}
            for pos, rid in enumerate(a_ids):
                if rid in merged:
                    merged[rid] = merged[rid] + ga[pos]
                else:
                    merged[rid] = ga[pos].copy()
            for pos, rid in enumerate(b_ids):
                if rid in merged:
                    merged[rid] = merged[rid] + gb[pos]
                else:
                    merged[rid] = gb[pos].copy()
            for rid, grad in merged.items():
                w[rid] = (w[rid].astype(np.float64) - lr * grad).astype(np.float32)
            step += 1
    return EmbeddingMatrix(w), trace


def save_loss_trace(trace: Sequence[tuple[int, float]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "loss"])
        for step, loss in trace:
            writer.writerow([step, repr(float(loss))])


def load_loss_trace(path) -> list[tuple[int, float]]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["step", "loss"]:
            raise FormatError(f"{path}: expected 'step,loss' header")
        return [(int(row[0]), float(row[1])) for row in reader]
