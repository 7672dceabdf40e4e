"""Vocabularies and embedding matrices, plus their on-disk formats.

Two interchangeable formats:

* word2vec text: header line ``"N D"``, then ``N`` lines of
  ``token v1 ... vD`` separated by single spaces. Floats are printed with
  the shortest decimal representation that round-trips to the same
  float32, so save -> load is value-exact.
* ``semb`` binary: magic ``SEMB``, u32 LE version (=1), u64 LE row count,
  u32 LE dim, then ``N*D`` float32 LE values row-major. Bit-exact. The
  token list lives in a UTF-8 sidecar file (``<path>.vocab``), one token
  per line, id = line index.

Standard embedding files carry no special-token markup, so special tokens
and the unknown token are supplied by the caller (defaults below).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DataError,
    DuplicateTokenError,
    EmptyVocabularyError,
    FormatError,
    InvalidTokenError,
    MissingUnkTokenError,
    NonFiniteValueError,
    RowCountMismatchError,
)

DEFAULT_SPECIAL_TOKENS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")
DEFAULT_UNK_TOKEN = "[UNK]"

SEMB_MAGIC = b"SEMB"
SEMB_VERSION = 1
VOCAB_SIDECAR_SUFFIX = ".vocab"

FORMATS = ("w2v_text", "semb_binary")


@dataclass(frozen=True)
class Vocabulary:
    """Ordered subword vocabulary; a token's id is its position."""

    tokens: tuple[str, ...]
    continuation_prefix: str = "##"
    special_token_ids: frozenset[int] = frozenset()
    unk_id: int = 0
    _token_to_id: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        index: dict[str, int] = {}
        for i, tok in enumerate(self.tokens):
            index.setdefault(tok, i)
        object.__setattr__(self, "_token_to_id", index)

    @classmethod
    def from_tokens(
        cls,
        tokens: Iterable[str],
        *,
        special_tokens: Sequence[str] | None = None,
        unk_token: str | None = None,
        continuation_prefix: str = "##",
    ) -> "Vocabulary":
        """Build a vocabulary, resolving special/unknown tokens by string.

        ``special_tokens`` defaults to whichever of the conventional BERT
        specials are present in ``tokens``. The unknown token is always
        treated as special. Raises if the unknown token is absent.
        """
        toks = tuple(tokens)
        if not toks:
            raise EmptyVocabularyError()
        index: dict[str, int] = {}
        for i, tok in enumerate(toks):
            index.setdefault(tok, i)
        if special_tokens is None:
            special_tokens = [t for t in DEFAULT_SPECIAL_TOKENS if t in index]
        unk = unk_token if unk_token is not None else DEFAULT_UNK_TOKEN
        if unk not in index:
            raise MissingUnkTokenError(unk)
        special_ids = {index[t] for t in special_tokens if t in index}
        special_ids.add(index[unk])
        return cls(
            tokens=toks,
            continuation_prefix=continuation_prefix,
            special_token_ids=frozenset(special_ids),
            unk_id=index[unk],
        )

    @property
    def size(self) -> int:
        return len(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def token_to_id(self, token: str) -> int | None:
        """Id of ``token``, or None. Duplicates resolve to the lowest id."""
        return self._token_to_id.get(token)

    def __contains__(self, token: str) -> bool:
        return token in self._token_to_id

    def is_special(self, token_id: int) -> bool:
        return token_id in self.special_token_ids


class EmbeddingMatrix:
    """Immutable (rows, dim) float32 matrix; row i embeds token id i."""

    __slots__ = ("array",)

    def __init__(self, array: np.ndarray):
        arr = np.ascontiguousarray(array, dtype=np.float32)
        if arr.ndim != 2:
            raise DataError(f"embedding matrix must be 2-D, got shape {arr.shape}")
        view = arr.view()
        view.flags.writeable = False
        object.__setattr__(self, "array", view)

    @property
    def rows(self) -> int:
        return self.array.shape[0]

    @property
    def dim(self) -> int:
        return self.array.shape[1]

    def row(self, i: int) -> np.ndarray:
        return self.array[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingMatrix):
            return NotImplemented
        return self.array.shape == other.array.shape and bool(
            (self.array.view(np.uint32) == other.array.view(np.uint32)).all()
        )

    def __repr__(self) -> str:
        return f"EmbeddingMatrix(rows={self.rows}, dim={self.dim})"


@dataclass(frozen=True)
class Issue:
    """One violated invariant, e.g. ``DuplicateToken{2,7}``."""

    code: str
    args: tuple

    def __str__(self) -> str:
        return f"{self.code}{{{','.join(str(a) for a in self.args)}}}"


def validate(vocab: Vocabulary, emb: EmbeddingMatrix) -> list[Issue]:
    """Report every violated invariant of the pair; empty iff consistent."""
    issues: list[Issue] = []
    n = len(vocab.tokens)
    if n == 0:
        issues.append(Issue("EmptyVocabulary", ()))
    seen: dict[str, int] = {}
    for i, tok in enumerate(vocab.tokens):
        if tok in seen:
            issues.append(Issue("DuplicateToken", (seen[tok], i)))
        else:
            seen[tok] = i
    for sid in sorted(vocab.special_token_ids):
        if not (0 <= sid < n):
            issues.append(Issue("SpecialIdOutOfRange", (sid, n)))
    if vocab.unk_id not in vocab.special_token_ids:
        issues.append(Issue("UnkNotSpecial", (vocab.unk_id,)))
    if not (0 <= vocab.unk_id < n):
        issues.append(Issue("UnkIdOutOfRange", (vocab.unk_id, n)))
    if emb.rows != n:
        issues.append(Issue("RowCountMismatch", (n, emb.rows)))
    finite = np.isfinite(emb.array)
    if not finite.all():
        for r in np.nonzero(~finite.all(axis=1))[0]:
            issues.append(Issue("NonFiniteValue", (int(r),)))
    return issues


def _check_token(token: str, *, forbid_space: bool) -> None:
    if token == "":
        raise InvalidTokenError(token, "empty string")
    if "\n" in token or "\r" in token:
        raise InvalidTokenError(token, "contains a line break")
    if "\t" in token:
        raise InvalidTokenError(token, "contains a tab")
    if forbid_space and " " in token:
        raise InvalidTokenError(token, "contains a space (the field separator)")


def _check_finite(arr: np.ndarray) -> None:
    finite = np.isfinite(arr)
    if not finite.all():
        row, col = np.argwhere(~finite)[0]
        raise NonFiniteValueError(int(row), int(col))


def _format_f32(value: np.float32) -> str:
    # numpy's str() of a float32 is the shortest decimal that uniquely
    # round-trips (dragon4), which is what keeps the text format exact.
    return str(np.float32(value))


def save_embeddings(
    vocab: Vocabulary, emb: EmbeddingMatrix, path: str | Path, format: str
) -> None:
    """Write ``(vocab, emb)`` to ``path`` in the named format."""
    if format not in FORMATS:
        raise FormatError(f"unknown format {format!r}; expected one of {FORMATS}")
    if len(vocab.tokens) == 0:
        raise EmptyVocabularyError()
    if emb.rows != len(vocab.tokens):
        raise RowCountMismatchError(len(vocab.tokens), emb.rows)
    _check_finite(emb.array)
    path = Path(path)
    if format == "w2v_text":
        lines = [f"{emb.rows} {emb.dim}"]
        for i, tok in enumerate(vocab.tokens):
            _check_token(tok, forbid_space=True)
            values = " ".join(_format_f32(v) for v in emb.array[i])
            lines.append(f"{tok} {values}")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        for tok in vocab.tokens:
            _check_token(tok, forbid_space=False)
        header = SEMB_MAGIC + struct.pack("<IQI", SEMB_VERSION, emb.rows, emb.dim)
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(emb.array, dtype="<f4").tobytes())
        sidecar = Path(str(path) + VOCAB_SIDECAR_SUFFIX)
        sidecar.write_text("\n".join(vocab.tokens) + "\n", encoding="utf-8")


def load_embeddings(
    path: str | Path,
    format: str,
    *,
    special_tokens: Sequence[str] | None = None,
    unk_token: str | None = None,
    continuation_prefix: str = "##",
) -> tuple[Vocabulary, EmbeddingMatrix]:
    """Load ``(vocab, emb)``; token order is the file order.

    Special tokens are not stored in either format, so the same
    ``special_tokens``/``unk_token`` settings must be supplied for a
    load(save(...)) round trip to reproduce the vocabulary exactly.
    """
    if format not in FORMATS:
        raise FormatError(f"unknown format {format!r}; expected one of {FORMATS}")
    path = Path(path)
    if format == "w2v_text":
        tokens, arr = _load_w2v_text(path)
    else:
        tokens, arr = _load_semb_binary(path)
    _check_finite(arr)
    seen: dict[str, int] = {}
    for i, tok in enumerate(tokens):
        if tok in seen:
            raise DuplicateTokenError(tok, seen[tok], i)
        seen[tok] = i
    vocab = Vocabulary.from_tokens(
        tokens,
        special_tokens=special_tokens,
        unk_token=unk_token,
        continuation_prefix=continuation_prefix,
    )
    return vocab, EmbeddingMatrix(arr)


def _load_w2v_text(path: Path) -> tuple[list[str], np.ndarray]:
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise FormatError(f"{path}: empty file")
    head = lines[0].split(" ")
    if len(head) != 2:
        raise FormatError(f"{path}: malformed header {lines[0]!r}; expected 'N D'")
    try:
        n, d = int(head[0]), int(head[1])
    except ValueError:
        raise FormatError(f"{path}: malformed header {lines[0]!r}; expected 'N D'") from None
    if n <= 0:
        raise EmptyVocabularyError()
    if d <= 0:
        raise FormatError(f"{path}: dimension must be positive, got {d}")
    body = lines[1:]
    if len(body) != n:
        raise FormatError(f"{path}: header promises {n} rows, file has {len(body)}")
    tokens: list[str] = []
    arr = np.empty((n, d), dtype=np.float32)
    for i, line in enumerate(body):
        fields = line.split(" ")
        if len(fields) != d + 1:
            raise FormatError(
                f"{path}: row {i} has {len(fields) - 1} values, expected {d}"
            )
        tok = fields[0]
        if tok == "":
            raise InvalidTokenError(tok, f"empty token at row {i}")
        tokens.append(tok)
        try:
            arr[i] = np.array([float(v) for v in fields[1:]], dtype=np.float64)
        except ValueError as exc:
            raise FormatError(f"{path}: row {i}: {exc}") from None
    return tokens, arr


def _load_semb_binary(path: Path) -> tuple[list[str], np.ndarray]:
    blob = path.read_bytes()
    header_size = 4 + 4 + 8 + 4
    if len(blob) < header_size:
        raise FormatError(f"{path}: truncated header")
    if blob[:4] != SEMB_MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:4]!r}, expected {SEMB_MAGIC!r}")
    version, rows, dim = struct.unpack_from("<IQI", blob, 4)
    if version != SEMB_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if rows == 0:
        raise EmptyVocabularyError()
    if dim == 0:
        raise FormatError(f"{path}: dimension must be positive")
    expected = header_size + rows * dim * 4
    if len(blob) != expected:
        raise FormatError(
            f"{path}: payload is {len(blob) - header_size} bytes, "
            f"expected {rows * dim * 4}"
        )
    arr = np.frombuffer(blob, dtype="<f4", offset=header_size).reshape(rows, dim)
    arr = np.ascontiguousarray(arr)
    sidecar = Path(str(path) + VOCAB_SIDECAR_SUFFIX)
    if not sidecar.exists():
        raise FormatError(f"missing vocabulary sidecar {sidecar}")
    tokens = sidecar.read_text(encoding="utf-8").splitlines()
    if len(tokens) != rows:
        raise FormatError(
            f"{sidecar}: {len(tokens)} tokens for {rows} embedding rows"
        )
    for i, tok in enumerate(tokens):
        if tok == "":
            raise InvalidTokenError(tok, f"empty token at line {i}")
    return tokens, arr
