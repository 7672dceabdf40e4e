"""Greedy longest-match subword tokenizer (WordPiece-style).

Pre-tokenization is a plain Unicode-whitespace split; continuation pieces
are matched with the vocabulary's continuation prefix prepended. A word
with no valid segmentation, or longer than ``MAX_WORD_BYTES``, becomes a
single unknown token covering the whole word.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import DataError, IdOutOfRangeError
from .store import Vocabulary

MAX_WORD_BYTES = 100

_WORD_RE = re.compile(r"\S+")


@dataclass(frozen=True)
class TokenizationResult:
    """Subword ids plus the (start, end) byte span of each in the input."""

    ids: tuple[int, ...]
    offsets: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.ids)


def encode(text: str, vocab: Vocabulary, *, lowercase: bool = False) -> TokenizationResult:
    """Tokenize ``text`` into subword ids with byte offsets.

    With ``lowercase=True`` the whole text is lowercased first and the
    offsets refer to the lowercased text.
    """
    if len(vocab) == 0:
        raise DataError("cannot tokenize with an empty vocabulary")
    if lowercase:
        text = text.lower()
    ids: list[int] = []
    offsets: list[tuple[int, int]] = []
    byte_pos = 0  # byte offset of char_pos
    char_pos = 0
    for match in _WORD_RE.finditer(text):
        byte_pos += len(text[char_pos : match.start()].encode("utf-8"))
        char_pos = match.start()
        word = match.group()
        word_start = byte_pos
        piece_ids, piece_spans = _encode_word(word, vocab, word_start)
        ids.extend(piece_ids)
        offsets.extend(piece_spans)
        byte_pos += len(word.encode("utf-8"))
        char_pos = match.end()
    return TokenizationResult(ids=tuple(ids), offsets=tuple(offsets))


def _encode_word(
    word: str, vocab: Vocabulary, base: int
) -> tuple[list[int], list[tuple[int, int]]]:
    word_bytes = len(word.encode("utf-8"))
    whole_span = [(base, base + word_bytes)]
    if word_bytes > MAX_WORD_BYTES:
        return [vocab.unk_id], whole_span

    # byte offset of each char boundary within the word
    char_bytes = [0]
    for ch in word:
        char_bytes.append(char_bytes[-1] + len(ch.encode("utf-8")))

    prefix = vocab.continuation_prefix
    ids: list[int] = []
    spans: list[tuple[int, int]] = []
    start = 0
    while start < len(word):
        end = len(word)
        found = None
        while start < end:
            piece = word[start:end]
            if start > 0:
                piece = prefix + piece
            pid = vocab.token_to_id(piece)
            if pid is not None:
                found = pid
                break
            end -= 1
        if found is None:
            return [vocab.unk_id], whole_span
        ids.append(found)
        spans.append((base + char_bytes[start], base + char_bytes[end]))
        start = end
    return ids, spans


def is_single_subword(word: str, vocab: Vocabulary, *, lowercase: bool = False) -> bool:
    """True iff ``word`` tokenizes to exactly one non-unknown subword."""
    if word == "" or any(ch.isspace() for ch in word):
        raise DataError(f"word must be non-empty with no whitespace: {word!r}")
    result = encode(word, vocab, lowercase=lowercase)
    return len(result.ids) == 1 and result.ids[0] != vocab.unk_id


def remap_ids(ids, grouping_map) -> list[int]:
    """Map subword ids to semantic ids; order and length preserved."""
    assignment = grouping_map.assignment
    n = len(assignment)
    out: list[int] = []
    for i in ids:
        i = int(i)
        if not 0 <= i < n:
            raise IdOutOfRangeError(i, n)
        out.append(int(assignment[i]))
    return out
