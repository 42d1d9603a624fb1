"""Token counters.

Two counters ship: a whitespace counter for offline tests, and a
byte-pair-encoding counter that loads a tiktoken-format rank file (e.g.
the o200k vocabulary) when one is available. The BPE vocab path comes
from the ``ADACHUNK_BPE_VOCAB`` environment variable or explicit
registration.
"""

from __future__ import annotations

import base64
import os
import re
from pathlib import Path
from typing import Protocol

O200K_ENV_VAR = "ADACHUNK_BPE_VOCAB"

# Unicode-aware approximation of GPT-style pretokenization: contraction
# suffixes, space-prefixed words, space-prefixed punctuation runs, then
# bare whitespace runs.
_PRETOKEN_RE = re.compile(
    r"'(?:[sdmt]|ll|ve|re)| ?\w+| ?[^\w\s]+|\s+", re.UNICODE
)


class TokenCounter(Protocol):
    name: str

    def count(self, text: str) -> int: ...


class WhitespaceCounter:
    """Counts whitespace-separated words; deterministic and offline."""

    name = "whitespace"

    def count(self, text: str) -> int:
        return len(text.split())


class BpeCounter:
    """Byte-pair-encoding token counter over a tiktoken-format rank table."""

    def __init__(self, name: str, ranks: dict[bytes, int]):
        self.name = name
        self._ranks = ranks

    def count(self, text: str) -> int:
        total = 0
        for piece in _PRETOKEN_RE.findall(text):
            total += len(self._encode_piece(piece.encode("utf-8")))
        return total

    def _encode_piece(self, data: bytes) -> list[int]:
        if data in self._ranks:
            return [self._ranks[data]]
        parts = [data[i : i + 1] for i in range(len(data))]
        while len(parts) > 1:
            best_rank = None
            best_i = -1
            for i in range(len(parts) - 1):
                rank = self._ranks.get(parts[i] + parts[i + 1])
                if rank is not None and (best_rank is None or rank < best_rank):
                    best_rank = rank
                    best_i = i
            if best_rank is None:
                break
            parts[best_i : best_i + 2] = [parts[best_i] + parts[best_i + 1]]
        # Unknown leftover byte sequences each count as one token.
        return [self._ranks.get(p, -1) for p in parts]


def load_tiktoken_ranks(path: str | Path) -> dict[bytes, int]:
    """Parse a tiktoken-format vocab file: base64 token + rank per line."""
    ranks: dict[bytes, int] = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        token_b64, rank = line.split()
        ranks[base64.b64decode(token_b64)] = int(rank)
    return ranks


_REGISTRY: dict[str, TokenCounter] = {"whitespace": WhitespaceCounter()}


def register_counter(counter: TokenCounter) -> None:
    _REGISTRY[counter.name] = counter


def get_counter(name: str) -> TokenCounter:
    """Look up a registered counter; the BPE counter is loaded lazily."""
    if name in _REGISTRY:
        return _REGISTRY[name]
    if name == "bpe-o200k":
        path = os.environ.get(O200K_ENV_VAR)
        if path and Path(path).exists():
            counter = BpeCounter("bpe-o200k", load_tiktoken_ranks(path))
            _REGISTRY[name] = counter
            return counter
        raise KeyError(
            "counter 'bpe-o200k' requires a tiktoken-format vocab file; "
            f"set {O200K_ENV_VAR} to its path"
        )
    raise KeyError(f"unknown token counter {name!r}")


def count_tokens(text: str, counter: str | TokenCounter) -> int:
    if isinstance(counter, str):
        counter = get_counter(counter)
    return counter.count(text)
