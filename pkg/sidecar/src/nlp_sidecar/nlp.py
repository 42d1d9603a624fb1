"""Rule-based sentence segmentation, language guessing, and a heuristic
pronoun-coreference extractor.

Coreference links each third-person pronoun to the nearest preceding
capitalized name-like mention. This runs for English text only; other
languages get sentences but no pairs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

# A sentence ends at . ! or ? (optionally followed by closing quotes or
# brackets) when whitespace and end-of-text or an uppercase/digit/markup
# opener follows.
_SENTENCE_END_RE = re.compile(r"[.!?]+[\"'\)\]]*(?=\s|$)")

_PRONOUNS = frozenset(
    "he she it they him her them his hers its their theirs".split()
)
_PRONOUN_RE = re.compile(
    r"\b(" + "|".join(sorted(_PRONOUNS)) + r")\b", re.IGNORECASE
)
# Name-like mention: run of capitalized words, optionally preceded by a
# lowercase determiner ("the auditor" is not matched; "The Auditor" is).
_MENTION_RE = re.compile(r"\b[A-Z][a-zA-Z]+(?:\s+[A-Z][a-zA-Z]+)*\b")

_ENGLISH_STOPWORDS = frozenset(
    "the a an and of to in is was are were for with on at by from as "
    "that this it he she they be have has had not but or".split()
)


def sentence_spans(text: str) -> list[tuple[int, int]]:
    """Character spans of sentences, trimmed to non-whitespace text."""
    spans: list[tuple[int, int]] = []
    cursor = 0
    for match in _SENTENCE_END_RE.finditer(text):
        end = match.end()
        piece = text[cursor:end]
        stripped = piece.strip()
        if stripped:
            start = cursor + (len(piece) - len(piece.lstrip()))
            spans.append((start, start + len(stripped)))
        cursor = end
    tail = text[cursor:].strip()
    if tail:
        start = cursor + (len(text[cursor:]) - len(text[cursor:].lstrip()))
        spans.append((start, start + len(tail)))
    return spans


def guess_language(text: str) -> str:
    """"en" when English stopwords are common enough, else "und"."""
    words = re.findall(r"[a-zA-Z']+", text.lower())
    if len(words) < 3:
        return "und"
    hits = sum(1 for w in words if w in _ENGLISH_STOPWORDS)
    return "en" if hits / len(words) >= 0.05 else "und"


@dataclass(frozen=True)
class CorefPair:
    entity_start: int
    pronoun_end: int
    entity_text: str
    pronoun_text: str


def coref_pairs(text: str) -> list[CorefPair]:
    """Link each pronoun to the nearest preceding name-like mention."""
    mentions = [
        m
        for m in _MENTION_RE.finditer(text)
        if m.group().lower() not in _PRONOUNS
    ]
    pairs: list[CorefPair] = []
    for pron in _PRONOUN_RE.finditer(text):
        candidates = [m for m in mentions if m.end() <= pron.start()]
        if not candidates:
            continue
        entity = candidates[-1]
        pairs.append(
            CorefPair(
                entity_start=entity.start(),
                pronoun_end=pron.end(),
                entity_text=entity.group(),
                pronoun_text=pron.group(),
            )
        )
    pairs.sort(key=lambda p: (p.pronoun_end, p.entity_start))
    return pairs
