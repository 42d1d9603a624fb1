import random
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adachunk.chunkers import (
    ChunkerConfig,
    RegexSplitError,
    apply_regex_split,
    chunk_by_pages,
    chunk_by_sentences,
    llm_regex_chunk,
    recursive_split_merge,
    separator_cascade_split,
)
from adachunk.docmodel import BlockSpan, Document, interior_boundaries, validate_chunking
from adachunk.llm import LLMTransportError, propose_regex
from adachunk.tokens import get_counter
from conftest import make_document, make_text

WS = get_counter("whitespace")


def plain_doc(text: str, doc_id: str = "d", **kwargs) -> Document:
    return Document(doc_id, text, (BlockSpan(0, len(text), "other"),), **kwargs)


class FixedLLM:
    def __init__(self, response: str):
        self.response = response
        self.calls = 0

    def complete(self, messages, *, temperature=0.0, tag=""):
        self.calls += 1
        return self.response


class TestChunkByPages:
    def test_no_breaks_single_chunk(self):
        doc = plain_doc("x" * 100)
        ch = chunk_by_pages(doc)
        assert [(c.start, c.end) for c in ch.chunks] == [(0, 100)]

    def test_cuts_at_breaks(self):
        doc = Document("d", "x" * 100, (BlockSpan(0, 100),), page_breaks=(40, 80))
        ch = chunk_by_pages(doc)
        assert [(c.start, c.end) for c in ch.chunks] == [(0, 40), (40, 80), (80, 100)]

    def test_boundaries_equal_page_breaks(self, rng):
        for _ in range(20):
            doc = make_document(rng)
            ch = chunk_by_pages(doc)
            assert set(interior_boundaries(ch)) == set(doc.page_breaks)


class TestChunkBySentences:
    def _doc(self, n_sentences: int) -> Document:
        parts = []
        spans = []
        pos = 0
        for i in range(n_sentences):
            s = f"Sentence number {i} is here."
            spans.append((pos, pos + len(s)))
            parts.append(s)
            parts.append(" ")
            pos += len(s) + 1
        text = "".join(parts).rstrip()
        return Document("d", text, (BlockSpan(0, len(text)),), sentences=tuple(spans))

    def test_fewer_than_n_gives_one_chunk(self):
        ch = chunk_by_sentences(self._doc(3), n=5)
        assert len(ch.chunks) == 1

    def test_cut_extends_to_next_sentence_start(self):
        doc = self._doc(10)
        ch = chunk_by_sentences(doc, n=5)
        assert len(ch.chunks) == 2
        assert ch.chunks[0].end == doc.sentences[5][0]

    def test_sentence_counts_per_chunk(self):
        doc = self._doc(12)
        ch = chunk_by_sentences(doc, n=5)
        counts = []
        for c in ch.chunks:
            counts.append(
                sum(1 for s, e in doc.sentences if s >= c.start and e <= c.end)
            )
        assert counts == [5, 5, 2]

    def test_empty_sentences_error(self):
        with pytest.raises(ValueError, match="sentence spans required"):
            chunk_by_sentences(plain_doc("some text"), n=5)


class TestSeparatorCascadeSplit:
    def test_base_case(self):
        text = "short text"
        assert separator_cascade_split(text, 500) == [text]

    def test_blank_line_split(self):
        p1 = " ".join(f"alpha{i}" for i in range(400))
        p2 = " ".join(f"beta{i}" for i in range(400))
        text = p1 + "\n\n" + p2
        segments = separator_cascade_split(text, 500)
        assert segments == [p1, "\n\n" + p2]

    def test_word_soup_falls_back_to_character_level(self):
        text = "x" * 6000  # one unbroken token
        segments = separator_cascade_split(text, 600)
        assert "".join(segments) == text
        assert all(WS.count(s) <= 600 for s in segments)

    def test_long_unbroken_line_of_words(self):
        text = " ".join(f"w{i}" for i in range(1500))
        segments = separator_cascade_split(text, 600)
        assert "".join(segments) == text
        assert max(WS.count(s) for s in segments) <= 600

    @given(st.integers(0, 2**32 - 1), st.integers(20, 400), st.integers(5, 60))
    @settings(max_examples=30, deadline=None)
    def test_concatenation_and_size_property(self, seed, n_words, max_tokens):
        text = make_text(random.Random(seed), n_words)
        segments = separator_cascade_split(text, max_tokens)
        assert "".join(segments) == text
        assert all(WS.count(s) <= max_tokens for s in segments)


class TestRecursiveSplitMerge:
    def test_small_doc_single_chunk(self):
        doc = plain_doc(" ".join(f"w{i}" for i in range(300)))
        ch = recursive_split_merge(doc, ChunkerConfig(target_size=1100))
        assert len(ch.chunks) == 1

    def test_greedy_accumulation(self):
        paras = [" ".join(f"p{j}w{i}" for i in range(400)) for j in range(3)]
        doc = plain_doc("\n\n".join(paras))
        ch = recursive_split_merge(doc, ChunkerConfig(target_size=1100))
        sizes = [WS.count(doc.text[c.start : c.end]) for c in ch.chunks]
        assert sizes == [800, 400]

    def test_max_tokens_bounded(self, rng):
        for _ in range(10):
            doc = make_document(rng, n_words=rng.randint(50, 2500))
            ch = recursive_split_merge(doc, ChunkerConfig(target_size=1100))
            assert all(
                WS.count(doc.text[c.start : c.end]) <= 1100 for c in ch.chunks
            )

    def test_greedy_maximality(self, rng):
        cfg = ChunkerConfig(target_size=120)
        for _ in range(10):
            doc = make_document(rng, n_words=rng.randint(200, 800))
            ch = recursive_split_merge(doc, cfg)
            for a, b in zip(ch.chunks, ch.chunks[1:]):
                assert WS.count(doc.text[a.start : b.end]) > 120

    def test_overlap_hint_recorded(self):
        paras = [" ".join(f"p{j}w{i}" for i in range(400)) for j in range(3)]
        doc = plain_doc("\n\n".join(paras))
        ch = recursive_split_merge(doc, ChunkerConfig(target_size=1100, overlap=50))
        assert ch.chunks[0].overlap_hint is None
        hint = ch.chunks[1].overlap_hint
        assert hint is not None
        start, end = hint
        assert end == ch.chunks[0].end
        assert WS.count(doc.text[start:end]) <= 50

    def test_round_trip(self, rng):
        doc = make_document(rng, n_words=600)
        ch = recursive_split_merge(doc, ChunkerConfig(target_size=200))
        assert "".join(doc.text[c.start : c.end] for c in ch.chunks) == doc.text


class TestProposeRegex:
    def test_valid_extraction(self):
        doc = plain_doc("body")
        proposal = propose_regex(FixedLLM("<regex>\\n## </regex>"), doc, ChunkerConfig())
        assert proposal.valid
        assert proposal.pattern == "\\n## "

    def test_missing_tags_invalid(self):
        proposal = propose_regex(FixedLLM("no tags here"), plain_doc("x"), ChunkerConfig())
        assert not proposal.valid

    def test_compile_failure_invalid(self):
        proposal = propose_regex(
            FixedLLM("<regex>([unclosed</regex>"), plain_doc("x"), ChunkerConfig()
        )
        assert not proposal.valid
        assert proposal.pattern == "([unclosed"

    def test_prompt_holds_sample_budget_prefix(self):
        doc = plain_doc(" ".join(f"w{i}" for i in range(100)))
        captured = {}

        class Spy:
            def complete(self, messages, *, temperature=0.0, tag=""):
                captured["prompt"] = messages[0]["content"]
                return "<regex>x</regex>"

        propose_regex(Spy(), doc, ChunkerConfig(sample_budget=10))
        assert "w9" in captured["prompt"]
        assert "w50" not in captured["prompt"]


class TestApplyRegexSplit:
    def test_no_match_single_chunk(self):
        doc = plain_doc("nothing to match here")
        ch = apply_regex_split(doc, "ZZZ")
        assert [(c.start, c.end) for c in ch.chunks] == [(0, doc.length)]

    def test_cuts_at_match_starts(self):
        text = "A\n# B\n# C"
        doc = plain_doc(text)
        ch = apply_regex_split(doc, "\n# ")
        expected = [m.start() for m in re.finditer("\n# ", text)]
        assert interior_boundaries(ch) == expected
        assert len(ch.chunks) == 3
        # Delimiter stays with the following chunk.
        assert doc.text[ch.chunks[1].start : ch.chunks[1].end].startswith("\n# B")

    def test_output_always_valid(self, rng):
        for pattern in ["a", r"\n", r"\.", "q+"]:
            doc = make_document(rng)
            ch = apply_regex_split(doc, pattern, match_cap_factor=10_000)
            assert validate_chunking(doc, ch).ok

    def test_capture_groups_neutralized(self):
        doc = plain_doc("one SEP two SEP three")
        ch = apply_regex_split(doc, "(SEP )")
        assert len(ch.chunks) == 3

    def test_match_count_cap(self):
        doc = plain_doc("ab " * 50)
        with pytest.raises(RegexSplitError, match="matches"):
            apply_regex_split(doc, ".", match_cap_factor=1)


class TestLlmRegexChunk:
    def test_valid_pattern_cuts_at_article_headings(self):
        articles = "\n\n".join(
            f"Article {i}. " + " ".join(f"t{i}w{j}" for j in range(30)) for i in range(1, 5)
        )
        doc = plain_doc("Preamble text.\n\n" + articles)
        llm = FixedLLM(r"<regex>\nArticle \d+\.</regex>")
        ch = llm_regex_chunk(doc, llm)
        assert ch.method == "llm-regex"
        expected = [
            m.start()
            for m in re.finditer(r"\nArticle \d+\.", doc.text)
            if 0 < m.start() < doc.length
        ]
        assert interior_boundaries(ch) == expected

    def test_invalid_proposal_falls_back(self):
        doc = plain_doc(" ".join(f"w{i}" for i in range(50)))
        ch = llm_regex_chunk(doc, FixedLLM("garbage"))
        assert ch.method == "llm-regex:fallback-recursive"
        assert validate_chunking(doc, ch).ok

    def test_pattern_matching_nothing_single_chunk(self):
        doc = plain_doc("plain text body")
        ch = llm_regex_chunk(doc, FixedLLM("<regex>NOMATCH123</regex>"))
        assert len(ch.chunks) == 1

    def test_transport_error_propagates(self):
        class Failing:
            def complete(self, messages, *, temperature=0.0, tag=""):
                raise LLMTransportError("down")

        with pytest.raises(LLMTransportError):
            llm_regex_chunk(plain_doc("x y z"), Failing())


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_every_chunker_output_is_valid(seed):
    rng = random.Random(seed)
    doc = make_document(rng, n_words=rng.randint(30, 500))
    cfg = ChunkerConfig(target_size=rng.choice([60, 150, 400]))
    outputs = [
        chunk_by_pages(doc),
        recursive_split_merge(doc, cfg),
        llm_regex_chunk(doc, FixedLLM(r"<regex>\.</regex>"), cfg),
    ]
    if doc.sentences:
        outputs.append(chunk_by_sentences(doc, cfg=cfg))
    for ch in outputs:
        assert validate_chunking(doc, ch).ok
        assert "".join(doc.text[c.start : c.end] for c in ch.chunks) == doc.text
