import json

import numpy as np
import pytest

from adachunk.docmodel import EntityPronounPair
from adachunk.providers import (
    CachingEmbedder,
    HashEmbedder,
    ProviderTransportError,
    RemoteCorefProvider,
    RemoteEmbeddingProvider,
    extract_coref_pairs_remote,
    hash_embed,
)
from oracles import bow_cosine, bow_counts


class TestHashEmbed:
    def test_empty_is_zero_vector(self):
        assert not np.any(hash_embed(""))
        assert not np.any(hash_embed("   \n\t "))

    def test_unit_norm(self):
        for text in ("cat", "alpha beta gamma", "Mixed CASE text, with. punct!"):
            assert abs(np.linalg.norm(hash_embed(text)) - 1.0) < 1e-9

    def test_scalar_multiple_same_direction(self):
        sim = float(hash_embed("cat") @ hash_embed("cat cat"))
        assert abs(sim - 1.0) < 1e-12

    def test_matches_bag_of_words_oracle(self):
        a, b = "alpha beta", "gamma delta alpha"
        sim = float(hash_embed(a) @ hash_embed(b))
        oracle = bow_cosine(bow_counts(a), bow_counts(b))
        assert abs(sim - oracle) < 1e-9

    def test_stable_across_calls(self):
        assert np.array_equal(hash_embed("stable text"), hash_embed("stable text"))


class FakeSession:
    """Canned-response stand-in for requests.Session."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.requests = []

    def post(self, url, json=None, timeout=None, headers=None):
        self.requests.append((url, json))
        item = self.responses.pop(0) if len(self.responses) > 1 else self.responses[0]
        if isinstance(item, Exception):
            raise item
        return FakeResponse(item)


class FakeResponse:
    def __init__(self, payload):
        self.payload = payload

    def raise_for_status(self):
        pass

    def json(self):
        return self.payload


class TestRemoteEmbedding:
    def test_empty_input(self):
        provider = RemoteEmbeddingProvider("http://x", 3, session=FakeSession([{}]))
        assert provider.embed_batch([]) == []

    def test_renormalizes_server_output(self):
        session = FakeSession([{"dim": 3, "vectors": [[3.0, 0.0, 4.0]]}])
        provider = RemoteEmbeddingProvider("http://x", 3, session=session)
        (vec,) = provider.embed_batch(["x"])
        assert abs(np.linalg.norm(vec) - 1.0) < 1e-9

    def test_batching_respects_cap_and_order(self):
        texts = [f"t{i}" for i in range(1000)]

        class BatchSession(FakeSession):
            def post(self, url, json=None, timeout=None, headers=None):
                self.requests.append(json)
                vecs = [[1.0, 0.0, float(len(t))] for t in json["texts"]]
                return FakeResponse({"dim": 3, "vectors": vecs})

        session = BatchSession([])
        provider = RemoteEmbeddingProvider("http://x", 3, batch_cap=64, session=session)
        out = provider.embed_batch(texts)
        assert len(session.requests) == 16
        assert len(out) == 1000

    def test_dimension_mismatch_raises(self):
        session = FakeSession([{"dim": 5, "vectors": [[0.0] * 5]}])
        provider = RemoteEmbeddingProvider("http://x", 3, session=session)
        with pytest.raises(ValueError, match="dimension"):
            provider.embed_batch(["x"])

    def test_transport_error_after_retries(self):
        import requests as rq

        session = FakeSession([rq.ConnectionError("down"), rq.ConnectionError("down")])
        provider = RemoteEmbeddingProvider(
            "http://x", 3, retries=2, backoff_s=0.0, session=session
        )
        with pytest.raises(ProviderTransportError):
            provider.embed_batch(["x"])


class TestRemoteCoref:
    def test_pairs_parsed_and_sorted(self):
        payload = {
            "pairs": [
                {"entity_start": 5, "pronoun_end": 40, "entity_text": "B", "pronoun_text": "it"},
                {"entity_start": 0, "pronoun_end": 20, "entity_text": "A", "pronoun_text": "she"},
            ]
        }
        provider = RemoteCorefProvider("http://x", session=FakeSession([payload]))
        pairs = provider.extract("some text")
        assert pairs == [
            EntityPronounPair(0, 20, "A", "she"),
            EntityPronounPair(5, 40, "B", "it"),
        ]

    def test_non_english_not_applicable(self):
        provider = RemoteCorefProvider("http://x", session=FakeSession([{"pairs": []}]))
        assert extract_coref_pairs_remote(provider, "du texte", language="fr") is None

    def test_english_goes_through(self):
        provider = RemoteCorefProvider("http://x", session=FakeSession([{"pairs": []}]))
        assert extract_coref_pairs_remote(provider, "text", language="en-US") == []


class TestCachingEmbedder:
    def test_single_underlying_call_per_text(self):
        calls = []

        class Counting:
            name = "counting"
            dimension = 4

            def embed_batch(self, texts):
                calls.append(list(texts))
                return [np.ones(4) / 2 for _ in texts]

        cached = CachingEmbedder(Counting())
        cached.embed_batch(["a", "b", "a"])
        cached.embed_batch(["b", "c"])
        assert calls == [["a", "b"], ["c"]]
