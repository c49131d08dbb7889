import math

import httpx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tcintent.lm_gateway import BackendError
from tcintent.metrics import (
    HashingEmbedder,
    HttpEmbedder,
    MetricDomainError,
    cosine,
    ned,
    rouge_l_f1,
    semantic_similarity,
    semantic_unit_coverage,
    token_prf,
    tokenize,
)
from tests.oracles import brute_force_lcs, dp_levenshtein, set_prf

words = st.lists(st.sampled_from("abcdefg"), max_size=10)


def oracle_rouge(g, r):
    lcs = brute_force_lcs(g, r)
    if not g or not r or lcs == 0:
        return 0.0
    p, rc = lcs / len(g), lcs / len(r)
    return 2 * p * rc / (p + rc)


def test_rouge_hand_case():
    assert rouge_l_f1(list("abcd"), list("acde")) == pytest.approx(0.75)


def test_token_prf_hand_case():
    p, r, f = token_prf(list("abcx"), list("abcyz"))
    assert (p, r) == pytest.approx((0.75, 0.6))
    assert f == pytest.approx(2 / 3)


def test_ned_kitten_sitting():
    assert ned(list("kitten"), list("sitting")) == pytest.approx(3 / 7)


def test_empty_conventions():
    assert rouge_l_f1([], ["a"]) == 0.0
    assert token_prf([], ["a"]) == (0.0, 0.0, 0.0)
    assert token_prf(["a"], []) == (0.0, 0.0, 0.0)
    assert ned([], []) == 0.0
    with pytest.raises(MetricDomainError):
        semantic_unit_coverage({"x"}, set())


@given(words, words)
def test_rouge_matches_oracle(g, r):
    assert math.isclose(rouge_l_f1(g, r), oracle_rouge(g, r), abs_tol=1e-12)


@given(words, words)
def test_ned_matches_oracle_and_is_bounded(g, r):
    v = ned(g, r)
    longest = max(len(g), len(r))
    assert v == (dp_levenshtein(g, r) / longest if longest else 0.0)
    assert 0.0 <= v <= 1.0


@given(st.sets(st.sampled_from("abcdefgh")), st.sets(st.sampled_from("abcdefgh")))
def test_set_metrics_match_direct_arithmetic(g, r):
    assert token_prf(g, r) == pytest.approx(set_prf(g, r))
    if r:
        c = semantic_unit_coverage(g, r)
        assert c == pytest.approx(len(g & r) / len(r))
        assert 0.0 <= c <= 1.0


def test_order_sensitivity():
    a, b = list("abcde"), list("edcba")
    assert token_prf(a, b) == (1.0, 1.0, 1.0)
    assert rouge_l_f1(a, b) < 1.0
    assert ned(a, b) > 0.0


def test_tokenizer_keeps_units_and_addresses():
    assert tokenize("avg_wait_high <= 0.142s, match ip dst 10.1.4.0/24 flowid 1:1 at 5%") == [
        "avg_wait_high", "<=", "0.142s", "match", "ip", "dst", "10.1.4.0/24", "flowid", "1:1", "at", "5%"]


def test_hashing_similarity():
    e = HashingEmbedder()
    assert semantic_similarity("alpha beta gamma", "delta epsilon", e) == 0.0
    assert semantic_similarity("alpha beta", "beta alpha", e) == pytest.approx(1.0)
    assert 0.0 < semantic_similarity("alpha beta", "alpha gamma", e) < 1.0
    with pytest.raises(MetricDomainError):
        e.embed(["   "])


def test_cosine_zero_vector():
    assert cosine(np.zeros(3), np.ones(3)) == 0.0


def test_http_embedder_roundtrip_and_errors():
    def handler(request):
        body = request.read()
        assert b'"input"' in body
        return httpx.Response(200, json={"data": [{"index": 1, "embedding": [0, 1]},
                                                  {"index": 0, "embedding": [1, 0]}]})

    emb = HttpEmbedder("http://stub/embed", "m", transport=httpx.MockTransport(handler))
    a, b = emb.embed(["x", "y"])
    assert list(a) == [1, 0] and list(b) == [0, 1]

    bad = HttpEmbedder("http://stub/embed", "m",
                       transport=httpx.MockTransport(lambda r: httpx.Response(503)))
    with pytest.raises(BackendError):
        bad.embed(["x"])


def test_ned_empty_generation_is_maximal():
    assert ned([], list("abc")) == 1.0
    assert ned(list("abc"), list("abc")) == 0.0
