"""Text and structure metrics for generated sub-intents and configs."""

from __future__ import annotations

import hashlib
import math
import re

import httpx
import numpy as np

from tcintent import kernels
from tcintent.lm_gateway import BackendError, GatewayTimeoutError, TransportError

TOKENIZER_VERSION = 1
_TOKEN_RE = re.compile(r"<=|>=|[a-z0-9_]+(?:[.:/][a-z0-9_]+)*%?")


class MetricDomainError(ValueError):
    pass


def tokenize(text: str) -> list:
    """Lowercase; numbers keep their units and dotted/colon/slash forms ("120ms", "10.1.4.0/24", "1:1")."""
    return _TOKEN_RE.findall(text.lower())


def _encode(a, b):
    vocab = {}
    ea = np.array([vocab.setdefault(t, len(vocab)) for t in a], np.int64)
    eb = np.array([vocab.setdefault(t, len(vocab)) for t in b], np.int64)
    return ea, eb


def _f1(p, r):
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def rouge_l_f1(gen, ref) -> float:
    gen, ref = list(gen), list(ref)
    if not gen or not ref:
        return 0.0
    lcs = int(kernels.lcs_length(*_encode(gen, ref)))
    if lcs == 0:
        return 0.0
    return _f1(lcs / len(gen), lcs / len(ref))


def token_prf(gen, ref) -> tuple:
    gen, ref = set(gen), set(ref)
    hit = len(gen & ref)
    p = hit / len(gen) if gen else 0.0
    r = hit / len(ref) if ref else 0.0
    return p, r, _f1(p, r)


def ned(gen, ref) -> float:
    gen, ref = list(gen), list(ref)
    longest = max(len(gen), len(ref))
    if longest == 0:
        return 0.0
    return int(kernels.levenshtein(*_encode(gen, ref))) / longest


def semantic_unit_coverage(gen, ref) -> float:
    ref = set(ref)
    if not ref:
        raise MetricDomainError("coverage is undefined for an empty reference")
    return len(set(gen) & ref) / len(ref)


# --- embeddings ------------------------------------------------------------

class HashingEmbedder:
    """Offline embedder: token counts hashed into a fixed number of buckets."""

    def __init__(self, dim: int = 2**18):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.name = f"hashing-bow-{dim}"

    def _bucket(self, token: str) -> int:
        h = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(h, "little") % self.dim

    def embed(self, texts) -> list:
        out = []
        for text in texts:
            tokens = tokenize(text)
            if not tokens:
                raise MetricDomainError("cannot embed empty text")
            v = np.zeros(self.dim, np.float64)
            for t in tokens:
                v[self._bucket(t)] += 1.0
            out.append(v)
        return out


class HttpEmbedder:
    """Embedding endpoint with the common {model, input} -> {data: [{embedding}]} shape."""

    def __init__(self, endpoint: str, model: str, *, api_key: str | None = None, timeout: float = 60.0,
                 transport=None):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self.transport = transport
        self.name = f"http:{model}"

    def embed(self, texts) -> list:
        texts = list(texts)
        if any(not t.strip() for t in texts):
            raise MetricDomainError("cannot embed empty text")
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        try:
            with httpx.Client(timeout=self.timeout, transport=self.transport) as client:
                resp = client.post(self.endpoint, json={"model": self.model, "input": texts}, headers=headers)
        except httpx.TimeoutException as exc:
            raise GatewayTimeoutError(str(exc)) from None
        except httpx.TransportError as exc:
            raise TransportError(str(exc)) from None
        if resp.status_code >= 300:
            raise BackendError(f"embedding backend returned HTTP {resp.status_code}", resp.status_code)
        try:
            rows = sorted(resp.json()["data"], key=lambda d: d.get("index", 0))
            return [np.asarray(r["embedding"], np.float64) for r in rows]
        except (ValueError, KeyError, TypeError) as exc:
            raise BackendError(f"malformed embedding response: {exc!r}") from None


def cosine(a, b) -> float:
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b)) / (na * nb)


def semantic_similarity(gen: str, ref: str, embedder) -> float:
    """Cosine of the two embeddings, clamped to [0, 1]."""
    e_g, e_r = embedder.embed([gen, ref])
    c = cosine(e_g, e_r)
    return 0.0 if math.isnan(c) else min(1.0, max(0.0, c))
