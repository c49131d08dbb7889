"""Text-generation client: a chat-completion HTTP endpoint or the offline mock."""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import httpx

log = logging.getLogger(__name__)

BACKENDS = ("remote", "mock")
ENV_ENDPOINT = "TCINTENT_ENDPOINT"
ENV_API_KEY = "TCINTENT_API_KEY"
ENV_MODEL = "TCINTENT_MODEL"
RETRY_STATUS = {429, 500, 502, 503, 504}


class GatewayError(Exception):
    pass


class TransportError(GatewayError):
    pass


class BackendError(GatewayError):
    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


class GatewayTimeoutError(GatewayError, TimeoutError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    backend: str = "mock"
    endpoint: str | None = None
    model_name: str = "mock"
    temperature: float = 0.0
    max_tokens: int = 1024
    timeout: float = 60.0
    retries: int = 2
    backoff: float = 0.5
    api_key: str | None = None

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.backend == "remote" and not self.endpoint:
            raise ValueError("remote backend needs an endpoint")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if int(self.max_tokens) != self.max_tokens or self.max_tokens < 1:
            raise ValueError("max_tokens must be a positive integer")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if int(self.retries) != self.retries or self.retries < 0:
            raise ValueError("retries must be an integer >= 0")

    def to_dict(self, redact: bool = True) -> dict:
        d = asdict(self)
        if redact and d["api_key"]:
            d["api_key"] = "***"
        return d

    @classmethod
    def from_dict(cls, d: dict, *, env=None) -> "ModelConfig":
        """Build from a mapping, applying TCINTENT_ENDPOINT / TCINTENT_API_KEY / TCINTENT_MODEL overrides."""
        env = os.environ if env is None else env
        d = dict(d)
        if env.get(ENV_ENDPOINT):
            d["endpoint"] = env[ENV_ENDPOINT]
        if env.get(ENV_API_KEY):
            d["api_key"] = env[ENV_API_KEY]
        if env.get(ENV_MODEL):
            d["model_name"] = env[ENV_MODEL]
        return cls(**d)

    @classmethod
    def load(cls, path, *, env=None) -> "ModelConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")), env=env)


def request_body(prompt: str, cfg: ModelConfig) -> dict:
    return {
        "model": cfg.model_name,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens,
    }


def _reply_text(response: httpx.Response) -> str:
    try:
        return response.json()["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise BackendError(f"malformed completion response: {exc!r}", response.status_code) from None


def complete(prompt: str, cfg: ModelConfig, *, seed: int = 0, transport=None, sleep=time.sleep) -> str:
    """One completion. Retries transport failures, timeouts and 429/5xx up to ``cfg.retries`` times."""
    if cfg.backend == "mock":
        from tcintent.mock_lm import mock_complete

        return mock_complete(prompt, seed)

    headers = {"Content-Type": "application/json"}
    if cfg.api_key:
        headers["Authorization"] = f"Bearer {cfg.api_key}"
    body = request_body(prompt, cfg)
    last = None
    with httpx.Client(timeout=cfg.timeout, transport=transport) as client:
        for attempt in range(cfg.retries + 1):
            if attempt:
                sleep(cfg.backoff * 2 ** (attempt - 1))
            try:
                response = client.post(cfg.endpoint, json=body, headers=headers)
            except httpx.TimeoutException as exc:
                last = GatewayTimeoutError(f"request to {cfg.endpoint} timed out: {exc}")
            except httpx.TransportError as exc:
                last = TransportError(f"cannot reach {cfg.endpoint}: {exc}")
            else:
                if response.status_code < 300:
                    return _reply_text(response)
                err = BackendError(f"backend returned HTTP {response.status_code}: {response.text[:500]}",
                                   response.status_code)
                if response.status_code not in RETRY_STATUS:
                    raise err
                last = err
            log.warning("completion attempt %d/%d failed: %s", attempt + 1, cfg.retries + 1, last)
    raise last


def with_overrides(cfg: ModelConfig, **changes) -> ModelConfig:
    return replace(cfg, **{k: v for k, v in changes.items() if v is not None})
