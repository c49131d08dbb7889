import json
import socket
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import httpx
import pytest

from tcintent.lm_gateway import (
    BackendError,
    GatewayTimeoutError,
    ModelConfig,
    TransportError,
    complete,
    request_body,
    with_overrides,
)
from tcintent.mock_lm import mock_complete

PROMPT = "### STAGE: subintent\nsay  something\n\twith odd   spacing ≤ ✓\n"


@pytest.fixture
def stub_server():
    seen = []

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
            seen.append((body, dict(self.headers)))
            payload = json.dumps({"choices": [{"message": {"content": "canned reply"}}]}).encode()
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def log_message(self, *args):
            pass

    server = HTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/v1/chat/completions", seen
    server.shutdown()
    server.server_close()


def remote(endpoint="http://stub/v1", **kw):
    return ModelConfig(backend="remote", endpoint=endpoint, model_name="m", **kw)


def test_happy_path_against_local_server(stub_server):
    url, seen = stub_server
    out = complete(PROMPT, remote(url, api_key="k"))
    assert out == "canned reply"
    (body, headers), = seen
    assert body["messages"][0]["content"] == PROMPT
    assert body == request_body(PROMPT, remote(url))
    assert headers["Authorization"] == "Bearer k"


def test_unreachable_endpoint_exhausts_retries():
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
    sleeps = []
    with pytest.raises(TransportError):
        complete("x", remote(f"http://127.0.0.1:{port}/", retries=2, timeout=2), sleep=sleeps.append)
    assert sleeps == [0.5, 1.0]


def test_retries_transient_status_then_succeeds():
    calls = []

    def handler(request):
        calls.append(request)
        if len(calls) < 3:
            return httpx.Response(503, text="busy")
        return httpx.Response(200, json={"choices": [{"message": {"content": "ok"}}]})

    assert complete("x", remote(retries=2), transport=httpx.MockTransport(handler), sleep=lambda s: None) == "ok"
    assert len(calls) == 3


def test_client_error_is_not_retried():
    calls = []

    def handler(request):
        calls.append(request)
        return httpx.Response(401, text="bad key")

    with pytest.raises(BackendError, match="bad key") as exc:
        complete("x", remote(retries=3), transport=httpx.MockTransport(handler), sleep=lambda s: None)
    assert exc.value.status == 401 and len(calls) == 1


def test_timeout():
    def handler(request):
        raise httpx.ReadTimeout("slow", request=request)

    with pytest.raises(GatewayTimeoutError):
        complete("x", remote(retries=1), transport=httpx.MockTransport(handler), sleep=lambda s: None)


def test_malformed_reply():
    transport = httpx.MockTransport(lambda r: httpx.Response(200, json={"nope": 1}))
    with pytest.raises(BackendError, match="malformed"):
        complete("x", remote(retries=0), transport=transport)


def test_mock_backend_is_deterministic():
    cfg = ModelConfig()
    assert complete(PROMPT, cfg) == complete(PROMPT, cfg) == mock_complete(PROMPT)


@pytest.mark.parametrize("kw", [dict(backend="other"), dict(backend="remote"), dict(temperature=-1),
                                dict(max_tokens=0), dict(timeout=0), dict(retries=-1)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        ModelConfig(**kw)


def test_env_overrides_and_redaction(tmp_path):
    env = {"TCINTENT_ENDPOINT": "http://env/", "TCINTENT_API_KEY": "secret", "TCINTENT_MODEL": "llama"}
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"backend": "remote", "endpoint": "http://file/"}))
    cfg = ModelConfig.load(path, env=env)
    assert (cfg.endpoint, cfg.api_key, cfg.model_name) == ("http://env/", "secret", "llama")
    assert cfg.to_dict()["api_key"] == "***"
    assert cfg.to_dict(redact=False)["api_key"] == "secret"
    assert ModelConfig.from_dict({}, env={}).backend == "mock"


def test_with_overrides_skips_none():
    cfg = with_overrides(ModelConfig(), model_name=None, temperature=0.7)
    assert cfg.model_name == "mock" and cfg.temperature == 0.7
