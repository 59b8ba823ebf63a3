"""Tiny rule-based chat-completion HTTP endpoint.

Serves the standard POST {model, messages, temperature} ->
{choices:[{message:{content}}]} wire protocol, answering pipeline prompts
with the deterministic keyword heuristics. Good enough to smoke-test the
remote-backend path and to demo the service without a real model runner.
"""
from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .backends import BackendError, respond_by_rules


class _Handler(BaseHTTPRequestHandler):
    def do_POST(self):  # noqa: N802 (http.server API)
        length = int(self.headers.get("Content-Length", 0))
        try:
            payload = json.loads(self.rfile.read(length))
            prompt = payload["messages"][-1]["content"]
            content = respond_by_rules(prompt)
            body = json.dumps({"choices": [{"message": {"role": "assistant", "content": content}}]})
            status = 200
        except (ValueError, KeyError, IndexError, BackendError) as e:
            body = json.dumps({"error": str(e)})
            status = 400
        data = body.encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, fmt, *args):
        pass


class StubServer:
    """Threaded stub endpoint; use as a context manager in tests."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self._server = ThreadingHTTPServer((host, port), _Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/v1/chat/completions"

    def __enter__(self) -> "StubServer":
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._server.shutdown()
        self._server.server_close()

    def serve_forever(self):
        self._thread.start()
        self._thread.join()


def serve(host: str = "127.0.0.1", port: int = 8099):
    server = StubServer(host, port)
    print(f"rule-based chat-completion stub listening on {server.endpoint}")
    server.serve_forever()
