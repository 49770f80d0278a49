import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest


class ScriptedServer:
    """Tiny HTTP server whose responses are scripted per test.

    Push (status, body_bytes, content_type) tuples onto ``responses``; each
    request pops one. Requests are recorded as (path, body) for inspection.
    """

    def __init__(self):
        self.responses: list[tuple[int, bytes, str]] = []
        self.requests: list[tuple[str, bytes]] = []
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def _serve(self):
                length = int(self.headers.get("content-length", 0))
                body = self.rfile.read(length) if length else b""
                outer.requests.append((self.path, body))
                if outer.responses:
                    status, payload, ctype = outer.responses.pop(0)
                else:
                    status, payload, ctype = 500, b"unscripted", "text/plain"
                self.send_response(status)
                self.send_header("content-type", ctype)
                self.send_header("content-length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            do_POST = _serve
            do_GET = _serve

            def log_message(self, *args):
                pass

        self._httpd = HTTPServer(("127.0.0.1", 0), Handler)
        self.endpoint = f"http://127.0.0.1:{self._httpd.server_port}"
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()

    def close(self):
        self._httpd.shutdown()
        self._httpd.server_close()


@pytest.fixture
def scripted_server():
    server = ScriptedServer()
    yield server
    server.close()
