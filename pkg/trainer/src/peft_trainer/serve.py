"""Serve a trained adapter behind the harness's completion HTTP contract.

POST /v1/completions with {"prompt", "max_tokens", "temperature"} returns
{"model": <artifact id>, "choices": [{"text": <continuation>}]}, so the
evaluation harness talks to an adapter exactly as it would to any hosted
model. Generation is greedy and serialized behind a lock.
"""

from __future__ import annotations

import errno
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import torch

from .adapters import install_adapter, load_adapter_state
from .errors import LoadError, PortInUse
from .model import ModelConfig, Seq2SeqModel, build_model
from .train import PeftConfig
from .vocab import WordVocab

DEFAULT_MAX_TOKENS = 100


def load_artifact(path: str | Path) -> tuple[Seq2SeqModel, WordVocab, dict]:
    """Rebuild the seeded base, install the technique, load adapter weights."""
    path = Path(path)
    try:
        manifest = json.loads((path / "manifest.json").read_text(encoding="utf-8"))
        vocab = WordVocab.load(path / "vocab.json")
        state = torch.load(path / "adapter.pt", weights_only=True)
    except (OSError, json.JSONDecodeError, KeyError) as e:
        raise LoadError(f"artifact at {path} is unreadable: {e}") from e
    config_doc = dict(manifest["config"])
    config_doc["base_model"] = ModelConfig.from_dict(config_doc["base_model"])
    config = PeftConfig(**config_doc)
    model = build_model(config.base_model)
    install_adapter(
        model,
        config.technique,
        lora_r=config.lora_r,
        lora_alpha=config.lora_alpha,
        lora_dropout=config.lora_dropout,
        virtual_tokens=config.virtual_tokens,
    )
    try:
        load_adapter_state(model, state)
    except Exception as e:
        raise LoadError(f"adapter weights do not load: {e}") from e
    model.eval()
    return model, vocab, manifest


class AdapterServer:
    """Running HTTP endpoint for one adapter artifact."""

    def __init__(self, artifact_path: str | Path, port: int, host: str = "127.0.0.1"):
        model, vocab, manifest = load_artifact(artifact_path)
        lock = threading.Lock()
        artifact_id = manifest["artifact_id"]

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                if self.path != "/v1/completions":
                    self.send_error(404)
                    return
                try:
                    length = int(self.headers.get("Content-Length", "0"))
                    body = json.loads(self.rfile.read(length))
                    prompt = body["prompt"]
                except (ValueError, KeyError):
                    self.send_error(400, "body must be JSON with a 'prompt'")
                    return
                max_tokens = int(body.get("max_tokens", DEFAULT_MAX_TOKENS))
                src = torch.tensor([vocab.encode(prompt, max_len=1024)], dtype=torch.long)
                with lock:
                    token_ids = model.greedy_generate(src, max_new_tokens=max_tokens)
                payload = json.dumps(
                    {"model": artifact_id, "choices": [{"text": vocab.decode(token_ids)}]}
                ).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        try:
            self._server = ThreadingHTTPServer((host, port), Handler)
        except OSError as e:
            if e.errno == errno.EADDRINUSE:
                raise PortInUse(f"port {port} is in use") from e
            raise
        self.artifact_id = artifact_id
        self.host = host
        self.port = self._server.server_address[1]
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def close(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "AdapterServer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def serve_adapter(artifact_path: str | Path, port: int = 0, host: str = "127.0.0.1") -> AdapterServer:
    """Start serving; port 0 picks a free port. Returns the running server."""
    return AdapterServer(artifact_path, port, host)
