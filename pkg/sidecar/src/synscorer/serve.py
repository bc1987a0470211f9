"""HTTP scoring service.

Wire protocol:
  POST /score  {"pairs": [["label a", "label b"], ...]}
               -> {"scores": [s, ...]}   one float in [0, 1] per pair, same order
  GET  /health -> {"status": "ok", "model": "<name>"}

Malformed requests get 400 with an error message, scoring before a model is
loaded gets 503, and a model failure gets 500 — never a partial score list.
Request bodies of any size are scored in fixed-size internal batches; a
lock serializes access to the single model instance so concurrent requests
queue rather than interleave.
"""

import json
import logging
import threading
from pathlib import Path

import torch
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from transformers import AutoTokenizer, BertForSequenceClassification

log = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 32


class ScoringModel:
    """A loaded classifier checkpoint plus its tokenizer, scored under a lock."""

    def __init__(self, checkpoint_dir: str, batch_size: int = DEFAULT_BATCH_SIZE,
                 max_len: int = 128):
        path = Path(checkpoint_dir)
        self.tokenizer = AutoTokenizer.from_pretrained(path)
        self.model = BertForSequenceClassification.from_pretrained(path, num_labels=2)
        self.model.eval()
        self.batch_size = batch_size
        self.max_len = max_len
        self.name = _model_name(path)
        self._lock = threading.Lock()

    def score(self, pairs: list[tuple[str, str]]) -> list[float]:
        """Synonym-class probability per pair, computed in internal batches."""
        scores: list[float] = []
        with self._lock, torch.no_grad():
            for i in range(0, len(pairs), self.batch_size):
                chunk = pairs[i:i + self.batch_size]
                enc = self.tokenizer([p[0] for p in chunk], [p[1] for p in chunk],
                                     truncation="longest_first",
                                     max_length=self.max_len, padding=True,
                                     return_tensors="pt")
                logits = self.model(**enc).logits
                scores.extend(torch.softmax(logits, dim=-1)[:, 1].tolist())
        return scores


def _model_name(path: Path) -> str:
    for meta_file in ("meta.json", "base_meta.json"):
        candidate = path / meta_file
        if candidate.exists():
            with open(candidate, encoding="utf-8") as f:
                return json.load(f).get("model", path.name)
    return path.name


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse({"error": message}, status_code=status)


def _parse_pairs(body: bytes):
    """Returns (pairs, None) or (None, error message)."""
    try:
        payload = json.loads(body)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        return None, f"request body is not valid JSON: {exc}"
    if not isinstance(payload, dict):
        return None, "request body must be a JSON object"
    if set(payload.keys()) != {"pairs"}:
        return None, 'request body must have exactly one key, "pairs"'
    pairs = payload["pairs"]
    if not isinstance(pairs, list):
        return None, '"pairs" must be a list'
    cleaned = []
    for i, pair in enumerate(pairs):
        if not (isinstance(pair, list) and len(pair) == 2
                and all(isinstance(x, str) for x in pair)):
            return None, f"pairs[{i}] must be a two-string list"
        cleaned.append((pair[0], pair[1]))
    return cleaned, None


def build_app(checkpoint_dir: str | None,
              batch_size: int = DEFAULT_BATCH_SIZE) -> FastAPI:
    """App factory; ``checkpoint_dir=None`` builds an unloaded (503) service."""
    app = FastAPI()
    app.state.model = ScoringModel(checkpoint_dir, batch_size) if checkpoint_dir else None

    @app.get("/health")
    def health():
        model = app.state.model
        if model is None:
            return _error(503, "no model loaded")
        return {"status": "ok", "model": model.name}

    @app.post("/score")
    async def score(request: Request):
        model = app.state.model
        if model is None:
            return _error(503, "no model loaded")
        pairs, problem = _parse_pairs(await request.body())
        if problem is not None:
            return _error(400, problem)
        if not pairs:
            return {"scores": []}
        try:
            scores = model.score(pairs)
        except Exception:
            log.exception("scoring failed for %d pair(s)", len(pairs))
            return _error(500, "model failure while scoring")
        return {"scores": scores}

    return app


def run_server(checkpoint_dir: str, port: int, host: str = "127.0.0.1",
               batch_size: int = DEFAULT_BATCH_SIZE) -> None:
    import uvicorn

    app = build_app(checkpoint_dir, batch_size)
    log.info("serving %s on %s:%d", app.state.model.name, host, port)
    uvicorn.run(app, host=host, port=port, log_level="warning")
