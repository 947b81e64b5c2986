"""HTTP surface: the scorer wire protocol.

POST /score takes {"v": 1, "pairs": [{"head", "tail"}, ...]} and
returns {"v": 1, "scores": [{"gate", "probs"}, ...]} in request order;
GET /health reports the loaded model. Malformed requests get 400 with
field diagnostics; an overloaded queue gets 429. Requests are chunked
through the model at the configured batch size.
"""

from __future__ import annotations

import threading
from typing import List

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, field_validator

from .config import ServiceConfig
from .model import PairScorerModel, Vocab, load_checkpoint, score_pairs

PROTOCOL_VERSION = 1


class PairIn(BaseModel):
    head: str = Field(min_length=1)
    tail: str = Field(min_length=1)

    @field_validator("head", "tail")
    @classmethod
    def non_blank(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("must not be blank")
        return value


class ScoreRequest(BaseModel):
    v: int
    pairs: List[PairIn]

    @field_validator("v")
    @classmethod
    def supported_version(cls, value: int) -> int:
        if value != PROTOCOL_VERSION:
            raise ValueError(f"unsupported protocol version {value}")
        return value


def create_app(
    model: PairScorerModel, vocab: Vocab, config: ServiceConfig, name: str = "pair-scorer"
) -> FastAPI:
    app = FastAPI(title="relation scorer service")
    pending = threading.Semaphore(config.max_pending_requests)
    inference_lock = threading.Lock()

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        details = [
            {"field": ".".join(str(p) for p in err["loc"]), "message": err["msg"]}
            for err in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"error": "invalid request", "details": details})

    @app.get("/health")
    def health():
        return {"status": "ok", "model": name}

    @app.post("/score")
    def score(request: ScoreRequest):
        if not pending.acquire(blocking=False):
            return JSONResponse(status_code=429, content={"error": "overloaded"})
        try:
            with inference_lock:  # model inference is serialized
                scores = score_pairs(
                    model, vocab, [(p.head, p.tail) for p in request.pairs], config.batch_size
                )
            return {"v": PROTOCOL_VERSION, "scores": scores}
        finally:
            pending.release()

    return app


def app_from_checkpoint(path: str) -> FastAPI:
    model, vocab, config = load_checkpoint(path)
    return create_app(model, vocab, config, name=f"pair-scorer({path})")
