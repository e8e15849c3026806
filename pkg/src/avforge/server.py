"""HTTP service exposing the review queue to annotation frontends.

Responses are plain JSON with stable field names; media are served from a
configured directory with byte-range support so players can seek.
"""

from __future__ import annotations

import re
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .review import (
    DecisionConflictError,
    InvalidVerdictError,
    ReviewQueue,
    UnknownItemError,
)

_RANGE = re.compile(r"bytes=(\d*)-(\d*)$")
_MEDIA_TYPES = {".wav": "audio/wav", ".mp4": "video/mp4", ".json": "application/json"}


class DecisionBody(BaseModel):
    verdict: str
    notes: str = ""
    reviewer: str = ""
    token: str = ""


class AgreementBody(BaseModel):
    annotator: str
    label: str


def _summary(item) -> dict:
    payload = item.to_json()
    del payload["payload"]
    return payload


def create_app(queue: ReviewQueue, media_root: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="review service")
    # The frontend may be served from any static host; the service carries no
    # credentials, so a wide-open CORS policy costs nothing.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    root = Path(media_root).resolve() if media_root is not None else None

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "items": len(queue)}

    @app.get("/queue")
    def get_queue(
        kind: str | None = None,
        status: str | None = None,
        offset: int = 0,
        limit: int = 100,
    ) -> dict:
        matching = queue.items(kind=kind, status=status)
        page = matching[offset : offset + limit]
        return {
            "items": [_summary(item) for item in page],
            "total": len(matching),
            "offset": offset,
            "limit": limit,
        }

    @app.get("/item/{item_id}")
    def get_item(item_id: str) -> dict:
        try:
            item = queue.get(item_id)
        except UnknownItemError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        media = item.payload.get("media") if isinstance(item.payload, dict) else None
        return {
            "item": item.to_json(),
            "media_url": f"/media/{media}" if media else None,
        }

    @app.post("/item/{item_id}/decision")
    def post_decision(item_id: str, body: DecisionBody) -> dict:
        try:
            item = queue.decide(
                item_id, body.verdict, body.notes, body.reviewer, body.token
            )
        except UnknownItemError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except DecisionConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except InvalidVerdictError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"item": item.to_json()}

    @app.post("/item/{item_id}/agreement")
    def post_agreement(item_id: str, body: AgreementBody) -> dict:
        try:
            queue.record_agreement_label(item_id, body.annotator, body.label)
        except UnknownItemError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"recorded": True}

    @app.get("/agreement")
    def get_agreement() -> dict:
        labels = queue.agreement_labels()
        return {
            "kappa": queue.cohens_kappa(),
            "labelled_items": len(labels),
            "labels": sum(len(votes) for votes in labels.values()),
        }

    @app.get("/batches")
    def get_batches(kind: str | None = None) -> dict:
        return {
            "batches": [stats.to_json() for stats in queue.batch_stats(kind=kind)],
            "batch_size": queue.batch_size,
            "flag_threshold": queue.flag_threshold,
        }

    @app.get("/media/{name:path}")
    def get_media(name: str, request: Request) -> Response:
        if root is None:
            raise HTTPException(status_code=404, detail="no media root configured")
        target = (root / name).resolve()
        if root not in target.parents and target != root:
            raise HTTPException(status_code=404, detail="unknown media")
        if not target.is_file():
            raise HTTPException(status_code=404, detail="unknown media")
        data = target.read_bytes()
        media_type = _MEDIA_TYPES.get(target.suffix.lower(), "application/octet-stream")
        header = request.headers.get("range", "")
        match = _RANGE.match(header) if header else None
        if match and (match.group(1) or match.group(2)):
            start = int(match.group(1)) if match.group(1) else 0
            end = int(match.group(2)) if match.group(2) else len(data) - 1
            end = min(end, len(data) - 1)
            if start > end or start >= len(data):
                raise HTTPException(status_code=416, detail="range out of bounds")
            return Response(
                content=data[start : end + 1],
                status_code=206,
                media_type=media_type,
                headers={
                    "Content-Range": f"bytes {start}-{end}/{len(data)}",
                    "Accept-Ranges": "bytes",
                },
            )
        return Response(
            content=data,
            media_type=media_type,
            headers={"Accept-Ranges": "bytes"},
        )

    return app
