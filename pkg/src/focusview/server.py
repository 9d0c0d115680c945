"""HTTP JSON API over the engine.

Endpoints:
    POST /videos {"path": ...}                 -> {"video_id"}
    POST /videos/{id}/analysis                 -> analysis manifest
    GET  /videos/{id}/analysis                 -> cached manifest or 404
    POST /videos/{id}/renders {preset|segment_manifest} -> {"job_id", ...}
    GET  /jobs/{id}                            -> job state + progress
    GET  /videos/{id}/renders/{key}/stream     -> media (muxed file if the
         transcoder produced one, else a tar of the PNG frame sequence)
    GET  /videos/{id}/captions?format=vtt|enriched|json
    GET  /videos/{id}/segments                 -> segment manifest
    PUT  /videos/{id}/segments                 -> stored manifest
    POST /videos/{id}/grid                     -> the 20 variant jobs
"""

from __future__ import annotations

import io
import json
import tarfile
from typing import Any

from fastapi import Body, FastAPI, HTTPException, Query
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse, Response

from .core import CustomizationPreset, FocusViewError, ValidationError
from .pipeline import Engine, SegmentManifest
from .store import IngestError


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="focusview")

    def require_video(video_id: str) -> None:
        if not engine.store.has_video(video_id):
            raise HTTPException(status_code=404, detail="unknown video")

    @app.get("/health")
    def health() -> dict[str, Any]:
        return {"ok": True}

    @app.post("/videos")
    def ingest(body: dict[str, Any] = Body(...)) -> dict[str, str]:
        path = body.get("path")
        if not path:
            raise HTTPException(status_code=400, detail="path required")
        try:
            return {"video_id": engine.ingest(path)}
        except IngestError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.post("/videos/{video_id}/analysis")
    def analyze(video_id: str, force: bool = Query(default=False)) -> JSONResponse:
        require_video(video_id)
        manifest = engine.analyze(video_id, force=force)
        return JSONResponse(manifest.to_json())

    @app.get("/videos/{video_id}/analysis")
    def get_analysis(video_id: str) -> JSONResponse:
        require_video(video_id)
        cached = engine.store.load_analysis(video_id, engine.config.analysis_hash())
        if cached is None:
            raise HTTPException(status_code=404, detail="not analyzed")
        return JSONResponse(json.loads(cached))

    @app.post("/videos/{video_id}/renders")
    def render(video_id: str, body: dict[str, Any] = Body(...)) -> dict[str, Any]:
        require_video(video_id)
        try:
            if "segment_manifest" in body:
                request: CustomizationPreset | SegmentManifest = \
                    SegmentManifest.from_json(body["segment_manifest"])
            elif "preset" in body:
                request = CustomizationPreset.from_json(body["preset"])
            else:
                raise HTTPException(status_code=400,
                                    detail="preset or segment_manifest required")
        except ValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        job = engine.render(video_id, request, wait=False)
        return {"job_id": job.job_id, "key": job.key, "state": job.state.value}

    @app.post("/videos/{video_id}/grid")
    def grid(video_id: str) -> dict[str, Any]:
        require_video(video_id)
        jobs = engine.render_variant_grid(video_id, wait=False)
        return {"jobs": [j.to_json() for j in jobs]}

    @app.get("/jobs/{job_id}")
    def job_state(job_id: str) -> dict[str, Any]:
        job = engine.job(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail="unknown job")
        return job.to_json()

    @app.get("/videos/{video_id}/renders/{key}/stream")
    def stream(video_id: str, key: str):
        require_video(video_id)
        render_dir = engine.store.render_dir(video_id, key)
        manifest = engine.store.load_render_manifest(video_id, key)
        if manifest is None:
            raise HTTPException(status_code=404, detail="render not available")
        muxed = render_dir / "video.mp4"
        if muxed.exists():
            return FileResponse(str(muxed), media_type="video/mp4")
        buf = io.BytesIO()
        with tarfile.open(fileobj=buf, mode="w") as tar:
            tar.add(str(render_dir / "frames"), arcname="frames")
            audio = manifest.get("audio", {}).get("path")
            if audio and (render_dir / audio).exists():
                tar.add(str(render_dir / audio), arcname=audio)
        return Response(content=buf.getvalue(), media_type="application/x-tar")

    @app.get("/videos/{video_id}/renders/{key}/frames/{index}")
    def rendered_frame(video_id: str, key: str, index: int):
        require_video(video_id)
        path = engine.store.render_dir(video_id, key) / "frames" / f"{index:06d}.png"
        if not path.exists():
            raise HTTPException(status_code=404, detail="no such frame")
        return FileResponse(str(path), media_type="image/png")

    @app.get("/videos/{video_id}/captions")
    def captions(video_id: str, format: str = Query(default="vtt")):
        require_video(video_id)
        try:
            payload = engine.captions(video_id, format)
        except ValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        if format == "json":
            return JSONResponse(json.loads(payload))
        return PlainTextResponse(payload, media_type="text/vtt")

    @app.get("/videos/{video_id}/segments")
    def get_segments(video_id: str) -> JSONResponse:
        require_video(video_id)
        return JSONResponse(engine.get_segments(video_id).to_json())

    @app.put("/videos/{video_id}/segments")
    def put_segments(video_id: str, body: dict[str, Any] = Body(...)) -> JSONResponse:
        require_video(video_id)
        try:
            manifest = SegmentManifest.from_json(body)
        except (ValidationError, KeyError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        engine.put_segments(video_id, manifest)
        return JSONResponse(manifest.to_json())

    @app.exception_handler(FocusViewError)
    def engine_error(_, exc: FocusViewError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    return app
