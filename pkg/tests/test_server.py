"""HTTP API contract tests over the in-process engine."""

import io
import tarfile
import time

import pytest
from fastapi.testclient import TestClient

from focusview.config import EngineConfig
from focusview.pipeline import Engine
from focusview.server import create_app

from helpers import build_synthetic_video


@pytest.fixture(scope="module")
def client(tmp_path_factory):
    video_dir = tmp_path_factory.mktemp("fixture") / "video"
    build_synthetic_video(video_dir, width=320, height=180, fps=4, seconds=3.0)
    config = EngineConfig(store_path=str(tmp_path_factory.mktemp("store")),
                          max_workers=2)
    engine = Engine(config)
    app = create_app(engine)
    with TestClient(app) as tc:
        tc.video_dir = video_dir
        tc.engine = engine
        yield tc
    engine.shutdown()


@pytest.fixture(scope="module")
def video_id(client):
    resp = client.post("/videos", json={"path": str(client.video_dir)})
    assert resp.status_code == 200
    return resp.json()["video_id"]


def wait_for_job(client, job_id, timeout=120.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        state = client.get(f"/jobs/{job_id}").json()
        if state["state"] in ("done", "failed"):
            return state
        time.sleep(0.1)
    raise TimeoutError(f"job {job_id} did not settle")


def test_health(client):
    assert client.get("/health").json() == {"ok": True}


def test_ingest_requires_path(client):
    assert client.post("/videos", json={}).status_code == 400


def test_ingest_bad_path(client):
    resp = client.post("/videos", json={"path": "/nonexistent/clip.mp4"})
    assert resp.status_code == 400


def test_analysis_post_then_get(client, video_id):
    posted = client.post(f"/videos/{video_id}/analysis")
    assert posted.status_code == 200
    manifest = posted.json()
    assert manifest["video_id"] == video_id
    assert manifest["scene"]["content_tracks"]

    fetched = client.get(f"/videos/{video_id}/analysis")
    assert fetched.status_code == 200
    assert fetched.json() == manifest


def test_analysis_404_for_unknown_video(client):
    assert client.get("/videos/feedbeef/analysis").status_code == 404


def test_render_and_stream(client, video_id):
    body = {"preset": {"layout": "original", "background": "solid_peach"}}
    resp = client.post(f"/videos/{video_id}/renders", json=body)
    assert resp.status_code == 200
    job = wait_for_job(client, resp.json()["job_id"])
    assert job["state"] == "done"
    assert job["progress"] == 1.0

    stream = client.get(f"/videos/{video_id}/renders/{job['key']}/stream")
    assert stream.status_code == 200
    assert stream.headers["content-type"] == "application/x-tar"
    with tarfile.open(fileobj=io.BytesIO(stream.content)) as tar:
        names = tar.getnames()
    assert any(name.endswith(".png") for name in names)

    frame = client.get(f"/videos/{video_id}/renders/{job['key']}/frames/0")
    assert frame.status_code == 200
    assert frame.headers["content-type"] == "image/png"


def test_render_rejects_bad_preset(client, video_id):
    body = {"preset": {"layout": "split_screen"}}
    resp = client.post(f"/videos/{video_id}/renders", json=body)
    assert resp.status_code == 422


def test_render_requires_body_choice(client, video_id):
    assert client.post(f"/videos/{video_id}/renders", json={}).status_code == 400


def test_render_segment_manifest(client, video_id):
    duration = client.engine.store.meta(video_id)["duration"]
    body = {"segment_manifest": {
        "duration": duration,
        "boundaries": [0.0, 1.5],
        "presets": [
            {"layout": "original", "background": "original"},
            {"layout": "original", "background": "solid_dark"},
        ],
        "notes": [None, None],
    }}
    resp = client.post(f"/videos/{video_id}/renders", json=body)
    assert resp.status_code == 200
    job = wait_for_job(client, resp.json()["job_id"])
    assert job["state"] == "done"


def test_job_404(client):
    assert client.get("/jobs/na").status_code == 404


def test_captions_formats(client, video_id):
    vtt = client.get(f"/videos/{video_id}/captions", params={"format": "vtt"})
    assert vtt.status_code == 200
    assert vtt.text.startswith("WEBVTT")

    enriched = client.get(f"/videos/{video_id}/captions", params={"format": "enriched"})
    assert "<00:" in enriched.text

    data = client.get(f"/videos/{video_id}/captions", params={"format": "json"}).json()
    assert data and data[0]["cue_index"] == 0
    assert {"w", "start", "end"} <= set(data[0]["words"][0])

    bad = client.get(f"/videos/{video_id}/captions", params={"format": "srt"})
    assert bad.status_code == 422


def test_segments_get_put_roundtrip(client, video_id):
    initial = client.get(f"/videos/{video_id}/segments").json()
    assert initial["boundaries"] == [0.0]

    updated = dict(initial)
    updated["boundaries"] = [0.0, 1.0]
    updated["presets"] = [initial["presets"][0], initial["presets"][0]]
    updated["notes"] = [None, "talking head"]
    put = client.put(f"/videos/{video_id}/segments", json=updated)
    assert put.status_code == 200
    assert client.get(f"/videos/{video_id}/segments").json()["boundaries"] == [0.0, 1.0]

    # restore
    client.put(f"/videos/{video_id}/segments", json=initial)


def test_segments_validation(client, video_id):
    bad = {"duration": 3.0, "boundaries": [0.5], "presets": [{}], "notes": [None]}
    assert client.put(f"/videos/{video_id}/segments", json=bad).status_code == 422


def test_grid_endpoint(client, video_id):
    resp = client.post(f"/videos/{video_id}/grid")
    assert resp.status_code == 200
    jobs = resp.json()["jobs"]
    assert len(jobs) == 20
    assert len({j["key"] for j in jobs}) == 20
    for j in jobs:
        final = wait_for_job(client, j["job_id"])
        assert final["state"] == "done"
