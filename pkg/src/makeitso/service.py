"""HTTP service: inversion jobs, edit rendering, bank listing.

One background worker executes inversion jobs sequentially; HTTP handlers
only read job snapshots, so polling stays responsive during a run. Every
finished job is a plain result directory under the data root, which makes
results servable after a restart and identical to what the CLI writes.
"""

from __future__ import annotations

import json
import os
import queue
import threading
import uuid
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, File, Form, UploadFile
from fastapi.responses import JSONResponse, Response

from . import checkpoint as ckpt
from . import editing, imageio, runio
from .cli import render_edit
from .errors import MakeItSoError
from .generator import init_toy_generator
from .inversion import InversionConfig, make_it_so
from .objectives import FeatureExtractor

API_VERSION = "makeitso/1"
DEFAULT_DATA_ROOT = "makeitso-data"

JOB_STATES = ("queued", "running", "done", "failed")


@dataclass
class JobRecord:
    id: str
    kind: str = "invert"
    state: str = "queued"
    progress_iter: int = 0
    progress_total: int = 0
    config: dict = field(default_factory=dict)
    error: str | None = None

    def view(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "state": self.state,
            "progress": {"iteration": self.progress_iter, "total": self.progress_total},
            "config": self.config,
            "error": self.error,
        }


class JobStore:
    """Thread-safe registry; handlers read copies, the worker mutates."""

    def __init__(self):
        self._lock = threading.Lock()
        self._jobs: dict[str, JobRecord] = {}

    def add(self, record: JobRecord):
        with self._lock:
            self._jobs[record.id] = record

    def get(self, job_id: str) -> JobRecord | None:
        with self._lock:
            return self._jobs.get(job_id)

    def snapshot(self, job_id: str) -> dict | None:
        with self._lock:
            rec = self._jobs.get(job_id)
            return rec.view() if rec else None

    def set_progress(self, job_id: str, iteration: int, total: int):
        with self._lock:
            rec = self._jobs[job_id]
            # monotone by contract; guard against any out-of-order callback
            rec.progress_iter = max(rec.progress_iter, iteration)
            rec.progress_total = total

    def set_state(self, job_id: str, state: str, error: str | None = None):
        with self._lock:
            rec = self._jobs[job_id]
            rec.state = state
            if error is not None:
                rec.error = error


def _error(status: int, message: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message, **extra})


def create_app(data_root: str | None = None, checkpoint_path: str | None = None,
               bank_path: str | None = None, generator_seed: int = 0) -> FastAPI:
    root = Path(data_root or os.environ.get("MAKEITSO_DATA_ROOT") or DEFAULT_DATA_ROOT)
    root.mkdir(parents=True, exist_ok=True)

    if checkpoint_path:
        params = ckpt.load_checkpoint(checkpoint_path)
    else:
        params = init_toy_generator(generator_seed)
    bank = editing.load_bank(bank_path) if bank_path else editing.make_default_bank(params)
    bank.check_compatible(params)
    extractor = FeatureExtractor(params.config.resolution)

    store = JobStore()
    work: queue.Queue = queue.Queue()
    results: dict[str, runio.LoadedResult] = {}
    results_lock = threading.Lock()

    def job_dir(job_id: str) -> Path:
        return root / job_id

    def get_result(job_id: str) -> runio.LoadedResult:
        with results_lock:
            cached = results.get(job_id)
        if cached is not None:
            return cached
        loaded = runio.load_result_dir(job_dir(job_id))
        with results_lock:
            results[job_id] = loaded
        return loaded

    # results from a previous process: reload as finished jobs
    for entry in sorted(root.iterdir()) if root.is_dir() else []:
        if (entry / runio.MANIFEST_NAME).is_file():
            with open(entry / runio.MANIFEST_NAME) as fh:
                manifest = json.load(fh)
            total = manifest.get("total_iters", 0)
            store.add(JobRecord(id=entry.name, state="done", progress_iter=total,
                                progress_total=total, config=manifest.get("config", {})))

    def run_job(job_id: str, target: np.ndarray, config: InversionConfig,
                target_info: dict):
        store.set_state(job_id, "running")
        try:
            result = make_it_so(
                params, target, bank, config, extractor,
                progress_cb=lambda it, total: store.set_progress(job_id, it, total))
            runio.write_result_dir(job_dir(job_id), result, target, bank, extractor,
                                   target_info=target_info)
            get_result(job_id)
            store.set_state(job_id, "done")
        except Exception as e:
            store.set_state(job_id, "failed", error=str(e))

    def worker():
        while True:
            item = work.get()
            if item is None:
                return
            run_job(*item)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        thread = threading.Thread(target=worker, name="makeitso-worker", daemon=True)
        thread.start()
        yield
        work.put(None)
        thread.join(timeout=5)

    app = FastAPI(title="makeitso", lifespan=lifespan)

    @app.get("/api/version")
    def version():
        return {
            "api": API_VERSION,
            "formats": {
                "run_manifest": runio.MANIFEST_FORMAT,
                "checkpoint": f"{ckpt.MAGIC}/{ckpt.FORMAT_VERSION}",
            },
            "generator": {"arch_hash": params.arch_hash,
                          "resolution": params.config.resolution},
        }

    @app.post("/api/jobs")
    async def create_job(image: UploadFile = File(...),
                         iters: int = Form(500),
                         seed: int = Form(0),
                         beta: float = Form(None),
                         ema_interval: int = Form(None),
                         replay_n: int = Form(None)):
        blob = await image.read()
        try:
            target, orig_size = imageio.load_image(blob, params.config.resolution)
        except Exception:
            return _error(400, "image could not be decoded (PNG or JPEG required)")
        overrides = {"total_iters": iters, "seed": seed,
                     "ema_interval": ema_interval if ema_interval is not None
                     else (200 if iters == 1000 else 100)}
        if beta is not None:
            overrides["ema_beta"] = beta
        if replay_n is not None:
            overrides["replay_batch"] = replay_n
        try:
            config = InversionConfig(**overrides)
            config.validate()
        except MakeItSoError as e:
            return _error(400, str(e))

        job_id = uuid.uuid4().hex[:12]
        record = JobRecord(id=job_id, progress_total=config.total_iters,
                           config=runio.config_to_dict(config))
        store.add(record)
        d = job_dir(job_id)
        d.mkdir(parents=True, exist_ok=True)
        imageio.save_png(target, d / runio.TARGET_PNG)
        target_info = {"source": "upload", "filename": image.filename,
                       "original_size": list(orig_size)}
        work.put((job_id, target, config, target_info))
        return JSONResponse(status_code=201, content=store.snapshot(job_id))

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str):
        snap = store.snapshot(job_id)
        if snap is None:
            return _error(404, f"unknown job '{job_id}'")
        return snap

    @app.get("/api/jobs/{job_id}/image")
    def get_job_image(job_id: str, kind: str = "target"):
        snap = store.snapshot(job_id)
        if snap is None:
            return _error(404, f"unknown job '{job_id}'")
        if kind not in ("target", "reconstruction"):
            return _error(400, f"kind must be 'target' or 'reconstruction', got '{kind}'")
        if snap["state"] == "failed":
            return _error(500, "job failed", detail=snap["error"])
        name = runio.TARGET_PNG if kind == "target" else runio.RECON_PNG
        if kind == "reconstruction" and snap["state"] != "done":
            return _error(409, f"job is {snap['state']}; reconstruction not available yet")
        path = job_dir(job_id) / name
        if not path.is_file():
            return _error(409, f"{kind} image not available yet")
        return Response(content=path.read_bytes(), media_type="image/png")

    @app.get("/api/banks")
    def get_banks():
        return {
            "banks": [
                {
                    "id": "default",
                    "arch_hash": bank.arch_hash,
                    "directions": [
                        {"name": d.name, "default_strength": d.default_strength,
                         "strength_range": list(d.strength_range)}
                        for d in bank.directions
                    ],
                }
            ]
        }

    @app.post("/api/results/{job_id}/edit")
    async def edit_result(job_id: str, body: dict):
        snap = store.snapshot(job_id)
        if snap is None:
            return _error(404, f"unknown job '{job_id}'")
        if snap["state"] == "failed":
            return _error(500, "job failed", detail=snap["error"])
        if snap["state"] != "done":
            return _error(409, f"job is {snap['state']}; edits require a finished job")
        direction = body.get("direction")
        strength = body.get("strength")
        if not isinstance(direction, str):
            return _error(400, "body must contain a string 'direction'")
        if not isinstance(strength, (int, float)) or not np.isfinite(strength):
            return _error(400, "body must contain a finite numeric 'strength'")
        loaded = get_result(job_id)
        try:
            loaded.bank.get(direction)
        except KeyError:
            return _error(400, f"unknown direction '{direction}'",
                          available=loaded.bank.names())
        img = render_edit(loaded, direction, float(strength))
        return Response(content=imageio.encode_png(img), media_type="image/png")

    @app.get("/api/results/{job_id}/manifest")
    def get_manifest(job_id: str):
        snap = store.snapshot(job_id)
        if snap is None:
            return _error(404, f"unknown job '{job_id}'")
        if snap["state"] == "failed":
            return _error(500, "job failed", detail=snap["error"])
        if snap["state"] != "done":
            return _error(409, f"job is {snap['state']}; manifest not written yet")
        with open(job_dir(job_id) / runio.MANIFEST_NAME) as fh:
            return json.load(fh)

    return app
