"""HTTP screening service: hosts one trained checkpoint and persists
anonymized screening records for the technician console.

Image bytes are never persisted unless the retention flag is set; only the
derived numbers are stored."""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, File, Form, HTTPException, UploadFile
from fastapi.middleware.cors import CORSMiddleware

from . import model as model_mod
from .imaging import CropBoundsError, CropRect, ImageDecodeError, preprocess_for_inference
from .store import NotFoundError, RecordStore, ScreeningRecord, utc_now

API_PREFIX = "/api/v1"


@dataclass
class ServiceConfig:
    checkpoint_path: Path
    store_path: Path
    host: str = "127.0.0.1"
    port: int = 8000
    retain_images: bool = False
    max_upload_bytes: int = 16 * 1024 * 1024


def create_app(config: ServiceConfig) -> FastAPI:
    """Build the FastAPI app; fails fast on a checkpoint that does not
    self-validate (parameter count must match its embedded config)."""
    net, metadata = model_mod.load_checkpoint(config.checkpoint_path)
    expected = model_mod.parameter_count(model_mod.DenseClassifier(net.config))
    actual = model_mod.parameter_count(net)
    if actual != expected:
        raise model_mod.CheckpointError(
            f"checkpoint parameter count {actual} disagrees with its config "
            f"(expected {expected})"
        )
    version = model_mod.checkpoint_digest(config.checkpoint_path)
    store = RecordStore(config.store_path)
    started = time.monotonic()

    app = FastAPI(title="DR screening service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    app.state.store = store
    app.state.model = net
    app.state.model_version = version

    def with_version(payload: dict) -> dict:
        payload["model_version"] = version
        return payload

    @app.post(f"{API_PREFIX}/screenings", status_code=201)
    async def submit_screening(
        image: UploadFile = File(...),
        patient_code: str = Form(...),
        eye: str | None = Form(None),
        crop_x: int | None = Form(None),
        crop_y: int | None = Form(None),
        crop_side: int | None = Form(None),
    ):
        data = await image.read()
        if len(data) > config.max_upload_bytes:
            raise HTTPException(413, "image exceeds the upload size limit")
        if not patient_code.strip():
            raise HTTPException(422, "patient_code must be non-empty")
        if eye is not None and eye not in ("left", "right"):
            raise HTTPException(422, "eye must be 'left' or 'right'")
        crop_given = [v for v in (crop_x, crop_y, crop_side) if v is not None]
        if crop_given and len(crop_given) != 3:
            raise HTTPException(422, "crop_x, crop_y and crop_side must be given together")
        try:
            rect = CropRect(x=crop_x, y=crop_y, side=crop_side) if crop_given else None
            tensor = preprocess_for_inference(data, rect, target=net.config.input_side)
        except ImageDecodeError as exc:
            raise HTTPException(400, f"undecodable image: {exc}") from exc
        except CropBoundsError as exc:
            raise HTTPException(422, f"invalid crop: {exc}") from exc
        pred = model_mod.predict(net, tensor)
        record = ScreeningRecord(
            screening_id=uuid.uuid4().hex,
            patient_code=patient_code,
            created_at=utc_now(),
            probabilities=list(pred.probabilities),
            grade=int(pred.grade),
            dr_positive=int(pred.grade) != 0,
            dr_score=model_mod.dr_score(pred.probabilities),
            model_version=version,
            eye=eye,
            crop={"x": rect.x, "y": rect.y, "side": rect.side} if rect else None,
        )
        store.add(record)
        if config.retain_images:
            image_dir = Path(config.store_path).parent / "images"
            image_dir.mkdir(parents=True, exist_ok=True)
            (image_dir / f"{record.screening_id}.bin").write_bytes(data)
        return record.to_dict()

    @app.get(f"{API_PREFIX}/screenings/{{screening_id}}")
    def get_screening(screening_id: str):
        try:
            return store.get(screening_id).to_dict()
        except NotFoundError:
            raise HTTPException(404, f"unknown screening id {screening_id!r}") from None

    @app.get(f"{API_PREFIX}/screenings")
    def list_screenings(patient_code: str | None = None, page: int = 1,
                        page_size: int = 50):
        if page < 1 or page_size < 1:
            raise HTTPException(422, "page and page_size must be >= 1")
        records, total = store.list(patient_code=patient_code, page=page,
                                    page_size=page_size)
        return with_version({
            "records": [r.to_dict() for r in records],
            "total": total,
            "page": page,
            "page_size": page_size,
        })

    @app.post(f"{API_PREFIX}/screenings/{{screening_id}}/decision")
    def record_decision(screening_id: str, body: dict):
        decision = body.get("decision")
        if decision not in ("refer", "monitor"):
            raise HTTPException(422, "decision must be 'refer' or 'monitor'")
        try:
            return store.record_decision(screening_id, decision).to_dict()
        except NotFoundError:
            raise HTTPException(404, f"unknown screening id {screening_id!r}") from None

    @app.get(f"{API_PREFIX}/summary")
    def summary(patient_code: str | None = None):
        return with_version(store.summary(patient_code=patient_code))

    @app.get(f"{API_PREFIX}/health")
    def health():
        return with_version({"status": "ok",
                             "uptime_seconds": time.monotonic() - started,
                             "metadata": metadata})

    return app


def serve(config: ServiceConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port)
