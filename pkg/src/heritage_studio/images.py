"""Image generation pipeline: job queue, pluggable backend port, image store.

The stub backend is a pure function of (prompt, seed, base rendering); it
renders a visual hash as a 512x512 PNG with the prompt burned into the PNG
metadata, so tests and offline demos are fully deterministic. The remote
backend posts the bundled node-graph workflow descriptor and treats the
service as opaque.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import queue
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Protocol

import httpx
from PIL import Image
from PIL.PngImagePlugin import PngInfo

from .corpus import Corpus

BATCH_SIZE = 4
STUB_SIZE = 512
QUEUE_DEPTH = 32
DEFAULT_WORKERS = 2


class PipelineError(Exception):
    pass


class UnknownBaseRendering(PipelineError):
    pass


class QueueFull(PipelineError):
    pass


class UnknownJob(PipelineError):
    pass


class UnknownImage(PipelineError):
    pass


@dataclass(frozen=True)
class GenerationRequest:
    request_id: str
    prompt: str
    base_rendering_ref: str
    seed: int
    batch_size: int = BATCH_SIZE
    parent_image_id: str = ""

    def __post_init__(self):
        if self.batch_size != BATCH_SIZE:
            raise ValueError(f"batch_size is fixed at {BATCH_SIZE}")
        if not self.prompt:
            raise ValueError("prompt must be nonempty")


@dataclass(frozen=True)
class GenerationJob:
    job_id: str
    status: str  # Queued | Running | Done | Failed
    image_ids: tuple[str, ...] = ()
    failure_reason: str = ""
    queued_at: float = 0.0
    finished_at: float = 0.0


class ImageBackendPort(Protocol):
    def generate(self, request: GenerationRequest, base_image: bytes) -> list[bytes]: ...


class StubImageBackend:
    """Deterministic raster of a visual hash; identical inputs, identical bytes."""

    def generate(self, request: GenerationRequest, base_image: bytes) -> list[bytes]:
        payloads = []
        for index in range(request.batch_size):
            key = f"{request.prompt}|{request.seed}|{request.base_rendering_ref}|{index}"
            digest = hashlib.sha256(key.encode("utf-8")).digest()
            img = Image.new("RGB", (STUB_SIZE, STUB_SIZE))
            cell = STUB_SIZE // 8
            for row in range(8):
                for col in range(8):
                    b = digest[(row * 8 + col) % 32]
                    c = digest[(row + col * 3) % 32]
                    img.paste(
                        (b, c, (b + c) % 256),
                        (col * cell, row * cell, (col + 1) * cell, (row + 1) * cell),
                    )
            meta = PngInfo()
            meta.add_text("prompt", request.prompt)
            meta.add_text("seed", str(request.seed))
            meta.add_text("base", request.base_rendering_ref)
            buf = io.BytesIO()
            img.save(buf, format="PNG", pnginfo=meta)
            payloads.append(buf.getvalue())
        return payloads


def parse_workflow(path: Path) -> dict:
    """Parse the node-graph workflow descriptor into nodes/edges/slots."""
    nodes: list[dict] = []
    edges: list[tuple[str, str]] = []
    meta: dict = {}
    current: Optional[dict] = None
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            current = None
            continue
        key, _, value = line.partition(":")
        key, value = key.strip(), value.strip()
        if key == "node":
            current = {"id": value}
            nodes.append(current)
        elif key == "edge":
            src, _, dst = value.partition("->")
            edges.append((src.strip(), dst.strip()))
            current = None
        elif current is not None:
            current[key] = value
        else:
            meta[key] = value
    slots = sorted({n["param"] for n in nodes if "param" in n})
    return {"meta": meta, "nodes": nodes, "edges": edges, "slots": slots}


def default_workflow_path() -> Path:
    return Path(__file__).parent / "data" / "workflows" / "diaolou_i2i.flow"


class RemoteWorkflowBackend:
    """Posts the workflow descriptor with slots filled; the service is opaque."""

    def __init__(self, endpoint: str, timeout: float = 60.0, workflow_path: Optional[Path] = None):
        self.endpoint = endpoint
        self.timeout = timeout
        self.workflow = parse_workflow(workflow_path or default_workflow_path())

    def generate(self, request: GenerationRequest, base_image: bytes) -> list[bytes]:
        payload = {
            "workflow": self.workflow,
            "parameters": {
                "PROMPT": request.prompt,
                "BASE_IMAGE": base_image.hex(),
                "SEED": request.seed,
            },
            "batch_size": request.batch_size,
        }
        resp = httpx.post(self.endpoint, json=payload, timeout=self.timeout)
        resp.raise_for_status()
        images = resp.json()["images"]
        if len(images) != request.batch_size:
            raise PipelineError(f"backend returned {len(images)} images, expected {request.batch_size}")
        return [bytes.fromhex(i) for i in images]


def backend_from_env(env: Optional[dict] = None) -> ImageBackendPort:
    env = os.environ if env is None else env
    endpoint = env.get("IMAGE_BACKEND_ENDPOINT", "")
    if not endpoint:
        return StubImageBackend()
    timeout = float(env.get("IMAGE_BACKEND_TIMEOUT_SECONDS", "60"))
    return RemoteWorkflowBackend(endpoint, timeout)


class ImageStore:
    """Disk-backed store: payload plus a JSON metadata sidecar per image."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def put(self, image_id: str, payload: bytes, metadata: dict) -> None:
        (self.root / f"{image_id}.png").write_bytes(payload)
        (self.root / f"{image_id}.json").write_text(
            json.dumps(metadata, ensure_ascii=False, sort_keys=True), encoding="utf-8"
        )

    def get(self, image_id: str) -> tuple[bytes, str]:
        path = self.root / f"{image_id}.png"
        if not path.is_file():
            raise UnknownImage(image_id)
        return path.read_bytes(), "image/png"

    def metadata(self, image_id: str) -> dict:
        path = self.root / f"{image_id}.json"
        if not path.is_file():
            raise UnknownImage(image_id)
        return json.loads(path.read_text(encoding="utf-8"))

    def exists(self, image_id: str) -> bool:
        return (self.root / f"{image_id}.png").is_file()


class ImagePipeline:
    """FIFO job queue (bounded depth) with a small worker pool."""

    def __init__(
        self,
        corpus: Corpus,
        store: ImageStore,
        backend: Optional[ImageBackendPort] = None,
        workers: int = DEFAULT_WORKERS,
    ):
        self.corpus = corpus
        self.store = store
        self.backend = backend or StubImageBackend()
        self._queue: queue.Queue = queue.Queue(maxsize=QUEUE_DEPTH)
        self._jobs: dict[str, GenerationJob] = {}
        self._requests: dict[str, GenerationRequest] = {}
        self._lock = threading.Lock()
        self._counter = 0
        self._seed_counter = 0
        self._threads = [
            threading.Thread(target=self._worker, daemon=True) for _ in range(max(1, workers))
        ]
        for t in self._threads:
            t.start()

    def next_seed(self) -> int:
        with self._lock:
            self._seed_counter += 1
            return self._seed_counter

    def _resolve_base(self, ref: str) -> bytes:
        asset = self.corpus.rendering_path(ref)
        if asset.is_file():
            return asset.read_bytes()
        if self.store.exists(ref):
            return self.store.get(ref)[0]
        raise UnknownBaseRendering(ref)

    def submit(self, request: GenerationRequest) -> str:
        self._resolve_base(request.base_rendering_ref)  # fail fast on dangling refs
        with self._lock:
            self._counter += 1
            job_id = f"job-{self._counter:06d}"
            job = GenerationJob(job_id=job_id, status="Queued", queued_at=time.time())
            self._jobs[job_id] = job
            self._requests[job_id] = request
        try:
            self._queue.put_nowait(job_id)
        except queue.Full:
            with self._lock:
                del self._jobs[job_id]
                del self._requests[job_id]
            raise QueueFull(f"queue depth {QUEUE_DEPTH} reached")
        return job_id

    def poll(self, job_id: str) -> GenerationJob:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise UnknownJob(job_id)
            return job

    def request_for(self, job_id: str) -> GenerationRequest:
        with self._lock:
            req = self._requests.get(job_id)
            if req is None:
                raise UnknownJob(job_id)
            return req

    def refine(self, parent_image_id: str, edited_prompt: str, seed: int) -> str:
        """New job using the parent image as the base rendering (lineage recorded)."""
        if not self.store.exists(parent_image_id):
            raise UnknownImage(parent_image_id)
        with self._lock:
            self._counter += 1
            request_id = f"req-{self._counter:06d}"
        request = GenerationRequest(
            request_id=request_id,
            prompt=edited_prompt,
            base_rendering_ref=parent_image_id,
            seed=seed,
            parent_image_id=parent_image_id,
        )
        return self.submit(request)

    def fetch_image(self, image_id: str) -> tuple[bytes, str]:
        return self.store.get(image_id)

    def lineage(self, image_id: str) -> list[str]:
        """Ancestor chain, oldest last; guaranteed acyclic by construction."""
        chain = []
        current = image_id
        while current:
            meta = self.store.metadata(current)
            parent = meta.get("parent_image_id", "")
            if parent:
                chain.append(parent)
            current = parent
        return chain

    def wait(self, job_id: str, timeout: float = 10.0) -> GenerationJob:
        deadline = time.time() + timeout
        while time.time() < deadline:
            job = self.poll(job_id)
            if job.status in ("Done", "Failed"):
                return job
            time.sleep(0.01)
        return self.poll(job_id)

    def _worker(self) -> None:
        while True:
            job_id = self._queue.get()
            if job_id is None:
                return
            with self._lock:
                self._jobs[job_id] = replace(self._jobs[job_id], status="Running")
                request = self._requests[job_id]
            try:
                base = self._resolve_base(request.base_rendering_ref)
                payloads = self.backend.generate(request, base)
                image_ids = []
                for index, payload in enumerate(payloads):
                    image_id = f"{job_id}-{index}"
                    self.store.put(
                        image_id,
                        payload,
                        {
                            "prompt": request.prompt,
                            "seed": request.seed,
                            "base_rendering_ref": request.base_rendering_ref,
                            "parent_image_id": request.parent_image_id,
                            "job_id": job_id,
                            "index": index,
                        },
                    )
                    image_ids.append(image_id)
                with self._lock:
                    self._jobs[job_id] = replace(
                        self._jobs[job_id],
                        status="Done",
                        image_ids=tuple(image_ids),
                        finished_at=time.time(),
                    )
            except Exception as exc:  # noqa: BLE001 - failure is a job state
                with self._lock:
                    self._jobs[job_id] = replace(
                        self._jobs[job_id],
                        status="Failed",
                        failure_reason=str(exc),
                        finished_at=time.time(),
                    )
            finally:
                self._queue.task_done()
