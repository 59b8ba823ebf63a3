"""HTTP service binding the stack together: live scenes, SSE stream, queries.

A single background thread owns the simulation and builds scenes at the
configured wall-clock rate; request handlers only ever read immutable scene
snapshots, so queries can never perturb the scene stream. Queries pin a
scene id (latest by default) to stay reproducible while the sim advances.
"""
from __future__ import annotations

import asyncio
import json
import threading
from collections import OrderedDict
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse, Response, StreamingResponse
from fastapi.staticfiles import StaticFiles

from .backends import backend_from_config
from .bus import LinguisticScene, render_scene
from .pipeline import ChainPipeline, StageError
from .prompts import PromptSet
from .schemas import ConfigResponse, HealthResponse, QueryRequest, QueryResponse
from .stack import ScenePipeline
from .traffic import SimConfig

RING_SIZE = 512


@dataclass
class ServiceConfig:
    listen: str = "127.0.0.1:8000"
    sim: SimConfig = field(default_factory=SimConfig)
    backend: dict = field(default_factory=lambda: {"kind": "mock_scripted", "transcript": []})
    prompt_dir: str | None = None
    tick_hz: float | None = None  # wall-clock scene rate; defaults to sim.scene_hz
    prefix_on: bool = True
    rule_on: bool = True
    ui_dir: str | None = None

    @classmethod
    def from_json(cls, path: str | Path) -> "ServiceConfig":
        obj = json.loads(Path(path).read_text())
        sim = obj.get("sim", {})
        if isinstance(sim, str):
            sim_cfg = SimConfig.from_json(sim)
        else:
            if "speed_range" in sim:
                sim["speed_range"] = tuple(sim["speed_range"])
            sim_cfg = SimConfig(**sim)
        return cls(
            listen=obj.get("listen", "127.0.0.1:8000"),
            sim=sim_cfg,
            backend=obj.get("backend", {"kind": "mock_scripted", "transcript": []}),
            prompt_dir=obj.get("prompt_dir"),
            tick_hz=obj.get("tick_hz"),
            prefix_on=obj.get("prefix_on", True),
            rule_on=obj.get("rule_on", True),
            ui_dir=obj.get("ui_dir"),
        )

    @property
    def host(self) -> str:
        return self.listen.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.listen.rsplit(":", 1)[1])


class SimDriver:
    """Background thread producing scenes at a fixed wall-clock rate."""

    def __init__(self, config: ServiceConfig):
        self.pipeline = ScenePipeline(config.sim)
        self.tick_hz = config.tick_hz or config.sim.scene_hz
        if self.tick_hz <= 0:
            raise ValueError("tick rate must be > 0")
        self._ring: OrderedDict[int, LinguisticScene] = OrderedDict()
        self._latest: LinguisticScene | None = None
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._loop, name="sim-driver", daemon=True)

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        self._thread.join(timeout=5.0)

    def _loop(self) -> None:
        interval = 1.0 / self.tick_hz
        while not self._stop.is_set():
            scene = self.pipeline.tick()
            with self._lock:
                self._latest = scene
                self._ring[scene.scene_id] = scene
                while len(self._ring) > RING_SIZE:
                    self._ring.popitem(last=False)
            self._stop.wait(interval)

    @property
    def latest(self) -> LinguisticScene | None:
        with self._lock:
            return self._latest

    def scene(self, scene_id: int) -> LinguisticScene | None:
        with self._lock:
            return self._ring.get(scene_id)

    @property
    def scenes_built(self) -> int:
        with self._lock:
            return 0 if self._latest is None else self._latest.scene_id + 1


def create_app(config: ServiceConfig) -> FastAPI:
    driver = SimDriver(config)
    backend = backend_from_config(config.backend)
    prompts = PromptSet(config.prompt_dir, restrictive_rule_on=config.rule_on)
    chain = ChainPipeline(prompts, backend)

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        driver.start()
        yield
        driver.stop()

    app = FastAPI(title="coopscene", version="0.1.0", lifespan=lifespan)
    app.state.driver = driver

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(
            status="ok",
            scenes_built=driver.scenes_built,
            sim_time=driver.pipeline.t,
        )

    @app.get("/config", response_model=ConfigResponse)
    def config_echo():
        return ConfigResponse(
            listen=config.listen,
            backend=backend.describe(),
            tick_hz=driver.tick_hz,
            scene_hz=config.sim.scene_hz,
            queue_capacity=config.sim.queue_capacity,
            vehicle_count=config.sim.vehicle_count,
            av_count=config.sim.av_count,
            prefix_on=config.prefix_on,
            rule_on=config.rule_on,
        )

    @app.get("/scene")
    def scene():
        latest = driver.latest
        if latest is None:
            raise HTTPException(status_code=503, detail="no scene constructed yet")
        return Response(content=render_scene(latest), media_type="application/json")

    @app.get("/stream")
    async def stream(limit: int | None = None):
        async def events():
            last_sent = -1
            sent = 0
            poll = min(0.02, 1.0 / (4.0 * driver.tick_hz))
            while limit is None or sent < limit:
                latest = driver.latest
                if latest is not None and latest.scene_id > last_sent:
                    last_sent = latest.scene_id  # latest-only: intermediate scenes coalesce
                    sent += 1
                    yield f"data: {render_scene(latest)}\n\n"
                await asyncio.sleep(poll)

        return StreamingResponse(events(), media_type="text/event-stream")

    @app.post("/query", response_model=QueryResponse)
    def query(req: QueryRequest):
        if not req.question.strip():
            raise HTTPException(status_code=400, detail="empty question")
        if req.scene_id is not None:
            scene = driver.scene(req.scene_id)
            if scene is None:
                raise HTTPException(status_code=404, detail=f"unknown scene {req.scene_id}")
        else:
            scene = driver.latest
            if scene is None:
                raise HTTPException(status_code=503, detail="no scene constructed yet")
        ego_id = req.ego_id
        if ego_id is None:
            avs = scene.av_ids()
            if not avs:
                raise HTTPException(status_code=404, detail="scene contains no AV")
            ego_id = avs[0]
        elif scene.get(ego_id) is None:
            raise HTTPException(status_code=404, detail=f"unknown ego {ego_id}")
        try:
            result = chain.answer(req.question, scene, ego_id)
        except StageError as e:
            return JSONResponse(status_code=502, content={"detail": str(e), "stage": e.stage})
        return QueryResponse(**result.to_dict())

    if config.ui_dir and Path(config.ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app
