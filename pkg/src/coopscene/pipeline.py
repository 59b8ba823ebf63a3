"""Three-stage prompt chain around the query toolbox, plus one-shot baselines.

answer() runs classify -> extract -> toolbox -> enhance. The two LLM stages
must reply in a strict JSON shape; an unparseable reply gets exactly one
repair retry before the stage fails. Failures surface as StageError naming
the failed stage. Timings cover exactly the four stages.
"""
from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass

from .backends import BackendError
from .bus import LinguisticScene, _render_object
from .prompts import PromptSet
from .toolbox import QueryParams, QueryResult, QueryTask, RELATION_VALUES, ToolboxError, execute, render_values

STAGES = ("classification", "extraction", "toolbox", "enhancement")

REPAIR_INSTRUCTION = (
    "Your previous reply did not match the required format. "
    "Reply again with exactly the mandated JSON line and nothing else."
)


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"{stage} failed: {message}")


@dataclass(frozen=True)
class ChainResult:
    task: QueryTask
    params: QueryParams
    numeric: QueryResult
    semantic: str
    advice: str
    answer: str
    timings_ms: dict[str, float]
    scene_id: int
    ego_id: str

    def to_dict(self) -> dict:
        return {
            "task": int(self.task),
            "task_name": self.task.label,
            "params": self.params.to_dict(),
            "numeric": self.numeric.to_dict(),
            "semantic": self.semantic,
            "advice": self.advice,
            "answer": self.answer,
            "timings_ms": self.timings_ms,
            "scene_id": self.scene_id,
            "ego_id": self.ego_id,
        }


_JSON_SPAN = re.compile(r"\{.*?\}", re.DOTALL)


def _find_json(text: str) -> dict:
    try:
        obj = json.loads(text)
        if isinstance(obj, dict):
            return obj
    except ValueError:
        pass
    for span in _JSON_SPAN.findall(text):
        try:
            obj = json.loads(span)
            if isinstance(obj, dict):
                return obj
        except ValueError:
            continue
    raise ValueError(f"no JSON object in reply: {text[:120]!r}")


class ChainPipeline:
    def __init__(self, prompts: PromptSet, backend, rule_on: bool | None = None):
        self.prompts = prompts
        self.backend = backend
        self.rule_on = prompts.restrictive_rule_on if rule_on is None else rule_on

    def _ask(self, stage: str, prompt: str, parse):
        messages = [{"role": "user", "content": prompt}]
        try:
            reply = self.backend.complete(messages)
        except BackendError as e:
            raise StageError(stage, str(e)) from None
        try:
            return parse(reply)
        except ValueError as first_error:
            messages += [
                {"role": "assistant", "content": reply},
                {"role": "user", "content": REPAIR_INSTRUCTION},
            ]
            try:
                reply = self.backend.complete(messages)
                return parse(reply)
            except (BackendError, ValueError):
                raise StageError(stage, str(first_error)) from None

    def classify(self, question: str) -> QueryTask:
        if not question.strip():
            raise StageError("classification", "empty question")

        def parse(reply: str) -> QueryTask:
            obj = _find_json(reply)
            task = int(obj["task"])
            if not 1 <= task <= 10:
                raise ValueError(f"task id {task} outside 1-10")
            return QueryTask(task)

        return self._ask("classification", self.prompts.render_classify(question, self.rule_on), parse)

    def extract(self, question: str) -> QueryParams:
        if not question.strip():
            raise StageError("extraction", "empty question")

        def parse(reply: str) -> QueryParams:
            obj = _find_json(reply)
            relation = obj.get("relation") or "surrounding"
            if relation not in RELATION_VALUES:
                raise ValueError(f"unknown relation {relation!r}")
            if relation == "road" and not obj.get("road"):
                raise ValueError("road relation without a road name")
            return QueryParams(
                vtype=obj.get("vtype"),
                color=obj.get("color"),
                relation=relation,
                road=obj.get("road"),
            )

        return self._ask("extraction", self.prompts.render_extract(question), parse)

    def enhance(self, question: str, task: QueryTask, numeric: QueryResult, scene: LinguisticScene, ego_id: str) -> tuple[str, str]:
        matched = [scene.get(i) for i in numeric.matched_ids]
        matched_oi = "[" + ",".join(_render_object(o) for o in matched if o is not None) + "]"
        ego = scene.get(ego_id)
        ego_oi = _render_object(ego) if ego is not None else "{}"
        prompt = self.prompts.render_enhance(
            question, task.label, render_values(numeric.values), matched_oi, ego_oi
        )

        def parse(reply: str) -> tuple[str, str]:
            obj = _find_json(reply)
            return str(obj["answer"]), str(obj["advice"])

        return self._ask("enhancement", prompt, parse)

    def answer(self, question: str, scene: LinguisticScene, ego_id: str) -> ChainResult:
        timings: dict[str, float] = {}

        t0 = time.perf_counter()
        task = self.classify(question)
        timings["classification"] = (time.perf_counter() - t0) * 1000.0

        t0 = time.perf_counter()
        params = self.extract(question)
        timings["extraction"] = (time.perf_counter() - t0) * 1000.0

        t0 = time.perf_counter()
        try:
            numeric = execute(task, params, scene, ego_id)
        except ToolboxError as e:
            raise StageError("toolbox", str(e)) from None
        timings["toolbox"] = (time.perf_counter() - t0) * 1000.0

        t0 = time.perf_counter()
        semantic, advice = self.enhance(question, task, numeric, scene, ego_id)
        timings["enhancement"] = (time.perf_counter() - t0) * 1000.0

        return ChainResult(
            task=task,
            params=params,
            numeric=numeric,
            semantic=semantic,
            advice=advice,
            answer=f"{semantic} {advice}".strip(),
            timings_ms=timings,
            scene_id=scene.scene_id,
            ego_id=ego_id,
        )


def osp_answer(variant: int, question: str, scene: LinguisticScene, ego_id: str, backend, prompts: PromptSet) -> str:
    """One-shot baseline: the whole scene in a single prompt, raw reply back."""
    from .bus import render_scene

    road_info = json.dumps([{"id": r.id, "lanes": list(r.lanes)} for r in scene.roads])
    prompt = prompts.render_osp(variant, question, render_scene(scene), road_info, ego_id)
    try:
        return backend.complete([{"role": "user", "content": prompt}])
    except BackendError as e:
        raise StageError("osp", str(e)) from None
