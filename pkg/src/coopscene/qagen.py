"""Question templates and QA-pair generation over attributed ego graphs.

Templates are JSONL records with <type>/<color>/<relation>/<road> slots.
Ego-centric (one-hop) templates identify entities through a relation to the
ego; ego-agnostic (zero-hop) templates scope by road name only. Slots are
filled from an actual entity so the referent set is non-empty, except for
existence questions which are generated half-negative by construction where
the scene allows it.

Ground-truth answers are derived from the attributed graph / scene records
here, independently of the query toolbox; the toolbox must reproduce every
stored answer from the stored parameters (the round-trip oracle).
"""
from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .bus import LinguisticScene
from .relations import AttributedGraph, GraphEdge, build_attributed_graph, build_graph, distance
from .toolbox import QueryParams, QueryTask, TASK_LABELS
from .traffic import COLORS, VTYPES

QUESTION_PREFIX = "Within an 100-meter radius, "

SLOT_PATTERN = re.compile(r"<(type|color|relation|road)>")

RELATION_PHRASES = {
    "front": "in front of me",
    "rear": "behind me",
    "left": "on my left",
    "right": "on my right",
    "leftlane": "on my left lane",
    "rightlane": "on my right lane",
    "samelane": "in my lane",
    "surrounding": "around me",
}

TASK_ATTRIBUTE = {1: "v", 2: "a", 3: "h", 4: "co", 5: "ty", 6: "size", 7: "sg"}


class TemplateError(ValueError):
    pass


class InstantiationError(RuntimeError):
    pass


class GenerationShortfall(RuntimeError):
    def __init__(self, missing: int, per_task: dict[str, int]):
        self.missing = missing
        self.per_task = per_task
        super().__init__(f"could not instantiate {missing} pairs; per-task counts so far: {per_task}")


@dataclass(frozen=True)
class QuestionTemplate:
    id: str
    task: int
    hop: str  # "ego_centric" | "ego_agnostic"
    text: str
    required_slots: frozenset[str]

    def __post_init__(self):
        if not 1 <= self.task <= 10:
            raise TemplateError(f"template {self.id}: task {self.task} outside 1-10")
        if self.hop not in ("ego_centric", "ego_agnostic"):
            raise TemplateError(f"template {self.id}: unknown hop {self.hop}")
        found = frozenset(SLOT_PATTERN.findall(self.text))
        if found != self.required_slots:
            raise TemplateError(
                f"template {self.id}: slot mismatch (text has {sorted(found)}, "
                f"required_slots is {sorted(self.required_slots)})"
            )

    def fill(self, slots: dict[str, str]) -> str:
        return SLOT_PATTERN.sub(lambda m: slots[m.group(1)], self.text)


@dataclass
class TemplateSet:
    templates: list[QuestionTemplate]

    def __post_init__(self):
        seen = set()
        for t in self.templates:
            if t.id in seen:
                raise TemplateError(f"duplicate template id {t.id}")
            seen.add(t.id)
        for task in range(1, 11):
            for hop in ("ego_centric", "ego_agnostic"):
                if not any(t.task == task and t.hop == hop for t in self.templates):
                    raise TemplateError(f"task {task} uncovered ({hop})")

    def __len__(self) -> int:
        return len(self.templates)


def load_templates(path: str | Path) -> TemplateSet:
    templates = []
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise TemplateError(f"{path}:{lineno}: invalid JSON: {e.msg}") from None
            templates.append(
                QuestionTemplate(
                    id=obj["id"],
                    task=obj["task"],
                    hop=obj["hop"],
                    text=obj["text"],
                    required_slots=frozenset(obj["required_slots"]),
                )
            )
    return TemplateSet(templates)


def default_templates() -> TemplateSet:
    with resources.as_file(resources.files("coopscene.data").joinpath("question_templates.jsonl")) as p:
        return load_templates(p)


@dataclass(frozen=True)
class QAMeta:
    scene_id: int
    ego_id: str
    task: int
    params: QueryParams
    matched_ids: tuple[str, ...]
    template_id: str
    hop: str


@dataclass(frozen=True)
class QAPair:
    question: str
    answer: object
    meta: QAMeta

    def to_dict(self) -> dict:
        return {
            "question": self.question,
            "answer": self.answer,
            "meta": {
                "scene_id": self.meta.scene_id,
                "ego_id": self.meta.ego_id,
                "task": self.meta.task,
                "params": self.meta.params.to_dict(),
                "matched_ids": list(self.meta.matched_ids),
                "template_id": self.meta.template_id,
                "hop": self.meta.hop,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QAPair":
        m = d["meta"]
        answer = d["answer"]
        if isinstance(answer, list):
            answer = _listify(answer)
        return cls(
            question=d["question"],
            answer=answer,
            meta=QAMeta(
                scene_id=m["scene_id"],
                ego_id=m["ego_id"],
                task=m["task"],
                params=QueryParams.from_dict(m["params"]),
                matched_ids=tuple(m["matched_ids"]),
                template_id=m["template_id"],
                hop=m["hop"],
            ),
        )


def _listify(v):
    return [_listify(x) for x in v] if isinstance(v, list) else v


def _edge_matches(edge: GraphEdge, params: QueryParams) -> bool:
    if params.vtype is not None and edge.obj.ty != params.vtype:
        return False
    if params.color is not None and edge.obj.co != params.color:
        return False
    if params.relation == "surrounding":
        return True
    if params.relation in ("front", "rear", "left", "right"):
        return edge.spatial == params.relation
    return edge.lane == params.relation


def _graph_matches(aer: AttributedGraph, params: QueryParams) -> list[GraphEdge]:
    return [e for e in aer.base.edges if _edge_matches(e, params)]


def _road_matches(scene: LinguisticScene, ego_id: str, params: QueryParams) -> list:
    ego = scene.get(ego_id)
    out = [
        o
        for o in scene.objects
        if o.id != ego_id
        and o.rd == params.road
        and (params.vtype is None or o.ty == params.vtype)
        and (params.color is None or o.co == params.color)
    ]
    out.sort(key=lambda o: (distance(ego, o), o.id))
    return out


def _answer_for(task: int, aer: AttributedGraph, matches: list, hop: str):
    """Ground truth from the graph/scene records; scalars stay bare for single matches."""
    if task == QueryTask.COUNT:
        return len(matches)
    if task == QueryTask.EXISTENCE:
        return bool(matches)
    if hop == "ego_centric":
        objs = [e.obj for e in matches]
        dists = [e.dist for e in matches]
    else:
        ego = aer.base.ego
        objs = matches
        dists = [distance(ego, o) for o in matches]
    if task == QueryTask.DISTANCE:
        values = dists
    else:
        attr = TASK_ATTRIBUTE[task]
        values = [aer.attributes[o.id][attr] if o.id in aer.attributes
                  else _raw_attr(o, attr) for o in objs]
    return values[0] if len(values) == 1 else values


def _raw_attr(obj, attr: str):
    if attr == "size":
        return [obj.le, obj.wi, obj.he]
    return getattr(obj, attr)


def instantiate(template: QuestionTemplate, aer: AttributedGraph, seed: int, prefix_on: bool = True) -> QAPair:
    """Fill one template against one attributed graph.

    Raises InstantiationError when the graph offers no satisfying entity;
    callers retry with another template or scene.
    """
    rng = random.Random(seed)
    if template.hop == "ego_centric":
        params, matches = _instantiate_ego_centric(template, aer, rng)
    else:
        params, matches = _instantiate_ego_agnostic(template, aer, rng)
    slots = {
        "type": params.vtype or "",
        "color": params.color or "",
        "relation": RELATION_PHRASES.get(params.relation, ""),
        "road": params.road or "",
    }
    question = template.fill(slots)
    if prefix_on:
        question = QUESTION_PREFIX + question
    answer = _answer_for(template.task, aer, matches, template.hop)
    matched_ids = tuple(
        (e.obj.id if template.hop == "ego_centric" else e.id) for e in matches
    )
    return QAPair(
        question=question,
        answer=answer,
        meta=QAMeta(
            scene_id=aer.base.scene.scene_id,
            ego_id=aer.base.ego.id,
            task=template.task,
            params=params,
            matched_ids=matched_ids,
            template_id=template.id,
            hop=template.hop,
        ),
    )


def _instantiate_ego_centric(template: QuestionTemplate, aer: AttributedGraph, rng: random.Random):
    edges = aer.base.edges
    if not edges:
        raise InstantiationError("graph has no entities within the query radius")
    if template.task == QueryTask.EXISTENCE and rng.random() < 0.5:
        negative = _negative_ego_centric(template, aer, rng)
        if negative is not None:
            return negative, []
    entity = rng.choice(edges)
    relation = "surrounding"
    if "relation" in template.required_slots:
        choices = [entity.spatial, "surrounding"] + ([entity.lane] if entity.lane else [])
        relation = rng.choice(choices)
    params = QueryParams(
        vtype=entity.obj.ty if "type" in template.required_slots else None,
        color=entity.obj.co if "color" in template.required_slots else None,
        relation=relation,
    )
    return params, _graph_matches(aer, params)


def _negative_ego_centric(template: QuestionTemplate, aer: AttributedGraph, rng: random.Random):
    relations = list(RELATION_PHRASES)
    for _ in range(20):
        params = QueryParams(
            vtype=rng.choice(VTYPES) if "type" in template.required_slots else None,
            color=rng.choice(COLORS) if "color" in template.required_slots else None,
            relation=rng.choice(relations) if "relation" in template.required_slots else "surrounding",
        )
        if not _graph_matches(aer, params):
            return params
    return None


def _instantiate_ego_agnostic(template: QuestionTemplate, aer: AttributedGraph, rng: random.Random):
    scene = aer.base.scene
    ego_id = aer.base.ego.id
    roads = sorted({o.rd for o in scene.objects if o.id != ego_id})
    if not roads:
        raise InstantiationError("scene has no non-ego objects")
    if template.task == QueryTask.EXISTENCE and rng.random() < 0.5:
        negative = _negative_ego_agnostic(template, scene, ego_id, rng)
        if negative is not None:
            return negative, []
    road = rng.choice(roads)
    on_road = [o for o in scene.objects if o.id != ego_id and o.rd == road]
    anchor = rng.choice(on_road)
    params = QueryParams(
        vtype=anchor.ty if "type" in template.required_slots else None,
        color=anchor.co if "color" in template.required_slots else None,
        relation="road",
        road=road,
    )
    return params, _road_matches(scene, ego_id, params)


def _negative_ego_agnostic(template: QuestionTemplate, scene: LinguisticScene, ego_id: str, rng: random.Random):
    all_roads = sorted(r.id for r in scene.roads)
    for _ in range(20):
        params = QueryParams(
            vtype=rng.choice(VTYPES) if "type" in template.required_slots else None,
            color=rng.choice(COLORS) if "color" in template.required_slots else None,
            relation="road",
            road=rng.choice(all_roads),
        )
        if not _road_matches(scene, ego_id, params):
            return params
    return None


@dataclass
class GenerationReport:
    per_task: dict[str, int] = field(default_factory=lambda: {TASK_LABELS[t]: 0 for t in range(1, 11)})
    total: int = 0

    def add(self, pair: QAPair):
        self.per_task[TASK_LABELS[pair.meta.task]] += 1
        self.total += 1

    def render_text(self) -> str:
        lines = [f"{'Question type':<28}Number"]
        for t in range(1, 11):
            label = TASK_LABELS[t]
            lines.append(f"({t}) {label:<24}{self.per_task[label]}")
        lines.append(f"{'total':<28}{self.total}")
        return "\n".join(lines)


RETRY_BUDGET = 50


def generate_dataset(
    scenes: list[LinguisticScene],
    templates: TemplateSet,
    n: int,
    seed: int,
    prefix_on: bool = True,
) -> tuple[list[QAPair], GenerationReport]:
    """Sample n QA pairs uniformly over scenes and templates, deterministically."""
    if n < 1:
        raise ValueError("n must be >= 1")
    usable = [s for s in scenes if s.av_ids()]
    if not usable:
        raise ValueError("no scene contains an AV")
    rng = random.Random(seed)
    graphs: dict[tuple[int, str], AttributedGraph] = {}
    pairs: list[QAPair] = []
    report = GenerationReport()
    for _ in range(n):
        pair = None
        for _attempt in range(RETRY_BUDGET):
            scene = usable[rng.randrange(len(usable))]
            ego_id = rng.choice(scene.av_ids())
            key = (scene.scene_id, ego_id)
            if key not in graphs:
                graphs[key] = build_attributed_graph(build_graph(scene, ego_id))
            template = templates.templates[rng.randrange(len(templates.templates))]
            try:
                pair = instantiate(template, graphs[key], seed=rng.getrandbits(32), prefix_on=prefix_on)
                break
            except InstantiationError:
                continue
        if pair is None:
            raise GenerationShortfall(missing=n - len(pairs), per_task=report.per_task)
        pairs.append(pair)
        report.add(pair)
    return pairs, report


def write_dataset(pairs: list[QAPair], path: str | Path) -> None:
    with open(path, "w") as f:
        for pair in pairs:
            f.write(json.dumps(pair.to_dict(), separators=(",", ":")) + "\n")


def load_dataset(path: str | Path) -> list[QAPair]:
    pairs = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                pairs.append(QAPair.from_dict(json.loads(line)))
    return pairs
