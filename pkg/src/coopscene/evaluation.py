"""Grading, accuracy metrics, bias indicators, latency stats, reports.

Numeric grading compares canonical result vectors component-wise: lengths
must match and every component must agree exactly (1e-6 tolerance for
floats). Vectors are compared in the canonical distance-ascending order
both sides already produce.

Task classification accuracy counts every attempted question; a question
whose classification stage failed outright lands in the "none" column and
scores zero. One-shot baselines emit no task id, so their classification
accuracy is reported as not applicable.

The per-task bias indicator marks, per model, the tasks attaining that
model's best (+1) and worst (-1) per-task query accuracy, ties sharing the
mark; summing over models gives the cross-model bias column. The underlying
pairwise comparison (+1/-1/0 by strict accuracy comparison) is exposed
separately and is antisymmetric by construction.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

from .bus import LinguisticScene
from .pipeline import ChainPipeline, StageError, osp_answer
from .prompts import PromptSet
from .qagen import QAPair, QUESTION_PREFIX
from .toolbox import QueryResult, QueryTask, TASK_LABELS, values_close

FLOAT_TOL = 1e-6
UNREACHABLE_PROBE = 5


class EvalError(RuntimeError):
    pass


class BackendUnreachable(RuntimeError):
    """Raised when the backend fails every early request; carries partial records."""

    def __init__(self, message: str, records: list):
        self.records = records
        super().__init__(message)


def canonical_values(task: int, values):
    """Normalize an answer into the toolbox's result shape for comparison."""
    if task == QueryTask.COUNT:
        return int(values)
    if task == QueryTask.EXISTENCE:
        return int(bool(values))
    if not isinstance(values, list):
        return [values]
    if task == QueryTask.SIZE and values and not isinstance(values[0], list):
        return [values]  # a single bare (le, wi, he) triple
    return values


def truth_result(pair: QAPair) -> QueryResult:
    return QueryResult(
        task=QueryTask(pair.meta.task),
        values=canonical_values(pair.meta.task, pair.answer),
        matched_ids=list(pair.meta.matched_ids),
    )


def grade_numeric(pred: QueryResult, truth: QueryResult) -> bool:
    return values_close(
        canonical_values(int(pred.task), pred.values),
        canonical_values(int(truth.task), truth.values),
        tol=FLOAT_TOL,
    )


@dataclass
class GradeRecord:
    question: str
    truth_task: int
    predicted_task: int | None
    task_correct: bool | None
    numeric_correct: bool
    predicted_values: object = None
    timings_ms: dict[str, float] = field(default_factory=dict)
    error_stage: str | None = None

    def to_dict(self) -> dict:
        return {
            "question": self.question,
            "truth_task": self.truth_task,
            "predicted_task": self.predicted_task,
            "task_correct": self.task_correct,
            "numeric_correct": self.numeric_correct,
            "predicted_values": self.predicted_values,
            "timings_ms": self.timings_ms,
            "error_stage": self.error_stage,
        }


def _percentile(values: list[float], q: float) -> float:
    if not values:
        return 0.0
    ordered = sorted(values)
    rank = max(1, math.ceil(q * len(ordered)))
    return ordered[rank - 1]


def latency_stats(samples: list[float]) -> dict:
    if not samples:
        return {"mean": 0.0, "p50": 0.0, "p95": 0.0, "n": 0}
    return {
        "mean": sum(samples) / len(samples),
        "p50": _percentile(samples, 0.50),
        "p95": _percentile(samples, 0.95),
        "n": len(samples),
    }


@dataclass
class MetricsReport:
    model: str
    pipeline: str
    prefix_on: bool
    rule_on: bool
    n: int
    a_c: float | None  # percent; None when the pipeline emits no task id
    per_task: dict[str, dict]  # label -> {n, correct, a_q, a_c}
    a_q_avg: float  # unweighted mean over tasks with questions
    bias: dict[str, int]
    latency_ms: dict[str, dict]  # stage -> {mean, p50, p95, n}
    existence_confusion: dict[str, float]  # classification of existence questions, percent

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "pipeline": self.pipeline,
            "toggles": {"prefix": self.prefix_on, "rule": self.rule_on},
            "n": self.n,
            "a_c": self.a_c,
            "per_task": self.per_task,
            "a_q_avg": self.a_q_avg,
            "bias": self.bias,
            "latency_ms": self.latency_ms,
            "existence_confusion": self.existence_confusion,
        }

    def render_table(self) -> str:
        lines = [f"{'Query task / method':<24}{'A_C':>8}{'A_Q':>8}"]
        for t in range(1, 11):
            label = TASK_LABELS[t]
            stats = self.per_task[label]
            ac = f"{stats['a_c']:.2f}" if stats.get("a_c") is not None else "n/a"
            aq = f"{stats['a_q']:.2f}" if stats["n"] else "n/a"
            lines.append(f"({t}) {label:<20}{ac:>8}{aq:>8}")
        ac_avg = f"{self.a_c:.2f}" if self.a_c is not None else "n/a"
        lines.append(f"{'Average':<24}{ac_avg:>8}{self.a_q_avg:>8.2f}")
        return "\n".join(lines)


def bias_indicator(per_task_aq: dict[str, float]) -> dict[str, int]:
    """+1 for tasks attaining the best per-task accuracy, -1 for the worst."""
    values = list(per_task_aq.values())
    if not values or max(values) == min(values):
        return {label: 0 for label in per_task_aq}
    hi, lo = max(values), min(values)
    return {
        label: 1 if aq == hi else (-1 if aq == lo else 0)
        for label, aq in per_task_aq.items()
    }


def bias_scores(per_model_aq: dict[str, dict[str, float]]) -> dict[str, int]:
    """Cross-model bias column: sum of per-model indicators."""
    totals: dict[str, int] = {}
    for aq in per_model_aq.values():
        for label, b in bias_indicator(aq).items():
            totals[label] = totals.get(label, 0) + b
    return totals


def pairwise_bias(per_task_aq: dict[str, float]) -> dict[tuple[str, str], int]:
    """Ordered pairwise accuracy comparison; +1 when the first task is strictly better."""
    out = {}
    for a, x in per_task_aq.items():
        for b, y in per_task_aq.items():
            if a == b:
                continue
            out[(a, b)] = 1 if x > y else (-1 if x < y else 0)
    return out


def compute_metrics(
    records: list[GradeRecord],
    model: str = "unknown",
    pipeline: str = "cop",
    prefix_on: bool = True,
    rule_on: bool = True,
) -> MetricsReport:
    if not records:
        raise EvalError("no grade records")
    has_task_ids = pipeline == "cop"
    a_c = None
    if has_task_ids:
        a_c = 100.0 * sum(1 for r in records if r.task_correct) / len(records)
    per_task = {}
    for t in range(1, 11):
        label = TASK_LABELS[t]
        rows = [r for r in records if r.truth_task == t]
        correct = sum(1 for r in rows if r.numeric_correct)
        task_hits = sum(1 for r in rows if r.task_correct)
        per_task[label] = {
            "n": len(rows),
            "correct": correct,
            "a_q": 100.0 * correct / len(rows) if rows else 0.0,
            "a_c": (100.0 * task_hits / len(rows)) if rows and has_task_ids else None,
        }
    populated = {label: s["a_q"] for label, s in per_task.items() if s["n"]}
    a_q_avg = sum(populated.values()) / len(populated) if populated else 0.0
    stage_samples: dict[str, list[float]] = {}
    totals = []
    for r in records:
        if r.timings_ms:
            totals.append(sum(r.timings_ms.values()))
        for stage, ms in r.timings_ms.items():
            stage_samples.setdefault(stage, []).append(ms)
    latency = {stage: latency_stats(samples) for stage, samples in stage_samples.items()}
    latency["total"] = latency_stats(totals)
    existence_rows = [r for r in records if r.truth_task == QueryTask.EXISTENCE]
    confusion = {label: 0.0 for label in list(TASK_LABELS.values()) + ["none"]}
    if existence_rows and has_task_ids:
        for r in existence_rows:
            key = TASK_LABELS[r.predicted_task] if r.predicted_task else "none"
            confusion[key] += 1
        confusion = {k: 100.0 * v / len(existence_rows) for k, v in confusion.items()}
    return MetricsReport(
        model=model,
        pipeline=pipeline,
        prefix_on=prefix_on,
        rule_on=rule_on,
        n=len(records),
        a_c=a_c,
        per_task=per_task,
        a_q_avg=a_q_avg,
        bias=bias_indicator(populated) if populated else {},
        latency_ms=latency,
        existence_confusion=confusion,
    )


# --- one-shot answer normalization -------------------------------------

_UNIT_TOKENS = ("m/s2", "m/s^2", "m/s", "km/h", "meters", "meter", "degrees", "degree", "m")


def parse_final(text: str):
    """Extract the FINAL: value from a one-shot reply; None when absent."""
    final = None
    for line in text.splitlines():
        if line.strip().upper().startswith("FINAL:"):
            final = line.strip()[len("FINAL:"):].strip()
    if final is None:
        return None
    try:
        return json.loads(final)
    except ValueError:
        pass
    lowered = final.lower().strip(" .")
    for token in _UNIT_TOKENS:
        lowered = lowered.replace(token, "")
    lowered = lowered.strip()
    if lowered in ("yes", "true"):
        return True
    if lowered in ("no", "false"):
        return False
    try:
        return float(lowered)
    except ValueError:
        pass
    if "," in lowered:
        return [p.strip() for p in lowered.split(",") if p.strip()]
    return lowered


def grade_osp(raw: str, pair: QAPair) -> bool:
    parsed = parse_final(raw)
    if parsed is None:
        return False
    truth = canonical_values(pair.meta.task, pair.answer)
    if pair.meta.task in (QueryTask.COUNT, QueryTask.EXISTENCE):
        if isinstance(parsed, list):
            return False
        if pair.meta.task == QueryTask.EXISTENCE:
            return int(bool(parsed)) == truth
        try:
            return int(parsed) == truth and float(parsed) == int(parsed)
        except (TypeError, ValueError):
            return False
    if not isinstance(parsed, list):
        parsed = [parsed]
    return values_close(parsed, truth, tol=FLOAT_TOL)


# --- evaluation runs -----------------------------------------------------

def run_eval(
    dataset: list[QAPair],
    scenes_by_id: dict[int, LinguisticScene],
    backend,
    prompts: PromptSet | None = None,
    pipeline: str = "cop",
    osp_variant: int = 1,
    strip_prefix: bool = False,
    rule_on: bool = True,
) -> tuple[MetricsReport, list[GradeRecord]]:
    """Answer every QA pair and grade it; deterministic with mock backends."""
    prompts = prompts or PromptSet()
    chain = ChainPipeline(prompts, backend, rule_on=rule_on)
    records: list[GradeRecord] = []
    for pair in dataset:
        scene = scenes_by_id.get(pair.meta.scene_id)
        if scene is None:
            raise EvalError(f"dataset references unknown scene {pair.meta.scene_id}")
        question = pair.question
        if strip_prefix and question.startswith(QUESTION_PREFIX):
            question = question[len(QUESTION_PREFIX):]
        if pipeline == "cop":
            records.append(_grade_cop(chain, question, pair, scene))
        elif pipeline == "osp":
            records.append(_grade_osp_run(backend, prompts, osp_variant, question, pair, scene))
        else:
            raise EvalError(f"unknown pipeline {pipeline}")
        # an unreachable backend fails every request; stop early instead of
        # grinding through the whole dataset (partial records stay available)
        if len(records) == UNREACHABLE_PROBE and all(r.error_stage for r in records):
            raise BackendUnreachable(
                f"backend failed the first {UNREACHABLE_PROBE} requests "
                f"(last stage: {records[-1].error_stage}); aborting",
                records=records,
            )
    report = compute_metrics(
        records,
        model=backend.describe() if hasattr(backend, "describe") else "unknown",
        pipeline=pipeline,
        prefix_on=not strip_prefix,
        rule_on=rule_on,
    )
    return report, records


def _grade_cop(chain: ChainPipeline, question: str, pair: QAPair, scene: LinguisticScene) -> GradeRecord:
    try:
        result = chain.answer(question, scene, pair.meta.ego_id)
    except StageError as e:
        return GradeRecord(
            question=pair.question,
            truth_task=pair.meta.task,
            predicted_task=None,
            task_correct=False,
            numeric_correct=False,
            error_stage=e.stage,
        )
    return GradeRecord(
        question=pair.question,
        truth_task=pair.meta.task,
        predicted_task=int(result.task),
        task_correct=int(result.task) == pair.meta.task,
        numeric_correct=grade_numeric(result.numeric, truth_result(pair)),
        predicted_values=result.numeric.values,
        timings_ms=result.timings_ms,
    )


def _grade_osp_run(backend, prompts: PromptSet, variant: int, question: str, pair: QAPair, scene: LinguisticScene) -> GradeRecord:
    t0 = time.perf_counter()
    try:
        raw = osp_answer(variant, question, scene, pair.meta.ego_id, backend, prompts)
    except StageError as e:
        return GradeRecord(
            question=pair.question,
            truth_task=pair.meta.task,
            predicted_task=None,
            task_correct=None,
            numeric_correct=False,
            error_stage=e.stage,
        )
    elapsed = (time.perf_counter() - t0) * 1000.0
    return GradeRecord(
        question=pair.question,
        truth_task=pair.meta.task,
        predicted_task=None,
        task_correct=None,
        numeric_correct=grade_osp(raw, pair),
        predicted_values=parse_final(raw),
        timings_ms={"osp": elapsed},
    )


def write_records(records: list[GradeRecord], path: str | Path) -> None:
    with open(path, "w") as f:
        for r in records:
            f.write(json.dumps(r.to_dict(), separators=(",", ":")) + "\n")
