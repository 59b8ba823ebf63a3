"""Prompt templates for the three-stage chain and the one-shot baselines.

Templates are plain-text files with {{placeholder}} slots, loaded from the
packaged defaults or from a user-supplied directory. Each template has a
head (role and task assignment) and a body (rules plus an output-format
constraint). Rendering is pure string substitution, so prompt bytes are
identical no matter which backend consumes them.

The restrictive existence rule and the 100-meter question prefix are the
two ablation toggles: flipping them changes exactly one sentence of the
classification prompt and exactly the question prefix bytes respectively.
"""
from __future__ import annotations

import re
from importlib import resources
from pathlib import Path

# appended to the existence task description when the restrictive rule is on
EXISTENCE_RULE = (
    " Choose this only when the question is purely about presence/absence and "
    "not about lights, signals, distance, color, size, or type."
)

_FILES = {
    "classify": "task_classify.txt",
    "extract": "param_extract.txt",
    "enhance": "enhance.txt",
    "osp_base": "osp_base.txt",
    "osp_fields": "osp_field_explanations.txt",
    "osp_rules": "osp_rules.txt",
    "osp_examples": "osp_examples.txt",
}

_SLOT = re.compile(r"\{\{(\w+)\}\}")


class PromptError(ValueError):
    pass


def _render(template: str, slots: dict[str, str]) -> str:
    def sub(m):
        name = m.group(1)
        if name not in slots:
            raise PromptError(f"unfilled prompt slot {{{{{name}}}}}")
        return slots[name]

    return _SLOT.sub(sub, template)


class PromptSet:
    def __init__(self, prompt_dir: str | Path | None = None, restrictive_rule_on: bool = True):
        self.restrictive_rule_on = restrictive_rule_on
        self.texts: dict[str, str] = {}
        for key, filename in _FILES.items():
            if prompt_dir is not None:
                path = Path(prompt_dir) / filename
                text = path.read_text()
            else:
                text = resources.files("coopscene.prompt_files").joinpath(filename).read_text()
            if not text.strip():
                raise PromptError(f"prompt template {filename} is empty")
            self.texts[key] = text

    def render_classify(self, question: str, rule_on: bool | None = None) -> str:
        rule_on = self.restrictive_rule_on if rule_on is None else rule_on
        return _render(
            self.texts["classify"],
            {"question": question, "existence_rule": EXISTENCE_RULE if rule_on else ""},
        )

    def render_extract(self, question: str) -> str:
        return _render(self.texts["extract"], {"question": question})

    def render_enhance(self, question: str, task_name: str, numeric: str, matched_oi: str, ego_oi: str) -> str:
        return _render(
            self.texts["enhance"],
            {
                "question": question,
                "task_name": task_name,
                "numeric": numeric,
                "matched_oi": matched_oi,
                "ego_oi": ego_oi,
            },
        )

    def render_osp(self, variant: int, question: str, ls_json: str, road_info: str, ego_id: str) -> str:
        if variant not in (1, 2, 3, 4):
            raise PromptError(f"OSP variant must be 1-4, got {variant}")
        extras = {
            1: "",
            2: self.texts["osp_fields"],
            3: self.texts["osp_rules"],
            4: self.texts["osp_examples"],
        }[variant]
        return _render(
            self.texts["osp_base"],
            {
                "question": question,
                "ls_json": ls_json,
                "road_info": road_info,
                "ego_id": ego_id,
                "extras": extras,
            },
        )
