# Copyright 2026 The recollab Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Referring-expression grounding with routed specialist and MLLM backends."""

import json

from . import _recollab
from ._recollab import (
    BBox,
    ChoicePrompt,
    DataError,
    Detection,
    auroc,
    build_base_prompt,
    build_choice_prompt,
    build_focus_prompt,
    derive_confidence,
    find_target_span,
    generate_candidates,
    heuristic_target,
    iou,
    nms,
    pair_negatives,
    parse_box_answer,
    parse_choice,
    route,
    run_cli,
    target_focus_select,
)

__all__ = [
    "BBox",
    "ChoicePrompt",
    "DataError",
    "Detection",
    "auroc",
    "build_base_prompt",
    "build_choice_prompt",
    "build_focus_prompt",
    "derive_confidence",
    "evaluate",
    "find_target_span",
    "generate_candidates",
    "heuristic_target",
    "iou",
    "load_taskset",
    "nms",
    "pair_negatives",
    "parse_box_answer",
    "parse_choice",
    "route",
    "run_cli",
    "target_focus_select",
    "validate_counts",
]


def load_taskset(path, split="test"):
    """Validated task records as dicts, in file order."""
    text = _recollab.load_taskset(path, split)
    return [json.loads(line) for line in text.splitlines() if line]


def validate_counts(path, split="test", reference=False):
    return json.loads(_recollab.validate_counts(path, split, reference))


def evaluate(tasks_path, log_path, split="test", ks=(1,)):
    """Report for a prediction log, as the CLI would write it."""
    return json.loads(_recollab.report_json(tasks_path, split, log_path, list(ks)))
