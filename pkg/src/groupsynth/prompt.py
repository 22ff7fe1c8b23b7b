"""Four-section generation prompt: Role, Context, Examples, Instructions.

Rendering is byte-stable so goldens can be compared exactly. The examples
section is a JSON object mapping every feature and outcome name to the
column's values in row order (dict-of-lists), emitted one key per line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import BINARY, CATEGORICAL, Columns, Schema, n_rows
from .errors import ConfigError, EmptyExamples

GROUP_TAILORED = "group_tailored"
GENERIC = "generic"

ROLE_TEXT = (
    "You are a synthetic data generator. Your goal is to produce data which mirrors "
    "the given examples in causal structure and feature and label distributions but "
    "also produce as diverse samples as possible. I will give you real examples first."
)

INSTRUCTIONS_TEXT = (
    "DO NOT COPY THE EXAMPLES but generate realistic but new and diverse samples "
    "which have the correct labels conditioned on the features. "
    "Use the same JSON format as above."
)

DEFAULT_DATASET_CONTEXTS = {
    "admissions": "hospital admissions and readmission",
    "heart": "heart disease risk factors and outcomes",
}


@dataclass(frozen=True)
class PromptSpec:
    """A fully assembled prompt, ready to render."""

    role_text: str
    context_text: str
    examples_json: str
    instructions_text: str
    variant: str
    group_label: str | None
    n_generate: int

    def __post_init__(self):
        if self.variant not in (GROUP_TAILORED, GENERIC):
            raise ConfigError(f"unknown prompt variant {self.variant!r}")
        if self.variant == GROUP_TAILORED and not self.group_label:
            raise ConfigError("group-tailored prompt needs a group label")
        if self.n_generate < 1:
            raise ConfigError("n_generate must be >= 1")
        for section, text in (
            ("role", self.role_text),
            ("context", self.context_text),
            ("examples", self.examples_json),
            ("instructions", self.instructions_text),
        ):
            if not text:
                raise ConfigError(f"prompt section {section!r} is empty")


def format_value(value, kind: str) -> str:
    """One JSON token: integers bare, floats at up to 6 significant digits.

    Rounding can land exactly on an integer; those normalize to the integer
    form so serialize(parse(text)) reproduces text byte for byte.
    """
    if kind == CATEGORICAL:
        return json.dumps(str(value))
    if kind in (BINARY, "outcome"):
        return str(int(value))
    v = float(value)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    text = format(v, ".6g")
    rounded = float(text)
    if rounded.is_integer() and abs(rounded) < 1e15:
        return str(int(rounded))
    return text


def serialize_examples(rows: Columns, schema: Schema) -> str:
    """Dict-of-lists JSON for the examples section (features then outcomes)."""
    if n_rows(rows) == 0:
        raise EmptyExamples("at least one example row is required")
    lines = []
    for f in schema.features:
        tokens = [format_value(v, f.kind) for v in rows[f.name]]
        lines.append(f'  {json.dumps(f.name)}: [{", ".join(tokens)}]')
    for name in schema.outcomes:
        tokens = [format_value(v, "outcome") for v in rows[name]]
        lines.append(f'  {json.dumps(name)}: [{", ".join(tokens)}]')
    return "{\n" + ",\n".join(lines) + "\n}"


def build_prompt(
    schema: Schema,
    examples: Columns,
    dataset_context: str,
    variant: str,
    n_generate: int,
    group_label: str | None = None,
) -> PromptSpec:
    """Assemble the prompt; only the group-tailored variant names the group."""
    if variant == GROUP_TAILORED:
        context = (
            f"Leverage your medical knowledge about {dataset_context} to generate "
            f"{n_generate} realistic but diverse samples specifically for {group_label} patients."
        )
    else:
        context = (
            f"Leverage your medical knowledge about {dataset_context} to generate "
            f"{n_generate} realistic but diverse samples."
        )
        group_label = None
    return PromptSpec(
        role_text=ROLE_TEXT,
        context_text=context,
        examples_json=serialize_examples(examples, schema),
        instructions_text=INSTRUCTIONS_TEXT,
        variant=variant,
        group_label=group_label,
        n_generate=n_generate,
    )


def render(prompt: PromptSpec) -> str:
    """Concatenate the four sections, one blank line between each."""
    return "\n\n".join(
        (prompt.role_text, prompt.context_text, prompt.examples_json, prompt.instructions_text)
    )


def parse_examples_json(text: str) -> Columns:
    """Inverse of serialize_examples: JSON object back to column arrays."""
    obj = json.loads(text)
    if not isinstance(obj, dict):
        raise ValueError("examples JSON must be an object")
    columns: Columns = {}
    for key, values in obj.items():
        if not isinstance(values, list):
            raise ValueError(f"key {key!r} does not map to an array")
        if values and isinstance(values[0], str):
            columns[key] = np.array(values, dtype=object)
        else:
            columns[key] = np.asarray(values, dtype=float)
    lengths = {len(v) for v in columns.values()}
    if len(lengths) > 1:
        raise ValueError("example arrays have unequal lengths")
    return columns
