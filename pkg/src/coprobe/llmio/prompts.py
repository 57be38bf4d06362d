"""Feature-extraction prompts, the JSON value schema, and response parsing."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from ..features import FeatureSpec, ValueType
from ..instances import ProblemKind
from ..render import Rendering, Representation

PROMPT_TEMPLATE = """\
You are given an instance of a combinatorial optimization problem: {problem}.

This is not a coding task. Do not return any code.

Extract the numeric value of the following feature from the instance:
- Feature name: {feature_name}
- Feature description: {feature_description}
- Expected type: {feature_type}

The instance is provided here: \"\"\"
{instance}
\"\"\"

Instructions:
- Return a JSON object only, with a single field "value", i.e., '{{"value": ...}}'.
- The "value" field should contain the numeric value of the required feature and should be of the expected type (i.e., {feature_type}).
- If the value is unknown/undeterminable, return '{{"value": null}}'.
- No explanations, no extra fields.

Answer:"""

_PROMPT_TYPE = {ValueType.integer: "int", ValueType.real: "float"}
_SCHEMA_TYPE = {ValueType.integer: "integer", ValueType.real: "number"}

_SCHEMA_TEMPLATE = """\
{
  "type": "object",
  "additionalProperties": false,
  "required": ["value"],
  "properties": {
    "value": { "anyOf": [ { "type": "%s" }, { "type": "null" } ] }
  }
}"""


@dataclass(frozen=True)
class Prompt:
    text: str
    problem: ProblemKind
    feature: FeatureSpec
    representation: Representation
    instance_name: str = ""


def build_feature_prompt(kind, spec: FeatureSpec, rendering: Rendering) -> Prompt:
    kind = ProblemKind(kind)
    text = PROMPT_TEMPLATE.format(
        problem=kind.full_name,
        feature_name=spec.name,
        feature_description=spec.description,
        feature_type=_PROMPT_TYPE[spec.value_type],
        instance=rendering.text.rstrip("\n"),
    )
    return Prompt(text, kind, spec, rendering.representation, rendering.instance_name)


def build_value_schema(value_type) -> str:
    return _SCHEMA_TEMPLATE % _SCHEMA_TYPE[ValueType(value_type)]


class ResponseError(ValueError):
    """Base class of response-parsing failures; ``kind`` names the failure class."""

    kind = "parse"


class MalformedJSONError(ResponseError):
    kind = "malformed_json"


class ExtraFieldsError(ResponseError):
    kind = "extra_fields"


class TypeMismatchError(ResponseError):
    kind = "type_mismatch"


def parse_feature_response(raw: str, spec: FeatureSpec):
    """Return the int/float/None carried in ``{"value": ...}``."""
    try:
        obj = json.loads(raw)
    except (json.JSONDecodeError, TypeError) as exc:
        raise MalformedJSONError(f"not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise MalformedJSONError("response is not a JSON object")
    if set(obj) != {"value"}:
        raise ExtraFieldsError(f"expected exactly the key 'value', got {sorted(obj)}")
    value = obj["value"]
    if value is None:
        return None
    # bool is an int subclass in Python but not a JSON number
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeMismatchError(f"value {value!r} is not numeric")
    if not math.isfinite(value):
        raise TypeMismatchError(f"value {value!r} is not finite")
    if spec.value_type is ValueType.integer:
        if isinstance(value, float):
            if not value.is_integer():
                raise TypeMismatchError(f"fractional value {value!r} for an integer feature")
            value = int(value)
        return value
    return float(value)
