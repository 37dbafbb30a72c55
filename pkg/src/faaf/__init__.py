"""Fact verification with function-calling language models.

Facts derived from a reference answer become the arguments of one function
object; a model verifies them all in a single structured call.
"""

from importlib import resources
from pathlib import Path

from faaf.constructor import (
    ArgumentSpec,
    FactFunctionSpec,
    WireDialect,
    WireSchema,
    build_fact_function,
    serialize_spec,
)
from faaf.core import (
    FORMULATIONS,
    AnswerKind,
    FactStatement,
    FormulationConfig,
    PromptBaseline,
    QARecord,
    ResponseDomain,
    Verdict,
    VerdictMapping,
)
from faaf.parsing import InvocationResult, parse_prompt_response, parse_tool_response, validate_enum

__version__ = "0.1.0"


def desk_dataset_path() -> Path:
    """Path of the bundled offline dataset fixture."""
    return Path(str(resources.files("faaf") / "data" / "wikievalfacts_desk.jsonl"))


__all__ = [
    "AnswerKind",
    "ArgumentSpec",
    "FORMULATIONS",
    "FactFunctionSpec",
    "FactStatement",
    "FormulationConfig",
    "InvocationResult",
    "PromptBaseline",
    "QARecord",
    "ResponseDomain",
    "Verdict",
    "VerdictMapping",
    "WireDialect",
    "WireSchema",
    "build_fact_function",
    "desk_dataset_path",
    "parse_prompt_response",
    "parse_tool_response",
    "serialize_spec",
    "validate_enum",
]
