"""Turn raw model output into per-fact verdicts.

Tool responses are validated strictly: every verdict argument must equal one of
its enum strings exactly.  A bad value only costs that fact (it is recorded as
``NotAnswered``); a body that cannot be read at all costs every fact.  There is
exactly one parse attempt and no repair.
"""

from __future__ import annotations

import html
import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Sequence

from faaf.constructor import ArgumentKind, FactFunctionSpec, WireDialect
from faaf.core import FaafError, Verdict

logger = logging.getLogger(__name__)


class FailureReason(str, Enum):
    MISSING = "Missing"
    NULL_VERDICT = "NullVerdict"
    ENUM_MISMATCH = "EnumMismatch"
    WRONG_TYPE = "WrongType"
    UNPARSEABLE = "Unparseable"
    NO_VERDICT_TOKEN = "NoVerdictToken"
    CALL_FAILED = "CallFailed"

    def __str__(self) -> str:
        return self.value


class EnumMismatch(FaafError, ValueError):
    def __init__(self, value: object, domain: Sequence[str]):
        super().__init__(f"{value!r} is not one of {list(domain)}")
        self.value = value
        self.domain = tuple(domain)


@dataclass(frozen=True)
class UsageRecord:
    prompt_tokens: int = 0
    completion_tokens: int = 0
    latency_ms: int = 0
    call_count: int = 1

    def __post_init__(self) -> None:
        for name in ("prompt_tokens", "completion_tokens", "latency_ms", "call_count"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def __add__(self, other: "UsageRecord") -> "UsageRecord":
        return UsageRecord(
            self.prompt_tokens + other.prompt_tokens,
            self.completion_tokens + other.completion_tokens,
            self.latency_ms + other.latency_ms,
            self.call_count + other.call_count,
        )

    @classmethod
    def zero(cls) -> "UsageRecord":
        return cls(0, 0, 0, 0)

    @classmethod
    def total(cls, records: "Sequence[UsageRecord]") -> "UsageRecord":
        out = cls.zero()
        for record in records:
            out = out + record
        return out

    def to_dict(self) -> dict[str, int]:
        return {
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "latency_ms": self.latency_ms,
            "call_count": self.call_count,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, int]) -> "UsageRecord":
        return cls(
            int(data.get("prompt_tokens", 0)),
            int(data.get("completion_tokens", 0)),
            int(data.get("latency_ms", 0)),
            int(data.get("call_count", 1)),
        )


@dataclass(frozen=True)
class RawModelOutput:
    dialect: WireDialect
    body: str
    usage: UsageRecord = field(default_factory=UsageRecord)
    cached: bool = False


@dataclass(frozen=True)
class InvocationResult:
    """Parsed verdicts for one function invocation.

    ``verdicts`` holds an entry for every fact index of the originating spec;
    failed facts carry ``Verdict.NOT_ANSWERED`` and appear in ``failures``.
    """

    verdicts: dict[int, Verdict]
    citations: dict[int, str] = field(default_factory=dict)
    failures: tuple[tuple[int, FailureReason], ...] = ()

    @property
    def answered(self) -> dict[int, Verdict]:
        return {i: v for i, v in self.verdicts.items() if v is not Verdict.NOT_ANSWERED}

    @property
    def not_answered(self) -> list[int]:
        return sorted(i for i, v in self.verdicts.items() if v is Verdict.NOT_ANSWERED)

    def failure_reason(self, index: int) -> FailureReason | None:
        for i, reason in self.failures:
            if i == index:
                return reason
        return None

    @classmethod
    def all_failed(cls, indices: Sequence[int], reason: FailureReason) -> "InvocationResult":
        return cls(
            verdicts={i: Verdict.NOT_ANSWERED for i in indices},
            failures=tuple((i, reason) for i in indices),
        )

    def to_dict(self) -> dict:
        return {
            "verdicts": {str(i): v.value for i, v in sorted(self.verdicts.items())},
            "citations": {str(i): c for i, c in sorted(self.citations.items())},
            "failures": [[i, r.value] for i, r in self.failures],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "InvocationResult":
        return cls(
            verdicts={int(i): Verdict(v) for i, v in data["verdicts"].items()},
            citations={int(i): c for i, c in data.get("citations", {}).items()},
            failures=tuple((int(i), FailureReason(r)) for i, r in data.get("failures", [])),
        )


class WholeResponseUnparseable(FaafError, ValueError):
    """The body could not be read under its dialect; every fact is unanswered.

    ``result`` holds the all-``NotAnswered`` invocation for callers that want
    to record the failure and move on.
    """

    def __init__(self, message: str, result: InvocationResult):
        super().__init__(message)
        self.result = result


def validate_enum(value: Any, domain: Sequence[str]) -> str:
    if not domain:
        raise ValueError("enum domain must be non-empty")
    if isinstance(value, str) and value in domain:
        return value
    raise EnumMismatch(value, domain)


_INVOKE_RE = re.compile(r"<invoke>(.*?)</invoke>", re.DOTALL)
_PARAMETERS_RE = re.compile(r"<parameters>(.*?)</parameters>", re.DOTALL)
_TOOL_NAME_RE = re.compile(r"<tool_name>(.*?)</tool_name>", re.DOTALL)
_PARAM_RE = re.compile(r"<([A-Za-z_][A-Za-z0-9_.-]*)>(.*?)</\1>", re.DOTALL)


def _read_json_body(body: str) -> dict[str, Any]:
    try:
        data = json.loads(body)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ValueError(f"expected a JSON object, got {type(data).__name__}")
    return data


def _read_xml_body(body: str) -> tuple[str | None, dict[str, Any]]:
    # The invoke block may be surrounded by prose or a <function_calls> wrapper.
    invoke = _INVOKE_RE.search(body)
    if invoke is None:
        raise ValueError("no <invoke> block found")
    inner = invoke.group(1)
    params = _PARAMETERS_RE.search(inner)
    if params is None:
        raise ValueError("<invoke> block has no <parameters>")
    name = _TOOL_NAME_RE.search(inner)
    values: dict[str, Any] = {}
    for match in _PARAM_RE.finditer(params.group(1)):
        key = match.group(1)
        if key in values:
            raise ValueError(f"parameter <{key}> given twice")
        # Tags carry layout whitespace, so values are trimmed; an empty tag is a null.
        text = html.unescape(match.group(2)).strip()
        values[key] = text if text else None
    return (name.group(1).strip() if name else None), values


def read_arguments(raw: RawModelOutput) -> dict[str, Any]:
    """Extract the name -> value argument mapping from a tool response body."""
    if raw.dialect is WireDialect.JSON_TOOL:
        return _read_json_body(raw.body)
    if raw.dialect is WireDialect.XML_TOOL:
        return _read_xml_body(raw.body)[1]
    raise ValueError(f"{raw.dialect} is not a tool dialect")


def parse_tool_response(raw: RawModelOutput, spec: FactFunctionSpec) -> InvocationResult:
    """Validate a tool-call response against ``spec`` and invoke its mapping.

    Raises:
        WholeResponseUnparseable: the body is not valid under its dialect.
    """
    indices = spec.fact_indices
    try:
        if raw.dialect is WireDialect.XML_TOOL:
            tool_name, values = _read_xml_body(raw.body)
            if tool_name is not None and tool_name != spec.title:
                logger.warning("response invokes %r, expected %r", tool_name, spec.title)
        else:
            values = read_arguments(raw)
    except ValueError as exc:
        raise WholeResponseUnparseable(
            f"unparseable {raw.dialect} response: {exc}",
            InvocationResult.all_failed(indices, FailureReason.UNPARSEABLE),
        ) from None

    known = {a.name for a in spec.arguments}
    extra = sorted(set(values) - known)
    if extra:
        logger.warning("ignoring unknown response arguments: %s", ", ".join(extra))

    verdicts: dict[int, Verdict] = {}
    citations: dict[int, str] = {}
    failures: list[tuple[int, FailureReason]] = []
    mapping = spec.post_mapping
    for arg in spec.arguments:
        if arg.kind is ArgumentKind.CITATION:
            value = values.get(arg.name)
            if isinstance(value, str) and value.strip():
                citations[arg.fact_index] = value
            elif value is not None and not isinstance(value, str):
                logger.warning("citation %s has non-string value %r; dropped", arg.name, value)
            continue

        reason: FailureReason | None = None
        if arg.name not in values:
            reason = FailureReason.MISSING
        else:
            value = values[arg.name]
            if value is None:
                reason = FailureReason.NULL_VERDICT
            elif not isinstance(value, str):
                reason = FailureReason.WRONG_TYPE
            else:
                try:
                    label = validate_enum(value, arg.enum or ())
                except EnumMismatch:
                    reason = FailureReason.ENUM_MISMATCH
                else:
                    verdicts[arg.fact_index] = mapping.apply(spec.config.label_to_verdict(label))
        if reason is not None:
            verdicts[arg.fact_index] = Verdict.NOT_ANSWERED
            failures.append((arg.fact_index, reason))
    return InvocationResult(verdicts=verdicts, citations=citations, failures=tuple(failures))


_WORD_RE = re.compile(r"\b(true|false)\b", re.IGNORECASE)


def parse_prompt_response(body: str) -> Verdict:
    """Word-match a free-text answer to True/False.

    The first of "true"/"false" (any case, whole word) decides, so prose such
    as "To determine if the claim is true or false ..." reads as True.  This
    mirrors how fragile word matching is and is kept that way on purpose.
    """
    match = _WORD_RE.search(body)
    if match is None:
        return Verdict.NOT_ANSWERED
    return Verdict.TRUE if match.group(1).lower() == "true" else Verdict.FALSE
