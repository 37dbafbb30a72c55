"""Offline backends for deterministic runs.

* ``MockOracleBackend`` answers from human gold labels, so any correct
  pipeline scores perfectly against it.
* ``MockScriptedBackend`` replays recorded bodies from a fixture file.
* ``MockAdversarialBackend`` produces the known-bad shapes (both words in
  prose, lowercase enums, null verdicts) that the parsers must survive.

Token usage is estimated at four characters per token.
"""

from __future__ import annotations

import html
import json
import math
import threading
import time
from collections import deque
from pathlib import Path
from typing import Iterable, Sequence

from faaf.constructor import WireDialect, fact_texts_from_schema, parse_wire_schema
from faaf.core import AnswerKind, QARecord
from faaf.gateway.types import BackendDescriptor, GatewayError, ModelRequest, RequestMode, request_key
from faaf.parsing import RawModelOutput, UsageRecord

ADVERSARIAL_PROSE = (
    "To determine if the claim is true or false based on the given passage, the answer is False."
)


class MockError(GatewayError):
    pass


def estimate_tokens(text: str) -> int:
    return math.ceil(len(text) / 4)


def estimate_usage(request: ModelRequest, body: str) -> UsageRecord:
    prompt = request.system_prompt + request.user_prompt
    if request.tool_schema is not None:
        prompt += request.tool_schema.payload
    return UsageRecord(estimate_tokens(prompt), estimate_tokens(body), 0, 1)


def render_tool_body(dialect: WireDialect, title: str, values: dict[str, str | None]) -> str:
    """Render argument values the way a backend of ``dialect`` would return them."""
    if dialect is WireDialect.JSON_TOOL:
        return json.dumps(values, ensure_ascii=False)
    lines = ["<function_calls>", "<invoke>", f"<tool_name>{html.escape(title, quote=False)}</tool_name>", "<parameters>"]
    for name, value in values.items():
        lines.append(f"<{name}>{html.escape(value, quote=False) if value is not None else ''}</{name}>")
    lines += ["</parameters>", "</invoke>", "</function_calls>"]
    return "\n".join(lines)


class _Backend:
    def __init__(self, descriptor: BackendDescriptor):
        self.descriptor = descriptor

    @property
    def dialect(self) -> WireDialect:
        return self.descriptor.tool_dialect

    def _output(self, request: ModelRequest, body: str, started: float) -> RawModelOutput:
        usage = estimate_usage(request, body)
        usage = UsageRecord(usage.prompt_tokens, usage.completion_tokens, int((time.perf_counter() - started) * 1000), 1)
        dialect = self.dialect if request.mode is RequestMode.TOOL_CALL else WireDialect.PLAIN_TEXT
        return RawModelOutput(dialect, body, usage)


class MockOracleBackend(_Backend):
    """Answers every fact with its gold label for the passage being checked."""

    def __init__(self, descriptor: BackendDescriptor, records: Iterable[QARecord]):
        super().__init__(descriptor)
        self._labels: dict[str, dict[str, bool]] = {}
        for record in records:
            for kind, passage in record.answers.items():
                cell = self._labels.setdefault(passage.strip(), {})
                for fact in record.facts:
                    label = record.gold_labels[(AnswerKind(kind), fact.index)]
                    previous = cell.setdefault(fact.text.strip(), label)
                    if previous != label:
                        raise MockError(f"conflicting gold labels for fact {fact.text!r} in one passage")
        self._passages = sorted(self._labels, key=len, reverse=True)

    def _passage_for(self, prompt: str) -> str:
        for passage in self._passages:
            if passage in prompt:
                return passage
        raise MockError("oracle has no gold labels for the passage in this request")

    def send(self, request: ModelRequest) -> RawModelOutput:
        started = time.perf_counter()
        passage = self._passage_for(request.user_prompt)
        labels = self._labels[passage]
        if request.mode is RequestMode.PROMPT:
            rest = request.user_prompt.replace(passage, "", 1)
            fact = next((f for f in sorted(labels, key=len, reverse=True) if f in rest), None)
            if fact is None:
                raise MockError("oracle could not find a known fact in the prompt")
            return self._output(request, "True" if labels[fact] else "False", started)

        assert request.tool_schema is not None
        parsed = parse_wire_schema(request.tool_schema)
        facts = fact_texts_from_schema(parsed, labels)
        values: dict[str, str | None] = {}
        for arg in parsed.arguments:
            kind, _, raw_index = arg.name.rpartition("_")
            fact = facts.get(int(raw_index))
            if fact is None:
                raise MockError(f"oracle could not identify the fact behind {arg.name}")
            if kind == "citation":
                values[arg.name] = (fact if fact in passage else passage.split(". ")[0]) if labels[fact] else None
            else:
                values[arg.name] = "True" if labels[fact] else "False"
        return self._output(request, render_tool_body(self.dialect, parsed.title, values), started)


class MockAdversarialBackend(_Backend):
    """Emits malformed-but-plausible responses.

    Prompt requests always get prose naming both words.  Tool requests cycle
    per fact through a lowercase enum value, a null verdict with a null
    citation, and the not-clear label (valid only for three-way domains).
    """

    NOT_CLEAR = "Not clear from the given passage"

    def send(self, request: ModelRequest) -> RawModelOutput:
        started = time.perf_counter()
        if request.mode is RequestMode.PROMPT:
            return self._output(request, ADVERSARIAL_PROSE, started)
        assert request.tool_schema is not None
        parsed = parse_wire_schema(request.tool_schema)
        values: dict[str, str | None] = {}
        for arg in parsed.arguments:
            kind, _, raw_index = arg.name.rpartition("_")
            index = int(raw_index)
            if kind == "citation":
                values[arg.name] = None
            elif index % 3 == 0:
                values[arg.name] = "true"
            elif index % 3 == 1:
                values[arg.name] = None
            else:
                values[arg.name] = self.NOT_CLEAR
        return self._output(request, render_tool_body(self.dialect, parsed.title, values), started)


class MockScriptedBackend(_Backend):
    """Replays recorded response bodies byte for byte.

    The fixture is a JSON-lines file; each entry has a ``body`` and optionally
    a ``key`` (request hash), a ``match`` (substring of the user prompt) and a
    recorded ``usage``.  Keyed entries win, then the first matching entry, then
    unkeyed entries are handed out in file order.
    """

    def __init__(self, descriptor: BackendDescriptor, entries: Sequence[dict] | None = None):
        super().__init__(descriptor)
        if entries is None:
            fixture = descriptor.options.get("fixture")
            if not fixture:
                raise MockError("scripted backend needs options.fixture")
            entries = load_fixture(fixture)
        self._keyed = {e["key"]: e for e in entries if e.get("key")}
        self._matching = [e for e in entries if not e.get("key") and e.get("match")]
        self._queue = deque(e for e in entries if not e.get("key") and not e.get("match"))
        self._lock = threading.Lock()

    def send(self, request: ModelRequest) -> RawModelOutput:
        started = time.perf_counter()
        key = request_key(request, self.descriptor)
        with self._lock:
            entry = self._keyed.get(key)
            if entry is None:
                entry = next((e for e in self._matching if e["match"] in request.user_prompt), None)
            if entry is None:
                if not self._queue:
                    raise MockError("scripted fixture exhausted")
                entry = self._queue.popleft()
        body = entry["body"]
        if "usage" in entry:
            usage = UsageRecord.from_dict({**entry["usage"], "call_count": 1})
            dialect = self.dialect if request.mode is RequestMode.TOOL_CALL else WireDialect.PLAIN_TEXT
            return RawModelOutput(dialect, body, usage)
        return self._output(request, body, started)


def load_fixture(path: str | Path) -> list[dict]:
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MockError(f"{path}:{lineno}: {exc}") from None
            if not isinstance(entry, dict) or not isinstance(entry.get("body"), str):
                raise MockError(f"{path}:{lineno}: entry needs a string 'body'")
            entries.append(entry)
    return entries
