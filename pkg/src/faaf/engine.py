"""Run verifications: one answer at a time, or a whole dataset sweep.

A FaaF verification makes a single model call that carries every fact of the
answer; the prompt baseline makes one call per fact.  Each call is recorded in
the run ledger together with whether it was served from the cache.
"""

from __future__ import annotations

import json
import logging
import os
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from faaf.constructor import build_fact_function, serialize_spec
from faaf.core import (
    FORMULATION_LABELS,
    AnswerKind,
    FormulationConfig,
    InvalidConfig,
    PromptBaseline,
    QARecord,
    Verdict,
    order_variants,
)
from faaf.gateway import AuthError, BudgetExceeded, Gateway, GatewayError, ModelRequest, RequestMode, default_system_prompt
from faaf.parsing import (
    FailureReason,
    InvocationResult,
    UsageRecord,
    WholeResponseUnparseable,
    parse_prompt_response,
    parse_tool_response,
)

logger = logging.getLogger(__name__)

FAAF_PROMPT = "Consider the given passage and assign the correct values in the fact checker function.\n\nPassage: {answer}"


@dataclass(frozen=True)
class CallRecord:
    """One logical model call made during a run."""

    qa_id: str
    variant: AnswerKind
    fact_index: int | None
    key: str
    cached: bool
    usage: UsageRecord
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "qa_id": self.qa_id,
            "variant": self.variant.value,
            "fact_index": self.fact_index,
            "key": self.key,
            "cached": self.cached,
            "usage": self.usage.to_dict(),
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CallRecord":
        return cls(
            data["qa_id"],
            AnswerKind(data["variant"]),
            data["fact_index"],
            data["key"],
            bool(data["cached"]),
            UsageRecord.from_dict(data["usage"]),
            data.get("error"),
        )


@dataclass(frozen=True)
class AnswerVerification:
    qa_id: str
    variant: AnswerKind
    formulation_id: str
    result: InvocationResult
    usage: UsageRecord
    calls: tuple[CallRecord, ...] = ()

    def to_dict(self) -> dict:
        return {
            "qa_id": self.qa_id,
            "variant": self.variant.value,
            "formulation_id": self.formulation_id,
            "result": self.result.to_dict(),
            "usage": self.usage.to_dict(),
            "calls": [c.to_dict() for c in self.calls],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AnswerVerification":
        return cls(
            data["qa_id"],
            AnswerKind(data["variant"]),
            data["formulation_id"],
            InvocationResult.from_dict(data["result"]),
            UsageRecord.from_dict(data["usage"]),
            tuple(CallRecord.from_dict(c) for c in data.get("calls", [])),
        )


@dataclass(frozen=True)
class EvaluationRun:
    run_id: str
    config: dict
    verifications: tuple[AnswerVerification, ...]
    started_at: str
    finished_at: str
    gold: dict = field(default_factory=dict, compare=True)

    @property
    def formulation_id(self) -> str:
        return self.config["formulation_id"]

    @property
    def backend_name(self) -> str:
        return self.config["backend"]["name"]

    @property
    def ledger(self) -> list[CallRecord]:
        return [c for v in self.verifications for c in v.calls]

    def gold_for(self, qa_id: str, variant: AnswerKind) -> dict[int, bool]:
        cell = self.gold[qa_id][variant.value]
        return {int(i): bool(v) for i, v in cell.items()}


def _formulation_id(formulation: FormulationConfig | PromptBaseline, given: str | None) -> str:
    if given:
        return given
    if isinstance(formulation, PromptBaseline):
        return "prompt-tf"
    suffix = "tfn" if formulation.response_domain.value == "TFN" else "tf"
    return f"faaf-{suffix}" + ("-cit" if formulation.with_citation else "")


def build_requests(
    qa: QARecord,
    variant: AnswerKind,
    formulation: FormulationConfig | PromptBaseline,
    gateway: Gateway,
) -> list[tuple[int | None, ModelRequest]]:
    """Requests for one answer, paired with the fact index they cover (None = all)."""
    answer = qa.answer(variant)
    descriptor = gateway.descriptor
    if isinstance(formulation, PromptBaseline):
        system = default_system_prompt(descriptor, RequestMode.PROMPT)
        return [
            (
                fact.index,
                ModelRequest(
                    mode=RequestMode.PROMPT,
                    user_prompt=formulation.render(answer, fact.text),
                    system_prompt=system,
                    model_id=descriptor.model_id,
                ),
            )
            for fact in qa.facts
        ]
    spec = build_fact_function(qa.facts, formulation)
    schema = serialize_spec(spec, gateway.dialect)
    request = ModelRequest(
        mode=RequestMode.TOOL_CALL,
        user_prompt=FAAF_PROMPT.replace("{answer}", answer),
        system_prompt=default_system_prompt(descriptor, RequestMode.TOOL_CALL),
        tool_schema=schema,
        model_id=descriptor.model_id,
    )
    return [(None, request)]


def verify_answer(
    qa: QARecord,
    variant: AnswerKind | str,
    formulation: FormulationConfig | PromptBaseline,
    gateway: Gateway,
    *,
    formulation_id: str | None = None,
    executor: ThreadPoolExecutor | None = None,
) -> AnswerVerification:
    """Verify every fact of ``qa`` against one of its answer variants.

    Gateway failures are recorded, not raised: a failed FaaF call marks every
    fact NotAnswered, a failed per-fact prompt call marks only that fact.
    Budget exhaustion and credential failures propagate.
    """
    variant = AnswerKind.parse(variant)
    fid = _formulation_id(formulation, formulation_id)
    if not qa.facts:
        raise InvalidConfig(f"record {qa.id} has no facts")
    requests = build_requests(qa, variant, formulation, gateway)
    indices = [f.index for f in qa.facts]

    if isinstance(formulation, PromptBaseline):
        def one(item: tuple[int | None, ModelRequest]):
            index, request = item
            return index, request, _call(gateway, request)

        outcomes = list(executor.map(one, requests)) if executor else [one(r) for r in requests]
        verdicts: dict[int, Verdict] = {}
        failures = []
        calls = []
        for index, request, (output, error) in outcomes:
            assert index is not None
            calls.append(_record(qa, variant, index, gateway, request, output, error))
            verdict = parse_prompt_response(output.body) if output is not None else Verdict.NOT_ANSWERED
            verdicts[index] = verdict
            if verdict is Verdict.NOT_ANSWERED:
                failures.append((index, FailureReason.CALL_FAILED if error else FailureReason.NO_VERDICT_TOKEN))
        result = InvocationResult(verdicts=verdicts, failures=tuple(failures))
    else:
        (_, request), = requests
        output, error = _call(gateway, request)
        calls = [_record(qa, variant, None, gateway, request, output, error)]
        if output is None:
            result = InvocationResult.all_failed(indices, FailureReason.CALL_FAILED)
        else:
            spec = build_fact_function(qa.facts, formulation)
            try:
                result = parse_tool_response(output, spec)
            except WholeResponseUnparseable as exc:
                logger.warning("%s/%s: %s", qa.id, variant, exc)
                result = exc.result

    usage = UsageRecord.total([c.usage for c in calls])
    return AnswerVerification(qa.id, variant, fid, result, usage, tuple(calls))


def _call(gateway: Gateway, request: ModelRequest):
    try:
        return gateway.complete(request), None
    except (BudgetExceeded, AuthError):
        # Every later call would fail the same way; stop the run.
        raise
    except GatewayError as exc:
        logger.warning("model call failed: %s", exc)
        return None, f"{type(exc).__name__}: {exc}"


def _record(qa, variant, index, gateway, request, output, error) -> CallRecord:
    usage = output.usage if output is not None else UsageRecord(0, 0, 0, 1)
    return CallRecord(
        qa.id,
        variant,
        index,
        gateway.key(request),
        bool(output is not None and output.cached),
        UsageRecord(usage.prompt_tokens, usage.completion_tokens, usage.latency_ms, 1),
        error,
    )


def run_config(
    formulation_id: str,
    formulation: FormulationConfig | PromptBaseline,
    gateway: Gateway,
    variants: Sequence[AnswerKind],
) -> dict:
    descriptor = gateway.descriptor
    prompts = {"system_tool_call": default_system_prompt(descriptor, RequestMode.TOOL_CALL)}
    if isinstance(formulation, PromptBaseline):
        prompts["user"] = formulation.template
    else:
        prompts["user"] = FAAF_PROMPT
    return {
        "formulation_id": formulation_id,
        "formulation_label": FORMULATION_LABELS.get(formulation_id, formulation_id),
        "formulation": (
            {"kind": "prompt", **formulation.to_dict()}
            if isinstance(formulation, PromptBaseline)
            else {"kind": "faaf", **formulation.to_dict()}
        ),
        "backend": descriptor.to_dict(),
        "dialect": gateway.dialect.value,
        "variants": [v.value for v in variants],
        "prompts": prompts,
    }


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_evaluation(
    dataset: Sequence[QARecord],
    variants: Iterable[AnswerKind | str],
    formulation: FormulationConfig | PromptBaseline,
    gateway: Gateway,
    *,
    formulation_id: str | None = None,
    parallel: int = 4,
    progress_path: str | os.PathLike | None = None,
    run_id: str | None = None,
) -> EvaluationRun:
    """Verify every (record, variant) pair and collect the results.

    Results come back in dataset order, then variant order, regardless of the
    order workers finish in.  When ``progress_path`` is given, each finished
    answer is appended there as a JSON line so an interrupted run keeps its
    completed work (re-running replays those calls from the cache).
    """
    if not dataset:
        raise InvalidConfig("dataset is empty")
    ordered = order_variants(variants)
    if parallel < 1:
        raise InvalidConfig("parallel must be at least 1")
    fid = _formulation_id(formulation, formulation_id)
    started = _now()
    jobs = [(qa, v) for qa in dataset for v in ordered]

    progress = open(progress_path, "a", encoding="utf-8") if progress_path else None
    try:
        with ThreadPoolExecutor(max_workers=parallel) as answers_pool, ThreadPoolExecutor(
            max_workers=parallel
        ) as facts_pool:
            def work(job: tuple[QARecord, AnswerKind]) -> AnswerVerification:
                qa, variant = job
                return verify_answer(qa, variant, formulation, gateway, formulation_id=fid, executor=facts_pool)

            futures = [answers_pool.submit(work, job) for job in jobs]
            results = []
            # Collected in submission order; this thread is the only writer.
            for future in futures:
                verification = future.result()
                results.append(verification)
                if progress is not None:
                    progress.write(json.dumps(verification.to_dict(), ensure_ascii=False) + "\n")
                    progress.flush()
    finally:
        if progress is not None:
            progress.close()

    gold = {
        qa.id: {v.value: {str(i): label for i, label in qa.gold(v).items()} for v in ordered} for qa in dataset
    }
    return EvaluationRun(
        run_id=run_id or uuid.uuid4().hex[:12],
        config=run_config(fid, formulation, gateway, ordered),
        verifications=tuple(results),
        started_at=started,
        finished_at=_now(),
        gold=gold,
    )


def dry_run_requests(
    dataset: Sequence[QARecord],
    variants: Iterable[AnswerKind | str],
    formulation: FormulationConfig | PromptBaseline,
    gateway: Gateway,
) -> Iterable[tuple[str, AnswerKind, int | None, ModelRequest]]:
    for qa in dataset:
        for variant in order_variants(variants):
            for index, request in build_requests(qa, variant, formulation, gateway):
                yield qa.id, variant, index, request


def progress_file_for(path: Path) -> Path:
    return path.with_name(path.name + ".partial.jsonl")
