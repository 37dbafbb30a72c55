"""Error rate, F1 on unsupported facts, and cost reporting.

Both accuracy metrics look only at answered facts: a fact the model failed
to answer is counted in the N/A column and nowhere else.  F1 treats ``False``
(an unsupported fact) as the positive class.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Mapping, Sequence

from faaf.core import FORMULATION_LABELS, FORMULATIONS, VARIANT_ORDER, AnswerKind, FaafError, Verdict


class NoAnsweredFacts(FaafError, ValueError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    """Counts over answered facts with ``False`` as the positive class."""

    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0
    na: int = 0

    @property
    def answered(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def total(self) -> int:
        return self.answered + self.na

    @property
    def gold_false(self) -> int:
        return self.tp + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn, self.na + other.na
        )

    def error_rate(self) -> float:
        if self.answered == 0:
            raise NoAnsweredFacts("no answered facts to score")
        return 100.0 * (self.fp + self.fn) / self.answered

    def f1_false(self) -> float:
        if self.answered == 0:
            raise NoAnsweredFacts("no answered facts to score")
        if self.tp + self.fp == 0 or self.tp + self.fn == 0:
            return 0.0
        precision = self.tp / (self.tp + self.fp)
        recall = self.tp / (self.tp + self.fn)
        if precision + recall == 0:
            return 0.0
        return 200.0 * precision * recall / (precision + recall)


def confusion(pred: Mapping[int, Verdict], gold: Mapping[int, bool]) -> ConfusionCounts:
    unknown = set(pred) - set(gold)
    if unknown:
        raise ValueError(f"predictions for facts without gold labels: {sorted(unknown)}")
    tp = fp = tn = fn = na = 0
    for index, truth in gold.items():
        verdict = pred.get(index, Verdict.NOT_ANSWERED)
        if verdict is Verdict.NOT_ANSWERED:
            na += 1
        elif verdict is Verdict.NOT_CLEAR:
            raise ValueError(f"fact {index}: NotClear must be mapped before scoring")
        elif verdict is Verdict.FALSE:
            if truth:
                fp += 1
            else:
                tp += 1
        elif truth:
            tn += 1
        else:
            fn += 1
    return ConfusionCounts(tp, fp, tn, fn, na)


def error_rate(pred: Mapping[int, Verdict], gold: Mapping[int, bool]) -> float:
    return confusion(pred, gold).error_rate()


def f1_micro_false(pred: Mapping[int, Verdict], gold: Mapping[int, bool]) -> float:
    return confusion(pred, gold).f1_false()


def round_half_up(value: float, places: int = 1) -> Decimal:
    return Decimal(repr(value)).quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)


def fmt_percent(value: float | None) -> str:
    return "—" if value is None else str(round_half_up(value))


# --- run-level aggregation ------------------------------------------------


def run_confusion(run, variant: AnswerKind) -> ConfusionCounts:
    counts = ConfusionCounts()
    for verification in run.verifications:
        if verification.variant is variant:
            counts = counts + confusion(verification.result.verdicts, run.gold_for(verification.qa_id, variant))
    return counts


@dataclass(frozen=True)
class ReportRow:
    variant: AnswerKind
    formulation: str
    backend: str
    counts: ConfusionCounts
    er: float | None
    f1m: float | None

    @property
    def na(self) -> str:
        return f"{self.counts.na}/{self.counts.total}"


@dataclass(frozen=True)
class CostRow:
    formulation: str
    backend: str
    prompt_tokens: int
    completion_tokens: int
    calls: int
    upstream_calls: int = 0

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens


@dataclass(frozen=True)
class ReportTable:
    rows: tuple[ReportRow, ...]
    costs: tuple[CostRow, ...]

    def row(self, variant: AnswerKind | str, formulation: str, backend: str | None = None) -> ReportRow:
        variant = AnswerKind.parse(variant)
        for row in self.rows:
            if row.variant is variant and row.formulation == formulation and backend in (None, row.backend):
                return row
        raise KeyError((variant, formulation, backend))


def cost_summary(runs) -> list[CostRow]:
    """Sum tokens and calls per (formulation, backend), in first-seen order.

    Tokens and calls are logical: a call answered from the cache still
    counts with its recorded usage.  ``upstream_calls`` counts only misses.
    """
    if not isinstance(runs, (list, tuple)):
        runs = [runs]
    totals: dict[tuple[str, str], list[int]] = {}
    for run in runs:
        key = (run.formulation_id, run.backend_name)
        acc = totals.setdefault(key, [0, 0, 0, 0])
        for call in run.ledger:
            acc[0] += call.usage.prompt_tokens
            acc[1] += call.usage.completion_tokens
            acc[2] += 1
            acc[3] += 0 if call.cached else 1
    return [CostRow(f, b, *acc) for (f, b), acc in totals.items()]


def _formulation_rank(formulation_id: str) -> tuple[int, str]:
    order = list(FORMULATIONS)
    return (order.index(formulation_id) if formulation_id in order else len(order), formulation_id)


def render_report(runs: Sequence) -> ReportTable:
    if not runs:
        raise ValueError("at least one run is required")
    backends: list[str] = []
    for run in runs:
        if run.backend_name not in backends:
            backends.append(run.backend_name)
    ordered = sorted(runs, key=lambda r: (backends.index(r.backend_name), _formulation_rank(r.formulation_id)))
    rows = []
    for run in ordered:
        present = {v.variant for v in run.verifications}
        for variant in VARIANT_ORDER:
            if variant not in present:
                continue
            counts = run_confusion(run, variant)
            if counts.answered:
                er, f1 = counts.error_rate(), counts.f1_false()
            else:
                er = f1 = None
            rows.append(ReportRow(variant, run.formulation_id, run.backend_name, counts, er, f1))
    return ReportTable(tuple(rows), tuple(cost_summary(list(ordered))))


def report_csv(table: ReportTable) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["variant", "formulation", "backend", "na", "er", "f1m"])
    for row in table.rows:
        writer.writerow([row.variant.value, row.formulation, row.backend, row.na, fmt_percent(row.er), fmt_percent(row.f1m)])
    return out.getvalue()


def cost_csv(table: ReportTable) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["formulation", "backend", "prompt_tokens", "completion_tokens", "total_tokens", "calls"])
    for c in table.costs:
        writer.writerow([c.formulation, c.backend, c.prompt_tokens, c.completion_tokens, c.total_tokens, c.calls])
    return out.getvalue()


def report_summary(table: ReportTable) -> dict:
    """Machine-readable summary at full precision."""
    return {
        "rows": [
            {
                "variant": r.variant.value,
                "formulation": r.formulation,
                "backend": r.backend,
                "na": r.counts.na,
                "n": r.counts.total,
                "er": r.er,
                "f1m": r.f1m,
                "confusion": asdict(r.counts),
            }
            for r in table.rows
        ],
        "costs": [{**asdict(c), "total_tokens": c.total_tokens} for c in table.costs],
    }


def _grid(header: list[str], body: Iterable[list[str]]) -> str:
    lines = [header, *body]
    widths = [max(len(line[i]) for line in lines) for i in range(len(header))]
    fmt = lambda cells: "  ".join(c.ljust(w) if i < 2 else c.rjust(w) for i, (c, w) in enumerate(zip(cells, widths)))  # noqa: E731
    rule = "  ".join("-" * w for w in widths)
    return "\n".join([fmt(header), rule, *(fmt(line) for line in lines[1:])])


def report_text(table: ReportTable) -> str:
    """Plain-text tables: accuracy grouped by backend and formulation, then cost."""
    variants = [v for v in VARIANT_ORDER if any(r.variant is v for r in table.rows)]
    header = ["backend", "formulation"]
    for v in variants:
        header += [f"{v.value} N/A", "ER", "F1m"]
    groups: dict[tuple[str, str], dict[AnswerKind, ReportRow]] = {}
    for row in table.rows:
        groups.setdefault((row.backend, row.formulation), {})[row.variant] = row
    body = []
    notes = set()
    for (backend, formulation), cells in groups.items():
        line = [backend, FORMULATION_LABELS.get(formulation, formulation)]
        for v in variants:
            row = cells.get(v)
            if row is None:
                line += ["", "", ""]
                continue
            f1 = fmt_percent(row.f1m)
            if row.er is None:
                notes.add("— no answered facts in this cell, so ER and F1m are undefined.")
            elif row.counts.gold_false == 0:
                f1 += "*"
                notes.add("* F1m is 0 when the gold labels contain no False facts.")
            line += [row.na, fmt_percent(row.er), f1]
        body.append(line)
    parts = [_grid(header, body)]
    if notes:
        parts.append("\n".join(sorted(notes)))
    if table.costs:
        cost_header = ["backend", "formulation", "prompt tokens", "completion tokens", "total tokens", "calls"]
        cost_body = [
            [c.backend, FORMULATION_LABELS.get(c.formulation, c.formulation), f"{c.prompt_tokens:,}",
             f"{c.completion_tokens:,}", f"{c.total_tokens:,}", str(c.calls)]
            for c in table.costs
        ]
        parts.append(_grid(cost_header, cost_body))
    return "\n\n".join(parts) + "\n"


def report_json(table: ReportTable) -> str:
    return json.dumps(report_summary(table), indent=1)
