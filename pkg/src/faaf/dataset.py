"""Dataset and run-artifact persistence.

Datasets are JSON lines.  An optional first line ``{"record_type": "meta", ...}``
carries provenance; every other line is one QA record::

    {"record_type": "qa", "id": "...", "question": "...",
     "answers": {"ground_truth": "...", "ungrounded": "...", "poor": "..."},
     "facts": [{"index": 0, "text": "..."}, ...],
     "annotations": [{"variant": "ungrounded", "fact": 0, "label": false}, ...]}

Run artifacts are a single JSON document with a ``schema_version`` field.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from faaf.core import VARIANT_ORDER, AnswerKind, FaafError, FactStatement, QARecord

DATASET_SCHEMA_VERSION = 1
RUN_SCHEMA_VERSION = 1

_META_RESERVED = ("record_type", "schema_version", "source", "version")


class ParseError(FaafError, ValueError):
    def __init__(self, message: str, *, line: int | None = None, offset: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"byte {offset}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.offset = offset


class ValidationError(FaafError, ValueError):
    pass


class SchemaVersionMismatch(FaafError, ValueError):
    pass


class MissingAnnotations(FaafError, ValueError):
    pass


@dataclass(frozen=True)
class DatasetFile:
    records: tuple[QARecord, ...]
    source: str = ""
    version: str = ""
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        seen: set[str] = set()
        for record in self.records:
            if record.id in seen:
                raise ValidationError(f"duplicate qa id {record.id!r}")
            seen.add(record.id)

    @property
    def n_pairs(self) -> int:
        return len(self.records)

    @property
    def n_facts(self) -> int:
        return sum(len(r.facts) for r in self.records)

    @property
    def n_annotations(self) -> int:
        return sum(len(r.gold_labels) for r in self.records)

    def get(self, qa_id: str) -> QARecord:
        for record in self.records:
            if record.id == qa_id:
                return record
        raise KeyError(qa_id)

    def counts(self) -> dict[str, int]:
        return {"pairs": self.n_pairs, "facts": self.n_facts, "annotations": self.n_annotations}


def record_to_dict(record: QARecord) -> dict[str, Any]:
    answers = {k.value: record.answers[k] for k in VARIANT_ORDER if k in record.answers}
    annotations = [
        {"variant": kind.value, "fact": fact.index, "label": record.gold_labels[(kind, fact.index)]}
        for kind in VARIANT_ORDER
        if kind in record.answers
        for fact in record.facts
    ]
    return {
        "record_type": "qa",
        "id": record.id,
        "question": record.question,
        "answers": answers,
        "facts": [{"index": f.index, "text": f.text} for f in record.facts],
        "annotations": annotations,
    }


def record_from_dict(data: Mapping[str, Any], *, require_all_variants: bool = True) -> QARecord:
    ident = data.get("id")
    label = f"record {ident!r}" if ident is not None else "record"
    try:
        if not isinstance(ident, str) or not ident:
            raise ValidationError("record id must be a non-empty string")
        answers = {AnswerKind.parse(k): v for k, v in data["answers"].items()}
        if require_all_variants:
            missing = [k.value for k in VARIANT_ORDER if k not in answers]
            if missing:
                raise ValidationError(f"{label} is missing answer variant(s): {', '.join(missing)}")
        facts = tuple(FactStatement(int(f["index"]), f["text"]) for f in data["facts"])
        labels: dict[tuple[AnswerKind, int], bool] = {}
        for ann in data["annotations"]:
            cell = (AnswerKind.parse(ann["variant"]), int(ann["fact"]))
            if cell in labels:
                raise ValidationError(f"{label} annotates ({cell[0]}, {cell[1]}) twice")
            if not isinstance(ann["label"], bool):
                raise ValidationError(f"{label}: labels must be true/false, got {ann['label']!r}")
            labels[cell] = ann["label"]
        return QARecord(ident, data["question"], answers, facts, labels)
    except ValidationError:
        raise
    except KeyError as exc:
        raise ValidationError(f"{label} lacks field {exc}") from None
    except (ValueError, TypeError, AttributeError) as exc:
        raise ValidationError(f"{label}: {exc}") from None


def load_dataset(path: str | os.PathLike) -> DatasetFile:
    """Read and validate a dataset file.

    Raises:
        ParseError: a line is not valid JSON (reports line and byte offset).
        ValidationError: a record breaks an invariant; the message names it.
    """
    meta: dict[str, Any] = {}
    records: list[QARecord] = []
    offset = 0
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, 1):
            start = offset
            offset += len(raw)
            if not raw.strip():
                continue
            try:
                text = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise ParseError(f"{path}: {exc.reason}", line=lineno, offset=start + exc.start) from None
            try:
                data = json.loads(text)
            except json.JSONDecodeError as exc:
                pos = len(text[: exc.pos].encode("utf-8"))
                raise ParseError(f"{path}: {exc.msg}", line=lineno, offset=start + pos) from None
            if not isinstance(data, dict):
                raise ParseError(f"{path}: expected a JSON object", line=lineno, offset=start)
            kind = data.get("record_type", "qa")
            if kind == "meta":
                if records or meta:
                    raise ValidationError(f"{path}: line {lineno}: meta line must come first")
                version = data.get("schema_version", DATASET_SCHEMA_VERSION)
                if version > DATASET_SCHEMA_VERSION:
                    raise SchemaVersionMismatch(f"{path}: dataset schema {version} is newer than supported")
                meta = data
                continue
            if kind != "qa":
                raise ValidationError(f"{path}: line {lineno}: unknown record_type {kind!r}")
            try:
                records.append(record_from_dict(data))
            except ValidationError as exc:
                raise ValidationError(f"{path}: line {lineno}: {exc}") from None
    return DatasetFile(
        tuple(records),
        source=str(meta.get("source", "")),
        version=str(meta.get("version", "")),
        meta={k: v for k, v in meta.items() if k not in _META_RESERVED},
    )


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def dump_dataset(dataset: DatasetFile) -> str:
    meta: dict[str, Any] = {
        "record_type": "meta",
        "schema_version": DATASET_SCHEMA_VERSION,
        "source": dataset.source,
        "version": dataset.version,
    }
    meta.update({k: v for k, v in dataset.meta.items() if k not in _META_RESERVED})
    lines = [json.dumps(meta, ensure_ascii=False)]
    lines += [json.dumps(record_to_dict(r), ensure_ascii=False) for r in dataset.records]
    return "\n".join(lines) + "\n"


def save_dataset(dataset: DatasetFile, path: str | os.PathLike) -> None:
    _atomic_write(Path(path), dump_dataset(dataset))


def human_accuracy(dataset: DatasetFile, variant: AnswerKind | str) -> float:
    """Percentage of facts humans judged supported by the given answer variant."""
    variant = AnswerKind.parse(variant)
    total = supported = 0
    for record in dataset.records:
        for fact in record.facts:
            try:
                label = record.gold_labels[(variant, fact.index)]
            except KeyError:
                raise MissingAnnotations(f"record {record.id} has no {variant} label for fact {fact.index}") from None
            total += 1
            supported += label
    if total == 0:
        raise MissingAnnotations(f"no {variant} annotations in dataset")
    return 100.0 * supported / total


# --- run artifacts -------------------------------------------------------


def run_to_dict(run) -> dict[str, Any]:
    return {
        "schema_version": RUN_SCHEMA_VERSION,
        "run_id": run.run_id,
        "started_at": run.started_at,
        "finished_at": run.finished_at,
        "config": run.config,
        "gold": run.gold,
        "verifications": [v.to_dict() for v in run.verifications],
    }


def run_from_dict(data: Mapping[str, Any]):
    from faaf.engine import AnswerVerification, EvaluationRun

    version = data.get("schema_version")
    if version != RUN_SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"run schema version {version!r}; this build reads {RUN_SCHEMA_VERSION}")
    return EvaluationRun(
        run_id=data["run_id"],
        config=data["config"],
        verifications=tuple(AnswerVerification.from_dict(v) for v in data["verifications"]),
        started_at=data["started_at"],
        finished_at=data["finished_at"],
        gold=data.get("gold", {}),
    )


def save_run(run, path: str | os.PathLike) -> Path:
    """Write ``run`` atomically (temp file, then rename) and drop its progress log."""
    from faaf.engine import progress_file_for

    path = Path(path)
    _atomic_write(path, json.dumps(run_to_dict(run), ensure_ascii=False, indent=1) + "\n")
    progress_file_for(path).unlink(missing_ok=True)
    return path


def load_run(path: str | os.PathLike):
    raw = Path(path).read_bytes()
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", line=exc.lineno, offset=len(exc.doc[: exc.pos].encode("utf-8"))) from None
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: {exc.reason}", offset=exc.start) from None
    if not isinstance(data, dict):
        raise ParseError(f"{path}: run artifact must be a JSON object", offset=0)
    return run_from_dict(data)


# --- upstream import -----------------------------------------------------


DEFAULT_COLUMNS = {
    "id": "id",
    "question": "question",
    "ground_truth": "answer",
    "ungrounded": "ungrounded_answer",
    "poor": "poor_answer",
    "facts": "facts",
    "ground_truth_labels": "answer_labels",
    "ungrounded_labels": "ungrounded_answer_labels",
    "poor_labels": "poor_answer_labels",
}


def sha256_file(path: str | os.PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _read_rows(path: Path) -> list[dict[str, Any]]:
    suffix = path.suffix.lower()
    if suffix == ".jsonl":
        with open(path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]
    if suffix == ".json":
        data = json.loads(path.read_text(encoding="utf-8"))
        return data if isinstance(data, list) else data.get("rows") or data.get("data") or []
    if suffix == ".csv":
        with open(path, newline="", encoding="utf-8") as fh:
            return list(csv.DictReader(fh))
    if suffix == ".parquet":
        try:
            import pandas as pd
        except ImportError:
            raise ValidationError("reading parquet exports needs pandas installed") from None
        return pd.read_parquet(path).to_dict(orient="records")
    raise ValidationError(f"unsupported export format {suffix!r}")


def _as_list(value: Any) -> list:
    if isinstance(value, str):
        text = value.strip()
        if text.startswith("["):
            return json.loads(text)
        return [line for line in text.splitlines() if line.strip()]
    if hasattr(value, "tolist"):
        return value.tolist()
    return list(value)


def _as_label(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("true", "1", "yes", "t"):
        return True
    if text in ("false", "0", "no", "f"):
        return False
    raise ValidationError(f"cannot read {value!r} as a True/False label")


def import_upstream(
    path: str | os.PathLike,
    *,
    columns: Mapping[str, str] | None = None,
    expected_sha256: str | None = None,
    source: str = "WikiEvalFacts",
    version: str = "",
) -> DatasetFile:
    """Convert a published tabular export into the canonical dataset form.

    Each row needs the question, three answers, a list of facts and, per
    variant, a list of labels aligned with the facts.  Column names default to
    ``DEFAULT_COLUMNS`` and can be remapped.  Ground-truth labels default to
    all True when that column is absent.
    """
    path = Path(path)
    if expected_sha256:
        actual = sha256_file(path)
        if actual != expected_sha256.lower():
            raise ValidationError(f"{path}: checksum {actual} does not match pinned {expected_sha256}")
    cols = {**DEFAULT_COLUMNS, **(columns or {})}
    records = []
    for n, row in enumerate(_read_rows(path)):
        ident = str(row.get(cols["id"]) or f"q{n:03d}")
        facts = [str(f).strip().lstrip("-").strip() for f in _as_list(row[cols["facts"]])]
        answers = {kind: row[cols[kind.value]] for kind in VARIANT_ORDER}
        labels: dict[tuple[AnswerKind, int], bool] = {}
        for kind in VARIANT_ORDER:
            column = cols[f"{kind.value}_labels"]
            if column not in row and kind is AnswerKind.GROUND_TRUTH:
                values = [True] * len(facts)
            else:
                values = [_as_label(v) for v in _as_list(row[column])]
            if len(values) != len(facts):
                raise ValidationError(f"row {n}: {len(values)} {kind} labels for {len(facts)} facts")
            labels.update({(kind, i): v for i, v in enumerate(values)})
        records.append(
            record_from_dict(
                {
                    "id": ident,
                    "question": row[cols["question"]],
                    "answers": {k.value: v for k, v in answers.items()},
                    "facts": [{"index": i, "text": t} for i, t in enumerate(facts)],
                    "annotations": [
                        {"variant": k.value, "fact": i, "label": v} for (k, i), v in labels.items()
                    ],
                }
            )
        )
    return DatasetFile(tuple(records), source=source, version=version, meta={"imported_from": path.name})


def with_facts(dataset: DatasetFile, facts_by_id: Mapping[str, Sequence[FactStatement]]) -> DatasetFile:
    """Swap in regenerated facts for the given records.

    Ground-truth labels become True, since the facts come from that answer.
    Labels for the other variants are placeholders (False) until annotated
    again; the affected ids are listed under ``meta["unannotated"]``.
    """
    updated = []
    for record in dataset.records:
        facts = facts_by_id.get(record.id)
        if facts is None:
            updated.append(record)
            continue
        labels = {}
        for kind in record.answers:
            for fact in facts:
                labels[(kind, fact.index)] = kind is AnswerKind.GROUND_TRUTH
        updated.append(QARecord(record.id, record.question, record.answers, tuple(facts), labels))
    meta = dict(dataset.meta)
    meta["unannotated"] = sorted(set(meta.get("unannotated", [])) | set(facts_by_id))
    return DatasetFile(tuple(updated), dataset.source, dataset.version, meta)

