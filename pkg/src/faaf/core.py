"""Shared domain types for fact verification."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

DEFAULT_NOT_CLEAR_LABEL = "Not clear from the given passage"
DEFAULT_DESCRIPTION_TEMPLATE = "It is clear from the passage that {fact}"
ENUM_INSTRUCTION = "Respond by using one of the accepted Enum types."
DEFAULT_FUNCTION_TITLE = "FactChecker"


class FaafError(Exception):
    """Base class for all errors raised by this package."""


class InvalidConfig(FaafError, ValueError):
    pass


class EmptyFactSet(FaafError, ValueError):
    pass


class DuplicateIndex(FaafError, ValueError):
    pass


class Verdict(str, Enum):
    TRUE = "True"
    FALSE = "False"
    NOT_CLEAR = "NotClear"
    NOT_ANSWERED = "NotAnswered"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def from_bool(cls, value: bool) -> "Verdict":
        return cls.TRUE if value else cls.FALSE

    @property
    def answered(self) -> bool:
        return self is not Verdict.NOT_ANSWERED


class ResponseDomain(str, Enum):
    """Accepted verdict alphabet: True/False, or True/False/NotClear."""

    TF = "TF"
    TFN = "TFN"


class AnswerKind(str, Enum):
    GROUND_TRUTH = "ground_truth"
    UNGROUNDED = "ungrounded"
    POOR = "poor"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, value: "str | AnswerKind") -> "AnswerKind":
        if isinstance(value, AnswerKind):
            return value
        key = value.strip().lower().replace("-", "_")
        aliases = {"gt": "ground_truth", "answer": "ground_truth", "groundtruth": "ground_truth"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise InvalidConfig(f"unknown answer variant: {value!r}") from None


# Fixed evaluation order for reproducible run artifacts.
VARIANT_ORDER: tuple[AnswerKind, ...] = (
    AnswerKind.GROUND_TRUTH,
    AnswerKind.UNGROUNDED,
    AnswerKind.POOR,
)


def order_variants(variants: Iterable["AnswerKind | str"]) -> tuple[AnswerKind, ...]:
    chosen = {AnswerKind.parse(v) for v in variants}
    if not chosen:
        raise InvalidConfig("at least one answer variant is required")
    return tuple(v for v in VARIANT_ORDER if v in chosen)


@dataclass(frozen=True)
class FactStatement:
    index: int
    text: str

    def __post_init__(self) -> None:
        if not isinstance(self.index, int) or isinstance(self.index, bool) or self.index < 0:
            raise ValueError(f"fact index must be a non-negative integer, got {self.index!r}")
        if not isinstance(self.text, str) or not self.text.strip():
            raise ValueError(f"fact {self.index} has empty text")


def make_facts(texts: Iterable[str]) -> tuple[FactStatement, ...]:
    return tuple(FactStatement(i, t) for i, t in enumerate(texts))


def check_fact_indices(facts: Iterable[FactStatement]) -> None:
    """Raise unless fact indices are exactly ``0..n-1`` without repeats."""
    indices = [f.index for f in facts]
    seen: set[int] = set()
    for index in indices:
        if index in seen:
            raise DuplicateIndex(f"duplicate fact index {index}")
        seen.add(index)
    if sorted(indices) != list(range(len(indices))):
        raise InvalidConfig(f"fact indices must be contiguous from 0, got {sorted(indices)}")


@dataclass(frozen=True)
class VerdictMapping:
    """Post-invocation rewrite of verdicts, e.g. NotClear -> False.

    Targets may not themselves be mapped, which keeps the rule idempotent.
    """

    rules: tuple[tuple[Verdict, Verdict], ...] = ((Verdict.NOT_CLEAR, Verdict.FALSE),)

    def __post_init__(self) -> None:
        sources = {s for s, _ in self.rules}
        if len(sources) != len(self.rules):
            raise InvalidConfig("verdict mapping has repeated source verdicts")
        for _, target in self.rules:
            if target in sources:
                raise InvalidConfig(f"mapping target {target} is itself remapped")
        if any(Verdict.NOT_ANSWERED in pair for pair in self.rules):
            raise InvalidConfig("NotAnswered cannot take part in a verdict mapping")

    def apply(self, verdict: Verdict) -> Verdict:
        for source, target in self.rules:
            if verdict is source:
                return target
        return verdict

    def to_dict(self) -> dict[str, str]:
        return {s.value: t.value for s, t in self.rules}

    @classmethod
    def from_dict(cls, data: Mapping[str, str]) -> "VerdictMapping":
        return cls(tuple((Verdict(s), Verdict(t)) for s, t in data.items()))


IDENTITY_MAPPING = VerdictMapping(())


@dataclass(frozen=True)
class FormulationConfig:
    """Control parameters for building a fact-checking function object."""

    response_domain: ResponseDomain = ResponseDomain.TF
    with_citation: bool = False
    description_template: str = DEFAULT_DESCRIPTION_TEMPLATE
    not_clear_label: str = DEFAULT_NOT_CLEAR_LABEL
    mapping: VerdictMapping = field(default_factory=VerdictMapping)
    function_title: str = DEFAULT_FUNCTION_TITLE
    citation_template: str = (
        "Provide an exact excerpt from the passage which directly supports the fact: {fact}. "
        "If no supporting excerpt exists, leave this empty."
    )
    # Soft limit only: large fact sets may overflow a model's context.
    max_facts_warning: int = 25

    def __post_init__(self) -> None:
        if self.description_template.count("{fact}") != 1:
            raise InvalidConfig("description_template must contain exactly one {fact} placeholder")
        if self.citation_template.count("{fact}") != 1:
            raise InvalidConfig("citation_template must contain exactly one {fact} placeholder")
        if not self.not_clear_label or self.not_clear_label in ("True", "False"):
            raise InvalidConfig(f"invalid not_clear_label {self.not_clear_label!r}")
        if not self.function_title:
            raise InvalidConfig("function_title must be non-empty")

    @property
    def enum_values(self) -> tuple[str, ...]:
        if self.response_domain is ResponseDomain.TFN:
            return ("True", "False", self.not_clear_label)
        return ("True", "False")

    def label_to_verdict(self, label: str) -> Verdict:
        if label == "True":
            return Verdict.TRUE
        if label == "False":
            return Verdict.FALSE
        if self.response_domain is ResponseDomain.TFN and label == self.not_clear_label:
            return Verdict.NOT_CLEAR
        raise ValueError(f"{label!r} is not in the response domain")

    def to_dict(self) -> dict:
        return {
            "response_domain": self.response_domain.value,
            "with_citation": self.with_citation,
            "description_template": self.description_template,
            "not_clear_label": self.not_clear_label,
            "mapping": self.mapping.to_dict(),
            "function_title": self.function_title,
            "citation_template": self.citation_template,
            "max_facts_warning": self.max_facts_warning,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "FormulationConfig":
        data = dict(data)
        data["response_domain"] = ResponseDomain(data["response_domain"])
        data["mapping"] = VerdictMapping.from_dict(data.get("mapping", {}))
        return cls(**data)


@dataclass(frozen=True)
class PromptBaseline:
    """Per-fact natural-language prompting, parsed by word matching."""

    template: str = "Passage: {answer}\n\nConsidering the given passage, the claim {fact} is True or False?"

    def render(self, answer: str, fact: str) -> str:
        return self.template.replace("{answer}", answer).replace("{fact}", fact)

    def to_dict(self) -> dict:
        return {"template": self.template}


FORMULATIONS: dict[str, FormulationConfig | PromptBaseline] = {
    "prompt-tf": PromptBaseline(),
    "faaf-tf": FormulationConfig(),
    "faaf-tfn": FormulationConfig(response_domain=ResponseDomain.TFN),
    "faaf-tf-cit": FormulationConfig(with_citation=True),
    "faaf-tfn-cit": FormulationConfig(response_domain=ResponseDomain.TFN, with_citation=True),
}

FORMULATION_LABELS = {
    "prompt-tf": "Prompt(T/F)",
    "faaf-tf": "FaaF(T/F)",
    "faaf-tfn": "FaaF(T/F/N)",
    "faaf-tf-cit": "FaaF(T/F)+citation",
    "faaf-tfn-cit": "FaaF(T/F/N)+citation",
}


def get_formulation(formulation_id: str) -> FormulationConfig | PromptBaseline:
    try:
        return FORMULATIONS[formulation_id]
    except KeyError:
        raise InvalidConfig(
            f"unknown formulation {formulation_id!r}; expected one of {', '.join(FORMULATIONS)}"
        ) from None


@dataclass(frozen=True)
class AnswerVariant:
    kind: AnswerKind
    text: str

    def __post_init__(self) -> None:
        if not self.text or not self.text.strip():
            raise ValueError(f"{self.kind} answer text is empty")


@dataclass(frozen=True)
class QARecord:
    """A question with its answer variants, derived facts and human labels.

    ``gold_labels`` is keyed by ``(variant, fact index)``; labels are binary.
    """

    id: str
    question: str
    answers: Mapping[AnswerKind, str]
    facts: tuple[FactStatement, ...]
    gold_labels: Mapping[tuple[AnswerKind, int], bool]

    def __post_init__(self) -> None:
        object.__setattr__(self, "facts", tuple(self.facts))
        object.__setattr__(self, "answers", {AnswerKind.parse(k): v for k, v in self.answers.items()})
        object.__setattr__(
            self, "gold_labels", {(AnswerKind.parse(k), i): bool(v) for (k, i), v in self.gold_labels.items()}
        )
        for kind, text in self.answers.items():
            AnswerVariant(kind, text)
        if self.facts:
            check_fact_indices(self.facts)
        for kind in self.answers:
            missing = [f.index for f in self.facts if (kind, f.index) not in self.gold_labels]
            if missing:
                raise ValueError(f"record {self.id}: no {kind} label for facts {missing}")
        for (kind, index) in self.gold_labels:
            if kind not in self.answers or index >= len(self.facts):
                raise ValueError(f"record {self.id}: label for unknown cell ({kind}, {index})")
        gt = AnswerKind.GROUND_TRUTH
        if gt in self.answers and not all(self.gold_labels[(gt, f.index)] for f in self.facts):
            raise ValueError(f"record {self.id}: ground-truth facts must all be labelled True")

    def answer(self, kind: AnswerKind) -> str:
        try:
            return self.answers[kind]
        except KeyError:
            raise InvalidConfig(f"record {self.id} has no {kind} answer") from None

    def gold(self, kind: AnswerKind) -> dict[int, bool]:
        return {f.index: self.gold_labels[(kind, f.index)] for f in self.facts}
