"""Derive fact statements from a question and its reference answer."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from faaf.core import FaafError, FactStatement, make_facts
from faaf.gateway import Gateway, ModelRequest, RequestMode, default_system_prompt

logger = logging.getLogger(__name__)

FACT_GENERATION_PROMPT = """\
Convert the given passage into a list of short facts which specifically answer the given question.

Make sure that the facts can be found in the given passage.

The facts should be coherent and succinct sentences with clear and simple syntax.

Do not use pronouns as the subject or object in the syntax of each fact.

The facts should be independent to each other.

Do not create facts from the passage which are not answering the given question.

Add a "-" before each fact.

Passage: [ground truth answer]

Question: [question]"""


class GenerationEmpty(FaafError):
    pass


@dataclass(frozen=True)
class FactGenRequest:
    question: str
    passage: str

    def __post_init__(self) -> None:
        if not self.question.strip() or not self.passage.strip():
            raise ValueError("question and passage must both be non-empty")


def fact_generation_prompt(question: str, passage: str) -> str:
    # Substitute the passage last so a literal "[question]" inside it survives.
    return FACT_GENERATION_PROMPT.replace("[question]", question).replace("[ground truth answer]", passage)


_OTHER_LIST_RE = re.compile(r"^(\d+[.)]|[*•])\s+")


def parse_dash_list(body: str) -> list[str]:
    facts = []
    for line in body.splitlines():
        stripped = line.strip()
        if stripped.startswith("-"):
            text = stripped[1:].strip()
            if text:
                facts.append(text)
        elif _OTHER_LIST_RE.match(stripped):
            logger.info("ignoring non-dash list line: %r", stripped[:60])
    return facts


def generate_facts(req: FactGenRequest, gateway: Gateway, *, model_id: str | None = None) -> list[FactStatement]:
    """Ask the generator model for facts and parse its dash list.

    Raises:
        GenerationEmpty: the response contained no dash lines.
    """
    request = ModelRequest(
        mode=RequestMode.PROMPT,
        user_prompt=fact_generation_prompt(req.question, req.passage),
        system_prompt=default_system_prompt(gateway.descriptor, RequestMode.PROMPT),
        model_id=model_id if model_id is not None else gateway.descriptor.model_id,
    )
    output = gateway.complete(request)
    texts = parse_dash_list(output.body)
    if not texts:
        raise GenerationEmpty("generator response contained no '-' fact lines")
    return list(make_facts(texts))
