"""Build fact-checking function objects and serialize them as tool descriptions.

``build_fact_function`` turns a list of facts plus a ``FormulationConfig`` into a
``FactFunctionSpec`` with one enum-typed verdict argument per fact (and, when
requested, a free-text citation argument placed before it).  ``serialize_spec``
renders that object either as a JSON-schema style tool description or as the
tag-based XML tool description used by XML-prompted backends.
"""

from __future__ import annotations

import json
import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from faaf.core import (
    ENUM_INSTRUCTION,
    EmptyFactSet,
    FactStatement,
    FaafError,
    FormulationConfig,
    InvalidConfig,
    VerdictMapping,
    check_fact_indices,
)

logger = logging.getLogger(__name__)


class UnsupportedDialect(FaafError, ValueError):
    pass


class WireDialect(str, Enum):
    JSON_TOOL = "json_tool"
    XML_TOOL = "xml_tool"
    PLAIN_TEXT = "plain_text"

    def __str__(self) -> str:
        return self.value


class ArgumentKind(str, Enum):
    VERDICT = "verdict"
    CITATION = "citation"


def verdict_arg_name(index: int) -> str:
    return f"fact_{index}"


def citation_arg_name(index: int) -> str:
    return f"citation_{index}"


@dataclass(frozen=True)
class ArgumentSpec:
    name: str
    description: str
    kind: ArgumentKind
    fact_index: int
    # None means free string (citations); null is tolerated on those.
    enum: tuple[str, ...] | None = None

    @property
    def nullable(self) -> bool:
        return self.kind is ArgumentKind.CITATION


@dataclass(frozen=True)
class FactFunctionSpec:
    title: str
    arguments: tuple[ArgumentSpec, ...]
    required: tuple[str, ...]
    config: FormulationConfig = field(repr=False)

    @property
    def post_mapping(self) -> VerdictMapping:
        return self.config.mapping

    @property
    def fact_indices(self) -> tuple[int, ...]:
        return tuple(a.fact_index for a in self.arguments if a.kind is ArgumentKind.VERDICT)

    def verdict_arguments(self) -> list[ArgumentSpec]:
        return [a for a in self.arguments if a.kind is ArgumentKind.VERDICT]

    def citation_arguments(self) -> list[ArgumentSpec]:
        return [a for a in self.arguments if a.kind is ArgumentKind.CITATION]

    def argument(self, name: str) -> ArgumentSpec:
        for arg in self.arguments:
            if arg.name == name:
                return arg
        raise KeyError(name)


@dataclass(frozen=True)
class WireSchema:
    dialect: WireDialect
    payload: str


def _sentence(text: str) -> str:
    text = text.strip()
    return text if text.endswith((".", "!", "?")) else text + "."


def verdict_description(fact: str, config: FormulationConfig) -> str:
    framed = config.description_template.replace("{fact}", fact.strip())
    return f"{_sentence(framed)} {ENUM_INSTRUCTION}"


def citation_description(fact: str, config: FormulationConfig) -> str:
    return config.citation_template.replace("{fact}", fact.strip().rstrip("."))


def build_fact_function(facts: Sequence[FactStatement], config: FormulationConfig) -> FactFunctionSpec:
    """Construct the function object for ``facts`` under ``config``.

    Raises:
        EmptyFactSet: no facts were given.
        DuplicateIndex: two facts share an index.
    """
    if not facts:
        raise EmptyFactSet("cannot build a fact function from an empty fact set")
    check_fact_indices(facts)
    if len(facts) > config.max_facts_warning:
        logger.warning(
            "function object has %d facts (soft limit %d); the request may exceed the model context",
            len(facts),
            config.max_facts_warning,
        )
    ordered = sorted(facts, key=lambda f: f.index)
    arguments: list[ArgumentSpec] = []
    for fact in ordered:
        if config.with_citation:
            arguments.append(
                ArgumentSpec(
                    name=citation_arg_name(fact.index),
                    description=citation_description(fact.text, config),
                    kind=ArgumentKind.CITATION,
                    fact_index=fact.index,
                )
            )
        arguments.append(
            ArgumentSpec(
                name=verdict_arg_name(fact.index),
                description=verdict_description(fact.text, config),
                kind=ArgumentKind.VERDICT,
                fact_index=fact.index,
                enum=config.enum_values,
            )
        )
    required = [verdict_arg_name(f.index) for f in ordered]
    if config.with_citation:
        required += [citation_arg_name(f.index) for f in ordered]
    return FactFunctionSpec(
        title=config.function_title,
        arguments=tuple(arguments),
        required=tuple(required),
        config=config,
    )


def _json_tree(spec: FactFunctionSpec) -> dict:
    properties: dict[str, dict] = {}
    for arg in spec.arguments:
        prop: dict = {"description": arg.description}
        if arg.enum is not None:
            prop["enum"] = list(arg.enum)
        prop["type"] = "string"
        properties[arg.name] = prop
    return {
        "properties": properties,
        "required": list(spec.required),
        "title": spec.title,
        "type": "object",
    }


def _xml_tree(spec: FactFunctionSpec) -> ET.Element:
    root = ET.Element("tool_description")
    ET.SubElement(root, "tool_name").text = spec.title
    params = ET.SubElement(root, "parameters")
    for arg in spec.arguments:
        param = ET.SubElement(params, "parameter")
        ET.SubElement(param, "name").text = arg.name
        ET.SubElement(param, "type").text = "string"
        ET.SubElement(param, "description").text = arg.description
        if arg.enum is not None:
            if any("," in value for value in arg.enum):
                raise InvalidConfig(f"enum values of {arg.name} contain a comma; not representable in XML")
            ET.SubElement(param, "enum").text = ",".join(arg.enum)
    return root


def spec_to_json_schema(spec: FactFunctionSpec) -> dict:
    """Return the JSON tool description as a plain dict (for embedding in API requests)."""
    return _json_tree(spec)


def serialize_spec(spec: FactFunctionSpec, dialect: WireDialect | str) -> WireSchema:
    try:
        dialect = WireDialect(dialect)
    except ValueError:
        raise UnsupportedDialect(f"unsupported dialect {dialect!r}") from None
    if dialect is WireDialect.JSON_TOOL:
        payload = json.dumps(_json_tree(spec), ensure_ascii=False)
    elif dialect is WireDialect.XML_TOOL:
        payload = ET.tostring(_xml_tree(spec), encoding="unicode")
    else:
        raise UnsupportedDialect(f"{dialect} is not a tool dialect")
    return WireSchema(dialect, payload)


@dataclass(frozen=True)
class ParsedArgument:
    name: str
    description: str
    enum: tuple[str, ...] | None


@dataclass(frozen=True)
class ParsedSchema:
    """Dialect-neutral view of a serialized tool description."""

    title: str
    arguments: tuple[ParsedArgument, ...]
    required: tuple[str, ...] | None


def parse_wire_schema(schema: WireSchema) -> ParsedSchema:
    """Read a serialized tool description back into a generic tree.

    The XML dialect does not carry a ``required`` list, so ``required`` is
    ``None`` for it.
    """
    if schema.dialect is WireDialect.JSON_TOOL:
        tree = json.loads(schema.payload)
        args = tuple(
            ParsedArgument(name, prop["description"], tuple(prop["enum"]) if "enum" in prop else None)
            for name, prop in tree["properties"].items()
        )
        return ParsedSchema(tree["title"], args, tuple(tree["required"]))
    if schema.dialect is WireDialect.XML_TOOL:
        root = ET.fromstring(schema.payload)
        if root.tag != "tool_description":
            raise ValueError(f"unexpected root element <{root.tag}>")
        parsed: list[ParsedArgument] = []
        for param in root.iterfind("./parameters/parameter"):
            enum_text = param.findtext("enum")
            parsed.append(
                ParsedArgument(
                    param.findtext("name", ""),
                    param.findtext("description", ""),
                    tuple(enum_text.split(",")) if enum_text is not None else None,
                )
            )
        return ParsedSchema(root.findtext("tool_name", ""), tuple(parsed), None)
    raise UnsupportedDialect(f"{schema.dialect} is not a tool dialect")


def fact_texts_from_schema(parsed: ParsedSchema, known_facts: Iterable[str]) -> dict[int, str]:
    """Map verdict-argument indices to whichever known fact their description embeds.

    Longest match wins so that a fact which is a prefix of another is not
    mistaken for it.
    """
    candidates = sorted({f.strip() for f in known_facts}, key=len, reverse=True)
    found: dict[int, str] = {}
    for arg in parsed.arguments:
        if not arg.name.startswith("fact_"):
            continue
        index = int(arg.name.removeprefix("fact_"))
        for fact in candidates:
            if fact in arg.description:
                found[index] = fact
                break
    return found
