import pytest
from hypothesis import given
from hypothesis import strategies as st

from faaf.core import FactStatement
from faaf.facts import (
    FACT_GENERATION_PROMPT,
    FactGenRequest,
    GenerationEmpty,
    fact_generation_prompt,
    generate_facts,
    parse_dash_list,
)
from faaf.gateway import BackendDescriptor, BackendKind, Gateway
from faaf.gateway.mock import MockScriptedBackend

from conftest import FIXTURES

SRI_LANKA_Q = "What factors contributed to the Sri Lankan economic crisis?"


@pytest.mark.parametrize(
    "body, expected",
    [
        ("- X\n- Y", ["X", "Y"]),
        ("Here are facts:\n- X\n\nnotes", ["X"]),
        ("-X\n - Y ", ["X", "Y"]),
        ("1. numbered\n* star\n- dash", ["dash"]),
        ("-\n- \n- kept", ["kept"]),
        ("- same\n- same", ["same", "same"]),
        ("", []),
    ],
)
def test_parse_dash_list(body, expected):
    assert parse_dash_list(body) == expected


@given(st.lists(st.text(alphabet=st.characters(blacklist_categories=("Cs", "Cc", "Zl", "Zp")), min_size=1, max_size=30)
                .filter(lambda s: s.strip()), max_size=10))
def test_parse_dash_list_preserves_order(items):
    body = "\n".join(f"- {item}" for item in items)
    assert parse_dash_list(body) == [item.strip() for item in items]


def test_prompt_substitution():
    prompt = fact_generation_prompt("Why?", "Because [question] appears here.")
    assert "Passage: Because [question] appears here." in prompt
    assert prompt.endswith("Question: Why?")
    assert prompt.startswith("Convert the given passage into a list of short facts")
    assert 'Add a "-" before each fact.' in FACT_GENERATION_PROMPT


def scripted_gateway(entries=None):
    descriptor = BackendDescriptor(
        BackendKind.MOCK_SCRIPTED, options={"fixture": str(FIXTURES / "scripted_sri_lanka.jsonl")}
    )
    return Gateway(MockScriptedBackend(descriptor, entries))


def test_sri_lanka_generation():
    facts = generate_facts(FactGenRequest(SRI_LANKA_Q, "The Sri Lankan economic crisis was caused by ..."), scripted_gateway())
    assert len(facts) == 6
    assert facts[0] == FactStatement(
        0, "Tax cuts and money creation by the government contributed to the Sri Lankan economic crisis."
    )
    assert [f.index for f in facts] == list(range(6))


def test_two_line_generation():
    facts = generate_facts(FactGenRequest("Q?", "Passage."), scripted_gateway([{"body": "- A.\n- B."}]))
    assert facts == [FactStatement(0, "A."), FactStatement(1, "B.")]


def test_generation_empty():
    with pytest.raises(GenerationEmpty):
        generate_facts(FactGenRequest("Q?", "Passage."), scripted_gateway([{"body": "I cannot help with that."}]))


def test_request_validation():
    with pytest.raises(ValueError):
        FactGenRequest(" ", "passage")
