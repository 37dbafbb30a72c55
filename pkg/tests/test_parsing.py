import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from faaf.constructor import WireDialect, build_fact_function
from faaf.core import FormulationConfig, ResponseDomain, Verdict, make_facts
from faaf.parsing import (
    EnumMismatch,
    FailureReason,
    RawModelOutput,
    UsageRecord,
    WholeResponseUnparseable,
    parse_prompt_response,
    parse_tool_response,
    validate_enum,
)

NOT_CLEAR = "Not clear from the given passage"


def spec(n=3, *, domain=ResponseDomain.TF, citation=False):
    config = FormulationConfig(response_domain=domain, with_citation=citation)
    return build_fact_function(make_facts([f"Fact number {i}." for i in range(n)]), config)


def raw_json(values):
    return RawModelOutput(WireDialect.JSON_TOOL, json.dumps(values))


def test_minimal_valid_response():
    result = parse_tool_response(raw_json({"fact_0": "True"}), spec(1))
    assert result.verdicts == {0: Verdict.TRUE}
    assert result.failures == ()


def test_not_clear_maps_to_false():
    body = {"fact_0": "True", "fact_1": "False", "fact_2": NOT_CLEAR}
    result = parse_tool_response(raw_json(body), spec(3, domain=ResponseDomain.TFN))
    assert result.verdicts == {0: Verdict.TRUE, 1: Verdict.FALSE, 2: Verdict.FALSE}


def test_null_verdict_is_isolated():
    body = {"citation_0": "quote", "fact_0": "True", "citation_1": None, "fact_1": None}
    result = parse_tool_response(raw_json(body), spec(2, citation=True))
    assert result.verdicts == {0: Verdict.TRUE, 1: Verdict.NOT_ANSWERED}
    assert result.failure_reason(1) is FailureReason.NULL_VERDICT
    assert result.citations == {0: "quote"}


def test_lowercase_enum_is_rejected():
    result = parse_tool_response(raw_json({"fact_0": "true"}), spec(1))
    assert result.verdicts == {0: Verdict.NOT_ANSWERED}
    assert result.failure_reason(0) is FailureReason.ENUM_MISMATCH


def test_missing_and_wrong_type_are_recorded():
    result = parse_tool_response(raw_json({"fact_0": True, "fact_2": "False"}), spec(3))
    assert result.failure_reason(0) is FailureReason.WRONG_TYPE
    assert result.failure_reason(1) is FailureReason.MISSING
    assert result.verdicts[2] is Verdict.FALSE


def test_not_clear_label_outside_tfn_is_mismatch():
    result = parse_tool_response(raw_json({"fact_0": NOT_CLEAR}), spec(1))
    assert result.failure_reason(0) is FailureReason.ENUM_MISMATCH


def test_extra_keys_warn_but_do_not_fail(caplog):
    result = parse_tool_response(raw_json({"fact_0": "False", "reasoning": "x"}), spec(1))
    assert result.verdicts == {0: Verdict.FALSE}
    assert "reasoning" in caplog.text


def test_empty_citation_is_absent():
    body = {"citation_0": "", "fact_0": "False"}
    assert parse_tool_response(raw_json(body), spec(1, citation=True)).citations == {}


@pytest.mark.parametrize("body", ["not json", "[1, 2]", '{"fact_0": "True"'])
def test_malformed_json_marks_everything_unanswered(body):
    with pytest.raises(WholeResponseUnparseable) as info:
        parse_tool_response(RawModelOutput(WireDialect.JSON_TOOL, body), spec(3))
    result = info.value.result
    assert result.not_answered == [0, 1, 2]
    assert all(r is FailureReason.UNPARSEABLE for _, r in result.failures)


def test_xml_body_with_surrounding_prose():
    body = (
        "Sure, here is the call.\n<function_calls>\n<invoke>\n<tool_name>FactChecker</tool_name>\n"
        "<parameters>\n<citation_0>It &amp; that</citation_0>\n<fact_0>True</fact_0>\n"
        f"<citation_1></citation_1>\n<fact_1>{NOT_CLEAR}</fact_1>\n</parameters>\n</invoke>\n"
    )
    result = parse_tool_response(
        RawModelOutput(WireDialect.XML_TOOL, body), spec(2, domain=ResponseDomain.TFN, citation=True)
    )
    assert result.verdicts == {0: Verdict.TRUE, 1: Verdict.FALSE}
    assert result.citations == {0: "It & that"}


def test_xml_without_invoke_is_unparseable():
    with pytest.raises(WholeResponseUnparseable):
        parse_tool_response(RawModelOutput(WireDialect.XML_TOOL, "I think fact 0 is True."), spec(1))


def test_xml_empty_verdict_tag_is_null():
    body = "<invoke><tool_name>FactChecker</tool_name><parameters><fact_0></fact_0></parameters></invoke>"
    result = parse_tool_response(RawModelOutput(WireDialect.XML_TOOL, body), spec(1))
    assert result.failure_reason(0) is FailureReason.NULL_VERDICT


values = st.one_of(
    st.sampled_from(["True", "False", NOT_CLEAR, "true", "FALSE", ""]),
    st.none(),
    st.integers(),
    st.booleans(),
    st.text(max_size=10),
)


@given(st.integers(1, 10), st.data())
def test_completeness_and_alphabet(n, data):
    s = spec(n, domain=ResponseDomain.TFN)
    body = {}
    for i in range(n):
        if data.draw(st.booleans()):
            body[f"fact_{i}"] = data.draw(values)
    result = parse_tool_response(raw_json(body), s)
    assert sorted(result.verdicts) == list(range(n))
    assert set(result.verdicts.values()) <= {Verdict.TRUE, Verdict.FALSE, Verdict.NOT_ANSWERED}
    assert len(result.answered) + len(result.not_answered) == n
    assert sorted(i for i, _ in result.failures) == result.not_answered


@given(st.lists(st.sampled_from(["True", "False"]), min_size=1, max_size=10), st.data())
def test_partial_failure_isolation(labels, data):
    s = spec(len(labels))
    body = {f"fact_{i}": v for i, v in enumerate(labels)}
    clean = parse_tool_response(raw_json(body), s)
    victim = data.draw(st.integers(0, len(labels) - 1))
    body[f"fact_{victim}"] = data.draw(st.sampled_from([None, "maybe", 3, "true"]))
    dirty = parse_tool_response(raw_json(body), s)
    changed = [i for i in clean.verdicts if clean.verdicts[i] is not dirty.verdicts[i]]
    assert changed == [victim]
    assert dirty.verdicts[victim] is Verdict.NOT_ANSWERED


@pytest.mark.parametrize(
    "body, expected",
    [
        ("True", Verdict.TRUE),
        ("To determine if the claim is true or false based on the given passage, we...", Verdict.TRUE),
        ("I cannot assess this.", Verdict.NOT_ANSWERED),
        ("FALSE. The passage says otherwise.", Verdict.FALSE),
        ("The claim is untrue.", Verdict.NOT_ANSWERED),
        ("Answer: false, not true", Verdict.FALSE),
    ],
)
def test_word_match(body, expected):
    assert parse_prompt_response(body) is expected


@given(st.text())
def test_word_match_is_total(body):
    assert parse_prompt_response(body) in {Verdict.TRUE, Verdict.FALSE, Verdict.NOT_ANSWERED}


def test_validate_enum():
    assert validate_enum("False", ["True", "False"]) == "False"
    with pytest.raises(EnumMismatch):
        validate_enum("FALSE", ["True", "False"])
    assert validate_enum(NOT_CLEAR, ["True", "False", NOT_CLEAR]) == NOT_CLEAR
    with pytest.raises(ValueError):
        validate_enum("True", [])


def test_usage_arithmetic():
    total = UsageRecord.total([UsageRecord(100, 20), UsageRecord(50, 10)])
    assert (total.prompt_tokens, total.completion_tokens, total.total_tokens, total.call_count) == (150, 30, 180, 2)
    assert UsageRecord.total([]).total_tokens == 0
    with pytest.raises(ValueError):
        UsageRecord(-1, 0)
