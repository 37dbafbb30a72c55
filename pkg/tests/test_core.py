import pytest
from hypothesis import given
from hypothesis import strategies as st

from faaf.core import (
    AnswerKind,
    DuplicateIndex,
    FactStatement,
    FormulationConfig,
    InvalidConfig,
    QARecord,
    ResponseDomain,
    Verdict,
    VerdictMapping,
    check_fact_indices,
    get_formulation,
    make_facts,
    order_variants,
)


def test_fact_statement_rejects_blank_text():
    with pytest.raises(ValueError):
        FactStatement(0, "   ")
    with pytest.raises(ValueError):
        FactStatement(-1, "x")


def test_indices_must_be_contiguous_and_unique():
    check_fact_indices(make_facts(["a", "b", "c"]))
    with pytest.raises(DuplicateIndex):
        check_fact_indices([FactStatement(0, "a"), FactStatement(0, "b")])
    with pytest.raises(InvalidConfig):
        check_fact_indices([FactStatement(0, "a"), FactStatement(2, "b")])


@given(st.sampled_from(list(Verdict)))
def test_default_mapping_is_idempotent(verdict):
    mapping = VerdictMapping()
    assert mapping.apply(mapping.apply(verdict)) is mapping.apply(verdict)


def test_default_mapping_sends_not_clear_to_false():
    assert VerdictMapping().apply(Verdict.NOT_CLEAR) is Verdict.FALSE
    assert VerdictMapping().apply(Verdict.TRUE) is Verdict.TRUE


def test_chained_mapping_rejected():
    with pytest.raises(InvalidConfig):
        VerdictMapping(((Verdict.NOT_CLEAR, Verdict.FALSE), (Verdict.FALSE, Verdict.TRUE)))


def test_template_needs_exactly_one_placeholder():
    with pytest.raises(InvalidConfig):
        FormulationConfig(description_template="no placeholder")
    with pytest.raises(InvalidConfig):
        FormulationConfig(description_template="{fact} and {fact}")


def test_not_clear_label_only_in_tfn_domain():
    assert FormulationConfig().enum_values == ("True", "False")
    tfn = FormulationConfig(response_domain=ResponseDomain.TFN)
    assert tfn.enum_values == ("True", "False", "Not clear from the given passage")
    with pytest.raises(ValueError):
        FormulationConfig().label_to_verdict("Not clear from the given passage")
    assert tfn.label_to_verdict("Not clear from the given passage") is Verdict.NOT_CLEAR


def test_formulation_config_round_trips():
    config = get_formulation("faaf-tfn-cit")
    assert FormulationConfig.from_dict(config.to_dict()) == config


def test_unknown_formulation():
    with pytest.raises(InvalidConfig):
        get_formulation("faaf-xyz")


def test_variant_order_is_fixed():
    assert order_variants(["poor", "ground_truth"]) == (AnswerKind.GROUND_TRUTH, AnswerKind.POOR)
    with pytest.raises(InvalidConfig):
        order_variants([])


def _record(labels):
    return QARecord("q", "Q?", {AnswerKind.GROUND_TRUTH: "A."}, make_facts(["a", "b"]), labels)


def test_ground_truth_labels_must_be_true():
    with pytest.raises(ValueError, match="ground-truth"):
        _record({(AnswerKind.GROUND_TRUTH, 0): True, (AnswerKind.GROUND_TRUTH, 1): False})


def test_every_fact_needs_a_label_per_variant():
    with pytest.raises(ValueError, match="no ground_truth label"):
        _record({(AnswerKind.GROUND_TRUTH, 0): True})
