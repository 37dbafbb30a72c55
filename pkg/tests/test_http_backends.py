import json

import httpx
import pytest

from faaf.constructor import WireDialect, build_fact_function, serialize_spec
from faaf.core import FormulationConfig, ResponseDomain, Verdict, make_facts
from faaf.gateway import AuthError, BackendDescriptor, BackendKind, ModelRequest, RequestMode, TransportError
from faaf.gateway.http import AnthropicXmlBackend, OpenAIToolsBackend
from faaf.gateway.prompts import XML_TOOL_SYSTEM_PROMPT
from faaf.parsing import parse_tool_response

from conftest import FIXTURES

TFN = FormulationConfig(response_domain=ResponseDomain.TFN)
SPEC = build_fact_function(make_facts(["The bridge is red.", "The bridge opened in 1932."]), TFN)


def fixture(name):
    return json.loads((FIXTURES / name).read_text())


def transport(responses, seen):
    queue = list(responses)

    def handler(request: httpx.Request) -> httpx.Response:
        seen.append(request)
        status, body = queue.pop(0)
        if isinstance(body, Exception):
            raise body
        return httpx.Response(status, json=body)

    return httpx.Client(transport=httpx.MockTransport(handler))


@pytest.fixture
def keys(monkeypatch):
    monkeypatch.setenv("OPENAI_API_KEY", "sk-test")
    monkeypatch.setenv("ANTHROPIC_API_KEY", "ak-test")


def openai(responses, seen, **kw):
    descriptor = BackendDescriptor(BackendKind.HTTP_JSON_TOOLS, model_id="gpt-4-turbo")
    return OpenAIToolsBackend(descriptor, transport(responses, seen), sleep=lambda s: None, **kw)


def anthropic(responses, seen):
    descriptor = BackendDescriptor(BackendKind.HTTP_XML_TOOLS, model_id="claude-3-opus-20240229")
    return AnthropicXmlBackend(descriptor, transport(responses, seen), sleep=lambda s: None)


def tool_request(dialect, system=""):
    return ModelRequest(
        RequestMode.TOOL_CALL, "Passage: x", system_prompt=system, tool_schema=serialize_spec(SPEC, dialect)
    )


def test_openai_tool_call(keys):
    seen = []
    backend = openai([(200, fixture("openai_tool_call_response.json"))], seen)
    out = backend.send(tool_request(WireDialect.JSON_TOOL, "You are a helpful assistant."))
    assert out.body == '{"fact_0":"True","fact_1":"False"}'
    assert (out.usage.prompt_tokens, out.usage.completion_tokens, out.usage.call_count) == (231, 17, 1)

    sent = json.loads(seen[0].content)
    assert seen[0].headers["authorization"] == "Bearer sk-test"
    assert sent["model"] == "gpt-4-turbo" and sent["temperature"] == 0.0
    assert sent["messages"][0] == {"role": "system", "content": "You are a helpful assistant."}
    assert sent["tools"][0]["function"]["name"] == "FactChecker"
    assert sent["tools"][0]["function"]["parameters"]["required"] == ["fact_0", "fact_1"]
    assert sent["tool_choice"] == {"type": "function", "function": {"name": "FactChecker"}}
    assert parse_tool_response(out, SPEC).verdicts == {0: Verdict.TRUE, 1: Verdict.FALSE}


def test_openai_prompt(keys):
    seen = []
    out = openai([(200, fixture("openai_prompt_response.json"))], seen).send(ModelRequest(RequestMode.PROMPT, "q"))
    assert out.dialect is WireDialect.PLAIN_TEXT
    assert out.body.startswith("False.")
    assert "tools" not in json.loads(seen[0].content)


def test_anthropic_xml_tool_call(keys):
    seen = []
    backend = anthropic([(200, fixture("anthropic_xml_tool_response.json"))], seen)
    out = backend.send(tool_request(WireDialect.XML_TOOL, XML_TOOL_SYSTEM_PROMPT))
    assert (out.usage.prompt_tokens, out.usage.completion_tokens) == (512, 61)
    assert parse_tool_response(out, SPEC).verdicts == {0: Verdict.TRUE, 1: Verdict.FALSE}

    sent = json.loads(seen[0].content)
    assert seen[0].headers["x-api-key"] == "ak-test"
    assert seen[0].headers["anthropic-version"] == "2023-06-01"
    assert sent["stop_sequences"] == ["</function_calls>"]
    assert sent["system"].startswith(XML_TOOL_SYSTEM_PROMPT)
    assert "<tool_name>FactChecker</tool_name>" in sent["system"]


@pytest.mark.parametrize("status", [503, 429])
def test_transport_retries_then_succeeds(keys, status):
    seen = []
    backend = openai([(status, {"error": "busy"}), (200, fixture("openai_prompt_response.json"))], seen)
    assert backend.send(ModelRequest(RequestMode.PROMPT, "q")).body.startswith("False")
    assert len(seen) == 2


def test_connection_errors_retry_with_backoff(keys):
    seen, delays = [], []
    descriptor = BackendDescriptor(BackendKind.HTTP_JSON_TOOLS, model_id="m")
    err = httpx.ConnectError("refused")
    backend = OpenAIToolsBackend(
        descriptor, transport([(0, err)] * 4, seen), sleep=delays.append, backoff_s=0.5
    )
    with pytest.raises(TransportError, match="after 4 attempts"):
        backend.send(ModelRequest(RequestMode.PROMPT, "q"))
    assert delays == [0.5, 1.0, 2.0]


def test_client_errors_do_not_retry(keys):
    seen = []
    with pytest.raises(TransportError):
        openai([(400, {"error": "bad"})], seen).send(ModelRequest(RequestMode.PROMPT, "q"))
    assert len(seen) == 1


def test_auth_failure(keys):
    seen = []
    with pytest.raises(AuthError):
        openai([(401, {"error": "no"})], seen).send(ModelRequest(RequestMode.PROMPT, "q"))
    assert len(seen) == 1


def test_missing_credential(monkeypatch):
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    seen = []
    with pytest.raises(AuthError, match="OPENAI_API_KEY"):
        openai([], seen).send(ModelRequest(RequestMode.PROMPT, "q"))
    assert seen == []


def test_credentials_never_enter_identity(keys):
    descriptor = BackendDescriptor(BackendKind.HTTP_JSON_TOOLS, model_id="m", credential_env="OPENAI_API_KEY")
    assert "sk-test" not in json.dumps(descriptor.identity()) + json.dumps(descriptor.to_dict())
