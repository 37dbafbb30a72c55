"""Live chat-completion backends.

``OpenAIToolsBackend`` speaks the chat-completions API with native JSON tools
and forces a call to the fact-checking function.  ``AnthropicXmlBackend`` talks
to the messages API and describes the tool in the system prompt, expecting an
XML ``<invoke>`` block back.

Only transport failures (connection errors, 429 and 5xx) are retried; a
response that arrives but is malformed is returned as-is for the parser.
"""

from __future__ import annotations

import json
import logging
import os
import time
from typing import Any, Callable

import httpx

from faaf.constructor import WireDialect
from faaf.gateway.prompts import xml_tools_block
from faaf.gateway.types import (
    AuthError,
    BackendDescriptor,
    BackendKind,
    InvalidConfig,
    ModelRequest,
    RequestMode,
    TransportError,
)
from faaf.parsing import RawModelOutput, UsageRecord

logger = logging.getLogger(__name__)

OPENAI_ENDPOINT = "https://api.openai.com/v1/chat/completions"
ANTHROPIC_ENDPOINT = "https://api.anthropic.com/v1/messages"
ANTHROPIC_VERSION = "2023-06-01"

_RETRY_STATUS = {408, 409, 429, 500, 502, 503, 504, 529}


class _HttpBackend:
    default_endpoint = ""
    default_credential_env = ""

    def __init__(
        self,
        descriptor: BackendDescriptor,
        client: httpx.Client | None = None,
        *,
        max_retries: int | None = None,
        backoff_s: float | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.descriptor = descriptor
        self.endpoint = descriptor.endpoint or self.default_endpoint
        self.credential_env = descriptor.credential_env or self.default_credential_env
        self.max_retries = int(descriptor.options.get("max_retries", 3) if max_retries is None else max_retries)
        self.backoff_s = float(descriptor.options.get("backoff_s", 1.0) if backoff_s is None else backoff_s)
        self._sleep = sleep
        self._client = client or httpx.Client(timeout=float(descriptor.options.get("timeout_s", 120)))

    @property
    def dialect(self) -> WireDialect:
        return self.descriptor.tool_dialect

    def _api_key(self) -> str:
        key = os.environ.get(self.credential_env, "")
        if not key:
            raise AuthError(f"environment variable {self.credential_env} is not set")
        return key

    def _headers(self) -> dict[str, str]:
        raise NotImplementedError

    def _post(self, payload: dict[str, Any]) -> tuple[dict[str, Any], int]:
        headers = self._headers()
        attempt = 0
        while True:
            started = time.perf_counter()
            try:
                response = self._client.post(self.endpoint, json=payload, headers=headers)
            except httpx.TransportError as exc:
                error: str = f"{type(exc).__name__}: {exc}"
            else:
                if response.status_code in (401, 403):
                    raise AuthError(f"{self.endpoint} rejected credentials ({response.status_code})")
                if response.status_code < 400:
                    try:
                        data = response.json()
                    except ValueError as exc:
                        raise TransportError(f"non-JSON response from {self.endpoint}: {exc}") from None
                    return data, int((time.perf_counter() - started) * 1000)
                error = f"HTTP {response.status_code}: {response.text[:200]}"
                if response.status_code not in _RETRY_STATUS:
                    raise TransportError(error)
            if attempt >= self.max_retries:
                raise TransportError(f"{error} (after {attempt + 1} attempts)")
            delay = self.backoff_s * 2**attempt
            logger.info("transport failure (%s); retrying in %.1fs", error, delay)
            self._sleep(delay)
            attempt += 1


class OpenAIToolsBackend(_HttpBackend):
    default_endpoint = OPENAI_ENDPOINT
    default_credential_env = "OPENAI_API_KEY"

    def _headers(self) -> dict[str, str]:
        return {"Authorization": f"Bearer {self._api_key()}", "Content-Type": "application/json"}

    def build_payload(self, request: ModelRequest) -> dict[str, Any]:
        messages = []
        if request.system_prompt:
            messages.append({"role": "system", "content": request.system_prompt})
        messages.append({"role": "user", "content": request.user_prompt})
        payload: dict[str, Any] = {
            "model": request.model_id or self.descriptor.model_id,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        if request.mode is RequestMode.TOOL_CALL:
            assert request.tool_schema is not None
            if request.tool_schema.dialect is not WireDialect.JSON_TOOL:
                raise InvalidConfig("JSON-tool backend needs a json_tool schema")
            schema = json.loads(request.tool_schema.payload)
            name = schema["title"]
            payload["tools"] = [{"type": "function", "function": {"name": name, "parameters": schema}}]
            payload["tool_choice"] = {"type": "function", "function": {"name": name}}
        return payload

    def send(self, request: ModelRequest) -> RawModelOutput:
        data, latency = self._post(self.build_payload(request))
        try:
            message = data["choices"][0]["message"]
        except (KeyError, IndexError, TypeError):
            raise TransportError("chat completion response has no choices") from None
        usage_data = data.get("usage") or {}
        usage = UsageRecord(
            int(usage_data.get("prompt_tokens", 0)),
            int(usage_data.get("completion_tokens", 0)),
            latency,
            1,
        )
        if request.mode is RequestMode.PROMPT:
            return RawModelOutput(WireDialect.PLAIN_TEXT, message.get("content") or "", usage)
        calls = message.get("tool_calls") or []
        # No tool call means the model answered in prose; the parser will reject it.
        body = calls[0]["function"]["arguments"] if calls else (message.get("content") or "")
        return RawModelOutput(WireDialect.JSON_TOOL, body, usage)


class AnthropicXmlBackend(_HttpBackend):
    default_endpoint = ANTHROPIC_ENDPOINT
    default_credential_env = "ANTHROPIC_API_KEY"

    def _headers(self) -> dict[str, str]:
        return {
            "x-api-key": self._api_key(),
            "anthropic-version": ANTHROPIC_VERSION,
            "content-type": "application/json",
        }

    def build_payload(self, request: ModelRequest) -> dict[str, Any]:
        system = request.system_prompt
        payload: dict[str, Any] = {
            "model": request.model_id or self.descriptor.model_id,
            "max_tokens": request.max_output_tokens,
            "temperature": request.temperature,
            "messages": [{"role": "user", "content": request.user_prompt}],
        }
        if request.mode is RequestMode.TOOL_CALL:
            assert request.tool_schema is not None
            if request.tool_schema.dialect is not WireDialect.XML_TOOL:
                raise InvalidConfig("XML-tool backend needs an xml_tool schema")
            system += xml_tools_block(request.tool_schema.payload)
            payload["stop_sequences"] = ["</function_calls>"]
        if system:
            payload["system"] = system
        return payload

    def send(self, request: ModelRequest) -> RawModelOutput:
        data, latency = self._post(self.build_payload(request))
        blocks = data.get("content")
        if not isinstance(blocks, list):
            raise TransportError("messages response has no content")
        body = "".join(b.get("text", "") for b in blocks if b.get("type") == "text")
        usage_data = data.get("usage") or {}
        usage = UsageRecord(
            int(usage_data.get("input_tokens", 0)),
            int(usage_data.get("output_tokens", 0)),
            latency,
            1,
        )
        dialect = WireDialect.XML_TOOL if request.mode is RequestMode.TOOL_CALL else WireDialect.PLAIN_TEXT
        return RawModelOutput(dialect, body, usage)


def http_backend(descriptor: BackendDescriptor, client: httpx.Client | None = None, **kwargs: Any):
    if descriptor.kind is BackendKind.HTTP_JSON_TOOLS:
        return OpenAIToolsBackend(descriptor, client, **kwargs)
    if descriptor.kind is BackendKind.HTTP_XML_TOOLS:
        return AnthropicXmlBackend(descriptor, client, **kwargs)
    raise InvalidConfig(f"{descriptor.kind} is not an HTTP backend")
