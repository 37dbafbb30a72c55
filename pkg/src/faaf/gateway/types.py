from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping

from faaf.constructor import WireDialect, WireSchema
from faaf.core import FaafError, InvalidConfig


class GatewayError(FaafError):
    pass


class TransportError(GatewayError):
    pass


class AuthError(GatewayError):
    pass


class BudgetExceeded(GatewayError):
    pass


class RequestMode(str, Enum):
    TOOL_CALL = "tool_call"
    PROMPT = "prompt"


class BackendKind(str, Enum):
    HTTP_JSON_TOOLS = "http_json_tools"
    HTTP_XML_TOOLS = "http_xml_tools"
    MOCK_ORACLE = "mock_oracle"
    MOCK_SCRIPTED = "mock_scripted"
    MOCK_ADVERSARIAL = "mock_adversarial"

    @property
    def is_mock(self) -> bool:
        return self.value.startswith("mock_")


@dataclass(frozen=True)
class ModelRequest:
    mode: RequestMode
    user_prompt: str
    system_prompt: str = ""
    tool_schema: WireSchema | None = None
    model_id: str = ""
    temperature: float = 0.0
    max_output_tokens: int = 1024

    def __post_init__(self) -> None:
        if (self.tool_schema is not None) != (self.mode is RequestMode.TOOL_CALL):
            raise InvalidConfig("tool_schema must be given exactly for tool-call requests")
        if self.max_output_tokens <= 0:
            raise InvalidConfig("max_output_tokens must be positive")

    def canonical(self) -> dict[str, Any]:
        return {
            "mode": self.mode.value,
            "model_id": self.model_id,
            "system_prompt": self.system_prompt,
            "user_prompt": self.user_prompt,
            "tool_schema": (
                {"dialect": self.tool_schema.dialect.value, "payload": self.tool_schema.payload}
                if self.tool_schema
                else None
            ),
            "temperature": self.temperature,
            "max_output_tokens": self.max_output_tokens,
        }


@dataclass(frozen=True)
class BackendDescriptor:
    """Where and how to reach a model.

    ``credential_env`` names the environment variable holding the API key; the
    key itself is never stored.  ``options`` carries backend-specific settings
    (fixture path for scripted mocks, timeouts, ...).
    """

    kind: BackendKind
    name: str = ""
    model_id: str = ""
    endpoint: str = ""
    credential_env: str | None = None
    dialect: WireDialect | None = None
    options: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", BackendKind(self.kind))
        if self.kind.is_mock and self.credential_env:
            raise InvalidConfig("mock backends take no credentials")
        if self.dialect is not None:
            object.__setattr__(self, "dialect", WireDialect(self.dialect))
        if not self.name:
            object.__setattr__(self, "name", self.kind.value.replace("_", "-"))

    @property
    def tool_dialect(self) -> WireDialect:
        if self.kind is BackendKind.HTTP_JSON_TOOLS:
            return WireDialect.JSON_TOOL
        if self.kind is BackendKind.HTTP_XML_TOOLS:
            return WireDialect.XML_TOOL
        return self.dialect or WireDialect.JSON_TOOL

    def identity(self) -> dict[str, Any]:
        """Fields that determine responses; used in cache keys, never secrets."""
        ident = {
            "kind": self.kind.value,
            "model_id": self.model_id,
            "endpoint": self.endpoint,
            "dialect": self.tool_dialect.value,
        }
        if self.kind is BackendKind.MOCK_SCRIPTED:
            ident["fixture"] = str(self.options.get("fixture", ""))
        return ident

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "name": self.name,
            "model_id": self.model_id,
            "endpoint": self.endpoint,
            "credential_env": self.credential_env,
            "dialect": self.dialect.value if self.dialect else None,
            "options": {k: v for k, v in self.options.items() if isinstance(v, (str, int, float, bool))},
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "BackendDescriptor":
        return cls(
            kind=BackendKind(data["kind"]),
            name=data.get("name", ""),
            model_id=data.get("model_id", ""),
            endpoint=data.get("endpoint", ""),
            credential_env=data.get("credential_env"),
            dialect=WireDialect(data["dialect"]) if data.get("dialect") else None,
            options=dict(data.get("options", {})),
        )


def request_key(request: ModelRequest, backend: BackendDescriptor) -> str:
    blob = json.dumps(
        {"request": request.canonical(), "backend": backend.identity()},
        sort_keys=True,
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
