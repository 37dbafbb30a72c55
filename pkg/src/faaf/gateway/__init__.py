"""Model backends behind one caching, metered interface."""

from faaf.gateway.cache import ResponseCache
from faaf.gateway.client import Backend, Budget, Gateway, GatewayStats, make_backend
from faaf.gateway.mock import (
    ADVERSARIAL_PROSE,
    MockAdversarialBackend,
    MockError,
    MockOracleBackend,
    MockScriptedBackend,
    estimate_tokens,
)
from faaf.gateway.prompts import default_system_prompt
from faaf.gateway.types import (
    AuthError,
    BackendDescriptor,
    BackendKind,
    BudgetExceeded,
    GatewayError,
    ModelRequest,
    RequestMode,
    TransportError,
    request_key,
)
from faaf.parsing import RawModelOutput, UsageRecord

__all__ = [
    "ADVERSARIAL_PROSE",
    "AuthError",
    "Backend",
    "BackendDescriptor",
    "BackendKind",
    "Budget",
    "BudgetExceeded",
    "Gateway",
    "GatewayError",
    "GatewayStats",
    "MockAdversarialBackend",
    "MockError",
    "MockOracleBackend",
    "MockScriptedBackend",
    "ModelRequest",
    "RawModelOutput",
    "RequestMode",
    "ResponseCache",
    "TransportError",
    "UsageRecord",
    "default_system_prompt",
    "estimate_tokens",
    "make_backend",
    "request_key",
]
