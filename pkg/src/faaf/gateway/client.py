from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Iterable, Protocol

import httpx

from faaf.constructor import WireDialect
from faaf.core import InvalidConfig, QARecord
from faaf.gateway.cache import ResponseCache
from faaf.gateway.http import http_backend
from faaf.gateway.mock import MockAdversarialBackend, MockOracleBackend, MockScriptedBackend
from faaf.gateway.types import (
    BackendDescriptor,
    BackendKind,
    BudgetExceeded,
    ModelRequest,
    RequestMode,
    request_key,
)
from faaf.parsing import RawModelOutput


class Backend(Protocol):
    descriptor: BackendDescriptor

    @property
    def dialect(self) -> WireDialect: ...

    def send(self, request: ModelRequest) -> RawModelOutput: ...


def make_backend(
    descriptor: BackendDescriptor,
    *,
    records: Iterable[QARecord] | None = None,
    http_client: httpx.Client | None = None,
) -> Backend:
    kind = descriptor.kind
    if kind is BackendKind.MOCK_ORACLE:
        if records is None:
            raise InvalidConfig("the oracle backend needs the dataset's gold labels")
        return MockOracleBackend(descriptor, records)
    if kind is BackendKind.MOCK_SCRIPTED:
        return MockScriptedBackend(descriptor)
    if kind is BackendKind.MOCK_ADVERSARIAL:
        return MockAdversarialBackend(descriptor)
    return http_backend(descriptor, http_client)


@dataclass(frozen=True)
class Budget:
    max_calls: int | None = None
    max_tokens: int | None = None


@dataclass(frozen=True)
class GatewayStats:
    upstream_calls: int
    cache_hits: int
    prompt_tokens: int
    completion_tokens: int

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens


class _RateLimiter:
    def __init__(self, min_interval_s: float):
        self.min_interval_s = min_interval_s
        self._lock = threading.Lock()
        self._next = 0.0

    def wait(self) -> None:
        if self.min_interval_s <= 0:
            return
        with self._lock:
            now = time.monotonic()
            start = max(now, self._next)
            self._next = start + self.min_interval_s
        if start > now:
            time.sleep(start - now)


class Gateway:
    """Single entry point for model calls: caching, budgets and throttling.

    Upstream calls are counted only on cache misses.  Requests that share a
    cache key are serialized so the backend is hit at most once per key.
    """

    def __init__(
        self,
        backend: Backend,
        *,
        cache: ResponseCache | None = None,
        budget: Budget | None = None,
        max_concurrency: int = 4,
        min_interval_s: float = 0.0,
    ):
        if max_concurrency < 1:
            raise InvalidConfig("max_concurrency must be at least 1")
        self.backend = backend
        self.cache = cache
        self.budget = budget or Budget()
        self._slots = threading.BoundedSemaphore(max_concurrency)
        self._limiter = _RateLimiter(min_interval_s)
        self._lock = threading.Lock()
        self._key_locks: dict[str, threading.Lock] = {}
        self._upstream = 0
        self._reserved = 0
        self._hits = 0
        self._prompt_tokens = 0
        self._completion_tokens = 0

    @property
    def descriptor(self) -> BackendDescriptor:
        return self.backend.descriptor

    @property
    def dialect(self) -> WireDialect:
        return self.backend.dialect

    def stats(self) -> GatewayStats:
        with self._lock:
            return GatewayStats(self._upstream, self._hits, self._prompt_tokens, self._completion_tokens)

    def key(self, request: ModelRequest) -> str:
        return request_key(request, self.descriptor)

    def _key_lock(self, key: str) -> threading.Lock:
        with self._lock:
            return self._key_locks.setdefault(key, threading.Lock())

    def _reserve(self) -> None:
        with self._lock:
            b = self.budget
            if b.max_calls is not None and self._upstream + self._reserved >= b.max_calls:
                raise BudgetExceeded(f"call budget of {b.max_calls} exhausted")
            if b.max_tokens is not None and self._prompt_tokens + self._completion_tokens >= b.max_tokens:
                raise BudgetExceeded(f"token budget of {b.max_tokens} exhausted")
            self._reserved += 1

    def _check_request(self, request: ModelRequest) -> None:
        if request.mode is RequestMode.TOOL_CALL and not self.descriptor.kind.is_mock:
            assert request.tool_schema is not None
            if request.tool_schema.dialect is not self.dialect:
                raise InvalidConfig(
                    f"{self.descriptor.name} expects {self.dialect} schemas, got {request.tool_schema.dialect}"
                )

    def complete(self, request: ModelRequest) -> RawModelOutput:
        """Return the model's raw output for ``request``, from cache when possible.

        Exactly one upstream request is made per cache miss (transport-level
        retries happen inside the backend); malformed responses are never
        retried.
        """
        self._check_request(request)
        key = self.key(request)
        with self._key_lock(key):
            if self.cache is not None:
                hit = self.cache.get(key)
                if hit is not None:
                    with self._lock:
                        self._hits += 1
                    return hit
            self._reserve()
            try:
                with self._slots:
                    self._limiter.wait()
                    output = self.backend.send(request)
            finally:
                with self._lock:
                    self._reserved -= 1
            with self._lock:
                self._upstream += 1
                self._prompt_tokens += output.usage.prompt_tokens
                self._completion_tokens += output.usage.completion_tokens
            if self.cache is not None:
                self.cache.put(key, request.canonical(), self.descriptor.identity(), output)
        return output
