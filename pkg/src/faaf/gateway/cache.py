"""Content-addressed response cache: one JSON file per request hash."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator

from faaf.constructor import WireDialect
from faaf.parsing import RawModelOutput, UsageRecord


@dataclass(frozen=True)
class CacheStats:
    entries: int
    bytes: int


class ResponseCache:
    def __init__(self, directory: str | Path):
        self.directory = Path(directory)

    def _path(self, key: str) -> Path:
        return self.directory / key[:2] / f"{key}.json"

    def get(self, key: str) -> RawModelOutput | None:
        path = self._path(key)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None
        except (OSError, json.JSONDecodeError):
            # A torn or foreign file is treated as a miss and overwritten later.
            return None
        return RawModelOutput(
            WireDialect(data["dialect"]),
            data["body"],
            UsageRecord.from_dict(data["usage"]),
            cached=True,
        )

    def put(self, key: str, request: dict[str, Any], backend: dict[str, Any], output: RawModelOutput) -> None:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        record = {
            "key": key,
            "request": request,
            "backend": backend,
            "dialect": output.dialect.value,
            "body": output.body,
            "usage": output.usage.to_dict(),
        }
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(record, fh, ensure_ascii=False, indent=1)
            os.replace(tmp, path)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise

    def keys(self) -> Iterator[str]:
        if not self.directory.exists():
            return
        for path in sorted(self.directory.glob("*/*.json")):
            yield path.stem

    def entry(self, key: str) -> dict[str, Any]:
        return json.loads(self._path(key).read_text(encoding="utf-8"))

    def stats(self) -> CacheStats:
        files = list(self.directory.glob("*/*.json")) if self.directory.exists() else []
        return CacheStats(len(files), sum(p.stat().st_size for p in files))

    def clear(self) -> int:
        removed = 0
        for key in list(self.keys()):
            self._path(key).unlink(missing_ok=True)
            removed += 1
        return removed
