"""Command-line entry point (``faaf``)."""

from __future__ import annotations

import functools
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import click

from faaf import desk_dataset_path
from faaf.core import FORMULATIONS, AnswerKind, FaafError, InvalidConfig, get_formulation, order_variants
from faaf.dataset import DatasetFile, load_dataset, load_run, save_dataset, save_run, with_facts
from faaf.engine import dry_run_requests, progress_file_for, run_evaluation, verify_answer
from faaf.facts import FactGenRequest, generate_facts
from faaf.gateway import BackendDescriptor, Budget, Gateway, ResponseCache, make_backend
from faaf.metrics import cost_csv, render_report, report_csv, report_json, report_text

BUILTIN_BACKENDS: dict[str, dict[str, Any]] = {
    "mock-oracle": {"kind": "mock_oracle"},
    "mock-oracle-xml": {"kind": "mock_oracle", "dialect": "xml_tool"},
    "mock-adversarial": {"kind": "mock_adversarial"},
    "mock-scripted": {"kind": "mock_scripted"},
    "gpt-4-turbo": {"kind": "http_json_tools", "model_id": "gpt-4-turbo"},
    "gpt-3.5-turbo": {"kind": "http_json_tools", "model_id": "gpt-3.5-turbo"},
    "claude-3-opus": {"kind": "http_xml_tools", "model_id": "claude-3-opus-20240229"},
    "claude-3-sonnet": {"kind": "http_xml_tools", "model_id": "claude-3-sonnet-20240229"},
}

# Applied to live backends unless overridden.
LIVE_BUDGET = Budget(max_calls=2000, max_tokens=2_000_000)


@dataclass
class CliConfig:
    dataset: str | None = None
    backend: str = "mock-oracle"
    formulation: str = "faaf-tf"
    variants: list[str] = field(default_factory=lambda: ["ground_truth", "ungrounded", "poor"])
    out: str = "runs"
    parallel: int = 4
    max_calls: int | None = None
    max_tokens: int | None = None
    cache_dir: str = ".faaf-cache"
    no_cache: bool = False
    fixture: str | None = None
    backends: dict[str, dict[str, Any]] = field(default_factory=dict)

    def dataset_path(self) -> Path:
        path = Path(self.dataset) if self.dataset else desk_dataset_path()
        if not path.exists():
            raise click.BadParameter(f"{path} does not exist", param_hint="--dataset")
        return path

    def descriptor(self) -> BackendDescriptor:
        spec = {**BUILTIN_BACKENDS, **self.backends}.get(self.backend)
        if spec is None:
            known = ", ".join(sorted({**BUILTIN_BACKENDS, **self.backends}))
            raise click.BadParameter(f"unknown backend {self.backend!r} (known: {known})", param_hint="--backend")
        spec = {"name": self.backend, **spec}
        if self.fixture:
            spec["options"] = {**spec.get("options", {}), "fixture": self.fixture}
        return BackendDescriptor.from_dict(spec)

    def budget(self, descriptor: BackendDescriptor) -> Budget:
        default = Budget() if descriptor.kind.is_mock else LIVE_BUDGET
        return Budget(
            self.max_calls if self.max_calls is not None else default.max_calls,
            self.max_tokens if self.max_tokens is not None else default.max_tokens,
        )

    def gateway(self, dataset: DatasetFile | None = None) -> Gateway:
        descriptor = self.descriptor()
        backend = make_backend(descriptor, records=dataset.records if dataset else None)
        cache = None if self.no_cache else ResponseCache(self.cache_dir)
        return Gateway(backend, cache=cache, budget=self.budget(descriptor), max_concurrency=self.parallel)


def _load_config(path: str | None) -> dict[str, Any]:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise click.BadParameter(f"cannot read config: {exc}", param_hint="--config") from None
    if not isinstance(data, dict):
        raise click.BadParameter("config must be a JSON object", param_hint="--config")
    return data


def _fail(exc: Exception) -> None:
    click.echo(json.dumps({"error": type(exc).__name__, "message": str(exc)}), err=True)
    sys.exit(1)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (FaafError, OSError) as exc:
            _fail(exc)

    return wrapper


def run_options(fn):
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON config file; flags win."),
        click.option("--dataset", type=click.Path(dir_okay=False), help="Dataset file (default: bundled fixture)."),
        click.option("--backend", help="Backend name (built-in or from the config file)."),
        click.option("--formulation", type=click.Choice(list(FORMULATIONS)), help="Verification formulation."),
        click.option("--variants", help="Comma-separated answer variants."),
        click.option("--parallel", type=click.IntRange(min=1), help="Worker count (default 4)."),
        click.option("--max-calls", type=click.IntRange(min=0), help="Upstream call budget."),
        click.option("--max-tokens", type=click.IntRange(min=0), help="Upstream token budget."),
        click.option("--cache-dir", type=click.Path(file_okay=False), help="Response cache directory."),
        click.option("--no-cache", is_flag=True, default=None, help="Disable the response cache."),
        click.option("--fixture", type=click.Path(dir_okay=False), help="Fixture file for mock-scripted."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def build_config(config_path: str | None, **flags: Any) -> CliConfig:
    data = _load_config(config_path)
    unknown = set(data) - set(CliConfig.__dataclass_fields__)
    if unknown:
        raise click.BadParameter(f"unknown config keys: {', '.join(sorted(unknown))}", param_hint="--config")
    config = CliConfig(**data)
    for key, value in flags.items():
        if value is None:
            continue
        if key == "variants":
            value = [v for v in value.split(",") if v.strip()]
        setattr(config, key, value)
    if config.formulation not in FORMULATIONS:
        raise click.BadParameter(f"unknown formulation {config.formulation!r}", param_hint="--formulation")
    try:
        order_variants(config.variants)
    except InvalidConfig as exc:
        raise click.BadParameter(str(exc), param_hint="--variants") from None
    return config


@click.group()
@click.version_option(package_name="artifact")
def main() -> None:
    """Fact verification with function-calling language models."""


@main.command("generate-facts")
@run_options
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Where to write the updated dataset.")
@click.option("--ids", help="Comma-separated record ids (default: all).")
@handle_errors
def cmd_generate_facts(config_path, out, ids, **flags):
    """Regenerate facts from each question and ground-truth answer."""
    flags.pop("formulation", None)
    flags.pop("variants", None)
    config = build_config(config_path, **flags)
    dataset = load_dataset(config.dataset_path())
    gateway = config.gateway(dataset)
    wanted = set(ids.split(",")) if ids else None
    new_facts = {}
    for record in dataset.records:
        if wanted is not None and record.id not in wanted:
            continue
        request = FactGenRequest(record.question, record.answer(AnswerKind.GROUND_TRUTH))
        new_facts[record.id] = generate_facts(request, gateway)
        click.echo(f"{record.id}: {len(new_facts[record.id])} facts", err=True)
    save_dataset(with_facts(dataset, new_facts), out)
    click.echo(out)


@main.command("verify")
@run_options
@click.option("--qa-id", required=True, help="Record id to verify.")
@click.option("--variant", required=True, help="Answer variant (ground_truth, ungrounded, poor).")
@handle_errors
def cmd_verify(config_path, qa_id, variant, **flags):
    """Verify the facts of one record against one answer variant."""
    config = build_config(config_path, **flags)
    dataset = load_dataset(config.dataset_path())
    try:
        record = dataset.get(qa_id)
    except KeyError:
        raise click.BadParameter(f"no record {qa_id!r}", param_hint="--qa-id") from None
    gateway = config.gateway(dataset)
    result = verify_answer(record, variant, get_formulation(config.formulation), gateway, formulation_id=config.formulation)
    payload = result.to_dict()
    payload["facts"] = {str(f.index): f.text for f in record.facts}
    payload["gold"] = {str(i): v for i, v in record.gold(result.variant).items()}
    click.echo(json.dumps(payload, indent=1, ensure_ascii=False))


@main.command("evaluate")
@run_options
@click.option("--out", type=click.Path(file_okay=False), help="Directory for run artifacts (default runs/).")
@click.option("--dry-run", is_flag=True, help="Print request payloads without calling any backend.")
@handle_errors
def cmd_evaluate(config_path, out, dry_run, **flags):
    """Sweep a dataset with one formulation and backend; write a run artifact."""
    config = build_config(config_path, out=out, **flags)
    dataset = load_dataset(config.dataset_path())
    formulation = get_formulation(config.formulation)
    gateway = config.gateway(dataset)
    if dry_run:
        for qa_id, variant, index, request in dry_run_requests(dataset.records, config.variants, formulation, gateway):
            line = {"qa_id": qa_id, "variant": variant.value, "fact_index": index, "request": request.canonical()}
            click.echo(json.dumps(line, ensure_ascii=False))
        return
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"run-{config.formulation}-{config.backend}.json"
    run = run_evaluation(
        dataset.records,
        config.variants,
        formulation,
        gateway,
        formulation_id=config.formulation,
        parallel=config.parallel,
        progress_path=progress_file_for(path),
        run_id=f"{config.formulation}-{config.backend}",
    )
    run.config["dataset"] = {"path": str(config.dataset_path()), "source": dataset.source, **dataset.counts()}
    save_run(run, path)
    stats = gateway.stats()
    click.echo(
        f"upstream calls: {stats.upstream_calls}, cache hits: {stats.cache_hits}, tokens: {stats.total_tokens}",
        err=True,
    )
    click.echo(str(path))


@main.command("report")
@click.argument("runs", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), help="Also write report.csv, cost.csv and summary.json here.")
@handle_errors
def cmd_report(runs, out):
    """Render accuracy and cost tables from run artifacts."""
    table = render_report([load_run(p) for p in runs])
    click.echo(report_text(table), nl=False)
    if out:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.csv").write_text(report_csv(table), encoding="utf-8")
        (out_dir / "cost.csv").write_text(cost_csv(table), encoding="utf-8")
        (out_dir / "summary.json").write_text(report_json(table), encoding="utf-8")


@main.command("cache")
@click.argument("action", type=click.Choice(["list", "clear", "stats"]))
@click.option("--cache-dir", default=".faaf-cache", show_default=True, type=click.Path(file_okay=False))
@handle_errors
def cmd_cache(action, cache_dir):
    """Inspect or clear the response cache."""
    cache = ResponseCache(cache_dir)
    if action == "list":
        for key in cache.keys():
            entry = cache.entry(key)
            click.echo(f"{key}  {entry['backend']['kind']}  {entry['request']['mode']}  {len(entry['body'])} chars")
    elif action == "clear":
        click.echo(f"removed {cache.clear()} entries")
    else:
        stats = cache.stats()
        click.echo(json.dumps({"entries": stats.entries, "bytes": stats.bytes}))


if __name__ == "__main__":
    main()
