import json

import pytest
from click.testing import CliRunner

from faaf.cli import main
from faaf.dataset import load_dataset, load_run

from conftest import FIXTURES


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def evaluate(runner, *args):
    return runner.invoke(main, ["evaluate", "--out", "runs", "--cache-dir", "cache", *args])


def test_evaluate_oracle_then_report(runner, workdir):
    result = evaluate(runner, "--backend", "mock-oracle", "--formulation", "faaf-tf")
    assert result.exit_code == 0, result.output
    path = workdir / "runs" / "run-faaf-tf-mock-oracle.json"
    assert result.stdout.strip() == str(path.relative_to(workdir))
    assert "upstream calls: 150" in result.stderr

    report = runner.invoke(main, ["report", str(path), "--out", "report"])
    assert report.exit_code == 0, report.output
    assert report.output.count("0/281") == 3
    rows = (workdir / "report" / "report.csv").read_text().splitlines()
    assert len(rows) == 4 and all(",0/281,0.0," in r for r in rows[1:])
    summary = json.loads((workdir / "report" / "summary.json").read_text())
    assert summary["costs"][0]["calls"] == 150


def test_warm_cache_is_idempotent(runner, workdir):
    first = evaluate(runner, "--formulation", "prompt-tf", "--variants", "poor")
    before = load_run(workdir / "runs" / "run-prompt-tf-mock-oracle.json")
    second = evaluate(runner, "--formulation", "prompt-tf", "--variants", "poor")
    after = load_run(workdir / "runs" / "run-prompt-tf-mock-oracle.json")
    assert first.exit_code == second.exit_code == 0
    assert "upstream calls: 281" in first.stderr
    assert "upstream calls: 0" in second.stderr
    assert [v.result for v in after.verifications] == [v.result for v in before.verifications]


def test_unknown_formulation_is_usage_error(runner, workdir):
    result = evaluate(runner, "--formulation", "faaf-xyz")
    assert result.exit_code == 2


def test_unknown_backend_is_usage_error(runner, workdir):
    assert evaluate(runner, "--backend", "nope").exit_code == 2


def test_dry_run_prints_requests_without_calls(runner, workdir):
    result = evaluate(runner, "--dry-run", "--variants", "ground_truth")
    assert result.exit_code == 0
    lines = [json.loads(line) for line in result.stdout.splitlines()]
    assert len(lines) == 50
    assert lines[0]["request"]["tool_schema"]["dialect"] == "json_tool"
    assert lines[0]["request"]["user_prompt"].startswith("Consider the given passage")
    assert not (workdir / "cache").exists()


def test_live_backend_without_key_fails_with_json_error(runner, workdir, monkeypatch):
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    result = evaluate(runner, "--backend", "gpt-4-turbo", "--variants", "poor", "--no-cache")
    assert result.exit_code == 1
    error = json.loads(result.stderr.strip().splitlines()[-1])
    assert error["error"] == "AuthError"
    assert "OPENAI_API_KEY" in error["message"]


def test_config_file_with_flag_override(runner, workdir):
    (workdir / "cfg.json").write_text(json.dumps({"formulation": "faaf-tfn", "variants": ["poor"], "parallel": 2}))
    result = evaluate(runner, "--config", "cfg.json", "--formulation", "faaf-tf-cit")
    assert result.exit_code == 0, result.output
    run = load_run(workdir / "runs" / "run-faaf-tf-cit-mock-oracle.json")
    assert run.config["variants"] == ["poor"]


def test_bad_config_key(runner, workdir):
    (workdir / "cfg.json").write_text(json.dumps({"colour": "blue"}))
    assert evaluate(runner, "--config", "cfg.json").exit_code == 2


def test_verify_single_answer(runner, workdir):
    result = runner.invoke(
        main, ["verify", "--qa-id", "sri-lanka-crisis", "--variant", "poor", "--formulation", "faaf-tfn", "--no-cache"]
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(result.stdout)
    assert payload["result"]["verdicts"] == {str(i): "False" for i in range(6)}
    assert payload["usage"]["call_count"] == 1


def test_generate_facts_with_scripted_backend(runner, workdir):
    result = runner.invoke(
        main,
        [
            "generate-facts", "--backend", "mock-scripted", "--fixture", str(FIXTURES / "scripted_sri_lanka.jsonl"),
            "--ids", "sri-lanka-crisis", "--out", "regen.jsonl", "--no-cache",
        ],
    )
    assert result.exit_code == 0, result.output
    dataset = load_dataset(workdir / "regen.jsonl")
    assert len(dataset.get("sri-lanka-crisis").facts) == 6
    assert dataset.meta["unannotated"] == ["sri-lanka-crisis"]


def test_cache_commands(runner, workdir):
    evaluate(runner, "--variants", "poor")
    stats = runner.invoke(main, ["cache", "stats", "--cache-dir", "cache"])
    assert json.loads(stats.stdout)["entries"] == 50
    listing = runner.invoke(main, ["cache", "list", "--cache-dir", "cache"])
    assert len(listing.stdout.splitlines()) == 50 and "mock_oracle" in listing.stdout
    cleared = runner.invoke(main, ["cache", "clear", "--cache-dir", "cache"])
    assert "removed 50 entries" in cleared.stdout


def test_report_on_corrupt_run(runner, workdir):
    (workdir / "bad.json").write_text('{"schema_version": 1, "run_id"')
    result = runner.invoke(main, ["report", "bad.json"])
    assert result.exit_code == 1
    assert json.loads(result.stderr)["error"] == "ParseError"
