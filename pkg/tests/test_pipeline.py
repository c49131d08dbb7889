import json

import pytest

from tcintent.benchmark import mini_benchmark
from tcintent.critic import lint
from tcintent.lm_gateway import ModelConfig
from tcintent.pipeline import (
    ConfigurationError,
    PipelineConfig,
    load_outputs,
    normalize_intents,
    run_pipeline,
)
from tcintent.subintent import SubIntentSet, serialize_subintents
from tcintent.tc_lang import parse_tc


def tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def mini_items():
    return [(c.id, c.intent) for c in mini_benchmark()]


def test_voice_intent_reproduces_casestudy(tmp_path, casestudy):
    cfg = PipelineConfig(output_dir=str(tmp_path))
    result = run_pipeline([("voice", casestudy["voice_intent.txt"].strip())], cfg)
    assert result.ok
    d = tmp_path / "voice"
    assert (d / "config.tc").read_text() == casestudy["corrected_config.tc"]
    subs = SubIntentSet.from_json((d / "subintents.json").read_text())
    assert serialize_subintents(subs) == casestudy["corrected_subintents.txt"]
    report = json.loads((d / "report.json").read_text())
    assert report["status"] == "ok" and report["corrections"] == 0


def test_mini_benchmark_is_lint_clean_and_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        result = run_pipeline(mini_items(), PipelineConfig(output_dir=str(out)))
        assert result.ok
    assert tree(a) == tree(b)
    for case in mini_benchmark():
        cfg = parse_tc((a / case.id / "config.tc").read_text())
        subs = SubIntentSet.from_json((a / case.id / "subintents.json").read_text())
        assert lint(cfg, subs) == []


def test_parallel_matches_serial(tmp_path):
    serial = run_pipeline(mini_items(), PipelineConfig(output_dir=str(tmp_path / "s")))
    parallel = run_pipeline(mini_items(), PipelineConfig(output_dir=str(tmp_path / "p"), parallelism=4))
    assert [r.outputs() for r in serial.runs[0]] == [r.outputs() for r in parallel.runs[0]]


def test_empty_intent_list(tmp_path):
    result = run_pipeline([], PipelineConfig(output_dir=str(tmp_path)))
    assert result.ok and result.runs == [[]]
    assert json.loads((tmp_path / "summary.json").read_text())["errors"] == 0


def test_case_errors_are_isolated(tmp_path):
    result = run_pipeline(["   ", "Prioritize robotics traffic"], PipelineConfig(output_dir=str(tmp_path)))
    assert not result.ok
    bad, good = result.runs[0]
    assert not bad.ok and "EmptyIntentError" in bad.error
    assert good.ok
    assert json.loads((tmp_path / "intent-001" / "report.json").read_text())["status"] == "error"
    assert (tmp_path / "intent-002" / "config.tc").is_file()


def test_remote_failure_is_a_case_error(tmp_path):
    model = ModelConfig(backend="remote", endpoint="http://127.0.0.1:9/", retries=0, timeout=1)
    result = run_pipeline(["Prioritize robotics traffic"], PipelineConfig(output_dir=str(tmp_path), model=model))
    assert "TransportError" in result.errors[0].error


def test_multiple_runs_layout(tmp_path):
    cfg = PipelineConfig(output_dir=str(tmp_path), runs=3)
    run_pipeline(mini_items()[:2], cfg)
    assert sorted(p.name for p in tmp_path.glob("run-*")) == ["run-01", "run-02", "run-03"]
    runs = load_outputs(tmp_path, [i for i, _ in mini_items()[:2]])
    assert len(runs) == 3 and runs[0] == runs[2]
    assert load_outputs(tmp_path, [i for i, _ in mini_items()[:2]], variant="raw")[0]


def test_flaws_are_repaired(tmp_path):
    cfg = PipelineConfig(output_dir=str(tmp_path), mock_flaws=("missing-root", "bad-mask"),
                         mock_subintent_flaws=("wrong-threshold",))
    result = run_pipeline(mini_items()[:5], cfg)
    assert result.ok
    assert all(r.corrections > 0 for r in result.runs[0])


@pytest.mark.parametrize("kw", [dict(runs=0), dict(parallelism=0), dict(device=""),
                                dict(profile="/nonexistent.json"), dict(strategy="three")])
def test_bad_config(kw):
    with pytest.raises(ValueError):
        PipelineConfig(**kw)


def test_config_round_trip(tmp_path):
    cfg = PipelineConfig(strategy="one", runs=2, mock_flaws=("no-ceil",))
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert PipelineConfig.load(path, env={}) == cfg


@pytest.mark.parametrize("items", [[("a/b", "x")], [("a", "x"), ("a", "y")]])
def test_bad_intent_ids(items):
    with pytest.raises(ConfigurationError):
        normalize_intents(items)
