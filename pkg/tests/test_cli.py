import json

from click.testing import CliRunner

from tcintent.cli import main


def invoke(*args):
    return CliRunner().invoke(main, [str(a) for a in args], catch_exceptions=False)


def test_simulate_writes_model(tmp_path):
    out = tmp_path / "s.json"
    r = invoke("simulate", "--lambda-high", 200, "--lambda-low", 300, "--horizon", 50, "--out", out)
    assert r.exit_code == 0, r.output
    assert {t["metric"] for t in json.loads(out.read_text())["thresholds"]} >= {"avg_wait_high", "drop_rate_low"}


def test_simulate_rejects_bad_target():
    r = invoke("simulate", "--lambda-high", 1, "--lambda-low", 1, "--u-target", 1.5)
    assert r.exit_code == 2


def test_profile_filter():
    r = invoke("profile", "--intent", "Protect voice calls")
    assert r.exit_code == 0
    assert [e["traffic_type"] for e in json.loads(r.output)] == ["voice"]


def test_translate_and_evaluate(tmp_path):
    out = tmp_path / "out"
    r = invoke("translate", "--mini", "--out", out, "--runs", 2, "--mock-flaws", "bad-mask")
    assert r.exit_code == 0, r.output
    assert "translated 40/40" in r.output
    report = tmp_path / "r.json"
    r = invoke("evaluate", "--outputs", out, "--report", report, "--label", "mock")
    assert r.exit_code == 0, r.output
    data = json.loads(report.read_text())
    assert data["corrected"]["aggregate"]["coverage"]["mean"] == 1.0
    assert data["raw"]["aggregate"]["coverage"]["mean"] < 1.0
    assert "mock (corrected)" in r.output


def test_translate_case_error_exit_code(tmp_path):
    intents = tmp_path / "i.txt"
    intents.write_text("# comment\nPrioritize robotics traffic\n")
    r = invoke("translate", intents, "--intent", " ", "--out", tmp_path / "o")
    assert r.exit_code == 1


def test_translate_bad_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"runs": 0}))
    assert invoke("translate", "--config", cfg).exit_code == 2


def test_critique_lint_and_fix(tmp_path, casestudy):
    subs = tmp_path / "s.txt"
    script = tmp_path / "c.tc"
    subs.write_text(casestudy["raw_subintents.txt"])
    script.write_text(casestudy["raw_config.tc"])
    r = invoke("critique", "--subintents", subs, "--script", script, "--lint")
    assert r.exit_code == 1 and "c2 [fixable]" in r.output
    out = tmp_path / "fixed"
    r = invoke("critique", "--subintents", subs, "--script", script, "--out", out)
    assert r.exit_code == 0 and "c2 [fixed]" in r.output
    assert (out / "config.tc").read_text() == casestudy["corrected_config.tc"]
    clean = tmp_path / "clean.tc"
    clean.write_text(casestudy["corrected_config.tc"])
    subs.write_text(casestudy["corrected_subintents.txt"])
    assert invoke("critique", "--subintents", subs, "--script", clean, "--lint").exit_code == 0


def test_benchmark_command(tmp_path):
    out = tmp_path / "b.json"
    r = invoke("benchmark", "--n", 100, "--seed", 1, "--out", out)
    assert r.exit_code == 0 and "time_sensitive=" in r.output
    assert len(json.loads(out.read_text())) == 100
    r = invoke("benchmark", "--mini")
    assert len(json.loads(r.output)) == 20


def test_evaluate_missing_outputs(tmp_path):
    (tmp_path / "empty").mkdir()
    r = invoke("evaluate", "--outputs", tmp_path / "empty", "--variant", "corrected")
    assert r.exit_code == 1
