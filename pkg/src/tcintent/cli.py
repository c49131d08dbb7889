"""Command-line entry point: ``tcintent <subcommand>``."""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import click

from tcintent import benchmark as bench
from tcintent.critic import CriticError, fix_subs, fix_tc, lint, lint_subs
from tcintent.lm_gateway import ModelConfig
from tcintent.pipeline import (
    ConfigurationError,
    PipelineConfig,
    load_outputs,
    run_pipeline,
)
from tcintent.profile import (
    ProfileError,
    default_profile,
    keywords,
    load_profile,
    profile_filter,
)
from tcintent.queue_twin import (
    QueueDomainError,
    QueueParams,
    SemanticModel,
    build_semantic_model,
    simulate,
)
from tcintent.subintent import SubIntentSet, parse_subintents, serialize_subintents
from tcintent.tc_lang import ParseError, extract_tc_script, parse_tc, serialize

STRATEGIES = {"zero": "ZeroShot", "one": "OneShot", "two-aqm": "TwoShotAqm"}


def _fail(message: str, code: int = 2):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _write_or_echo(text: str, out):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@click.group()
@click.option("-v", "--verbose", count=True, help="More logging (repeatable).")
def main(verbose):
    """Intent-to-tc translation with a queueing digital twin and a rule-based critic."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--lambda-high", type=float, required=True, help="High-priority arrival rate (packets/s).")
@click.option("--lambda-low", type=float, required=True, help="Low-priority arrival rate (packets/s).")
@click.option("--u-target", type=float, default=0.9, show_default=True, help="Target utilisation in (0,1).")
@click.option("--capacity", type=int, default=64, show_default=True, help="System capacity in packets.")
@click.option("--horizon", type=float, default=1000.0, show_default=True, help="Simulated time (s).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="Write the semantic model JSON here.")
def simulate_cmd(lambda_high, lambda_low, u_target, capacity, horizon, seed, out):
    """Run the queue twin and export a semantic model."""
    try:
        params = QueueParams.from_target(lambda_high, lambda_low, u_target, capacity)
        metrics = simulate(params, horizon, seed)
    except QueueDomainError as exc:
        _fail(str(exc))
    model = build_semantic_model(params, metrics, label=f"simulate seed={seed} horizon={horizon:g}")
    _write_or_echo(model.dumps(), out)
    if out:
        for t in model.thresholds:
            click.echo(f"{t.metric} {t.op} {t.value:g} {t.unit}")


main.add_command(simulate_cmd, name="simulate")


@main.command()
@click.option("--profile", "profile_path", type=click.Path(exists=True, dir_okay=False),
              help="Profile JSON (default: packaged profile).")
@click.option("--intent", help="Show only entries whose keywords occur in this intent.")
def profile(profile_path, intent):
    """Validate and show a traffic profile."""
    try:
        prof = load_profile(profile_path) if profile_path else default_profile()
        entries = profile_filter(prof, keywords(intent)) if intent is not None else list(prof.entries)
    except (ProfileError, ValueError) as exc:
        _fail(str(exc))
    click.echo(json.dumps([e.to_dict() for e in entries], indent=2))


def _pipeline_config(config, strategy, backend, seed, runs, device, out, mock_flaws, mock_subintent_flaws,
                     parallelism, endpoint, model_name) -> PipelineConfig:
    try:
        cfg = PipelineConfig.load(config) if config else PipelineConfig()
        model = cfg.model
        if backend or endpoint or model_name:
            data = model.to_dict(redact=False)
            data["backend"] = backend or data["backend"]
            data["endpoint"] = endpoint or data["endpoint"]
            data["model_name"] = model_name or data["model_name"]
            model = ModelConfig.from_dict(data)
        elif model.backend == "remote":
            model = ModelConfig.from_dict(model.to_dict(redact=False))
        changes = {"model": model}
        for key, value in (("strategy", STRATEGIES.get(strategy) if strategy else None), ("seed", seed),
                           ("runs", runs), ("device", device), ("output_dir", out), ("parallelism", parallelism)):
            if value is not None:
                changes[key] = value
        if mock_flaws:
            changes["mock_flaws"] = tuple(f.strip() for f in mock_flaws.split(",") if f.strip())
        if mock_subintent_flaws:
            changes["mock_subintent_flaws"] = tuple(f.strip() for f in mock_subintent_flaws.split(",") if f.strip())
        return replace(cfg, **changes)
    except (ConfigurationError, ValueError, OSError, TypeError) as exc:
        _fail(f"bad configuration: {exc}")


def _read_intents(source, intent_texts) -> list:
    items = list(intent_texts)
    if source:
        path = Path(source)
        text = path.read_text(encoding="utf-8")
        if path.suffix == ".json":
            items += [(c.id, c.intent) for c in bench.loads_benchmark(text)]
        else:
            items += [line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")]
    return items


@main.command()
@click.argument("intents_file", required=False, type=click.Path(exists=True, dir_okay=False))
@click.option("--intent", "intent_texts", multiple=True, help="Intent text (repeatable).")
@click.option("--mini", is_flag=True, help="Translate the packaged 20-case mini-benchmark.")
@click.option("--config", type=click.Path(exists=True, dir_okay=False), help="Pipeline config JSON.")
@click.option("--strategy", type=click.Choice(list(STRATEGIES)), help="Prompting strategy.")
@click.option("--backend", type=click.Choice(["remote", "mock"]), help="Language-model backend.")
@click.option("--endpoint", help="Chat-completion URL for the remote backend.")
@click.option("--model", "model_name", help="Model name sent to the remote backend.")
@click.option("--seed", type=int)
@click.option("--runs", type=int)
@click.option("--device", help="Interface name for emitted scripts.")
@click.option("--out", type=click.Path(file_okay=False), help="Output directory.")
@click.option("--parallelism", type=int, help="Intents translated concurrently.")
@click.option("--mock-flaws", help="Comma-separated config-stage flaw markers for the mock backend.")
@click.option("--mock-subintent-flaws", help="Comma-separated sub-intent-stage flaw markers for the mock backend.")
def translate(intents_file, intent_texts, mini, config, strategy, backend, endpoint, model_name, seed, runs, device,
              out, parallelism, mock_flaws, mock_subintent_flaws):
    """Run the full pipeline over intents (text file: one per line; JSON: benchmark cases)."""
    cfg = _pipeline_config(config, strategy, backend, seed, runs, device, out, mock_flaws, mock_subintent_flaws,
                           parallelism, endpoint, model_name)
    try:
        items = _read_intents(intents_file, intent_texts)
        if mini:
            items += [(c.id, c.intent) for c in bench.mini_benchmark()]
        result = run_pipeline(items, cfg)
    except (ConfigurationError, ValueError, OSError) as exc:
        _fail(str(exc))
    n = sum(len(r) for r in result.runs)
    click.echo(f"translated {n - len(result.errors)}/{n} intent(s) into {cfg.output_dir}")
    for err in result.errors:
        click.echo(f"  {err.id}: {err.error}", err=True)
    sys.exit(0 if result.ok else 1)


def _load_subs(path) -> SubIntentSet:
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith(("{", "[")):
        return SubIntentSet.from_json(text)
    return parse_subintents(text)


@main.command()
@click.option("--subintents", "subs_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Sub-intents (canonical text or JSON).")
@click.option("--script", type=click.Path(exists=True, dir_okay=False), help="tc script to check against them.")
@click.option("--semantic-model", type=click.Path(exists=True, dir_okay=False),
              help="Semantic model JSON (default: packaged voice fixture).")
@click.option("--profile", "profile_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--device", help="Device to use when the script names none.")
@click.option("--fix/--lint", "do_fix", default=True, show_default=True, help="Repair, or only report.")
@click.option("--out", type=click.Path(file_okay=False), help="Write corrected artifacts and report here.")
def critique(subs_path, script, semantic_model, profile_path, device, do_fix, out):
    """Lint or repair existing sub-intents and (optionally) a tc script."""
    try:
        s = SemanticModel.load(semantic_model) if semantic_model else bench.default_semantic_model()
        prof = load_profile(profile_path) if profile_path else default_profile()
        raw_subs = _load_subs(subs_path)
        classes = {getattr(it, "traffic_class", None) for it in raw_subs.items} - {None}
        p_k = [e for e in prof.entries if e.traffic_type in classes]
        subs, sub_report = fix_subs(raw_subs, s, p_k)
        violations = list(sub_report.violations)
        cfg = cfg_report = None
        if script:
            raw_cfg = parse_tc(extract_tc_script(Path(script).read_text(encoding="utf-8")))
            if do_fix:
                cfg, cfg_report = fix_tc(raw_cfg, subs, s, device=device)
                violations += list(cfg_report.violations)
            else:
                violations = lint_subs(raw_subs, s, p_k) + lint(raw_cfg, subs, s, device=device)
        elif not do_fix:
            violations = lint_subs(raw_subs, s, p_k)
    except (CriticError, ParseError, ProfileError, ValueError, OSError) as exc:
        _fail(str(exc))

    for v in violations:
        state = "fixed" if v.fix_applied else v.severity
        click.echo(f"{v.rule_id} [{state}] {v.location}: {v.message}")
    if do_fix:
        report = {"subintents": sub_report.to_dict(), "config": cfg_report.to_dict() if cfg_report else None}
        if out:
            d = Path(out)
            d.mkdir(parents=True, exist_ok=True)
            (d / "subintents.json").write_text(subs.dumps(), encoding="utf-8")
            if cfg is not None:
                (d / "config.tc").write_text(serialize(cfg), encoding="utf-8")
            (d / "report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
        else:
            click.echo(serialize_subintents(subs), nl=False)
            if cfg is not None:
                click.echo(serialize(cfg), nl=False)
    if not do_fix and violations:
        sys.exit(1)


@main.command("benchmark")
@click.option("--n", "n", type=int, default=100, show_default=True, help="Number of cases to generate.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--mini", is_flag=True, help="Emit the packaged handcrafted 20-case benchmark instead.")
@click.option("--out", type=click.Path(dir_okay=False), help="Benchmark JSON path (default: stdout).")
def benchmark_cmd(n, seed, mini, out):
    """Generate benchmark cases with reference sub-intents and configs."""
    cases = bench.mini_benchmark() if mini else bench.generate_benchmark(n, seed)
    _write_or_echo(json.dumps([c.to_dict() for c in cases], indent=2) + "\n", out)
    if out:
        hist = bench.tag_histogram(cases)
        click.echo(" ".join(f"{k}={v}" for k, v in hist.items())
                   + f" time_sensitive={sum(c.tags['time_sensitive'] for c in cases)}")


@main.command()
@click.option("--benchmark", "bench_path", type=click.Path(exists=True, dir_okay=False),
              help="Benchmark JSON (default: packaged mini-benchmark).")
@click.option("--outputs", "outputs_dir", type=click.Path(exists=True, file_okay=False), required=True,
              help="Directory written by 'translate'.")
@click.option("--variant", type=click.Choice(["corrected", "raw", "both"]), default="both", show_default=True)
@click.option("--label", default=None, help="Row label in the table.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), help="Write the EvalReport JSON here.")
def evaluate(bench_path, outputs_dir, variant, label, report_path):
    """Score translate outputs against benchmark references (mean ± SD over runs)."""
    cases = bench.load_benchmark(bench_path) if bench_path else bench.mini_benchmark()
    variants = ["raw", "corrected"] if variant == "both" else [variant]
    label = label or Path(outputs_dir).name
    rows = []
    reports = {}
    for v in variants:
        runs = load_outputs(outputs_dir, [c.id for c in cases], variant=v)
        try:
            rep = bench.evaluate_run(cases, runs, config={"outputs": str(outputs_dir), "variant": v})
        except (KeyError, ValueError) as exc:
            _fail(str(exc).strip("'\""), 1)
        rows.append((f"{label} ({v})", rep))
        reports[v] = rep.to_dict()
    click.echo(bench.format_table(rows))
    if report_path:
        Path(report_path).write_text(json.dumps(reports, indent=2) + "\n", encoding="utf-8")


if __name__ == "__main__":  # pragma: no cover
    main()
