"""End-to-end translation: intent -> sub-intents -> `tc` script, with critic repair at both stages."""

from __future__ import annotations

import json
import logging
import os
import re
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from tcintent.benchmark import DEFAULT_DEVICE, CaseOutput, default_semantic_model
from tcintent.critic import DEFAULT_LINK_RATE, CriticError, fix_subs, fix_tc, lint
from tcintent.lm_gateway import GatewayError, ModelConfig, complete
from tcintent.profile import (
    EmptyIntentError,
    default_profile,
    keywords,
    load_profile,
    profile_filter,
)
from tcintent.prompting import (
    PromptStrategy,
    build_config_prompt,
    build_subintent_prompt,
)
from tcintent.queue_twin import SemanticModel
from tcintent.subintent import SubIntentSet, parse_subintents, serialize_subintents
from tcintent.tc_lang import ParseError, extract_tc_script, parse_tc, serialize

log = logging.getLogger(__name__)

SUBINTENTS_FILE = "subintents.json"
CONFIG_FILE = "config.tc"
REPORT_FILE = "report.json"
RAW_SUBINTENTS_FILE = "raw_subintents.txt"
RAW_CONFIG_FILE = "raw_config.tc"
SUMMARY_FILE = "summary.json"
_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    device: str = DEFAULT_DEVICE
    semantic_model: str | None = None  # path; None selects the packaged voice fixture
    profile: str | None = None  # path; None selects the packaged profile
    strategy: PromptStrategy = PromptStrategy.TWO_SHOT_AQM
    model: ModelConfig = field(default_factory=ModelConfig)
    output_dir: str = "out"
    runs: int = 1
    seed: int = 0
    mock_flaws: tuple = ()  # config-stage test markers for the mock backend
    mock_subintent_flaws: tuple = ()
    parallelism: int = 1
    link_rate: str = DEFAULT_LINK_RATE

    def __post_init__(self):
        object.__setattr__(self, "strategy", PromptStrategy.parse(self.strategy)
                           if not isinstance(self.strategy, PromptStrategy) else self.strategy)
        if int(self.runs) != self.runs or self.runs < 1:
            raise ConfigurationError("runs must be an integer >= 1")
        if self.parallelism < 1:
            raise ConfigurationError("parallelism must be >= 1")
        if not self.device:
            raise ConfigurationError("device must be set")
        for p in (self.semantic_model, self.profile):
            if p is not None and not Path(p).is_file():
                raise ConfigurationError(f"file not found: {p}")

    @classmethod
    def from_dict(cls, d: dict, *, env=None) -> "PipelineConfig":
        d = dict(d)
        if "model" in d and isinstance(d["model"], dict):
            d["model"] = ModelConfig.from_dict(d["model"], env=env)
        for key in ("mock_flaws", "mock_subintent_flaws"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)

    @classmethod
    def load(cls, path, *, env=None) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")), env=env)

    def to_dict(self) -> dict:
        return {
            "device": self.device, "semantic_model": self.semantic_model, "profile": self.profile,
            "strategy": self.strategy.value, "model": self.model.to_dict(), "output_dir": self.output_dir,
            "runs": self.runs, "seed": self.seed, "mock_flaws": list(self.mock_flaws),
            "mock_subintent_flaws": list(self.mock_subintent_flaws), "parallelism": self.parallelism,
            "link_rate": self.link_rate,
        }


@dataclass
class IntentResult:
    id: str
    intent: str
    ok: bool
    error: str | None = None
    raw_subintents: str = ""
    raw_config: str = ""
    subintents: object = None  # corrected SubIntentSet
    config: object = None  # corrected TcConfig
    subintent_report: object = None
    config_report: object = None

    @property
    def corrections(self) -> int:
        return sum(r.corrections for r in (self.subintent_report, self.config_report) if r is not None)

    def outputs(self, variant: str = "corrected") -> CaseOutput:
        if variant == "raw":
            return CaseOutput(self.raw_subintents, self.raw_config)
        return CaseOutput(serialize_subintents(self.subintents) if self.subintents else "",
                          serialize(self.config) if self.config else "")


@dataclass
class PipelineResult:
    runs: list  # [run] -> list of IntentResult

    @property
    def errors(self) -> list:
        return [r for run in self.runs for r in run if not r.ok]

    @property
    def ok(self) -> bool:
        return not self.errors


def _resources(cfg: PipelineConfig):
    try:
        s = SemanticModel.load(cfg.semantic_model) if cfg.semantic_model else default_semantic_model()
        profile = load_profile(cfg.profile) if cfg.profile else default_profile()
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigurationError(f"cannot load pipeline inputs: {exc}") from None
    return s, profile


def translate_intent(intent_id: str, intent: str, cfg: PipelineConfig, s, profile, *, seed: int) -> IntentResult:
    res = IntentResult(intent_id, intent, ok=False)
    try:
        p_k = profile_filter(profile, keywords(intent))
        prompt = build_subintent_prompt(intent, cfg.strategy, s, p_k, flaws=cfg.mock_subintent_flaws)
        res.raw_subintents = complete(prompt, cfg.model, seed=seed)
        raw_subs = parse_subintents(res.raw_subintents, intent)
        res.subintents, res.subintent_report = fix_subs(raw_subs, s, p_k)

        # The config prompt carries the raw sub-intents; the critic checks the script against the corrected ones.
        prompt = build_config_prompt(raw_subs, cfg.strategy, s, p_k, device=cfg.device, flaws=cfg.mock_flaws)
        res.raw_config = complete(prompt, cfg.model, seed=seed)
        raw_cfg = parse_tc(extract_tc_script(res.raw_config))
        raw_cfg = replace(raw_cfg, device=cfg.device)
        res.config, res.config_report = fix_tc(raw_cfg, res.subintents, s, device=cfg.device,
                                               link_rate=cfg.link_rate)
        leftover = lint(res.config, res.subintents, s, device=cfg.device, link_rate=cfg.link_rate)
        if leftover:
            raise CriticError(f"corrected config still violates {sorted({v.rule_id for v in leftover})}")
        res.ok = True
    except (EmptyIntentError, GatewayError, ParseError, CriticError, ValueError) as exc:
        res.error = f"{type(exc).__name__}: {exc}"
        log.error("intent %s failed: %s", intent_id, res.error)
    return res


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_artifacts(res: IntentResult, directory: Path, cfg: PipelineConfig, seed: int) -> None:
    report = {
        "id": res.id,
        "intent": res.intent,
        "status": "ok" if res.ok else "error",
        "error": res.error,
        "strategy": cfg.strategy.value,
        "backend": cfg.model.backend,
        "model": cfg.model.model_name,
        "seed": seed,
        "corrections": res.corrections,
        "subintents": res.subintent_report.to_dict() if res.subintent_report else None,
        "config": res.config_report.to_dict() if res.config_report else None,
    }
    _atomic_write(directory / REPORT_FILE, json.dumps(report, indent=2) + "\n")
    if res.raw_subintents:
        _atomic_write(directory / RAW_SUBINTENTS_FILE, res.raw_subintents)
    if res.raw_config:
        _atomic_write(directory / RAW_CONFIG_FILE, res.raw_config)
    if res.subintents is not None:
        _atomic_write(directory / SUBINTENTS_FILE, res.subintents.dumps())
    if res.config is not None:
        _atomic_write(directory / CONFIG_FILE, serialize(res.config))


def normalize_intents(intents) -> list:
    """Accepts plain strings or (id, text) pairs; plain strings get ids intent-001, intent-002, ..."""
    out = []
    seen = set()
    for i, item in enumerate(intents, start=1):
        intent_id, text = item if isinstance(item, tuple) else (f"intent-{i:03d}", item)
        if not _ID_RE.match(intent_id):
            raise ConfigurationError(f"intent id {intent_id!r} is not a safe directory name")
        if intent_id in seen:
            raise ConfigurationError(f"duplicate intent id {intent_id!r}")
        seen.add(intent_id)
        out.append((intent_id, text))
    return out


def run_pipeline(intents, cfg: PipelineConfig, *, write: bool = True) -> PipelineResult:
    items = normalize_intents(intents)
    s, profile = _resources(cfg)
    root = Path(cfg.output_dir)
    all_runs = []
    for r in range(cfg.runs):
        seed = cfg.seed + r
        base = root / f"run-{r + 1:02d}" if cfg.runs > 1 else root

        def work(item, seed=seed):
            return translate_intent(item[0], item[1], cfg, s, profile, seed=seed)

        if cfg.parallelism > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
                results = list(pool.map(work, items))
        else:
            results = [work(it) for it in items]
        if write:
            for res in results:
                write_artifacts(res, base / res.id, cfg, seed)
        all_runs.append(results)
    result = PipelineResult(all_runs)
    if write:
        summary = {
            "config": {k: v for k, v in cfg.to_dict().items() if k != "output_dir"},
            "runs": [[{"id": res.id, "status": "ok" if res.ok else "error", "error": res.error,
                       "corrections": res.corrections} for res in run] for run in all_runs],
            "errors": len(result.errors),
        }
        _atomic_write(root / SUMMARY_FILE, json.dumps(summary, indent=2) + "\n")
    return result


def load_outputs(directory, case_ids, *, variant: str = "corrected") -> list:
    """Read translate artifacts back as evaluation outputs, one dict per run."""
    directory = Path(directory)
    run_dirs = sorted(p for p in directory.glob("run-*") if p.is_dir()) or [directory]
    runs = []
    for rd in run_dirs:
        run = {}
        for cid in case_ids:
            d = rd / cid
            if variant == "raw":
                subs = d / RAW_SUBINTENTS_FILE
                conf = d / RAW_CONFIG_FILE
                if subs.is_file() or conf.is_file():
                    run[cid] = CaseOutput(subs.read_text("utf-8") if subs.is_file() else "",
                                          conf.read_text("utf-8") if conf.is_file() else "")
            else:
                subs = d / SUBINTENTS_FILE
                conf = d / CONFIG_FILE
                if subs.is_file() and conf.is_file():
                    run[cid] = CaseOutput(serialize_subintents(SubIntentSet.from_json(subs.read_text("utf-8"))),
                                          conf.read_text("utf-8"))
        runs.append(run)
    return runs
