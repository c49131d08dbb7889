"""Benchmark cases, the template generator, and multi-run evaluation."""

from __future__ import annotations

import json
import logging
import math
import statistics
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from tcintent.critic import fix_subs, fix_tc, lint
from tcintent.metrics import (
    HashingEmbedder,
    ned,
    rouge_l_f1,
    semantic_similarity,
    semantic_unit_coverage,
    token_prf,
    tokenize,
)
from tcintent.profile import default_profile
from tcintent.queue_twin import SemanticModel
from tcintent.subintent import (
    MetricBound,
    PriorityDirective,
    SubIntentSet,
    TimeWindow,
    parse_subintents,
    serialize_subintents,
)
from tcintent.tc_lang import (
    ParseError,
    TcConfig,
    extract_semantic_units,
    extract_tc_script,
    parse_statement,
    parse_tc,
    serialize,
)

log = logging.getLogger(__name__)

OBJECTIVES = ("priority_fairness", "latency", "bandwidth", "time_load", "drop_rate")
OBJECTIVE_WEIGHTS = (28, 24, 22, 15, 11)
TIME_SENSITIVE_SHARE = 0.47
MULTI_OBJECTIVE_SHARE = 0.28
# application mix of the dataset, mapped onto profile labels
TRAFFIC_WEIGHTS = {"telemetry": 43, "video": 19, "iot_alerts": 11, "robotics": 6, "elearning": 9, "gaming": 4,
                   "voice": 8}
STAGE1_METRICS = ("similarity", "rouge_l_f1", "token_p", "token_r", "token_f1")
STAGE2_METRICS = ("coverage", "cfg_token_p", "cfg_token_r", "cfg_token_f1", "ned")
METRIC_NAMES = STAGE1_METRICS + STAGE2_METRICS
DEFAULT_DEVICE = "eth0"


@lru_cache(maxsize=1)
def default_semantic_model() -> SemanticModel:
    text = resources.files("tcintent.data").joinpath("voice_semantic_model.json").read_text(encoding="utf-8")
    return SemanticModel.from_dict(json.loads(text))


@dataclass(frozen=True)
class BenchmarkCase:
    id: str
    intent: str
    ref_subintents: SubIntentSet
    ref_config: TcConfig
    tags: dict = field(default_factory=dict)

    @property
    def objectives(self) -> list:
        return list(self.tags.get("objectives", ()))

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "intent": self.intent,
            "ref_subintents": serialize_subintents(self.ref_subintents),
            "ref_config": serialize(self.ref_config),
            "tags": self.tags,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BenchmarkCase":
        subs = parse_subintents(d["ref_subintents"], d["intent"])
        if subs.warnings:
            raise ValueError(f"case {d['id']}: reference sub-intents do not parse cleanly: {subs.warnings}")
        return cls(d["id"], d["intent"], subs, parse_tc(d["ref_config"]), dict(d.get("tags", {})))


def save_benchmark(cases, path) -> None:
    Path(path).write_text(json.dumps([c.to_dict() for c in cases], indent=2) + "\n", encoding="utf-8")


def loads_benchmark(text: str) -> list:
    return [BenchmarkCase.from_dict(d) for d in json.loads(text)]


def load_benchmark(path) -> list:
    return loads_benchmark(Path(path).read_text(encoding="utf-8"))


def mini_benchmark() -> list:
    return loads_benchmark(resources.files("tcintent.data").joinpath("mini_benchmark.json").read_text("utf-8"))


def build_references(raw: SubIntentSet, s, p_k, device=DEFAULT_DEVICE):
    """Reference artifacts are the critic's canonical rendering of hand-specified raw sub-intents."""
    subs, _ = fix_subs(raw, s, p_k)
    cfg, _ = fix_tc(TcConfig(device), subs, s, device=device)
    return subs, cfg


# --- generator -------------------------------------------------------------

def largest_remainder(n: int, weights) -> list:
    weights = list(weights)
    total = sum(weights)
    quotas = [n * w / total for w in weights]
    counts = [math.floor(q) for q in quotas]
    order = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[: n - sum(counts)]:
        counts[i] += 1
    return counts


_NAMES = {
    "telemetry": "IoT sensor telemetry",
    "video": "video conferencing",
    "iot_alerts": "fire alarm",
    "robotics": "industrial robot control",
    "elearning": "e-learning lecture",
    "gaming": "online gaming",
    "voice": "voice",
}
_WINDOWS = (("20:00", "01:00"), ("08:00", "18:00"), ("22:00", "06:00"), ("09:00", "17:00"), ("18:00", "23:00"))


def _clock(hhmm: str) -> str:
    h = int(hhmm[:2])
    suffix = "AM" if h < 12 else "PM"
    return f"{h % 12 or 12} {suffix}"


def _clause(objective, name, rng, level):
    """(text, raw sub-intent items, level) for one objective."""
    if objective == "priority_fairness":
        if level == "high":
            return f"prioritize {name} traffic over other flows", [], level
        return f"deprioritize {name} traffic so other flows get a fair share", [], level
    if objective == "latency":
        ms = int(rng.choice([10, 20, 30, 50, 80, 100]))
        return f"keep {name} delay below {ms} ms", [MetricBound(f"avg_wait_{level}", "<=", ms / 1000, "s")], level
    if objective == "bandwidth":
        mbit = int(rng.choice([10, 20, 30, 40]))
        if level == "high":
            return (f"guarantee at least {mbit} Mbps for {name} traffic",
                    [MetricBound("bandwidth", ">=", float(mbit), "mbit")], level)
        return f"cap {name} traffic at {mbit} Mbps", [MetricBound("bandwidth", "<=", float(mbit), "mbit")], level
    if objective == "drop_rate":
        pct = float(rng.choice([0.1, 0.2, 0.3]))
        return (f"keep {name} packet loss under {pct:g}%", [MetricBound(f"drop_rate_{level}", "<=", pct, "%")],
                level)
    if objective == "time_load":
        return f"protect {name} traffic during peak load", [], level
    raise ValueError(objective)


def generate_benchmark(n: int, seed: int, *, s=None, profile=None, device=DEFAULT_DEVICE) -> list:
    """Template-generated cases whose tags follow the dataset's objective mix (largest-remainder rounding)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n < len(OBJECTIVES):
        log.warning("n=%d cannot cover all %d objectives; proportions are best-effort", n, len(OBJECTIVES))
    s = s or default_semantic_model()
    profile = profile or default_profile()
    rng = np.random.Generator(np.random.PCG64(seed))

    primaries = [o for o, c in zip(OBJECTIVES, largest_remainder(n, OBJECTIVE_WEIGHTS)) for _ in range(c)]
    rng.shuffle(primaries)
    labels = [t for t, c in zip(TRAFFIC_WEIGHTS, largest_remainder(n, TRAFFIC_WEIGHTS.values())) for _ in range(c)]
    rng.shuffle(labels)

    n_time = min(n, round(TIME_SENSITIVE_SHARE * n))
    forced = [i for i, o in enumerate(primaries) if o == "time_load"]
    others = [i for i in range(n) if primaries[i] != "time_load"]
    extra = rng.permutation(others)[: max(0, n_time - len(forced))].tolist()
    time_sensitive = set(forced) | set(extra)
    multi = set(rng.permutation(n)[: round(MULTI_OBJECTIVE_SHARE * n)].tolist())

    cases = []
    for i in range(n):
        label, primary = labels[i], primaries[i]
        entry = profile.get(label)
        name = _NAMES.get(label, label)
        level = str(rng.choice(["high", "low"])) if primary in ("priority_fairness", "bandwidth") else "high"
        text, items, level = _clause(primary, name, rng, level)
        objectives = [primary]
        if i in multi:
            pool = [o for o in ("latency", "drop_rate", "bandwidth") if o != primary]
            second = str(rng.choice(pool))
            text2, items2, _ = _clause(second, "its", rng, level)
            text = f"{text} and {text2.replace(' for its traffic', '')}"
            items += items2
            objectives.append(second)
        window = None
        if i in time_sensitive:
            window = _WINDOWS[int(rng.integers(len(_WINDOWS)))]
            text += f" between {_clock(window[0])} and {_clock(window[1])}"
        raw = list(items) + [PriorityDirective(label, level)]
        if window:
            raw.append(TimeWindow(*window))
        intent = text[0].upper() + text[1:]
        ref_subs, ref_cfg = build_references(SubIntentSet(tuple(raw), intent), s, [entry] if entry else [], device)
        tags = {"objectives": objectives, "primary": primary, "traffic_type": label,
                "time_sensitive": window is not None, "multi_objective": len(objectives) > 1}
        cases.append(BenchmarkCase(f"gen-{seed}-{i + 1:03d}", intent, ref_subs, ref_cfg, tags))
    return cases


def tag_histogram(cases) -> dict:
    hist = {o: 0 for o in OBJECTIVES}
    for c in cases:
        hist[c.tags["primary"]] += 1
    return hist


def validate_case(case: BenchmarkCase, s=None) -> list:
    return lint(case.ref_config, case.ref_subintents, s, device=case.ref_config.device)


# --- evaluation ------------------------------------------------------------

@dataclass(frozen=True)
class CaseOutput:
    subintents: str  # sub-intent text (any form parse_subintents accepts)
    config: str  # tc script text


def tolerant_parse_tc(text: str) -> TcConfig:
    """Parse what can be parsed; unreadable lines are skipped."""
    script = extract_tc_script(text)
    try:
        return parse_tc(script)
    except ParseError:
        good = []
        for line in script.splitlines():
            try:
                if line.strip().startswith("#") or parse_statement(line) is not None:
                    good.append(line)
            except ParseError:
                continue
        try:
            return parse_tc("\n".join(good))
        except ParseError:
            return TcConfig()


def score_case(case: BenchmarkCase, out: CaseOutput, embedder) -> dict:
    gen_subs = serialize_subintents(parse_subintents(out.subintents))
    ref_subs = serialize_subintents(case.ref_subintents)
    g1, r1 = tokenize(gen_subs), tokenize(ref_subs)
    p1, rc1, f1 = token_prf(g1, r1)
    sim = semantic_similarity(gen_subs, ref_subs, embedder) if gen_subs.strip() else 0.0

    gen_cfg = tolerant_parse_tc(out.config)
    gen_text = serialize(gen_cfg) if gen_cfg.device or not gen_cfg.statements else ""
    ref_text = serialize(case.ref_config)
    g2, r2 = tokenize(gen_text), tokenize(ref_text)
    p2, rc2, f2 = token_prf(g2, r2)
    return {
        "similarity": sim, "rouge_l_f1": rouge_l_f1(g1, r1), "token_p": p1, "token_r": rc1, "token_f1": f1,
        "coverage": semantic_unit_coverage(extract_semantic_units(gen_cfg), extract_semantic_units(case.ref_config)),
        "cfg_token_p": p2, "cfg_token_r": rc2, "cfg_token_f1": f2, "ned": ned(g2, r2),
    }


@dataclass(frozen=True)
class EvalReport:
    per_case: list  # [run][case] -> {"id", metrics...}
    aggregate: dict  # metric -> {"mean", "sd", "case_sd"}
    runs: int
    config: dict = field(default_factory=dict)
    flags: tuple = ()

    def to_dict(self) -> dict:
        return {"runs": self.runs, "config": self.config, "flags": list(self.flags),
                "aggregate": self.aggregate, "per_case": self.per_case}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _sd(values) -> float:
    return statistics.stdev(values) if len(values) > 1 else 0.0


def evaluate_run(cases, outputs, runs: int | None = None, *, embedder=None, config=None) -> EvalReport:
    """``outputs[r][case_id]`` is the CaseOutput of run ``r``."""
    outputs = list(outputs)
    runs = len(outputs) if runs is None else runs
    if runs < 1 or len(outputs) != runs:
        raise ValueError(f"expected outputs for {runs} run(s), got {len(outputs)}")
    if not cases:
        raise ValueError("benchmark is empty")
    embedder = embedder or HashingEmbedder()
    per_case = []
    for r, run in enumerate(outputs):
        missing = [c.id for c in cases if c.id not in run]
        if missing:
            raise KeyError(f"run {r + 1}: no output for case(s) {', '.join(missing)}")
        per_case.append([{"id": c.id, **score_case(c, run[c.id], embedder)} for c in cases])

    aggregate = {}
    for m in METRIC_NAMES:
        run_means = [statistics.fmean(row[m] for row in rows) for rows in per_case]
        pooled = [row[m] for rows in per_case for row in rows]
        aggregate[m] = {"mean": statistics.fmean(run_means), "sd": _sd(run_means), "case_sd": _sd(pooled)}
    flags = ("sd_undefined_single_run",) if runs == 1 else ()
    cfg = dict(config or {})
    cfg.setdefault("embedder", getattr(embedder, "name", type(embedder).__name__))
    return EvalReport(per_case, aggregate, runs, cfg, flags)


_TABLE_COLUMNS = {
    "IV": (("Similarity", "similarity"), ("ROUGE-L F1", "rouge_l_f1"), ("Precision", "token_p"),
           ("Recall", "token_r"), ("F1", "token_f1")),
    "V": (("Coverage", "coverage"), ("Precision", "cfg_token_p"), ("Recall", "cfg_token_r"), ("F1", "cfg_token_f1"),
          ("NED", "ned")),
}
_TABLE_TITLES = {"IV": "Stage 1: intent -> sub-intents", "V": "Stage 2: sub-intents -> tc configuration"}


def format_table(rows) -> str:
    """``rows``: (label, EvalReport) pairs. Two blocks, cells 'mean ± sd'."""
    rows = list(rows)
    width = max([len("Setting")] + [len(label) for label, _ in rows])
    out = []
    for key in ("IV", "V"):
        cols = _TABLE_COLUMNS[key]
        out.append(_TABLE_TITLES[key])
        out.append(f"{'Setting':<{width}}  " + "  ".join(f"{name:>13}" for name, _ in cols))
        for label, rep in rows:
            cells = [f"{rep.aggregate[m]['mean']:.3f} ± {rep.aggregate[m]['sd']:.3f}" for _, m in cols]
            out.append(f"{label:<{width}}  " + "  ".join(f"{c:>13}" for c in cells))
        out.append("")
    return "\n".join(out)
