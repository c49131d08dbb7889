"""Prompt construction for the two generation stages.

Layout (blocks appear only when the strategy calls for them)::

    <preamble asset, first line carries the stage tag>
    [MOCK:flaw=...]            optional test marker for the mock backend
    ## Semantic model          TwoShotAqm only
    ## Traffic profile         TwoShotAqm only
    ## Example N               0, 1 or 2 exemplars
    ## Task
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from tcintent.subintent import (
    MatchDirective,
    PriorityDirective,
    SubIntentSet,
    semantic_bounds,
    serialize_subintents,
)

STAGES = ("subintent", "config")
STAGE_TAG = "### STAGE:"
MOCK_MARKER = "[MOCK:flaw="


class PromptError(ValueError):
    pass


class PromptStrategy(str, enum.Enum):
    ZERO_SHOT = "ZeroShot"
    ONE_SHOT = "OneShot"
    TWO_SHOT_AQM = "TwoShotAqm"

    @property
    def n_exemplars(self) -> int:
        return {"ZeroShot": 0, "OneShot": 1, "TwoShotAqm": 2}[self.value]

    @classmethod
    def parse(cls, text: str) -> "PromptStrategy":
        aliases = {"zero": cls.ZERO_SHOT, "one": cls.ONE_SHOT, "two-aqm": cls.TWO_SHOT_AQM, "two": cls.TWO_SHOT_AQM}
        key = str(text).strip()
        if key.lower() in aliases:
            return aliases[key.lower()]
        try:
            return cls(key)
        except ValueError:
            raise PromptError(f"unknown strategy {text!r}") from None


@dataclass(frozen=True)
class Exemplar:
    stage: str
    input: str
    output: str
    focus: str = ""

    def __post_init__(self):
        if self.stage not in STAGES:
            raise PromptError(f"unknown exemplar stage {self.stage!r}")


@lru_cache(maxsize=None)
def preamble(stage: str) -> str:
    if stage not in STAGES:
        raise PromptError(f"unknown stage {stage!r}")
    return resources.files("tcintent.data").joinpath(f"prompts/{stage}_preamble.txt").read_text(encoding="utf-8")


@lru_cache(maxsize=1)
def _exemplar_table() -> tuple:
    text = resources.files("tcintent.data").joinpath("exemplars.json").read_text(encoding="utf-8")
    return tuple(Exemplar(**e) for e in json.loads(text))


def load_exemplars(stage: str) -> list:
    return [e for e in _exemplar_table() if e.stage == stage]


def default_exemplars(stage: str, strategy: PromptStrategy) -> list:
    return load_exemplars(stage)[: strategy.n_exemplars]


def mock_marker(flaws) -> str:
    return f"{MOCK_MARKER}{','.join(flaws)}]"


def _profile_lines(p_k) -> list:
    lines = []
    for e in p_k:
        lo, hi = e.dst_ports
        ports = None if (lo, hi) == (0, 65535) else (lo, hi)
        proto = None if e.protocol == "any" else e.protocol
        lines.append(MatchDirective(e.traffic_type, e.src_cidr, ports, proto).text())
        lines.append(PriorityDirective(e.traffic_type, e.default_priority).text())
    return lines


def _assemble(stage, strategy, task_lines, s, p_k, exemplars, flaws) -> str:
    strategy = PromptStrategy(strategy)
    if exemplars is None:
        exemplars = default_exemplars(stage, strategy)
    exemplars = list(exemplars)
    if len(exemplars) != strategy.n_exemplars:
        raise PromptError(f"{strategy.value} needs {strategy.n_exemplars} exemplar(s), got {len(exemplars)}")
    for e in exemplars:
        if e.stage != stage:
            raise PromptError(f"exemplar for stage {e.stage!r} passed to the {stage} prompt")
    if strategy is PromptStrategy.TWO_SHOT_AQM and s is None:
        raise PromptError("TwoShotAqm needs a semantic model")

    parts = [preamble(stage).rstrip("\n")]
    if flaws:
        parts.append(mock_marker(flaws))
    if strategy is PromptStrategy.TWO_SHOT_AQM:
        parts.append("\n## Semantic model\n" + "\n".join(b.text() for b in semantic_bounds(s)))
        profile = _profile_lines(p_k)
        if profile:
            parts.append("\n## Traffic profile\n" + "\n".join(profile))
    for i, e in enumerate(exemplars, start=1):
        parts.append(f"\n## Example {i}\nInput:\n{e.input.strip()}\nOutput:\n{e.output.strip()}")
    parts.append("\n## Task\n" + "\n".join(task_lines) + "\nOutput:")
    return "\n".join(parts) + "\n"


def build_subintent_prompt(intent: str, strategy: PromptStrategy, s=None, p_k=(), exemplars=None, *,
                           flaws=()) -> str:
    return _assemble("subintent", strategy, ["Input:", intent.strip()], s, p_k, exemplars, flaws)


def build_config_prompt(subs: SubIntentSet, strategy: PromptStrategy, s=None, p_k=(), exemplars=None, *,
                        device: str = "eth0", flaws=()) -> str:
    body = serialize_subintents(subs).rstrip("\n") or "(no sub-intents)"
    return _assemble("config", strategy, [f"Device: {device}", "Input:", body], s, p_k, exemplars, flaws)
