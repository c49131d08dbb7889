"""Deterministic stand-in for a language model.

The mock reads only the prompt. It detects the stage from the preamble tag,
infers how much context it was given (exemplar count, semantic-model and
profile blocks) and emits canonical sub-intents or a `tc` script. Flaws are
injected when the prompt carries ``[MOCK:flaw=a,b]``; the special name
``graded`` selects a flaw set that shrinks as the prompt gains context.
"""

from __future__ import annotations

import re
from dataclasses import replace

from tcintent.profile import default_profile
from tcintent.subintent import (
    METRICS,
    MatchDirective,
    MetricBound,
    PriorityDirective,
    SubIntentSet,
    TimeWindow,
    parse_subintents,
    serialize_subintents,
)
from tcintent.tc_lang import (
    ClassAdd,
    FilterAdd,
    Match,
    QdiscAdd,
    TcConfig,
    U32Selector,
    norm_handle,
    serialize,
)

SUBINTENT_FLAWS = ("wrong-threshold", "missing-priority", "conflicting-priority", "missing-match")
CONFIG_FLAWS = ("missing-root", "htb-class-prio", "catch-all", "bad-mask", "missing-udp-match", "no-ceil",
                "missing-window", "wrong-threshold")
GRADED_CONFIG_FLAWS = {
    "zero": CONFIG_FLAWS,
    "one": ("htb-class-prio", "catch-all", "bad-mask"),
    "two": (),
}

_STAGE_RE = re.compile(r"^###\s*STAGE:\s*(\w+)", re.MULTILINE)
_MARKER_RE = re.compile(r"\[MOCK:flaw=([^\]]*)\]")

_LOW_CUES = re.compile(r"\b(deprioriti[sz]e\w*|limit\w*|cap\w*|throttl\w*|at most|no more than|restrict\w*|"
                       r"background|best[- ]effort|lower)\b")
_HIGH_CUES = re.compile(r"\b(prioriti[sz]e\w*|guarantee\w*|favou?r\w*|protect\w*|at least|minimi[sz]e\w*|"
                        r"reduce\w*|expedite\w*|ensure\w*|keep\w*|critical|urgent)\b")
_CLAUSE_BREAK = re.compile(r"[,;.]|\b(and|while|but|whereas)\b")
_LATENCY_RE = re.compile(r"(\d+(?:\.\d+)?)\s*(ms|msec|milliseconds?|s|sec|secs|seconds?)\b")
_LOSS_RE = re.compile(r"(\d+(?:\.\d+)?)\s*%")
_BW_RE = re.compile(r"(\d+(?:\.\d+)?)\s*(gbps|gbit/s|mbps|mbit/s|mbit|kbps|kbit/s|kbit)\b")
_BW_LOWER = re.compile(r"(at least|guarantee\w*|minimum|reserve\w*|no less than)\W*(\w+\W+){0,3}$")
_BW_UPPER = re.compile(r"(at most|cap\w*|limit\w*|no more than|maximum|throttl\w*|below|under)\W*(\w+\W+){0,3}$")
_TIME_12 = re.compile(r"\b(\d{1,2})(?::(\d{2}))?\s*(am|pm)\s*(?:-|–|—|to|and|until)\s*"
                      r"(\d{1,2})(?::(\d{2}))?\s*(am|pm)\b")
_TIME_24 = re.compile(r"\b(\d{1,2}):(\d{2})\s*(?:-|–|—|to|and|until)\s*(\d{1,2}):(\d{2})\b")
_CLASS_GUESS = re.compile(r"\b([a-z][a-z0-9_-]*)\s+(?:traffic|flows?|packets|streams?|data|calls)\b")
_NOT_CLASSES = {"all", "other", "the", "network", "priority", "any", "low", "high", "this", "that", "latency",
                "delay", "and", "of", "for", "critical", "urgent"}


def _blocks(prompt: str) -> dict:
    """Split on '## ' headings; text before the first heading is stored under ''."""
    out = {"": []}
    current = ""
    for line in prompt.splitlines():
        if line.startswith("## "):
            current = line[3:].strip()
            out[current] = []
        else:
            out[current].append(line)
    return out


def _task_input(lines) -> tuple:
    device = None
    body = []
    in_input = False
    for line in lines:
        if line.startswith("Device:"):
            device = line.split(":", 1)[1].strip() or None
        elif line.strip() == "Input:":
            in_input = True
        elif line.strip() == "Output:":
            break
        elif in_input:
            body.append(line)
    return device, "\n".join(body).strip()


def _context_level(blocks) -> str:
    examples = sum(1 for k in blocks if k.startswith("Example"))
    if examples >= 2 and "Semantic model" in blocks:
        return "two"
    return "one" if examples >= 1 else "zero"


def _flaws(blocks, level, stage) -> list:
    m = _MARKER_RE.search("\n".join(blocks[""]))
    if not m:
        return []
    names = [n.strip() for n in m.group(1).split(",") if n.strip()]
    out = []
    for n in names:
        extra = GRADED_CONFIG_FLAWS[level] if n == "graded" and stage == "config" else (n,)
        out += [f for f in extra if f not in out and f != "graded"]
    return out


# --- stage 1 ---------------------------------------------------------------

def _mentions(label: str) -> list:
    entry = default_profile().get(label)
    words = set(entry.keywords) if entry else set()
    words.add(label)
    words.add(label.replace("_", " "))
    return sorted(words, key=len, reverse=True)


def _position(text: str, label: str) -> int | None:
    hits = [m.start() for w in _mentions(label) for m in re.finditer(rf"\b{re.escape(w)}\b", text)]
    return min(hits) if hits else None


def _clause_before(text: str, pos: int) -> str:
    head = text[:pos]
    breaks = [m.end() for m in _CLAUSE_BREAK.finditer(head)]
    return head[breaks[-1]:] if breaks else head


def _level(text, pos, fallback) -> str:
    if pos is None:
        return fallback
    clause = _clause_before(text, pos)
    if _LOW_CUES.search(clause):
        return "low"
    if _HIGH_CUES.search(clause):
        return "high"
    return fallback


def _nearest_level(pos, placed, default="high") -> str:
    if not placed:
        return default
    return min(placed, key=lambda p: abs(p[0] - pos))[1]


def _window(text) -> TimeWindow | None:
    m = _TIME_12.search(text)
    if m:
        def hhmm(h, mins, ampm):
            h = int(h) % 12 + (12 if ampm == "pm" else 0)
            return f"{h:02d}:{int(mins or 0):02d}"

        return TimeWindow(hhmm(m.group(1), m.group(2), m.group(3)), hhmm(m.group(4), m.group(5), m.group(6)))
    m = _TIME_24.search(text)
    if m and int(m.group(1)) < 24 and int(m.group(3)) < 24:
        return TimeWindow(f"{int(m.group(1)):02d}:{m.group(2)}", f"{int(m.group(3)):02d}:{m.group(4)}")
    return None


def _explicit_bounds(text, placed) -> list:
    out = []
    scrubbed = _TIME_24.sub(" ", _TIME_12.sub(" ", text))
    if re.search(r"\b(delay|latency|wait\w*|jitter|respon\w+)\b", scrubbed):
        for m in _LATENCY_RE.finditer(scrubbed):
            value = float(m.group(1)) / (1000.0 if m.group(2).startswith("m") else 1.0)
            out.append(MetricBound(f"avg_wait_{_nearest_level(m.start(), placed)}", "<=", value, "s"))
    if re.search(r"\b(loss|drop\w*|discard\w*)\b", scrubbed):
        for m in _LOSS_RE.finditer(scrubbed):
            out.append(MetricBound(f"drop_rate_{_nearest_level(m.start(), placed)}", "<=", float(m.group(1)), "%"))
    for m in _BW_RE.finditer(scrubbed):
        value, unit = float(m.group(1)), m.group(2)
        if unit.startswith("g"):
            value, unit = value * 1000, "mbit"
        unit = "kbit" if unit.startswith("k") else "mbit"
        head = scrubbed[max(0, m.start() - 40):m.start()]
        if _BW_LOWER.search(head):
            op = ">="
        elif _BW_UPPER.search(head):
            op = "<="
        else:
            op = ">=" if _nearest_level(m.start(), placed) == "high" else "<="
        out.append(MetricBound("bandwidth", op, value, unit))
    return out


def _guess_classes(text) -> list:
    out = []
    for m in _CLASS_GUESS.finditer(text):
        word = m.group(1).replace("-", "_")
        if word not in _NOT_CLASSES and word not in out:
            out.append(word)
    return out


def _subintent_reply(blocks, level) -> SubIntentSet:
    _, intent = _task_input(blocks.get("Task", []))
    text = intent.lower()
    profile = parse_subintents("\n".join(blocks.get("Traffic profile", [])))
    defaults = {p.traffic_class: p.level for p in profile.of_type(PriorityDirective)}
    matches = profile.of_type(MatchDirective)

    if level == "two":
        labels = [d.traffic_class for d in matches]
    elif level == "one":
        labels = _guess_classes(text)
    else:
        labels = []
    placed = []
    priorities = []
    for label in labels:
        pos = _position(text, label)
        lvl = _level(text, pos, defaults.get(label, "high"))
        priorities.append(PriorityDirective(label, lvl))
        if pos is not None:
            placed.append((pos, lvl))

    bounds = _explicit_bounds(text, placed)
    if level == "two":
        model = parse_subintents("\n".join(blocks.get("Semantic model", []))).of_type(MetricBound)
        for ref in model:
            mine = [b for b in bounds if b.metric == ref.metric and b.op == "<="]
            if not mine:
                bounds.append(ref)
            else:
                bounds = [replace(b, value=min(b.value, ref.value)) if b in mine else b for b in bounds]
    seen = set()
    unique = []
    for b in sorted(bounds, key=lambda b: (METRICS.index(b.metric), b.op)):
        if (b.metric, b.op) not in seen:
            seen.add((b.metric, b.op))
            unique.append(b)

    items = unique + priorities + (matches if level == "two" else [])
    w = _window(text)
    if w:
        items.append(w)
    return SubIntentSet(tuple(items), intent)


def _flaw_subintents(subs: SubIntentSet, flaws) -> SubIntentSet:
    items = list(subs.items)
    if "wrong-threshold" in flaws:
        items = [replace(it, value=round(it.value * 1.5 if it.unit == "s" else it.value + 1, 6))
                 if isinstance(it, MetricBound) and it.op == "<=" and it.metric != "bandwidth" else it
                 for it in items]
    if "missing-priority" in flaws:
        items = [it for it in items if not isinstance(it, PriorityDirective)]
    if "conflicting-priority" in flaws:
        first = next((it for it in items if isinstance(it, PriorityDirective)), None)
        if first is not None:
            items.append(PriorityDirective(first.traffic_class, "low" if first.level == "high" else "high"))
    if "missing-match" in flaws:
        items = [it for it in items if not isinstance(it, MatchDirective)]
    return replace(subs, items=tuple(items))


def _render_subintents(subs: SubIntentSet) -> str:
    # emission order, not canonical order: a conflicting directive stays after the original
    return "".join(it.text() + "\n" for it in subs.items)


# --- stage 2 ---------------------------------------------------------------

def _flaw_config(cfg: TcConfig, flaws) -> TcConfig:
    stmts = list(cfg.statements)
    anns = list(cfg.annotations)
    if "htb-class-prio" in flaws:
        bands = {norm_handle("1:1"): ("prio", "0"), norm_handle("1:2"): ("prio", "2")}
        stmts = [replace(s, extras=s.extras + bands[norm_handle(s.classid)])
                 if isinstance(s, ClassAdd) and norm_handle(s.classid) in bands else s for s in stmts]
    if "wrong-threshold" in flaws:
        stmts = [replace(s, delay_ms=None if s.delay_ms is None else s.delay_ms + 30,
                         loss_pct=None if s.loss_pct is None else min(100.0, s.loss_pct + 1))
                 if isinstance(s, QdiscAdd) and s.kind == "netem" else s for s in stmts]
    if "missing-udp-match" in flaws:
        def strip_proto(f):
            rest = tuple(m for m in f.selector.matches if m.field != "protocol")
            return replace(f, selector=U32Selector(rest)) if rest else f

        stmts = [strip_proto(s) if isinstance(s, FilterAdd) else s for s in stmts]
    if "bad-mask" in flaws:
        stmts = [replace(s, selector=U32Selector(tuple(
            replace(m, mask=0xFFFF) if m.field in ("sport", "dport") else m for m in s.selector.matches)))
            if isinstance(s, FilterAdd) else s for s in stmts]
    if "catch-all" in flaws:
        stmts.append(FilterAdd("1:0", U32Selector((Match("src", "0.0.0.0/0"),)), "1:2", 2))
    if "missing-window" in flaws:
        anns = [a for a in anns if a.kind != "time_window"]
    if "missing-root" in flaws:
        stmts = [s for s in stmts if not (isinstance(s, QdiscAdd) and s.is_root)]
    if "no-ceil" in flaws:
        stmts = [replace(s, ceil=None) if isinstance(s, ClassAdd) else s for s in stmts]
    n = len(stmts)
    anns = [a if a.position <= n else replace(a, position=n) for a in anns]
    return TcConfig(cfg.device, tuple(stmts), tuple(anns))


def _config_reply(blocks, flaws) -> str:
    from tcintent.critic import synthesize

    device, body = _task_input(blocks.get("Task", []))
    subs = parse_subintents(body)
    cfg = synthesize(subs, device or "eth0")
    return serialize(_flaw_config(cfg, flaws))


def detect_stage(prompt: str) -> str:
    m = _STAGE_RE.search(prompt)
    if m and m.group(1) in ("subintent", "config"):
        return m.group(1)
    return "config" if "Device:" in prompt else "subintent"


def mock_complete(prompt: str, seed: int = 0) -> str:
    """Deterministic reply for ``prompt``; ``seed`` is accepted for interface parity and ignored."""
    blocks = _blocks(prompt)
    stage = detect_stage(prompt)
    level = _context_level(blocks)
    flaws = _flaws(blocks, level, stage)
    if stage == "config":
        return _config_reply(blocks, flaws)
    subs = _flaw_subintents(_subintent_reply(blocks, level), flaws)
    return _render_subintents(subs) or serialize_subintents(subs)


