"""Declarative sub-intents: the closed statement language between intent and config.

Canonical statements, one per line::

    avg_wait_high <= 0.13s
    drop_rate_low <= 5%
    bandwidth >= 20mbit
    assign_priority(telemetry, low)
    match(robotics, 10.1.1.0/24, 502, tcp)
    window(20:00, 01:00)

``parse_subintents`` scans free text for these patterns and never raises;
anything it cannot read is reported in ``warnings``.
"""

from __future__ import annotations

import ipaddress
import json
import re
from dataclasses import dataclass, field

from tcintent.tc_lang import norm_hhmm

WAIT_METRICS = ("avg_wait_high", "avg_wait_low")
DROP_METRICS = ("drop_rate_high", "drop_rate_low")
METRICS = WAIT_METRICS + DROP_METRICS + ("bandwidth",)
UNITS = ("s", "ms", "%", "kbit", "mbit")
LEVELS = ("high", "low")


@dataclass(frozen=True)
class MetricBound:
    metric: str
    op: str
    value: float
    unit: str

    def text(self) -> str:
        return f"{self.metric} {self.op} {format_number(self.value)}{self.unit}"


@dataclass(frozen=True)
class PriorityDirective:
    traffic_class: str
    level: str

    def text(self) -> str:
        return f"assign_priority({self.traffic_class}, {self.level})"


@dataclass(frozen=True)
class MatchDirective:
    traffic_class: str
    src_cidr: str | None = None
    ports: tuple | None = None
    protocol: str | None = None

    def text(self) -> str:
        if self.ports is None:
            ports = "*"
        elif self.ports[0] == self.ports[1]:
            ports = str(self.ports[0])
        else:
            ports = f"{self.ports[0]}-{self.ports[1]}"
        return f"match({self.traffic_class}, {self.src_cidr or '*'}, {ports}, {self.protocol or '*'})"


@dataclass(frozen=True)
class TimeWindow:
    start: str
    end: str

    def text(self) -> str:
        return f"window({self.start}, {self.end})"


_CATEGORY = {MetricBound: 0, PriorityDirective: 1, MatchDirective: 2, TimeWindow: 3}


def _order_key(it):
    if isinstance(it, MetricBound):
        rank = METRICS.index(it.metric) if it.metric in METRICS else len(METRICS)
        return (0, rank, it.metric, it.op)
    if isinstance(it, (PriorityDirective, MatchDirective)):
        return (_CATEGORY[type(it)], 0, it.traffic_class, "")
    return (3, 0, "", "")


def canonical_order(items) -> tuple:
    """Bounds by metric, then priorities and matches by class label, then the window (stable sort)."""
    return tuple(sorted(items, key=_order_key))


@dataclass(frozen=True)
class SubIntentSet:
    items: tuple = ()
    source_intent: str = ""
    warnings: tuple = field(default=(), compare=False)

    def of_type(self, kind) -> list:
        return [it for it in self.items if isinstance(it, kind)]

    @property
    def window(self) -> TimeWindow | None:
        found = self.of_type(TimeWindow)
        return found[0] if found else None

    def to_dict(self) -> dict:
        return {
            "source_intent": self.source_intent,
            "items": [item_to_dict(it) for it in self.items],
            "warnings": list(self.warnings),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, data) -> "SubIntentSet":
        """Accepts the object form or a bare array of items."""
        if isinstance(data, str):
            data = json.loads(data)
        if isinstance(data, list):
            return cls(tuple(item_from_dict(d) for d in data))
        return cls(tuple(item_from_dict(d) for d in data["items"]), data.get("source_intent", ""),
                   tuple(data.get("warnings", ())))


def format_number(v: float) -> str:
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def semantic_bounds(s) -> list:
    """A semantic model's thresholds as canonical bounds (waits in s, drops in %)."""
    if s is None:
        return []
    out = []
    for t in s.thresholds:
        if t.metric in WAIT_METRICS:
            out.append(MetricBound(t.metric, "<=", float(t.value), "s"))
        elif t.metric in DROP_METRICS:
            out.append(MetricBound(t.metric, "<=", float(f"{t.value * 100:.10g}"), "%"))
    return out


def item_to_dict(it) -> dict:
    if isinstance(it, MetricBound):
        return {"type": "metric_bound", "metric": it.metric, "op": it.op, "value": it.value, "unit": it.unit}
    if isinstance(it, PriorityDirective):
        return {"type": "priority", "traffic_class": it.traffic_class, "level": it.level}
    if isinstance(it, MatchDirective):
        return {"type": "match", "traffic_class": it.traffic_class, "src_cidr": it.src_cidr,
                "ports": list(it.ports) if it.ports else None, "protocol": it.protocol}
    if isinstance(it, TimeWindow):
        return {"type": "time_window", "start": it.start, "end": it.end}
    raise TypeError(f"not a sub-intent: {it!r}")


def item_from_dict(d: dict):
    kind = d.get("type")
    if kind == "metric_bound":
        return MetricBound(d["metric"], d["op"], float(d["value"]), d["unit"])
    if kind == "priority":
        return PriorityDirective(d["traffic_class"], d["level"])
    if kind == "match":
        ports = tuple(d["ports"]) if d.get("ports") else None
        return MatchDirective(d["traffic_class"], d.get("src_cidr"), ports, d.get("protocol"))
    if kind == "time_window":
        return TimeWindow(d["start"], d["end"])
    raise ValueError(f"unknown sub-intent type {kind!r}")


# --- text form -------------------------------------------------------------

_NUM = r"-?[0-9]+(?:\.[0-9]+)?(?:[eE][+-]?[0-9]+)?"
_METRIC_RE = re.compile(
    r"\b(" + "|".join(METRICS) + r")\s*(<=|>=|=<|=>|≤|≥)\s*(" + _NUM + r")\s*"
    r"(ms|s|%|kbit/s|kbit|kbps|mbit/s|mbit|mbps)(?![A-Za-z0-9_/])",
    re.IGNORECASE,
)
_PRIO_RE = re.compile(r"\bassign_priority\(\s*([a-z][a-z0-9_]*)\s*,\s*(high|low)\s*\)", re.IGNORECASE)
_MATCH_RE = re.compile(r"\bmatch\(\s*([a-z][a-z0-9_]*)\s*((?:,\s*[^,()]*?\s*){0,3})\)", re.IGNORECASE)
_WINDOW_RE = re.compile(r"\bwindow\(\s*(\d{1,2}:\d{2})\s*,\s*(\d{1,2}:\d{2})\s*\)", re.IGNORECASE)

_OPS = {"<=": "<=", "=<": "<=", "≤": "<=", ">=": ">=", "=>": ">=", "≥": ">="}
_UNIT_ALIASES = {"kbit/s": "kbit", "kbps": "kbit", "mbit/s": "mbit", "mbps": "mbit"}


def _bound(m) -> MetricBound:
    metric = m.group(1).lower()
    value = float(m.group(3))
    unit = m.group(4).lower()
    unit = _UNIT_ALIASES.get(unit, unit)
    if unit == "ms" and metric in WAIT_METRICS:
        value, unit = value / 1000.0, "s"
    return MetricBound(metric, _OPS[m.group(2)], value, unit)


def _match_directive(m) -> MatchDirective:
    cls = m.group(1).lower()
    args = [a.strip() for a in m.group(2).split(",")[1:]] if m.group(2) else []
    args += ["*"] * (3 - len(args))
    cidr, ports, proto = (None if a in ("*", "", "any") else a for a in args)
    if cidr is not None:
        cidr = str(ipaddress.IPv4Network(cidr, strict=False))
    if ports is not None:
        lo, _, hi = ports.partition("-")
        lo, hi = int(lo), int(hi or lo)
        if not 0 <= lo <= hi <= 65535:
            raise ValueError(f"bad port range {ports!r}")
        ports = (lo, hi)
    if proto is not None:
        proto = proto.lower()
        if proto not in ("tcp", "udp"):
            raise ValueError(f"bad protocol {proto!r}")
    return MatchDirective(cls, cidr, ports, proto)


def _window(m) -> TimeWindow:
    start, end = m.group(1), m.group(2)
    try:
        return TimeWindow(norm_hhmm(start), norm_hhmm(end))
    except ValueError:
        return TimeWindow(start, end)


_PATTERNS = ((_METRIC_RE, _bound), (_PRIO_RE, lambda m: PriorityDirective(m.group(1).lower(), m.group(2).lower())),
             (_MATCH_RE, _match_directive), (_WINDOW_RE, _window))


def parse_subintents(lm_output: str, source_intent: str = "") -> SubIntentSet:
    items = []
    warnings = []
    for lineno, line in enumerate(lm_output.splitlines(), start=1):
        if not line.strip():
            continue
        found = []
        for regex, build in _PATTERNS:
            for m in regex.finditer(line):
                try:
                    found.append((m.start(), build(m)))
                except ValueError as exc:
                    warnings.append(f"line {lineno}: unreadable statement {m.group(0)!r}: {exc}")
        if not found:
            warnings.append(f"line {lineno}: no sub-intent statement in {line.strip()[:80]!r}")
            continue
        for _, item in sorted(found, key=lambda f: f[0]):
            if item in items:
                warnings.append(f"line {lineno}: duplicate statement {item.text()!r} collapsed")
            else:
                items.append(item)
    return SubIntentSet(tuple(items), source_intent, tuple(warnings))


def serialize_subintents(s: SubIntentSet) -> str:
    if not s.items:
        return ""
    return "\n".join(it.text() for it in canonical_order(s.items)) + "\n"
