"""Deterministic rule-based critic for sub-intents and `tc` configurations.

Two rule sets run in a fixed order. Sub-intent rules (``d*``) normalise and
complete the raw sub-intents against the semantic model and the matching
profile entries. Config rules (``c*``) repair a raw `tc` script so that it
realises the corrected sub-intents on a two-band htb hierarchy:

    root 1: htb default 2
      class 1:1  high band, leaf netem 10:, filters prio 1
      class 1:2  low band (default), leaf netem 20:, filters prio 2

Every fix is recorded as a ``Violation``; ``lint`` reports the same
violations without applying them.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, replace

from tcintent.subintent import (
    DROP_METRICS,
    LEVELS,
    METRICS,
    WAIT_METRICS,
    MatchDirective,
    MetricBound,
    PriorityDirective,
    SubIntentSet,
    TimeWindow,
    canonical_order,
    semantic_bounds,
    serialize_subintents,
)
from tcintent.tc_lang import (
    FULL_PROTO_MASK,
    IP_PROTOCOLS,
    Annotation,
    ClassAdd,
    FilterAdd,
    Match,
    QdiscAdd,
    TcConfig,
    U32Selector,
    format_rate,
    norm_handle,
    norm_hhmm,
    port_blocks,
    rate_bps,
    serialize,
)

DEFAULT_LINK_RATE = "100mbit"
ROOT_HANDLE = "1:"
BAND_CLASSID = {"high": "1:1", "low": "1:2"}
BAND_FILTER_PRIO = {"high": 1, "low": 2}
BAND_LEAF_HANDLE = {"high": "10:", "low": "20:"}
DEFAULT_MINOR = "2"
BANDWIDTH_UNIT_BPS = {"kbit": 10**3, "mbit": 10**6}


@dataclass(frozen=True)
class Rule:
    id: str
    layer: str
    description: str


RULES = {r.id: r for r in (
    Rule("d1", "subintent", "normalise units (waits in s, drops in %, bandwidth in kbit/mbit)"),
    Rule("d2", "subintent", "clamp or add wait/drop bounds from the semantic model"),
    Rule("d3", "subintent", "complete priority and match directives for every mentioned class"),
    Rule("d4", "subintent", "collapse duplicate or conflicting directives, keeping the first"),
    Rule("d5", "subintent", "reject infeasible values (negative, percent > 100, unsupported bounds)"),
    Rule("d6", "subintent", "normalise time windows to HH:MM"),
    Rule("c1", "tc", "single root htb 1: with default band and classes 1:1/1:2; drop dangling objects"),
    Rule("c2", "tc", "strip prio arguments from htb class definitions"),
    Rule("c3", "tc", "align filter flowid/prio with the directive's priority band"),
    Rule("c4", "tc", "rate/ceil sanity and bandwidth bounds"),
    Rule("c5", "tc", "netem delay/loss realise the wait/drop bounds"),
    Rule("c6", "tc", "filters realise match directives exactly; no catch-alls, canonical masks"),
    Rule("c7", "tc", "time window emitted as '# enforce from HH:MM to HH:MM'"),
)}
# d5 runs right after d1 so that infeasible values are rejected before
# clamping could silently rewrite them.
SUB_RULE_ORDER = ("d1", "d5", "d2", "d3", "d4", "d6")
TC_RULE_ORDER = ("c1", "c2", "c3", "c4", "c5", "c6", "c7")


class CriticError(Exception):
    pass


@dataclass(frozen=True)
class Violation:
    rule_id: str
    severity: str  # "error" | "fixable"
    location: str
    message: str
    fix_applied: bool = False

    def __post_init__(self):
        if self.fix_applied and self.severity != "fixable":
            raise ValueError("only fixable violations can be applied")


@dataclass(frozen=True)
class CriticReport:
    violations: tuple
    corrections: int
    input_hash: str
    output_hash: str

    @classmethod
    def build(cls, violations, input_text: str, output_text: str) -> "CriticReport":
        violations = tuple(violations)
        return cls(violations, sum(v.fix_applied for v in violations), digest(input_text), digest(output_text))

    def to_dict(self) -> dict:
        return {
            "violations": [asdict(v) for v in self.violations],
            "corrections": self.corrections,
            "input_hash": self.input_hash,
            "output_hash": self.output_hash,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def rule_ids(self, applied_only: bool = True) -> set:
        return {v.rule_id for v in self.violations if v.fix_applied or not applied_only}


def digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _enabled(rules):
    return set(RULES) if rules is None else set(rules)


# --- sub-intent rules ------------------------------------------------------

class _SubWork:
    def __init__(self, items, apply):
        # (origin, item) pairs; origin is the raw index or "+" for added items
        self.rows = [(f"item[{i}]", it) for i, it in enumerate(items)]
        self.apply = apply
        self.violations = []

    def flag(self, rule, loc, msg, severity="fixable"):
        self.violations.append(Violation(rule, severity, loc, msg, self.apply and severity == "fixable"))


def _d1(w):
    rows = []
    for loc, it in w.rows:
        if isinstance(it, MetricBound):
            if it.metric in WAIT_METRICS and it.unit == "ms":
                new = replace(it, value=it.value / 1000.0, unit="s")
                w.flag("d1", loc, f"{it.text()} -> {new.text()}")
                it = new
            elif it.metric in WAIT_METRICS and it.unit != "s" or \
                    it.metric in DROP_METRICS and it.unit != "%" or \
                    it.metric == "bandwidth" and it.unit not in ("kbit", "mbit") or \
                    it.metric not in METRICS:
                w.flag("d1", loc, f"incompatible unit in {it.text()!r}; dropped", "error")
                continue
        rows.append((loc, it))
    w.rows = rows


def _d5(w):
    rows = []
    for loc, it in w.rows:
        problem = None
        if isinstance(it, MetricBound):
            if it.value < 0:
                problem = "negative value"
            elif it.unit == "%" and it.value > 100:
                problem = "percentage above 100"
            elif it.op not in ("<=", ">="):
                problem = f"unknown operator {it.op!r}"
            elif it.metric != "bandwidth" and it.op != "<=":
                problem = "lower bounds on waits/drops are not enforceable"
            elif it.metric == "bandwidth" and it.value * BANDWIDTH_UNIT_BPS.get(it.unit, 1) < 1:
                problem = "bandwidth below 1bit"
        elif isinstance(it, PriorityDirective) and it.level not in LEVELS:
            problem = f"unknown priority level {it.level!r}"
        if problem:
            w.flag("d5", loc, f"{it.text()}: {problem}; dropped", "error")
            continue
        rows.append((loc, it))
    w.rows = rows


def _d2(w, s):
    for ref in semantic_bounds(s):
        hits = [i for i, (_, it) in enumerate(w.rows)
                if isinstance(it, MetricBound) and it.metric == ref.metric and it.op == "<="]
        if not hits:
            w.rows.append(("+", ref))
            w.flag("d2", "+", f"added {ref.text()} from semantic model")
            continue
        for i in hits:
            loc, it = w.rows[i]
            if it.value > ref.value:
                w.rows[i] = (loc, ref)
                w.flag("d2", loc, f"{it.text()} is looser than the semantic model; set to {ref.text()}")


def _d3(w, p_k):
    entries = {e.traffic_type: e for e in p_k}
    mentioned = []
    for _, it in w.rows:
        if isinstance(it, (PriorityDirective, MatchDirective)) and it.traffic_class not in mentioned:
            mentioned.append(it.traffic_class)
    for cls in mentioned:
        entry = entries.get(cls)
        if not any(isinstance(it, PriorityDirective) and it.traffic_class == cls for _, it in w.rows):
            level = entry.default_priority if entry else "low"
            origin = "profile default" if entry else "no profile entry; default"
            item = PriorityDirective(cls, level)
            w.rows.append(("+", item))
            w.flag("d3", "+", f"added {item.text()} ({origin})")
        if entry and not any(isinstance(it, MatchDirective) and it.traffic_class == cls for _, it in w.rows):
            lo, hi = entry.dst_ports
            item = MatchDirective(cls, entry.src_cidr, None if (lo, hi) == (0, 65535) else (lo, hi),
                                  None if entry.protocol == "any" else entry.protocol)
            w.rows.append(("+", item))
            w.flag("d3", "+", f"added {item.text()} from traffic profile")


def _key(it):
    if isinstance(it, MetricBound):
        return ("bound", it.metric, it.op)
    if isinstance(it, PriorityDirective):
        return ("priority", it.traffic_class)
    if isinstance(it, MatchDirective):
        return ("match", it.traffic_class)
    return ("window",)


def _d4(w):
    seen = {}
    rows = []
    for loc, it in w.rows:
        k = _key(it)
        if k in seen:
            kind = "duplicate" if seen[k] == it else "conflicting"
            w.flag("d4", loc, f"{kind} {it.text()} dropped (keeping {seen[k].text()})")
            continue
        seen[k] = it
        rows.append((loc, it))
    w.rows = rows


def _d6(w):
    rows = []
    for loc, it in w.rows:
        if isinstance(it, TimeWindow):
            try:
                new = TimeWindow(norm_hhmm(it.start), norm_hhmm(it.end))
            except ValueError:
                w.flag("d6", loc, f"invalid time window {it.text()}; dropped", "error")
                continue
            if new != it:
                w.flag("d6", loc, f"{it.text()} -> {new.text()}")
                it = new
        rows.append((loc, it))
    w.rows = rows


def _run_sub_rules(raw, s, p_k, rules, apply):
    enabled = _enabled(rules)
    w = _SubWork(raw.items, apply)
    for rid in SUB_RULE_ORDER:
        if rid not in enabled:
            continue
        if rid == "d1":
            _d1(w)
        elif rid == "d5":
            _d5(w)
        elif rid == "d2":
            _d2(w, s)
        elif rid == "d3":
            _d3(w, p_k)
        elif rid == "d4":
            _d4(w)
        elif rid == "d6":
            _d6(w)
    items = canonical_order(it for _, it in w.rows)
    return items, w.violations


def fix_subs(raw: SubIntentSet, s=None, p_k=(), *, rules=None):
    items, violations = _run_sub_rules(raw, s, list(p_k), rules, apply=True)
    if not items:
        raise CriticError("no valid sub-intents remain after correction")
    fixed = SubIntentSet(items, raw.source_intent, raw.warnings)
    report = CriticReport.build(violations, serialize_subintents(raw), serialize_subintents(fixed))
    return fixed, report


def lint_subs(raw: SubIntentSet, s=None, p_k=(), *, rules=None) -> list:
    _, violations = _run_sub_rules(raw, s, list(p_k), rules, apply=False)
    return violations


# --- config rules ----------------------------------------------------------

@dataclass
class _Plan:
    levels: dict
    filters: list  # (directive, FilterAdd)
    netem: dict  # level -> (delay_ms | None, loss_pct | None)
    guarantee_bps: float | None
    cap_bps: float | None
    window: TimeWindow | None


def _band(level):
    return BAND_CLASSID[level if level in BAND_CLASSID else "low"]


def required_filters(d: MatchDirective, level: str) -> list:
    base = []
    if d.protocol in IP_PROTOCOLS:
        base.append(Match("protocol", IP_PROTOCOLS[d.protocol], FULL_PROTO_MASK))
    if d.src_cidr:
        base.append(Match("src", d.src_cidr))
    blocks = [None]
    if d.ports is not None and tuple(d.ports) != (0, 65535):
        blocks = port_blocks(*d.ports)
    out = []
    for b in blocks:
        matches = list(base)
        if b is not None:
            matches.append(Match("dport", b[0], b[1]))
        if not matches:
            continue
        out.append(FilterAdd("1:0", U32Selector(tuple(matches)), _band(level), BAND_FILTER_PRIO.get(level, 2)))
    return out


def _plan(subs: SubIntentSet) -> _Plan:
    levels = {}
    for p in subs.of_type(PriorityDirective):
        levels.setdefault(p.traffic_class, p.level)
    filters = []
    seen = set()
    for d in subs.of_type(MatchDirective):
        for f in required_filters(d, levels.get(d.traffic_class, "low")):
            # identical selectors cannot steer one packet into two bands; the first directive wins
            if f.selector.canonical() not in seen:
                seen.add(f.selector.canonical())
                filters.append((d, f))
    netem = {}
    for level in ("high", "low"):
        delay = loss = None
        for b in subs.of_type(MetricBound):
            if b.op != "<=":
                continue
            if b.metric == f"avg_wait_{level}" and b.unit == "s" and delay is None:
                delay = int(round(b.value * 1000))
            if b.metric == f"drop_rate_{level}" and b.unit == "%" and loss is None and 0 <= b.value <= 100:
                loss = round(b.value, 1)
        netem[level] = (delay, loss)
    guarantee = cap = None
    for b in subs.of_type(MetricBound):
        if b.metric != "bandwidth" or b.unit not in ("kbit", "mbit") or b.value < 0:
            continue
        bps = round(b.value * BANDWIDTH_UNIT_BPS[b.unit])
        if b.op == ">=" and guarantee is None:
            guarantee = bps
        elif b.op == "<=" and cap is None:
            cap = bps
    return _Plan(levels, filters, netem, guarantee, cap, subs.window)


def _selector_key(f: FilterAdd):
    return (f.selector.canonical(), norm_handle(f.flowid), f.prio, norm_handle(f.parent))


class _TcWork:
    """Statements and comments in emitted order, mutated rule by rule."""

    def __init__(self, config: TcConfig, apply: bool):
        self.rows = []
        by_pos = {}
        for a in config.annotations:
            by_pos.setdefault(min(a.position, len(config.statements)), []).append(a)
        for i, st in enumerate(config.statements):
            self.rows += by_pos.get(i, [])
            self.rows.append(st)
        self.rows += by_pos.get(len(config.statements), [])
        self.origin = {id(r): f"stmt[{i}]" for i, r in enumerate(config.statements)}
        self.apply = apply
        self.violations = []

    def loc(self, obj):
        return self.origin.get(id(obj), "config")

    def flag(self, rule, obj, msg, severity="fixable"):
        self.violations.append(Violation(rule, severity, self.loc(obj) if obj is not None else "config", msg,
                                         self.apply and severity == "fixable"))

    def of(self, kind):
        return [r for r in self.rows if isinstance(r, kind)]

    def remove(self, obj):
        self.rows = [r for r in self.rows if r is not obj]

    def swap(self, old, new):
        self.rows = [new if r is old else r for r in self.rows]
        self.origin[id(new)] = self.loc(old)

    def insert_after(self, anchor, new):
        idx = next(i for i, r in enumerate(self.rows) if r is anchor) + 1 if anchor is not None else 0
        self.rows.insert(idx, new)

    def insert_after_structure(self, new):
        """Place ``new`` right after the last qdisc/class, so it follows everything it may depend on."""
        idx = max((i + 1 for i, r in enumerate(self.rows) if isinstance(r, (QdiscAdd, ClassAdd))), default=0)
        self.rows.insert(idx, new)

    def config(self, device) -> TcConfig:
        statements = []
        annotations = []
        for r in self.rows:
            if isinstance(r, Annotation):
                annotations.append(replace(r, position=len(statements)))
            else:
                statements.append(r)
        return TcConfig(device, tuple(statements), tuple(annotations))


def _half(link_rate):
    return format_rate(rate_bps(link_rate) / 2)


def _c1(w: _TcWork, link_rate):
    root_id = norm_handle(ROOT_HANDLE)
    roots = [q for q in w.of(QdiscAdd) if q.is_root]
    keep = next((q for q in roots if q.kind == "htb" and q.handle and norm_handle(q.handle) == root_id), None)
    for q in roots:
        if q is not keep:
            w.flag("c1", q, f"removed extra/invalid root qdisc ({q.kind} {q.handle or 'no handle'})")
            w.remove(q)
    if keep is None:
        keep = QdiscAdd("root", "htb", ROOT_HANDLE, DEFAULT_MINOR)
        first = next((i for i, r in enumerate(w.rows) if not isinstance(r, Annotation)), len(w.rows))
        w.rows.insert(first, keep)
        w.flag("c1", None, "added root htb qdisc 1: default 2")
    elif keep.default != DEFAULT_MINOR:
        new = replace(keep, default=DEFAULT_MINOR)
        w.swap(keep, new)
        w.flag("c1", keep, f"root default {keep.default} -> {DEFAULT_MINOR}")
        keep = new
    first = next(r for r in w.rows if not isinstance(r, Annotation))
    if first is not keep:
        w.flag("c1", keep, "moved root qdisc ahead of the statements that depend on it")
        w.remove(keep)
        w.rows.insert(next(i for i, r in enumerate(w.rows) if not isinstance(r, Annotation)), keep)

    # band classes
    for level in ("high", "low"):
        cid = BAND_CLASSID[level]
        found = [c for c in w.of(ClassAdd) if norm_handle(c.classid) == norm_handle(cid)]
        if not found:
            anchor = (w.of(ClassAdd) or [keep])[-1]
            half = _half(link_rate)
            w.insert_after(anchor, ClassAdd(ROOT_HANDLE, cid, half, link_rate))
            w.flag("c1", None, f"added htb class {cid} ({level} band)")
            continue
        if norm_handle(found[0].parent) != root_id:
            new = replace(found[0], parent=ROOT_HANDLE)
            w.swap(found[0], new)
            w.flag("c1", found[0], f"class {cid} re-parented to {ROOT_HANDLE}")

    # duplicates and dangling objects, until nothing changes
    changed = True
    while changed:
        changed = False
        classids = set()
        handles = {root_id}
        leaves = set()
        for r in list(w.rows):
            if isinstance(r, ClassAdd):
                cid = norm_handle(r.classid)
                parent = norm_handle(r.parent)
                reason = None
                if cid in classids:
                    reason = "duplicate classid"
                elif cid.split(":")[0] != root_id.split(":")[0] or cid == root_id:
                    reason = "classid outside the root hierarchy"
                elif parent != root_id and parent not in classids:
                    reason = f"parent {r.parent} does not resolve"
                if reason:
                    w.flag("c1", r, f"removed class {r.classid}: {reason}")
                    w.remove(r)
                    changed = True
                    continue
                classids.add(cid)
            elif isinstance(r, QdiscAdd) and not r.is_root:
                parent = norm_handle(r.parent)
                handle = norm_handle(r.handle) if r.handle else None
                reason = None
                if parent not in classids:
                    reason = f"parent {r.parent} is not a class"
                elif parent in leaves:
                    reason = f"class {r.parent} already has a leaf qdisc"
                elif handle is not None and handle in handles:
                    reason = f"handle {r.handle} already in use"
                if reason:
                    w.flag("c1", r, f"removed {r.kind} qdisc: {reason}")
                    w.remove(r)
                    changed = True
                    continue
                leaves.add(parent)
                if handle:
                    handles.add(handle)


def _c2(w: _TcWork):
    for c in w.of(ClassAdd):
        if c.kind != "htb" or "prio" not in c.extras:
            continue
        extras = list(c.extras)
        removed = []
        while "prio" in extras:
            i = extras.index("prio")
            removed += extras[i:i + 2]
            del extras[i:i + 2]
        w.swap(c, replace(c, extras=tuple(extras)))
        w.flag("c2", c, f"removed invalid '{' '.join(removed)}' from htb class {c.classid}")


def _c3(w: _TcWork, plan: _Plan):
    wanted = {}
    for d, f in plan.filters:
        wanted.setdefault(f.selector.canonical(), (d, f))
    for f in w.of(FilterAdd):
        hit = wanted.get(f.selector.canonical())
        if hit is None:
            continue
        d, req = hit
        if norm_handle(f.flowid) != norm_handle(req.flowid) or f.prio != req.prio:
            w.swap(f, replace(f, flowid=req.flowid, prio=req.prio))
            level = plan.levels.get(d.traffic_class, "low")
            w.flag("c3", f, f"{d.traffic_class} filter realigned to {level} band "
                            f"(flowid {f.flowid} prio {f.prio} -> flowid {req.flowid} prio {req.prio})")


def _c4(w: _TcWork, plan: _Plan):
    for c in w.of(ClassAdd):
        cid = norm_handle(c.classid)
        rate, ceil = c.rate, c.ceil
        notes = []
        if ceil is None:
            ceil = rate
            notes.append(f"ceil defaulted to rate {rate}")
        if cid == norm_handle(BAND_CLASSID["low"]) and plan.cap_bps is not None and rate_bps(ceil) > plan.cap_bps:
            cap = format_rate(plan.cap_bps)
            notes.append(f"ceil {ceil} -> {cap} (bandwidth cap)")
            ceil = cap
            if rate_bps(rate) > plan.cap_bps:
                rate = cap
        if cid == norm_handle(BAND_CLASSID["high"]) and plan.guarantee_bps is not None \
                and rate_bps(rate) < plan.guarantee_bps:
            g = format_rate(plan.guarantee_bps)
            notes.append(f"rate {rate} -> {g} (bandwidth guarantee)")
            rate = g
        if rate_bps(rate) > rate_bps(ceil):
            notes.append(f"ceil {ceil} raised to rate {rate}")
            ceil = rate
        if notes:
            w.swap(c, replace(c, rate=rate, ceil=ceil))
            w.flag("c4", c, f"class {c.classid}: " + "; ".join(notes))


def _free_handle(w: _TcWork, preferred: str) -> str:
    used = {norm_handle(q.handle) for q in w.of(QdiscAdd) if q.handle}
    major = int(preferred.rstrip(":"), 16)
    while norm_handle(f"{major:x}:") in used:
        major += 0x10
    return f"{major:x}:"


def _c5(w: _TcWork, plan: _Plan):
    for level in ("high", "low"):
        delay, loss = plan.netem[level]
        if delay is None and loss is None:
            continue
        cid = BAND_CLASSID[level]
        leaf = next((q for q in w.of(QdiscAdd) if not q.is_root and norm_handle(q.parent) == norm_handle(cid)), None)
        if leaf is None:
            q = QdiscAdd(cid, "netem", _free_handle(w, BAND_LEAF_HANDLE[level]), delay_ms=delay, loss_pct=loss)
            w.insert_after_structure(q)
            w.flag("c5", None, f"added netem under {cid} ({_netem_text(q)})")
            continue
        new = leaf
        notes = []
        if leaf.kind != "netem":
            new = QdiscAdd(cid if leaf.parent is None else leaf.parent, "netem", leaf.handle, limit=leaf.limit)
            notes.append(f"{leaf.kind} leaf replaced by netem")
        if delay is not None and new.delay_ms != delay:
            notes.append(f"delay {_ms(new.delay_ms)} -> {delay}ms")
            new = replace(new, delay_ms=delay)
        if loss is not None and new.loss_pct != loss:
            notes.append(f"loss {_pct(new.loss_pct)} -> {_pct(loss)}")
            new = replace(new, loss_pct=loss)
        if notes:
            w.swap(leaf, new)
            w.flag("c5", leaf, f"netem under {cid}: " + "; ".join(notes))


def _ms(v):
    return "unset" if v is None else f"{v}ms"


def _pct(v):
    return "unset" if v is None else f"{v:g}%"


def _netem_text(q):
    parts = []
    if q.delay_ms is not None:
        parts.append(f"delay {q.delay_ms}ms")
    if q.loss_pct is not None:
        parts.append(f"loss {q.loss_pct:g}%")
    return " ".join(parts)


def _describe_repair(old: FilterAdd, new: FilterAdd) -> str:
    notes = []
    old_by = {m.field: m for m in old.selector.matches}
    for m in new.selector.matches:
        prev = old_by.get(m.field)
        if prev is None:
            if m.field == "protocol":
                name = next((k for k, v in IP_PROTOCOLS.items() if v == m.value), str(m.value))
                notes.append(f"added explicit {name} match")
            else:
                notes.append(f"added {m.text()}")
        elif prev != m:
            if m.field in ("sport", "dport") and prev.value == m.value:
                notes.append(f"corrected {m.field} mask 0x{prev.mask:04x} -> 0x{m.mask:04x}")
            else:
                notes.append(f"{prev.text()} -> {m.text()}")
    new_fields = {m.field for m in new.selector.matches}
    notes += [f"dropped {m.text()}" for m in old.selector.matches if m.field not in new_fields]
    if norm_handle(old.flowid) != norm_handle(new.flowid) or old.prio != new.prio:
        notes.append(f"flowid {old.flowid} prio {old.prio} -> flowid {new.flowid} prio {new.prio}")
    if norm_handle(old.parent) != norm_handle(new.parent):
        notes.append(f"parent {old.parent} -> {new.parent}")
    return "; ".join(notes) or "normalised"


def _related(old: FilterAdd, new: FilterAdd) -> bool:
    if norm_handle(old.flowid) != norm_handle(new.flowid) and old.prio != new.prio:
        return False
    old_vals = {(m.field, m.value) for m in old.selector.matches if m.field in ("src", "dport", "sport")}
    new_vals = {(m.field, m.value) for m in new.selector.matches if m.field in ("src", "dport", "sport")}
    if not old_vals & new_vals:
        return False
    # an address-only overlap is not enough when the required filter pins a port
    new_ports = {v for v in new_vals if v[0] != "src"}
    return not new_ports or bool(old_vals & new_ports)


def _c6(w: _TcWork, plan: _Plan):
    pending = [f for _, f in plan.filters]
    pending_keys = [_selector_key(f) for f in pending]
    owner = {id(f): d for d, f in plan.filters}
    kept_keys = set()
    stray = []
    for f in w.of(FilterAdd):
        k = _selector_key(f)
        if k in pending_keys:
            i = pending_keys.index(k)
            del pending_keys[i]
            del pending[i]
            kept_keys.add(k)
        else:
            stray.append(f)
    for f in stray:
        k = _selector_key(f)
        if f.selector.is_catch_all():
            w.flag("c6", f, "removed redundant catch-all filter")
            w.remove(f)
            continue
        if k in kept_keys:
            w.flag("c6", f, "removed duplicate filter")
            w.remove(f)
            continue
        partner = next((p for p in pending if _related(f, p)), None)
        if partner is None:
            w.flag("c6", f, f"removed filter not backed by a match directive ({f.selector.canonical()})")
            w.remove(f)
            continue
        pending.remove(partner)
        w.swap(f, partner)
        d = owner[id(partner)]
        w.flag("c6", f, f"repaired {d.traffic_class} filter: {_describe_repair(f, partner)}")
    for f in pending:
        anchor = next((r for r in reversed(w.rows) if isinstance(r, FilterAdd)), None)
        if anchor is None:
            anchor = next((r for r in reversed(w.rows) if not isinstance(r, Annotation)), None)
        w.insert_after(anchor, f)
        w.flag("c6", None, f"added {owner[id(f)].traffic_class} filter ({f.selector.canonical()} "
                           f"flowid {f.flowid})")


def _c7(w: _TcWork, plan: _Plan):
    windows = [a for a in w.of(Annotation) if a.kind == "time_window"]
    target = plan.window
    if target is None:
        for a in windows:
            w.flag("c7", None, f"removed time window '{a.text}' not backed by a sub-intent")
            w.remove(a)
        return
    canonical = Annotation.window(target.start, target.end)
    keep = next((a for a in windows if a.text == canonical.text), None)
    if keep is None and windows:
        keep = windows[0]
        w.swap(keep, replace(canonical, position=keep.position))
        w.flag("c7", None, f"time window '{keep.text}' -> '{canonical.text}'")
    for a in windows:
        if a is not keep:
            w.flag("c7", None, f"removed extra time window '{a.text}'")
            w.remove(a)
    if keep is None:
        w.rows.append(canonical)
        w.flag("c7", None, f"added '# {canonical.text}'")


def _run_tc_rules(raw: TcConfig, subs: SubIntentSet, rules, apply, link_rate):
    enabled = _enabled(rules)
    plan = _plan(subs)
    w = _TcWork(raw, apply)
    for rid in TC_RULE_ORDER:
        if rid not in enabled:
            continue
        if rid == "c1":
            _c1(w, link_rate)
        elif rid == "c2":
            _c2(w)
        elif rid == "c3":
            _c3(w, plan)
        elif rid == "c4":
            _c4(w, plan)
        elif rid == "c5":
            _c5(w, plan)
        elif rid == "c6":
            _c6(w, plan)
        elif rid == "c7":
            _c7(w, plan)
    return w


def _device(raw, device):
    dev = device or raw.device
    if not dev:
        raise CriticError("device unknown: the config names none and none was configured")
    return dev


def fix_tc(raw: TcConfig, subs: SubIntentSet, s=None, *, device=None, link_rate=DEFAULT_LINK_RATE, rules=None):
    """Repair ``raw`` against corrected sub-intents. ``s`` is accepted for interface symmetry;
    thresholds already live in ``subs`` after ``fix_subs``."""
    dev = _device(raw, device)
    w = _run_tc_rules(raw, subs, rules, True, link_rate)
    fixed = w.config(dev)
    report = CriticReport.build(w.violations, serialize(replace(raw, device=raw.device or dev)), serialize(fixed))
    return fixed, report


def lint(config: TcConfig, subs: SubIntentSet, s=None, *, device=None, link_rate=DEFAULT_LINK_RATE,
         rules=None) -> list:
    _device(config, device)
    return _run_tc_rules(config, subs, rules, False, link_rate).violations


def synthesize(subs: SubIntentSet, device: str, *, link_rate=DEFAULT_LINK_RATE) -> TcConfig:
    """Canonical config realising ``subs`` from scratch."""
    return fix_tc(TcConfig(device), subs, device=device, link_rate=link_rate)[0]
