"""Parser, AST and canonical serializer for the `tc` subset we generate.

Supported: ``tc qdisc add`` (htb, netem, bfifo, pfifo), ``tc class add ... htb``
and ``tc filter add ... u32`` with IPv4 ``match ip`` selectors. Full-line
comments become annotations; ``# enforce from HH:MM to HH:MM`` is a time
window. Unknown tokens after a recognised statement are kept in ``extras``
so the critic can judge them.
"""

from __future__ import annotations

import ipaddress
import re
from dataclasses import dataclass, field, replace

QDISC_KINDS = ("htb", "netem", "bfifo", "pfifo")
MATCH_FIELDS = ("protocol", "src", "dst", "sport", "dport")
PORT_FIELDS = ("sport", "dport")
ADDR_FIELDS = ("src", "dst")
FULL_PORT_MASK = 0xFFFF
FULL_PROTO_MASK = 0xFF
IP_PROTOCOLS = {"tcp": 6, "udp": 17}

HANDLE_RE = re.compile(r"^[0-9a-f]+:[0-9a-f]*$")
_RATE_RE = re.compile(r"^(\d+(?:\.\d+)?)(bit|kbit|mbit|gbit|tbit|bps|kbps|mbps|gbps|tbps)$")
_RATE_FACTORS = {
    "bit": 1, "kbit": 10**3, "mbit": 10**6, "gbit": 10**9, "tbit": 10**12,
    # tc's "bps" family is bytes per second
    "bps": 8, "kbps": 8 * 10**3, "mbps": 8 * 10**6, "gbps": 8 * 10**9, "tbps": 8 * 10**12,
}
_TIME_RE = re.compile(r"^(\d+(?:\.\d+)?)(us|usec|usecs|ms|msec|msecs|s|sec|secs)?$")
_TIME_FACTORS_MS = {None: 1e-3, "us": 1e-3, "usec": 1e-3, "usecs": 1e-3, "ms": 1.0, "msec": 1.0,
                    "msecs": 1.0, "s": 1e3, "sec": 1e3, "secs": 1e3}
_LOSS_RE = re.compile(r"^(\d+(?:\.\d+)?)%$")
_WINDOW_RE = re.compile(r"enforce from (\d{1,2}):(\d{2}) to (\d{1,2}):(\d{2})", re.IGNORECASE)


class ParseError(ValueError):
    def __init__(self, message, line=None, token=None):
        self.line = line
        self.token = token
        where = f"line {line}: " if line is not None else ""
        at = f" (at token {token!r})" if token is not None else ""
        super().__init__(f"{where}{message}{at}")


# --- value helpers ---------------------------------------------------------

def norm_handle(h: str) -> str:
    """'1:' and '1:0' name the same object; returns 'maj:min' in hex."""
    major, _, minor = h.partition(":")
    return f"{int(major, 16):x}:{int(minor or '0', 16):x}"


def rate_bps(rate: str) -> float:
    m = _RATE_RE.match(rate)
    if not m:
        raise ValueError(f"bad rate {rate!r}")
    return float(m.group(1)) * _RATE_FACTORS[m.group(2)]


def format_rate(bps: float) -> str:
    """Shortest exact bit-unit spelling of a rate ('50mbit', '1500kbit')."""
    for unit, f in (("gbit", 10**9), ("mbit", 10**6), ("kbit", 10**3)):
        v = bps / f
        if v >= 1 and float(v).is_integer():
            return f"{int(v)}{unit}"
    if float(bps).is_integer():
        return f"{int(bps)}bit"
    return f"{bps / 10**3:g}kbit"


def format_loss(pct: float) -> str:
    return f"{round(pct, 1):g}%"


def parse_time_ms(tok: str) -> int:
    m = _TIME_RE.match(tok)
    if not m:
        raise ValueError(f"bad time {tok!r}")
    return int(round(float(m.group(1)) * _TIME_FACTORS_MS[m.group(2)]))


def norm_hhmm(text: str) -> str:
    h, _, m = text.partition(":")
    h, m = int(h), int(m)
    if h == 24 and m == 0:
        h = 0
    if not (0 <= h <= 23 and 0 <= m <= 59):
        raise ValueError(f"invalid time of day {text!r}")
    return f"{h:02d}:{m:02d}"


def port_blocks(lo: int, hi: int) -> list:
    """Minimal list of (value, mask) pairs whose union is exactly [lo, hi]."""
    out = []
    while lo <= hi:
        size = lo & -lo if lo else 1 << 16
        while size > 1 and lo + size - 1 > hi:
            size >>= 1
        out.append((lo, FULL_PORT_MASK & ~(size - 1)))
        lo += size
    return out


# --- AST -------------------------------------------------------------------

@dataclass(frozen=True)
class Match:
    field: str
    value: object  # CIDR text for src/dst, int otherwise
    mask: int | None = None

    def tokens(self) -> list:
        if self.field in ADDR_FIELDS:
            return ["match", "ip", self.field, str(self.value)]
        width = 4 if self.field in PORT_FIELDS else 2
        return ["match", "ip", self.field, str(self.value), f"0x{self.mask:0{width}x}"]

    def text(self) -> str:
        return " ".join(self.tokens()[1:])

    def is_wildcard(self) -> bool:
        if self.field in ADDR_FIELDS:
            return ipaddress.IPv4Network(self.value).prefixlen == 0
        return self.mask == 0


@dataclass(frozen=True)
class U32Selector:
    matches: tuple = ()

    def canonical(self) -> str:
        ordered = sorted(self.matches, key=lambda m: (MATCH_FIELDS.index(m.field), m.text()))
        return " ".join(m.text() for m in ordered)

    def is_catch_all(self) -> bool:
        return all(m.is_wildcard() for m in self.matches)


@dataclass(frozen=True)
class QdiscAdd:
    parent: str
    kind: str
    handle: str | None = None
    default: str | None = None
    delay_ms: int | None = None
    loss_pct: float | None = None
    limit: int | None = None
    extras: tuple = ()

    @property
    def is_root(self) -> bool:
        return self.parent == "root"


@dataclass(frozen=True)
class ClassAdd:
    parent: str
    classid: str
    rate: str
    ceil: str | None = None
    kind: str = "htb"
    extras: tuple = ()


@dataclass(frozen=True)
class FilterAdd:
    parent: str
    selector: U32Selector
    flowid: str
    prio: int | None = None
    protocol: str = "ip"
    extras: tuple = ()


@dataclass(frozen=True)
class Annotation:
    kind: str  # "time_window" | "note"
    text: str
    start: str | None = None
    end: str | None = None
    position: int = 0  # index of the statement this comment precedes

    @classmethod
    def from_comment(cls, text: str, position: int = 0) -> "Annotation":
        text = text.strip()
        m = _WINDOW_RE.search(text)
        if m:
            try:
                start = norm_hhmm(f"{m.group(1)}:{m.group(2)}")
                end = norm_hhmm(f"{m.group(3)}:{m.group(4)}")
            except ValueError:
                return cls("note", text, position=position)
            return cls("time_window", text, start, end, position)
        return cls("note", text, position=position)

    @classmethod
    def window(cls, start: str, end: str, position: int = 0) -> "Annotation":
        return cls("time_window", f"enforce from {start} to {end}", start, end, position)


@dataclass(frozen=True)
class TcConfig:
    device: str | None = None
    statements: tuple = ()
    annotations: tuple = field(default=())

    @property
    def qdiscs(self):
        return [s for s in self.statements if isinstance(s, QdiscAdd)]

    @property
    def classes(self):
        return [s for s in self.statements if isinstance(s, ClassAdd)]

    @property
    def filters(self):
        return [s for s in self.statements if isinstance(s, FilterAdd)]

    def with_statements(self, statements, annotations=None) -> "TcConfig":
        return replace(self, statements=tuple(statements),
                       annotations=self.annotations if annotations is None else tuple(annotations))


@dataclass(frozen=True)
class SemanticUnit:
    kind: str
    key: str


# --- parsing ---------------------------------------------------------------

def _handle(tok, lineno):
    if tok is None or not HANDLE_RE.match(tok):
        raise ParseError("bad handle syntax", lineno, tok)
    return tok


def _take(tokens, i, lineno, what):
    if i >= len(tokens):
        raise ParseError(f"missing value for {what}", lineno, what)
    return tokens[i]


def _parse_match(tokens, i, lineno):
    # tokens[i] == "match"
    if _take(tokens, i + 1, lineno, "match") != "ip":
        raise ParseError("only 'match ip' selectors are supported", lineno, tokens[i + 1])
    fld = _take(tokens, i + 2, lineno, "match ip")
    val = _take(tokens, i + 3, lineno, fld)
    i += 4
    if fld in ADDR_FIELDS:
        try:
            net = ipaddress.IPv4Network(val, strict=False)
        except ValueError:
            raise ParseError("bad IPv4 prefix", lineno, val) from None
        return Match(fld, str(net)), i
    if fld not in MATCH_FIELDS:
        raise ParseError("unsupported match field", lineno, fld)
    limit = 0xFFFF if fld in PORT_FIELDS else 0xFF
    try:
        value = int(val, 0)
    except ValueError:
        raise ParseError("bad match value", lineno, val) from None
    mask = limit
    if i < len(tokens) and tokens[i].lower().startswith("0x"):
        try:
            mask = int(tokens[i], 16)
        except ValueError:
            raise ParseError("bad mask", lineno, tokens[i]) from None
        i += 1
    if not (0 <= value <= limit and 0 <= mask <= limit):
        raise ParseError(f"{fld} value/mask out of range", lineno, val)
    return Match(fld, value, mask), i


_OPTIONS = {
    "qdisc": {"dev", "parent", "root", "handle"},
    "class": {"dev", "parent", "classid"},
    "filter": {"dev", "parent", "protocol", "prio", "pref"},
}


def parse_statement(line: str, lineno: int | None = None):
    """Parse one `tc ... add` line; returns (device, statement)."""
    tokens = line.split()
    if not tokens or tokens[0] != "tc":
        raise ParseError("statement must start with 'tc'", lineno, tokens[0] if tokens else None)
    obj = _take(tokens, 1, lineno, "tc")
    if obj not in _OPTIONS:
        raise ParseError("unknown object", lineno, obj)
    verb = _take(tokens, 2, lineno, obj)
    if verb != "add":
        raise ParseError("unsupported verb (only 'add')", lineno, verb)

    opts = {}
    i = 3
    while i < len(tokens) and tokens[i] in _OPTIONS[obj]:
        key = tokens[i]
        if key in opts or (key in ("root", "parent") and ("root" in opts or "parent" in opts)):
            raise ParseError("duplicate option", lineno, key)
        if key == "root":
            opts["root"] = True
            i += 1
            continue
        opts[key] = _take(tokens, i + 1, lineno, key)
        i += 2
    if "dev" not in opts:
        raise ParseError("missing 'dev'", lineno, tokens[i] if i < len(tokens) else None)
    dev = opts["dev"]
    kind = tokens[i] if i < len(tokens) else None
    rest = tokens[i + 1:]

    if obj == "qdisc":
        if kind not in QDISC_KINDS:
            raise ParseError("unsupported qdisc kind", lineno, kind)
        if "root" in opts:
            parent = "root"
        elif "parent" in opts:
            parent = _handle(opts["parent"], lineno)
        else:
            raise ParseError("qdisc needs 'root' or 'parent'", lineno, kind)
        handle = _handle(opts["handle"], lineno) if "handle" in opts else None
        return dev, _parse_qdisc(parent, handle, kind, rest, lineno)

    if obj == "class":
        if kind != "htb":
            raise ParseError("only htb classes are supported", lineno, kind)
        if "parent" not in opts or "classid" not in opts:
            raise ParseError("class needs 'parent' and 'classid'", lineno, kind)
        return dev, _parse_class(_handle(opts["parent"], lineno), _handle(opts["classid"], lineno), rest, lineno)

    if kind != "u32":
        raise ParseError("only u32 filters are supported", lineno, kind)
    if opts.get("protocol", "ip") != "ip":
        raise ParseError("only 'protocol ip' filters are supported", lineno, opts["protocol"])
    if "parent" not in opts:
        raise ParseError("filter needs 'parent'", lineno, kind)
    prio_tok = opts.get("prio", opts.get("pref"))
    prio = None
    if prio_tok is not None:
        if not prio_tok.isdigit():
            raise ParseError("bad prio", lineno, prio_tok)
        prio = int(prio_tok)
    matches = []
    j = 0
    while j < len(rest) and rest[j] == "match":
        m, j = _parse_match(rest, j, lineno)
        matches.append(m)
    if j >= len(rest) or rest[j] not in ("flowid", "classid"):
        raise ParseError("filter needs 'flowid'", lineno, rest[j] if j < len(rest) else None)
    flowid = _handle(_take(rest, j + 1, lineno, "flowid"), lineno)
    extras = tuple(rest[j + 2:])
    return dev, FilterAdd(_handle(opts["parent"], lineno), U32Selector(tuple(matches)), flowid, prio,
                          "ip", extras)


def _parse_qdisc(parent, handle, kind, rest, lineno):
    params = {}
    extras = []
    j = 0
    while j < len(rest):
        tok = rest[j]
        if kind == "htb" and tok == "default" and "default" not in params:
            params["default"] = _take(rest, j + 1, lineno, tok)
            j += 2
        elif kind == "netem" and tok == "delay" and "delay_ms" not in params:
            val = _take(rest, j + 1, lineno, tok)
            try:
                params["delay_ms"] = parse_time_ms(val)
            except ValueError:
                raise ParseError("bad delay", lineno, val) from None
            j += 2
        elif kind == "netem" and tok == "loss" and "loss_pct" not in params:
            val = _take(rest, j + 1, lineno, tok)
            m = _LOSS_RE.match(val)
            if not m or float(m.group(1)) > 100:
                raise ParseError("bad loss (expected 0-100%)", lineno, val)
            params["loss_pct"] = round(float(m.group(1)), 1)
            j += 2
        elif tok == "limit" and kind in ("netem", "bfifo", "pfifo") and "limit" not in params:
            val = _take(rest, j + 1, lineno, tok)
            if not val.isdigit():
                raise ParseError("bad limit", lineno, val)
            params["limit"] = int(val)
            j += 2
        else:
            extras.append(tok)
            j += 1
    return QdiscAdd(parent=parent, kind=kind, handle=handle, extras=tuple(extras), **params)


def _parse_class(parent, classid, rest, lineno):
    rates = {}
    extras = []
    j = 0
    while j < len(rest):
        tok = rest[j]
        if tok in ("rate", "ceil") and tok not in rates:
            val = _take(rest, j + 1, lineno, tok).lower()
            if not _RATE_RE.match(val):
                raise ParseError(f"bad {tok} (explicit unit required)", lineno, rest[j + 1])
            rates[tok] = val
            j += 2
        else:
            extras.append(tok)
            j += 1
    if "rate" not in rates:
        raise ParseError("htb class needs 'rate'", lineno, classid)
    return ClassAdd(parent, classid, rates["rate"], rates.get("ceil"), "htb", tuple(extras))


def parse_tc(script: str) -> TcConfig:
    device = None
    statements = []
    annotations = []
    for lineno, raw in enumerate(script.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            annotations.append(Annotation.from_comment(line[1:], len(statements)))
            continue
        dev, stmt = parse_statement(line, lineno)
        if device is None:
            device = dev
        elif dev != device:
            raise ParseError(f"mixed devices ({device!r} and {dev!r})", lineno, dev)
        statements.append(stmt)
    return TcConfig(device, tuple(statements), tuple(annotations))


def extract_tc_script(text: str) -> str:
    """Keep only `tc` and comment lines from free-form model output."""
    keep = []
    for raw in text.splitlines():
        line = raw.strip().lstrip("$").strip()
        if line.startswith("tc ") or (line.startswith("#") and not line.startswith("#!")):
            keep.append(line)
    return "\n".join(keep) + ("\n" if keep else "")


# --- serialization ---------------------------------------------------------

def statement_tokens(stmt, device: str) -> list:
    if isinstance(stmt, QdiscAdd):
        out = ["tc", "qdisc", "add", "dev", device]
        out += ["root"] if stmt.is_root else ["parent", stmt.parent]
        if stmt.handle is not None:
            out += ["handle", stmt.handle]
        out.append(stmt.kind)
        if stmt.default is not None:
            out += ["default", stmt.default]
        if stmt.delay_ms is not None:
            out += ["delay", f"{stmt.delay_ms}ms"]
        if stmt.loss_pct is not None:
            out += ["loss", format_loss(stmt.loss_pct)]
        if stmt.limit is not None:
            out += ["limit", str(stmt.limit)]
        return out + list(stmt.extras)
    if isinstance(stmt, ClassAdd):
        out = ["tc", "class", "add", "dev", device, "parent", stmt.parent, "classid", stmt.classid,
               stmt.kind, "rate", stmt.rate]
        if stmt.ceil is not None:
            out += ["ceil", stmt.ceil]
        return out + list(stmt.extras)
    if isinstance(stmt, FilterAdd):
        out = ["tc", "filter", "add", "dev", device, "protocol", stmt.protocol, "parent", stmt.parent]
        if stmt.prio is not None:
            out += ["prio", str(stmt.prio)]
        out.append("u32")
        for m in stmt.selector.matches:
            out += m.tokens()
        return out + ["flowid", stmt.flowid] + list(stmt.extras)
    raise TypeError(f"not a tc statement: {stmt!r}")


def _comment(a: Annotation) -> str:
    return f"# {a.text}".rstrip()


def serialize(config: TcConfig) -> str:
    if not config.statements and not config.annotations:
        return ""
    if config.statements and not config.device:
        raise ValueError("config with statements needs a device")
    lines = []
    n = len(config.statements)
    by_pos = {}
    for a in config.annotations:
        by_pos.setdefault(min(a.position, n), []).append(a)
    for idx, stmt in enumerate(config.statements):
        lines += [_comment(a) for a in by_pos.get(idx, [])]
        lines.append(" ".join(statement_tokens(stmt, config.device)))
    lines += [_comment(a) for a in by_pos.get(n, [])]
    return "\n".join(lines) + "\n"


# --- semantic units --------------------------------------------------------

def extract_semantic_units(config: TcConfig) -> frozenset:
    units = set()
    for s in config.statements:
        if isinstance(s, QdiscAdd):
            if s.is_root:
                units.add(SemanticUnit("root_qdisc", f"{s.kind} {norm_handle(s.handle) if s.handle else ''}".strip()))
            if s.delay_ms is not None:
                units.add(SemanticUnit("delay_threshold", f"{s.delay_ms}ms"))
            if s.loss_pct is not None:
                units.add(SemanticUnit("loss_threshold", format_loss(s.loss_pct)))
        elif isinstance(s, ClassAdd):
            cid = norm_handle(s.classid)
            units.add(SemanticUnit("traffic_class", f"{cid} rate {format_rate(rate_bps(s.rate))}"))
            if s.ceil is not None:
                units.add(SemanticUnit("rate_limit", f"{cid} ceil {format_rate(rate_bps(s.ceil))}"))
        elif isinstance(s, FilterAdd):
            if s.prio is not None:
                units.add(SemanticUnit("priority_band", f"prio {s.prio} flowid {norm_handle(s.flowid)}"))
            if s.selector.matches:
                units.add(SemanticUnit("selector", s.selector.canonical()))
    for a in config.annotations:
        if a.kind == "time_window":
            units.add(SemanticUnit("time_window", f"{a.start}-{a.end}"))
    return frozenset(units)
