"""Traffic profile: known traffic types mapped to subnets, ports and priorities."""

from __future__ import annotations

import ipaddress
import json
import logging
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema

log = logging.getLogger(__name__)

PROTOCOLS = ("tcp", "udp", "any")
PRIORITIES = ("high", "low")
STOPWORDS_VERSION = 1

_ENTRY_SCHEMA = {
    "type": "object",
    "required": ["traffic_type", "keywords", "src_cidr", "dst_ports", "protocol", "default_priority"],
    "additionalProperties": False,
    "properties": {
        "traffic_type": {"type": "string", "pattern": "^[a-z][a-z0-9_]*$"},
        "keywords": {"type": "array", "minItems": 1, "items": {"type": "string", "minLength": 1}},
        "src_cidr": {"type": "string"},
        "dst_ports": {
            "type": "array",
            "minItems": 2,
            "maxItems": 2,
            "items": {"type": "integer", "minimum": 0, "maximum": 65535},
        },
        "protocol": {"enum": list(PROTOCOLS)},
        "default_priority": {"enum": list(PRIORITIES)},
    },
}
PROFILE_SCHEMA = {"type": "array", "items": _ENTRY_SCHEMA}


class ProfileError(ValueError):
    pass


class EmptyIntentError(ValueError):
    pass


@dataclass(frozen=True)
class ProfileEntry:
    traffic_type: str
    keywords: frozenset
    src_cidr: str
    dst_ports: tuple
    protocol: str
    default_priority: str

    def __post_init__(self):
        object.__setattr__(self, "keywords", frozenset(k.lower() for k in self.keywords))
        object.__setattr__(self, "dst_ports", tuple(self.dst_ports))
        if not self.keywords:
            raise ProfileError(f"{self.traffic_type}: keywords must be non-empty")
        try:
            net = ipaddress.IPv4Network(self.src_cidr, strict=True)
        except ValueError as exc:
            raise ProfileError(f"{self.traffic_type}: invalid src_cidr {self.src_cidr!r}: {exc}") from None
        object.__setattr__(self, "src_cidr", str(net))
        lo, hi = self.dst_ports
        if not (0 <= lo <= hi <= 65535):
            raise ProfileError(f"{self.traffic_type}: invalid port range {lo}-{hi}")
        if self.protocol not in PROTOCOLS:
            raise ProfileError(f"{self.traffic_type}: unknown protocol {self.protocol!r}")
        if self.default_priority not in PRIORITIES:
            raise ProfileError(f"{self.traffic_type}: unknown priority {self.default_priority!r}")

    def to_dict(self) -> dict:
        return {
            "traffic_type": self.traffic_type,
            "keywords": sorted(self.keywords),
            "src_cidr": self.src_cidr,
            "dst_ports": list(self.dst_ports),
            "protocol": self.protocol,
            "default_priority": self.default_priority,
        }


@dataclass(frozen=True)
class TrafficProfile:
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        seen = set()
        for e in self.entries:
            if e.traffic_type in seen:
                raise ProfileError(f"duplicate traffic_type {e.traffic_type!r}")
            seen.add(e.traffic_type)

    def get(self, traffic_type: str) -> ProfileEntry | None:
        for e in self.entries:
            if e.traffic_type == traffic_type:
                return e
        return None

    def to_list(self) -> list:
        return [e.to_dict() for e in self.entries]

    def dumps(self) -> str:
        return json.dumps(self.to_list(), indent=2) + "\n"


def _path_of(error: jsonschema.ValidationError) -> str:
    out = "entries"
    for p in error.absolute_path:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def parse_profile(document) -> TrafficProfile:
    """Validate a decoded profile document (list of entries, or {"entries": [...]})."""
    if isinstance(document, dict) and "entries" in document:
        document = document["entries"]
    try:
        jsonschema.validate(document, PROFILE_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ProfileError(f"{_path_of(exc)}: {exc.message}") from None
    entries = []
    for i, raw in enumerate(document):
        try:
            entries.append(ProfileEntry(**raw))
        except ProfileError as exc:
            raise ProfileError(f"entries[{i}]: {exc}") from None
    return TrafficProfile(tuple(entries))


def load_profile(source=None) -> TrafficProfile:
    """Load a profile from a path, a JSON string, or the packaged default."""
    if source is None:
        return default_profile()
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith(("[", "{"))):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProfileError(f"profile is not valid JSON: {exc}") from None
    return parse_profile(document)


@lru_cache(maxsize=1)
def default_profile() -> TrafficProfile:
    text = resources.files("tcintent.data").joinpath("default_profile.json").read_text(encoding="utf-8")
    return parse_profile(json.loads(text))


@lru_cache(maxsize=1)
def stopwords() -> frozenset:
    text = resources.files("tcintent.data").joinpath("stopwords.txt").read_text(encoding="utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip() and not w.startswith("#"))


_WORD = re.compile(r"[a-z0-9]+")


def keywords(intent: str) -> frozenset:
    if not intent or not intent.strip():
        raise EmptyIntentError("intent text is empty")
    stop = stopwords()
    return frozenset(w for w in _WORD.findall(intent.lower()) if w not in stop)


def profile_filter(profile: TrafficProfile, k) -> list:
    k = set(k)
    matched = [e for e in profile.entries if e.keywords & k]
    if not matched:
        log.warning("no profile entry matches keywords %s", sorted(k))
    return matched
