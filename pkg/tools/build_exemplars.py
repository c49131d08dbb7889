"""Regenerate src/tcintent/data/exemplars.json.

Sub-intent exemplars are handwritten; config exemplar outputs are rendered by
the critic's canonical synthesizer so they always parse and lint clean.
"""

import json
from pathlib import Path

from tcintent.critic import synthesize
from tcintent.subintent import parse_subintents
from tcintent.tc_lang import serialize

OUT = Path(__file__).resolve().parents[1] / "src" / "tcintent" / "data" / "exemplars.json"

PAIRS = [
    ("latency",
     "Keep queueing delay for industrial robot control traffic under 20 ms",
     "avg_wait_high <= 0.02s\nassign_priority(robotics, high)\nmatch(robotics, 10.1.1.0/24, 502, tcp)"),
    ("priority",
     "Deprioritize sensor telemetry and cap it at 20 Mbps between 22:00 and 06:00",
     "bandwidth <= 20mbit\nassign_priority(telemetry, low)\nmatch(telemetry, 10.1.2.0/24, 8000-8100, udp)\n"
     "window(22:00, 06:00)"),
]


def main():
    rows = []
    for focus, intent, subs in PAIRS:
        rows.append({"stage": "subintent", "focus": focus, "input": intent, "output": subs})
    for focus, _, subs in PAIRS:
        cfg = serialize(synthesize(parse_subintents(subs), "eth0"))
        rows.append({"stage": "config", "focus": focus, "input": subs, "output": cfg.rstrip("\n")})
    OUT.write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
