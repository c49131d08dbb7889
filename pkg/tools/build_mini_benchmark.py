"""Regenerate src/tcintent/data/mini_benchmark.json from the handwritten cases below.

Each case lists its intent and the raw reference sub-intents (priorities,
explicit bounds, window). Match directives and semantic-model thresholds
are completed by the critic, exactly as for generated cases.
"""

import sys
from pathlib import Path

from tcintent.benchmark import (
    BenchmarkCase,
    build_references,
    default_semantic_model,
    save_benchmark,
    validate_case,
)
from tcintent.profile import default_profile, keywords, profile_filter
from tcintent.subintent import parse_subintents

OUT = Path(__file__).resolve().parents[1] / "src" / "tcintent" / "data" / "mini_benchmark.json"

# (intent, raw reference sub-intents, objectives, traffic labels)
CASES = [
    ("Prioritize industrial robot control traffic over everything else on the factory floor",
     "assign_priority(robotics, high)", ["priority_fairness"]),
    ("Deprioritize IoT sensor telemetry so interactive flows get a fair share",
     "assign_priority(telemetry, low)", ["priority_fairness"]),
    ("Give fire alarm notifications strict priority during night shifts from 22:00 to 06:00",
     "assign_priority(iot_alerts, high)\nwindow(22:00, 06:00)", ["priority_fairness"]),
    ("Deprioritize backup sync jobs, so they never starve voice calls",
     "assign_priority(bulk, low)\nassign_priority(voice, high)", ["priority_fairness", "latency"]),
    ("Prioritize online gaming traffic in the evening between 6 PM and 11 PM",
     "assign_priority(gaming, high)\nwindow(18:00, 23:00)", ["priority_fairness"]),
    ("Treat e-learning lecture streams as background traffic",
     "assign_priority(elearning, low)", ["priority_fairness"]),
    ("Keep voice call delay below 50 ms",
     "avg_wait_high <= 0.05s\nassign_priority(voice, high)", ["latency"]),
    ("Minimize delay for video conferencing during 9 AM–5 PM",
     "assign_priority(video, high)\nwindow(09:00, 17:00)", ["latency", "time_load"]),
    ("Keep industrial robot control latency under 20 ms and packet loss under 0.1%",
     "avg_wait_high <= 0.02s\ndrop_rate_high <= 0.1%\nassign_priority(robotics, high)", ["latency", "drop_rate"]),
    ("Keep fire alarm delay below 10 ms",
     "avg_wait_high <= 0.01s\nassign_priority(iot_alerts, high)", ["latency"]),
    ("Reduce latency for online gaming to under 30 ms between 18:00 and 23:00",
     "avg_wait_high <= 0.03s\nassign_priority(gaming, high)\nwindow(18:00, 23:00)", ["latency"]),
    ("Guarantee at least 40 Mbps for video conferencing",
     "bandwidth >= 40mbit\nassign_priority(video, high)", ["bandwidth"]),
    ("Cap IoT sensor telemetry at 20 Mbps and deprioritize it",
     "bandwidth <= 20mbit\nassign_priority(telemetry, low)", ["bandwidth", "priority_fairness"]),
    ("Limit e-learning lecture traffic to 10 Mbps from 8 AM to 6 PM",
     "bandwidth <= 10mbit\nassign_priority(elearning, low)\nwindow(08:00, 18:00)", ["bandwidth"]),
    ("Guarantee at least 30 Mbps for voice traffic and keep its delay below 40 ms",
     "bandwidth >= 30mbit\navg_wait_high <= 0.04s\nassign_priority(voice, high)", ["bandwidth", "latency"]),
    ("Protect industrial robot control traffic during peak load from 8 AM to 6 PM",
     "assign_priority(robotics, high)\nwindow(08:00, 18:00)", ["time_load"]),
    ("Deprioritize backup downloads during business hours from 09:00 to 17:00",
     "assign_priority(bulk, low)\nwindow(09:00, 17:00)", ["time_load"]),
    ("Minimize delay for voice traffic during 8 PM–1 AM",
     "assign_priority(voice, high)\nwindow(20:00, 01:00)", ["time_load"]),
    ("Keep fire alarm packet loss under 0.1% and delay below 10 ms",
     "avg_wait_high <= 0.01s\ndrop_rate_high <= 0.1%\nassign_priority(iot_alerts, high)", ["drop_rate", "latency"]),
    ("Keep video conferencing packet loss under 0.2% between 20:00 and 23:00",
     "drop_rate_high <= 0.2%\nassign_priority(video, high)\nwindow(20:00, 23:00)", ["drop_rate"]),
]


def main() -> int:
    s = default_semantic_model()
    profile = default_profile()
    cases = []
    for i, (intent, raw_text, objectives) in enumerate(CASES, start=1):
        raw = parse_subintents(raw_text, intent)
        assert not raw.warnings, raw.warnings
        labels = [p.traffic_class for p in raw.items if type(p).__name__ == "PriorityDirective"]
        p_k = profile_filter(profile, keywords(intent))
        found = sorted(e.traffic_type for e in p_k)
        if found != sorted(labels):
            print(f"case {i}: keywords select {found}, reference names {labels}", file=sys.stderr)
            return 1
        subs, cfg = build_references(raw, s, p_k)
        tags = {"objectives": objectives, "primary": objectives[0], "traffic_type": labels[0],
                "time_sensitive": subs.window is not None, "multi_objective": len(objectives) > 1}
        case = BenchmarkCase(f"mini-{i:02d}", intent, subs, cfg, tags)
        assert validate_case(case, s) == [], validate_case(case, s)
        cases.append(case)
    save_benchmark(cases, OUT)
    print(f"wrote {len(cases)} cases to {OUT}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
