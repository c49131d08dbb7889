"""Regenerate the corrected case-study goldens from the raw fixtures.

Run only after inspecting a diff; tests compare against the frozen files.
"""

from pathlib import Path

from tcintent.benchmark import default_semantic_model
from tcintent.critic import fix_subs, fix_tc
from tcintent.profile import default_profile
from tcintent.subintent import parse_subintents, serialize_subintents
from tcintent.tc_lang import parse_tc, serialize

DIR = Path(__file__).resolve().parents[1] / "src" / "tcintent" / "data" / "casestudy"


def main():
    s = default_semantic_model()
    raw = parse_subintents((DIR / "raw_subintents.txt").read_text())
    subs, _ = fix_subs(raw, s, [default_profile().get("voice")])
    cfg, report = fix_tc(parse_tc((DIR / "raw_config.tc").read_text()), subs, s)
    (DIR / "corrected_subintents.txt").write_text(serialize_subintents(subs))
    (DIR / "corrected_config.tc").write_text(serialize(cfg))
    for v in report.violations:
        print(v.rule_id, v.message)


if __name__ == "__main__":
    main()
