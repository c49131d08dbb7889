import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tcintent.subintent import (
    MatchDirective,
    MetricBound,
    PriorityDirective,
    SubIntentSet,
    canonical_order,
    parse_subintents,
    semantic_bounds,
    serialize_subintents,
)
from tests.strategies import subintent_sets


def test_canonical_statement_examples():
    s = parse_subintents("avg_wait_high <= 0.13s\ndrop_rate_low ≤ 5%\nassign_priority(telemetry, low)")
    assert s.items == (MetricBound("avg_wait_high", "<=", 0.13, "s"), MetricBound("drop_rate_low", "<=", 5.0, "%"),
                       PriorityDirective("telemetry", "low"))
    assert not s.warnings


def test_prose_only_gives_warning():
    s = parse_subintents("the weather is nice")
    assert s.items == () and len(s.warnings) == 1


def test_empty_serializes_to_empty():
    assert serialize_subintents(SubIntentSet()) == ""
    assert parse_subintents("").items == ()


def test_ms_normalized_to_seconds():
    (b,) = parse_subintents("avg_wait_low <= 130ms").items
    assert (b.value, b.unit) == (0.13, "s")


def test_duplicates_collapse():
    s = parse_subintents("assign_priority(voice, high)\nassign_priority(Voice, HIGH)")
    assert len(s.items) == 1 and "duplicate" in s.warnings[0]


def test_bad_match_becomes_warning():
    s = parse_subintents("match(voice, 10.1.4.0/24, 9-1, udp)")
    assert s.items == () and "unreadable" in s.warnings[0]


def test_match_wildcards_and_cidr_normalization():
    (m,) = parse_subintents("match(voice, 10.1.4.9/24, *, any)").items
    assert m == MatchDirective("voice", "10.1.4.0/24", None, None)
    assert m.text() == "match(voice, 10.1.4.0/24, *, *)"


def test_casestudy_round_trip(casestudy):
    for name in ("raw_subintents.txt", "corrected_subintents.txt"):
        s = parse_subintents(casestudy[name])
        assert not s.warnings
        assert parse_subintents(serialize_subintents(s)).items == canonical_order(s.items)


def test_semantic_bounds_units(voice_model):
    bounds = {b.metric: b for b in semantic_bounds(voice_model)}
    assert bounds["avg_wait_high"] == MetricBound("avg_wait_high", "<=", 0.142, "s")
    assert bounds["drop_rate_high"].value == pytest.approx(0.4) and bounds["drop_rate_high"].unit == "%"
    assert semantic_bounds(None) == []


def test_json_round_trip():
    s = parse_subintents("avg_wait_high <= 0.2s\nmatch(a, *, 80, tcp)\nwindow(22:00, 06:00)", "intent")
    assert SubIntentSet.from_json(s.dumps()) == s
    assert SubIntentSet.from_json([]).items == ()


@settings(max_examples=1000)
@given(subintent_sets())
def test_fuzz_round_trip(s):
    back = parse_subintents(serialize_subintents(s))
    assert not back.warnings
    assert back.items == canonical_order(s.items)


@given(subintent_sets(), st.text(alphabet="abc ,.", max_size=20), st.text(alphabet="xyz !?", max_size=20))
def test_surrounding_prose_is_ignored(s, pre, post):
    text = "\n".join(f"{pre} {it.text()} {post}" for it in s.items)
    assert parse_subintents(text).items == s.items
