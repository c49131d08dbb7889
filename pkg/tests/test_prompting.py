import pytest

from tcintent.profile import default_profile, keywords, profile_filter
from tcintent.prompting import (
    Exemplar,
    PromptError,
    PromptStrategy,
    build_config_prompt,
    build_subintent_prompt,
    default_exemplars,
    load_exemplars,
    preamble,
)
from tcintent.subintent import parse_subintents, semantic_bounds
from tcintent.tc_lang import parse_tc

INTENT = "Minimize delay for voice traffic during 8 PM–1 AM"
STRATEGIES = list(PromptStrategy)


@pytest.fixture
def p_k():
    return profile_filter(default_profile(), keywords(INTENT))


@pytest.fixture
def subs(casestudy):
    return parse_subintents(casestudy["corrected_subintents.txt"])


def test_zero_shot_has_no_context(voice_model, p_k):
    text = build_subintent_prompt(INTENT, PromptStrategy.ZERO_SHOT, voice_model, p_k)
    assert INTENT in text
    for block in ("## Example", "## Semantic model", "## Traffic profile"):
        assert block not in text


def test_two_shot_carries_thresholds_and_profile(voice_model, p_k):
    text = build_subintent_prompt(INTENT, PromptStrategy.TWO_SHOT_AQM, voice_model, p_k)
    assert "0.142" in text
    for b in semantic_bounds(voice_model):
        assert b.text() in text
    assert "match(voice, 10.1.4.0/24, 16384-32767, udp)" in text
    assert text.count("## Example") == 2


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_prompts_are_deterministic(strategy, voice_model, p_k, subs):
    a = build_subintent_prompt(INTENT, strategy, voice_model, p_k)
    assert a == build_subintent_prompt(INTENT, strategy, voice_model, p_k)
    b = build_config_prompt(subs, strategy, voice_model, p_k)
    assert b == build_config_prompt(subs, strategy, voice_model, p_k)


def test_size_is_monotone_in_context(voice_model, p_k, subs):
    sizes = [len(build_subintent_prompt(INTENT, st, voice_model, p_k)) for st in STRATEGIES]
    assert sizes == sorted(sizes)
    sizes = [len(build_config_prompt(subs, st, voice_model, p_k)) for st in STRATEGIES]
    assert sizes == sorted(sizes)


def test_config_preamble_lists_checklist(subs):
    text = build_config_prompt(subs, PromptStrategy.ZERO_SHOT)
    for name in ("class hierarchy", "priority mapping", "delay/loss modeling", "packet classification",
                 "temporal annotations"):
        assert name in text.lower()
    assert "Device: eth0" in text


def test_one_shot_has_exactly_one_config_exemplar(subs):
    text = build_config_prompt(subs, PromptStrategy.ONE_SHOT)
    assert text.count("## Example") == 1


def test_exemplar_count_mismatch():
    ex = load_exemplars("subintent")
    with pytest.raises(PromptError, match="needs 1"):
        build_subintent_prompt(INTENT, PromptStrategy.ONE_SHOT, exemplars=ex)
    with pytest.raises(PromptError, match="needs 0"):
        build_subintent_prompt(INTENT, PromptStrategy.ZERO_SHOT, exemplars=ex[:1])


def test_wrong_stage_exemplar(subs):
    with pytest.raises(PromptError, match="stage"):
        build_config_prompt(subs, PromptStrategy.ONE_SHOT, exemplars=load_exemplars("subintent")[:1])


def test_two_shot_requires_model():
    with pytest.raises(PromptError, match="semantic model"):
        build_subintent_prompt(INTENT, PromptStrategy.TWO_SHOT_AQM)


def test_shipped_exemplars_parse():
    for e in load_exemplars("subintent"):
        assert not parse_subintents(e.output).warnings
    for e in load_exemplars("config"):
        assert parse_tc(e.output).statements
    assert len(default_exemplars("config", PromptStrategy.TWO_SHOT_AQM)) == 2


@pytest.mark.parametrize("text,expected", [
    ("zero", PromptStrategy.ZERO_SHOT), ("OneShot", PromptStrategy.ONE_SHOT),
    ("two-aqm", PromptStrategy.TWO_SHOT_AQM), ("TWO", PromptStrategy.TWO_SHOT_AQM),
])
def test_strategy_parse(text, expected):
    assert PromptStrategy.parse(text) is expected


def test_bad_inputs():
    with pytest.raises(PromptError):
        PromptStrategy.parse("three")
    with pytest.raises(PromptError):
        Exemplar("other", "a", "b")
    with pytest.raises(PromptError):
        preamble("other")


def test_flaw_marker_only_when_requested(subs):
    assert "[MOCK:" not in build_config_prompt(subs, PromptStrategy.ZERO_SHOT)
    assert "[MOCK:flaw=bad-mask,no-ceil]" in build_config_prompt(subs, PromptStrategy.ZERO_SHOT,
                                                                 flaws=("bad-mask", "no-ceil"))
