import itertools

import pytest

from fishnet.core.consent import (
    MASK_PLACEHOLDER,
    MASKED_ATTR,
    TAG_HASH_ATTR,
    TAG_SIG_ATTR,
    ConsentConfig,
    ConsentTag,
    CrawlerAgentConfig,
    Flag,
    TaggedContent,
    attach_tag,
    check_consent,
    mask_content,
    parse_consent_config,
    serialize_consent_config,
)
from fishnet.core.exceptions import AgentConfigError, ConsentConfigError, UsageError

TAG = ConsentTag("ab" * 32, "cd" * 96)


def test_parse_named_rules_and_default():
    config = parse_consent_config("GPTBot:0;Googlebot:1;default:0")
    assert config.rules == {"GPTBot": Flag.DENY, "Googlebot": Flag.ALLOW}
    assert config.default_rule is Flag.DENY


def test_missing_default_means_allow():
    config = parse_consent_config("GPTBot:0")
    assert config.default_rule is Flag.ALLOW
    assert check_consent(config, "Bingbot") is Flag.ALLOW


@pytest.mark.parametrize(
    "text",
    ["", "GPTBot", "GPTBot:2", "GPTBot:0;GPTBot:1", "default:1;default:0", ":1", "GPT Bot:1", "GPTBot:1;"],
)
def test_malformed_configs_are_rejected(text):
    with pytest.raises(ConsentConfigError):
        parse_consent_config(text)


def test_error_names_offending_token():
    with pytest.raises(ConsentConfigError) as info:
        parse_consent_config("GPTBot:0;Googlebot:yes")
    assert info.value.token == "yes"


def test_serialize_sorts_names_and_always_writes_default():
    config = ConsentConfig({"b": Flag.ALLOW, "a": Flag.DENY})
    assert serialize_consent_config(config) == "a:0;b:1;default:1"
    assert parse_consent_config(serialize_consent_config(config)) == config


NAMES = ("GPTBot", "Googlebot", "CCBot")


def every_config():
    for flags in itertools.product((None, Flag.DENY, Flag.ALLOW), repeat=len(NAMES)):
        rules = {name: flag for name, flag in zip(NAMES, flags) if flag is not None}
        for default in (Flag.DENY, Flag.ALLOW):
            yield ConsentConfig(rules, default)


def test_codec_round_trips_every_config():
    for config in every_config():
        text = serialize_consent_config(config)
        assert parse_consent_config(text) == config
        assert serialize_consent_config(parse_consent_config(text)) == text


def test_pair_order_does_not_change_the_decision():
    for config in every_config():
        pairs = [f"{name}:{flag.value}" for name, flag in config.rules.items()]
        pairs.append(f"default:{config.default_rule.value}")
        for order in itertools.permutations(pairs):
            parsed = parse_consent_config(";".join(order))
            assert parsed == config
            for name in (*NAMES, "Bingbot"):
                assert check_consent(parsed, name) is check_consent(config, name)


def test_check_consent_named_rule_overrides_default():
    config = parse_consent_config("GPTBot:1;default:0")
    assert check_consent(config, "GPTBot") is Flag.ALLOW
    assert check_consent(config, "CCBot") is Flag.DENY


def test_check_consent_is_case_sensitive():
    config = parse_consent_config("GPTBot:0;default:1")
    assert check_consent(config, "gptbot") is Flag.ALLOW


def test_default_is_reserved_as_rule_name():
    with pytest.raises(ConsentConfigError):
        ConsentConfig({"default": Flag.DENY})


def test_consent_tag_requires_lowercase_hex():
    with pytest.raises(ValueError):
        ConsentTag("AB" * 32, "cd")
    with pytest.raises(ValueError):
        ConsentTag("ab" * 31, "cd")
    with pytest.raises(ValueError):
        ConsentTag("ab" * 32, "")


def test_mask_drops_tag_and_content():
    item = attach_tag(TaggedContent("secret"), TAG)
    masked = mask_content(item)
    assert masked.content == MASK_PLACEHOLDER
    assert masked.tag is None
    assert masked.masked
    assert masked.attributes() == {MASKED_ATTR: "1"}


def test_attach_tag_to_masked_content_fails():
    with pytest.raises(UsageError):
        attach_tag(mask_content(TaggedContent("x")), TAG)


def test_tagged_attributes():
    item = attach_tag(TaggedContent("hello"), TAG)
    assert item.attributes() == {TAG_HASH_ATTR: TAG.hash, TAG_SIG_ATTR: TAG.signature}


@pytest.mark.parametrize("flags", list(itertools.product("01", repeat=3)))
def test_decision_table(flags):
    gpt, google, default = flags
    config = parse_consent_config(f"GPTBot:{gpt};Googlebot:{google};default:{default}")
    assert check_consent(config, "GPTBot").value == gpt
    assert check_consent(config, "Googlebot").value == google
    assert check_consent(config, "CCBot").value == default


def test_agent_config_validation():
    with pytest.raises(AgentConfigError):
        CrawlerAgentConfig("GPTBot", "GPTBot", ("not-a-cidr",), "00")
    with pytest.raises(AgentConfigError):
        CrawlerAgentConfig("GPTBot", "", ("10.0.0.0/8",), "00")
    with pytest.raises(AgentConfigError):
        CrawlerAgentConfig("GPTBot", "GPTBot", (), "00")
    agent = CrawlerAgentConfig("GPTBot", "GPTBot", ["10.0.0.0/8"], "00")
    assert agent.ip_ranges == ("10.0.0.0/8",)
    assert [str(net) for net in agent.networks()] == ["10.0.0.0/8"]
