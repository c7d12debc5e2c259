import pytest
import yaml
from pydantic import ValidationError

from fishnet.cli.scenario import (
    CrawlerSpec,
    ScenarioSpec,
    UserSpec,
    WithdrawalSpec,
    dump_report,
    load_scenario,
    reference_scenario,
    run_scenario,
)
from fishnet.core.consent import Flag
from fishnet.core.exceptions import ScenarioError


def test_reference_scenario_passes(tmp_path):
    report = run_scenario(reference_scenario(), tmp_path / "run")

    failed = [f"{c.name}: {c.detail}" for c in report.checks if not c.passed]
    assert failed == []
    assert report.exit_code == 0
    assert [c.name for c in report.checks] == [
        "consent-filtering",
        "tag-preservation",
        "journey-completeness",
        "custodian-audit",
        "post-withdrawal-absence",
    ]
    assert report.posts == 4

    crawls = {c.crawler: c for c in report.crawls}
    assert crawls["Googlebot"].records == 4 and crawls["Googlebot"].tagged == 4
    assert crawls["GPTBot"].masked == 4 and crawls["GPTBot"].plain == 0

    [withdrawal] = report.withdrawals
    assert withdrawal.user == "alice" and withdrawal.status == "completed"
    assert withdrawal.deleted_by == ["ml-corp", "web-server"]


def test_seeded_runs_report_identically(tmp_path):
    first = run_scenario(reference_scenario(), tmp_path / "one")
    second = run_scenario(reference_scenario(), tmp_path / "two")
    assert first.comparable() == second.comparable()


def test_generated_consent_and_no_withdrawals(tmp_path):
    spec = ScenarioSpec(
        seed=3,
        users=[UserSpec(name=name, posts=1) for name in ("ann", "ben", "cy")],
        crawlers=[CrawlerSpec(name="Googlebot", allowed_in=2), CrawlerSpec(name="GPTBot", allowed_in=0)],
    )
    assert spec.consent_for(1).rules["Googlebot"] is Flag.ALLOW
    assert spec.consent_for(2).rules["Googlebot"] is Flag.DENY

    report = run_scenario(spec, tmp_path / "run")
    assert report.passed
    assert report.withdrawals == []
    crawls = {c.crawler: c for c in report.crawls}
    assert crawls["Googlebot"].masked == 1
    assert crawls["GPTBot"].masked == 3


def test_unresolvable_withdrawal_is_rejected():
    with pytest.raises(ValidationError):
        ScenarioSpec(
            users=[UserSpec(name="alice", posts=1)],
            crawlers=[CrawlerSpec(name="Googlebot")],
            withdrawals=[WithdrawalSpec(user="alice", post=1)],
        )
    with pytest.raises(ValidationError):
        ScenarioSpec(
            users=[UserSpec(name="alice")],
            crawlers=[CrawlerSpec(name="Googlebot")],
            withdrawals=[WithdrawalSpec(user="zed")],
        )


def test_load_scenario_from_yaml(tmp_path):
    path = tmp_path / "plan.yaml"
    path.write_text(
        yaml.safe_dump(
            {
                "seed": 5,
                "users": [{"name": "alice", "consent": "Googlebot:1;default:0"}],
                "crawlers": [{"name": "Googlebot"}],
                "withdrawals": [{"user": "alice", "post": 1}],
            }
        )
    )
    spec = load_scenario(path)
    assert spec.seed == 5 and spec.ml_parties == ["ml-corp"]

    path.write_text("users: [{name: alice, consent: 'GPTBot:7'}]\ncrawlers: []\n")
    with pytest.raises(ScenarioError):
        load_scenario(path)
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "missing.yaml")


def test_unknown_mode(tmp_path):
    with pytest.raises(ScenarioError):
        run_scenario(reference_scenario(), tmp_path / "run", mode="carrier-pigeon")


def test_report_dump(tmp_path):
    report = run_scenario(reference_scenario(), tmp_path / "run")
    target = tmp_path / "report.json"
    dump_report(report, target)
    assert '"post-withdrawal-absence"' in target.read_text()
