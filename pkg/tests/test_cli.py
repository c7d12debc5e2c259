import pytest
from typer.testing import CliRunner

from fishnet.cli.main import EXIT_USAGE, app
from fishnet.client.keystore import Keystore
from fishnet.core.consent import Flag

runner = CliRunner()


@pytest.fixture
def keystore(tmp_path):
    return tmp_path / "keys"


def test_keygen_and_config(keystore):
    result = runner.invoke(app, ["keygen", "--keystore", str(keystore), "--seed", "alice"])
    assert result.exit_code == 0, result.output
    store = Keystore(keystore)
    assert store.active_id() in store.key_ids()

    result = runner.invoke(app, ["config", "GPTBot:0;default:1", "--keystore", str(keystore)])
    assert result.exit_code == 0, result.output
    assert "GPTBot:0" in result.output
    assert store.consent_config().rules == {"GPTBot": Flag.DENY}


def test_bad_consent_config_is_a_usage_error(keystore):
    result = runner.invoke(app, ["config", "GPTBot:2", "--keystore", str(keystore)])
    assert result.exit_code == EXIT_USAGE


def test_post_needs_exactly_one_source(keystore):
    result = runner.invoke(app, ["post", "http://127.0.0.1:9/submit", "--keystore", str(keystore)])
    assert result.exit_code == EXIT_USAGE


def test_register_agent_needs_a_key(tmp_path):
    result = runner.invoke(app, ["register-agent", "GPTBot", "--ledger", "http://127.0.0.1:9"])
    assert result.exit_code == EXIT_USAGE


def test_bench_refuses_few_runs(tmp_path):
    result = runner.invoke(app, ["bench-client", "--runs", "3", "--out", str(tmp_path / "c.csv")])
    assert result.exit_code == EXIT_USAGE


def test_scenario_reference_run(tmp_path):
    report = tmp_path / "report.json"
    result = runner.invoke(
        app, ["scenario", "--workdir", str(tmp_path / "run"), "--report", str(report)]
    )
    assert result.exit_code == 0, result.output
    assert report.exists()


def test_scenario_with_a_broken_plan(tmp_path):
    plan = tmp_path / "plan.yaml"
    plan.write_text("users: [{name: alice}]\ncrawlers: []\nwithdrawals: [{user: bob}]\n")
    result = runner.invoke(app, ["scenario", str(plan), "--workdir", str(tmp_path / "run")])
    assert result.exit_code == EXIT_USAGE
