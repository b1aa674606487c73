from __future__ import annotations

import json

import pytest

from threadloom.cli import main
from threadloom.engine import Engine, EngineConfig

from conftest import fixture_path, write_engine_home
from test_service import run_scripted_session


@pytest.fixture
def cli_home(tmp_path, metadata_fixture_dir):
    return write_engine_home(tmp_path / "cli-home", metadata_fixture_dir)


def run_cli(home, *argv) -> int:
    return main(["--home", str(home), *argv])


def test_ingest_and_thread_ls(cli_home, capsys):
    assert run_cli(cli_home, "ingest", str(fixture_path("doc_small.json"))) == 0
    out = capsys.readouterr().out
    assert "ingested demo-doc" in out
    assert run_cli(cli_home, "thread", "ls") == 0
    out = capsys.readouterr().out
    assert "Unorganized Papers" in out
    assert "*current*" in out


def test_suggest_on_empty_workspace_exits_zero(cli_home, capsys):
    assert run_cli(cli_home, "suggest", "anything at all") == 0
    assert "no suggestions" in capsys.readouterr().out


def test_extract_unknown_document_fails_with_code(cli_home, capsys):
    assert run_cli(cli_home, "extract", "ghost", "--page", "0", "--rect", "0,0,10,10") == 1
    err = capsys.readouterr().err
    assert "NOT_FOUND" in err


def test_json_output_mode(cli_home, capsys):
    run_cli(cli_home, "ingest", str(fixture_path("doc_small.json")))
    capsys.readouterr()
    assert run_cli(cli_home, "--output", "json", "thread", "ls") == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["revision"] == 1
    assert payload["drawer"][0]["thread_id"] == "unorganized"


def test_expect_revision_conflict(cli_home, capsys):
    run_cli(cli_home, "ingest", str(fixture_path("doc_small.json")))
    capsys.readouterr()
    rc = run_cli(cli_home, "--expect-revision", "0", "thread", "new", "stale")
    assert rc == 1
    assert "CONFLICT" in capsys.readouterr().err


def test_tei_ingest_via_cli(cli_home, capsys):
    assert run_cli(cli_home, "ingest", str(fixture_path("tei_sample.xml"))) == 0
    assert "3 sentences" in capsys.readouterr().out


CLI_SESSION = [
    ("ingest", "{doc}"),
    ("extract", "demo-doc", "--page", "0", "--rect", "72,114,450,12"),
    ("tank", "commit", "--new", "Reading interfaces"),
    ("extract", "demo-doc", "--page", "1", "--rect", "72,114,450,12"),
    ("tank", "commit", "--new", "Curation pipelines"),
    ("extract", "demo-doc", "--page", "2", "--rect", "72,114,450,12"),
    ("tank", "deselect", "1"),
    ("tank", "commit", "--refs-to", "t0001"),
    ("thread", "mv", "t0002", "--parent", "t0001"),
    ("recommend", "t0001", "--refresh"),
]


def run_cli_session(home) -> None:
    doc = str(fixture_path("doc_small.json"))
    for command in CLI_SESSION:
        argv = [arg.format(doc=doc) for arg in command]
        assert run_cli(home, *argv) == 0, command


def test_scripted_cli_session_is_deterministic_and_matches_golden(tmp_path, metadata_fixture_dir, capsys):
    home_one = write_engine_home(tmp_path / "one", metadata_fixture_dir)
    home_two = write_engine_home(tmp_path / "two", metadata_fixture_dir)
    run_cli_session(home_one)
    run_cli_session(home_two)
    capsys.readouterr()
    bytes_one = (home_one / "workspace.json").read_bytes()
    bytes_two = (home_two / "workspace.json").read_bytes()
    assert bytes_one == bytes_two
    golden = fixture_path("golden_workspace.json").read_bytes()
    assert bytes_one == golden


def test_cli_and_api_produce_identical_state_for_same_ops(tmp_path, metadata_fixture_dir, capsys):
    cli_home = write_engine_home(tmp_path / "via-cli", metadata_fixture_dir)
    api_home = write_engine_home(tmp_path / "via-api", metadata_fixture_dir)
    run_cli_session(cli_home)
    run_scripted_session(Engine(EngineConfig.load(api_home)))
    capsys.readouterr()
    assert (cli_home / "workspace.json").read_bytes() == (api_home / "workspace.json").read_bytes()
    assert (cli_home / "tank.json").read_bytes() == (api_home / "tank.json").read_bytes()


def test_export_outline_matches_golden(tmp_path, metadata_fixture_dir, capsys):
    home = write_engine_home(tmp_path / "export-home", metadata_fixture_dir)
    run_cli_session(home)
    capsys.readouterr()
    assert run_cli(home, "export", "t0001", "--format", "outline") == 0
    out = capsys.readouterr().out
    golden = fixture_path("golden_cli_outline.txt").read_text(encoding="utf-8")
    assert out == golden


def test_thread_rename_rm_and_clip_commit(cli_home, capsys):
    run_cli(cli_home, "ingest", str(fixture_path("doc_small.json")))
    run_cli(cli_home, "thread", "new", "scratch")
    run_cli(cli_home, "extract", "demo-doc", "--page", "0", "--rect", "72,114,450,12")
    assert run_cli(cli_home, "tank", "commit", "--clip-to", "t0001") == 0
    assert run_cli(cli_home, "thread", "rename", "t0001", "renamed scratch") == 0
    capsys.readouterr()
    run_cli(cli_home, "thread", "ls")
    assert "renamed scratch" in capsys.readouterr().out

    assert run_cli(cli_home, "thread", "rm", "t0001") == 1  # holds a clip, needs --confirm
    assert "CONFIRMATION_REQUIRED" in capsys.readouterr().err
    assert run_cli(cli_home, "thread", "rm", "t0001", "--confirm") == 0
    capsys.readouterr()
    run_cli(cli_home, "thread", "ls")
    assert "renamed scratch" not in capsys.readouterr().out


def test_recommend_without_refresh_uses_cache(cli_home, capsys):
    run_cli(cli_home, "ingest", str(fixture_path("doc_small.json")))
    run_cli(cli_home, "extract", "demo-doc", "--page", "0", "--rect", "72,114,450,12")
    run_cli(cli_home, "tank", "commit", "--new", "Reading interfaces")
    capsys.readouterr()
    assert run_cli(cli_home, "--output", "json", "recommend", "t0001") == 0
    first = json.loads(capsys.readouterr().out)
    assert run_cli(cli_home, "--output", "json", "recommend", "t0001") == 0
    second = json.loads(capsys.readouterr().out)
    assert first == second
    assert [r["paper"]["paper_id"] for r in first["recommendations"]][:2] == ["C5", "C1"]
