import json

import pytest
from click.testing import CliRunner

from peerspin.cli import cli, main, split_spec
from peerspin.registry import packument_from_json, write_ndjson_snapshot

from .conftest import CLEAN_CHAIN_DOCS, MOTIVATING_DOCS


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def motivating_snapshot(tmp_path):
    docs = [packument_from_json(d) for d in MOTIVATING_DOCS]
    return str(write_ndjson_snapshot(docs, tmp_path / "motivating.ndjson"))


@pytest.fixture
def clean_snapshot(tmp_path):
    docs = [packument_from_json(d) for d in CLEAN_CHAIN_DOCS]
    return str(write_ndjson_snapshot(docs, tmp_path / "clean.ndjson"))


@pytest.mark.parametrize("spec,expected", [
    ("react@^18.0.0", ("react", "^18.0.0")),
    ("react", ("react", "latest")),
    ("@scope/pkg@1.x", ("@scope/pkg", "1.x")),
    ("@scope/pkg", ("@scope/pkg", "latest")),
])
def test_split_spec(spec, expected):
    assert split_spec(spec) == expected


def test_detect_loop_exit_code(runner, motivating_snapshot):
    result = runner.invoke(cli, ["detect", "xydesign@1.0.0",
                                 "--snapshot", motivating_snapshot])
    assert result.exit_code == 2
    report = json.loads(result.output)
    assert report["package"] == "react"
    assert sorted(report["versions"]) == ["16.14.0", "18.2.0"]


def test_detect_clean_exit_code(runner, clean_snapshot):
    result = runner.invoke(cli, ["detect", "app@1.0.0",
                                 "--snapshot", clean_snapshot])
    assert result.exit_code == 0
    assert json.loads(result.output)["verdict"] == "success"


def test_resolve_json_tree(runner, clean_snapshot):
    result = runner.invoke(cli, ["resolve", "app@^1.0.0",
                                 "--snapshot", clean_snapshot])
    assert result.exit_code == 0
    tree = json.loads(result.output)
    assert set(tree["children"]) == {"app", "lib-a", "lib-b", "lib-c"}
    assert tree["children"]["lib-b"]["version"] == "2.3.1"


def test_resolve_tree_text(runner, clean_snapshot):
    result = runner.invoke(cli, ["resolve", "app@1.0.0",
                                 "--snapshot", clean_snapshot,
                                 "--format", "tree-text"])
    assert result.exit_code == 0
    assert "app@1.0.0" in result.output
    assert "lib-c@1.1.4" in result.output


def test_resolve_unresolvable_exit_code(runner, clean_snapshot):
    result = runner.invoke(cli, ["resolve", "app@^9.0.0",
                                 "--snapshot", clean_snapshot])
    assert result.exit_code == 3


def test_detect_iteration_limit_exit_code(runner, tmp_path, motivating_snapshot):
    result = runner.invoke(cli, ["detect", "xydesign@1.0.0",
                                 "--snapshot", motivating_snapshot,
                                 "--max-iterations", "3"])
    assert result.exit_code in (2, 4)


def test_emit_log_writes_ndjson(runner, motivating_snapshot, tmp_path):
    log_path = tmp_path / "log.ndjson"
    result = runner.invoke(cli, ["detect", "xydesign@1.0.0",
                                 "--snapshot", motivating_snapshot,
                                 "--emit-log", str(log_path)])
    assert result.exit_code == 2
    entries = [json.loads(line) for line in
               log_path.read_text().splitlines()]
    assert entries, "placement log must not be empty"
    assert {"seq", "action", "name", "version", "position"} <= set(entries[0])


def test_scan_outputs_ndjson_and_summary(runner, motivating_snapshot,
                                         tmp_path):
    out = tmp_path / "results.ndjson"
    result = runner.invoke(cli, ["scan", "xydesign@all", "react@all",
                                 "--snapshot", motivating_snapshot,
                                 "--out", str(out)])
    assert result.exit_code == 2  # at least one loop found
    lines = [json.loads(line) for line in out.read_text().splitlines()]
    verdicts = {(d["name"], d["version"]): d["verdict"] for d in lines}
    assert verdicts[("xydesign", "1.0.0")] == "peerspin"
    assert verdicts[("react", "18.2.0")] == "clean"


def test_scan_whole_snapshot_clean(runner, clean_snapshot, tmp_path):
    out = tmp_path / "results.ndjson"
    result = runner.invoke(cli, ["scan", "--snapshot", clean_snapshot,
                                 "--out", str(out), "--jobs", "4"])
    assert result.exit_code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 4


def test_stats_command(runner, motivating_snapshot):
    result = runner.invoke(cli, ["stats", "--snapshot", motivating_snapshot])
    assert result.exit_code == 0
    doc = json.loads(result.output)
    assert doc["packageCategories"]["has-peer"] == 3
    assert doc["topPeerDependents"]


def test_gen_fixture_then_detect(runner, tmp_path):
    dest = tmp_path / "fixture"
    result = runner.invoke(cli, ["gen-fixture", "--pattern", "B",
                                 "--intermediates", "2",
                                 "--out", str(dest)])
    assert result.exit_code == 0
    descriptor = json.loads(result.output)
    assert descriptor["expectedVerdict"] == "peerspin"
    check = runner.invoke(cli, ["detect", "A@1.0.0", "--snapshot", str(dest)])
    assert check.exit_code == 2


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["detect", "x@1.0.0"])     # no snapshot and no registry URL
    assert excinfo.value.code == 1
    assert "registry source" in capsys.readouterr().err


def test_unreadable_snapshot_exit_code():
    with pytest.raises(SystemExit) as excinfo:
        main(["detect", "x@1.0.0", "--snapshot", "/nonexistent/snap.ndjson"])
    assert excinfo.value.code == 1
