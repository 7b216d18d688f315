"""
Тесты командной строки: вывод, файлы результатов и коды завершения
"""

import json

import pytest
from click.testing import CliRunner

from elicitkit import __version__
from elicitkit.cli.commands import EXIT_PARSE, EXIT_VALIDATION, cli
from elicitkit.core.models import ProposalTable
from elicitkit.utils.formats import write_tlx
from tests.conftest import full_tlx, write_bundle


@pytest.fixture
def runner():
    return CliRunner()


def _invoke(runner, *args):
    return runner.invoke(cli, list(map(str, args)), obj={})


def test_version(runner):
    result = _invoke(runner, "--version")
    assert result.exit_code == 0
    assert __version__ in result.output


def test_agreement_table(runner, worked_bundle):
    result = _invoke(runner, "agreement", worked_bundle.parent / "proposals.csv")
    assert result.exit_code == 0, result.output
    assert "0.595" in result.output
    assert "0.574" in result.output


def test_agreement_json_file(runner, worked_bundle, tmp_path):
    out = tmp_path / "agreement.json"
    result = _invoke(runner, "agreement", worked_bundle, "--out", out)
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["scores"][0]["class_sizes"] == [15, 3, 2]
    assert data["scores"][0]["agreement_index"] == pytest.approx(0.595)


def test_validate(runner, worked_bundle, tmp_path):
    assert _invoke(runner, "validate", worked_bundle).exit_code == 0

    manifest = write_bundle(tmp_path / "bad", ["P00", "P01", "P09"],
                            proposals=[ProposalTable.from_sizes("swipe", [2, 1])])
    result = _invoke(runner, "validate", manifest)
    assert result.exit_code == EXIT_VALIDATION
    assert _invoke(runner, "agreement", manifest).exit_code == EXIT_VALIDATION


def test_parse_error_exit_code(runner, tmp_path):
    path = tmp_path / "proposals.csv"
    path.write_text("participant,referent,bin,colour\n", encoding="utf-8")
    result = _invoke(runner, "agreement", path)
    assert result.exit_code == EXIT_PARSE
    assert "colour" in result.output


@pytest.mark.parametrize("content", [
    "participant,referent,trial\na,r,0\n".encode("utf-8"),
    b"participant,referent,bin\na,r,\xff\n",
])
def test_unreadable_table_exit_code(runner, tmp_path, content):
    path = tmp_path / "proposals.csv"
    path.write_bytes(content)
    result = _invoke(runner, "agreement", path)
    assert result.exit_code == EXIT_PARSE, result.output


def test_bad_flag_value(runner, full_bundle):
    result = _invoke(runner, "dissimilarity", full_bundle, "--tau-grid", "0:abc:5")
    assert result.exit_code == EXIT_PARSE
    result = _invoke(runner, "consensus", full_bundle, "--threshold", "1.5")
    assert result.exit_code == EXIT_PARSE


def test_consensus(runner, worked_bundle, tmp_path):
    out = tmp_path / "consensus.json"
    result = _invoke(runner, "consensus", worked_bundle, "--threshold", "0.6", "--out", out)
    assert result.exit_code == 0, result.output
    (entry,) = json.loads(out.read_text(encoding="utf-8"))["entries"]
    assert entry["top_bin"] == "b0"
    assert entry["accepted"] is False


def test_speech(runner, full_bundle, tmp_path):
    out = tmp_path / "speech.json"
    result = _invoke(runner, "speech", full_bundle, "--baseline", "2", "--out", out)
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text(encoding="utf-8"))
    assert [r["referent"] for r in data["referents"]] == ["swipe", "wave"]
    assert data["baseline"] == 2


def test_dissimilarity_csv(runner, full_bundle, tmp_path):
    curves = tmp_path / "curves.csv"
    result = _invoke(runner, "dissimilarity", full_bundle, "--tau-grid", "0:20:5", "--csv", curves)
    assert result.exit_code == 0, result.output
    lines = curves.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "referent,tau,consensus"
    assert len(lines) == 1 + 2 * 5
    assert lines[1] == "swipe,0.0,0.0"


def test_simulate(runner, tmp_path):
    out = tmp_path / "null.json"
    samples = tmp_path / "null.csv"
    result = _invoke(runner, "simulate", "-n", 20, "-q", 10, "--draws", 3000, "--seed", 5,
                     "--observed", 0.3, "--observed", 0.05, "--csv", samples, "--out", out)
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["p_values"]["0.3"] < 0.05
    assert data["p_values"]["0.05"] > 0.5
    assert data["mean"] == pytest.approx(0.1, abs=0.01)
    assert len(samples.read_text(encoding="utf-8").splitlines()) == 3001


def test_simulate_bad_weights(runner):
    result = _invoke(runner, "simulate", "-n", 5, "-q", 2, "--distribution", "empirical",
                     "--weights", "0.5,0.2")
    assert result.exit_code == EXIT_PARSE


def test_survey(runner, full_bundle, tmp_path):
    out = tmp_path / "survey.json"
    result = _invoke(runner, "survey", full_bundle, "--raw", "--out", out)
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["tlx_summary"]["weighted"] is False
    assert data["tlx_scores"][0]["overall"] == pytest.approx(25.0)

    assert _invoke(runner, "survey").exit_code == EXIT_PARSE


def test_survey_compare_conditions(runner, full_bundle, tmp_path):
    other = tmp_path / "other.csv"
    pairs = tmp_path / "other_pairs.csv"
    write_tlx([full_tlx(f"Q{i}", rating=10 + i) for i in range(6)], other, pairs)
    out = tmp_path / "survey.json"
    result = _invoke(runner, "survey", full_bundle, "--raw", "--compare", other, "--out", out)
    assert result.exit_code == 0, result.output
    comparison = json.loads(out.read_text(encoding="utf-8"))["comparison"]
    assert comparison["t"] == pytest.approx(-4.6291, abs=1e-4)
    assert comparison["df"] == pytest.approx(10.0)

    weighted = _invoke(runner, "survey", full_bundle, "--compare", other, "--compare-pairs", pairs)
    assert weighted.exit_code == 0, weighted.output
    assert "Уэлча" in weighted.output

    assert _invoke(runner, "survey", full_bundle, "--compare", other).exit_code == EXIT_PARSE


def test_report_files_identical(runner, full_bundle, tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for path in paths:
        result = _invoke(runner, "report", full_bundle, "-q", 3, "--draws", 500, "--seed", 2, "--out", path)
        assert result.exit_code == 0, result.output
    first, second = (p.read_bytes() for p in paths)
    assert first == second
    data = json.loads(first)
    assert data["seed"] == 2
    assert data["simulation"]["draws"] == 500
    assert data["input_hash"]
