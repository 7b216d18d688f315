"""
Тесты сборки итогового отчёта
"""

import json

import pytest

from elicitkit.core.bundle import StudyBundle, load_bundle
from elicitkit.core.config import load_settings
from elicitkit.core.models import ProposalTable, Study
from elicitkit.core.report import analyze_trajectories, report_to_json, run_report, write_report
from tests.conftest import make_trajectory, write_bundle

SECTION_ORDER = ["agreement", "consensus", "chance", "speech", "dissimilarity", "simulation", "surveys"]


def test_proposals_only(worked_bundle):
    report = run_report(load_bundle(worked_bundle), load_settings(categories=None))
    assert report.agreement.status == "ok"
    assert report.consensus.status == "ok"
    assert report.chance.status == "ok"
    for name in ("speech", "dissimilarity", "simulation", "surveys"):
        section = getattr(report, name)
        assert section.status == "skipped"
        assert section.notice

    (score,) = report.agreement.scores
    assert score.agreement_index == pytest.approx(0.595)
    assert score.agreement_rate == pytest.approx(0.5737, abs=1e-4)
    assert report.consensus.consensus_set.entries[0].accepted
    assert report.validation.ok


def test_full_report(full_bundle):
    settings = load_settings(categories=4, draws=500, seed=3)
    report = run_report(load_bundle(full_bundle), settings)
    for name in SECTION_ORDER:
        assert getattr(report, name).status == "ok", name

    assert [c.referent for c in report.dissimilarity.curves] == ["swipe", "wave"]
    assert set(report.simulation.p_values) == {"swipe", "wave"}
    assert report.simulation.corrected_alpha == pytest.approx(0.025)
    assert report.surveys.tlx_summary.respondents == 6
    assert [q.question for q in report.surveys.likert.questions] == ["ease", "fun"]
    assert report.seed == 3


def test_report_is_deterministic(full_bundle, tmp_path):
    settings = load_settings(categories=4, draws=2000, seed=9, max_workers=4)
    first = report_to_json(run_report(load_bundle(full_bundle), settings))
    second = report_to_json(run_report(load_bundle(full_bundle), settings.override(max_workers=1)))
    assert first == second

    data = json.loads(first)
    assert list(data)[5:] == SECTION_ORDER
    write_report(run_report(load_bundle(full_bundle), settings), tmp_path / "report.json")
    assert (tmp_path / "report.json").read_text(encoding="utf-8") == first


def test_section_error_does_not_abort(tmp_path):
    participants = tuple(f"P{i:02d}" for i in range(5))
    bundle = StudyBundle(
        manifest=tmp_path / "study.yaml",
        study=Study(id="s", participants=participants, referents=("a", "b")),
        proposals=(ProposalTable.from_sizes("a", [3, 2]), ProposalTable.from_sizes("b", [2, 1])),
    )
    report = run_report(bundle, load_settings())
    assert report.agreement.status == "ok"
    assert report.chance.status == "error"
    assert "участник" in report.chance.error
    assert not report.validation.ok


def test_production_study_skips_agreement(tmp_path):
    trajectories = [
        make_trajectory(p, referent="wave", trial=t, seed=10 * i + t)
        for i, p in enumerate(["P00", "P01", "P02"]) for t in range(2)
    ]
    manifest = write_bundle(
        tmp_path, ["P00", "P01", "P02"], proposals=[ProposalTable.from_sizes("wave", [2, 1])],
        trajectories=trajectories, production=True,
    )
    bundle = load_bundle(manifest)
    report = run_report(bundle, load_settings())
    assert report.agreement.status == "skipped"
    assert report.dissimilarity.status == "ok"
    (curve,) = report.dissimilarity.curves
    assert curve.zeta == "avg"


def test_failed_referent_recorded():
    groups = {
        "good": [make_trajectory(p, referent="good", seed=i) for i, p in enumerate("abc")],
        "single": [make_trajectory("a", referent="single")],
    }
    section = analyze_trajectories(groups, load_settings(tau_points=10))
    assert section.status == "ok"
    assert [c.referent for c in section.curves] == ["good"]
    assert "single" in section.failures
