"""
Общие фикстуры тестов: таблицы из разобранных примеров, траектории, набор данных на диске
"""

from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
import pytest

from elicitkit.core.models import (
    ProposalEntry,
    ProposalTable,
    SpeechEntry,
    SpeechTable,
    Trajectory,
)
from elicitkit.modules.survey import TLX_CATEGORIES, TLX_PAIRS, PairwiseChoice, TlxResponse
from elicitkit.utils.formats import (
    write_manifest,
    write_proposals,
    write_speech,
    write_tlx,
    write_trajectory,
)

PARTICIPANTS = [f"P{i:02d}" for i in range(20)]


@pytest.fixture
def worked_table() -> ProposalTable:
    """Классы размеров 15, 3, 2 при N = 20"""
    return ProposalTable.from_sizes("swipe", [15, 3, 2])


@pytest.fixture
def speech_table() -> SpeechTable:
    utterances = ["move left"] * 12 + ["left"] * 5 + ["move"] * 2 + ["sideways"]
    return SpeechTable(
        referent="swipe",
        entries=tuple(SpeechEntry(participant=p, utterance=u) for p, u in zip(PARTICIPANTS, utterances)),
    )


def make_trajectory(
    participant: str,
    referent: str = "wave",
    trial: int = 0,
    frames: Optional[np.ndarray] = None,
    frame_rate: float = 25.0,
    seed: int = 0,
    frame_count: int = 12,
    joint_count: int = 3,
) -> Trajectory:
    """Траектория со случайными кадрами или с заданным массивом"""
    if frames is None:
        rng = np.random.default_rng(seed)
        frames = rng.normal(size=(frame_count, joint_count, 3))
    return Trajectory(
        participant=participant,
        referent=referent,
        trial=trial,
        frame_rate=frame_rate,
        frames=frames,
    )


@pytest.fixture
def trajectory_factory() -> Callable[..., Trajectory]:
    return make_trajectory


def full_tlx(participant: str, rating: int = 10, winner_order: Optional[List[str]] = None) -> TlxResponse:
    """Ответ TLX: одинаковые оценки, в каждой паре побеждает категория раньше в winner_order"""
    order = winner_order or [c.value for c in TLX_CATEGORIES]
    choices = []
    for pair in TLX_PAIRS:
        first, second = sorted(pair, key=lambda c: c.value)
        winner = min(pair, key=lambda c: order.index(c.value))
        choices.append(PairwiseChoice(first=first, second=second, winner=winner))
    return TlxResponse(
        participant=participant,
        ratings={c: rating for c in TLX_CATEGORIES},
        pairwise_choices=tuple(choices),
    )


def write_bundle(
    root: Path,
    participants: List[str],
    proposals: Optional[List[ProposalTable]] = None,
    speech: Optional[List[SpeechTable]] = None,
    trajectories: Optional[List[Trajectory]] = None,
    tlx: Optional[List[TlxResponse]] = None,
    likert: Optional[str] = None,
    referents: Optional[List[str]] = None,
    production: bool = False,
    extra: Optional[Dict] = None,
) -> Path:
    """Запись набора данных в каталог root; возвращает путь к манифесту"""
    root.mkdir(parents=True, exist_ok=True)
    if referents is None:
        referents = sorted({t.referent for t in (proposals or [])} | {t.referent for t in (speech or [])}
                           | {t.referent for t in (trajectories or [])})
    manifest: Dict = {
        "id": "study-1",
        "participants": participants,
        "referents": referents,
        "production": production,
    }
    if proposals is not None:
        write_proposals(proposals, root / "proposals.csv")
        manifest["proposals"] = "proposals.csv"
    if speech is not None:
        write_speech(speech, root / "speech.csv")
        manifest["speech"] = "speech.csv"
    if trajectories is not None:
        (root / "traj").mkdir(exist_ok=True)
        for traj in trajectories:
            write_trajectory(traj, root / "traj" / f"{traj.referent}_{traj.participant}_{traj.trial}.traj")
        manifest["trajectories"] = ["traj/*.traj"]
    surveys: Dict = {}
    if tlx is not None:
        write_tlx(tlx, root / "tlx.csv", root / "tlx_pairs.csv")
        surveys.update(tlx_ratings="tlx.csv", tlx_pairs="tlx_pairs.csv")
    if likert is not None:
        (root / "likert.csv").write_text(likert, encoding="utf-8")
        surveys.update(likert="likert.csv", likert_scale=[1, 5])
    if surveys:
        manifest["surveys"] = surveys
    manifest.update(extra or {})
    write_manifest(manifest, root / "study.yaml")
    return root / "study.yaml"


@pytest.fixture
def worked_bundle(tmp_path: Path, worked_table: ProposalTable) -> Path:
    """Набор данных только с таблицей предложений из разобранного примера"""
    return write_bundle(tmp_path / "worked", PARTICIPANTS, proposals=[worked_table])


@pytest.fixture
def full_bundle(tmp_path: Path) -> Path:
    """Набор данных со всеми видами входных данных: 6 участников, 2 референта"""
    participants = PARTICIPANTS[:6]
    bins = {"swipe": ["left", "left", "left", "flick", "flick", "tap"],
            "wave": ["wave", "wave", "wave", "wave", "hand", "tap"]}
    proposals = [
        ProposalTable(referent=r, entries=tuple(
            ProposalEntry(participant=p, bin=b) for p, b in zip(participants, labels)
        ))
        for r, labels in bins.items()
    ]
    utterances = {"swipe": ["move left", "move left", "left", "move left", "move", "left"],
                  "wave": ["wave", "wave", "hello", "wave", "hi", "hello"]}
    speech = [
        SpeechTable(referent=r, entries=tuple(
            SpeechEntry(participant=p, utterance=u) for p, u in zip(participants, texts)
        ))
        for r, texts in utterances.items()
    ]
    trajectories = [
        make_trajectory(p, referent=r, seed=10 * i + j)
        for j, r in enumerate(["swipe", "wave"])
        for i, p in enumerate(participants)
    ]
    tlx = [full_tlx(p, rating=5 + i) for i, p in enumerate(participants)]
    likert = "participant,ease,fun\n" + "".join(
        f"{p},{1 + i % 5},{5 - i % 3}\n" for i, p in enumerate(participants)
    )
    return write_bundle(
        tmp_path / "full", participants, proposals=proposals, speech=speech,
        trajectories=trajectories, tlx=tlx, likert=likert,
    )
