"""
Загрузка набора данных исследования: манифест и все файлы, на которые он ссылается
"""

import hashlib
import logging
from collections import OrderedDict
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar, Union

from pydantic import BaseModel, ConfigDict
from pydantic import ValidationError as PydanticValidationError

from elicitkit.core.exceptions import BundleParseError, ParseIssue, StudyValidationError
from elicitkit.core.models import ProposalTable, SpeechTable, Study, Trajectory
from elicitkit.core.validation import ValidationReport, validate_study
from elicitkit.modules.survey import TlxResponse
from elicitkit.utils.formats import (
    LikertTable,
    read_likert,
    read_manifest,
    read_proposals,
    read_speech,
    read_tlx,
    read_trajectory,
)

logger = logging.getLogger(__name__)

MANIFEST_NAMES = ("study.yaml", "study.yml", "study.json")
GLOB_CHARS = set("*?[")

T = TypeVar("T")


class SurveyData(BaseModel):
    """Ответы на опросники из набора данных"""

    model_config = ConfigDict(frozen=True)

    tlx: Tuple[TlxResponse, ...] = ()
    likert: Optional[LikertTable] = None
    likert_scale: Optional[Tuple[int, int]] = None

    @property
    def empty(self) -> bool:
        return not self.tlx and self.likert is None


class StudyBundle(BaseModel):
    """Полностью разобранный набор данных исследования"""

    model_config = ConfigDict(frozen=True)

    manifest: Path
    study: Study
    proposals: Tuple[ProposalTable, ...] = ()
    speech: Tuple[SpeechTable, ...] = ()
    trajectories: Tuple[Trajectory, ...] = ()
    surveys: SurveyData = SurveyData()
    input_hash: str = ""

    @property
    def root(self) -> Path:
        return self.manifest.parent

    def trajectories_by_referent(self) -> Dict[str, List[Trajectory]]:
        """Траектории, сгруппированные по референтам в порядке описания исследования"""
        groups: Dict[str, List[Trajectory]] = OrderedDict((r, []) for r in self.study.referents)
        for traj in self.trajectories:
            groups.setdefault(traj.referent, []).append(traj)
        return OrderedDict((r, g) for r, g in groups.items() if g)

    def validate_study(self) -> ValidationReport:
        return validate_study(self.study, self.proposals, self.speech, self.trajectories)


def resolve_manifest(path: Union[str, Path]) -> Path:
    """
    Путь к манифесту: сам файл или study.yaml / study.yml / study.json в каталоге

    Raises:
        BundleParseError: Если манифест не найден
    """
    path = Path(path)
    if path.is_dir():
        for name in MANIFEST_NAMES:
            candidate = path / name
            if candidate.is_file():
                return candidate
        raise BundleParseError([ParseIssue(str(path), None, None, f"В каталоге нет манифеста {MANIFEST_NAMES}")])
    if not path.is_file():
        raise BundleParseError([ParseIssue(str(path), None, None, "Файл не найден")])
    return path


def _as_list(value: Any) -> List[str]:
    if value is None:
        return []
    if isinstance(value, (str, Path)):
        return [str(value)]
    return [str(v) for v in value]


def input_hash(manifest: Path, files: Sequence[Path]) -> str:
    """SHA-256 по манифесту и всем файлам набора в порядке относительных путей"""
    root = manifest.parent
    digest = hashlib.sha256()
    unique = {p.resolve() for p in [manifest, *files]}
    for path in sorted(unique, key=lambda p: _relative(p, root)):
        digest.update(_relative(path, root).encode("utf-8"))
        digest.update(b"\0")
        digest.update(path.read_bytes())
        digest.update(b"\0")
    return digest.hexdigest()


def _relative(path: Path, root: Path) -> str:
    try:
        return path.relative_to(root.resolve()).as_posix()
    except ValueError:
        return path.as_posix()


class _Loader:
    """Разбор файлов набора с накоплением всех проблем"""

    def __init__(self, manifest: Path):
        self.manifest = manifest
        self.root = manifest.parent
        self.issues: List[ParseIssue] = []
        self.files: List[Path] = []

    def note(self, message: str) -> None:
        self.issues.append(ParseIssue(str(self.manifest), None, None, message))

    def existing(self, relative: str) -> Optional[Path]:
        path = self.root / relative
        if not path.is_file():
            self.issues.append(ParseIssue(str(path), None, None, "Файл не найден"))
            return None
        self.files.append(path)
        return path

    def expand(self, patterns: Sequence[str]) -> List[Path]:
        """Пути и шаблоны glob относительно манифеста"""
        paths: List[Path] = []
        for pattern in patterns:
            if GLOB_CHARS & set(pattern):
                matched = sorted(p for p in self.root.glob(pattern) if p.is_file())
                if not matched:
                    self.note(f"Шаблон '{pattern}' не совпал ни с одним файлом")
                self.files.extend(matched)
                paths.extend(matched)
            else:
                path = self.existing(pattern)
                if path is not None:
                    paths.append(path)
        return paths

    def parse(self, reader: Callable[..., T], *args: Any) -> Optional[T]:
        try:
            return reader(*args)
        except BundleParseError as e:
            self.issues.extend(e.issues)
            return None


def _load_surveys(loader: _Loader, surveys: Optional[Dict[str, Any]]) -> SurveyData:
    if not surveys:
        return SurveyData()

    tlx: List[TlxResponse] = []
    if surveys.get("tlx_ratings"):
        ratings = loader.existing(surveys["tlx_ratings"])
        pairs = loader.existing(surveys["tlx_pairs"]) if surveys.get("tlx_pairs") else None
        if ratings is not None and (pairs is not None or not surveys.get("tlx_pairs")):
            tlx = loader.parse(read_tlx, ratings, pairs) or []
    elif surveys.get("tlx_pairs"):
        loader.note("surveys.tlx_pairs задан без tlx_ratings")

    likert = None
    if surveys.get("likert"):
        path = loader.existing(surveys["likert"])
        if path is not None:
            likert = loader.parse(read_likert, path)

    scale = surveys.get("likert_scale")
    if scale is not None:
        if not (isinstance(scale, (list, tuple)) and len(scale) == 2 and scale[0] < scale[1]):
            loader.note(f"surveys.likert_scale: ожидается [min, max], получено {scale}")
            scale = None
        else:
            scale = (int(scale[0]), int(scale[1]))

    return SurveyData(tlx=tuple(tlx), likert=likert, likert_scale=scale)


def load_bundle(path: Union[str, Path], validate: bool = True) -> StudyBundle:
    """
    Загрузка набора данных исследования

    Все проблемы разбора (включая отсутствующие файлы) собираются в одну
    ошибку. После разбора данные проверяются validate_study.

    Args:
        path: Манифест или каталог с манифестом
        validate: Проверять согласованность данных

    Returns:
        Разобранный набор данных

    Raises:
        BundleParseError: Если какой-либо файл не найден или не разобран
        StudyValidationError: Если validate=True и найдены нарушения
    """
    manifest = resolve_manifest(path)
    loader = _Loader(manifest)
    data = read_manifest(manifest)

    study = None
    try:
        study = Study(
            id=str(data.get("id", "")),
            participants=tuple(str(p) for p in data.get("participants") or ()),
            referents=tuple(str(r) for r in data.get("referents") or ()),
            production=bool(data.get("production", False)),
            metadata={str(k): str(v) for k, v in (data.get("metadata") or {}).items()},
        )
    except PydanticValidationError as e:
        for item in e.errors():
            where = ".".join(str(x) for x in item["loc"])
            loader.note(f"{where}: {item['msg']}" if where else item["msg"])

    proposals: List[ProposalTable] = []
    for path_ in loader.expand(_as_list(data.get("proposals"))):
        proposals.extend(loader.parse(read_proposals, path_) or [])

    speech: List[SpeechTable] = []
    for path_ in loader.expand(_as_list(data.get("speech"))):
        speech.extend(loader.parse(read_speech, path_) or [])

    trajectories: List[Trajectory] = []
    for path_ in loader.expand(_as_list(data.get("trajectories"))):
        traj = loader.parse(read_trajectory, path_)
        if traj is not None:
            trajectories.append(traj)

    surveys = _load_surveys(loader, data.get("surveys"))

    if loader.issues or study is None:
        raise BundleParseError(loader.issues)

    bundle = StudyBundle(
        manifest=manifest,
        study=study,
        proposals=tuple(proposals),
        speech=tuple(speech),
        trajectories=tuple(sorted(trajectories, key=lambda t: (t.referent, t.key))),
        surveys=surveys,
        input_hash=input_hash(manifest, loader.files),
    )
    logger.info(
        f"Исследование {study.id}: таблиц предложений {len(proposals)}, речевых {len(speech)}, "
        f"траекторий {len(trajectories)}"
    )

    if validate:
        report = bundle.validate_study()
        if not report.ok:
            raise StudyValidationError(report)
    return bundle
