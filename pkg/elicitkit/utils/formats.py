"""
Форматы файлов набора данных: таблицы CSV, текстовые файлы траекторий, манифест YAML

Каждый читатель собирает все найденные проблемы и выбрасывает одну
BundleParseError со списком ParseIssue (файл, строка, столбец).
"""

import csv
import io
import logging
import math
import re
from collections import OrderedDict
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, TextIO, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict
from pydantic import ValidationError as PydanticValidationError

from elicitkit.core.exceptions import BundleParseError, ParseIssue
from elicitkit.core.models import (
    ProposalEntry,
    ProposalTable,
    SpeechEntry,
    SpeechTable,
    Trajectory,
)
from elicitkit.modules.dissimilarity import ConsensusCurve
from elicitkit.modules.simulation import NullDistribution
from elicitkit.modules.survey import TLX_CATEGORIES, PairwiseChoice, TlxResponse

logger = logging.getLogger(__name__)

PROPOSAL_COLUMNS = ("participant", "referent", "trial", "bin")
SPEECH_COLUMNS = ("participant", "referent", "utterance")
TLX_RATING_COLUMNS = ("participant",) + tuple(c.value for c in TLX_CATEGORIES)
TLX_PAIR_COLUMNS = ("participant", "first", "second", "winner")

TRAJECTORY_MARKER = "#trajectory"
TRAJECTORY_KEYS = ("participant", "referent", "trial", "fps", "joints")

MANIFEST_KEYS = (
    "id", "participants", "referents", "production", "metadata",
    "proposals", "speech", "trajectories", "surveys",
)
SURVEY_KEYS = ("tlx_ratings", "tlx_pairs", "likert", "likert_scale")

_TOKEN = re.compile(r"\S+")

Target = Union[str, Path, TextIO]


class LikertTable(BaseModel):
    """Ответы на вопросы Likert: респонденты x вопросы"""

    model_config = ConfigDict(frozen=True)

    questions: Tuple[str, ...]
    participants: Tuple[str, ...]
    responses: Tuple[Tuple[int, ...], ...]


class IssueCollector:
    """Накопитель проблем разбора одного файла"""

    def __init__(self, path: Union[str, Path]):
        self.file = str(path)
        self.issues: List[ParseIssue] = []

    def add(self, message: str, line: Optional[int] = None, column: Optional[int] = None) -> None:
        self.issues.append(ParseIssue(self.file, line, column, message))

    def add_model_errors(
        self,
        error: PydanticValidationError,
        line: Optional[int] = None,
        header: Sequence[str] = (),
    ) -> None:
        """Ошибки pydantic с привязкой к столбцу по имени поля"""
        for item in error.errors():
            name = str(item["loc"][0]) if item["loc"] else ""
            column = header.index(name) + 1 if name in header else None
            where = f"{name}: " if name else ""
            self.add(f"{where}{item['msg']}", line, column)

    def raise_if_any(self) -> None:
        if self.issues:
            files: Dict[str, int] = {}
            for issue in self.issues:
                files.setdefault(issue.file, len(files))
            self.issues.sort(key=lambda i: (files[i.file], i.line or 0, i.column or 0))
            raise BundleParseError(self.issues)


def _read_text(path: Path, issues: IssueCollector) -> Optional[str]:
    """
    Чтение текста UTF-8 (метка BOM допускается)

    Returns:
        Текст файла или None, если кодировка некорректна (проблема уже записана)
    """
    raw = path.read_bytes()
    try:
        return raw.decode("utf-8-sig")
    except UnicodeDecodeError as e:
        line_start = raw.rfind(b"\n", 0, e.start) + 1
        issues.add(
            f"Некорректная кодировка UTF-8: байт 0x{raw[e.start]:02x}",
            raw.count(b"\n", 0, e.start) + 1,
            e.start - line_start + 1,
        )
        return None


def _read_csv(
    path: Path,
    issues: IssueCollector,
    required: Sequence[str],
    optional: Sequence[str] = (),
    open_columns: bool = False,
) -> Tuple[List[str], List[Tuple[int, Dict[str, str]]]]:
    """
    Чтение CSV с проверкой заголовка

    Args:
        path: Путь к файлу
        issues: Накопитель проблем
        required: Обязательные столбцы
        optional: Необязательные столбцы
        open_columns: Разрешить произвольные дополнительные столбцы

    Returns:
        Заголовок и строки (номер строки, значения по столбцам).
        Без обязательного столбца строки не возвращаются.
    """
    rows: List[Tuple[int, Dict[str, str]]] = []
    text = _read_text(path, issues)
    if text is None:
        return [], rows
    reader = csv.reader(io.StringIO(text, newline=""))
    header = next(reader, None)
    if header is None:
        issues.add("Файл пуст", 1)
        return [], rows
    header = [h.strip() for h in header]

    known = set(required) | set(optional)
    for index, name in enumerate(header):
        if not name:
            issues.add("Пустое имя столбца", 1, index + 1)
        elif not open_columns and name not in known:
            issues.add(f"Неизвестный столбец '{name}'", 1, index + 1)
    duplicates = sorted({h for h in header if h and header.count(h) > 1})
    for name in duplicates:
        issues.add(f"Повторяющийся столбец '{name}'", 1, header.index(name) + 1)
    missing = [name for name in required if name not in header]
    for name in missing:
        issues.add(f"Нет обязательного столбца '{name}'", 1)
    if missing:
        return header, rows

    for row in reader:
        if not any(cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            issues.add(
                f"Ожидается столбцов: {len(header)}, получено {len(row)}",
                reader.line_num,
            )
            continue
        rows.append((reader.line_num, {h: v.strip() for h, v in zip(header, row)}))
    return header, rows


def _parse_int(
    value: str, issues: IssueCollector, line: int, column: int, name: str
) -> Optional[int]:
    try:
        return int(value)
    except ValueError:
        issues.add(f"{name}: ожидается целое число, получено '{value}'", line, column)
        return None


def read_proposals(path: Union[str, Path]) -> List[ProposalTable]:
    """
    Чтение таблицы предложений `participant,referent,trial,bin`

    Столбец trial необязателен (по умолчанию 0). Таблицы идут в порядке
    первого появления референта.

    Raises:
        BundleParseError: Со всеми проблемами разбора
    """
    path = Path(path)
    issues = IssueCollector(path)
    header, rows = _read_csv(path, issues, ("participant", "referent", "bin"), ("trial",))
    grouped: "OrderedDict[str, List[ProposalEntry]]" = OrderedDict()

    for line, row in rows:
        trial = 0
        if row.get("trial"):
            trial = _parse_int(row["trial"], issues, line, header.index("trial") + 1, "trial")
            if trial is None:
                continue
        try:
            entry = ProposalEntry(participant=row["participant"], trial=trial, bin=row["bin"])
        except PydanticValidationError as e:
            issues.add_model_errors(e, line, header)
            continue
        if not row["referent"]:
            issues.add("referent: пустой идентификатор", line, header.index("referent") + 1)
            continue
        grouped.setdefault(row["referent"], []).append(entry)

    issues.raise_if_any()
    logger.debug(f"{path.name}: прочитано таблиц предложений {len(grouped)}")
    return [ProposalTable(referent=r, entries=tuple(e)) for r, e in grouped.items()]


def read_speech(path: Union[str, Path]) -> List[SpeechTable]:
    """
    Чтение речевых предложений `participant,referent,utterance`

    Raises:
        BundleParseError: Со всеми проблемами разбора
    """
    path = Path(path)
    issues = IssueCollector(path)
    header, rows = _read_csv(path, issues, SPEECH_COLUMNS)
    grouped: "OrderedDict[str, List[SpeechEntry]]" = OrderedDict()

    for line, row in rows:
        try:
            entry = SpeechEntry(participant=row["participant"], utterance=row["utterance"])
        except PydanticValidationError as e:
            issues.add_model_errors(e, line, header)
            continue
        if not row["referent"]:
            issues.add("referent: пустой идентификатор", line, header.index("referent") + 1)
            continue
        grouped.setdefault(row["referent"], []).append(entry)

    issues.raise_if_any()
    return [SpeechTable(referent=r, entries=tuple(e)) for r, e in grouped.items()]


def _parse_trajectory_header(line: str, issues: IssueCollector) -> Dict[str, str]:
    fields: Dict[str, str] = {}
    for match in _TOKEN.finditer(line):
        token = match.group()
        if token == TRAJECTORY_MARKER:
            continue
        key, sep, value = token.partition("=")
        if not sep or not value:
            issues.add(f"Ожидается ключ=значение, получено '{token}'", 1, match.start() + 1)
        elif key not in TRAJECTORY_KEYS:
            issues.add(f"Неизвестный ключ заголовка '{key}'", 1, match.start() + 1)
        else:
            fields[key] = value
    for key in TRAJECTORY_KEYS:
        if key not in fields:
            issues.add(f"В заголовке нет ключа '{key}'", 1)
    return fields


def read_trajectory(path: Union[str, Path]) -> Trajectory:
    """
    Чтение траектории из текстового файла

    Первая строка: `#trajectory participant=<id> referent=<id> trial=<k> fps=<hz> joints=<J>`,
    далее по строке на кадр: J*3 вещественных числа через пробел.
    Пустые строки и строки-комментарии (#) пропускаются.

    Raises:
        BundleParseError: Со всеми проблемами разбора
    """
    path = Path(path)
    issues = IssueCollector(path)
    text = _read_text(path, issues)
    issues.raise_if_any()
    lines = text.splitlines()

    if not lines or not lines[0].startswith(TRAJECTORY_MARKER):
        issues.add(f"Первая строка должна начинаться с '{TRAJECTORY_MARKER}'", 1, 1)
        issues.raise_if_any()

    fields = _parse_trajectory_header(lines[0], issues)
    joints = None
    if "joints" in fields:
        try:
            joints = int(fields["joints"])
            if joints < 1:
                raise ValueError
        except ValueError:
            issues.add(f"joints: ожидается положительное целое, получено '{fields['joints']}'", 1)
            joints = None

    frames: List[List[List[float]]] = []
    for number, text in enumerate(lines[1:], start=2):
        if not text.strip() or text.lstrip().startswith("#"):
            continue
        tokens = list(_TOKEN.finditer(text))
        values: List[float] = []
        for match in tokens:
            try:
                value = float(match.group())
            except ValueError:
                issues.add(f"Не число: '{match.group()}'", number, match.start() + 1)
                continue
            if not math.isfinite(value):
                issues.add(f"Неконечное значение: '{match.group()}'", number, match.start() + 1)
                continue
            values.append(value)
        if joints is None:
            continue
        if len(tokens) != joints * 3:
            column = tokens[joints * 3].start() + 1 if len(tokens) > joints * 3 else len(text) + 1
            issues.add(f"Ожидается значений: {joints * 3}, получено {len(tokens)}", number, column)
            continue
        if len(values) == joints * 3:
            frames.append([values[k:k + 3] for k in range(0, len(values), 3)])

    issues.raise_if_any()
    try:
        return Trajectory(
            participant=fields["participant"],
            referent=fields["referent"],
            trial=fields["trial"],
            frame_rate=fields["fps"],
            frames=frames,
        )
    except PydanticValidationError as e:
        issues.add_model_errors(e)
        issues.raise_if_any()
        raise


def read_tlx(
    ratings_path: Union[str, Path], pairs_path: Optional[Union[str, Path]] = None
) -> List[TlxResponse]:
    """
    Чтение ответов NASA TLX

    Оценки: `participant,mental,physical,temporal,performance,effort,frustration`;
    попарные сравнения (необязательно): `participant,first,second,winner`.

    Raises:
        BundleParseError: Со всеми проблемами разбора обоих файлов
    """
    ratings_path = Path(ratings_path)
    issues = IssueCollector(ratings_path)
    header, rows = _read_csv(ratings_path, issues, TLX_RATING_COLUMNS)

    choices: Dict[str, List[PairwiseChoice]] = {}
    pair_issues = None
    if pairs_path is not None:
        pairs_path = Path(pairs_path)
        pair_issues = IssueCollector(pairs_path)
        pair_header, pair_rows = _read_csv(pairs_path, pair_issues, TLX_PAIR_COLUMNS)
        for line, row in pair_rows:
            try:
                choice = PairwiseChoice(first=row["first"], second=row["second"], winner=row["winner"])
            except PydanticValidationError as e:
                pair_issues.add_model_errors(e, line, pair_header)
                continue
            choices.setdefault(row["participant"], []).append(choice)

    responses = []
    seen = set()
    for line, row in rows:
        participant = row["participant"]
        ratings = {}
        for category in TLX_CATEGORIES:
            value = _parse_int(
                row[category.value], issues, line, header.index(category.value) + 1, category.value
            )
            if value is not None:
                ratings[category] = value
        if len(ratings) != len(TLX_CATEGORIES):
            continue
        try:
            responses.append(TlxResponse(
                participant=participant,
                ratings=ratings,
                pairwise_choices=tuple(choices.get(participant, ())),
            ))
        except PydanticValidationError as e:
            issues.add(f"{participant}: {e.errors()[0]['msg']}", line)
        seen.add(participant)

    if pair_issues is not None:
        for participant in sorted(set(choices) - seen):
            pair_issues.add(f"Попарные сравнения для участника без оценок: {participant}")
        issues.issues.extend(pair_issues.issues)
    issues.raise_if_any()
    return responses


def read_likert(path: Union[str, Path]) -> LikertTable:
    """
    Чтение ответов Likert `participant,<вопрос>...`

    Raises:
        BundleParseError: Со всеми проблемами разбора
    """
    path = Path(path)
    issues = IssueCollector(path)
    header, rows = _read_csv(path, issues, ("participant",), open_columns=True)
    questions = [h for h in header if h != "participant"]
    if header and not questions:
        issues.add("Нет столбцов с вопросами", 1)

    participants, responses = [], []
    for line, row in rows:
        values = [
            _parse_int(row[q], issues, line, header.index(q) + 1, q) for q in questions
        ]
        if any(v is None for v in values):
            continue
        participants.append(row["participant"])
        responses.append(tuple(values))

    issues.raise_if_any()
    return LikertTable(
        questions=tuple(questions),
        participants=tuple(participants),
        responses=tuple(responses),
    )


def read_manifest(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Чтение манифеста исследования (YAML или JSON)

    Raises:
        BundleParseError: При синтаксической ошибке или неизвестных ключах
    """
    path = Path(path)
    issues = IssueCollector(path)
    text = _read_text(path, issues)
    issues.raise_if_any()
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark
        issues.add(
            f"Синтаксическая ошибка: {e.problem}",
            mark.line + 1 if mark else None,
            mark.column + 1 if mark else None,
        )
        issues.raise_if_any()

    if not isinstance(data, dict):
        issues.add("Манифест должен быть словарём")
        issues.raise_if_any()

    for key in data:
        if key not in MANIFEST_KEYS:
            issues.add(f"Неизвестный ключ манифеста '{key}'")
    surveys = data.get("surveys")
    if surveys is not None:
        if not isinstance(surveys, dict):
            issues.add("surveys: ожидается словарь")
        else:
            for key in surveys:
                if key not in SURVEY_KEYS:
                    issues.add(f"Неизвестный ключ surveys '{key}'")
    issues.raise_if_any()
    return data


@contextmanager
def _open_target(target: Target) -> Iterator[TextIO]:
    if isinstance(target, (str, Path)):
        with open(target, "w", encoding="utf-8", newline="") as f:
            yield f
    else:
        yield target


def _number(value: float) -> str:
    # repr даёт кратчайшую запись, восстанавливающую то же число
    return repr(float(value))


def write_proposals(tables: Sequence[ProposalTable], target: Target) -> None:
    with _open_target(target) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(PROPOSAL_COLUMNS)
        for table in tables:
            for entry in table.entries:
                writer.writerow([entry.participant, table.referent, entry.trial, entry.bin])


def write_speech(tables: Sequence[SpeechTable], target: Target) -> None:
    with _open_target(target) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SPEECH_COLUMNS)
        for table in tables:
            for entry in table.entries:
                writer.writerow([entry.participant, table.referent, entry.utterance])


def write_trajectory(traj: Trajectory, target: Target) -> None:
    """Запись траектории в текстовый формат read_trajectory"""
    with _open_target(target) as f:
        f.write(
            f"{TRAJECTORY_MARKER} participant={traj.participant} referent={traj.referent} "
            f"trial={traj.trial} fps={_number(traj.frame_rate)} joints={traj.joint_count}\n"
        )
        for frame in traj.frames.tolist():
            f.write(" ".join(_number(v) for joint in frame for v in joint) + "\n")


def write_tlx(
    responses: Sequence[TlxResponse], ratings_target: Target, pairs_target: Optional[Target] = None
) -> None:
    with _open_target(ratings_target) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TLX_RATING_COLUMNS)
        for resp in responses:
            writer.writerow([resp.participant] + [resp.ratings[c] for c in TLX_CATEGORIES])
    if pairs_target is None:
        return
    with _open_target(pairs_target) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TLX_PAIR_COLUMNS)
        for resp in responses:
            for choice in resp.pairwise_choices:
                writer.writerow([resp.participant, choice.first.value, choice.second.value, choice.winner.value])


def write_likert(table: LikertTable, target: Target) -> None:
    with _open_target(target) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(("participant",) + table.questions)
        for participant, row in zip(table.participants, table.responses):
            writer.writerow((participant,) + row)


def write_manifest(data: Dict[str, Any], target: Target) -> None:
    with _open_target(target) as f:
        yaml.safe_dump(data, f, sort_keys=False, allow_unicode=True)


def write_curve_csv(curves: Sequence[ConsensusCurve], target: Target) -> None:
    """Кривые консенсуса в «длинном» CSV: `referent,tau,consensus`"""
    with _open_target(target) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(("referent", "tau", "consensus"))
        for curve in curves:
            for point in curve.samples:
                writer.writerow((curve.referent, _number(point.tau), _number(point.consensus)))


def write_null_csv(dist: NullDistribution, target: Target) -> None:
    """Нулевое распределение в «длинном» CSV: `draw,agreement_rate`"""
    with _open_target(target) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(("draw", "agreement_rate"))
        for index, value in enumerate(dist.samples.tolist()):
            writer.writerow((index, _number(value)))
