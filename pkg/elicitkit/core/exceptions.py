"""
Кастомные исключения для пакета анализа согласованности Elicitkit
"""

from typing import List, NamedTuple, Optional


class ElicitkitError(Exception):
    """Базовое исключение для всех ошибок Elicitkit"""
    pass


class ConfigurationError(ElicitkitError):
    """Ошибка конфигурации или значения флага командной строки"""
    pass


class StudyValidationError(ElicitkitError):
    """Данные исследования не прошли проверку validate_study"""

    def __init__(self, report):
        self.report = report
        lines = [v.describe() for v in report.violations]
        super().__init__("Нарушения в данных исследования:\n" + "\n".join(lines))


class ParseIssue(NamedTuple):
    """Одна проблема разбора входного файла"""

    file: str
    line: Optional[int]
    column: Optional[int]
    message: str

    def describe(self) -> str:
        location = self.file
        if self.line is not None:
            location += f":{self.line}"
            if self.column is not None:
                location += f":{self.column}"
        return f"{location}: {self.message}"


class BundleParseError(ElicitkitError):
    """Ошибки разбора файлов набора данных (собираются все сразу)"""

    def __init__(self, issues: List[ParseIssue]):
        self.issues = list(issues)
        super().__init__(
            "Ошибки разбора набора данных:\n" + "\n".join(i.describe() for i in self.issues)
        )


class MetricError(ElicitkitError):
    """Нарушено предусловие метрики"""
    pass


class NoProposalsError(MetricError):
    """no proposals: таблица предложений пуста"""
    pass


class InsufficientParticipantsError(MetricError):
    """insufficient participants: для попарных метрик нужно N >= 2"""
    pass


class DegenerateDistributionError(MetricError):
    """degenerate category distribution: p_e = 1 при наблюдаемом AR < 1"""
    pass


class TrajectoryError(ElicitkitError):
    """Ошибка при обработке траектории"""
    pass


class DegenerateSkeletonError(TrajectoryError):
    """degenerate skeleton: нулевой вертикальный размах скелета"""
    pass


class JointCountMismatchError(TrajectoryError):
    """Траектории имеют разное число суставов"""
    pass


class SurveyError(ElicitkitError):
    """Ошибка в данных опросников (TLX, Likert)"""
    pass


class SimulationError(ElicitkitError):
    """Некорректная нулевая модель для симуляции"""
    pass
