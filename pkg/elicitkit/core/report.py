"""
Сборка итогового отчёта по исследованию: все применимые разделы анализа
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, Literal, Mapping, Optional, Sequence, Tuple, Type, Union

import numpy as np
from pydantic import BaseModel, ConfigDict
from pydantic import ValidationError as PydanticValidationError

from elicitkit import __version__
from elicitkit.core.bundle import StudyBundle, SurveyData
from elicitkit.core.config import AnalysisSettings, load_settings
from elicitkit.core.exceptions import ElicitkitError, SimulationError, SurveyError
from elicitkit.core.models import Trajectory
from elicitkit.core.validation import ValidationReport
from elicitkit.modules.agreement import (
    AgreementScore,
    ChanceAgreement,
    ConsensusSet,
    agreement_rate,
    bonferroni,
    chance_agreement,
    extract_consensus_set,
    score_study,
)
from elicitkit.modules.clustering import ConsensusCluster, extract_cluster, extract_cluster_combined
from elicitkit.modules.dissimilarity import ConsensusCurve, sweep_tau
from elicitkit.modules.logger import SectionLogger
from elicitkit.modules.simulation import NullModel, p_value, simulate_null
from elicitkit.modules.speech import SpeechSummary, speech_summary
from elicitkit.modules.survey import (
    LikertSummary,
    TlxResponse,
    TlxScore,
    TlxSummary,
    WelchResult,
    compare_tlx,
    score_tlx,
    summarize_likert,
    summarize_tlx,
)
from elicitkit.modules.trajectory import PreprocessConfig, build_dissimilarity_matrix, preprocess

logger = logging.getLogger(__name__)

SIGNIFICANCE = 0.05

SectionStatus = Literal["ok", "skipped", "error"]


class ReportSection(BaseModel):
    """Общие поля раздела: статус, уведомление о пропуске, текст ошибки"""

    model_config = ConfigDict(frozen=True)

    status: SectionStatus = "ok"
    notice: Optional[str] = None
    error: Optional[str] = None


class AgreementSection(ReportSection):
    scores: Tuple[AgreementScore, ...] = ()
    mean_agreement_rate: Optional[float] = None


class ConsensusSection(ReportSection):
    consensus_set: Optional[ConsensusSet] = None


class ChanceSection(ReportSection):
    chance: Optional[ChanceAgreement] = None


class SpeechSection(ReportSection):
    summary: Optional[SpeechSummary] = None


class DissimilaritySection(ReportSection):
    curves: Tuple[ConsensusCurve, ...] = ()
    clusters: Tuple[ConsensusCluster, ...] = ()
    failures: Dict[str, str] = {}


class SimulationSection(ReportSection):
    null_model: Optional[NullModel] = None
    draws: Optional[int] = None
    mean: Optional[float] = None
    variance: Optional[float] = None
    quantiles: Dict[str, float] = {}
    p_values: Dict[str, float] = {}
    corrected_alpha: Optional[float] = None


class SurveySection(ReportSection):
    tlx_scores: Tuple[TlxScore, ...] = ()
    tlx_summary: Optional[TlxSummary] = None
    likert: Optional[LikertSummary] = None
    comparison: Optional[WelchResult] = None


class StudyReport(BaseModel):
    """Отчёт по исследованию; порядок разделов фиксирован"""

    model_config = ConfigDict(frozen=True)

    version: str
    study_id: str
    input_hash: str
    seed: int
    validation: ValidationReport
    agreement: AgreementSection
    consensus: ConsensusSection
    chance: ChanceSection
    speech: SpeechSection
    dissimilarity: DissimilaritySection
    simulation: SimulationSection
    surveys: SurveySection


SectionRunner = Callable[[StudyBundle, AnalysisSettings, SectionLogger, bool], ReportSection]


def _skip(cls: Type[ReportSection], log: SectionLogger, notice: str) -> ReportSection:
    log.warning(f"Раздел пропущен: {notice}")
    return cls(status="skipped", notice=notice)


def _classic_tables(bundle: StudyBundle):
    return [t for t in bundle.proposals if t.entries and t.is_classic]


def _agreement(bundle, settings, log, progress) -> AgreementSection:
    if not bundle.proposals:
        return _skip(AgreementSection, log, "нет таблиц предложений")
    if bundle.study.production:
        return _skip(AgreementSection, log, "производственное исследование: AR(r) определён для одной попытки")
    scores = score_study(bundle.proposals)
    mean = float(np.mean([s.agreement_rate for s in scores]))
    log.info(f"Референтов: {len(scores)}, среднее AR {mean:.3f}")
    return AgreementSection(scores=tuple(scores), mean_agreement_rate=mean)


def _consensus(bundle, settings, log, progress) -> ConsensusSection:
    if not bundle.proposals:
        return _skip(ConsensusSection, log, "нет таблиц предложений")
    if bundle.study.production:
        return _skip(ConsensusSection, log, "производственное исследование: AR(r) определён для одной попытки")
    consensus = extract_consensus_set(
        bundle.proposals,
        threshold=settings.threshold,
        low_agreement=settings.low_agreement,
        alias_baseline=settings.alias_baseline,
    )
    log.info(f"Принято предложений: {len(consensus.accepted())} из {len(consensus.entries)}")
    return ConsensusSection(consensus_set=consensus)


def _chance(bundle, settings, log, progress) -> ChanceSection:
    if not bundle.proposals:
        return _skip(ChanceSection, log, "нет таблиц предложений")
    if bundle.study.production:
        return _skip(ChanceSection, log, "производственное исследование: P_e определено для одной попытки")
    return ChanceSection(chance=chance_agreement(bundle.proposals))


def _speech(bundle, settings, log, progress) -> SpeechSection:
    if not bundle.speech:
        return _skip(SpeechSection, log, "нет речевых предложений")
    return SpeechSection(summary=speech_summary(bundle.speech, baseline=settings.baseline))


def _cluster_tau(curve: ConsensusCurve, settings: AnalysisSettings) -> float:
    if settings.cluster_tau is not None:
        return settings.cluster_tau
    taus = curve.taus
    fit = curve.fit
    if fit is not None and fit.converged and not fit.degenerate:
        return float(np.clip(fit.midpoint, taus[0], taus[-1]))
    return float(np.median(taus))


def analyze_trajectories(
    groups: Mapping[str, Sequence[Trajectory]],
    settings: AnalysisSettings,
    production: bool = False,
    progress: bool = False,
) -> DissimilaritySection:
    """
    Предобработка, матрица DTW, кривая консенсуса и кластер для каждого референта

    Ошибка одного референта записывается в failures, остальные обрабатываются.
    """
    cfg = PreprocessConfig(
        target_fps=settings.target_fps,
        normalize_height=settings.normalize_height,
        translate_to_origin=settings.translate_to_origin,
        reference_joint=settings.reference_joint,
        vertical_axis=settings.vertical_axis,
    )
    zeta = settings.zeta or ("avg" if production else None)

    curves, clusters, failures = [], [], {}
    for referent, group in groups.items():
        try:
            prepared = [preprocess(t, cfg) for t in group]
            matrix = build_dissimilarity_matrix(
                prepared, referent, normalize=settings.normalize_dtw, progress=progress
            )
            curve = sweep_tau(
                matrix, settings.tau_grid, zeta, points=settings.tau_points, alpha=settings.fit_alpha
            )
            if settings.combine_taus:
                cluster = extract_cluster_combined(matrix, curve.taus, settings.acceptance_ratio, zeta)
            else:
                cluster = extract_cluster(matrix, _cluster_tau(curve, settings), settings.acceptance_ratio, zeta)
        except ElicitkitError as e:
            logger.error(f"Референт {referent}: {e}")
            failures[referent] = str(e)
            continue
        curves.append(curve)
        clusters.append(cluster)

    if not curves:
        return DissimilaritySection(status="error", error="Ни один референт не обработан", failures=failures)
    return DissimilaritySection(curves=tuple(curves), clusters=tuple(clusters), failures=failures)


def _dissimilarity(bundle, settings, log, progress) -> DissimilaritySection:
    groups = bundle.trajectories_by_referent()
    if not groups:
        return _skip(DissimilaritySection, log, "нет траекторий")
    return analyze_trajectories(groups, settings, bundle.study.production, progress)


def _simulation(bundle, settings, log, progress) -> SimulationSection:
    if settings.categories is None:
        return _skip(SimulationSection, log, "не задано число категорий q нулевой модели")
    try:
        model = NullModel(
            participant_count=bundle.study.participant_count,
            category_count=settings.categories,
            distribution=settings.distribution,
            zipf_s=settings.zipf_s,
            weights=tuple(settings.weights) if settings.weights else None,
            seed=settings.seed,
        )
    except PydanticValidationError as e:
        raise SimulationError(f"Некорректная нулевая модель: {e}") from e

    dist = simulate_null(model, settings.draws, progress=progress)
    p_values = {}
    if not bundle.study.production:
        for table in _classic_tables(bundle):
            p_values[table.referent] = p_value(agreement_rate(table), dist)
    return SimulationSection(
        null_model=model,
        draws=dist.draws,
        mean=dist.mean,
        variance=dist.variance,
        quantiles=dist.quantiles,
        p_values=p_values,
        corrected_alpha=bonferroni(SIGNIFICANCE, len(p_values)) if p_values else None,
    )


def analyze_surveys(
    data: SurveyData,
    settings: AnalysisSettings,
    other_tlx: Sequence[TlxResponse] = (),
) -> SurveySection:
    """
    Баллы TLX и сводка Likert по ответам на опросники

    Args:
        data: Ответы на опросники
        settings: Параметры анализа
        other_tlx: Ответы TLX второго условия; если заданы, общие баллы
            сравниваются t-критерием Уэлча
    """
    scores, summary, likert, comparison = (), None, None, None
    if data.tlx:
        scores = tuple(score_tlx(r, weighted=settings.tlx_weighted) for r in data.tlx)
        summary = summarize_tlx(scores)
    if data.likert is not None:
        likert = summarize_likert(
            data.likert.responses,
            scale=data.likert_scale or settings.likert_scale,
            questions=data.likert.questions,
        )
    if other_tlx:
        if not scores:
            raise SurveyError("Для сравнения условий нужны ответы TLX в обоих наборах")
        others = [score_tlx(r, weighted=settings.tlx_weighted) for r in other_tlx]
        comparison = compare_tlx(scores, others)
    return SurveySection(tlx_scores=scores, tlx_summary=summary, likert=likert, comparison=comparison)


def _surveys(bundle, settings, log, progress) -> SurveySection:
    if bundle.surveys.empty:
        return _skip(SurveySection, log, "нет ответов на опросники")
    return analyze_surveys(bundle.surveys, settings)


SECTIONS: Dict[str, Tuple[Type[ReportSection], SectionRunner]] = {
    "agreement": (AgreementSection, _agreement),
    "consensus": (ConsensusSection, _consensus),
    "chance": (ChanceSection, _chance),
    "speech": (SpeechSection, _speech),
    "dissimilarity": (DissimilaritySection, _dissimilarity),
    "simulation": (SimulationSection, _simulation),
    "surveys": (SurveySection, _surveys),
}


def _run_section(
    name: str,
    bundle: StudyBundle,
    settings: AnalysisSettings,
    progress: bool,
) -> ReportSection:
    cls, runner = SECTIONS[name]
    log = SectionLogger(bundle.study.id, name)
    log.debug("Старт раздела")
    try:
        return runner(bundle, settings, log, progress)
    except ElicitkitError as e:
        log.error(str(e))
        return cls(status="error", error=str(e))
    except Exception as e:
        log.error(f"Внутренняя ошибка: {e}", exc_info=True)
        return cls(status="error", error=f"{type(e).__name__}: {e}")


def run_report(
    bundle: StudyBundle,
    settings: Optional[AnalysisSettings] = None,
    progress: bool = False,
) -> StudyReport:
    """
    Все применимые разделы анализа по набору данных

    Разделы считаются параллельно; ошибка раздела записывается в его поле
    error и не прерывает отчёт. Порядок разделов в отчёте фиксирован.

    Args:
        bundle: Загруженный набор данных
        settings: Параметры анализа (по умолчанию из окружения)
        progress: Показывать индикаторы выполнения

    Returns:
        Отчёт по исследованию
    """
    settings = settings or load_settings()
    validation = bundle.validate_study()
    if not validation.ok:
        logger.warning(f"Исследование {bundle.study.id}: нарушений в данных {len(validation.violations)}")

    workers = min(settings.worker_count(), len(SECTIONS))
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="report") as pool:
        futures = {
            name: pool.submit(_run_section, name, bundle, settings, progress) for name in SECTIONS
        }
        sections = {name: future.result() for name, future in futures.items()}

    return StudyReport(
        version=__version__,
        study_id=bundle.study.id,
        input_hash=bundle.input_hash,
        seed=settings.seed,
        validation=validation,
        **sections,
    )


def report_to_json(report: BaseModel) -> str:
    """Детерминированная сериализация: UTF-8, отступ 2, полная точность чисел"""
    return json.dumps(report.model_dump(mode="json"), indent=2, ensure_ascii=False) + "\n"


def write_report(report: StudyReport, path: Union[str, Path]) -> None:
    Path(path).write_text(report_to_json(report), encoding="utf-8")
    logger.info(f"Отчёт записан: {path}")
