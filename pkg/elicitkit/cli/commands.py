"""
Командная строка Elicitkit

Коды завершения: 0 - успех, 1 - нарушения в данных, 2 - ошибка разбора
входных файлов или флагов, 3 - внутренняя ошибка.
"""

import functools
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import click
from rich.console import Console
from rich.table import Table

from elicitkit import __version__
from elicitkit.core.bundle import StudyBundle, SurveyData, load_bundle
from elicitkit.core.config import AnalysisSettings, load_settings, parse_tau_grid
from elicitkit.core.exceptions import (
    BundleParseError,
    ConfigurationError,
    ElicitkitError,
    StudyValidationError,
)
from elicitkit.core.models import ProposalTable, SpeechTable, Trajectory
from elicitkit.core.report import (
    AgreementSection,
    SimulationSection,
    analyze_surveys,
    analyze_trajectories,
    report_to_json,
    run_report,
)
from elicitkit.core.validation import ValidationReport
from elicitkit.modules.agreement import extract_consensus_set, score_study
from elicitkit.modules.logger import setup_logger
from elicitkit.modules.simulation import NullModel, p_value, simulate_null
from elicitkit.modules.speech import speech_summary
from elicitkit.utils.formats import (
    read_likert,
    read_proposals,
    read_speech,
    read_tlx,
    read_trajectory,
    write_curve_csv,
    write_null_csv,
)

logger = logging.getLogger("elicitkit.cli")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PARSE = 2
EXIT_INTERNAL = 3

TABLE_SUFFIXES = (".csv",)

CONTEXT_SETTINGS = dict(help_option_names=["-h", "--help"])


def _out() -> Console:
    return Console()


def _err() -> Console:
    return Console(stderr=True)


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.3f}"


def _print_violations(report: ValidationReport) -> None:
    table = Table(title="Нарушения в данных исследования")
    table.add_column("Код", style="red")
    table.add_column("Референт")
    table.add_column("Участник")
    table.add_column("Описание")
    for v in report.violations:
        table.add_row(v.code, v.referent or "-", v.participant or "-", v.message)
    _err().print(table)


def handle_errors(func):
    """Перевод исключений в коды завершения"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return func(*args, **kwargs)
        except (click.ClickException, click.exceptions.Exit, click.exceptions.Abort):
            raise
        except StudyValidationError as e:
            _print_violations(e.report)
            ctx.exit(EXIT_VALIDATION)
        except (BundleParseError, ConfigurationError) as e:
            _err().print(f"[red]Ошибка разбора:[/red] {e}", markup=True, highlight=False)
            ctx.exit(EXIT_PARSE)
        except ElicitkitError as e:
            _err().print(f"[red]Ошибка:[/red] {e}", markup=True, highlight=False)
            ctx.exit(EXIT_INTERNAL)
        except Exception as e:
            logger.error(f"Внутренняя ошибка: {e}", exc_info=True)
            ctx.exit(EXIT_INTERNAL)

    return wrapper


def _settings(**overrides) -> AnalysisSettings:
    return load_settings().override(**overrides)


def _grid(text: Optional[str]) -> Optional[List[float]]:
    return parse_tau_grid(text) if text else None


def _is_table(path: Path) -> bool:
    return path.is_file() and path.suffix.lower() in TABLE_SUFFIXES


def _emit_json(model, out: Optional[Path], as_json: bool) -> None:
    if out is not None:
        out.write_text(report_to_json(model), encoding="utf-8")
        logger.info(f"Результат записан: {out}")
    if as_json:
        click.echo(report_to_json(model), nl=False)


def _load_proposals(path: Path) -> List[ProposalTable]:
    if _is_table(path):
        return read_proposals(path)
    return list(load_bundle(path).proposals)


def _load_speech(path: Path) -> List[SpeechTable]:
    if _is_table(path):
        return read_speech(path)
    return list(load_bundle(path).speech)


def _load_trajectories(paths: Sequence[Path]) -> Tuple[Dict[str, List[Trajectory]], bool]:
    """Траектории по референтам из набора данных или из отдельных файлов"""
    if len(paths) == 1 and (paths[0].is_dir() or paths[0].suffix.lower() in (".yaml", ".yml", ".json")):
        bundle = load_bundle(paths[0])
        return bundle.trajectories_by_referent(), bundle.study.production

    issues = []
    groups: Dict[str, List[Trajectory]] = {}
    for path in paths:
        try:
            traj = read_trajectory(path)
        except BundleParseError as e:
            issues.extend(e.issues)
            continue
        groups.setdefault(traj.referent, []).append(traj)
    if issues:
        raise BundleParseError(issues)
    production = any(len(g) != len({t.participant for t in g}) for g in groups.values())
    return dict(sorted(groups.items())), production


@click.group(context_settings=CONTEXT_SETTINGS)
@click.option("--debug", is_flag=True, help="Подробное логирование")
@click.option("--log-dir", type=click.Path(file_okay=False, path_type=Path), help="Каталог для файлов логов")
@click.option("--progress", is_flag=True, help="Индикаторы выполнения для долгих расчётов")
@click.version_option(__version__, prog_name="elicitkit")
@click.pass_context
def cli(ctx: click.Context, debug: bool, log_dir: Optional[Path], progress: bool):
    """Анализ согласованности в исследованиях выявления жестов и команд"""
    ctx.ensure_object(dict)
    ctx.obj["progress"] = progress
    root = setup_logger("elicitkit", log_dir=log_dir, level=logging.DEBUG if debug else logging.INFO)
    ctx.call_on_close(functools.partial(_release_handlers, root))


def _release_handlers(log: logging.Logger) -> None:
    for handler in list(log.handlers):
        handler.close()
        log.removeHandler(handler)


@cli.command()
@click.argument("path", type=click.Path(exists=True, path_type=Path))
@handle_errors
def validate(path: Path):
    """Проверка набора данных исследования"""
    bundle = load_bundle(path, validate=False)
    report = bundle.validate_study()
    if not report.ok:
        _print_violations(report)
        click.get_current_context().exit(EXIT_VALIDATION)
    _out().print(f"[green]Нарушений нет:[/green] {bundle.study.id}, вход {bundle.input_hash[:12]}")


@cli.command()
@click.argument("path", type=click.Path(exists=True, path_type=Path))
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), help="Записать JSON в файл")
@click.option("--json", "as_json", is_flag=True, help="Вывести JSON в stdout")
@handle_errors
def agreement(path: Path, out: Optional[Path], as_json: bool):
    """A(r) и AR(r) по таблице предложений или набору данных"""
    scores = score_study(_load_proposals(path))
    section = AgreementSection(
        scores=tuple(scores),
        mean_agreement_rate=sum(s.agreement_rate for s in scores) / len(scores) if scores else None,
    )
    _emit_json(section, out, as_json)
    if as_json:
        return

    table = Table(title="Согласованность по референтам")
    for name in ("Референт", "N", "A(r)", "AR(r)", "Классы"):
        table.add_column(name, justify="left" if name in ("Референт", "Классы") else "right")
    for s in scores:
        table.add_row(
            s.referent,
            str(s.participant_count),
            _fmt(s.agreement_index),
            _fmt(s.agreement_rate),
            " ".join(str(c) for c in s.class_sizes),
        )
    _out().print(table)


@cli.command()
@click.argument("path", type=click.Path(exists=True, path_type=Path))
@click.option("--baseline", type=int, help="Порог числа участников для CDR")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--json", "as_json", is_flag=True)
@handle_errors
def speech(path: Path, baseline: Optional[int], out: Optional[Path], as_json: bool):
    """Речевые метрики MC и CDR"""
    settings = _settings(baseline=baseline)
    summary = speech_summary(_load_speech(path), baseline=settings.baseline)
    _emit_json(summary, out, as_json)
    if as_json:
        return

    table = Table(title=f"Речевые метрики (baseline = {summary.baseline})")
    for name in ("Референт", "N", "MC, %", "CDR, %", "Модальные"):
        table.add_column(name)
    for s in summary.referents:
        table.add_row(
            s.referent, str(s.participant_count), _fmt(s.max_consensus),
            _fmt(s.consensus_distinct_ratio), ", ".join(s.modal_utterances),
        )
    _out().print(table)
    _out().print(
        f"Среднее MC: {_fmt(summary.mean_max_consensus)}%, "
        f"среднее CDR: {_fmt(summary.mean_consensus_distinct_ratio)}%"
    )


@cli.command()
@click.argument("path", type=click.Path(exists=True, path_type=Path))
@click.option("--threshold", type=float, help="Порог AR(r) для набора консенсуса")
@click.option("--alias-baseline", type=int, help="Минимальная поддержка альтернатив")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--json", "as_json", is_flag=True)
@handle_errors
def consensus(path: Path, threshold: Optional[float], alias_baseline: Optional[int],
              out: Optional[Path], as_json: bool):
    """Набор консенсуса: лучшее предложение для каждого референта"""
    settings = _settings(threshold=threshold, alias_baseline=alias_baseline)
    result = extract_consensus_set(
        _load_proposals(path),
        threshold=settings.threshold,
        low_agreement=settings.low_agreement,
        alias_baseline=settings.alias_baseline,
    )
    _emit_json(result, out, as_json)
    if as_json:
        return

    table = Table(title=f"Набор консенсуса (порог AR = {_fmt(result.threshold)})")
    for name in ("Референт", "Предложение", "Поддержка", "AR(r)", "Принято", "Ничья", "Альтернативы"):
        table.add_column(name)
    for e in result.entries:
        table.add_row(
            e.referent, e.top_bin, str(e.support_count), _fmt(e.agreement_rate),
            "да" if e.accepted else "нет", ", ".join(e.tied_bins) or "-", ", ".join(e.aliases) or "-",
        )
    _out().print(table)


@cli.command()
@click.argument("paths", nargs=-1, required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--zeta", type=click.Choice(["min", "max", "avg"]), help="Агрегатор попыток")
@click.option("--tau-grid", help="Сетка tau: start:stop:count или список через запятую")
@click.option("--normalize", is_flag=True, default=None, help="Нормализовать DTW по длине пути")
@click.option("--acceptance", type=float, help="Доля похожих пар внутри кластера")
@click.option("--csv", "csv_out", type=click.Path(dir_okay=False, path_type=Path), help="Кривые в CSV")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
@handle_errors
def dissimilarity(ctx: click.Context, paths: Tuple[Path, ...], zeta: Optional[str], tau_grid: Optional[str],
                  normalize: Optional[bool], acceptance: Optional[float], csv_out: Optional[Path],
                  out: Optional[Path], as_json: bool):
    """Консенсус по несходству траекторий: кривые C_R(tau) и кластеры"""
    settings = _settings(
        zeta=zeta, tau_grid=_grid(tau_grid), normalize_dtw=normalize, acceptance_ratio=acceptance
    )
    groups, production = _load_trajectories(paths)
    section = analyze_trajectories(groups, settings, production, progress=ctx.obj["progress"])
    if section.status == "error":
        raise ElicitkitError(f"{section.error}: {section.failures}")
    if csv_out is not None:
        write_curve_csv(section.curves, csv_out)
    _emit_json(section, out, as_json)
    if as_json:
        return

    table = Table(title="Консенсус по несходству")
    for name in ("Референт", "N", "L0", "L1", "tau0", "k", "Сходимость", "p (F)", "Кластер", "Покрытие, %"):
        table.add_column(name)
    for curve, cluster in zip(section.curves, section.clusters):
        fit = curve.fit
        table.add_row(
            curve.referent,
            str(curve.participant_count),
            _fmt(fit.lower if fit else None),
            _fmt(fit.upper if fit else None),
            _fmt(fit.midpoint if fit else None),
            _fmt(fit.steepness if fit else None),
            "да" if fit and fit.converged else "нет",
            _fmt(fit.p_value if fit else None),
            str(cluster.size),
            _fmt(cluster.coverage),
        )
    _out().print(table)
    for referent, message in section.failures.items():
        _err().print(f"[yellow]{referent}:[/yellow] {message}", highlight=False)


@cli.command()
@click.option("--participants", "-n", type=int, required=True, help="Число участников N")
@click.option("--categories", "-q", type=int, required=True, help="Число категорий q")
@click.option("--draws", type=int, help="Число розыгрышей")
@click.option("--distribution", type=click.Choice(["uniform", "zipf", "empirical"]))
@click.option("--zipf-s", type=float)
@click.option("--weights", help="Веса категорий через запятую (для empirical)")
@click.option("--seed", type=int)
@click.option("--observed", type=float, multiple=True, help="Наблюдаемое AR(r) для p-значения")
@click.option("--csv", "csv_out", type=click.Path(dir_okay=False, path_type=Path), help="Выборка в CSV")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
@handle_errors
def simulate(ctx: click.Context, participants: int, categories: int, draws: Optional[int],
             distribution: Optional[str], zipf_s: Optional[float], weights: Optional[str],
             seed: Optional[int], observed: Tuple[float, ...], csv_out: Optional[Path],
             out: Optional[Path], as_json: bool):
    """Нулевое распределение AR(r) методом Монте-Карло"""
    try:
        parsed_weights = [float(w) for w in weights.split(",")] if weights else None
    except ValueError as e:
        raise ConfigurationError(f"Некорректные веса '{weights}': {e}") from e
    settings = _settings(
        draws=draws, distribution=distribution, zipf_s=zipf_s, weights=parsed_weights,
        seed=seed, categories=categories,
    )
    try:
        model = NullModel(
            participant_count=participants,
            category_count=settings.categories,
            distribution=settings.distribution,
            zipf_s=settings.zipf_s,
            weights=tuple(settings.weights) if settings.weights else None,
            seed=settings.seed,
        )
    except ValueError as e:
        raise ConfigurationError(f"Некорректная нулевая модель: {e}") from e

    dist = simulate_null(model, settings.draws, progress=ctx.obj["progress"])
    if csv_out is not None:
        write_null_csv(dist, csv_out)
    summary = SimulationSection(
        null_model=model, draws=dist.draws, mean=dist.mean, variance=dist.variance,
        quantiles=dist.quantiles, p_values={f"{o!r}": p_value(o, dist) for o in observed},
    )
    _emit_json(summary, out, as_json)
    if as_json:
        return

    table = Table(title=f"Нулевая модель: N={participants}, q={categories}, {model.distribution}")
    table.add_column("Показатель")
    table.add_column("Значение", justify="right")
    table.add_row("Среднее AR", _fmt(dist.mean))
    table.add_row("Дисперсия AR", f"{dist.variance:.3e}")
    for level, value in dist.quantiles.items():
        table.add_row(f"Квантиль {level}", _fmt(value))
    for o in observed:
        table.add_row(f"p(AR >= {_fmt(o)})", _fmt(summary.p_values[f"{o!r}"]))
    _out().print(table)


@cli.command()
@click.argument("path", required=False, type=click.Path(exists=True, path_type=Path))
@click.option("--tlx-ratings", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--tlx-pairs", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--likert", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--raw", is_flag=True, help="«Сырой» TLX без весов")
@click.option("--compare", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Оценки TLX второго условия для t-критерия Уэлча")
@click.option("--compare-pairs", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--json", "as_json", is_flag=True)
@handle_errors
def survey(path: Optional[Path], tlx_ratings: Optional[Path], tlx_pairs: Optional[Path],
           likert: Optional[Path], raw: bool, compare: Optional[Path], compare_pairs: Optional[Path],
           out: Optional[Path], as_json: bool):
    """Баллы NASA TLX, сводка Likert и сравнение двух условий"""
    settings = _settings(tlx_weighted=False if raw else None)
    if path is not None:
        data = load_bundle(path).surveys
    else:
        data = SurveyData(
            tlx=tuple(read_tlx(tlx_ratings, tlx_pairs)) if tlx_ratings else (),
            likert=read_likert(likert) if likert else None,
        )
    if data.empty:
        raise ConfigurationError("Нет ответов: укажите набор данных или файлы опросников")
    if compare_pairs is not None and compare is None:
        raise ConfigurationError("--compare-pairs задан без --compare")
    if compare is not None and settings.tlx_weighted and compare_pairs is None:
        raise ConfigurationError("Для взвешенного TLX укажите --compare-pairs или --raw")
    other = read_tlx(compare, compare_pairs) if compare is not None else ()
    section = analyze_surveys(data, settings, other_tlx=other)
    _emit_json(section, out, as_json)
    if as_json:
        return

    if section.tlx_scores:
        table = Table(title="NASA TLX")
        table.add_column("Участник")
        table.add_column("Общий балл", justify="right")
        for s in section.tlx_scores:
            table.add_row(s.participant or "-", _fmt(s.overall))
        _out().print(table)
    if section.likert is not None:
        table = Table(title="Likert")
        for name in ("Вопрос", "Среднее", "Медиана", "Мода", "SD"):
            table.add_column(name)
        for q in section.likert.questions:
            table.add_row(q.question, _fmt(q.mean), _fmt(q.median),
                          ", ".join(str(m) for m in q.modes), _fmt(q.sd))
        _out().print(table)
    if section.comparison is not None:
        table = Table(title="t-критерий Уэлча: общий балл TLX")
        for name in ("t", "df", "p"):
            table.add_column(name, justify="right")
        c = section.comparison
        table.add_row(_fmt(c.t), _fmt(c.df), _fmt(c.p_value))
        _out().print(table)


@cli.command()
@click.argument("path", type=click.Path(exists=True, path_type=Path))
@click.option("--seed", type=int)
@click.option("--threshold", type=float)
@click.option("--tau-grid")
@click.option("--zeta", type=click.Choice(["min", "max", "avg"]))
@click.option("--baseline", type=int)
@click.option("--categories", "-q", type=int, help="Число категорий q для нулевой модели")
@click.option("--draws", type=int)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), help="Записать отчёт в файл")
@click.pass_context
@handle_errors
def report(ctx: click.Context, path: Path, seed: Optional[int], threshold: Optional[float],
           tau_grid: Optional[str], zeta: Optional[str], baseline: Optional[int],
           categories: Optional[int], draws: Optional[int], out: Optional[Path]):
    """Полный отчёт по набору данных в JSON"""
    settings = _settings(
        seed=seed, threshold=threshold, tau_grid=_grid(tau_grid), zeta=zeta,
        baseline=baseline, categories=categories, draws=draws,
    )
    bundle: StudyBundle = load_bundle(path)
    result = run_report(bundle, settings, progress=ctx.obj["progress"])
    if out is None:
        click.echo(report_to_json(result), nl=False)
        return

    out.write_text(report_to_json(result), encoding="utf-8")
    table = Table(title=f"Отчёт {result.study_id}")
    table.add_column("Раздел")
    table.add_column("Статус")
    table.add_column("Примечание")
    for name in ("agreement", "consensus", "chance", "speech", "dissimilarity", "simulation", "surveys"):
        section = getattr(result, name)
        table.add_row(name, section.status, section.notice or section.error or "")
    _out().print(table)


def main():
    """Точка входа консольного скрипта"""
    return cli(prog_name="elicitkit", obj={})


if __name__ == "__main__":
    main()
