import logging

import pytest

from elicitkit.core.config import load_settings, parse_tau_grid
from elicitkit.core.exceptions import ConfigurationError
from elicitkit.modules.logger import SectionLogger, setup_logger


def test_defaults(monkeypatch):
    monkeypatch.delenv("ELICITKIT_SEED", raising=False)
    settings = load_settings()
    assert settings.seed == 0
    assert settings.threshold == 0.30
    assert settings.tau_grid is None
    assert settings.worker_count() >= 1


def test_environment_override(monkeypatch):
    monkeypatch.setenv("ELICITKIT_SEED", "42")
    monkeypatch.setenv("ELICITKIT_ZETA", "max")
    settings = load_settings()
    assert settings.seed == 42
    assert settings.zeta == "max"
    assert load_settings(seed=7).seed == 7


def test_override_skips_none():
    settings = load_settings(threshold=0.4)
    changed = settings.override(threshold=None, baseline=3)
    assert changed.threshold == 0.4
    assert changed.baseline == 3
    assert settings.baseline == 1


@pytest.mark.parametrize("values", [
    {"threshold": 1.5},
    {"acceptance_ratio": 0.2},
    {"tau_grid": [0.0, 2.0, 1.0]},
    {"likert_scale": (5, 1)},
])
def test_invalid_settings(values):
    with pytest.raises(ConfigurationError):
        load_settings(**values)


def test_parse_tau_grid():
    assert parse_tau_grid("0:2:5") == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert parse_tau_grid("0, 0.5,1") == [0.0, 0.5, 1.0]
    for text in ("0:1", "a,b", "0:1:1"):
        with pytest.raises(ConfigurationError):
            parse_tau_grid(text)


def test_setup_logger_writes_file(tmp_path):
    log = setup_logger("elicitkit.test", log_dir=tmp_path, console=False)
    log.info("проверка записи")
    for handler in log.handlers:
        handler.flush()
    assert "проверка записи" in (tmp_path / "elicitkit_test.log").read_text(encoding="utf-8")

    setup_logger("elicitkit.test", console=False)
    assert log.handlers == []


def test_section_logger_prefix(caplog):
    with caplog.at_level(logging.INFO, logger="elicitkit.report.speech"):
        SectionLogger("study-1", "speech").info("готово")
    assert "[study-1:speech] готово" in caplog.messages
