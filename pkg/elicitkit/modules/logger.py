"""
Модуль настройки логирования с цветным выводом и ротацией файлов
"""

import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional

import colorlog

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def setup_logger(
    name: str,
    log_dir: Optional[Path] = None,
    level: int = logging.INFO,
    console: bool = True,
    max_bytes: int = 10 * 1024 * 1024,  # 10 MB
    backup_count: int = 5
) -> logging.Logger:
    """
    Настройка логгера с цветным выводом в консоль и ротацией файлов

    Консольный вывод идёт в stderr: stdout занят машиночитаемыми отчётами.

    Args:
        name: Имя логгера
        log_dir: Директория для файлов логов (None - без файла)
        level: Уровень логирования
        console: Выводить ли в консоль
        max_bytes: Максимальный размер файла лога
        backup_count: Количество резервных копий логов

    Returns:
        Настроенный логгер
    """
    logger = logging.getLogger(name)
    logger.setLevel(level)

    # Очищаем существующие обработчики
    for handler in list(logger.handlers):
        handler.close()
        logger.removeHandler(handler)

    if log_dir is not None:
        log_dir = Path(log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)

        log_file = log_dir / f"{name.replace('.', '_')}.log"
        file_handler = RotatingFileHandler(
            log_file,
            maxBytes=max_bytes,
            backupCount=backup_count,
            encoding='utf-8'
        )
        file_handler.setLevel(level)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
        logger.addHandler(file_handler)

    if console:
        console_handler = colorlog.StreamHandler(sys.stderr)
        console_handler.setLevel(level)
        console_formatter = colorlog.ColoredFormatter(
            '%(log_color)s' + LOG_FORMAT + '%(reset)s',
            datefmt=DATE_FORMAT,
            log_colors={
                'DEBUG': 'cyan',
                'INFO': 'green',
                'WARNING': 'yellow',
                'ERROR': 'red',
                'CRITICAL': 'red,bg_white',
            }
        )
        console_handler.setFormatter(console_formatter)
        logger.addHandler(console_handler)

    return logger


class SectionLogger:
    """Логгер раздела отчёта: все сообщения помечаются исследованием и разделом"""

    def __init__(self, study_id: str, section: str):
        """
        Args:
            study_id: Идентификатор исследования
            section: Имя раздела отчёта
        """
        self.study_id = study_id
        self.section = section
        self.logger = logging.getLogger(f"elicitkit.report.{section}")

    def _tag(self, message: str) -> str:
        return f"[{self.study_id}:{self.section}] {message}"

    def info(self, message: str) -> None:
        self.logger.info(self._tag(message))

    def warning(self, message: str) -> None:
        self.logger.warning(self._tag(message))

    def error(self, message: str, exc_info: bool = False) -> None:
        self.logger.error(self._tag(message), exc_info=exc_info)

    def debug(self, message: str) -> None:
        self.logger.debug(self._tag(message))
