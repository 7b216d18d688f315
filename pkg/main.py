#!/usr/bin/env python3
"""
Elicitkit - Анализ согласованности в исследованиях выявления
Точка входа приложения

Использование:
    python main.py report study/          # Полный отчёт
    python main.py agreement table.csv    # A(r) и AR(r)
    python main.py --help                 # Справка
"""

import sys
from pathlib import Path

# Добавляем корневую директорию в путь для импорта
ROOT_DIR = Path(__file__).parent
sys.path.insert(0, str(ROOT_DIR))


def check_python_version():
    """Проверка версии Python"""
    if sys.version_info < (3, 9):
        print("ОШИБКА: Требуется Python 3.9 или выше", file=sys.stderr)
        print(
            f"Текущая версия: Python {sys.version_info.major}.{sys.version_info.minor}.{sys.version_info.micro}",
            file=sys.stderr,
        )
        sys.exit(3)


def main():
    """Главная функция запуска приложения"""
    check_python_version()

    from elicitkit.cli.commands import main as cli_main
    return cli_main()


if __name__ == "__main__":
    sys.exit(main())
