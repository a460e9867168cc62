"""Чтение числовых CSV-файлов (строки - наблюдения, столбцы - координаты)."""

import csv
from dataclasses import dataclass, field
from typing import List

import numpy as np

from core.exceptions import ParseError, RaggedRows, ResultsIoError
from utils.logger import setup_logging

logger = setup_logging()


@dataclass
class LoadedMatrix:
    """Матрица наблюдений n×d и имена столбцов (если был заголовок)."""

    values: np.ndarray
    column_names: List[str] = field(default_factory=list)


def load_csv(path, has_header=False):
    """Загружает прямоугольный числовой CSV.

    Args:
        path (str): Путь к файлу (UTF-8, десятичная точка).
        has_header (bool): Первая строка содержит имена столбцов.

    Returns:
        LoadedMatrix: Значения и имена столбцов.

    Raises:
        ParseError: Нечисловое значение; содержит строку и столбец (с 1).
        RaggedRows: Строка с иным числом полей; содержит номер строки (с 1).
        ResultsIoError: Файл не удалось прочитать или декодировать как UTF-8.
    """
    try:
        with open(path, 'r', newline='', encoding='utf-8') as f:
            rows = list(csv.reader(f))
    except (OSError, UnicodeDecodeError) as e:
        logger.error(f"Не удалось прочитать CSV {path}: {e}")
        raise ResultsIoError(f"Не удалось прочитать CSV {path}: {e}") from e

    column_names = []
    first_data_row = 1
    if has_header and rows:
        column_names = [name.strip() for name in rows[0]]
        rows = rows[1:]
        first_data_row = 2

    values = []
    width = len(column_names) if column_names else None
    for offset, row in enumerate(rows):
        line_no = first_data_row + offset
        if not row:
            continue
        if width is None:
            width = len(row)
        if len(row) != width:
            raise RaggedRows(
                f"Строка {line_no} файла {path} содержит {len(row)} полей вместо {width}", row=line_no
            )
        parsed = []
        for col_no, cell in enumerate(row, start=1):
            try:
                parsed.append(float(cell.strip()))
            except ValueError as e:
                raise ParseError(
                    f"Нечисловое значение {cell!r} в строке {line_no}, столбце {col_no} файла {path}",
                    row=line_no,
                    column=col_no,
                ) from e
        values.append(parsed)

    matrix = np.array(values, dtype=float).reshape(len(values), width or 0)
    logger.info(f"Загружен {path}: {matrix.shape[0]} наблюдений, {matrix.shape[1]} признаков.")
    return LoadedMatrix(matrix, column_names)
