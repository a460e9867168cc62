"""Иерархия ошибок пакета.

Все ошибки наследуются от InterpretableTestError; ошибки некорректных
входных значений дополнительно наследуются от ValueError.
"""


class InterpretableTestError(Exception):
    """Базовая ошибка пакета."""


class NotPositiveDefinite(InterpretableTestError):
    """Матрица не является положительно определенной (γ слишком мал)."""


class InvalidProbability(InterpretableTestError, ValueError):
    """Вероятность вне допустимого диапазона."""


class DimensionMismatch(InterpretableTestError, ValueError):
    """Размерности векторов или матриц не совпадают."""


class SizeMismatch(InterpretableTestError, ValueError):
    """Размеры выборок X и Y различаются."""


class TooFewSamples(InterpretableTestError, ValueError):
    """Недостаточно наблюдений для вычисления."""


class NonFiniteGradient(InterpretableTestError):
    """Градиент целевой функции содержит NaN или бесконечность."""


class SeparationFailure(InterpretableTestError):
    """Не удалось получить тестовые точки с минимальным расстоянием ε."""


class SingularCovariance(InterpretableTestError):
    """Объединенная ковариация вырождена (n ≤ d)."""


class WrongKind(InterpretableTestError, ValueError):
    """Операция не применима к данному виду задачи."""


class InvalidVC(InterpretableTestError, ValueError):
    """VC-индекс меньше 2."""


class MissingTheta(InterpretableTestError):
    """В отчете испытания нет тестовых точек."""


class ConfigError(InterpretableTestError, ValueError):
    """Некорректная конфигурация эксперимента."""


class ResultsIoError(InterpretableTestError):
    """Ошибка чтения или записи файлов результатов."""


class ParseError(InterpretableTestError, ValueError):
    """Нечисловое значение в CSV.

    Attributes:
        row (int): Номер строки файла (с 1).
        column (int): Номер столбца (с 1).
    """

    def __init__(self, message, row, column):
        super().__init__(message)
        self.row = row
        self.column = column


class RaggedRows(InterpretableTestError, ValueError):
    """Строки CSV разной длины.

    Attributes:
        row (int): Номер первой строки файла (с 1) с неверным числом полей.
    """

    def __init__(self, message, row):
        super().__init__(message)
        self.row = row


class ExperimentFailure(InterpretableTestError):
    """Доля неудачных испытаний превысила допустимый предел.

    Attributes:
        reports (list): Отчеты всех испытаний.
        summary (dict): Итоговая сводка эксперимента.
    """

    def __init__(self, message, reports, summary):
        super().__init__(message)
        self.reports = reports
        self.summary = summary
