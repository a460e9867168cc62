import csv
import json
import os

from core.exceptions import ResultsIoError
from utils.logger import setup_logging

logger = setup_logging()

TRIALS_FILE = 'trials.jsonl'
TIMINGS_FILE = 'timings.jsonl'
SUMMARY_FILE = 'summary.json'
POWER_FILE = 'power.csv'
POWER_FIELDS = ['x', 'method', 'problem', 'n', 'd', 'J', 'alpha', 'trials', 'proportion', 'stderr']


class ResultsStore:
    """Хранилище результатов эксперимента в каталоге на диске.

    Отчеты испытаний записываются в JSON-lines (по одному объекту на испытание,
    ключи отсортированы), время выполнения - в отдельный файл, итог - в JSON,
    данные для графиков - в CSV.
    """

    def __init__(self, out_dir):
        """Инициализирует хранилище.

        Args:
            out_dir (str): Каталог результатов; создается при первой записи.
        """
        self.out_dir = out_dir
        logger.debug(f"ResultsStore инициализирован для каталога {out_dir}.")

    def _path(self, name):
        return os.path.join(self.out_dir, name)

    def _ensure_dir(self):
        try:
            os.makedirs(self.out_dir, exist_ok=True)
        except OSError as e:
            logger.error(f"Не удалось создать каталог {self.out_dir}: {e}")
            raise ResultsIoError(f"Не удалось создать каталог {self.out_dir}: {e}") from e

    def _write_jsonl(self, name, records):
        path = self._path(name)
        try:
            with open(path, 'w', encoding='utf-8', newline='\n') as f:
                for record in records:
                    f.write(json.dumps(record, sort_keys=True, ensure_ascii=False))
                    f.write('\n')
        except (OSError, TypeError, ValueError) as e:
            logger.error(f"Ошибка записи {path}: {e}")
            raise ResultsIoError(f"Ошибка записи {path}: {e}") from e
        return path

    def emit_results(self, reports, summary, x_key='n'):
        """Сохраняет отчеты, время выполнения, итог и строку для графика мощности.

        Args:
            reports (list): Отчеты испытаний с методами to_record() и timing_record().
            summary (dict): Итог эксперимента.
            x_key (str): Ключ итога, используемый как ось x в CSV ('n' или 'd').

        Returns:
            dict: Пути к записанным файлам.

        Raises:
            ResultsIoError: Если запись не удалась.
        """
        self._ensure_dir()
        ordered = sorted(reports, key=lambda r: r.trial)
        paths = {
            'trials': self._write_jsonl(TRIALS_FILE, [r.to_record() for r in ordered]),
            'timings': self._write_jsonl(TIMINGS_FILE, [r.timing_record() for r in ordered]),
            'summary': self.write_json(SUMMARY_FILE, summary),
        }
        rows = [power_row(summary, x_key)] if summary.get('trials') else []
        paths['power'] = self.write_power_csv(POWER_FILE, rows)
        logger.info(f"Результаты {len(ordered)} испытаний сохранены в {self.out_dir}.")
        return paths

    def write_json(self, name, payload):
        self._ensure_dir()
        path = self._path(name)
        try:
            with open(path, 'w', encoding='utf-8') as f:
                json.dump(payload, f, ensure_ascii=False, indent=4, sort_keys=True)
        except (OSError, TypeError, ValueError) as e:
            logger.error(f"Ошибка записи {path}: {e}")
            raise ResultsIoError(f"Ошибка записи {path}: {e}") from e
        return path

    def write_power_csv(self, name, rows):
        """Записывает CSV для графика мощности (одна строка на значение оси x)."""
        self._ensure_dir()
        path = self._path(name)
        try:
            with open(path, 'w', newline='', encoding='utf-8') as f:
                writer = csv.DictWriter(f, fieldnames=POWER_FIELDS, extrasaction='ignore')
                writer.writeheader()
                writer.writerows(rows)
        except OSError as e:
            logger.error(f"Ошибка записи {path}: {e}")
            raise ResultsIoError(f"Ошибка записи {path}: {e}") from e
        return path

    def write_rows_csv(self, name, fieldnames, rows):
        self._ensure_dir()
        path = self._path(name)
        try:
            with open(path, 'w', newline='', encoding='utf-8') as f:
                writer = csv.DictWriter(f, fieldnames=fieldnames)
                writer.writeheader()
                writer.writerows(rows)
        except OSError as e:
            logger.error(f"Ошибка записи {path}: {e}")
            raise ResultsIoError(f"Ошибка записи {path}: {e}") from e
        return path

    def load_records(self, path=None):
        """Читает JSON-lines отчеты испытаний.

        Args:
            path (str, optional): Путь к файлу; по умолчанию trials.jsonl хранилища.

        Returns:
            list[dict]: Записи в порядке файла.
        """
        path = path or self._path(TRIALS_FILE)
        records = []
        try:
            with open(path, 'r', encoding='utf-8') as f:
                for line_no, line in enumerate(f, start=1):
                    line = line.strip()
                    if line:
                        records.append(json.loads(line))
        except OSError as e:
            logger.error(f"Не удалось прочитать {path}: {e}")
            raise ResultsIoError(f"Не удалось прочитать {path}: {e}") from e
        except json.JSONDecodeError as e:
            logger.error(f"Некорректный JSON в строке {line_no} файла {path}: {e}")
            raise ResultsIoError(f"Некорректный JSON в строке {line_no} файла {path}: {e}") from e
        return records

    def load_summary(self):
        path = self._path(SUMMARY_FILE)
        try:
            with open(path, 'r', encoding='utf-8') as f:
                return json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            logger.error(f"Не удалось прочитать {path}: {e}")
            raise ResultsIoError(f"Не удалось прочитать {path}: {e}") from e


def power_row(summary, x_key):
    """Строка CSV графика мощности из итога эксперимента."""
    row = {key: summary.get(key) for key in POWER_FIELDS}
    row['x'] = summary.get(x_key)
    return row
