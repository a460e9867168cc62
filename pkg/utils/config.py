import configparser
import json
import os

from core.exceptions import ConfigError
from utils.logger import setup_logging

logger = setup_logging()

DEFAULT_SETTINGS_PATH = os.path.join(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')), 'settings.ini')


class Settings:
    """Настройки по умолчанию, прочитанные из settings.ini.

    Каждое значение читается с запасным значением (fallback), поэтому
    отсутствующий файл или секция не являются ошибкой.
    """

    def __init__(self, config_path=None):
        """Читает файл настроек.

        Args:
            config_path (str, optional): Путь к settings.ini.
                                         Если не указан, используется файл в корне проекта.
        """
        self.config = configparser.ConfigParser(inline_comment_prefixes=('#',))
        path = config_path or DEFAULT_SETTINGS_PATH
        read_ok = self.config.read(path, encoding='utf-8')
        if not read_ok:
            logger.warning(f"Файл настроек не найден: {path}. Используются значения по умолчанию.")

        try:
            self.gamma = self.config.getfloat('STATISTIC', 'gamma', fallback=1e-5)
            self.gamma_max = self.config.getfloat('STATISTIC', 'gamma_max', fallback=0.1)

            self.max_iters = self.config.getint('OPTIMIZATION', 'max_iters', fallback=200)
            self.step_scale = self.config.getfloat('OPTIMIZATION', 'step_scale', fallback=0.1)
            self.sigma_step = self.config.getfloat('OPTIMIZATION', 'sigma_step', fallback=0.05)
            self.tolerance = self.config.getfloat('OPTIMIZATION', 'tolerance', fallback=1e-6)
            self.grid_min_exp = self.config.getint('OPTIMIZATION', 'grid_min_exp', fallback=-4)
            self.grid_max_exp = self.config.getint('OPTIMIZATION', 'grid_max_exp', fallback=4)
            self.min_separation = self.config.getfloat('OPTIMIZATION', 'min_separation', fallback=1e-6)
            self.init = self.config.get('OPTIMIZATION', 'init', fallback='normal')

            self.num_permutations = self.config.getint('PERMUTATION', 'num_permutations', fallback=400)

            self.blobs_spacing = self.config.getfloat('BLOBS', 'spacing', fallback=5.0)
            self.blobs_stretch = self.config.getfloat('BLOBS', 'stretch', fallback=2.0)
            self.blobs_angle = self.config.getfloat('BLOBS', 'angle', fallback=0.7853981633974483)

            self.workers = self.config.getint('EXPERIMENT', 'workers', fallback=1)
            self.max_failure_rate = self.config.getfloat('EXPERIMENT', 'max_failure_rate', fallback=0.01)
            self.debug_checks = self.config.getboolean('EXPERIMENT', 'debug_checks', fallback=False)

            self.log_level = self.config.get('LOGGING', 'level', fallback='INFO')
        except ValueError as e:
            logger.error(f"Некорректное значение в {path}: {e}")
            raise ConfigError(f"Некорректное значение в {path}: {e}") from e

        if self.init not in ('normal', 'random_points'):
            raise ConfigError(f"Неизвестный способ инициализации: {self.init}")
        logger.debug(f"Настройки загружены из {path}.")


def load_json_overrides(path):
    """Читает JSON-файл с переопределениями параметров эксперимента.

    Args:
        path (str): Путь к JSON-файлу (объект ключ -> значение).

    Returns:
        dict: Переопределения; ключи совпадают с именами полей ExperimentConfig.
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            overrides = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"Не удалось прочитать файл конфигурации {path}: {e}")
        raise ConfigError(f"Не удалось прочитать файл конфигурации {path}: {e}") from e
    if not isinstance(overrides, dict):
        raise ConfigError(f"Файл конфигурации {path} должен содержать JSON-объект.")
    return overrides
