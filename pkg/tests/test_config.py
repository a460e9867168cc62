import logging
import os
import sys

import pytest

# Корректировка пути Python для возможности импорта модулей из структуры проекта.
project_root_path = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if project_root_path not in sys.path:
    sys.path.insert(0, project_root_path)

from core.exceptions import ConfigError
from utils.config import Settings, load_json_overrides
from utils.logger import LOGGER_NAME, set_console_level, setup_logging


@pytest.fixture
def settings_file(tmp_path):
    """Фикстура: временный settings.ini с частью секций."""
    path = tmp_path / 'settings.ini'
    path.write_text(
        "[STATISTIC]\n"
        "gamma = 1e-3\n"
        "\n"
        "[OPTIMIZATION]\n"
        "max_iters = 50\n"
        "init = random_points # из данных\n"
        "\n"
        "[EXPERIMENT]\n"
        "workers = 3\n"
        "debug_checks = true\n",
        encoding='utf-8',
    )
    return str(path)


class TestSettings:
    """Набор тестов для чтения settings.ini."""

    def test_values_and_fallbacks(self, settings_file):
        settings = Settings(settings_file)
        assert settings.gamma == 1e-3
        assert settings.max_iters == 50
        assert settings.init == 'random_points'
        assert settings.workers == 3
        assert settings.debug_checks is True
        assert settings.num_permutations == 400
        assert settings.gamma_max == 0.1

    def test_missing_file_uses_defaults(self, tmp_path):
        settings = Settings(str(tmp_path / 'missing.ini'))
        assert settings.gamma == 1e-5
        assert settings.init == 'normal'

    def test_project_settings(self):
        settings = Settings()
        assert settings.max_failure_rate == 0.01
        assert settings.log_level == 'INFO'

    def test_bad_number(self, tmp_path):
        path = tmp_path / 'bad.ini'
        path.write_text("[OPTIMIZATION]\nmax_iters = много\n", encoding='utf-8')
        with pytest.raises(ConfigError):
            Settings(str(path))

    def test_bad_init(self, tmp_path):
        path = tmp_path / 'bad.ini'
        path.write_text("[OPTIMIZATION]\ninit = uniform\n", encoding='utf-8')
        with pytest.raises(ConfigError):
            Settings(str(path))


class TestJsonOverrides:
    """Набор тестов для JSON-конфигурации."""

    def test_reads_object(self, tmp_path):
        path = tmp_path / 'config.json'
        path.write_text('{"J": 3, "alpha": 0.05}', encoding='utf-8')
        assert load_json_overrides(str(path)) == {'J': 3, 'alpha': 0.05}

    @pytest.mark.parametrize('text', ['[1, 2]', '{не json'])
    def test_rejects_invalid(self, tmp_path, text):
        path = tmp_path / 'config.json'
        path.write_text(text, encoding='utf-8')
        with pytest.raises(ConfigError):
            load_json_overrides(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_json_overrides(str(tmp_path / 'missing.json'))


class TestLogger:
    """Набор тестов для настройки логирования."""

    def test_handlers_not_duplicated(self):
        first = setup_logging()
        count = len(first.handlers)
        second = setup_logging()
        assert first is second
        assert first.name == LOGGER_NAME
        assert len(second.handlers) == count

    def test_console_level(self):
        logger = setup_logging()
        set_console_level('WARNING')
        console = [h for h in logger.handlers if type(h) is logging.StreamHandler]
        assert console and all(h.level == logging.WARNING for h in console)
        set_console_level(logging.INFO)
