import logging
import os

LOGGER_NAME = 'interpretable_test'


def setup_logging(log_file_name='app.log', log_level=logging.INFO):
    """Настраивает систему логирования для вывода в файл и консоль.

    Логирование производится в файл `app.log` в корневой директории проекта
    и в стандартный вывод (консоль). Файловый лог записывает все сообщения
    уровня DEBUG и выше, консольный лог - сообщения, начиная с заданного `log_level`.

    Args:
        log_file_name (str, optional): Имя файла логов. По умолчанию 'app.log'.
            Если None, файловый обработчик не создается.
        log_level (int, optional): Минимальный уровень логирования для консоли.
                                   По умолчанию logging.INFO.

    Returns:
        logging.Logger: Настроенный экземпляр логгера.
    """
    # logger.py находится в <корень проекта>/utils
    project_root_path = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))

    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(logging.DEBUG)

    # Повторный вызов не должен дублировать обработчики
    if not logger.handlers:
        formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')

        if log_file_name:
            log_file_path = os.path.join(project_root_path, log_file_name)
            file_handler = logging.FileHandler(log_file_path, encoding='utf-8')
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

        console_handler = logging.StreamHandler()
        console_handler.setLevel(log_level)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

    return logger


def set_console_level(log_level):
    """Меняет уровень консольного обработчика уже настроенного логгера.

    Args:
        log_level (int | str): Новый уровень (например, logging.WARNING или 'DEBUG').
    """
    logger = logging.getLogger(LOGGER_NAME)
    if isinstance(log_level, str):
        log_level = logging.getLevelName(log_level.upper())
    for handler in logger.handlers:
        if type(handler) is logging.StreamHandler:
            handler.setLevel(log_level)
