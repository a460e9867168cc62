def pytest_configure(config):
    config.addinivalue_line('markers', "slow: долгие статистические проверки мощности и ошибки I рода")
