import argparse
import json
import os
import sys

# Корректировка пути Python для возможности импорта модулей из структуры проекта.
project_root_path = os.path.dirname(os.path.abspath(__file__))
if project_root_path not in sys.path:
    sys.path.insert(0, project_root_path)

from core.application_logic import METHODS, ExperimentConfig, ExperimentLogic
from core.exceptions import ExperimentFailure, InterpretableTestError
from core.theory_bounds import BoundContext, KernelClass, bound_report, plugin_c_tilde
from data.csv_loader import load_csv
from storage.results_store import ResultsStore
from utils.config import Settings, load_json_overrides
from utils.linalg_stats import ChiSquared, chi2_quantile
from utils.logger import set_console_level, setup_logging

# Определяем путь к файлу settings.ini относительно корня проекта
settings_path = os.path.join(project_root_path, 'settings.ini')

logger = setup_logging()

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_EXPERIMENT_FAILURE = 2


def _int_list(text):
    try:
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Ожидается список целых через запятую: {text}")


def _float_list(text):
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Ожидается список чисел через запятую: {text}")


def build_parser():
    """Строит парсер аргументов командной строки с подкомандами."""
    parser = argparse.ArgumentParser(
        description="Интерпретируемые двухвыборочные тесты ME/SCF: тесты, оценка мощности, отчеты"
    )
    parser.add_argument('--config', help="JSON-файл с параметрами (имеет приоритет над флагами)")
    parser.add_argument('--settings', default=settings_path, help="Путь к settings.ini")
    parser.add_argument('--log-level', help="Уровень вывода лога в консоль (DEBUG, INFO, ...)")
    subparsers = parser.add_subparsers(dest='command', required=True)

    # Параметры оптимизации, общие для test, power и contour
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--gamma', type=float, help="Регуляризация γ_n")
    common.add_argument('--max-iters', type=int, dest='max_iters')
    common.add_argument('--step-size', type=float, dest='step_size')
    common.add_argument('--sigma-step', type=float, dest='sigma_step')
    common.add_argument('--tolerance', type=float)
    common.add_argument('--init', choices=('normal', 'random_points'))
    common.add_argument('--permutations', type=int, dest='num_permutations')

    test_p = subparsers.add_parser('test', parents=[common], help="Тест на паре CSV-файлов")
    test_p.add_argument('--x', required=True, help="CSV с выборкой из P")
    test_p.add_argument('--y', required=True, help="CSV с выборкой из Q")
    test_p.add_argument('--method', choices=METHODS, default='me-full')
    test_p.add_argument('--j', type=int, default=5, dest='J')
    test_p.add_argument('--alpha', type=float, default=0.01)
    test_p.add_argument('--seed', type=int, default=0)
    test_p.add_argument('--header', action='store_true', help="Первая строка CSV - имена столбцов")
    test_p.add_argument('--subsample-to-min', action='store_true', dest='subsample_to_min')

    power_p = subparsers.add_parser('power', parents=[common], help="Оценка мощности на синтетических задачах")
    power_p.add_argument('--problem', choices=('sg', 'gmd', 'gvd', 'blobs'), default='gmd')
    power_p.add_argument('--method', choices=METHODS, default='me-full')
    power_p.add_argument('--n', type=_int_list, default=[1000], help="n_test или список через запятую")
    power_p.add_argument('--d', type=_int_list, default=[5], help="d или список через запятую")
    power_p.add_argument('--trials', type=int, default=100)
    power_p.add_argument('--j', type=int, default=5, dest='J')
    power_p.add_argument('--alpha', type=float, default=0.01)
    power_p.add_argument('--seed', type=int, default=0, dest='master_seed')
    power_p.add_argument('--workers', type=int)
    power_p.add_argument('--out', required=True, help="Каталог результатов")

    features_p = subparsers.add_parser('features', help="Значимость координат по отчетам испытаний")
    features_p.add_argument('--reports', required=True, help="Файл trials.jsonl")
    features_p.add_argument('--k', type=int, default=5)
    features_p.add_argument('--mode', choices=('largest', 'smallest'), default='largest')
    features_p.add_argument('--names', help="CSV с заголовком, из которого берутся имена координат")

    bound_p = subparsers.add_parser('bound', help="Константы и значения теоретических оценок")
    bound_p.add_argument('--b', type=float, default=1.0, dest='B')
    bound_p.add_argument('--j', type=int, default=5, dest='J')
    bound_p.add_argument('--ctilde', type=float, default=1.0, dest='c_tilde')
    bound_p.add_argument('--features', help="CSV матрицы признаков для оценки c̃ по данным")
    bound_p.add_argument('--n', type=int, default=1000)
    bound_p.add_argument('--gamma', type=float, default=1e-5, dest='gamma_n')
    bound_p.add_argument('--alpha', type=float, default=0.01)
    bound_p.add_argument('--delta', type=float, default=0.05)
    bound_p.add_argument('--d', type=int, default=1)
    bound_p.add_argument('--class', choices=('iso', 'full'), default='iso', dest='kernel_class')
    bound_p.add_argument('--lambdas', type=_float_list, help="Значения λ_n для L(λ_n)")

    contour_p = subparsers.add_parser('contour', parents=[common], help="Карта λ̂^tr для одной тестовой точки (d=2)")
    contour_p.add_argument('--problem', choices=('sg', 'gmd', 'gvd', 'blobs'), default='blobs')
    contour_p.add_argument('--method', choices=('me-full', 'scf-full'), default='me-full')
    contour_p.add_argument('--n', type=int, default=500, dest='n_test')
    contour_p.add_argument('--d', type=int, default=2)
    contour_p.add_argument('--j', type=int, default=2, dest='J')
    contour_p.add_argument('--index', type=int, default=1)
    contour_p.add_argument('--resolution', type=int, default=50)
    contour_p.add_argument('--seed', type=int, default=0, dest='master_seed')
    contour_p.add_argument('--out', required=True, help="Каталог результатов")
    return parser


def _optim_overrides(args):
    return {
        key: getattr(args, key)
        for key in ('gamma', 'max_iters', 'step_size', 'sigma_step', 'tolerance', 'init', 'num_permutations')
    }


def _print_json(payload):
    print(json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True))


def run_test_command(logic, args, overrides):
    options = {
        **_optim_overrides(args),
        'method': args.method,
        'J': args.J,
        'alpha': args.alpha,
        'master_seed': args.seed,
        **overrides,
    }
    result = logic.run_csv_test(
        args.x, args.y, options.pop('method'), options.pop('J'), options.pop('alpha'),
        seed=options.pop('master_seed'), gamma=options.pop('gamma', None),
        subsample=args.subsample_to_min, has_header=args.header, **options,
    )
    _print_json(result)
    return EXIT_OK


def run_power_command(logic, settings, args, overrides):
    options = {
        **_optim_overrides(args),
        'problem': args.problem,
        'method': args.method,
        'trials': args.trials,
        'J': args.J,
        'alpha': args.alpha,
        'master_seed': args.master_seed,
        'workers': args.workers,
        'out_dir': args.out,
        **overrides,
    }
    n_values = options.pop('n_values', args.n)
    d_values = options.pop('d_values', args.d)
    options.setdefault('n_test', n_values[0])
    options.setdefault('d', d_values[0])
    base_config = ExperimentConfig.from_settings(settings, **options)
    try:
        if len(n_values) == 1 and len(d_values) == 1:
            _, summary = logic.run_experiment(base_config)
            _print_json(summary)
        else:
            _print_json(logic.run_power_sweep(base_config, n_values, d_values, base_config.out_dir))
    except ExperimentFailure as e:
        _print_json(e.summary)
        logger.error(str(e))
        return EXIT_EXPERIMENT_FAILURE
    return EXIT_OK


def run_features_command(logic, args):
    names = load_csv(args.names, has_header=True).column_names if args.names else None
    _print_json(logic.features_report(args.reports, args.k, args.mode, names))
    return EXIT_OK


def run_bound_command(args, overrides):
    c_tilde = args.c_tilde
    if args.features:
        c_tilde = plugin_c_tilde(load_csv(args.features).values, args.gamma_n)
    t_alpha = chi2_quantile(1.0 - args.alpha, ChiSquared(args.J))
    ctx = BoundContext(
        B=args.B, J=args.J, c_tilde=c_tilde, n=args.n, gamma_n=args.gamma_n, T_alpha=t_alpha,
        delta=args.delta, d=args.d,
        C1=overrides.get('C1', 1.0), C2=overrides.get('C2', 1.0), C3=overrides.get('C3', 1.0),
    )
    lambdas = args.lambdas or [t_alpha + 10.0 ** k for k in range(0, 9)]
    _print_json(bound_report(ctx, lambdas, KernelClass(args.kernel_class)))
    return EXIT_OK


def run_contour_command(logic, settings, args, overrides):
    options = {
        **_optim_overrides(args),
        'problem': args.problem,
        'method': args.method,
        'n_test': args.n_test,
        'd': args.d,
        'J': args.J,
        'master_seed': args.master_seed,
        **overrides,
    }
    config = ExperimentConfig.from_settings(settings, **options)
    rows = logic.contour(config, index=args.index, resolution=args.resolution)
    path = ResultsStore(args.out).write_rows_csv('contour.csv', ['x0', 'x1', 'objective'], rows)
    print(path)
    return EXIT_OK


def main_app(argv=None):
    """Главная функция командной строки.

    Читает settings.ini, применяет флаги и JSON-конфигурацию (в порядке
    возрастания приоритета) и выполняет выбранную подкоманду.

    Returns:
        int: Код возврата процесса.
    """
    args = build_parser().parse_args(argv)

    # 1. Настройки и логирование
    try:
        settings = Settings(args.settings)
        set_console_level(args.log_level or settings.log_level)
        overrides = load_json_overrides(args.config) if args.config else {}
    except InterpretableTestError as e:
        logger.error(f"Ошибка конфигурации: {e}")
        return EXIT_ERROR

    # 2. Логика эксперимента; статус выводится в stderr, результат - в stdout
    logic = ExperimentLogic(settings, status_updater=lambda message: print(message, file=sys.stderr))

    # 3. Выполнение подкоманды
    try:
        if args.command == 'test':
            return run_test_command(logic, args, overrides)
        if args.command == 'power':
            return run_power_command(logic, settings, args, overrides)
        if args.command == 'features':
            return run_features_command(logic, args)
        if args.command == 'bound':
            return run_bound_command(args, overrides)
        return run_contour_command(logic, settings, args, overrides)
    except InterpretableTestError as e:
        logger.error(f"Ошибка: {e}")
        return EXIT_ERROR
    except ValueError as e:
        logger.error(f"Некорректные параметры: {e}")
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main_app())
