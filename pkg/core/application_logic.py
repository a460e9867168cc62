import dataclasses
import hashlib
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import repeat
from typing import List, Optional

import numpy as np

from core.baselines import PermutationConfig, hotelling_t2, mmd_lin, mmd_quad, mmd_width_select
from core.exceptions import ConfigError, ExperimentFailure, InterpretableTestError, MissingTheta
from core.kernels import FeatureMapKind
from core.optimization import OptimConfig, objective_contour, optimize_full, optimize_grid, sigma_grid, split
from core.samples import SamplePair, subsample_to_min
from core.statistic import StatConfig, TestResult, run_test
from data.csv_loader import load_csv
from data.synth import ToyProblem, sample_problem
from storage.results_store import ResultsStore, power_row
from utils.logger import setup_logging
from utils.rng import STREAM_SUBSAMPLE, stream, trial_seed

logger = setup_logging()

METHODS = ('me-full', 'me-grid', 'scf-full', 'scf-grid', 'mmd-lin', 'mmd-quad', 't2')
LOCATION_METHODS = ('me-full', 'me-grid', 'scf-full', 'scf-grid')


@dataclass(frozen=True)
class ExperimentConfig:
    """Параметры эксперимента по оценке мощности или ошибки I рода.

    Данные берутся из синтетической задачи (problem, d, n_test) либо из пары
    CSV-файлов (x_path, y_path); во втором случае в каждом испытании заново
    разбиваются одни и те же данные.
    """

    method: str = 'me-full'
    problem: str = 'gmd'
    d: int = 5
    n_test: int = 1000
    J: int = 5
    alpha: float = 0.01
    trials: int = 1
    master_seed: int = 0
    out_dir: Optional[str] = None
    x_path: Optional[str] = None
    y_path: Optional[str] = None
    has_header: bool = False
    subsample_to_min: bool = False
    gamma: float = 1e-5
    gamma_max: float = 0.1
    max_iters: int = 200
    step_size: Optional[float] = None
    step_scale: float = 0.1
    sigma_step: float = 0.05
    tolerance: float = 1e-6
    grid_min_exp: int = -4
    grid_max_exp: int = 4
    min_separation: float = 1e-6
    init: str = 'normal'
    num_permutations: int = 400
    workers: int = 1
    max_failure_rate: float = 0.01
    debug_checks: bool = False
    blobs_spacing: float = 5.0
    blobs_stretch: float = 2.0
    blobs_angle: float = 0.7853981633974483

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"Неизвестный метод: {self.method}. Допустимые: {', '.join(METHODS)}")
        if self.trials < 1:
            raise ConfigError(f"trials должно быть ≥ 1, получено {self.trials}")
        if self.J < 1:
            raise ConfigError(f"J должно быть ≥ 1, получено {self.J}")
        if self.n_test < 2:
            raise ConfigError(f"n_test должно быть ≥ 2, получено {self.n_test}")
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError(f"alpha должна лежать в (0, 1), получено {self.alpha}")
        if self.workers < 1:
            raise ConfigError(f"workers должно быть ≥ 1, получено {self.workers}")
        if (self.x_path is None) != (self.y_path is None):
            raise ConfigError("Файлы x_path и y_path задаются только вместе")
        if self.x_path is None:
            try:
                self.toy_problem()
            except ValueError as e:
                raise ConfigError(f"Некорректная задача: {e}") from e

    @classmethod
    def from_settings(cls, settings, **overrides):
        """Конфигурация из settings.ini с переопределениями.

        Значения None в overrides пропускаются, поэтому непереданные флаги
        командной строки не затирают настройки.

        Raises:
            ConfigError: Неизвестный ключ или некорректное значение.
        """
        names = {f.name for f in dataclasses.fields(cls)}
        values = {name: getattr(settings, name) for name in names if hasattr(settings, name)}
        unknown = sorted(set(overrides) - names)
        if unknown:
            raise ConfigError(f"Неизвестные параметры конфигурации: {', '.join(unknown)}")
        values.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**values)
        except TypeError as e:
            raise ConfigError(f"Некорректная конфигурация: {e}") from e

    def toy_problem(self):
        return ToyProblem(
            kind=self.problem,
            d=self.d,
            spacing=self.blobs_spacing,
            stretch=self.blobs_stretch,
            angle=self.blobs_angle,
        )

    def stat_config(self):
        return StatConfig(gamma=self.gamma, alpha=self.alpha, gamma_max=self.gamma_max)

    def optim_config(self, seed):
        return OptimConfig(
            max_iters=self.max_iters,
            step_size=self.step_size,
            step_scale=self.step_scale,
            sigma_step=self.sigma_step,
            tolerance=self.tolerance,
            seed=seed,
            gamma=self.gamma,
            gamma_max=self.gamma_max,
            init=self.init,
            min_separation=self.min_separation,
            grid_min_exp=self.grid_min_exp,
            grid_max_exp=self.grid_max_exp,
        )


@dataclass
class TrialReport:
    """Результат одного испытания.

    Время выполнения хранится отдельно от остальных полей: to_record()
    не зависит от скорости машины и числа исполнителей.
    """

    trial: int
    seed: int
    method: str
    theta: Optional[dict] = None
    result: Optional[TestResult] = None
    error: Optional[str] = None
    durations: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.error is None and self.result is not None

    def to_record(self):
        return {
            'trial': self.trial,
            'seed': self.seed,
            'method': self.method,
            'theta': self.theta,
            'result': self.result.to_dict() if self.result is not None else None,
            'error': self.error,
        }

    def timing_record(self):
        return {'trial': self.trial, **self.durations}

    @classmethod
    def from_record(cls, record):
        result = record.get('result')
        return cls(
            trial=record['trial'],
            seed=record['seed'],
            method=record['method'],
            theta=record.get('theta'),
            result=TestResult.from_dict(result) if result is not None else None,
            error=record.get('error'),
        )


@dataclass
class SignificanceReport:
    """Частоты η_j попадания координаты j в top-k (или bottom-k) по модулю.

    Attributes:
        counts (list[int]): η_j для каждой координаты.
        top (list[dict]): k координат с наибольшими η.
        bottom (list[dict]): k координат с наименьшими η.
        trials (int): Число учтенных испытаний.
        mode (str): 'largest' или 'smallest'.
    """

    counts: List[int]
    top: List[dict]
    bottom: List[dict]
    trials: int
    mode: str

    def to_dict(self):
        return dataclasses.asdict(self)


def _test_half_digest(sample):
    return hashlib.sha256(sample.x.tobytes() + sample.y.tobytes()).hexdigest()


def _check_test_half(halves, digest):
    if digest is not None and _test_half_digest(halves.test) != digest:
        raise AssertionError("Тестовая половина изменилась во время обучения")


def apply_method(method, halves, config, seed):
    """Обучение на обучающей половине и тест на тестовой.

    При config.debug_checks тестовая половина хешируется до и после обучения.

    Returns:
        tuple[dict | None, TestResult, dict]: θ, результат теста и длительности.
    """
    stat_config = config.stat_config()
    digest = _test_half_digest(halves.test) if config.debug_checks else None
    started = time.perf_counter()
    theta = None

    if method in LOCATION_METHODS:
        kind = FeatureMapKind.ME if method.startswith('me') else FeatureMapKind.SCF
        optim = config.optim_config(seed)
        if method.endswith('full'):
            params = optimize_full(kind, halves.train, config.J, optim).params
        else:
            params = optimize_grid(kind, halves.train, config.J, optim)
        theta = params.to_dict()
        optimized = time.perf_counter()
        _check_test_half(halves, digest)
        result = run_test(kind, params, halves.test, stat_config)
    elif method in ('mmd-lin', 'mmd-quad'):
        variant = method.split('-')[1]
        grid = sigma_grid(halves.train, config.grid_min_exp, config.grid_max_exp)
        kernel = mmd_width_select(halves.train, grid, variant)
        theta = {'sigma': float(kernel.sigma)}
        optimized = time.perf_counter()
        _check_test_half(halves, digest)
        if variant == 'lin':
            result = mmd_lin(halves.test, kernel, config.alpha)
        else:
            perm = PermutationConfig(num_permutations=config.num_permutations, seed=seed, workers=config.workers)
            result = mmd_quad(halves.test, kernel, config.alpha, perm)
    else:
        optimized = started
        result = hotelling_t2(halves.test, config.alpha)

    finished = time.perf_counter()
    return theta, result, {'optimize': optimized - started, 'test': finished - optimized}


def _trial_sample(config, seed, base_sample):
    if base_sample is None:
        return sample_problem(config.toy_problem(), 2 * config.n_test, seed)
    return base_sample


def run_trial(config, trial, base_sample=None):
    """Одно испытание: данные, разбиение, обучение, тест.

    Ошибки испытания записываются в отчет, а не пробрасываются.
    """
    seed = trial_seed(config.master_seed, trial)
    report = TrialReport(trial=trial, seed=seed, method=config.method)
    try:
        sample = _trial_sample(config, seed, base_sample)
        halves = split(sample, seed)
        if config.debug_checks and not halves.is_disjoint():
            raise AssertionError("Обучающая и тестовая половины пересекаются")
        report.theta, report.result, report.durations = apply_method(config.method, halves, config, seed)
    except (InterpretableTestError, ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
        report.error = f"{type(e).__name__}: {e}"
        logger.warning(f"Испытание {trial} завершилось ошибкой: {report.error}")
    return report


def summarize(reports, config, base_sample=None):
    """Итог эксперимента: доля отклонений H₀ и ее биномиальная стандартная ошибка.

    Неудачные испытания исключаются из доли и считаются отдельно.
    """
    completed = [r for r in reports if r.ok]
    rejections = sum(1 for r in completed if r.result.reject)
    if completed:
        proportion = rejections / len(completed)
        stderr = float(np.sqrt(proportion * (1.0 - proportion) / len(completed)))
    else:
        proportion, stderr = None, None
    if base_sample is None:
        n, d = config.n_test, config.toy_problem().d
    else:
        n, d = base_sample.n // 2, base_sample.d
    return {
        'method': config.method,
        'problem': config.problem if config.x_path is None else 'csv',
        'n': n,
        'd': d,
        'J': config.J,
        'alpha': config.alpha,
        'trials': len(reports),
        'completed': len(completed),
        'failed': len(reports) - len(completed),
        'rejections': rejections,
        'proportion': proportion,
        'stderr': stderr,
        'total_runtime': float(sum(sum(r.durations.values()) for r in reports)),
    }


def _location_matrices(reports):
    matrices = []
    for report in reports:
        if report.error is not None:
            continue
        if not report.theta or report.theta.get('locations') is None:
            raise MissingTheta(f"В отчете испытания {report.trial} ({report.method}) нет тестовых точек")
        matrices.append(np.atleast_2d(np.asarray(report.theta['locations'], dtype=float)))
    if not matrices:
        raise MissingTheta("Нет ни одного успешного испытания с тестовыми точками")
    return matrices


def significance_report(reports, k=5, mode='largest', column_names=None):
    """Частоты η_j значимости координат по выученным тестовым точкам.

    В каждом испытании координата j получает 1, если |v_j| входит в k наибольших
    (mode='largest') или k наименьших (mode='smallest') значений. При J > 1
    используется max_j |V_{·j}| по всем точкам. Равные значения упорядочиваются
    по номеру координаты.

    Raises:
        MissingTheta: Отчеты без тестовых точек.
        ValueError: k вне [1, d] или неизвестный mode.
    """
    if mode not in ('largest', 'smallest'):
        raise ValueError(f"Неизвестный режим: {mode}")
    matrices = _location_matrices(reports)
    d = matrices[0].shape[1]
    if any(m.shape[1] != d for m in matrices):
        raise ValueError("Тестовые точки испытаний имеют разную размерность")
    if not (1 <= k <= d):
        raise ValueError(f"k должно лежать в [1, {d}], получено {k}")

    counts = np.zeros(d, dtype=int)
    for matrix in matrices:
        magnitude = np.abs(matrix).max(axis=0)
        order = np.argsort(-magnitude if mode == 'largest' else magnitude, kind='stable')
        counts[order[:k]] += 1

    ranked = np.argsort(-counts, kind='stable')

    def entry(j):
        name = column_names[j] if column_names and j < len(column_names) else str(j)
        return {'index': int(j), 'name': name, 'count': int(counts[j])}

    return SignificanceReport(
        counts=counts.tolist(),
        top=[entry(j) for j in ranked[:k]],
        bottom=[entry(j) for j in ranked[::-1][:k]],
        trials=len(matrices),
        mode=mode,
    )


def average_locations(reports):
    """Средние по испытаниям тестовые точки (J×d)."""
    matrices = _location_matrices(reports)
    if len({m.shape for m in matrices}) != 1:
        raise ValueError("Тестовые точки испытаний имеют разную форму")
    return np.mean(np.stack(matrices), axis=0)


class ExperimentLogic:
    """Координирует эксперименты: испытания, сводки, сохранение и отчеты.

    Ход работы сообщается через status_updater (если задан) и логгер.
    """

    def __init__(self, settings, status_updater=None):
        """Инициализирует логику эксперимента.

        Args:
            settings (Settings): Настройки из settings.ini.
            status_updater (callable, optional): Функция для вывода статуса.
        """
        self.settings = settings
        self.status_updater = status_updater
        logger.info("ExperimentLogic инициализирован.")

    def _update_status(self, message, level=logging.INFO):
        """Передает сообщение в status_updater и в лог.

        Args:
            message (str): Сообщение.
            level (int, optional): Уровень логирования. По умолчанию logging.INFO.
        """
        if self.status_updater:
            self.status_updater(message)
        if level == logging.ERROR:
            logger.error(message)
        elif level == logging.WARNING:
            logger.warning(message)
        else:
            logger.info(message)

    def _load_pair(self, x_path, y_path, has_header, subsample, seed):
        x_data = load_csv(x_path, has_header)
        y_data = load_csv(y_path, has_header)
        if subsample:
            sample = subsample_to_min(x_data.values, y_data.values, stream(seed, STREAM_SUBSAMPLE))
            self._update_status(f"Выборки уменьшены до общего размера n={sample.n}.")
        else:
            sample = SamplePair(x_data.values, y_data.values)
        return sample, x_data.column_names

    def run_experiment(self, config):
        """Запускает config.trials испытаний и сохраняет результаты.

        Returns:
            tuple[list[TrialReport], dict]: Отчеты (по возрастанию номера) и итог.

        Raises:
            ExperimentFailure: Доля неудачных испытаний больше max_failure_rate
                (результаты к этому моменту уже сохранены).
        """
        self._update_status(
            f"Эксперимент {config.method}: {config.trials} испытаний, n={config.n_test}, J={config.J}, "
            f"исполнителей: {config.workers}..."
        )
        base_sample = None
        if config.x_path is not None:
            base_sample, _ = self._load_pair(
                config.x_path, config.y_path, config.has_header, config.subsample_to_min, config.master_seed
            )

        trials = range(config.trials)
        if config.workers > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as executor:
                reports = list(executor.map(run_trial, repeat(config), trials, repeat(base_sample)))
        else:
            reports = [run_trial(config, t, base_sample) for t in trials]
        reports.sort(key=lambda r: r.trial)

        summary = summarize(reports, config, base_sample)
        if config.out_dir:
            ResultsStore(config.out_dir).emit_results(reports, summary)
        self._update_status(
            f"Готово: доля отклонений {summary['proportion']} ± {summary['stderr']} "
            f"({summary['failed']} неудачных испытаний)."
        )

        failure_rate = summary['failed'] / summary['trials']
        if failure_rate > config.max_failure_rate:
            message = (
                f"Доля неудачных испытаний {failure_rate:.3f} превышает допустимую {config.max_failure_rate:.3f}"
            )
            self._update_status(message, level=logging.ERROR)
            raise ExperimentFailure(message, reports, summary)
        return reports, summary

    def run_power_sweep(self, base_config, n_values, d_values, out_dir):
        """Серия экспериментов по значениям n и d.

        Для каждой точки результаты пишутся в подкаталог n<n>_d<d>. Если меняется
        только d, итоговый CSV называется power_vs_d.csv, иначе power_vs_n.csv.

        Returns:
            list[dict]: Строки итогового CSV, по одной на точку серии.
        """
        x_key = 'd' if len(n_values) == 1 and len(d_values) > 1 else 'n'
        rows, failures = [], []
        for n in n_values:
            for d in d_values:
                point_dir = os.path.join(out_dir, f"n{n}_d{d}")
                config = dataclasses.replace(base_config, n_test=n, d=d, out_dir=point_dir)
                try:
                    _, summary = self.run_experiment(config)
                except ExperimentFailure as e:
                    summary = e.summary
                    failures.append(f"n={n}, d={d}")
                rows.append(power_row(summary, x_key))

        store = ResultsStore(out_dir)
        path = store.write_power_csv(f"power_vs_{x_key}.csv", rows)
        self._update_status(f"Серия из {len(rows)} точек сохранена в {path}.")
        if failures:
            raise ExperimentFailure(f"Слишком много неудачных испытаний в точках: {'; '.join(failures)}", [], {'rows': rows})
        return rows

    def run_csv_test(self, x_path, y_path, method, J, alpha, seed=0, gamma=None,
                     subsample=False, has_header=False, **overrides):
        """Полная процедура теста на пользовательских CSV: разбиение, обучение, тест.

        Returns:
            dict: Результат теста, θ, имена столбцов и размеры данных.
        """
        config = ExperimentConfig.from_settings(
            self.settings, method=method, J=J, alpha=alpha, master_seed=seed, gamma=gamma, **overrides
        )
        sample, column_names = self._load_pair(x_path, y_path, has_header, subsample, seed)
        halves = split(sample, seed)
        self._update_status(f"Тест {method} на {x_path} и {y_path}: n={sample.n}, d={sample.d}.")
        theta, result, durations = apply_method(method, halves, config, seed)
        self._update_status(f"λ={result.statistic:.4f}, порог={result.threshold:.4f}, отклонение H₀: {result.reject}.")
        return {
            'method': method,
            'n': sample.n,
            'd': sample.d,
            'column_names': column_names,
            'theta': theta,
            'result': result.to_dict(),
            'durations': durations,
        }

    def features_report(self, reports_path, k=5, mode='largest', column_names=None):
        """Отчет о значимости координат по сохраненным отчетам испытаний."""
        records = ResultsStore(os.path.dirname(reports_path) or '.').load_records(reports_path)
        reports = [TrialReport.from_record(r) for r in records]
        report = significance_report(reports, k, mode, column_names).to_dict()
        report['average_locations'] = average_locations(reports).tolist()
        self._update_status(f"Отчет о значимости по {report['trials']} испытаниям построен.")
        return report

    def contour(self, config, index=1, resolution=50, margin=1.0):
        """Значения λ̂^tr на сетке для одной тестовой точки (задачи с d = 2).

        Остальные точки и σ берутся из полной оптимизации на обучающей половине
        первого испытания.

        Returns:
            list[dict]: Строки {'x0', 'x1', 'objective'}.
        """
        if config.method not in ('me-full', 'scf-full'):
            raise ConfigError("Карта целевой функции строится только для me-full и scf-full")
        seed = trial_seed(config.master_seed, 0)
        sample = sample_problem(config.toy_problem(), 2 * config.n_test, seed)
        if sample.d != 2:
            raise ConfigError(f"Карта целевой функции строится только при d=2, получено d={sample.d}")
        if not (0 <= index < config.J):
            raise ConfigError(f"index должен лежать в [0, {config.J}), получено {index}")
        halves = split(sample, seed)
        kind = FeatureMapKind.ME if config.method.startswith('me') else FeatureMapKind.SCF
        theta = optimize_full(kind, halves.train, config.J, config.optim_config(seed)).params

        if kind is FeatureMapKind.ME:
            pooled = halves.train.pooled()
            low, high = pooled.min(axis=0) - margin, pooled.max(axis=0) + margin
        else:
            radius = float(np.abs(theta.locations.points).max()) + margin
            low, high = np.full(2, -radius), np.full(2, radius)
        g0, g1 = np.meshgrid(np.linspace(low[0], high[0], resolution), np.linspace(low[1], high[1], resolution))
        grid_points = np.column_stack([g0.ravel(), g1.ravel()])
        values = objective_contour(kind, theta, halves.train, grid_points, index, config.gamma)
        self._update_status(f"Карта целевой функции: {grid_points.shape[0]} точек, максимум {values.max():.4f}.")
        return [
            {'x0': float(p[0]), 'x1': float(p[1]), 'objective': float(v)}
            for p, v in zip(grid_points, values)
        ]
