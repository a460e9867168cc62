"""Разбиение данных, целевая функция λ̂^tr(θ), ее градиент и подбор параметров θ."""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist, pdist

from core.exceptions import NonFiniteGradient, NotPositiveDefinite, SeparationFailure, TooFewSamples
from core.kernels import (
    DEFAULT_MIN_SEPARATION,
    FeatureMapKind,
    GaussianKernel,
    TestLocations,
    TestParams,
    feature_matrix,
    me_features,
    min_pairwise_distance,
    scf_features,
)
from core.samples import SamplePair
from core.statistic import GAMMA_FLOOR, GAMMA_MAX, mean_and_covariance, stable_statistic
from utils.linalg_stats import solve_spd
from utils.logger import setup_logging
from utils.rng import STREAM_INIT, STREAM_SPLIT, stream

logger = setup_logging()

MAX_INIT_ATTEMPTS = 100
VARIANCE_FLOOR = 1e-8
MEDIAN_MAX_POINTS = 1000
STEP_SHRINK = 0.5
MIN_STEP_RATIO = 1e-10


@dataclass(frozen=True)
class SplitSamples:
    """Непересекающиеся обучающая и тестовая половины.

    Индексы хранятся для проверки того, что половины не пересекаются.
    """

    train: SamplePair
    test: SamplePair
    train_index_x: np.ndarray
    train_index_y: np.ndarray
    test_index_x: np.ndarray
    test_index_y: np.ndarray

    def is_disjoint(self):
        return (
            np.intersect1d(self.train_index_x, self.test_index_x).size == 0
            and np.intersect1d(self.train_index_y, self.test_index_y).size == 0
        )


@dataclass(frozen=True)
class OptimConfig:
    """Параметры градиентного подъема и поиска ширины по сетке.

    Attributes:
        max_iters (int): Максимальное число вычислений целевой функции (≥ 1),
            включая начальное.
        step_size (float, optional): Шаг по тестовым точкам; None - step_scale
            × масштаб данных (медианное расстояние для ME, медианная норма
            начальных частот для SCF).
        step_scale (float): Множитель масштаба для шага по точкам.
        sigma_step (float): Шаг по log σ.
        tolerance (float): Порог относительного изменения целевой функции.
        seed (int): Seed инициализации.
        sigma_grid (tuple, optional): Сетка σ; None - медианная эвристика × 2^k.
        gamma (float): Регуляризация γ_n (не оптимизируется).
        gamma_max (float): Предел автоматического увеличения γ.
        init (str): 'normal' или 'random_points'.
        min_separation (float): Минимальное расстояние ε между точками на выходе.
        grid_min_exp (int): Нижний показатель k сетки по умолчанию.
        grid_max_exp (int): Верхний показатель k сетки по умолчанию.
    """

    max_iters: int = 200
    step_size: Optional[float] = None
    step_scale: float = 0.1
    sigma_step: float = 0.05
    tolerance: float = 1e-6
    seed: int = 0
    sigma_grid: Optional[Tuple[float, ...]] = None
    gamma: float = GAMMA_FLOOR
    gamma_max: float = GAMMA_MAX
    init: str = 'normal'
    min_separation: float = DEFAULT_MIN_SEPARATION
    grid_min_exp: int = -4
    grid_max_exp: int = 4

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters должно быть ≥ 1, получено {self.max_iters}")
        if self.step_size is not None and self.step_size <= 0:
            raise ValueError(f"step_size должен быть > 0, получено {self.step_size}")
        if self.sigma_step <= 0 or self.tolerance <= 0:
            raise ValueError("sigma_step и tolerance должны быть положительными")
        if self.sigma_grid is not None and len(self.sigma_grid) == 0:
            raise ValueError("Сетка σ не должна быть пустой")
        if self.init not in ('normal', 'random_points'):
            raise ValueError(f"Неизвестный способ инициализации: {self.init}")


@dataclass
class OptimTrace:
    """След оптимизации.

    Attributes:
        objectives (list[float]): Значения целевой функции в порядке вычисления.
        params (TestParams): Итоговые (лучшие) параметры.
        converged (bool): Остановка по критерию сходимости, а не по числу итераций.
        initial_objective (float): Значение в начальной точке.
    """

    objectives: List[float] = field(default_factory=list)
    params: Optional[TestParams] = None
    converged: bool = False
    initial_objective: float = 0.0

    @property
    def best_objectives(self):
        """Лучшее значение на каждый момент (неубывающая последовательность)."""
        return np.maximum.accumulate(np.asarray(self.objectives, dtype=float)).tolist()

    @property
    def final_objective(self):
        return max(self.objectives) if self.objectives else self.initial_objective


def split(sample, seed):
    """Делит выборку на непересекающиеся обучающую и тестовую половины.

    X и Y перемешиваются независимо. Тестовая половина получает n // 2 пар,
    обучающая столько же; при нечетном n один индекс обучающей части отбрасывается.

    Raises:
        TooFewSamples: Если n < 4.
    """
    n = sample.n
    if n < 4:
        raise TooFewSamples(f"Для разбиения нужно n ≥ 4, получено n={n}")
    perm_x = stream(seed, STREAM_SPLIT, 0).permutation(n)
    perm_y = stream(seed, STREAM_SPLIT, 1).permutation(n)
    half = n // 2
    test_x, train_x = perm_x[:half], perm_x[half:2 * half]
    test_y, train_y = perm_y[:half], perm_y[half:2 * half]
    return SplitSamples(
        train=sample.subset(train_x, train_y),
        test=sample.subset(test_x, test_y),
        train_index_x=train_x,
        train_index_y=train_y,
        test_index_x=test_x,
        test_index_y=test_y,
    )


def median_heuristic(sample):
    """Медиана попарных евклидовых расстояний объединенной выборки.

    Большие выборки прореживаются детерминированно до MEDIAN_MAX_POINTS точек.
    """
    pooled = sample.pooled()
    if pooled.shape[0] > MEDIAN_MAX_POINTS:
        idx = np.linspace(0, pooled.shape[0] - 1, MEDIAN_MAX_POINTS).astype(int)
        pooled = pooled[idx]
    med = float(np.median(pdist(pooled)))
    if not med > 0:
        logger.warning("Медианное расстояние равно нулю; используется 1.0.")
        return 1.0
    return med


def sigma_grid(sample, min_exp=-4, max_exp=4):
    """Сетка ширин: медианная эвристика × 2^k для k = min_exp..max_exp."""
    med = median_heuristic(sample)
    return tuple(med * 2.0 ** k for k in range(min_exp, max_exp + 1))


def _features(kind, points, sigma, x, y):
    if kind is FeatureMapKind.ME:
        return me_features(x, y, points, sigma)
    return scf_features(x, y, points, sigma)


def objective(kind, theta, train, gamma=GAMMA_FLOOR, gamma_max=GAMMA_MAX):
    """Прокси мощности λ̂^tr(θ): статистика теста на обучающей половине."""
    features = feature_matrix(kind, theta, train)
    value, _ = stable_statistic(features, gamma, gamma_max)
    return value


def _objective_and_gradient(kind, points, log_sigma, x, y, gamma, gamma_max=GAMMA_MAX):
    """Значение λ̂ и градиент по (точки построчно, log σ).

    dλ = Σ_ik U_ik dZ_ik, где U = 2·1wᵀ − 2n/(n−1)·(Z_c w)wᵀ, w = (S+γI)⁻¹z̄.
    """
    sigma = math.exp(log_sigma)
    sigma_sq = sigma ** 2
    n = x.shape[0]

    if kind is FeatureMapKind.ME:
        sq_x = cdist(x, points, 'sqeuclidean')
        sq_y = cdist(y, points, 'sqeuclidean')
        kx = np.exp(-sq_x / (2.0 * sigma_sq))
        ky = np.exp(-sq_y / (2.0 * sigma_sq))
        z = kx - ky
    else:
        norm_x = np.sum(x ** 2, axis=1)
        norm_y = np.sum(y ** 2, axis=1)
        lx = np.exp(-norm_x / (2.0 * sigma_sq))
        ly = np.exp(-norm_y / (2.0 * sigma_sq))
        proj_x = x @ points.T
        proj_y = y @ points.T
        sin_x, cos_x = np.sin(proj_x), np.cos(proj_x)
        sin_y, cos_y = np.sin(proj_y), np.cos(proj_y)
        z = np.empty((n, 2 * points.shape[0]))
        z[:, 0::2] = lx[:, None] * sin_x - ly[:, None] * sin_y
        z[:, 1::2] = lx[:, None] * cos_x - ly[:, None] * cos_y

    value, gamma_used = stable_statistic(z, gamma, gamma_max)
    z_bar, cov, _ = mean_and_covariance(z)
    if not np.any(z_bar):
        return value, np.zeros(points.size + 1)

    w = solve_spd(cov + gamma_used * np.eye(cov.shape[0]), z_bar)
    centered_w = (z - z_bar) @ w
    upstream = 2.0 * w[None, :] - (2.0 * n / (n - 1)) * centered_w[:, None] * w[None, :]

    if kind is FeatureMapKind.ME:
        wx = upstream * kx
        wy = upstream * ky
        grad_points = (
            wx.T @ x - wx.sum(axis=0)[:, None] * points
            - wy.T @ y + wy.sum(axis=0)[:, None] * points
        ) / sigma_sq
        grad_log_sigma = np.sum(wx * sq_x - wy * sq_y) / sigma_sq
    else:
        u_sin = upstream[:, 0::2]
        u_cos = upstream[:, 1::2]
        ax = (u_sin * cos_x - u_cos * sin_x) * lx[:, None]
        ay = (u_sin * cos_y - u_cos * sin_y) * ly[:, None]
        grad_points = ax.T @ x - ay.T @ y
        grad_log_sigma = (
            np.sum((u_sin * sin_x + u_cos * cos_x) * (lx * norm_x)[:, None])
            - np.sum((u_sin * sin_y + u_cos * cos_y) * (ly * norm_y)[:, None])
        ) / sigma_sq

    grad = np.concatenate([grad_points.ravel(), [grad_log_sigma]])
    if not (np.isfinite(value) and np.all(np.isfinite(grad))):
        raise NonFiniteGradient("Градиент целевой функции не конечен")
    return value, grad


def gradient(kind, theta, train, gamma=GAMMA_FLOOR):
    """Аналитический градиент λ̂^tr по θ как вектору длины Jd+1.

    Порядок компонент: тестовые точки построчно, затем производная по log σ.

    Raises:
        NonFiniteGradient: Если значение или градиент не конечны.
    """
    _, grad = _objective_and_gradient(
        kind, theta.locations.points, math.log(theta.kernel.sigma), train.x, train.y, gamma
    )
    return grad


def init_locations(kind, train, J, seed, method='normal', min_separation=DEFAULT_MIN_SEPARATION):
    """Начальные тестовые точки.

    ME: ⌈J/2⌉ точек из N(mean_X, diag var_X) и ⌊J/2⌋ из N(mean_Y, diag var_Y),
    дисперсии ограничены снизу 1e-8. SCF: J точек из N(0, I_d).
    method='random_points': J наблюдений из объединенной обучающей выборки.

    Raises:
        SeparationFailure: Если за 100 попыток не удалось получить точки на
            расстоянии не меньше ε.
    """
    if J < 1:
        raise ValueError(f"J должно быть ≥ 1, получено {J}")
    rng = stream(seed, STREAM_INIT)
    d = train.d
    pooled = train.pooled()
    for attempt in range(MAX_INIT_ATTEMPTS):
        if method == 'random_points':
            idx = rng.choice(pooled.shape[0], size=J, replace=J > pooled.shape[0])
            points = pooled[idx].copy()
        elif kind is FeatureMapKind.ME:
            j_x, j_y = (J + 1) // 2, J // 2
            sd_x = np.sqrt(np.maximum(train.x.var(axis=0), VARIANCE_FLOOR))
            sd_y = np.sqrt(np.maximum(train.y.var(axis=0), VARIANCE_FLOOR))
            points = np.vstack([
                rng.normal(train.x.mean(axis=0), sd_x, size=(j_x, d)),
                rng.normal(train.y.mean(axis=0), sd_y, size=(j_y, d)),
            ])
        else:
            points = rng.standard_normal((J, d))
        if min_pairwise_distance(points) >= min_separation:
            if attempt:
                logger.debug(f"Точки разнесены с попытки {attempt + 1}.")
            return TestLocations(points, min_separation)
    raise SeparationFailure(f"Не удалось разнести {J} точек на ε={min_separation} за {MAX_INIT_ATTEMPTS} попыток")


def _grid_objectives(kind, points, grid, train, gamma, gamma_max):
    return [
        stable_statistic(_features(kind, points, s, train.x, train.y), gamma, gamma_max)[0]
        for s in grid
    ]


def grid_locations(kind, train, J, seed, method='normal', min_separation=DEFAULT_MIN_SEPARATION):
    """Случайные точки для поиска по сетке.

    ME: J точек из одного нормального распределения N(mean, cov), оцененного по
    объединенной обучающей выборке (к диагонали cov добавляется 1e-8).
    В остальных случаях точки совпадают с init_locations.

    Raises:
        SeparationFailure: Если за 100 попыток не удалось получить точки на
            расстоянии не меньше ε.
    """
    if kind is not FeatureMapKind.ME or method != 'normal':
        return init_locations(kind, train, J, seed, method, min_separation)
    if J < 1:
        raise ValueError(f"J должно быть ≥ 1, получено {J}")
    rng = stream(seed, STREAM_INIT, 2)
    pooled = train.pooled()
    mean = pooled.mean(axis=0)
    cov = np.atleast_2d(np.cov(pooled, rowvar=False)) + VARIANCE_FLOOR * np.eye(train.d)
    for _ in range(MAX_INIT_ATTEMPTS):
        points = rng.multivariate_normal(mean, cov, size=J, method='cholesky')
        if min_pairwise_distance(points) >= min_separation:
            return TestLocations(points, min_separation)
    raise SeparationFailure(f"Не удалось разнести {J} точек на ε={min_separation} за {MAX_INIT_ATTEMPTS} попыток")


def optimize_grid(kind, sample_train, J, config):
    """Случайные точки (grid_locations) и ширина σ, выбранная по сетке максимизацией λ̂^tr.

    При равенстве значений выбирается первый элемент сетки.
    """
    locations = grid_locations(kind, sample_train, J, config.seed, config.init, config.min_separation)
    grid = config.sigma_grid or sigma_grid(sample_train, config.grid_min_exp, config.grid_max_exp)
    values = _grid_objectives(kind, locations.points, grid, sample_train, config.gamma, config.gamma_max)
    best = int(np.argmax(values))
    logger.debug(f"Поиск по сетке ({kind.value}): σ={grid[best]:.4g}, λ̂^tr={values[best]:.4f}")
    return TestParams(locations, GaussianKernel(float(grid[best])))


def _enforce_separation(points, min_separation, seed):
    rng = stream(seed, STREAM_INIT, 1)
    points = points.copy()
    for _ in range(MAX_INIT_ATTEMPTS):
        if min_pairwise_distance(points) >= min_separation:
            return points
        dist = cdist(points, points)
        np.fill_diagonal(dist, np.inf)
        i, j = np.unravel_index(np.argmin(dist), dist.shape)
        step = rng.standard_normal(points.shape[1])
        points[max(i, j)] += 2.0 * min_separation * step / np.linalg.norm(step)
    raise SeparationFailure(f"Итоговые точки не удалось разнести на ε={min_separation}")


def optimize_full(kind, sample_train, J, config):
    """Совместная оптимизация точек и ширины σ градиентным подъемом.

    Инициализация: init_locations, затем σ с лучшим значением на сетке.
    Шаги по точкам и по log σ делаются вдоль нормированного градиента своего
    блока; шаг, не улучшивший целевую функцию, отклоняется, и оба шага
    уменьшаются вдвое. Остановка: max_iters вычислений, относительное
    улучшение меньше tolerance или вырождение шага.

    Returns:
        OptimTrace: След со значениями целевой функции и лучшими параметрами.
    """
    locations = init_locations(kind, sample_train, J, config.seed, config.init, config.min_separation)
    grid = config.sigma_grid or sigma_grid(sample_train, config.grid_min_exp, config.grid_max_exp)
    grid_values = _grid_objectives(kind, locations.points, grid, sample_train, config.gamma, config.gamma_max)
    sigma0 = float(grid[int(np.argmax(grid_values))])

    x, y = sample_train.x, sample_train.y
    points = locations.points.copy()
    log_sigma = math.log(sigma0)

    if config.step_size is not None:
        loc_step = config.step_size
    elif kind is FeatureMapKind.ME:
        loc_step = config.step_scale * median_heuristic(sample_train)
    else:
        loc_step = config.step_scale * max(float(np.median(np.linalg.norm(points, axis=1))), 1e-8)
    sig_step = config.sigma_step
    loc_step0 = loc_step

    value, grad = _objective_and_gradient(kind, points, log_sigma, x, y, config.gamma, config.gamma_max)
    trace = OptimTrace(objectives=[value], initial_objective=value)
    best_points, best_log_sigma = points, log_sigma

    for _ in range(config.max_iters - 1):
        grad_points = grad[:-1].reshape(points.shape)
        norm_points = np.linalg.norm(grad_points)
        if norm_points == 0 and grad[-1] == 0:
            trace.converged = True
            break
        cand_points = points + (loc_step * grad_points / norm_points if norm_points > 0 else 0.0)
        cand_log_sigma = log_sigma + sig_step * float(np.sign(grad[-1]))
        try:
            cand_value, cand_grad = _objective_and_gradient(
                kind, cand_points, cand_log_sigma, x, y, config.gamma, config.gamma_max
            )
        except (NotPositiveDefinite, NonFiniteGradient) as e:
            logger.warning(f"Численная ошибка при подъеме ({e}); возвращаю лучшие найденные параметры.")
            break
        trace.objectives.append(cand_value)

        if cand_value > value:
            rel_change = (cand_value - value) / max(abs(value), np.finfo(float).tiny)
            points, log_sigma, value, grad = cand_points, cand_log_sigma, cand_value, cand_grad
            best_points, best_log_sigma = points, log_sigma
            if rel_change < config.tolerance:
                trace.converged = True
                break
        else:
            loc_step *= STEP_SHRINK
            sig_step *= STEP_SHRINK
            if loc_step < MIN_STEP_RATIO * loc_step0:
                trace.converged = True
                break

    final_points = _enforce_separation(best_points, config.min_separation, config.seed)
    trace.params = TestParams(
        TestLocations(final_points, config.min_separation),
        GaussianKernel(math.exp(best_log_sigma)),
    )
    logger.debug(
        f"Подъем ({kind.value}): λ̂^tr {trace.initial_objective:.4f} -> {trace.final_objective:.4f} "
        f"за {len(trace.objectives)} вычислений, сходимость={trace.converged}"
    )
    return trace


def objective_contour(kind, theta, train, grid_points, index=1, gamma=GAMMA_FLOOR):
    """λ̂^tr при перемещении точки с номером index по grid_points (остальные фиксированы).

    Args:
        kind (FeatureMapKind): ME или SCF.
        theta (TestParams): Исходные параметры.
        train (SamplePair): Обучающая выборка.
        grid_points (numpy.ndarray): Кандидаты m×d для точки index.
        index (int): Номер перемещаемой точки (с 0).
        gamma (float): Регуляризация.

    Returns:
        numpy.ndarray: Значения целевой функции длины m.
    """
    grid_points = np.atleast_2d(np.asarray(grid_points, dtype=float))
    points = theta.locations.points.copy()
    values = np.empty(grid_points.shape[0])
    for i, candidate in enumerate(grid_points):
        points[index] = candidate
        features = _features(kind, points, theta.kernel.sigma, train.x, train.y)
        values[i] = stable_statistic(features, gamma)[0]
    return values
