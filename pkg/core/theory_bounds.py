"""Вычислимые формы теоретических оценок: нижняя граница мощности ME-теста,
равномерная оценка отклонения λ̂_n от λ_n и VC-индексы классов гауссовых ядер.

Все значения даны с точностью до универсальных констант C_j (по умолчанию 1).
"""

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from core.exceptions import InvalidVC
from core.statistic import mean_and_covariance
from utils.linalg_stats import spd_inverse

UNIVERSAL_CONSTANTS_LABEL = 'up to universal constants'
LOG_16E = math.log(16.0) + 1.0


class KernelClass(enum.Enum):
    ISOTROPIC = 'iso'
    FULL_GAUSSIAN = 'full'


@dataclass(frozen=True)
class BoundContext:
    """Входные величины оценок.

    Attributes:
        B (float): Граница ядра (≤ 1 для гауссова).
        J (int): Число тестовых точек.
        c_tilde (float): sup ‖Σ⁻¹‖_F (или его оценка по данным).
        n (int): Размер выборки.
        gamma_n (float): Регуляризация.
        T_alpha (float): Порог теста.
        delta (float): Уровень доверия оценки отклонения, в (0, 1).
        d (int): Размерность данных.
        C1, C2, C3 (float): Универсальные константы.
    """

    B: float = 1.0
    J: int = 1
    c_tilde: float = 1.0
    n: int = 1000
    gamma_n: float = 1e-5
    T_alpha: float = 1.0
    delta: float = 0.05
    d: int = 1
    C1: float = 1.0
    C2: float = 1.0
    C3: float = 1.0

    def __post_init__(self):
        for name in ('B', 'J', 'c_tilde', 'n', 'gamma_n', 'T_alpha', 'd', 'C1', 'C2', 'C3'):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} должно быть положительным, получено {getattr(self, name)}")
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta должна лежать в (0, 1), получено {self.delta}")

    def universal_constant(self, j):
        return (self.C1, self.C2, self.C3)[j - 1]


@dataclass(frozen=True)
class DerivedConstants:
    c1_bar: float
    c2_bar: float
    c3_bar: float
    xi1: float
    xi2: float
    xi3: float
    xi4: float

    def to_dict(self):
        return dict(self.__dict__)


@dataclass(frozen=True)
class VCIndices:
    """VC-индексы классов F₁, F₂, F₃ и замечания о расхождениях формулировок."""

    vc1: int
    vc2: int
    vc3: int
    metadata: dict = field(default_factory=dict)

    def as_tuple(self):
        return (self.vc1, self.vc2, self.vc3)


def derive_constants(ctx):
    """Константы c̄₁..c̄₃ и ξ₁..ξ₄, зависящие только от B, J и c̃."""
    B, J, c = ctx.B, ctx.J, ctx.c_tilde
    c1 = 4.0 * B ** 2 * J * math.sqrt(J) * c
    c2 = 4.0 * B * math.sqrt(J) * c
    c3 = 4.0 * B ** 2 * J * c ** 2
    return DerivedConstants(
        c1_bar=c1,
        c2_bar=c2,
        c3_bar=c3,
        xi1=1.0 / (9.0 * 8.0 * B ** 2 * c2 ** 2 * J),
        xi2=24.0 * B ** 2 * c1 * J,
        xi3=9.0 * 32.0 * B ** 4 * c1 ** 2 * J ** 2,
        xi4=32.0 * B ** 4 * J ** 2 * c1 ** 2,
    )


def power_lower_bound(lambda_n, ctx):
    """Нижняя граница мощности L(λ_n); отрицательное значение (пустая граница) возвращается как есть."""
    k = derive_constants(ctx)
    n, g, t = ctx.n, ctx.gamma_n, ctx.T_alpha
    gap = lambda_n - t
    term1 = 2.0 * math.exp(-k.xi1 * gap ** 2 / n)
    term2 = 2.0 * math.exp(-((g * gap * (n - 1) - k.xi2 * n) ** 2) / (k.xi3 * n * (2 * n - 1) ** 2))
    term3 = 2.0 * math.exp(-((gap / 3.0 - k.c3_bar * n * g) ** 2) * g ** 2 / k.xi4)
    return 1.0 - term1 - term2 - term3


def power_bound_knee(ctx, lambdas):
    """Наименьшее λ из сетки, начиная с которого L(λ) не убывает до конца сетки.

    Returns:
        float | None: Точка излома; None для пустой сетки.
    """
    lambdas = np.sort(np.asarray(lambdas, dtype=float))
    if lambdas.size == 0:
        return None
    values = np.array([power_lower_bound(lam, ctx) for lam in lambdas])
    start = lambdas.size - 1
    while start > 0 and values[start - 1] <= values[start]:
        start -= 1
    return float(lambdas[start])


def vc_indices(kernel_class, d):
    """VC-индексы (F₁, F₂, F₃) для изотропного или полного гауссова класса.

    Для полного класса возвращаются значения из формулировки леммы; расхождения
    с выводом в доказательстве перечислены в metadata.
    """
    if d < 1:
        raise ValueError(f"d должно быть ≥ 1, получено {d}")
    kernel_class = KernelClass(kernel_class)
    if kernel_class is KernelClass.ISOTROPIC:
        return VCIndices(d + 4, d + 4, 2 * d + 4, {'source': 'statement'})
    quad = d * (d + 1) // 2
    vc1 = quad + d + 2
    vc2 = (d * (d + 1) + 2) // 2 + d + 2
    vc3 = d * (d + 1) + 2 * d + 3
    metadata = {
        'source': 'statement',
        'discrepancy': {
            'F1': {'statement': vc1, 'proof': quad + d + 3},
        },
    }
    return VCIndices(vc1, vc2, vc3, metadata)


def tf_term(j, ctx, vc):
    """Слагаемое T_{F_j} оценки отклонения.

    (16e)^VC вычисляется как VC·log(16e) внутри логарифма.

    Raises:
        InvalidVC: Если vc < 2.
    """
    if j not in (1, 2, 3):
        raise ValueError(f"j должно быть 1, 2 или 3, получено {j}")
    if vc < 2:
        raise InvalidVC(f"VC-индекс должен быть ≥ 2, получено {vc}")
    zeta = 1 if j == 1 else 2
    b_zeta = ctx.B ** zeta
    log_arg = math.log(ctx.universal_constant(j)) + math.log(vc) + vc * LOG_16E
    entropy = 2.0 * math.sqrt(log_arg) + math.sqrt(2.0 * math.pi * (vc - 1)) / 2.0
    return (
        16.0 * math.sqrt(2.0) * b_zeta / math.sqrt(ctx.n) * entropy
        + b_zeta * math.sqrt(2.0 * math.log(5.0 / ctx.delta) / ctx.n)
    )


def deviation_bound(ctx, vc_triple):
    """Правая часть равномерной оценки |z̄ᵀ(S+γI)⁻¹z̄ − μᵀΣ⁻¹μ|.

    Raises:
        ValueError: Если n < 2.
    """
    if ctx.n < 2:
        raise ValueError(f"Для оценки нужно n ≥ 2, получено n={ctx.n}")
    vc1, vc2, vc3 = vc_triple.as_tuple() if isinstance(vc_triple, VCIndices) else vc_triple
    k = derive_constants(ctx)
    B, J, n, g = ctx.B, ctx.J, ctx.n, ctx.gamma_n
    t1, t2, t3 = tf_term(1, ctx, vc1), tf_term(2, ctx, vc2), tf_term(3, ctx, vc3)
    return (
        2.0 * t1 * ((2.0 / g) * k.c1_bar * B * J * (2 * n - 1) / (n - 1) + k.c2_bar * math.sqrt(J))
        + (2.0 / g) * k.c1_bar * J * (t2 + t3)
        + (8.0 / g) * k.c1_bar * B ** 2 * J / (n - 1)
        + k.c3_bar * g
    )


def plugin_c_tilde(features, gamma):
    """Оценка c̃ по данным: ‖(S_n + γI)⁻¹‖_F."""
    _, cov, _ = mean_and_covariance(features)
    return float(np.linalg.norm(spd_inverse(cov + gamma * np.eye(cov.shape[0])), 'fro'))


def bound_report(ctx, lambdas, kernel_class=KernelClass.ISOTROPIC, vc: Optional[VCIndices] = None):
    """Сводка констант и значений оценок для вывода в JSON."""
    vc = vc or vc_indices(kernel_class, ctx.d)
    lambdas = [float(v) for v in lambdas]
    return {
        'label': UNIVERSAL_CONSTANTS_LABEL,
        'context': dict(ctx.__dict__),
        'constants': derive_constants(ctx).to_dict(),
        'kernel_class': KernelClass(kernel_class).value,
        'vc_indices': list(vc.as_tuple()),
        'vc_metadata': vc.metadata,
        'tf_terms': [tf_term(j, ctx, v) for j, v in zip((1, 2, 3), vc.as_tuple())],
        'deviation_bound': deviation_bound(ctx, vc),
        'power_lower_bound': [{'lambda_n': lam, 'L': power_lower_bound(lam, ctx)} for lam in lambdas],
        'knee': power_bound_knee(ctx, lambdas),
    }
