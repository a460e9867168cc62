"""Воспроизводимые потоки случайных чисел.

Каждый поток определяется кортежем целых чисел (главный seed, номер
испытания, номер подпотока, ...). Генератор Philox основан на счетчике,
поэтому результат не зависит от порядка и числа параллельных исполнителей.
"""

import numpy as np

# Номера подпотоков внутри одного испытания
STREAM_DATA = 0
STREAM_SPLIT = 1
STREAM_INIT = 2
STREAM_PERMUTATION = 3
STREAM_SUBSAMPLE = 4


def stream(*keys):
    """Возвращает генератор numpy для потока с заданными ключами.

    Args:
        *keys (int): Неотрицательные целые ключи потока.

    Returns:
        numpy.random.Generator: Генератор на основе Philox.
    """
    # Длина кортежа входит в энтропию: (s, 1) и (s, 1, 0) дают разные потоки.
    seed_seq = np.random.SeedSequence([len(keys), *(int(k) for k in keys)])
    return np.random.Generator(np.random.Philox(seed_seq))


def trial_seed(master_seed, trial_index):
    """Выводит 32-битный seed испытания из главного seed и номера испытания."""
    seed_seq = np.random.SeedSequence([int(master_seed), int(trial_index)])
    return int(seed_seq.generate_state(1, dtype=np.uint32)[0])
