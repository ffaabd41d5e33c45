from __future__ import annotations

from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
from loguru import logger

from fuse_traffic.core.constants import (
    GRAD_CHECK_DENOM_FLOOR,
    GRAD_CHECK_MIN_STEP,
    GRAD_CHECK_STEP,
    GRAD_CHECK_TOLERANCE,
)
from fuse_traffic.core.errors import GradientCheckError
from fuse_traffic.nn.tensor import Parameter, Tensor, record_kinks

LossFn = Callable[[], Tensor]


def _evaluate(loss_fn: LossFn, where: str) -> Tuple[float, List[np.ndarray]]:
    with record_kinks() as masks:
        value = float(np.asarray(loss_fn().data, dtype=np.float64))
    if not np.isfinite(value):
        raise GradientCheckError(f"non-finite loss while perturbing {where}")
    return value, masks


def _same_side(plus: List[np.ndarray], minus: List[np.ndarray]) -> bool:
    if len(plus) != len(minus):
        return False
    return all(p.shape == m.shape and np.array_equal(p, m) for p, m in zip(plus, minus))


def _central_difference(
    loss_fn: LossFn, p: Parameter, flat: np.ndarray, i: int, h: float
) -> Tuple[float, bool]:
    """Центральная разность и признак пересечения излома relu/abs между f(+h) и f(-h)"""
    original = flat[i]
    flat[i] = original + h
    f_plus, plus = _evaluate(loss_fn, p.name)
    flat[i] = original - h
    f_minus, minus = _evaluate(loss_fn, p.name)
    flat[i] = original
    return (f_plus - f_minus) / (2.0 * h), not _same_side(plus, minus)


def _relative_error(a: float, n: float) -> float:
    return abs(a - n) / max(abs(a), abs(n), GRAD_CHECK_DENOM_FLOOR)


def grad_check_report(
    loss_fn: LossFn, params: Sequence[Parameter], h: float = GRAD_CHECK_STEP
) -> Dict[str, float]:
    """
    Сравнивает аналитические градиенты с центральными разностями.

    Возвращает максимальную относительную ошибку
    |a - n| / max(|a|, |n|, 1e-8) по каждому параметру, измеренную с
    шагом `h`. Шаг уменьшается только для элементов, у которых f(+h) и
    f(-h) лежат по разные стороны излома relu/abs; элемент, который так и
    не удалось развести с изломом, пропускается с предупреждением.
    """
    if not GRAD_CHECK_MIN_STEP <= h <= 1e-3:
        raise ValueError(f"finite-difference step must be in [{GRAD_CHECK_MIN_STEP}, 1e-3], got {h}")

    for p in params:
        p.zero_grad()
    loss = loss_fn()
    if not np.isfinite(loss.data).all():
        names = ", ".join(p.name for p in params)
        raise GradientCheckError(f"non-finite loss at the unperturbed point (params: {names})")
    loss.backward()
    analytic = {p.name: p.grad.copy() for p in params}

    report: Dict[str, float] = {}
    for p in params:
        worst = 0.0
        if not p.trainable:
            # замороженный параметр: аналитический градиент обязан быть нулём
            report[p.name] = float(np.max(np.abs(analytic[p.name]), initial=0.0))
            continue
        flat = p.data.reshape(-1)
        grad_flat = analytic[p.name].reshape(-1)
        on_kink = 0
        for i in range(flat.size):
            step = h
            numeric, crossed = _central_difference(loss_fn, p, flat, i, step)
            while crossed and step > GRAD_CHECK_MIN_STEP:
                step = max(step / 10.0, GRAD_CHECK_MIN_STEP)
                numeric, crossed = _central_difference(loss_fn, p, flat, i, step)
            if crossed:
                on_kink += 1
                continue
            worst = max(worst, _relative_error(grad_flat[i], numeric))
        if on_kink:
            logger.warning(
                f"⚠️ gradcheck {p.name}: {on_kink}/{flat.size} entries sit on a relu/abs kink, skipped"
            )
        report[p.name] = worst
        logger.debug(f"gradcheck {p.name}: max rel err {worst:.3e}")
    return report


def grad_check(
    loss_fn: LossFn, params: Sequence[Parameter], h: float = GRAD_CHECK_STEP
) -> float:
    """Максимальная относительная ошибка по всем параметрам"""
    report = grad_check_report(loss_fn, params, h)
    return max(report.values(), default=0.0)
