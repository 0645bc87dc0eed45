"""
束流运行假设 -> 年度束流时间与峰值/平均/持续相互作用率
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

from planners.errors import PlanValidationError
from planners.quantities import SECONDS_PER_HOUR, Duration, Rate, RateDimension

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MachinePlan:
    machine_hours_per_year: float
    cave_share: float
    competing_days: float
    duty_cycle: float
    peak_to_average: float
    operational_efficiency: float = 1.0

    def __post_init__(self):
        if not self.machine_hours_per_year >= 0:
            raise PlanValidationError(f"年运行小时数必须非负: {self.machine_hours_per_year}")
        if not 0 < self.cave_share <= 1:
            raise PlanValidationError(f"实验厅束流份额必须在 (0, 1] 内: {self.cave_share}")
        if not 0 < self.duty_cycle <= 1:
            raise PlanValidationError(f"占空比必须在 (0, 1] 内: {self.duty_cycle}")
        if not self.peak_to_average >= 1:
            raise PlanValidationError(f"峰均比必须 >= 1: {self.peak_to_average}")
        if not self.competing_days >= 0:
            raise PlanValidationError(f"竞争实验天数必须非负: {self.competing_days}")
        if not 0 < self.operational_efficiency <= 1:
            raise PlanValidationError(f"运行效率必须在 (0, 1] 内: {self.operational_efficiency}")
        if self.competing_days * 24 > self.machine_hours_per_year * self.cave_share:
            raise PlanValidationError(
                f"竞争实验 {self.competing_days} 天超过实验厅可用时间 "
                f"{self.machine_hours_per_year * self.cave_share} 小时")


@dataclass(frozen=True)
class RateCaps:
    """探测器限制：峰值上限 (如 FSD) 与平均率上限 (如 MVD)"""
    peak_cap: Rate | None = None
    avg_cap: Rate | None = None


@dataclass(frozen=True)
class RateProfile:
    peak: Rate
    average: Rate
    sustained: Rate

    def __post_init__(self):
        for rate in (self.peak, self.average, self.sustained):
            if rate.dimension is not RateDimension.EVENTS:
                raise PlanValidationError("相互作用率必须是事件率")
        # 浮点舍入留一点余量
        slack = 1e-12 * self.peak.value
        if not (self.peak.value + slack >= self.average.value
                and self.average.value + slack >= self.sustained.value):
            raise PlanValidationError(
                f"速率需满足 peak >= average >= sustained: "
                f"{self.peak.value}, {self.average.value}, {self.sustained.value}")


def annual_beam_seconds(plan):
    """年度可用束流时间：(小时数 × 份额 − 竞争天数 × 24) × 3600 × 运行效率"""
    remaining_hours = plan.machine_hours_per_year * plan.cave_share - plan.competing_days * 24
    if remaining_hours < 0:
        raise PlanValidationError(f"扣除竞争实验后束流时间为负: {remaining_hours} h")
    seconds = remaining_hours * SECONDS_PER_HOUR * plan.operational_efficiency
    logger.debug("年度束流时间 %.0f h -> %.4g s", remaining_hours, seconds)
    return Duration(seconds)


def rate_profile(peak, plan, caps=None):
    """由峰值率和运行计划得到峰值/平均/持续速率，按探测器上限截断"""
    if not isinstance(peak, Rate):
        peak = Rate.events(peak)
    if not peak.value > 0:
        raise PlanValidationError(f"峰值率必须为正: {peak.value}")
    caps = caps or RateCaps()

    if caps.peak_cap is not None and caps.peak_cap < peak:
        logger.warning("峰值率 %.4g/s 被截断到 %.4g/s", peak.value, caps.peak_cap.value)
        peak = caps.peak_cap

    average = peak / plan.peak_to_average
    if caps.avg_cap is not None and caps.avg_cap < average:
        logger.warning("平均率 %.4g/s 被截断到 %.4g/s", average.value, caps.avg_cap.value)
        average = caps.avg_cap

    sustained = average * plan.duty_cycle
    return RateProfile(peak=peak, average=average, sustained=sustained)
