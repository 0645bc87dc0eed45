"""
探测器组合 (setup) 的原始事件大小、束团内数据率与到计算中心的带宽需求
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import pandas as pd

from config import PLAN_CONFIG
from planners.beamline import RateCaps
from planners.errors import PlanValidationError
from planners.quantities import ByteConvention, DataVolume, Rate, RateDimension

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DetectorContribution:
    name: str
    messages_per_event: float
    bytes_per_message: int

    def __post_init__(self):
        if not self.messages_per_event >= 0:
            raise PlanValidationError(f"{self.name}: 每事件消息数必须非负")
        if isinstance(self.bytes_per_message, bool) or int(self.bytes_per_message) != self.bytes_per_message \
                or self.bytes_per_message <= 0:
            raise PlanValidationError(f"{self.name}: 每消息字节数必须为正整数: {self.bytes_per_message}")

    @property
    def bytes_per_event(self):
        return self.messages_per_event * self.bytes_per_message


@dataclass(frozen=True)
class Setup:
    name: str
    contributions: tuple = ()
    rate_caps: RateCaps | None = None
    energy_scale_factor: float = 1.0
    convention: ByteConvention = ByteConvention.DECIMAL

    def __post_init__(self):
        if not self.name or not str(self.name).strip():
            raise PlanValidationError("setup 名称不能为空")
        if not 0 < self.energy_scale_factor <= 1:
            raise PlanValidationError(
                f"{self.name}: 能量缩放因子必须在 (0, 1] 内: {self.energy_scale_factor}")
        object.__setattr__(self, 'contributions', tuple(self.contributions))

    def with_energy_scale(self, factor):
        """换一个能量缩放因子（如 4A GeV/c 时为 0.7）"""
        return Setup(self.name, self.contributions, self.rate_caps, factor, self.convention)


@dataclass(frozen=True)
class BandwidthRequirement:
    base: Rate
    upper_limit: Rate
    requirement: Rate
    noise_fraction: float
    contingency: float


def event_size(setup):
    """Σ 消息数 × 每消息字节数，再乘能量缩放因子；容器开销忽略"""
    total = sum(c.bytes_per_event for c in setup.contributions)
    return DataVolume(total * setup.energy_scale_factor, setup.convention)


def event_size_breakdown(setup):
    """逐系统的事件大小表，末行为合计"""
    rows = []
    for contribution in setup.contributions:
        size = DataVolume(contribution.bytes_per_event * setup.energy_scale_factor, setup.convention)
        rows.append({
            'system': contribution.name,
            'messages': contribution.messages_per_event,
            'bytes_per_message': contribution.bytes_per_message,
            'event_size_kb': size.kb,
        })
    rows.append({
        'system': 'Total',
        'messages': None,
        'bytes_per_message': None,
        'event_size_kb': event_size(setup).kb,
    })
    return pd.DataFrame(rows, columns=['system', 'messages', 'bytes_per_message', 'event_size_kb'])


def inspill_data_rate(setup, profile):
    """平均（束团内）事件率 × 事件大小；占空比平均在计算中心之后才发生"""
    size = event_size(setup)
    return Rate(profile.average.value * size.value_bytes, RateDimension.BYTES)


def data_rate_table(entries):
    """entries: [(setup, profile), ...] -> 到计算中心的数据率表"""
    rows = []
    for setup, profile in entries:
        rate = inspill_data_rate(setup, profile)
        rows.append({
            'setup': setup.name,
            'average_interaction_rate': profile.average.value,
            'data_rate_gb_s': rate.gb_per_s,
        })
    return pd.DataFrame(rows, columns=['setup', 'average_interaction_rate', 'data_rate_gb_s'])


def gc_bandwidth_requirement(base, noise_fraction=None, contingency=1.0):
    """噪声开销后的上限，再乘应急系数得到带宽需求"""
    if noise_fraction is None:
        noise_fraction = PLAN_CONFIG['default_noise_fraction']
    if not isinstance(base, Rate):
        base = Rate.bytes_per_second(base)
    if base.dimension is not RateDimension.BYTES:
        raise PlanValidationError("带宽计算需要数据率 (bytes/s)")
    if not noise_fraction >= 0:
        raise PlanValidationError(f"噪声比例必须非负: {noise_fraction}")
    if not contingency >= 1:
        raise PlanValidationError(f"应急系数必须 >= 1: {contingency}")

    upper_limit = base * (1 + noise_fraction)
    requirement = upper_limit * contingency
    logger.debug("带宽: 基础 %s, 上限 %s, 需求 %s", base, upper_limit, requirement)
    return BandwidthRequirement(base, upper_limit, requirement, noise_fraction, contingency)
