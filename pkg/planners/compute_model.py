"""
在线/离线 HEPSpec06 需求：每事件处理时间、参考机器标定与计算活动假设
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import pandas as pd

from config import TOLERANCE_CONFIG
from planners.errors import PlanValidationError
from planners.quantities import SECONDS_PER_DAY, ComputePower, Rate, RateDimension, hs06_scale_by_clock

logger = logging.getLogger(__name__)


def _hs06(value):
    if value is None or isinstance(value, ComputePower):
        return value
    return ComputePower(value)


@dataclass(frozen=True)
class ReferenceMachine:
    """参考机器；hs06_total 与 hs06_per_core 至少给一个，另一个由核数推出"""
    name: str
    cores: int
    clock_mhz: float
    hs06_total: ComputePower | None = None
    hs06_per_core: ComputePower | None = None

    def __post_init__(self):
        if isinstance(self.cores, bool) or int(self.cores) != self.cores or self.cores <= 0:
            raise PlanValidationError(f"{self.name}: 核数必须为正整数: {self.cores}")
        if not self.clock_mhz > 0:
            raise PlanValidationError(f"{self.name}: 时钟频率必须为正: {self.clock_mhz}")
        total = _hs06(self.hs06_total)
        per_core = _hs06(self.hs06_per_core)
        if total is None and per_core is None:
            raise PlanValidationError(f"{self.name}: 需要 hs06_total 或 hs06_per_core")
        if total is None:
            total = per_core * self.cores
        elif per_core is None:
            per_core = total / self.cores
        else:
            tolerance = TOLERANCE_CONFIG['reference_machine_rel']
            expected = per_core.value * self.cores
            if not math.isclose(expected, total.value, rel_tol=tolerance):
                raise PlanValidationError(
                    f"{self.name}: {per_core.value} HS06/核 × {self.cores} 核 = {expected:.1f}"
                    f" 与 hs06_total {total.value:.1f} 相差超过 {tolerance:.0%}")
        object.__setattr__(self, 'hs06_total', total)
        object.__setattr__(self, 'hs06_per_core', per_core)

    @classmethod
    def calibrated(cls, name, cores, clock_mhz, calibration_hs06, calibration_clock_mhz):
        """用同架构另一时钟频率机器的 HS06 标定值推算"""
        total = hs06_scale_by_clock(ComputePower(calibration_hs06), calibration_clock_mhz, clock_mhz)
        logger.debug("%s: 标定 %.1f HS06 @ %s MHz -> %.1f HS06 @ %s MHz",
                     name, calibration_hs06, calibration_clock_mhz, total.value, clock_mhz)
        return cls(name=name, cores=cores, clock_mhz=clock_mhz, hs06_total=total)


@dataclass(frozen=True)
class ProcessingStage:
    name: str
    seconds_per_event: float

    def __post_init__(self):
        if not self.seconds_per_event > 0:
            raise PlanValidationError(f"{self.name}: 每事件处理时间必须为正")


@dataclass(frozen=True)
class Campaign:
    name: str
    events: float
    hs06_per_event: float
    active_days: float
    cpu_efficiency: float
    generations: int = 1

    def __post_init__(self):
        if not self.events >= 0:
            raise PlanValidationError(f"{self.name}: 事件数必须非负")
        if not self.hs06_per_event >= 0:
            raise PlanValidationError(f"{self.name}: 每事件 HS06 必须非负")
        if not self.active_days > 0:
            raise PlanValidationError(f"{self.name}: 有效天数必须为正")
        if not 0 < self.cpu_efficiency <= 1:
            raise PlanValidationError(f"{self.name}: CPU 效率必须在 (0, 1] 内: {self.cpu_efficiency}")
        if isinstance(self.generations, bool) or int(self.generations) != self.generations \
                or self.generations < 1:
            raise PlanValidationError(f"{self.name}: 处理代数必须为 >= 1 的整数")


@dataclass(frozen=True)
class OnlineCompute:
    cores: float
    nodes: float
    nodes_ceiled: int
    hs06: ComputePower
    events_per_node: float


@dataclass(frozen=True)
class CampaignCompute:
    hs06_per_generation: ComputePower
    hs06_per_year: ComputePower


@dataclass(frozen=True)
class SimulationCompute:
    cores: float
    hs06: ComputePower


def stage_sum(stages, names):
    """按名称累加各处理阶段的每事件时间"""
    lookup = {stage.name: stage.seconds_per_event for stage in stages}
    missing = [name for name in names if name not in lookup]
    if missing:
        raise PlanValidationError(f"未知的处理阶段: {missing}")
    return sum(lookup[name] for name in names)


def throughput(seconds_per_event, cores):
    """单台机器每秒可处理的事件数"""
    if not seconds_per_event > 0:
        raise PlanValidationError(f"每事件时间必须为正: {seconds_per_event}")
    return cores / seconds_per_event


def online_reco_time(l1_seconds, full_reco_factor, momentum_factor):
    """L1 时间 × 全重建系数 / 束流动量系数"""
    for name, value in (('L1 时间', l1_seconds), ('全重建系数', full_reco_factor),
                        ('动量系数', momentum_factor)):
        if not value > 0:
            raise PlanValidationError(f"{name}必须为正: {value}")
    return l1_seconds * full_reco_factor / momentum_factor


def online_compute_requirement(sustained, t_event, machine):
    """实时处理持续事件率所需的核数、节点数和 HS06（HS06 按未取整节点数计）"""
    if not isinstance(sustained, Rate):
        sustained = Rate.events(sustained)
    if sustained.dimension is not RateDimension.EVENTS:
        raise PlanValidationError("在线计算需要事件率")
    if not t_event > 0:
        raise PlanValidationError(f"每事件时间必须为正: {t_event}")

    cores = sustained.value * t_event
    nodes = cores / machine.cores
    hs06 = machine.hs06_total * nodes
    logger.info("在线计算: %.0f 核, %.1f 节点, %.1f kHS06", cores, nodes, hs06.khs06)
    return OnlineCompute(
        cores=cores,
        nodes=nodes,
        nodes_ceiled=math.ceil(nodes),
        hs06=hs06,
        events_per_node=throughput(t_event, machine.cores),
    )


def hs06_per_event(t_event, hs06_per_core):
    """每事件 HS06·s：时间 × 每核 HS06，对阶段可加"""
    if isinstance(hs06_per_core, ComputePower):
        hs06_per_core = hs06_per_core.value
    if not t_event >= 0:
        raise PlanValidationError(f"每事件时间必须非负: {t_event}")
    return t_event * hs06_per_core


def campaign_hs06(campaign):
    """每代 = 事件数 × HS06/事件 / (有效天数 × 86400 × 效率)；每年 = 每代 × 代数"""
    wall = campaign.active_days * SECONDS_PER_DAY * campaign.cpu_efficiency
    per_generation = ComputePower(campaign.events * campaign.hs06_per_event / wall)
    return CampaignCompute(
        hs06_per_generation=per_generation,
        hs06_per_year=per_generation * campaign.generations,
    )


def campaign_table(campaigns):
    """按计算活动列出每代与每年的 HS06"""
    rows = []
    for campaign in campaigns:
        result = campaign_hs06(campaign)
        rows.append({
            'campaign': campaign.name,
            'events_per_year': campaign.events,
            'hs06_per_event': campaign.hs06_per_event,
            'hs06_seconds': campaign.events * campaign.hs06_per_event,
            'cpu_efficiency': campaign.cpu_efficiency,
            'hs06_per_generation': result.hs06_per_generation.value,
            'generations': campaign.generations,
            'hs06_per_year': result.hs06_per_year.value,
        })
    return pd.DataFrame(rows, columns=[
        'campaign', 'events_per_year', 'hs06_per_event', 'hs06_seconds',
        'cpu_efficiency', 'hs06_per_generation', 'generations', 'hs06_per_year',
    ])


def simulation_compute_requirement(events_per_year, sec_per_event, machine, wall_days):
    """在 wall_days 内连续处理 events_per_year 个事件所需的核数与 HS06"""
    if not events_per_year >= 0:
        raise PlanValidationError(f"事件数必须非负: {events_per_year}")
    if not sec_per_event >= 0:
        raise PlanValidationError(f"每事件时间必须非负: {sec_per_event}")
    if not wall_days > 0:
        raise PlanValidationError(f"墙钟天数必须为正: {wall_days}")
    cores = events_per_year * sec_per_event / (wall_days * SECONDS_PER_DAY)
    return SimulationCompute(cores=cores, hs06=machine.hs06_per_core * cores)


def offline_total(sim_hs06, reco_hs06, analysis_fraction_of_sim):
    """离线总需求 = 模拟 + 重建 + 分析（按模拟的比例）"""
    sim_hs06 = _hs06(sim_hs06)
    reco_hs06 = _hs06(reco_hs06)
    if not 0 <= analysis_fraction_of_sim <= 1:
        raise PlanValidationError(f"分析比例必须在 [0, 1] 内: {analysis_fraction_of_sim}")
    return sim_hs06 + reco_hs06 + sim_hs06 * analysis_fraction_of_sim


def analysis_fraction_for_simulation_share(sim_share, sim_hs06, reco_hs06=0.0):
    """offline_total 的反解：给定模拟占总量的份额，求分析比例"""
    sim_hs06 = _hs06(sim_hs06)
    reco_hs06 = _hs06(reco_hs06)
    if not 0 < sim_share <= 1:
        raise PlanValidationError(f"模拟份额必须在 (0, 1] 内: {sim_share}")
    if sim_hs06.value == 0:
        raise PlanValidationError("模拟算力为零，无法反解分析比例")
    total = sim_hs06.value / sim_share
    fraction = (total - sim_hs06.value - reco_hs06.value) / sim_hs06.value
    if fraction < 0:
        raise PlanValidationError(f"重建算力已超出给定份额，分析比例为负: {fraction:.3f}")
    return fraction
