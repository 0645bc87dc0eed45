"""
并行软件触发分支：持续原始数据流 -> 归档数据量、归档带宽、延迟过滤的临时存储
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import pandas as pd

from planners.detector_model import event_size, inspill_data_rate
from planners.errors import PlanValidationError
from planners.quantities import SECONDS_PER_DAY, DataVolume, Duration, Rate, RateDimension

logger = logging.getLogger(__name__)

STORAGE_PLAN_COLUMNS = [
    'setup', 'run', 'run_time_s', 'sustained_data_rate_gb_s', 'trigger',
    'selectivity', 'random_reduction', 'storage_pb', 'storage_bytes',
    'stored_events', 'equivalent_events',
]


@dataclass(frozen=True)
class TriggerBranch:
    name: str
    selectivity: float = 1.0
    random_reduction: float = 1.0
    equivalent_events: float | None = None  # 表格注释，原样透传

    def __post_init__(self):
        if not self.selectivity >= 1:
            raise PlanValidationError(f"{self.name}: 选择性必须 >= 1: {self.selectivity}")
        if not self.random_reduction >= 1:
            raise PlanValidationError(f"{self.name}: 随机压缩因子必须 >= 1: {self.random_reduction}")

    @property
    def total_reduction(self):
        return self.selectivity * self.random_reduction


@dataclass(frozen=True)
class RunPlan:
    name: str
    setup: object
    run_seconds: Duration
    profile: object
    branches: tuple
    compression_factor: float = 1.0

    def __post_init__(self):
        if not isinstance(self.run_seconds, Duration):
            object.__setattr__(self, 'run_seconds', Duration(self.run_seconds))
        if not self.run_seconds.seconds > 0:
            raise PlanValidationError(f"{self.name}: 运行时间必须为正")
        object.__setattr__(self, 'branches', tuple(self.branches))
        if not self.branches:
            raise PlanValidationError(f"{self.name}: 至少需要一个触发分支")
        if not self.compression_factor >= 1:
            raise PlanValidationError(f"{self.name}: 压缩因子必须 >= 1: {self.compression_factor}")


@dataclass(frozen=True)
class BranchStorage:
    branch: TriggerBranch
    volume: DataVolume
    stored_events: float
    output_rate: Rate


@dataclass(frozen=True)
class StoragePlan:
    rows: pd.DataFrame
    total_volume: DataVolume
    total_run_seconds: Duration


@dataclass(frozen=True)
class ArchivalBandwidth:
    average: Rate
    peak: Rate
    contingency: float


@dataclass(frozen=True)
class TransientRequirement:
    volume: DataVolume
    write_bw: Rate
    read_bw: Rate
    first_level_reduction: float
    holding_days: float


def sustained_data_rate(run):
    """持续事件率 × 事件大小"""
    size = event_size(run.setup)
    return Rate(run.profile.sustained.value * size.value_bytes, RateDimension.BYTES)


def _branch_output_rate(run, branch):
    return sustained_data_rate(run) / (branch.total_reduction * run.compression_factor)


def branch_storage(run, branch):
    """一个触发分支在整个运行期写入永久存储的数据量和事件数"""
    uncompressed = sustained_data_rate(run).over(run.run_seconds) / branch.total_reduction
    volume = DataVolume(uncompressed.value_bytes / run.compression_factor, run.setup.convention)
    size = event_size(run.setup)
    stored_events = uncompressed.value_bytes / size.value_bytes if size.value_bytes else 0.0
    return BranchStorage(
        branch=branch,
        volume=volume,
        stored_events=stored_events,
        output_rate=_branch_output_rate(run, branch),
    )


def annual_storage_plan(runs):
    """每个 (运行, 分支) 一行，附合计数据量与合计运行时间"""
    runs = list(runs)
    if not runs:
        raise PlanValidationError("年度存储计划至少需要一个运行")

    rows = []
    total_bytes = 0.0
    total_seconds = 0.0
    for run in runs:
        rate = sustained_data_rate(run)
        total_seconds += run.run_seconds.seconds
        for branch in run.branches:
            stored = branch_storage(run, branch)
            total_bytes += stored.volume.value_bytes
            rows.append({
                'setup': run.setup.name,
                'run': run.name,
                'run_time_s': run.run_seconds.seconds,
                'sustained_data_rate_gb_s': rate.gb_per_s,
                'trigger': branch.name,
                'selectivity': branch.selectivity,
                'random_reduction': branch.random_reduction,
                'storage_pb': stored.volume.to('P'),
                'storage_bytes': stored.volume.value_bytes,
                'stored_events': stored.stored_events,
                'equivalent_events': branch.equivalent_events,
            })
    plan = StoragePlan(
        rows=pd.DataFrame(rows, columns=STORAGE_PLAN_COLUMNS),
        total_volume=DataVolume(total_bytes),
        total_run_seconds=Duration(total_seconds),
    )
    logger.info("年度存储计划: %d 行, 合计 %s", len(rows), plan.total_volume)
    return plan


def archival_bandwidth(run, contingency=1.0):
    """到永久存储的平均带宽（各分支之和）与乘应急系数后的峰值"""
    if not contingency >= 1:
        raise PlanValidationError(f"应急系数必须 >= 1: {contingency}")
    average = sum((_branch_output_rate(run, branch) for branch in run.branches),
                  Rate.bytes_per_second(0))
    return ArchivalBandwidth(average=average, peak=average * contingency, contingency=contingency)


def transient_filter_requirements(run, first_level_reduction, holding_days):
    """延迟事件过滤：容量按束团内数据率，读写带宽按持续数据率"""
    if not first_level_reduction >= 1:
        raise PlanValidationError(f"一级压缩因子必须 >= 1: {first_level_reduction}")
    if not holding_days > 0:
        raise PlanValidationError(f"保存天数必须为正: {holding_days}")

    inspill = inspill_data_rate(run.setup, run.profile)
    volume = DataVolume(
        inspill.value / first_level_reduction * holding_days * SECONDS_PER_DAY,
        run.setup.convention,
    )
    write_bw = sustained_data_rate(run) / first_level_reduction
    return TransientRequirement(
        volume=volume,
        write_bw=write_bw,
        read_bw=write_bw,
        first_level_reduction=first_level_reduction,
        holding_days=holding_days,
    )
