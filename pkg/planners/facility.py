"""
设施级汇总：计算类别矩阵、年内在线需求曲线、Tier0 最小容量与多实验存储演化
"""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.optimize import brentq

from config import PLAN_CONFIG
from planners.errors import ConfigurationError, PlanValidationError
from planners.quantities import DAYS_PER_YEAR, ComputePower, DataVolume
from planners.storage_ledger import archive_series, archive_slope, ledger_series

logger = logging.getLogger(__name__)

COMPUTE_CLASSES = ('I.a', 'I.b', 'I.c', 'I.d', 'II.a', 'II.b')
SCENARIO_KINDS = ('FS+', 'MSVc-parallel', 'MSVc-sequential', 'custom')


@dataclass(frozen=True)
class ExperimentRequirement:
    name: str
    compute: dict
    data_intensive_offline_fraction: float | None = None
    storage_classes: tuple = ()
    window: tuple | None = None  # 年内运行天 [first, last]，含两端
    bandwidth: dict = dataclasses.field(default_factory=dict)
    reconstructed_input: bool = False

    def __post_init__(self):
        unknown = set(self.compute) - set(COMPUTE_CLASSES)
        if unknown:
            raise PlanValidationError(f"{self.name}: 未知的计算类别 {sorted(unknown)}")
        compute = {key: value if isinstance(value, ComputePower) else ComputePower(value)
                   for key, value in self.compute.items()}
        object.__setattr__(self, 'compute', compute)
        fraction = self.data_intensive_offline_fraction
        if fraction is not None and not 0 <= fraction <= 1:
            raise PlanValidationError(f"{self.name}: 数据密集离线比例必须在 [0, 1] 内: {fraction}")
        if self.window is not None:
            first, last = self.window
            if not 1 <= first <= last <= DAYS_PER_YEAR:
                raise PlanValidationError(f"{self.name}: 运行窗口必须在 [1, 365] 内: {self.window}")
            object.__setattr__(self, 'window', (int(first), int(last)))
        object.__setattr__(self, 'storage_classes', tuple(self.storage_classes))

    def hs06(self, compute_class):
        return self.compute.get(compute_class, ComputePower(0)).value

    @property
    def online_days_per_year(self):
        if self.window is None:
            return 0
        return self.window[1] - self.window[0] + 1


@dataclass(frozen=True)
class Scenario:
    name: str
    experiments: tuple
    kind: str = 'custom'
    start_year: int = 2028
    horizon: tuple | None = None

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise PlanValidationError(f"未知的场景类型: {self.kind}")
        object.__setattr__(self, 'experiments', tuple(self.experiments))
        names = [e.name for e in self.experiments]
        duplicated = sorted({n for n in names if names.count(n) > 1})
        if duplicated:
            raise PlanValidationError(f"{self.name}: 实验名称重复 {duplicated}")
        if self.horizon is None:
            object.__setattr__(self, 'horizon', (PLAN_CONFIG['timeline_from'], PLAN_CONFIG['timeline_to']))

    def with_uniform_fraction(self, fraction):
        experiments = [dataclasses.replace(e, data_intensive_offline_fraction=fraction)
                       for e in self.experiments]
        return dataclasses.replace(self, experiments=experiments)


@dataclass(frozen=True)
class ComputeAggregate:
    matrix: pd.DataFrame
    totals: pd.Series
    shares: pd.DataFrame

    @property
    def iia_total(self):
        return ComputePower(self.totals['II.a'])

    @property
    def iib_total(self):
        return ComputePower(self.totals['II.b'])


@dataclass(frozen=True)
class OnlineProfile:
    demand: np.ndarray  # 第 d 天 (1..365) 存于下标 d-1
    maximum: ComputePower
    average: ComputePower


@dataclass(frozen=True)
class Tier0Minimum:
    hs06: ComputePower
    fraction: float
    total_capacity: ComputePower
    online_maximum: ComputePower
    online_average: ComputePower


@dataclass(frozen=True)
class StorageEvolution:
    disk: object
    archive: object
    by_experiment: pd.DataFrame
    saturation: DataVolume
    archive_slope_pb_per_year: float


@dataclass(frozen=True)
class ScenarioResult:
    scenario: Scenario
    compute: ComputeAggregate
    profile: OnlineProfile
    tier0: Tier0Minimum
    storage: StorageEvolution


def aggregate_compute(scenario):
    """实验 × 计算类别矩阵，列合计与各实验在类别中的份额"""
    matrix = pd.DataFrame(
        [[e.hs06(c) for c in COMPUTE_CLASSES] for e in scenario.experiments],
        index=pd.Index([e.name for e in scenario.experiments], name='experiment'),
        columns=list(COMPUTE_CLASSES),
        dtype=float,
    )
    totals = matrix.sum(axis=0)
    shares = matrix.div(totals.where(totals > 0), axis=1).fillna(0.0)
    logger.info("%s: II.a %.0f, II.b %.0f HS06", scenario.name, totals['II.a'], totals['II.b'])
    return ComputeAggregate(matrix=matrix, totals=totals, shares=shares)


def online_profile(scenario):
    """逐日叠加处于运行窗口内的实验的 II.b 需求"""
    demand = np.zeros(DAYS_PER_YEAR)
    for experiment in scenario.experiments:
        iib = experiment.hs06('II.b')
        if iib == 0:
            continue
        if experiment.window is None:
            raise ConfigurationError(f"{scenario.name}: 实验 {experiment.name} 有 II.b 需求但没有运行窗口")
        first, last = experiment.window
        demand[first - 1:last] += iib
    return OnlineProfile(
        demand=demand,
        maximum=ComputePower(demand.max()),
        average=ComputePower(demand.mean()),
    )


def tier0_minimum(scenario):
    """
    Tier0 至少要容纳在线峰值加上数据密集的离线部分

    总容量 = II.a 合计 + 全年平均后的在线需求
    """
    missing = [e.name for e in scenario.experiments
               if e.hs06('II.a') > 0 and e.data_intensive_offline_fraction is None]
    if missing:
        raise ConfigurationError(f"{scenario.name}: 缺少 data_intensive_offline_fraction: {missing}")

    profile = online_profile(scenario)
    offline = sum(e.hs06('II.a') * (e.data_intensive_offline_fraction or 0.0)
                  for e in scenario.experiments)
    iia_total = sum(e.hs06('II.a') for e in scenario.experiments)
    hs06 = profile.maximum.value + offline
    total = iia_total + profile.average.value
    fraction = hs06 / total if total else 0.0
    return Tier0Minimum(
        hs06=ComputePower(hs06),
        fraction=fraction,
        total_capacity=ComputePower(total),
        online_maximum=profile.maximum,
        online_average=profile.average,
    )


def solve_uniform_fraction(scenario, target):
    """反解对所有实验统一的数据密集离线比例，使 Tier0 份额等于 target"""
    def gap(fraction):
        return tier0_minimum(scenario.with_uniform_fraction(fraction)).fraction - target

    low, high = gap(0.0), gap(1.0)
    if low > 0 or high < 0:
        raise PlanValidationError(
            f"{scenario.name}: 目标份额 {target:.1%} 不在可达范围 "
            f"[{low + target:.1%}, {high + target:.1%}] 内")
    if low == 0:
        return 0.0
    if high == 0:
        return 1.0
    fraction = brentq(gap, 0.0, 1.0, xtol=1e-12)
    logger.info("%s: 统一比例 %.4f -> Tier0 %.1f%%", scenario.name, fraction, target * 100)
    return fraction


def _prefixed(experiment):
    return [dataclasses.replace(c, name=f"{experiment.name}/{c.name}") for c in experiment.storage_classes]


def storage_evolution(scenario, horizon=None):
    """各实验存储类别堆叠后的磁盘占用与累计归档"""
    horizon = horizon or scenario.horizon
    classes = [c for e in scenario.experiments for c in _prefixed(e)]
    disk = ledger_series(classes, horizon)
    archive = archive_series(classes, horizon)

    owners = {f"{e.name}/{c.name}": e.name for e in scenario.experiments for c in e.storage_classes}
    by_experiment = disk.to_frame('P').T.groupby(lambda column: owners[column], sort=False).sum().T
    by_experiment = by_experiment.reindex(
        columns=[e.name for e in scenario.experiments if e.name in by_experiment.columns])

    # 斜率取场景起始年之后的前几年
    year_from = max(scenario.start_year, int(horizon[0]))
    year_to = min(year_from + PLAN_CONFIG['archive_slope_years'], int(horizon[1]))
    slope = archive_slope(archive, year_from, year_to) / 1e15 if year_to > year_from else 0.0
    saturation = disk.saturation()
    logger.info("%s: 磁盘饱和 %s, 归档斜率 %.2f PB/年", scenario.name, saturation, slope)
    return StorageEvolution(
        disk=disk,
        archive=archive,
        by_experiment=by_experiment,
        saturation=saturation,
        archive_slope_pb_per_year=slope,
    )


def evaluate_scenario(scenario, horizon=None):
    return ScenarioResult(
        scenario=scenario,
        compute=aggregate_compute(scenario),
        profile=online_profile(scenario),
        tier0=tier0_minimum(scenario),
        storage=storage_evolution(scenario, horizon),
    )


def evaluate_scenarios(scenarios, n_jobs=None, horizon=None):
    """并行评估多个场景；评估是纯函数，结果与顺序评估相同"""
    n_jobs = n_jobs or PLAN_CONFIG['n_jobs']
    return Parallel(n_jobs=n_jobs, prefer='threads')(
        delayed(evaluate_scenario)(scenario, horizon) for scenario in scenarios)
