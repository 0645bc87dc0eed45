"""
存储台账：按数据类别的年度流入量和保留年限，计算逐年磁盘占用与累计归档量

年粒度为整数日历年，流入量记在年末，占用在年边界采样；
生产当年算作保留期的第 1 年。
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd

from config import REPORT_CONFIG
from planners.errors import PlanValidationError
from planners.quantities import SECONDS_PER_DAY, ByteConvention, DataVolume, prefix_factor

logger = logging.getLogger(__name__)

PERMANENT = 'permanent'


class StorageKind(str, Enum):
    RAW_DISK = 'raw_disk'
    RAW_ARCHIVE = 'raw_archive'
    SIMULATION = 'simulation'
    DERIVED = 'derived'
    TRANSIENT = 'transient'
    VOLATILE = 'volatile'

    @property
    def is_plateau(self):
        return self in (StorageKind.TRANSIENT, StorageKind.VOLATILE)


@dataclass(frozen=True)
class StorageClass:
    """
    一个数据类别

    inflow_tb_per_year 为常数或从 start_year 起的逐年列表；
    transient/volatile 类别把它解释为运行年份内的恒定占用。
    reprocessing_generations > 1 时所有代的 AOD 都保留（逐年再处理累积）。
    """
    name: str
    kind: StorageKind
    inflow_tb_per_year: float | tuple = 0.0
    retention_years: int | str = PERMANENT
    start_year: int = 2028
    end_year: int | None = None
    convention: ByteConvention = ByteConvention.DECIMAL
    reprocessing_generations: int = 1
    archived: bool = False
    archive_copies: int = 1

    def __post_init__(self):
        object.__setattr__(self, 'kind', StorageKind(self.kind))
        object.__setattr__(self, 'convention', ByteConvention(self.convention))
        if isinstance(self.inflow_tb_per_year, (list, tuple)):
            values = tuple(float(v) for v in self.inflow_tb_per_year)
            if any(not v >= 0 for v in values):
                raise PlanValidationError(f"{self.name}: 年度流入量必须非负")
            object.__setattr__(self, 'inflow_tb_per_year', values)
        elif not self.inflow_tb_per_year >= 0:
            raise PlanValidationError(f"{self.name}: 年度流入量必须非负: {self.inflow_tb_per_year}")
        if self.retention_years != PERMANENT:
            retention = self.retention_years
            if isinstance(retention, bool) or not isinstance(retention, (int, float)) \
                    or int(retention) != retention or retention < 1:
                raise PlanValidationError(
                    f"{self.name}: 保留年限必须为 >= 1 的整数或 'permanent': {self.retention_years}")
        if self.end_year is not None and self.end_year < self.start_year:
            raise PlanValidationError(f"{self.name}: 结束年 {self.end_year} 早于起始年 {self.start_year}")
        if int(self.reprocessing_generations) != self.reprocessing_generations \
                or self.reprocessing_generations < 1:
            raise PlanValidationError(f"{self.name}: 再处理代数必须为 >= 1 的整数")
        if self.archive_copies < 1:
            raise PlanValidationError(f"{self.name}: 归档副本数必须 >= 1")

    @property
    def permanent(self):
        return self.retention_years == PERMANENT

    @property
    def last_year(self):
        """最后一个有流入的年份；None 表示不设上限"""
        if isinstance(self.inflow_tb_per_year, tuple):
            implicit = self.start_year + len(self.inflow_tb_per_year) - 1
            return implicit if self.end_year is None else min(implicit, self.end_year)
        return self.end_year

    @property
    def bytes_per_tb(self):
        return prefix_factor('T', self.convention)

    def inflow(self, year):
        """某年的流入量 (TB，按本类别的字节约定)"""
        last = self.last_year
        if year < self.start_year or (last is not None and year > last):
            return 0.0
        if isinstance(self.inflow_tb_per_year, tuple):
            return self.inflow_tb_per_year[year - self.start_year]
        return float(self.inflow_tb_per_year)


@dataclass(frozen=True)
class DiskSeries:
    """逐年占用，frame 以年份为索引、每个类别一列，单位为字节"""
    frame: pd.DataFrame

    @property
    def years(self):
        return list(self.frame.index)

    @property
    def stacked(self):
        return self.frame.sum(axis=1)

    def saturation(self):
        """时间范围内的最大合计占用"""
        stacked = self.stacked
        return DataVolume(float(stacked.max()) if len(stacked) else 0.0)

    def to_frame(self, prefix='P'):
        return self.frame / prefix_factor(prefix, ByteConvention.DECIMAL)

    def to_records(self, prefix='T'):
        """长表 (year, class, value)，用于导出和绘图"""
        wide = self.to_frame(prefix)
        wide.index.name = 'year'
        long = wide.reset_index().melt(id_vars='year', var_name='class', value_name=f'{prefix}B')
        return long.sort_values(['year', 'class'], kind='stable').reset_index(drop=True)

    def export(self, fmt='csv', prefix='T'):
        records = self.to_records(prefix)
        if fmt == 'csv':
            return records.to_csv(index=False, lineterminator=REPORT_CONFIG['line_terminator'])
        if fmt == 'json':
            payload = [
                {'year': int(row['year']), 'class': row['class'], f'{prefix}B': float(row[f'{prefix}B'])}
                for _, row in records.iterrows()
            ]
            return json.dumps(payload, ensure_ascii=False, indent=2) + '\n'
        raise PlanValidationError(f"不支持的导出格式: {fmt}")


def _horizon_years(horizon):
    year_from, year_to = (int(y) for y in horizon)
    if year_to < year_from:
        raise PlanValidationError(f"时间范围为空: {year_from}-{year_to}")
    return np.arange(year_from, year_to + 1)


def _cumulative_min(n, generations):
    """Σ_{j=1..n} min(j, g)"""
    n = np.maximum(n, 0)
    below = n * (n + 1) / 2
    above = generations * (generations + 1) / 2 + (n - generations) * generations
    return np.where(n <= generations, below, above)


def reprocessed_accumulation(annual_tb, generations, data_taking_years, horizon, start_year=None):
    """
    每年的新数据集在随后 generations-1 年各再处理一次，所有代都保留

    返回按年份索引的累计量 (与 annual_tb 同单位)。第 t 年 (从 0 计) 数据集 s 的副本数为
    min(t - s + 1, g)，对 s ≤ min(t, D-1) 求和即得闭式解。
    """
    if isinstance(generations, bool) or int(generations) != generations or generations < 1:
        raise PlanValidationError(f"代数必须为 >= 1 的整数: {generations}")
    if int(data_taking_years) != data_taking_years or data_taking_years < 0:
        raise PlanValidationError(f"取数年数必须为非负整数: {data_taking_years}")
    if not annual_tb >= 0:
        raise PlanValidationError(f"年度数据量必须非负: {annual_tb}")

    years = _horizon_years(horizon)
    start = years[0] if start_year is None else int(start_year)
    t = years - start
    last = np.minimum(t, data_taking_years - 1)
    # j = t - s + 1 取值范围 [t - last + 1, t + 1]
    copies = _cumulative_min(t + 1, generations) - _cumulative_min(t - last, generations)
    copies = np.where((t >= 0) & (last >= 0), copies, 0.0)
    return pd.Series(annual_tb * copies, index=pd.Index(years, name='year'), dtype=float)


def _class_usage_tb(storage_class, years):
    """单个类别逐年占用 (TB)"""
    if storage_class.kind.is_plateau:
        return np.array([storage_class.inflow(int(y)) for y in years])

    if storage_class.reprocessing_generations > 1:
        last = storage_class.last_year
        if last is None:
            last = int(years[-1])
        if isinstance(storage_class.inflow_tb_per_year, tuple):
            raise PlanValidationError(f"{storage_class.name}: 再处理累积只支持常数年度流入")
        series = reprocessed_accumulation(
            storage_class.inflow_tb_per_year,
            storage_class.reprocessing_generations,
            max(last - storage_class.start_year + 1, 0),
            (int(years[0]), int(years[-1])),
            start_year=storage_class.start_year,
        )
        return series.to_numpy()

    inflows = np.array([storage_class.inflow(int(y)) for y in range(storage_class.start_year, int(years[-1]) + 1)])
    cumulative = np.concatenate([[0.0], np.cumsum(inflows)])
    usage = np.zeros(len(years))
    for i, year in enumerate(years):
        if year < storage_class.start_year:
            continue
        upto = int(year) - storage_class.start_year + 1
        if storage_class.permanent:
            since = 0
        else:
            since = max(0, upto - int(storage_class.retention_years))
        usage[i] = cumulative[upto] - cumulative[since]
    return usage


def _frame(columns, years):
    return pd.DataFrame(columns, index=pd.Index(years, name='year'), dtype=float)


def _column_names(classes):
    names = [c.name for c in classes]
    if len(set(names)) != len(names):
        raise PlanValidationError(f"类别名称重复: {names}")
    return names


def ledger_series(classes, horizon):
    """
    磁盘占用：usage(y) = Σ_类别 Σ inflow(y')，y' ∈ [max(start, y−r+1), min(y, end)]

    raw_archive 类别不占磁盘，由 archive_series 处理。
    """
    years = _horizon_years(horizon)
    classes = [c for c in classes if c.kind is not StorageKind.RAW_ARCHIVE]
    names = _column_names(classes)
    columns = {name: _class_usage_tb(c, years) * c.bytes_per_tb for name, c in zip(names, classes)}
    series = DiskSeries(_frame(columns, years) if columns else _frame({}, years))
    logger.debug("磁盘占用 %d-%d: %d 个类别, 峰值 %s",
                 years[0], years[-1], len(classes), series.saturation())
    return series


def archive_series(classes, horizon):
    """raw_archive 与标记 archived 的类别的累计归档量；副本数只作为元数据"""
    years = _horizon_years(horizon)
    classes = [c for c in classes if c.kind is StorageKind.RAW_ARCHIVE or c.archived]
    names = _column_names(classes)
    columns = {}
    for name, storage_class in zip(names, classes):
        # 时间范围之前的流入也计入累计量
        first = min(storage_class.start_year, int(years[0]))
        inflows = np.array([storage_class.inflow(y) for y in range(first, int(years[-1]) + 1)])
        cumulative = np.cumsum(inflows)[int(years[0]) - first:]
        columns[name] = cumulative * storage_class.bytes_per_tb
    return DiskSeries(_frame(columns, years) if columns else _frame({}, years))


def archive_slope(series, year_from=None, year_to=None):
    """年均归档增量 (字节/年)"""
    stacked = series.stacked
    year_from = stacked.index[0] if year_from is None else year_from
    year_to = stacked.index[-1] if year_to is None else year_to
    if year_to <= year_from:
        raise PlanValidationError(f"斜率区间无效: {year_from}-{year_to}")
    return (stacked.loc[year_to] - stacked.loc[year_from]) / (year_to - year_from)


def derived_volume(raw_volume, aod_fraction):
    """AOD 体积按原始数据的比例估计"""
    if not 0 <= aod_fraction <= 1:
        raise PlanValidationError(f"AOD 比例必须在 [0, 1] 内: {aod_fraction}")
    return raw_volume * aod_fraction


def simulated_mc_volume(events, mc_event_size, stored_fraction):
    """模拟事件中保存 MC 真值的部分"""
    if not events >= 0:
        raise PlanValidationError(f"事件数必须非负: {events}")
    if not 0 <= stored_fraction <= 1:
        raise PlanValidationError(f"保存比例必须在 [0, 1] 内: {stored_fraction}")
    return mc_event_size * (events * stored_fraction)


# 汇总表按 1000 TB = 1 PB 换算，TB 本身沿用逐级表的字节约定
TB_PER_PB = 1000

FILE_SIZE_COLUMNS = ['stage', 'event_kb', 'per_second_mb', 'per_year_tb']
SUMMARY_COLUMNS = ['category', 'min_increase_pb', 'max_increase_pb', 'years', 'total_pb']


@dataclass(frozen=True)
class SummaryCategory:
    """
    一类需要存储的数据

    stages 中各处理阶段的年数据量之和乘以 event_multiplier (模拟事件数与实测之比)
    即为每年新增量，持续 years 年；generations > 1 时每年的数据集在随后几年再处理，
    所有代都保留。
    """
    name: str
    stages: tuple
    years: int
    generations: int = 1
    event_multiplier: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'stages', tuple(self.stages))
        if not self.stages:
            raise PlanValidationError(f"{self.name}: 至少需要一个处理阶段")
        for label, value in (('年数', self.years), ('代数', self.generations)):
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise PlanValidationError(f"{self.name}: {label}必须为 >= 1 的整数: {value}")
        if not self.event_multiplier > 0:
            raise PlanValidationError(f"{self.name}: 事件倍数必须为正: {self.event_multiplier}")


@dataclass(frozen=True)
class FileSizeEstimate:
    """逐处理阶段的每事件大小 -> 每秒与每年的数据量，以及按数据类别汇总的存储需求"""
    name: str
    stages: tuple  # ((阶段名, 每事件 kB), ...)
    event_rate: float
    effective_days: float
    categories: tuple = ()
    convention: ByteConvention = ByteConvention.BINARY

    def __post_init__(self):
        object.__setattr__(self, 'convention', ByteConvention(self.convention))
        object.__setattr__(self, 'stages', tuple((str(n), float(kb)) for n, kb in self.stages))
        object.__setattr__(self, 'categories', tuple(self.categories))
        if not self.stages:
            raise PlanValidationError(f"{self.name}: 至少需要一个处理阶段")
        if not self.event_rate > 0:
            raise PlanValidationError(f"{self.name}: 事件率必须为正: {self.event_rate}")
        if not 0 < self.effective_days <= 366:
            raise PlanValidationError(f"{self.name}: 有效天数必须在 (0, 366] 内: {self.effective_days}")
        names = [n for n, _ in self.stages]
        if len(set(names)) != len(names):
            raise PlanValidationError(f"{self.name}: 处理阶段名称重复: {names}")
        if any(not kb >= 0 for _, kb in self.stages):
            raise PlanValidationError(f"{self.name}: 每事件大小必须非负")
        for category in self.categories:
            unknown = sorted(set(category.stages) - set(names))
            if unknown:
                raise PlanValidationError(f"{self.name}/{category.name}: 未知的处理阶段 {unknown}")

    @property
    def seconds_per_year(self):
        return self.effective_days * SECONDS_PER_DAY

    def stage_table(self):
        """每事件 kB、每秒 MB、每年 TB，均按本估算的字节约定"""
        frame = pd.DataFrame(self.stages, columns=['stage', 'event_kb'])
        per_second = frame['event_kb'] * prefix_factor('k', self.convention) * self.event_rate
        frame['per_second_mb'] = per_second / prefix_factor('M', self.convention)
        frame['per_year_tb'] = per_second * self.seconds_per_year / prefix_factor('T', self.convention)
        return frame[FILE_SIZE_COLUMNS]

    def annual_tb(self, category):
        per_year = self.stage_table().set_index('stage')['per_year_tb']
        return float(per_year.loc[list(category.stages)].sum()) * category.event_multiplier

    def summary_table(self):
        rows = []
        for category in self.categories:
            annual = self.annual_tb(category)
            if category.generations == 1:
                increments = np.full(category.years, annual)
            else:
                span = category.years + category.generations - 1
                stored = reprocessed_accumulation(annual, category.generations, category.years,
                                                  (0, span - 1), start_year=0).to_numpy()
                increments = np.diff(stored, prepend=0.0)
            rows.append({
                'category': category.name,
                'min_increase_pb': increments[increments > 0].min() / TB_PER_PB if annual else 0.0,
                'max_increase_pb': increments.max() / TB_PER_PB,
                'years': len(increments),
                'total_pb': increments.sum() / TB_PER_PB,
            })
        logger.debug("%s: %d 个处理阶段, %d 个数据类别", self.name, len(self.stages), len(rows))
        return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
