"""
场景文件的 pydantic 模型

各节均为按名称索引的映射；未知键一律拒绝 (extra="forbid")，
校验错误带有文档路径，由 scenario_loader 补上行号。
"""
from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from config import PLAN_CONFIG

ComputeClassName = Literal['I.a', 'I.b', 'I.c', 'I.d', 'II.a', 'II.b']
StorageKindName = Literal['raw_disk', 'raw_archive', 'simulation', 'derived', 'transient', 'volatile']
ConventionName = Literal['decimal', 'binary']
ScenarioKindName = Literal['FS+', 'MSVc-parallel', 'MSVc-sequential', 'custom']


class StrictModel(BaseModel):
    model_config = ConfigDict(extra='forbid', allow_inf_nan=False)


class MachinePlanModel(StrictModel):
    machine_hours_per_year: float = Field(ge=0)
    cave_share: float = Field(gt=0, le=1)
    competing_days: float = Field(default=0.0, ge=0)
    duty_cycle: float = Field(gt=0, le=1)
    peak_to_average: float = Field(ge=1)
    operational_efficiency: float = Field(default=1.0, gt=0, le=1)

    @model_validator(mode='after')
    def _competitors_fit(self):
        if self.competing_days * 24 > self.machine_hours_per_year * self.cave_share:
            raise ValueError('competing_days 超过实验厅可用时间')
        return self


class CalibrationModel(StrictModel):
    hs06: float = Field(gt=0)
    clock_mhz: float = Field(gt=0)


class ReferenceMachineModel(StrictModel):
    cores: int = Field(gt=0)
    clock_mhz: float = Field(gt=0)
    hs06_total: Optional[float] = Field(default=None, gt=0)
    hs06_per_core: Optional[float] = Field(default=None, gt=0)
    calibration: Optional[CalibrationModel] = None

    @model_validator(mode='after')
    def _has_power(self):
        if self.hs06_total is None and self.hs06_per_core is None and self.calibration is None:
            raise ValueError('需要 hs06_total、hs06_per_core 或 calibration 之一')
        if self.calibration is not None and self.hs06_total is not None:
            raise ValueError('calibration 与 hs06_total 不能同时给出')
        return self


class ContributionModel(StrictModel):
    name: str = Field(min_length=1)
    messages_per_event: float = Field(ge=0)
    bytes_per_message: int = Field(gt=0)


class RateCapsModel(StrictModel):
    peak_cap: Optional[float] = Field(default=None, gt=0)
    avg_cap: Optional[float] = Field(default=None, gt=0)


class SetupModel(StrictModel):
    contributions: list[ContributionModel] = Field(default_factory=list)
    energy_scale_factor: float = Field(default=1.0, gt=0, le=1)
    rate_caps: Optional[RateCapsModel] = None
    convention: ConventionName = 'decimal'


class BranchModel(StrictModel):
    name: str = Field(min_length=1)
    selectivity: float = Field(default=1.0, ge=1)
    random_reduction: float = Field(default=1.0, ge=1)
    equivalent_events: Optional[float] = Field(default=None, ge=0)


class RunModel(StrictModel):
    setup: str
    machine_plan: str
    peak_rate: float = Field(gt=0)
    run_seconds: Optional[float] = Field(default=None, gt=0)  # 缺省为整年束流时间
    branches: list[BranchModel] = Field(min_length=1)
    compression_factor: float = Field(default=1.0, ge=1)


class BandwidthBudgetModel(StrictModel):
    run: str
    noise_fraction: Optional[float] = Field(default=None, ge=0)
    contingency: float = Field(default=1.0, ge=1)
    fibers: Optional[int] = Field(default=None, gt=0)


class ArchivalBudgetModel(StrictModel):
    run: str
    contingency: float = Field(default=1.0, ge=1)


class TransientFilterModel(StrictModel):
    run: str
    first_level_reduction: float = Field(ge=1)
    holding_days: float = Field(gt=0)


class OnlineComputeModel(StrictModel):
    run: str
    l1_seconds: float = Field(gt=0)
    full_reco_factor: float = Field(default=1.0, gt=0)
    momentum_factor: float = Field(default=1.0, gt=0)
    machine: str


class CampaignModel(StrictModel):
    events: float = Field(ge=0)
    seconds_per_event: Optional[float] = Field(default=None, gt=0)
    stages: Optional[list[str]] = None
    machine: str
    active_days: float = Field(gt=0, le=366)
    cpu_efficiency: float = Field(gt=0, le=1)
    generations: int = Field(default=1, ge=1)

    @model_validator(mode='after')
    def _one_time_source(self):
        if (self.seconds_per_event is None) == (self.stages is None):
            raise ValueError('seconds_per_event 与 stages 必须且只能给出一个')
        return self


class SimulationBudgetModel(StrictModel):
    events_per_year: float = Field(ge=0)
    seconds_per_event: float = Field(ge=0)
    machine: str
    wall_days: float = Field(gt=0)


class OfflineEstimateModel(StrictModel):
    simulation: str
    reconstruction: Optional[str] = None
    reconstruction_hs06: float = Field(default=0.0, ge=0)
    analysis_fraction_of_sim: float = Field(ge=0, le=1)


class StorageClassModel(StrictModel):
    name: str = Field(min_length=1)
    kind: StorageKindName
    inflow_tb_per_year: Union[float, list[float]] = 0.0
    retention_years: Union[Literal['permanent'], int] = 'permanent'
    start_year: Optional[int] = None  # 缺省为场景起始年
    end_year: Optional[int] = None
    convention: ConventionName = 'decimal'
    reprocessing_generations: int = Field(default=1, ge=1)
    archived: bool = False
    archive_copies: int = Field(default=1, ge=1)

    @model_validator(mode='after')
    def _check(self):
        inflows = self.inflow_tb_per_year if isinstance(self.inflow_tb_per_year, list) \
            else [self.inflow_tb_per_year]
        if any(v < 0 for v in inflows):
            raise ValueError('inflow_tb_per_year 必须非负')
        if isinstance(self.retention_years, int) and self.retention_years < 1:
            raise ValueError('retention_years 必须 >= 1')
        if self.start_year is not None and self.end_year is not None and self.end_year < self.start_year:
            raise ValueError('end_year 早于 start_year')
        return self


class FileSizeStageModel(StrictModel):
    name: str = Field(min_length=1)
    event_kb: float = Field(ge=0)


class SummaryCategoryModel(StrictModel):
    name: str = Field(min_length=1)
    stages: list[str] = Field(min_length=1)
    years: int = Field(ge=1)
    generations: int = Field(default=1, ge=1)
    event_multiplier: float = Field(default=1.0, gt=0)


class FileSizeEstimateModel(StrictModel):
    event_rate: float = Field(gt=0)
    effective_days: float = Field(gt=0, le=366)
    convention: ConventionName = 'binary'
    stages: list[FileSizeStageModel] = Field(min_length=1)
    summary: list[SummaryCategoryModel] = Field(default_factory=list)

    @model_validator(mode='after')
    def _unique_names(self):
        for label, names in (('stages', [s.name for s in self.stages]),
                             ('summary', [c.name for c in self.summary])):
            if len(set(names)) != len(names):
                raise ValueError(f'{label} 中名称重复')
        return self


class ExperimentModel(StrictModel):
    compute: dict[str, dict[ComputeClassName, float]] = Field(default_factory=dict)
    bandwidth: dict[str, dict[str, float]] = Field(default_factory=dict)
    storage: dict[str, list[StorageClassModel]] = Field(default_factory=dict)
    reconstructed_input: bool = False

    @model_validator(mode='after')
    def _non_negative(self):
        for phase, classes in self.compute.items():
            for name, value in classes.items():
                if value < 0:
                    raise ValueError(f'compute.{phase}.{name} 必须非负')
        return self


class ParticipantModel(StrictModel):
    experiment: str
    window: Optional[tuple[int, int]] = None
    data_intensive_offline_fraction: Optional[float] = Field(default=None, ge=0, le=1)

    @model_validator(mode='after')
    def _window_in_year(self):
        if self.window is not None:
            first, last = self.window
            if not 1 <= first <= last <= 365:
                raise ValueError('window 必须满足 1 <= first <= last <= 365')
        return self


class ScenarioModel(StrictModel):
    kind: ScenarioKindName = 'custom'
    phase: str
    start_year: int
    horizon: Optional[tuple[int, int]] = None
    participants: list[ParticipantModel] = Field(default_factory=list)

    @model_validator(mode='after')
    def _check(self):
        names = [p.experiment for p in self.participants]
        if len(set(names)) != len(names):
            raise ValueError('participants 中实验名称重复')
        if self.horizon is not None and self.horizon[1] < self.horizon[0]:
            raise ValueError('horizon 为空')
        return self


class ScenarioDocumentModel(StrictModel):
    schema_version: Literal[PLAN_CONFIG['schema_version']]
    machine_plans: dict[str, MachinePlanModel] = Field(default_factory=dict)
    reference_machines: dict[str, ReferenceMachineModel] = Field(default_factory=dict)
    setups: dict[str, SetupModel] = Field(default_factory=dict)
    runs: dict[str, RunModel] = Field(default_factory=dict)
    bandwidth_budgets: dict[str, BandwidthBudgetModel] = Field(default_factory=dict)
    archival_budgets: dict[str, ArchivalBudgetModel] = Field(default_factory=dict)
    transient_filters: dict[str, TransientFilterModel] = Field(default_factory=dict)
    online_compute: dict[str, OnlineComputeModel] = Field(default_factory=dict)
    storage_plans: dict[str, list[str]] = Field(default_factory=dict)
    processing_stages: dict[str, float] = Field(default_factory=dict)
    stage_sets: dict[str, list[str]] = Field(default_factory=dict)
    campaigns: dict[str, CampaignModel] = Field(default_factory=dict)
    simulation_budgets: dict[str, SimulationBudgetModel] = Field(default_factory=dict)
    offline_estimates: dict[str, OfflineEstimateModel] = Field(default_factory=dict)
    file_size_estimates: dict[str, FileSizeEstimateModel] = Field(default_factory=dict)
    experiments: dict[str, ExperimentModel] = Field(default_factory=dict)
    scenarios: dict[str, ScenarioModel] = Field(default_factory=dict)
    reference_values: dict[str, float] = Field(default_factory=dict)

    @model_validator(mode='after')
    def _positive_stage_times(self):
        for name, seconds in self.processing_stages.items():
            if not seconds > 0:
                raise ValueError(f'processing_stages.{name} 必须为正')
        return self


def document_json_schema():
    """供 `fairplan schema` 输出的 JSON Schema"""
    return ScenarioDocumentModel.model_json_schema()
