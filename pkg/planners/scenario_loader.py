"""
场景文件加载：JSON 解码 -> pydantic 校验 -> 交叉引用解析 -> 领域对象
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

from pydantic import ValidationError

from config import PLAN_CONFIG
from planners.beamline import MachinePlan, RateCaps, annual_beam_seconds, rate_profile
from planners.compute_model import Campaign, ProcessingStage, ReferenceMachine, hs06_per_event, stage_sum
from planners.detector_model import DetectorContribution, Setup
from planners.errors import ConfigurationError, PlanningError, ScenarioError, ScenarioIssue
from planners.facility import ExperimentRequirement, Scenario
from planners.quantities import Rate
from planners.scenario_schema import ScenarioDocumentModel
from planners.storage_ledger import FileSizeEstimate, StorageClass, SummaryCategory
from planners.trigger_pipeline import RunPlan, TriggerBranch

logger = logging.getLogger(__name__)

# (节, 字段, 目标节)
_REFERENCES = (
    ('runs', 'setup', 'setups'),
    ('runs', 'machine_plan', 'machine_plans'),
    ('bandwidth_budgets', 'run', 'runs'),
    ('archival_budgets', 'run', 'runs'),
    ('transient_filters', 'run', 'runs'),
    ('online_compute', 'run', 'runs'),
    ('online_compute', 'machine', 'reference_machines'),
    ('campaigns', 'machine', 'reference_machines'),
    ('simulation_budgets', 'machine', 'reference_machines'),
    ('offline_estimates', 'simulation', 'simulation_budgets'),
    ('offline_estimates', 'reconstruction', 'simulation_budgets'),
)


@dataclass
class ParseResult:
    document: ScenarioDocumentModel | None = None
    issues: list = field(default_factory=list)

    @property
    def ok(self):
        return self.document is not None and not self.issues


def locate_line(text, path):
    """按路径中的键依次在原文中查找，返回最后找到的键所在行；找不到时返回 None"""
    position = 0
    found = None
    for key in path:
        if not isinstance(key, str):
            continue
        index = text.find(json.dumps(key, ensure_ascii=False), position)
        if index < 0:
            break
        position = index
        found = index
    if found is None:
        return None
    return text.count('\n', 0, found) + 1


def _dotted(path):
    return '.'.join(str(part) for part in path)


def _resolve_references(document, text):
    issues = []

    def missing(path, kind, name):
        issues.append(ScenarioIssue(_dotted(path), f"未解析的引用: {kind} '{name}' 不存在",
                                    locate_line(text, path)))

    for section, attribute, target in _REFERENCES:
        targets = getattr(document, target)
        for name, entry in getattr(document, section).items():
            value = getattr(entry, attribute)
            if value is not None and value not in targets:
                missing((section, name, attribute), target, value)

    for name, runs in document.storage_plans.items():
        if not runs:
            issues.append(ScenarioIssue(_dotted(('storage_plans', name)), '存储计划至少需要一个运行',
                                        locate_line(text, ('storage_plans', name))))
        for index, run in enumerate(runs):
            if run not in document.runs:
                missing(('storage_plans', name, index), 'runs', run)

    for name, stages in document.stage_sets.items():
        for index, stage in enumerate(stages):
            if stage not in document.processing_stages:
                missing(('stage_sets', name, index), 'processing_stages', stage)

    for name, campaign in document.campaigns.items():
        for index, stage in enumerate(campaign.stages or ()):
            if stage not in document.processing_stages:
                missing(('campaigns', name, 'stages', index), 'processing_stages', stage)

    for name, estimate in document.file_size_estimates.items():
        stage_names = {stage.name for stage in estimate.stages}
        for position, category in enumerate(estimate.summary):
            for index, stage in enumerate(category.stages):
                if stage not in stage_names:
                    missing(('file_size_estimates', name, 'summary', position, 'stages', index),
                            f'file_size_estimates.{name}.stages', stage)

    for name, scenario in document.scenarios.items():
        for index, participant in enumerate(scenario.participants):
            path = ('scenarios', name, 'participants', index, 'experiment')
            experiment = document.experiments.get(participant.experiment)
            if experiment is None:
                missing(path, 'experiments', participant.experiment)
            elif scenario.phase not in experiment.compute:
                issues.append(ScenarioIssue(
                    _dotted(path),
                    f"实验 '{participant.experiment}' 没有阶段 '{scenario.phase}' 的计算需求",
                    locate_line(text, path)))
    return issues


# (节, ScenarioLoader 的构造方法)
_BUILDERS = (
    ('machine_plans', 'machine_plan'),
    ('reference_machines', 'reference_machine'),
    ('setups', 'setup'),
    ('runs', 'run'),
    ('campaigns', 'campaign'),
    ('file_size_estimates', 'file_size_estimate'),
)

_BUILD_ERRORS = (PlanningError, ValueError, TypeError, ArithmeticError)


def _check_invariants(document, text):
    """逐个构造领域对象，把领域约束的违反定位到文档中的条目"""
    loader = ScenarioLoader.from_document(document)
    issues = []

    def violated(path, exc):
        issues.append(ScenarioIssue(_dotted(path), str(exc), locate_line(text, path)))

    for section, builder in _BUILDERS:
        for name in getattr(document, section):
            try:
                getattr(loader, builder)(name)
            except _BUILD_ERRORS as exc:
                violated((section, name), exc)

    for name, scenario in document.scenarios.items():
        failed = False
        for participant in scenario.participants:
            experiment = document.experiments[participant.experiment]
            for index, model in enumerate(experiment.storage.get(scenario.phase, [])):
                try:
                    loader._storage_class(model, scenario.start_year)
                except _BUILD_ERRORS as exc:
                    failed = True
                    violated(('experiments', participant.experiment, 'storage', scenario.phase, index), exc)
        if failed:
            continue
        try:
            loader.scenario(name)
        except _BUILD_ERRORS as exc:
            violated(('scenarios', name), exc)
    return issues


def parse_scenario(data):
    """
    解析场景文件的字节内容

    总是返回 ParseResult，不抛异常：语法错误、校验错误和未解析的引用都以
    带路径和行号的 ScenarioIssue 形式收集。
    """
    try:
        text = data.decode('utf-8') if isinstance(data, (bytes, bytearray)) else str(data)
    except UnicodeDecodeError as exc:
        line = data[:exc.start].count(b'\n') + 1
        return ParseResult(issues=[ScenarioIssue('', f"不是合法的 UTF-8: {exc.reason}", line)])

    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        return ParseResult(issues=[ScenarioIssue('', f"JSON 语法错误: {exc.msg}", exc.lineno)])
    except (ValueError, RecursionError) as exc:
        return ParseResult(issues=[ScenarioIssue('', f"JSON 无法解析: {exc}")])

    if isinstance(raw, dict) and 'schema_version' not in raw:
        return ParseResult(issues=[ScenarioIssue('schema_version', "missing schema_version", 1)])

    try:
        document = ScenarioDocumentModel.model_validate(raw)
    except ValidationError as exc:
        issues = [
            ScenarioIssue(_dotted(error['loc']), error['msg'], locate_line(text, error['loc']))
            for error in exc.errors()
        ]
        return ParseResult(issues=issues)
    except RecursionError:
        return ParseResult(issues=[ScenarioIssue('', "文档嵌套过深")])

    issues = _resolve_references(document, text)
    if not issues:
        issues = _check_invariants(document, text)
    return ParseResult(document=document, issues=issues)


def canonicalize(document):
    """规范化输出：键排序、两空格缩进、UTF-8、LF 结尾"""
    payload = document.model_dump(mode='json', exclude_none=True)
    return (json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + '\n').encode('utf-8')


def resolve_scenario_path(path=None):
    """命令行参数优先，其次环境变量"""
    path = path or os.environ.get(PLAN_CONFIG['scenario_path_env'])
    if not path:
        raise ConfigurationError(
            f"未指定场景文件，且环境变量 {PLAN_CONFIG['scenario_path_env']} 未设置")
    return Path(path)


class ScenarioLoader:
    def __init__(self, path=None, data=None):
        """
        初始化场景加载器

        Args:
            path: 场景文件路径，为 None 时依次使用环境变量和默认路径
            data: 直接给出的文件内容 (bytes)，优先于 path
        """
        self.data = data
        if data is None:
            env = os.environ.get(PLAN_CONFIG['scenario_path_env'])
            self.path = Path(path or env or PLAN_CONFIG['default_scenario_path'])
        else:
            self.path = None
        self.document = None

    @classmethod
    def from_document(cls, document):
        """直接使用已校验的文档，不再读取文件"""
        loader = cls(data=b'')
        loader.document = document
        return loader

    def load(self):
        """加载并校验；有任何问题时抛出 ScenarioError"""
        if self.data is None:
            if not self.path.exists():
                raise ScenarioError([ScenarioIssue('', f"场景文件不存在: {self.path}")])
            self.data = self.path.read_bytes()
        result = parse_scenario(self.data)
        if not result.ok:
            raise ScenarioError(result.issues)
        self.document = result.document
        logger.info("场景文件 %s: %d 个实验, %d 个场景",
                    self.path or '<内存>', len(self.document.experiments), len(self.document.scenarios))
        return self

    def get_data_info(self):
        """各节的条目数"""
        doc = self._require()
        return {
            'schema_version': doc.schema_version,
            'setups': len(doc.setups),
            'runs': len(doc.runs),
            'campaigns': len(doc.campaigns),
            'experiments': len(doc.experiments),
            'scenarios': list(doc.scenarios),
            'reference_values': len(doc.reference_values),
        }

    def _require(self):
        if self.document is None:
            self.load()
        return self.document

    def _entry(self, section, name):
        entries = getattr(self._require(), section)
        if name not in entries:
            raise ConfigurationError(f"{section} 中没有 '{name}'，可选: {sorted(entries)}")
        return entries[name]

    # 领域对象

    def machine_plan(self, name):
        return MachinePlan(**self._entry('machine_plans', name).model_dump())

    def reference_machine(self, name):
        model = self._entry('reference_machines', name)
        if model.calibration is not None:
            return ReferenceMachine.calibrated(
                name, model.cores, model.clock_mhz,
                model.calibration.hs06, model.calibration.clock_mhz)
        return ReferenceMachine(name=name, cores=model.cores, clock_mhz=model.clock_mhz,
                                hs06_total=model.hs06_total, hs06_per_core=model.hs06_per_core)

    def setup(self, name):
        model = self._entry('setups', name)
        caps = None
        if model.rate_caps is not None:
            caps = RateCaps(
                peak_cap=Rate.events(model.rate_caps.peak_cap) if model.rate_caps.peak_cap else None,
                avg_cap=Rate.events(model.rate_caps.avg_cap) if model.rate_caps.avg_cap else None,
            )
        contributions = [DetectorContribution(c.name, c.messages_per_event, c.bytes_per_message)
                         for c in model.contributions]
        return Setup(name, contributions, caps, model.energy_scale_factor, model.convention)

    def run(self, name):
        model = self._entry('runs', name)
        setup = self.setup(model.setup)
        plan = self.machine_plan(model.machine_plan)
        seconds = model.run_seconds if model.run_seconds is not None else annual_beam_seconds(plan)
        return RunPlan(
            name=name,
            setup=setup,
            run_seconds=seconds,
            profile=rate_profile(Rate.events(model.peak_rate), plan, setup.rate_caps),
            branches=[TriggerBranch(b.name, b.selectivity, b.random_reduction, b.equivalent_events)
                      for b in model.branches],
            compression_factor=model.compression_factor,
        )

    def processing_stages(self):
        return [ProcessingStage(name, seconds)
                for name, seconds in self._require().processing_stages.items()]

    def campaign_seconds(self, name):
        model = self._entry('campaigns', name)
        if model.seconds_per_event is not None:
            return model.seconds_per_event
        return stage_sum(self.processing_stages(), model.stages)

    def campaign(self, name):
        model = self._entry('campaigns', name)
        machine = self.reference_machine(model.machine)
        return Campaign(
            name=name,
            events=model.events,
            hs06_per_event=hs06_per_event(self.campaign_seconds(name), machine.hs06_per_core),
            active_days=model.active_days,
            cpu_efficiency=model.cpu_efficiency,
            generations=model.generations,
        )

    def file_size_estimate(self, name):
        model = self._entry('file_size_estimates', name)
        return FileSizeEstimate(
            name=name,
            stages=[(stage.name, stage.event_kb) for stage in model.stages],
            event_rate=model.event_rate,
            effective_days=model.effective_days,
            categories=[SummaryCategory(c.name, c.stages, c.years, c.generations, c.event_multiplier)
                        for c in model.summary],
            convention=model.convention,
        )

    def file_size_estimate_names(self):
        return list(self._require().file_size_estimates)

    def _storage_class(self, model, default_start):
        return StorageClass(
            name=model.name,
            kind=model.kind,
            inflow_tb_per_year=model.inflow_tb_per_year,
            retention_years=model.retention_years,
            start_year=model.start_year if model.start_year is not None else default_start,
            end_year=model.end_year,
            convention=model.convention,
            reprocessing_generations=model.reprocessing_generations,
            archived=model.archived,
            archive_copies=model.archive_copies,
        )

    def scenario(self, name):
        model = self._entry('scenarios', name)
        experiments = []
        for participant in model.participants:
            experiment = self._entry('experiments', participant.experiment)
            if model.phase not in experiment.compute:
                raise ConfigurationError(f"实验 {participant.experiment} 没有阶段 {model.phase}")
            experiments.append(ExperimentRequirement(
                name=participant.experiment,
                compute=dict(experiment.compute[model.phase]),
                data_intensive_offline_fraction=participant.data_intensive_offline_fraction,
                storage_classes=[self._storage_class(c, model.start_year)
                                 for c in experiment.storage.get(model.phase, [])],
                window=participant.window,
                bandwidth=dict(experiment.bandwidth.get(model.phase, {})),
                reconstructed_input=experiment.reconstructed_input,
            ))
        return Scenario(
            name=name,
            experiments=experiments,
            kind=model.kind,
            start_year=model.start_year,
            horizon=model.horizon,
        )

    def scenario_names(self):
        return list(self._require().scenarios)

    def storage_plan_runs(self, name):
        return [self.run(run) for run in self._entry('storage_plans', name)]

    def stage_set_seconds(self, name):
        return stage_sum(self.processing_stages(), self._entry('stage_sets', name))
