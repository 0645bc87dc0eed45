"""
派生值与场景文件中公布值 (reference_values) 的一致性检查

reference_values 的键形如 "节.名称.指标"，例如 "online_compute.cbm_online.hs06"。
检查只产生警告，从不抛错：公布值本身就有若干处互相矛盾。
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import pandas as pd

from config import TOLERANCE_CONFIG
from planners.compute_model import (
    campaign_hs06,
    offline_total,
    online_compute_requirement,
    online_reco_time,
    simulation_compute_requirement,
)
from planners.detector_model import event_size, gc_bandwidth_requirement, inspill_data_rate
from planners.errors import PlanningError
from planners.facility import evaluate_scenario
from planners.trigger_pipeline import (
    annual_storage_plan,
    archival_bandwidth,
    sustained_data_rate,
    transient_filter_requirements,
)

logger = logging.getLogger(__name__)

FINDING_COLUMNS = ['key', 'reference', 'derived', 'relative_deviation', 'status']


def _setup_metrics(loader, name):
    return {'event_size_kb': event_size(loader.setup(name)).kb}


def _run_metrics(loader, name):
    run = loader.run(name)
    return {
        'run_seconds': run.run_seconds.seconds,
        'sustained_rate': run.profile.sustained.value,
        'average_rate': run.profile.average.value,
        'inspill_gb_s': inspill_data_rate(run.setup, run.profile).gb_per_s,
        'sustained_gb_s': sustained_data_rate(run).gb_per_s,
    }


def _storage_plan_metrics(loader, name):
    plan = annual_storage_plan(loader.storage_plan_runs(name))
    total = plan.total_volume.pb
    # 正文中的“年度原始数据”与表格合计指同一个量
    return {'total_pb': total, 'annual_raw_pb': total, 'run_seconds': plan.total_run_seconds.seconds}


def _bandwidth_metrics(loader, name):
    budget = loader.document.bandwidth_budgets[name]
    run = loader.run(budget.run)
    result = gc_bandwidth_requirement(inspill_data_rate(run.setup, run.profile),
                                      budget.noise_fraction, budget.contingency)
    return {
        'base_gb_s': result.base.gb_per_s,
        'upper_limit_gb_s': result.upper_limit.gb_per_s,
        'requirement_gb_s': result.requirement.gb_per_s,
    }


def _archival_metrics(loader, name):
    budget = loader.document.archival_budgets[name]
    result = archival_bandwidth(loader.run(budget.run), budget.contingency)
    return {'average_gb_s': result.average.gb_per_s, 'peak_gb_s': result.peak.gb_per_s}


def _transient_metrics(loader, name):
    budget = loader.document.transient_filters[name]
    result = transient_filter_requirements(loader.run(budget.run), budget.first_level_reduction,
                                           budget.holding_days)
    return {
        'volume_pb': result.volume.pb,
        'bandwidth_gb_s': result.write_bw.gb_per_s,
        'read_gb_s': result.read_bw.gb_per_s,
    }


def _online_compute_metrics(loader, name):
    budget = loader.document.online_compute[name]
    seconds = online_reco_time(budget.l1_seconds, budget.full_reco_factor, budget.momentum_factor)
    result = online_compute_requirement(loader.run(budget.run).profile.sustained, seconds,
                                        loader.reference_machine(budget.machine))
    return {
        'seconds_per_event': seconds,
        'cores': result.cores,
        'nodes': result.nodes,
        'nodes_ceiled': result.nodes_ceiled,
        'hs06': result.hs06.value,
        'events_per_node': result.events_per_node,
    }


def _campaign_metrics(loader, name):
    campaign = loader.campaign(name)
    result = campaign_hs06(campaign)
    return {
        'seconds_per_event': loader.campaign_seconds(name),
        'hs06_per_event': campaign.hs06_per_event,
        'hs06_per_generation': result.hs06_per_generation.value,
        'hs06_per_year': result.hs06_per_year.value,
    }


def _simulation_metrics(loader, name):
    budget = loader.document.simulation_budgets[name]
    result = simulation_compute_requirement(budget.events_per_year, budget.seconds_per_event,
                                            loader.reference_machine(budget.machine), budget.wall_days)
    return {'cores': result.cores, 'hs06': result.hs06.value}


def _offline_metrics(loader, name):
    estimate = loader.document.offline_estimates[name]
    simulation = _simulation_metrics(loader, estimate.simulation)
    total = offline_total(simulation['hs06'], estimate.reconstruction_hs06, estimate.analysis_fraction_of_sim)
    return {'hs06': total.value, 'simulation_hs06': simulation['hs06']}


def _stage_set_metrics(loader, name):
    return {'seconds': loader.stage_set_seconds(name)}


def _scenario_metrics(loader, name):
    result = evaluate_scenario(loader.scenario(name))
    return {
        'iia_total': result.compute.iia_total.value,
        'iib_total': result.compute.iib_total.value,
        'total_hs06': result.tier0.total_capacity.value,
        'tier0_hs06': result.tier0.hs06.value,
        'tier0_fraction': result.tier0.fraction,
        'online_maximum': result.profile.maximum.value,
        'online_average': result.profile.average.value,
        'saturation_pb': result.storage.saturation.pb,
        'archive_slope_pb_per_year': result.storage.archive_slope_pb_per_year,
    }


METRICS = {
    'setups': _setup_metrics,
    'runs': _run_metrics,
    'storage_plans': _storage_plan_metrics,
    'bandwidth_budgets': _bandwidth_metrics,
    'archival_budgets': _archival_metrics,
    'transient_filters': _transient_metrics,
    'online_compute': _online_compute_metrics,
    'campaigns': _campaign_metrics,
    'simulation_budgets': _simulation_metrics,
    'offline_estimates': _offline_metrics,
    'stage_sets': _stage_set_metrics,
    'scenarios': _scenario_metrics,
}


def split_key(key):
    """'scenarios.FS+.tier0_fraction' -> ('scenarios', 'FS+', 'tier0_fraction')"""
    parts = key.split('.')
    if len(parts) < 3:
        raise KeyError(f"指标键必须形如 节.名称.指标: {key}")
    return parts[0], '.'.join(parts[1:-1]), parts[-1]


class MetricDeriver:
    """按 (节, 名称) 缓存派生指标，同一条目只计算一次"""

    def __init__(self, loader):
        self.loader = loader
        self._cache = {}

    def metrics(self, section, name):
        if section not in METRICS:
            raise KeyError(f"不支持的节: {section}")
        if name not in getattr(self.loader.document, section):
            raise KeyError(f"{section} 中没有 '{name}'")
        if (section, name) not in self._cache:
            self._cache[(section, name)] = METRICS[section](self.loader, name)
        return self._cache[(section, name)]

    def derive(self, key):
        section, name, metric = split_key(key)
        values = self.metrics(section, name)
        if metric not in values:
            raise KeyError(f"{section} 没有指标 '{metric}'，可选: {sorted(values)}")
        return values[metric]

    def all_keys(self, sections=None):
        """文档中所有可派生的指标键，按节和名称排序"""
        keys = []
        for section in sections or METRICS:
            for name in sorted(getattr(self.loader.document, section)):
                keys.extend(f"{section}.{name}.{metric}" for metric in self.metrics(section, name))
        return keys


def _relative_deviation(derived, reference):
    if reference == 0:
        return 0.0 if derived == 0 else math.inf
    return (derived - reference) / reference


@dataclass(frozen=True)
class Finding:
    key: str
    reference: float
    derived: float | None
    relative_deviation: float | None
    status: str  # ok / deviation / underivable


class ConsistencyChecker:
    def __init__(self, loader, tolerance=None):
        self.loader = loader.load() if loader.document is None else loader
        self.tolerance = TOLERANCE_CONFIG['consistency_rel'] if tolerance is None else tolerance
        self.deriver = MetricDeriver(self.loader)
        self.check_report = {}

    def check_reference_values(self):
        """逐个比较公布值与派生值"""
        findings = []
        for key, reference in sorted(self.loader.document.reference_values.items()):
            try:
                derived = self.deriver.derive(key)
            except (KeyError, PlanningError) as exc:
                logger.warning("%s: 无法派生 (%s)", key, exc)
                findings.append(Finding(key, reference, None, None, 'underivable'))
                continue
            deviation = _relative_deviation(derived, reference)
            status = 'ok' if abs(deviation) <= self.tolerance else 'deviation'
            if status == 'deviation':
                logger.warning("%s: 派生值 %.4g 与公布值 %.4g 相差 %+.1f%%",
                               key, derived, reference, deviation * 100)
            findings.append(Finding(key, reference, derived, deviation, status))
        self.check_report['reference_values'] = findings
        return self

    def check_equivalent_events(self):
        """存储表中的“等效事件数”与 数据量 ÷ 事件大小 的比较"""
        findings = []
        for name in sorted(self.loader.document.runs):
            run = self.loader.run(name)
            plan = annual_storage_plan([run])
            for _, row in plan.rows.iterrows():
                reference = row['equivalent_events']
                if reference is None or pd.isna(reference):
                    continue
                key = f"runs.{name}.{row['trigger']}.equivalent_events"
                derived = row['stored_events']
                deviation = _relative_deviation(derived, reference)
                status = 'ok' if abs(deviation) <= self.tolerance else 'deviation'
                if status == 'deviation':
                    logger.warning("%s: 存储量对应 %.3g 个事件，表中为 %.3g", key, derived, reference)
                findings.append(Finding(key, reference, derived, deviation, status))
        self.check_report['equivalent_events'] = findings
        return self

    def run_all(self):
        return self.check_reference_values().check_equivalent_events()

    def get_findings(self):
        return [f for group in self.check_report.values() for f in group]

    def get_check_report(self):
        """获取检查报告"""
        findings = self.get_findings()
        return {
            'checked': len(findings),
            'deviations': sum(f.status == 'deviation' for f in findings),
            'underivable': sum(f.status == 'underivable' for f in findings),
            'findings': findings,
        }

    def to_frame(self):
        return pd.DataFrame([f.__dict__ for f in self.get_findings()], columns=FINDING_COLUMNS)


def consistency_check(loader, tolerance=None):
    """一次性运行全部检查，返回 Finding 列表"""
    return ConsistencyChecker(loader, tolerance).run_all().get_findings()
