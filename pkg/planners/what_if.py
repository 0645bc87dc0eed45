"""
假设分析：修改运行假设后重新派生需求，与基线对比
"""
from __future__ import annotations

import json
import logging

import pandas as pd

from planners.consistency_checker import MetricDeriver
from planners.errors import PlanValidationError
from planners.scenario_loader import ScenarioLoader, canonicalize, parse_scenario

logger = logging.getLogger(__name__)

WHAT_IF_KEYS = ('operational_efficiency', 'duty_cycle', 'compression_factor', 'energy_scale_factor', 'rate_scale')

# 这些节描述单个实验 (CBM/PANDA) 的需求推导
WHAT_IF_SECTIONS = (
    'runs', 'storage_plans', 'bandwidth_budgets', 'archival_budgets', 'transient_filters',
    'online_compute', 'campaigns', 'simulation_budgets', 'offline_estimates',
)

COMPARISON_COLUMNS = ['metric', 'base', 'scenario', 'relative_change']


def parse_overrides(assignments):
    """['duty_cycle=0.6', ...] -> {'duty_cycle': 0.6}"""
    overrides = {}
    for assignment in assignments or ():
        key, sep, value = assignment.partition('=')
        key = key.strip()
        if not sep or key not in WHAT_IF_KEYS:
            raise PlanValidationError(f"无效的覆盖 {assignment!r}，可用的键: {', '.join(WHAT_IF_KEYS)}")
        try:
            overrides[key] = float(value)
        except ValueError:
            raise PlanValidationError(f"{key} 的值不是数值: {value!r}") from None
    return overrides


def apply_overrides(document, overrides):
    """
    返回修改后的文档 (JSON 形式的 dict)

    operational_efficiency 同时按比例缩放显式给出的 run_seconds，
    rate_scale 是对所有运行峰值率的乘数，其余键直接替换取值。
    """
    data = document.model_dump(mode='json', exclude_none=True)
    unknown = set(overrides) - set(WHAT_IF_KEYS)
    if unknown:
        raise PlanValidationError(f"未知的覆盖键: {sorted(unknown)}")

    if 'operational_efficiency' in overrides:
        value = overrides['operational_efficiency']
        previous = {name: plan.get('operational_efficiency', 1.0) for name, plan in data['machine_plans'].items()}
        for plan in data['machine_plans'].values():
            plan['operational_efficiency'] = value
        for run in data['runs'].values():
            if 'run_seconds' in run:
                run['run_seconds'] *= value / previous[run['machine_plan']]
    if 'duty_cycle' in overrides:
        for plan in data['machine_plans'].values():
            plan['duty_cycle'] = overrides['duty_cycle']
    if 'compression_factor' in overrides:
        for run in data['runs'].values():
            run['compression_factor'] = overrides['compression_factor']
    if 'energy_scale_factor' in overrides:
        for setup in data['setups'].values():
            setup['energy_scale_factor'] = overrides['energy_scale_factor']
    if 'rate_scale' in overrides:
        for run in data['runs'].values():
            run['peak_rate'] *= overrides['rate_scale']
    return data


def _reload(data):
    result = parse_scenario(json.dumps(data, ensure_ascii=False).encode('utf-8'))
    if not result.ok:
        details = '; '.join(str(issue) for issue in result.issues[:3])
        raise PlanValidationError(f"覆盖后的场景无效: {details}")
    return ScenarioLoader(data=canonicalize(result.document)).load()


class WhatIfAnalyzer:
    def __init__(self, loader):
        self.loader = loader.load() if loader.document is None else loader
        self.overrides = {}
        self.results = {}

    def set_overrides(self, overrides):
        self.overrides = dict(overrides)
        self.results['overrides'] = dict(overrides)
        return self

    def compare(self, sections=WHAT_IF_SECTIONS):
        """基线与修改后场景的逐指标对比"""
        base = MetricDeriver(self.loader)
        changed = MetricDeriver(_reload(apply_overrides(self.loader.document, self.overrides)))

        rows = []
        for key in base.all_keys(sections):
            before = base.derive(key)
            after = changed.derive(key)
            change = (after - before) / before if before else 0.0
            rows.append({'metric': key, 'base': before, 'scenario': after, 'relative_change': change})
        comparison = pd.DataFrame(rows, columns=COMPARISON_COLUMNS)
        self.results['comparison'] = comparison
        logger.info("假设分析 %s: %d 个指标, %d 个有变化",
                    self.overrides, len(comparison), int((comparison['relative_change'] != 0).sum()))
        return self

    def get_results(self):
        return self.results


def what_if(loader, overrides):
    """按覆盖值重新派生，返回对比表"""
    return WhatIfAnalyzer(loader).set_overrides(overrides).compare().get_results()['comparison']
