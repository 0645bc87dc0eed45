"""
FAIR计算资源规划配置
"""
# 规划配置
PLAN_CONFIG = {
    'default_scenario_path': 'scenarios/fsplus.json',  # 默认场景文件
    'scenario_path_env': 'FAIRPLAN_SCENARIO_PATH',  # 默认场景文件的环境变量
    'schema_version': '1.0',  # 支持的场景文件版本
    'timeline_from': 2028,
    'timeline_to': 2040,
    'archive_slope_years': 3,  # 归档斜率的取值区间 (年)
    'default_noise_fraction': 9.6 / 244,  # STS暗计数率 / 强子setup数据率
    'n_jobs': 2,  # 多场景并行评估的线程数
}

# 报告配置
REPORT_CONFIG = {
    'significant_digits': 4,  # 派生数值的有效数字
    'encoding': 'utf-8',
    'line_terminator': '\n',
    'formats': ('csv', 'json', 'markdown'),
}

# 容差配置
TOLERANCE_CONFIG = {
    'reference_machine_rel': 0.02,  # hs06_per_core × cores 与 hs06_total 的一致性
    'consistency_rel': 0.02,  # 派生值与公布值的偏差阈值
}

# 可视化配置
VIZ_CONFIG = {
    'figsize_timeline': (12, 8),
    'figsize_profile': (12, 5),
    'figsize_shares': (12, 6),
    'dpi': 150,
}

# 日志配置
LOG_CONFIG = {
    'level': 'WARNING',
    'verbose_level': 'DEBUG',
    'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
}
