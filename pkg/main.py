import argparse
import json
import logging
import os
import sys

import pandas as pd
from rich.console import Console
from rich.table import Table

from config import LOG_CONFIG, PLAN_CONFIG, REPORT_CONFIG

from planners.compute_model import campaign_table
from planners.consistency_checker import ConsistencyChecker, MetricDeriver
from planners.detector_model import data_rate_table, event_size_breakdown
from planners.errors import PlanningError, ScenarioError
from planners.facility import evaluate_scenario, evaluate_scenarios, solve_uniform_fraction
from planners.report_generator import Report, ReportGenerator, emit_report
from planners.scenario_loader import ScenarioLoader, parse_scenario, resolve_scenario_path
from planners.scenario_schema import document_json_schema
from planners.trigger_pipeline import annual_storage_plan, sustained_data_rate
from planners.visualizer import Visualizer
from planners.what_if import WhatIfAnalyzer, parse_overrides

logger = logging.getLogger('fairplan')

EXIT_OK = 0
EXIT_SCENARIO = 1
EXIT_COMPUTATION = 2
EXIT_USAGE = 64

TABLE_CHOICES = ('event-sizes', 'data-rates', 'storage-plan', 'compute', 'panda-hs06', 'panda-storage')

STORAGE_TABLE_COLUMNS = [
    'setup', 'run_time_s', 'sustained_data_rate_gb_s', 'trigger',
    'selectivity', 'random_reduction', 'storage_pb', 'equivalent_events',
]


class FacilityPlanner:
    def __init__(self, scenario_path=None, loader=None, console=None):
        self.loader = loader or ScenarioLoader(scenario_path)
        self.console = console or Console(stderr=True)
        self.results = {}
        self.visualizer = Visualizer()

    @property
    def document(self):
        if self.loader.document is None:
            self.loader.load()
        return self.loader.document

    # 各张表

    def event_sizes_table(self):
        """每个 setup 逐系统的事件大小"""
        frames = []
        for name in self.document.setups:
            frame = event_size_breakdown(self.loader.setup(name))
            frame.insert(0, 'setup', name)
            frames.append(frame)
        columns = ['setup', 'system', 'messages', 'bytes_per_message', 'event_size_kb']
        return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=columns)

    def data_rates_table(self):
        """各运行到计算中心的数据率"""
        runs = [self.loader.run(name) for name in self.document.runs]
        frame = data_rate_table([(run.setup, run.profile) for run in runs])
        frame.insert(0, 'run', [run.name for run in runs])
        frame['sustained_data_rate_gb_s'] = [sustained_data_rate(run).gb_per_s for run in runs]
        return frame

    def bandwidth_table(self):
        deriver = MetricDeriver(self.loader)
        rows = []
        for section in ('bandwidth_budgets', 'archival_budgets', 'transient_filters'):
            for name in getattr(self.document, section):
                for metric, value in deriver.metrics(section, name).items():
                    rows.append({'budget': f"{section}.{name}", 'metric': metric, 'value': value})
        return pd.DataFrame(rows, columns=['budget', 'metric', 'value'])

    def storage_plan_tables(self):
        tables = {}
        for name in self.document.storage_plans:
            plan = annual_storage_plan(self.loader.storage_plan_runs(name))
            records = plan.rows[STORAGE_TABLE_COLUMNS].to_dict('records')
            records.append({'setup': 'Sum', 'run_time_s': plan.total_run_seconds.seconds,
                            'storage_pb': plan.total_volume.pb})
            tables[name] = pd.DataFrame.from_records(records, columns=STORAGE_TABLE_COLUMNS)
        return tables

    def compute_table(self):
        """在线计算、模拟/重建预算与离线合计"""
        deriver = MetricDeriver(self.loader)
        rows = []
        for name in self.document.online_compute:
            metrics = deriver.metrics('online_compute', name)
            rows.append({'item': name, 'kind': 'online', **{k: metrics[k] for k in
                         ('seconds_per_event', 'cores', 'nodes', 'nodes_ceiled', 'hs06')}})
        for name, budget in self.document.simulation_budgets.items():
            metrics = deriver.metrics('simulation_budgets', name)
            rows.append({'item': name, 'kind': 'offline_budget', 'seconds_per_event': budget.seconds_per_event,
                         'cores': metrics['cores'], 'hs06': metrics['hs06']})
        for name in self.document.offline_estimates:
            rows.append({'item': name, 'kind': 'offline_total',
                         'hs06': deriver.metrics('offline_estimates', name)['hs06']})
        return pd.DataFrame(rows, columns=['item', 'kind', 'seconds_per_event', 'cores', 'nodes',
                                           'nodes_ceiled', 'hs06'])

    def panda_hs06_table(self):
        return campaign_table([self.loader.campaign(name) for name in self.document.campaigns])

    def panda_storage_tables(self):
        """逐处理阶段的文件大小与按数据类别的存储汇总"""
        tables = {}
        for name in self.loader.file_size_estimate_names():
            estimate = self.loader.file_size_estimate(name)
            tables[name] = (estimate.stage_table(), estimate.summary_table())
        return tables

    def _add_panda_storage(self, report):
        for name, (stages, summary) in self.panda_storage_tables().items():
            report.add(f'文件大小 {name}', stages, input_columns=('event_kb',))
            report.add(f'存储汇总 {name}', summary, input_columns=('years',))

    def build_tables_report(self, table):
        report = Report(title=f"fairplan: {table}")
        if table == 'event-sizes':
            report.add('事件大小', self.event_sizes_table(), input_columns=('messages', 'bytes_per_message'))
        elif table == 'data-rates':
            report.add('到计算中心的数据率', self.data_rates_table())
        elif table == 'storage-plan':
            for name, frame in self.storage_plan_tables().items():
                report.add(f'年度存储计划 {name}', frame,
                           input_columns=('run_time_s', 'selectivity', 'random_reduction', 'equivalent_events'))
        elif table == 'compute':
            report.add('计算需求', self.compute_table())
        elif table == 'panda-hs06':
            report.add('计算活动 HS06', self.panda_hs06_table(),
                       input_columns=('events_per_year', 'cpu_efficiency', 'generations'))
        elif table == 'panda-storage':
            self._add_panda_storage(report)
        else:
            raise PlanningError(f"未知的表: {table}")
        return report

    # 场景汇总

    @staticmethod
    def compute_matrix_table(result):
        matrix = result.compute.matrix.copy()
        matrix.loc['Total'] = result.compute.totals
        matrix.index.name = 'experiment'
        return matrix.reset_index()

    @staticmethod
    def tier0_table(result, solved_fraction=None):
        rows = [
            ('iia_total', result.compute.iia_total.value),
            ('iib_total', result.compute.iib_total.value),
            ('online_maximum', result.tier0.online_maximum.value),
            ('online_average', result.tier0.online_average.value),
            ('tier0_hs06', result.tier0.hs06.value),
            ('total_capacity', result.tier0.total_capacity.value),
            ('tier0_fraction', result.tier0.fraction),
            ('saturation_pb', result.storage.saturation.pb),
            ('archive_slope_pb_per_year', result.storage.archive_slope_pb_per_year),
        ]
        if solved_fraction is not None:
            rows.append(('solved_uniform_fraction', solved_fraction))
        return pd.DataFrame(rows, columns=['metric', 'value'])

    @staticmethod
    def timeline_table(result, archive=False):
        frame = result.storage.by_experiment.copy()
        frame['total_pb'] = frame.sum(axis=1)
        if archive:
            frame['archive_pb'] = result.storage.archive.stacked / 1e15
        frame.index.name = 'year'
        return frame.reset_index()

    def evaluate(self, names=None, horizon=None):
        names = names or self.loader.scenario_names()
        scenarios = [self.loader.scenario(name) for name in names]
        return dict(zip(names, evaluate_scenarios(scenarios, horizon=horizon)))

    # 完整流程

    def _step(self, number, title):
        self.console.rule(f"[bold]{number}. {title}")

    def run_full_analysis(self):
        """运行完整规划流程，返回 Report"""
        self.console.rule("[bold blue]FAIR 计算与存储资源规划")

        self._step(1, "加载场景文件")
        if self.loader.document is None:
            self.loader.load()
        info = self.loader.get_data_info()
        self.results['data_info'] = info
        self.console.print(f"场景版本 {info['schema_version']}: {info['setups']} 个 setup, "
                           f"{info['experiments']} 个实验, 场景 {', '.join(info['scenarios'])}")

        report = Report(title="FAIR 计算与存储资源需求")

        self._step(2, "事件大小与数据率")
        report.add('事件大小', self.event_sizes_table(), input_columns=('messages', 'bytes_per_message'))
        report.add('到计算中心的数据率', self.data_rates_table())
        report.add('带宽预算', self.bandwidth_table())

        self._step(3, "年度存储计划")
        for name, frame in self.storage_plan_tables().items():
            report.add(f'年度存储计划 {name}', frame,
                       input_columns=('run_time_s', 'selectivity', 'random_reduction', 'equivalent_events'))
        self._add_panda_storage(report)

        self._step(4, "计算需求")
        report.add('计算需求', self.compute_table())
        if self.document.campaigns:
            report.add('计算活动 HS06', self.panda_hs06_table(),
                       input_columns=('events_per_year', 'cpu_efficiency', 'generations'))

        self._step(5, "设施汇总")
        evaluated = self.evaluate()
        self.results['scenarios'] = evaluated
        for name, result in evaluated.items():
            report.add(f'{name} 计算类别矩阵', self.compute_matrix_table(result))
            report.add(f'{name} Tier0 与存储', self.tier0_table(result))
            report.add(f'{name} 存储演化 (PB)', self.timeline_table(result, archive=True))
            self.console.print(f"{name}: Tier0 {result.tier0.fraction:.1%}, "
                               f"磁盘饱和 {result.storage.saturation.pb:.0f} PB")

        self._step(6, "一致性检查")
        checker = ConsistencyChecker(self.loader).run_all()
        summary = checker.get_check_report()
        self.results['consistency'] = summary
        report.add('与公布值的一致性', checker.to_frame(), input_columns=('reference',))
        self.console.print(f"检查 {summary['checked']} 项, 偏差 {summary['deviations']} 项")

        self._step(7, "生成可视化")
        try:
            for name, result in evaluated.items():
                self.visualizer.create_storage_timeline(result.storage, title=name)
                self.visualizer.create_online_profile(result.profile, result.tier0, title=name)
                self.visualizer.create_compute_shares(result.compute, title=name)
            report.images = self.visualizer.get_base64_images()
        except Exception as exc:
            logger.warning("可视化生成失败: %s", exc)

        self._step(8, "生成洞见")
        report.notes = self._generate_insights(evaluated, summary)
        self.results['report'] = report
        return report

    def _generate_insights(self, evaluated, summary):
        insights = []
        for name, result in evaluated.items():
            insights.append(
                f"{name}: II.a {result.compute.iia_total.value / 1e6:.2f} MHS06, "
                f"II.b {result.compute.iib_total.value / 1e6:.2f} MHS06, "
                f"Tier0 至少 {result.tier0.fraction:.0%}")
        deviations = [f.key for f in summary['findings'] if f.status == 'deviation']
        if deviations:
            insights.append(f"与公布值偏差超过容差: {', '.join(deviations)}")
        else:
            insights.append("所有派生值都在公布值的容差范围内")
        return insights


# 命令行

class PlannerArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = PlannerArgumentParser(prog='fairplan', description='FAIR 计算与存储容量规划')
    parser.add_argument('-v', '--verbose', action='store_true', help='输出调试日志')
    commands = parser.add_subparsers(dest='command', required=True)

    def command(name, help_text, with_file=True, with_format=True):
        sub = commands.add_parser(name, help=help_text)
        if with_file:
            sub.add_argument('file', nargs='?', help=f"场景文件，缺省读取 {PLAN_CONFIG['scenario_path_env']}")
        if with_format:
            sub.add_argument('--format', choices=REPORT_CONFIG['formats'], default='markdown')
            sub.add_argument('--out', help='输出文件，缺省写到标准输出')
        return sub

    command('validate', '校验场景文件', with_format=False)
    sub = command('tables', '输出单张需求表')
    sub.add_argument('--table', choices=TABLE_CHOICES, required=True)
    sub = command('timeline', '逐年存储演化')
    sub.add_argument('--scenario')
    sub.add_argument('--from', dest='year_from', type=int, default=PLAN_CONFIG['timeline_from'])
    sub.add_argument('--to', dest='year_to', type=int, default=PLAN_CONFIG['timeline_to'])
    sub.add_argument('--archive', action='store_true', help='附加累计归档列')
    sub.add_argument('--plot', help='另存 PNG 图')
    sub = command('aggregate', '设施级汇总')
    sub.add_argument('--scenario', action='append', help='可重复；缺省为全部场景')
    sub.add_argument('--target', type=float, help='反解达到该 Tier0 份额的统一比例')
    sub = command('report', '完整报告')
    sub.add_argument('--html', action='store_true', help='同时生成带图的 HTML')
    command('schema', '输出场景文件的 JSON Schema', with_file=False, with_format=False)
    sub = command('whatif', '假设分析')
    sub.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE')
    command('check', '与公布值的一致性检查')
    return parser


def configure_logging(verbose=False):
    level = LOG_CONFIG['verbose_level'] if verbose else LOG_CONFIG['level']
    logging.basicConfig(level=level, format=LOG_CONFIG['format'], stream=sys.stderr, force=True)


def _ensure_parent(path):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)


def _write_output(data, out=None):
    if out:
        _ensure_parent(out)
        with open(out, 'wb') as handle:
            handle.write(data)
        return
    stream = getattr(sys.stdout, 'buffer', None)
    if stream is None:
        sys.stdout.write(data.decode(REPORT_CONFIG['encoding']))
    else:
        stream.write(data)
    sys.stdout.flush()


def _validate(path, console):
    result = parse_scenario(path.read_bytes())
    for issue in result.issues:
        console.print(f"[red]{issue}[/red]", highlight=False)
    if not result.ok:
        return EXIT_SCENARIO
    table = Table(title=str(path))
    table.add_column('节')
    table.add_column('条目', justify='right')
    for section in ('setups', 'runs', 'campaigns', 'experiments', 'scenarios', 'reference_values'):
        table.add_row(section, str(len(getattr(result.document, section))))
    console.print(table)
    return EXIT_OK


def _default_scenario(planner, requested):
    return requested or planner.loader.scenario_names()[0]


def run_command(args, console):
    if args.command == 'schema':
        schema = json.dumps(document_json_schema(), indent=2, sort_keys=True, ensure_ascii=False) + '\n'
        _write_output(schema.encode(REPORT_CONFIG['encoding']))
        return EXIT_OK

    path = resolve_scenario_path(args.file)
    if args.command == 'validate':
        if not path.exists():
            console.print(f"[red]场景文件不存在: {path}[/red]")
            return EXIT_SCENARIO
        return _validate(path, console)

    planner = FacilityPlanner(path, console=console)
    planner.loader.load()

    if args.command == 'tables':
        report = planner.build_tables_report(args.table)
    elif args.command == 'timeline':
        name = _default_scenario(planner, args.scenario)
        result = evaluate_scenario(planner.loader.scenario(name), horizon=(args.year_from, args.year_to))
        report = Report(title=f"{name} 存储演化 {args.year_from}-{args.year_to}")
        report.add('存储演化 (PB)', planner.timeline_table(result, archive=args.archive))
        if args.plot:
            planner.visualizer.create_storage_timeline(result.storage, title=name)
            planner.visualizer.save_png(f'storage_timeline_{name}', args.plot)
    elif args.command == 'aggregate':
        evaluated = planner.evaluate(args.scenario)
        report = Report(title='设施级汇总')
        for name, result in evaluated.items():
            solved = solve_uniform_fraction(result.scenario, args.target) if args.target is not None else None
            report.add(f'{name} 计算类别矩阵', planner.compute_matrix_table(result))
            report.add(f'{name} Tier0 与存储', planner.tier0_table(result, solved))
    elif args.command == 'whatif':
        overrides = parse_overrides(args.overrides)
        comparison = WhatIfAnalyzer(planner.loader).set_overrides(overrides).compare().get_results()['comparison']
        report = Report(title='假设分析', notes=[f"{k} = {v}" for k, v in sorted(overrides.items())])
        report.add('基线与假设对比', comparison)
    elif args.command == 'check':
        checker = ConsistencyChecker(planner.loader).run_all()
        report = Report(title='与公布值的一致性')
        report.add('一致性检查', checker.to_frame(), input_columns=('reference',))
    elif args.command == 'report':
        report = planner.run_full_analysis()
        if args.html:
            html_path = os.path.splitext(args.out)[0] + '.html'
            _ensure_parent(html_path)
            ReportGenerator(report).save_html(html_path)
            console.print(f"HTML 报告: {html_path}")
    else:
        raise PlanningError(f"未知的命令: {args.command}")

    _write_output(emit_report(report, args.format), getattr(args, 'out', None))
    return EXIT_OK


def main(argv=None):
    """主函数，返回退出码"""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    console = Console(stderr=True)

    if getattr(args, 'file', None) is None and args.command != 'schema':
        if not os.environ.get(PLAN_CONFIG['scenario_path_env']):
            parser.error(f"未指定场景文件，且环境变量 {PLAN_CONFIG['scenario_path_env']} 未设置")
    if args.command == 'report' and args.html and not args.out:
        parser.error('--html 需要同时给出 --out')

    try:
        return run_command(args, console)
    except ScenarioError as exc:
        for issue in exc.issues:
            console.print(f"[red]{issue}[/red]", highlight=False)
        if not exc.issues:
            console.print(f"[red]{exc}[/red]", highlight=False)
        return EXIT_SCENARIO
    except PlanningError as exc:
        console.print(f"[red]计算失败: {exc}[/red]", highlight=False)
        return EXIT_COMPUTATION


if __name__ == '__main__':
    sys.exit(main())
