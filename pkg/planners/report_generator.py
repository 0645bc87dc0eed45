"""
报告输出：csv / json / markdown 三种格式，另可把 markdown 渲染为 HTML

同样的输入总是得到逐字节相同的输出：键顺序固定，派生值保留 4 位有效数字，
输入值原样输出。
"""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime

import markdown
import pandas as pd
from jinja2 import Template

from config import REPORT_CONFIG
from planners.errors import ReportFormatError

LONG_COLUMNS = ['table', 'row', 'column', 'value']


@dataclass
class ReportTable:
    title: str
    frame: pd.DataFrame
    input_columns: frozenset = frozenset()  # 这些列是场景输入，原样输出

    @classmethod
    def from_frame(cls, title, frame, input_columns=()):
        return cls(title, frame.reset_index(drop=True), frozenset(input_columns))

    def formatted_rows(self):
        rows = []
        for record in self.frame.itertuples(index=False):
            rows.append([
                format_value(value, derived=column not in self.input_columns)
                for column, value in zip(self.frame.columns, record)
            ])
        return rows

    def json_rows(self):
        rows = []
        for record in self.frame.itertuples(index=False):
            rows.append([
                json_value(value, derived=column not in self.input_columns)
                for column, value in zip(self.frame.columns, record)
            ])
        return rows


@dataclass
class Report:
    title: str
    tables: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    images: dict = field(default_factory=dict)  # 名称 -> base64 PNG，仅用于 HTML

    def add(self, title, frame, input_columns=()):
        self.tables.append(ReportTable.from_frame(title, frame, input_columns))
        return self


def _is_missing(value):
    return value is None or (isinstance(value, float) and math.isnan(value))


def _round_significant(value):
    return float(format(float(value), f".{REPORT_CONFIG['significant_digits']}g"))


def format_value(value, derived=True):
    """派生值保留有效数字；输入值给出能精确还原的最短表示"""
    if _is_missing(value):
        return ''
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if derived:
        # 63750 输出为 63750 而不是 6.375e+04
        return format(_round_significant(value), '.15g')
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def json_value(value, derived=True):
    if _is_missing(value):
        return None
    if isinstance(value, (str, bool)):
        return value
    if isinstance(value, int):
        return value
    if hasattr(value, 'item'):
        value = value.item()
        if isinstance(value, int):
            return value
    return _round_significant(value) if derived else float(value)


def _to_csv(report):
    terminator = REPORT_CONFIG['line_terminator']
    if len(report.tables) == 1:
        table = report.tables[0]
        frame = pd.DataFrame(table.formatted_rows(), columns=list(table.frame.columns))
        return frame.to_csv(index=False, lineterminator=terminator)

    records = []
    for table in report.tables:
        for index, row in enumerate(table.formatted_rows()):
            for column, value in zip(table.frame.columns, row):
                records.append([table.title, index, column, value])
    return pd.DataFrame(records, columns=LONG_COLUMNS).to_csv(index=False, lineterminator=terminator)


def _to_json(report):
    payload = {
        'title': report.title,
        'tables': [
            {'title': t.title, 'columns': [str(c) for c in t.frame.columns], 'rows': t.json_rows()}
            for t in report.tables
        ],
        'notes': list(report.notes),
    }
    return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + '\n'


MARKDOWN_TEMPLATE = """# {{ title }}
{% for table in tables %}
## {{ table.title }}

| {{ table.columns | join(' | ') }} |
|{% for _ in table.columns %}---|{% endfor %}
{% for row in table.rows -%}
| {{ row | join(' | ') }} |
{% endfor -%}
{% endfor -%}
{% if notes %}
## 说明

{% for note in notes -%}
- {{ note }}
{% endfor -%}
{% endif -%}
"""


def _escape_cell(text):
    return str(text).replace('|', '\\|')


def _to_markdown(report):
    tables = [
        {
            'title': table.title,
            'columns': [_escape_cell(c) for c in table.frame.columns],
            'rows': [[_escape_cell(v) for v in row] for row in table.formatted_rows()],
        }
        for table in report.tables
    ]
    return Template(MARKDOWN_TEMPLATE).render(title=report.title, tables=tables, notes=report.notes)


_EMITTERS = {'csv': _to_csv, 'json': _to_json, 'markdown': _to_markdown}


def emit_report(report, fmt):
    """按格式输出报告字节；未知格式抛 ReportFormatError"""
    if fmt not in _EMITTERS:
        raise ReportFormatError(f"未知的报告格式: {fmt!r}，可选 {sorted(_EMITTERS)}")
    text = _EMITTERS[fmt](report)
    text = text.replace('\r\n', '\n')
    return text.encode(REPORT_CONFIG['encoding'])


HTML_TEMPLATE = """<!DOCTYPE html>
<html lang="zh-CN">
<head>
    <meta charset="UTF-8">
    <meta name="viewport" content="width=device-width, initial-scale=1.0">
    <title>{{ title }}</title>
    <style>
        body {
            font-family: 'Segoe UI', 'Microsoft YaHei', sans-serif;
            line-height: 1.6;
            color: #333;
            background-color: #f8f9fa;
            padding: 20px;
        }

        .container {
            max-width: 1200px;
            margin: 0 auto;
            background-color: white;
            padding: 40px;
            border-radius: 10px;
            box-shadow: 0 0 30px rgba(0, 0, 0, 0.1);
        }

        h1 {
            color: #2c3e50;
            border-bottom: 3px solid #3498db;
            padding-bottom: 10px;
        }

        h2 {
            color: #2c3e50;
            margin-top: 40px;
            border-bottom: 2px solid #ecf0f1;
        }

        table {
            width: 100%;
            border-collapse: collapse;
            margin: 20px 0;
            font-size: 0.95em;
        }

        th {
            background-color: #3498db;
            color: white;
            text-align: left;
            padding: 10px 12px;
        }

        td {
            padding: 8px 12px;
            border-bottom: 1px solid #ecf0f1;
            font-variant-numeric: tabular-nums;
        }

        tr:nth-child(even) {
            background-color: #f8f9fa;
        }

        .visualization-section {
            text-align: center;
            margin: 30px 0;
        }

        .visualization-section img {
            max-width: 90%;
            height: auto;
            border: 1px solid #ddd;
        }

        .footer {
            margin-top: 50px;
            padding-top: 20px;
            border-top: 1px solid #ecf0f1;
            text-align: center;
            color: #95a5a6;
            font-size: 0.9em;
        }
    </style>
</head>
<body>
    <div class="container">
        {{ html_content }}
        {% for name, image in images.items() %}
        <div class="visualization-section">
            <h2>{{ name }}</h2>
            <img src="data:image/png;base64,{{ image }}" alt="{{ name }}">
        </div>
        {% endfor %}
        <div class="footer">
            <p>fairplan 容量规划报告 | 生成时间: {{ report_date }}</p>
        </div>
    </div>
</body>
</html>
"""


class ReportGenerator:
    def __init__(self, report, report_date=None):
        self.report = report
        self.report_date = report_date or datetime.now().strftime("%Y-%m-%d %H:%M:%S")

    def generate(self, fmt):
        return emit_report(self.report, fmt)

    def generate_markdown(self):
        return emit_report(self.report, 'markdown').decode(REPORT_CONFIG['encoding'])

    def generate_html(self, markdown_report=None):
        """将 Markdown 转换为带图的 HTML 页面"""
        markdown_report = markdown_report or self.generate_markdown()
        html_content = markdown.markdown(markdown_report, extensions=['tables', 'fenced_code'])
        return Template(HTML_TEMPLATE).render(
            title=self.report.title,
            html_content=html_content,
            images=self.report.images,
            report_date=self.report_date,
        )

    def save(self, path, fmt):
        data = self.generate(fmt)
        with io.open(path, 'wb') as handle:
            handle.write(data)
        return path

    def save_html(self, path):
        with io.open(path, 'w', encoding=REPORT_CONFIG['encoding'], newline='\n') as handle:
            handle.write(self.generate_html())
        return path
