"""
规划引擎的异常类型
"""
from __future__ import annotations

from dataclasses import dataclass


class PlanningError(Exception):
    """规划引擎异常基类"""


class PlanValidationError(PlanningError, ValueError):
    """运算输入不合法（负数据量、非正时钟频率、比例越界等）"""


class ConfigurationError(PlanningError):
    """场景配置缺失，不做静默默认"""


class ReportFormatError(PlanningError, ValueError):
    """未知的报告输出格式"""


@dataclass(frozen=True)
class ScenarioIssue:
    """带文档路径和行号的场景校验问题"""
    path: str
    message: str
    line: int | None = None

    def __str__(self):
        location = self.path or '<root>'
        if self.line is not None:
            location = f"{location} (第 {self.line} 行)"
        return f"{location}: {self.message}"


class ScenarioError(PlanningError):
    """场景文件校验失败，携带全部问题列表"""

    def __init__(self, issues):
        self.issues = list(issues)
        summary = '; '.join(str(issue) for issue in self.issues[:5])
        if len(self.issues) > 5:
            summary += f" ... 共 {len(self.issues)} 个问题"
        super().__init__(summary or '场景文件校验失败')
