"""
带单位的标量类型：算力 (HEPSpec06)、数据量、速率、时长

所有数值均为双精度浮点；数据量记录解析时采用的字节前缀约定
（十进制 1 kB = 1000 B，二进制 1 kB = 1024 B）。
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from planners.errors import PlanValidationError

SECONDS_PER_HOUR = 3600.0
SECONDS_PER_DAY = 86400.0
DAYS_PER_YEAR = 365

PREFIX_EXPONENTS = {'': 0, 'k': 1, 'M': 2, 'G': 3, 'T': 4, 'P': 5}


class ByteConvention(str, Enum):
    DECIMAL = 'decimal'
    BINARY = 'binary'

    @property
    def base(self):
        return 1000 if self is ByteConvention.DECIMAL else 1024


class RateDimension(str, Enum):
    EVENTS = 'events/s'
    BYTES = 'bytes/s'


def _non_negative(value, what):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise PlanValidationError(f"{what} 不是数值: {value!r}") from None
    if math.isnan(value) or value < 0:
        raise PlanValidationError(f"{what} 必须为非负数: {value}")
    return value


def _convention(convention):
    try:
        return ByteConvention(convention)
    except ValueError:
        raise PlanValidationError(f"未知的字节约定: {convention!r}") from None


def prefix_factor(prefix, convention):
    if prefix not in PREFIX_EXPONENTS:
        raise PlanValidationError(f"未知的单位前缀: {prefix!r}")
    return float(_convention(convention).base ** PREFIX_EXPONENTS[prefix])


@dataclass(frozen=True)
class ComputePower:
    """算力，单位 HS06"""
    value: float

    def __post_init__(self):
        object.__setattr__(self, 'value', _non_negative(self.value, '算力'))

    def __add__(self, other):
        if not isinstance(other, ComputePower):
            return NotImplemented
        return ComputePower(self.value + other.value)

    def __radd__(self, other):
        # 支持 sum()
        if other == 0:
            return self
        return self.__add__(other)

    def __mul__(self, factor):
        return ComputePower(self.value * float(factor))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ComputePower):
            if other.value == 0:
                raise PlanValidationError("算力为零，无法计算比值")
            return self.value / other.value
        return ComputePower(self.value / float(other))

    @property
    def khs06(self):
        return self.value / 1e3

    def __str__(self):
        return f"{self.value:,.0f} HS06"


@dataclass(frozen=True)
class Duration:
    seconds: float

    def __post_init__(self):
        object.__setattr__(self, 'seconds', _non_negative(self.seconds, '时长'))

    @classmethod
    def from_hours(cls, hours):
        return cls(_non_negative(hours, '小时数') * SECONDS_PER_HOUR)

    @classmethod
    def from_days(cls, days):
        return cls(_non_negative(days, '天数') * SECONDS_PER_DAY)

    @property
    def hours(self):
        return self.seconds / SECONDS_PER_HOUR

    @property
    def days(self):
        return self.seconds / SECONDS_PER_DAY

    def __add__(self, other):
        if not isinstance(other, Duration):
            return NotImplemented
        return Duration(self.seconds + other.seconds)

    def __mul__(self, factor):
        return Duration(self.seconds * float(factor))

    __rmul__ = __mul__


@dataclass(frozen=True)
class DataVolume:
    """数据量，内部以字节存储，附带前缀约定"""
    value_bytes: float
    convention: ByteConvention = ByteConvention.DECIMAL

    def __post_init__(self):
        object.__setattr__(self, 'value_bytes', _non_negative(self.value_bytes, '数据量'))
        object.__setattr__(self, 'convention', _convention(self.convention))

    def to(self, prefix, convention=None):
        """按指定前缀换算（默认沿用自身约定）"""
        return self.value_bytes / prefix_factor(prefix, convention or self.convention)

    @property
    def kb(self):
        return self.to('k')

    @property
    def gb(self):
        return self.to('G')

    @property
    def tb(self):
        return self.to('T')

    @property
    def pb(self):
        return self.to('P')

    def __add__(self, other):
        if not isinstance(other, DataVolume):
            return NotImplemented
        return DataVolume(self.value_bytes + other.value_bytes, self.convention)

    def __radd__(self, other):
        if other == 0:
            return self
        return self.__add__(other)

    def __mul__(self, factor):
        return DataVolume(self.value_bytes * float(factor), self.convention)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, DataVolume):
            if other.value_bytes == 0:
                raise PlanValidationError("数据量为零，无法计算比值")
            return self.value_bytes / other.value_bytes
        if isinstance(other, Duration):
            if other.seconds == 0:
                raise PlanValidationError("时长为零，无法计算数据速率")
            return Rate(self.value_bytes / other.seconds, RateDimension.BYTES)
        return DataVolume(self.value_bytes / float(other), self.convention)

    def __str__(self):
        suffix = 'iB' if self.convention is ByteConvention.BINARY else 'B'
        for prefix in ('P', 'T', 'G', 'M', 'k'):
            if self.value_bytes >= prefix_factor(prefix, self.convention):
                return f"{self.to(prefix):.4g} {prefix}{suffix}"
        return f"{self.value_bytes:.4g} B"


@dataclass(frozen=True)
class Rate:
    """事件率 (events/s) 或数据率 (bytes/s)"""
    value: float
    dimension: RateDimension = RateDimension.EVENTS

    def __post_init__(self):
        object.__setattr__(self, 'value', _non_negative(self.value, '速率'))
        try:
            object.__setattr__(self, 'dimension', RateDimension(self.dimension))
        except ValueError:
            raise PlanValidationError(f"未知的速率量纲: {self.dimension!r}") from None

    @classmethod
    def events(cls, value):
        return cls(value, RateDimension.EVENTS)

    @classmethod
    def bytes_per_second(cls, value):
        return cls(value, RateDimension.BYTES)

    def _same_dimension(self, other):
        if not isinstance(other, Rate):
            raise PlanValidationError(f"速率不能与 {type(other).__name__} 运算")
        if other.dimension is not self.dimension:
            raise PlanValidationError(
                f"速率量纲不一致: {self.dimension.value} 与 {other.dimension.value}")

    def __add__(self, other):
        if isinstance(other, (int, float)) and other == 0:
            return self
        self._same_dimension(other)
        return Rate(self.value + other.value, self.dimension)

    __radd__ = __add__

    def __sub__(self, other):
        self._same_dimension(other)
        return Rate(self.value - other.value, self.dimension)

    def __mul__(self, factor):
        return Rate(self.value * float(factor), self.dimension)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Rate):
            self._same_dimension(other)
            if other.value == 0:
                raise PlanValidationError("速率为零，无法计算比值")
            return self.value / other.value
        return Rate(self.value / float(other), self.dimension)

    def __lt__(self, other):
        self._same_dimension(other)
        return self.value < other.value

    def __le__(self, other):
        self._same_dimension(other)
        return self.value <= other.value

    def over(self, duration):
        """累计一段时间：数据率得到 DataVolume，事件率得到事件数"""
        if self.dimension is RateDimension.BYTES:
            return DataVolume(self.value * duration.seconds)
        return self.value * duration.seconds

    @property
    def gb_per_s(self):
        self._require(RateDimension.BYTES)
        return self.value / 1e9

    def _require(self, dimension):
        if self.dimension is not dimension:
            raise PlanValidationError(f"需要 {dimension.value} 速率，实际为 {self.dimension.value}")

    def __str__(self):
        if self.dimension is RateDimension.BYTES:
            return f"{self.value / 1e9:.4g} GB/s"
        return f"{self.value:.4g} /s"


def convert_volume(value, prefix, convention=ByteConvention.DECIMAL):
    """把带前缀的数值换算为 DataVolume，例如 (48.7, 'k', decimal) -> 48,700 B"""
    value = _non_negative(value, '数据量')
    convention = _convention(convention)
    return DataVolume(value * prefix_factor(prefix, convention), convention)


def hs06_scale_by_clock(ref_hs06, ref_clock_mhz, target_clock_mhz):
    """按时钟频率之比换算同架构机器的 HS06"""
    if not isinstance(ref_hs06, ComputePower):
        ref_hs06 = ComputePower(ref_hs06)
    for name, clock in (('参考时钟', ref_clock_mhz), ('目标时钟', target_clock_mhz)):
        if clock is None or not clock > 0:
            raise PlanValidationError(f"{name}必须为正数: {clock}")
    return ref_hs06 * (float(target_clock_mhz) / float(ref_clock_mhz))
