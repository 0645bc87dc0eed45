import pytest

from planners.errors import PlanValidationError
from planners.quantities import (
    ByteConvention,
    ComputePower,
    DataVolume,
    Duration,
    Rate,
    RateDimension,
    convert_volume,
    hs06_scale_by_clock,
    prefix_factor,
)


class TestConvertVolume:
    def test_decimal_kilobytes(self):
        volume = convert_volume(48.7, 'k', 'decimal')
        assert volume.value_bytes == pytest.approx(48_700)
        assert volume.convention is ByteConvention.DECIMAL

    def test_zero_petabytes(self):
        assert convert_volume(0, 'P', 'binary').value_bytes == 0

    def test_binary_terabyte(self):
        assert convert_volume(1, 'T', 'binary').value_bytes == 1_099_511_627_776

    def test_negative_rejected(self):
        with pytest.raises(PlanValidationError):
            convert_volume(-1, 'k')

    def test_unknown_prefix_rejected(self):
        with pytest.raises(PlanValidationError):
            convert_volume(1, 'X')

    def test_unknown_convention_rejected(self):
        with pytest.raises(PlanValidationError):
            convert_volume(1, 'k', 'metric')

    def test_round_trip_through_prefix(self):
        volume = convert_volume(16.5, 'k', 'binary')
        assert volume.kb == pytest.approx(16.5)
        assert volume.to('k', 'decimal') == pytest.approx(16.896)


class TestHs06ScaleByClock:
    def test_calibration_to_lower_clock(self):
        scaled = hs06_scale_by_clock(654, 2400, 2260)
        assert scaled.value == pytest.approx(615.85)
        assert round(scaled.value) == 616

    def test_identity(self):
        assert hs06_scale_by_clock(ComputePower(654), 2400, 2400).value == pytest.approx(654)

    def test_halving(self):
        assert hs06_scale_by_clock(100, 2000, 1000).value == pytest.approx(50)

    @pytest.mark.parametrize('ref_clock, target_clock', [(0, 1000), (1000, 0), (-1, 1000)])
    def test_non_positive_clock(self, ref_clock, target_clock):
        with pytest.raises(PlanValidationError):
            hs06_scale_by_clock(100, ref_clock, target_clock)


class TestComputePower:
    def test_negative_rejected(self):
        with pytest.raises(PlanValidationError):
            ComputePower(-1)

    def test_sum_and_scaling(self):
        total = sum([ComputePower(1.5e5), ComputePower(2.5e5)])
        assert total.value == 4e5
        assert (total * 2).khs06 == pytest.approx(800)
        assert ComputePower(10) / ComputePower(4) == 2.5


class TestRate:
    def test_dimension_mismatch_rejected(self):
        with pytest.raises(PlanValidationError):
            Rate.events(1) + Rate.bytes_per_second(1)

    def test_bytes_rate_over_duration_is_volume(self):
        volume = Rate.bytes_per_second(1e9).over(Duration(10))
        assert isinstance(volume, DataVolume)
        assert volume.gb == pytest.approx(10)

    def test_event_rate_over_duration_is_count(self):
        assert Rate.events(100).over(Duration.from_hours(1)) == pytest.approx(360_000)

    def test_gb_per_s_needs_bytes(self):
        with pytest.raises(PlanValidationError):
            Rate.events(1).gb_per_s

    def test_volume_divided_by_duration(self):
        rate = DataVolume(2e9) / Duration(2)
        assert rate.dimension is RateDimension.BYTES
        assert rate.gb_per_s == pytest.approx(1)


@pytest.mark.parametrize('numerator, denominator', [
    (ComputePower(10), ComputePower(0)),
    (DataVolume(1e12), DataVolume(0)),
    (Rate.events(5), Rate.events(0)),
    (DataVolume(1e12), Duration(0)),
])
def test_ratio_by_zero_quantity_rejected(numerator, denominator):
    with pytest.raises(PlanValidationError):
        numerator / denominator


def test_prefix_factor_bases():
    assert prefix_factor('P', 'decimal') == 1e15
    assert prefix_factor('k', ByteConvention.BINARY) == 1024


def test_duration_conversions():
    assert Duration.from_days(1).hours == pytest.approx(24)
    with pytest.raises(PlanValidationError):
        Duration(-5)
