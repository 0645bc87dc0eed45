import pytest

from planners.beamline import rate_profile
from planners.detector_model import (
    DetectorContribution,
    Setup,
    data_rate_table,
    event_size,
    event_size_breakdown,
    gc_bandwidth_requirement,
    inspill_data_rate,
)
from planners.errors import PlanValidationError
from planners.quantities import Rate


class TestEventSize:
    @pytest.mark.parametrize('name, expected_kb', [('hadron', 48.7), ('electron', 73.4), ('muon', 28.0)])
    def test_published_totals(self, fsplus, name, expected_kb):
        assert event_size(fsplus.setup(name)).kb == pytest.approx(expected_kb, rel=0.005)

    def test_hadron_exact(self, fsplus):
        assert event_size(fsplus.setup('hadron')).value_bytes == 48_660

    def test_empty_setup(self):
        assert event_size(Setup('empty')).value_bytes == 0

    def test_energy_scale(self, fsplus):
        hadron = fsplus.setup('hadron')
        assert event_size(hadron.with_energy_scale(0.7)).value_bytes == pytest.approx(0.7 * 48_660)

    def test_breakdown_matches_total(self, fsplus):
        table = event_size_breakdown(fsplus.setup('muon'))
        assert list(table['system']) == ['STS', 'MUCH', 'TRD', 'TOF', 'Total']
        assert table['event_size_kb'].iloc[:-1].sum() == pytest.approx(table['event_size_kb'].iloc[-1])
        assert table['event_size_kb'].iloc[-1] == pytest.approx(28.044)


class TestValidation:
    def test_bytes_per_message_must_be_positive_integer(self):
        with pytest.raises(PlanValidationError):
            DetectorContribution('STS', 10, 2.5)
        with pytest.raises(PlanValidationError):
            DetectorContribution('STS', 10, 0)

    def test_negative_messages(self):
        with pytest.raises(PlanValidationError):
            DetectorContribution('STS', -1, 4)

    def test_energy_scale_range(self):
        with pytest.raises(PlanValidationError):
            Setup('hadron', energy_scale_factor=1.2)

    def test_blank_name(self):
        with pytest.raises(PlanValidationError):
            Setup('  ')


class TestDataRates:
    def test_published_rates(self, hadron_run, electron_run, muon_run):
        rates = [inspill_data_rate(run.setup, run.profile).gb_per_s
                 for run in (hadron_run, electron_run, muon_run)]
        assert rates[0] == pytest.approx(244, rel=0.02)
        assert rates[1] == pytest.approx(7.35, rel=0.01)
        assert rates[2] == pytest.approx(140, rel=0.02)

    def test_empty_setup_has_no_rate(self, fsplus, sis100):
        profile = rate_profile(1e7, sis100)
        silent = Setup('silent')
        assert inspill_data_rate(silent, profile).value == 0

    def test_table(self, hadron_run, muon_run):
        table = data_rate_table([(hadron_run.setup, hadron_run.profile), (muon_run.setup, muon_run.profile)])
        assert list(table['setup']) == ['hadron', 'muon']
        assert table['data_rate_gb_s'].iloc[0] == pytest.approx(243.3)


class TestBandwidth:
    def test_upper_limit_and_contingency(self, hadron_run):
        base = inspill_data_rate(hadron_run.setup, hadron_run.profile)
        result = gc_bandwidth_requirement(base, noise_fraction=0.1, contingency=1.5)
        assert result.upper_limit.gb_per_s == pytest.approx(270, rel=0.02)
        assert result.requirement.gb_per_s == pytest.approx(400, rel=0.02)

    def test_from_published_upper_limit(self):
        result = gc_bandwidth_requirement(Rate.bytes_per_second(270e9), noise_fraction=0, contingency=1.5)
        assert result.requirement.gb_per_s == pytest.approx(405)

    def test_default_noise_is_dark_rate_ratio(self):
        result = gc_bandwidth_requirement(Rate.bytes_per_second(244e9))
        assert result.upper_limit.gb_per_s == pytest.approx(253.6)

    def test_zero_base(self):
        assert gc_bandwidth_requirement(0, 0.1, 1.5).requirement.value == 0

    def test_event_rate_rejected(self):
        with pytest.raises(PlanValidationError):
            gc_bandwidth_requirement(Rate.events(10))

    def test_contingency_below_one(self):
        with pytest.raises(PlanValidationError):
            gc_bandwidth_requirement(1e9, 0.1, 0.9)
