import json
import logging

import pytest

from planners.consistency_checker import (
    FINDING_COLUMNS,
    ConsistencyChecker,
    MetricDeriver,
    consistency_check,
    split_key,
)
from planners.scenario_loader import ScenarioLoader


@pytest.fixture(scope='module')
def fsplus_checker(fsplus):
    return ConsistencyChecker(fsplus).run_all()


def _status(checker):
    return {finding.key: finding.status for finding in checker.get_findings()}


def test_split_key():
    assert split_key('scenarios.FS+.tier0_fraction') == ('scenarios', 'FS+', 'tier0_fraction')
    assert split_key('setups.a.b.event_size_kb') == ('setups', 'a.b', 'event_size_kb')
    with pytest.raises(KeyError):
        split_key('scenarios.FS+')


class TestMetricDeriver:
    def test_derive(self, fsplus):
        deriver = MetricDeriver(fsplus)
        assert deriver.derive('setups.hadron.event_size_kb') == pytest.approx(48.66)
        assert deriver.derive('online_compute.cbm_online.nodes_ceiled') == 1594
        assert deriver.derive('runs.panda_raw.run_seconds') == pytest.approx(8.64e6)

    @pytest.mark.parametrize('key', [
        'detectors.hadron.event_size_kb', 'setups.proton.event_size_kb', 'setups.hadron.colour',
    ])
    def test_unknown(self, fsplus, key):
        with pytest.raises(KeyError):
            MetricDeriver(fsplus).derive(key)

    def test_all_keys(self, fsplus):
        keys = MetricDeriver(fsplus).all_keys(['setups'])
        assert keys[:2] == ['setups.electron.event_size_kb', 'setups.hadron.event_size_kb']


class TestFsPlus:
    def test_every_reference_value_derivable(self, fsplus_checker):
        report = fsplus_checker.get_check_report()
        assert report['underivable'] == 0
        assert report['checked'] == len(report['findings'])

    @pytest.mark.parametrize('key', [
        'online_compute.cbm_online.hs06',
        'online_compute.cbm_online.cores',
        'scenarios.FS+.tier0_fraction',
        'scenarios.FS+.iib_total',
        'offline_estimates.cbm_offline.hs06',
        'storage_plans.cbm.total_pb',
        'bandwidth_budgets.cbm_green_cube.upper_limit_gb_s',
        'bandwidth_budgets.cbm_green_cube.requirement_gb_s',
        'campaigns.panda_offline.hs06_per_year',
    ])
    def test_reproduced_within_tolerance(self, fsplus_checker, key):
        assert _status(fsplus_checker)[key] == 'ok'

    @pytest.mark.parametrize('key', [
        'storage_plans.cbm.annual_raw_pb',
        'transient_filters.cbm_delayed_filter.volume_pb',
        'simulation_budgets.cbm_reconstruction.cores',
        'scenarios.FS+.saturation_pb',
    ])
    def test_known_inconsistencies(self, fsplus_checker, key):
        assert _status(fsplus_checker)[key] == 'deviation'

    def test_equivalent_events_checked(self, fsplus_checker):
        keys = [f.key for f in fsplus_checker.check_report['equivalent_events']]
        assert 'runs.hadron.physics.equivalent_events' in keys
        assert 'runs.panda_raw.online selected.equivalent_events' not in keys

    def test_frame(self, fsplus_checker):
        frame = fsplus_checker.to_frame()
        assert list(frame.columns) == FINDING_COLUMNS
        assert len(frame) == fsplus_checker.get_check_report()['checked']


def test_msvc(msvc):
    findings = consistency_check(msvc)
    status = {f.key: f.status for f in findings}
    assert status['scenarios.MSVc-parallel.tier0_fraction'] == 'ok'
    assert all(f.status != 'underivable' for f in findings)


def test_deviations_are_logged(fsplus, caplog):
    with caplog.at_level(logging.WARNING, logger='planners.consistency_checker'):
        ConsistencyChecker(fsplus).check_reference_values()
    assert any('annual_raw_pb' in record.getMessage() for record in caplog.records)


def test_loose_tolerance_accepts_everything(fsplus):
    findings = consistency_check(fsplus, tolerance=10)
    assert {f.status for f in findings} == {'ok'}


def test_underivable_reference(fsplus_path):
    data = json.loads(fsplus_path.read_text(encoding='utf-8'))
    data['reference_values']['setups.hadron.mass_kg'] = 1.0
    loader = ScenarioLoader(data=json.dumps(data).encode('utf-8')).load()
    report = ConsistencyChecker(loader).check_reference_values().get_check_report()
    assert report['underivable'] == 1
