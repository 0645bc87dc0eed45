import numpy as np
import pytest

from planners.errors import ConfigurationError, PlanValidationError
from planners.facility import (
    COMPUTE_CLASSES,
    ExperimentRequirement,
    Scenario,
    aggregate_compute,
    evaluate_scenario,
    evaluate_scenarios,
    online_profile,
    solve_uniform_fraction,
    storage_evolution,
    tier0_minimum,
)
from planners.storage_ledger import StorageClass


@pytest.fixture
def toy():
    return Scenario('toy', [
        ExperimentRequirement('A', {'II.a': 100, 'II.b': 50}, 0.5, window=(1, 73)),
        ExperimentRequirement('B', {'II.a': 300}, 0.0),
    ])


@pytest.fixture(scope='module')
def fsplus_result(fsplus):
    return evaluate_scenario(fsplus.scenario('FS+'))


class TestToyScenario:
    def test_profile(self, toy):
        profile = online_profile(toy)
        assert profile.demand.shape == (365,)
        assert profile.demand[0] == 50 and profile.demand[72] == 50 and profile.demand[73] == 0
        assert profile.maximum.value == 50
        assert profile.average.value == pytest.approx(10)

    def test_tier0(self, toy):
        result = tier0_minimum(toy)
        assert result.hs06.value == pytest.approx(100)
        assert result.total_capacity.value == pytest.approx(410)
        assert result.fraction == pytest.approx(100 / 410)

    def test_matrix(self, toy):
        aggregate = aggregate_compute(toy)
        assert list(aggregate.matrix.columns) == list(COMPUTE_CLASSES)
        assert aggregate.iia_total.value == 400
        assert aggregate.shares.loc['A', 'II.a'] == pytest.approx(0.25)
        assert aggregate.shares['I.d'].eq(0).all()

    def test_solve_recovers_fraction(self, toy):
        target = tier0_minimum(toy.with_uniform_fraction(0.3)).fraction
        assert solve_uniform_fraction(toy, target) == pytest.approx(0.3, abs=1e-9)

    def test_unreachable_target(self, toy):
        with pytest.raises(PlanValidationError):
            solve_uniform_fraction(toy, 0.01)


class TestValidation:
    def test_missing_fraction(self):
        scenario = Scenario('s', [ExperimentRequirement('A', {'II.a': 100})])
        with pytest.raises(ConfigurationError):
            tier0_minimum(scenario)

    def test_online_without_window(self):
        scenario = Scenario('s', [ExperimentRequirement('A', {'II.b': 100}, 0.1)])
        with pytest.raises(ConfigurationError):
            online_profile(scenario)

    @pytest.mark.parametrize('window', [(0, 10), (10, 5), (300, 366)])
    def test_window_bounds(self, window):
        with pytest.raises(PlanValidationError):
            ExperimentRequirement('A', {'II.b': 1}, window=window)

    def test_unknown_compute_class(self):
        with pytest.raises(PlanValidationError):
            ExperimentRequirement('A', {'III': 1})

    def test_duplicate_experiments(self):
        with pytest.raises(PlanValidationError):
            Scenario('s', [ExperimentRequirement('A', {}), ExperimentRequirement('A', {})])

    def test_fraction_range(self):
        with pytest.raises(PlanValidationError):
            ExperimentRequirement('A', {'II.a': 1}, 1.5)

    def test_unknown_kind(self):
        with pytest.raises(PlanValidationError):
            Scenario('s', [], kind='MSVd')


class TestFsPlus:
    def test_shared_compute(self, fsplus_result):
        assert fsplus_result.compute.iia_total.value == pytest.approx(1_961_000)
        assert fsplus_result.compute.iib_total.value == pytest.approx(1_082_000)

    def test_online_profile(self, fsplus_result):
        assert fsplus_result.profile.maximum.value == pytest.approx(1_040_000)
        assert fsplus_result.profile.average.value == pytest.approx(113_060_000 / 365)

    def test_tier0_share(self, fsplus_result):
        assert fsplus_result.tier0.fraction == pytest.approx(0.64, abs=0.02)
        assert fsplus_result.tier0.total_capacity.value == pytest.approx(1_961_000 + 113_060_000 / 365)

    def test_storage(self, fsplus_result):
        storage = fsplus_result.storage
        assert storage.saturation.pb == pytest.approx(160, rel=0.15)
        assert 25 <= storage.archive_slope_pb_per_year <= 33
        assert list(storage.by_experiment.columns)[0] == 'CBM'
        np.testing.assert_allclose(storage.by_experiment.sum(axis=1).to_numpy() * 1e15,
                                   storage.disk.stacked.to_numpy())

    def test_solve_for_published_share(self, fsplus):
        fraction = solve_uniform_fraction(fsplus.scenario('FS+'), 0.64)
        assert fraction == pytest.approx(0.211, abs=0.005)


class TestMsvc:
    @pytest.mark.parametrize('name, share', [('MSVc-parallel', 0.81), ('MSVc-sequential', 0.63)])
    def test_tier0_share(self, msvc, name, share):
        assert tier0_minimum(msvc.scenario(name)).fraction == pytest.approx(share, abs=0.02)

    def test_parallel_online_peak(self, msvc):
        profile = online_profile(msvc.scenario('MSVc-parallel'))
        assert profile.maximum.value == pytest.approx(1_880_000)

    def test_sequential_lowers_peak(self, msvc):
        parallel = online_profile(msvc.scenario('MSVc-parallel'))
        sequential = online_profile(msvc.scenario('MSVc-sequential'))
        assert sequential.maximum.value < parallel.maximum.value
        assert sequential.average.value == pytest.approx(parallel.average.value)

    def test_storage(self, msvc):
        storage = storage_evolution(msvc.scenario('MSVc-parallel'))
        assert storage.saturation.pb == pytest.approx(210, rel=0.15)
        assert 25 <= storage.archive_slope_pb_per_year <= 33


def test_parallel_matches_sequential(msvc):
    scenarios = [msvc.scenario(name) for name in msvc.scenario_names()]
    parallel = evaluate_scenarios(scenarios, n_jobs=2)
    for scenario, result in zip(scenarios, parallel):
        sequential = evaluate_scenario(scenario)
        assert result.tier0.fraction == sequential.tier0.fraction
        assert result.storage.saturation == sequential.storage.saturation


def test_storage_prefixes_class_names():
    scenario = Scenario('s', [
        ExperimentRequirement('A', {}, storage_classes=[StorageClass('raw', 'raw_disk', 10, 1)]),
        ExperimentRequirement('B', {}, storage_classes=[StorageClass('raw', 'raw_disk', 20, 1)]),
    ], horizon=(2028, 2029))
    storage = storage_evolution(scenario)
    assert list(storage.disk.frame.columns) == ['A/raw', 'B/raw']
    assert storage.by_experiment.loc[2029].tolist() == pytest.approx([0.01, 0.02])
    assert storage.archive_slope_pb_per_year == 0


def test_late_horizon_archive_matches_full_horizon(fsplus):
    scenario = fsplus.scenario('FS+')
    late = storage_evolution(scenario, horizon=(2030, 2040))
    full = storage_evolution(scenario, horizon=(2028, 2040))
    np.testing.assert_allclose(late.archive.stacked.to_numpy(), full.archive.stacked.loc[2030:].to_numpy())
    np.testing.assert_allclose(late.disk.stacked.to_numpy(), full.disk.stacked.loc[2030:].to_numpy())


def test_archive_slope_uses_first_years_after_start():
    tape = StorageClass('tape', 'raw_archive', (10, 10, 10, 10, 100, 100), start_year=2028)
    scenario = Scenario('s', [ExperimentRequirement('A', {}, storage_classes=[tape])],
                        start_year=2028, horizon=(2028, 2033))
    storage = storage_evolution(scenario)
    assert storage.archive_slope_pb_per_year == pytest.approx(0.01)
