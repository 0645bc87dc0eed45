import json

import pytest

from planners.errors import ConfigurationError, ScenarioError
from planners.scenario_loader import (
    ScenarioLoader,
    canonicalize,
    locate_line,
    parse_scenario,
    resolve_scenario_path,
)
from planners.trigger_pipeline import branch_storage


@pytest.fixture
def fsplus_dict(fsplus_path):
    return json.loads(fsplus_path.read_text(encoding='utf-8'))


def _dump(data):
    return json.dumps(data, indent=2, ensure_ascii=False).encode('utf-8')


class TestParse:
    def test_shipped_files_are_valid(self, fsplus_path, msvc_path):
        for path in (fsplus_path, msvc_path):
            result = parse_scenario(path.read_bytes())
            assert result.ok, [str(issue) for issue in result.issues]

    def test_missing_schema_version(self, fsplus_dict):
        del fsplus_dict['schema_version']
        result = parse_scenario(_dump(fsplus_dict))
        assert not result.ok
        assert [(i.path, i.message) for i in result.issues] == [('schema_version', 'missing schema_version')]

    def test_wrong_schema_version(self, fsplus_dict):
        fsplus_dict['schema_version'] = '2.0'
        result = parse_scenario(_dump(fsplus_dict))
        assert result.issues[0].path == 'schema_version'

    def test_unresolved_setup_reference(self, fsplus_dict):
        fsplus_dict['runs']['hadron']['setup'] = 'hadrn'
        text = _dump(fsplus_dict)
        result = parse_scenario(text)
        assert not result.ok
        issue = result.issues[0]
        assert issue.path == 'runs.hadron.setup'
        assert "'hadrn'" in issue.message
        expected_line = next(number for number, line in enumerate(text.decode().splitlines(), 1)
                             if '"setup": "hadrn"' in line)
        assert issue.line == expected_line

    def test_unresolved_scenario_experiment(self, fsplus_dict):
        fsplus_dict['scenarios']['FS+']['participants'][0]['experiment'] = 'CBN'
        result = parse_scenario(_dump(fsplus_dict))
        assert [i.path for i in result.issues] == ['scenarios.FS+.participants.0.experiment']

    def test_unknown_key_rejected(self, fsplus_dict):
        fsplus_dict['setups']['hadron']['colour'] = 'blue'
        result = parse_scenario(_dump(fsplus_dict))
        assert not result.ok
        assert result.issues[0].path == 'setups.hadron.colour'
        assert result.issues[0].line is not None

    def test_out_of_range_value(self, fsplus_dict):
        fsplus_dict['machine_plans']['sis100']['duty_cycle'] = 1.5
        result = parse_scenario(_dump(fsplus_dict))
        assert result.issues[0].path == 'machine_plans.sis100.duty_cycle'

    def test_inconsistent_reference_machine(self, fsplus_dict):
        fsplus_dict['reference_machines']['xeon_e5_2680v4']['hs06_total'] = 5000
        text = _dump(fsplus_dict)
        result = parse_scenario(text)
        assert not result.ok
        issue = next(i for i in result.issues if i.path == 'reference_machines.xeon_e5_2680v4')
        assert '5000' in issue.message
        expected_line = next(number for number, line in enumerate(text.decode().splitlines(), 1)
                             if '"xeon_e5_2680v4": {' in line)
        assert issue.line == expected_line

    def test_storage_end_before_scenario_start(self, fsplus_dict):
        fsplus_dict['experiments']['PANDA']['storage']['FS+'][0]['end_year'] = 2026
        result = parse_scenario(_dump(fsplus_dict))
        assert not result.ok
        assert [i.path for i in result.issues] == ['experiments.PANDA.storage.FS+.0']
        assert result.issues[0].line is not None

    def test_zero_beam_time_run(self, fsplus_dict):
        fsplus_dict['machine_plans']['hesr']['machine_hours_per_year'] = 0
        result = parse_scenario(_dump(fsplus_dict))
        assert not result.ok
        assert 'runs.panda_raw' in [i.path for i in result.issues]

    def test_unknown_summary_stage(self, fsplus_dict):
        fsplus_dict['file_size_estimates']['panda']['summary'][0]['stages'] = ['digii']
        result = parse_scenario(_dump(fsplus_dict))
        assert [i.path for i in result.issues] == ['file_size_estimates.panda.summary.0.stages.0']
        assert "'digii'" in result.issues[0].message

    def test_syntax_error_line(self):
        result = parse_scenario(b'{\n  "schema_version": "1.0",\n  oops\n}\n')
        assert result.issues[0].line == 3

    @pytest.mark.parametrize('data', [b'\xff\xfe\x00', b'', b'[]', b'42', b'null'])
    def test_garbage_is_reported_not_raised(self, data):
        result = parse_scenario(data)
        assert not result.ok
        assert result.issues

    def test_collects_several_issues(self, fsplus_dict):
        fsplus_dict['runs']['hadron']['setup'] = 'a'
        fsplus_dict['runs']['muon']['setup'] = 'b'
        result = parse_scenario(_dump(fsplus_dict))
        assert len(result.issues) == 2


class TestCanonicalize:
    def test_idempotent(self, fsplus_path):
        once = canonicalize(parse_scenario(fsplus_path.read_bytes()).document)
        twice = canonicalize(parse_scenario(once).document)
        assert once == twice

    def test_format(self, msvc_path):
        text = canonicalize(parse_scenario(msvc_path.read_bytes()).document).decode('utf-8')
        assert text.endswith('}\n')
        assert '\r' not in text
        assert text.startswith('{\n  "archival_budgets"')

    def test_key_order_does_not_matter(self, fsplus_dict):
        reordered = dict(reversed(list(fsplus_dict.items())))
        assert canonicalize(parse_scenario(_dump(reordered)).document) == \
            canonicalize(parse_scenario(_dump(fsplus_dict)).document)


def test_locate_line():
    text = '{\n  "a": {\n    "b": 1\n  }\n}'
    assert locate_line(text, ('a', 'b')) == 3
    assert locate_line(text, ('zzz',)) is None


class TestLoader:
    def test_data_info(self, fsplus):
        info = fsplus.get_data_info()
        assert info['schema_version'] == '1.0'
        assert info['scenarios'] == ['FS+']
        assert info['experiments'] == 7

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError):
            ScenarioLoader(tmp_path / 'nope.json').load()

    def test_invalid_file_carries_issues(self, tmp_path):
        path = tmp_path / 'bad.json'
        path.write_text('{"schema_version": "1.0", "runs": {"r": {}}}', encoding='utf-8')
        with pytest.raises(ScenarioError) as excinfo:
            ScenarioLoader(path).load()
        assert excinfo.value.issues
        assert all(issue.path.startswith('runs.r') for issue in excinfo.value.issues)

    def test_in_memory(self, msvc_path):
        loader = ScenarioLoader(data=msvc_path.read_bytes()).load()
        assert loader.path is None
        assert loader.scenario_names() == ['MSVc-parallel', 'MSVc-sequential']

    def test_env_path(self, monkeypatch, msvc_path):
        monkeypatch.setenv('FAIRPLAN_SCENARIO_PATH', str(msvc_path))
        assert ScenarioLoader().path == msvc_path

    def test_unknown_entry(self, fsplus):
        with pytest.raises(ConfigurationError):
            fsplus.run('proton')

    def test_hesr_beam_time(self, fsplus):
        assert fsplus.run('panda_raw').run_seconds.seconds == pytest.approx(8.64e6)

    def test_panda_volume_uses_binary_prefixes(self, fsplus):
        run = fsplus.run('panda_raw')
        volume = branch_storage(run, run.branches[0]).volume
        assert volume.tb == pytest.approx(1062.2, rel=1e-4)

    def test_file_size_estimate(self, fsplus):
        assert fsplus.file_size_estimate_names() == ['panda']
        estimate = fsplus.file_size_estimate('panda')
        assert [c.name for c in estimate.categories] == ['RAW-COLD', 'RAW-HOT', 'AOD', 'SIM', 'AOD-SIM']
        digi = estimate.stage_table().set_index('stage').loc['digi', 'per_year_tb']
        run = fsplus.run('panda_raw')
        assert digi == pytest.approx(branch_storage(run, run.branches[0]).volume.tb, rel=1e-3)

    def test_electron_average_capped(self, fsplus):
        assert fsplus.run('electron').profile.average.value == 100_000

    def test_scenario_storage_defaults_to_start_year(self, msvc):
        scenario = msvc.scenario('MSVc-parallel')
        assert all(c.start_year >= 2032 for e in scenario.experiments for c in e.storage_classes)


class TestResolvePath:
    def test_argument_wins(self, monkeypatch):
        monkeypatch.setenv('FAIRPLAN_SCENARIO_PATH', 'env.json')
        assert str(resolve_scenario_path('arg.json')) == 'arg.json'

    def test_env(self, monkeypatch):
        monkeypatch.setenv('FAIRPLAN_SCENARIO_PATH', 'env.json')
        assert str(resolve_scenario_path()) == 'env.json'

    def test_nothing_given(self, monkeypatch):
        monkeypatch.delenv('FAIRPLAN_SCENARIO_PATH', raising=False)
        with pytest.raises(ConfigurationError):
            resolve_scenario_path()
