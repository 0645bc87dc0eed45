import json

import numpy as np
import pytest

from planners.facility import evaluate_scenario
from planners.scenario_loader import ScenarioLoader, canonicalize, parse_scenario


def _random_bytes(rng, fsplus_bytes):
    """纯随机字节，或对合法文件做截断/翻转"""
    mode = rng.integers(0, 3)
    if mode == 0:
        return rng.bytes(int(rng.integers(0, 200)))
    data = bytearray(fsplus_bytes)
    if mode == 1:
        return bytes(data[:int(rng.integers(0, len(data)))])
    for _ in range(int(rng.integers(1, 8))):
        data[int(rng.integers(0, len(data)))] = int(rng.integers(0, 256))
    return bytes(data)


def test_parser_never_raises(fsplus_path):
    rng = np.random.default_rng(7)
    fsplus_bytes = fsplus_path.read_bytes()
    for _ in range(10_000):
        result = parse_scenario(_random_bytes(rng, fsplus_bytes))
        if not result.ok:
            assert result.issues
            assert all(isinstance(issue.path, str) for issue in result.issues)


def _random_document(rng):
    setups = {}
    for i in range(int(rng.integers(1, 4))):
        setups[f'setup{i}'] = {
            'contributions': [
                {'name': f'D{j}', 'messages_per_event': float(rng.uniform(0, 5000)),
                 'bytes_per_message': int(rng.integers(1, 17))}
                for j in range(int(rng.integers(1, 5)))
            ],
            'energy_scale_factor': float(rng.uniform(0.1, 1)),
            'convention': str(rng.choice(['decimal', 'binary'])),
        }
    machine_plans = {'plan': {
        'machine_hours_per_year': float(rng.uniform(1000, 8000)),
        'cave_share': float(rng.uniform(0.5, 1)),
        'competing_days': int(rng.integers(0, 20)),
        'duty_cycle': float(rng.uniform(0.1, 1)),
        'peak_to_average': float(rng.uniform(1, 3)),
    }}
    runs = {
        f'run{i}': {
            'setup': str(rng.choice(list(setups))),
            'machine_plan': 'plan',
            'peak_rate': float(rng.uniform(1e3, 1e7)),
            'branches': [{'name': 'b', 'selectivity': float(rng.uniform(1, 300))}],
        }
        for i in range(int(rng.integers(1, 4)))
    }
    experiments = {}
    participants = []
    for i in range(int(rng.integers(1, 6))):
        name = f'EXP{i}'
        experiments[name] = {
            'compute': {'P': {'II.a': float(rng.uniform(0, 1e6)), 'II.b': float(rng.uniform(0, 1e6))}},
            'storage': {'P': [{'name': 'raw', 'kind': 'raw_disk',
                               'inflow_tb_per_year': float(rng.uniform(0, 1e4)),
                               'retention_years': int(rng.integers(1, 6))}]},
        }
        first = int(rng.integers(1, 366))
        participants.append({'experiment': name, 'window': [first, int(rng.integers(first, 366))],
                             'data_intensive_offline_fraction': float(rng.uniform(0, 1))})
    return {
        'schema_version': '1.0',
        'machine_plans': machine_plans,
        'setups': setups,
        'runs': runs,
        'storage_plans': {'all': sorted(runs)},
        'experiments': experiments,
        'scenarios': {'S': {'phase': 'P', 'start_year': int(rng.integers(2025, 2035)),
                            'participants': participants}},
    }


def test_canonicalization_idempotent_on_random_documents():
    rng = np.random.default_rng(11)
    for _ in range(100):
        data = json.dumps(_random_document(rng), indent=int(rng.integers(0, 4))).encode('utf-8')
        first = parse_scenario(data)
        assert first.ok, [str(issue) for issue in first.issues]
        once = canonicalize(first.document)
        twice = canonicalize(parse_scenario(once).document)
        assert once == twice


@pytest.mark.parametrize('seed', range(5))
def test_random_documents_evaluate(seed):
    loader = ScenarioLoader(data=json.dumps(_random_document(np.random.default_rng(seed))).encode()).load()
    result = evaluate_scenario(loader.scenario('S'))
    assert 0 <= result.tier0.fraction
    assert result.storage.saturation.value_bytes >= 0
