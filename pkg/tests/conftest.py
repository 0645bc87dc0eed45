from pathlib import Path

import pytest

from planners.beamline import MachinePlan
from planners.scenario_loader import ScenarioLoader

ROOT = Path(__file__).resolve().parent.parent
SCENARIO_DIR = ROOT / 'scenarios'


@pytest.fixture(scope='session')
def fsplus_path():
    return SCENARIO_DIR / 'fsplus.json'


@pytest.fixture(scope='session')
def msvc_path():
    return SCENARIO_DIR / 'msvc.json'


@pytest.fixture(scope='session')
def schema_path():
    return SCENARIO_DIR / 'schema.json'


@pytest.fixture(scope='session')
def fsplus(fsplus_path):
    return ScenarioLoader(fsplus_path).load()


@pytest.fixture(scope='session')
def msvc(msvc_path):
    return ScenarioLoader(msvc_path).load()


@pytest.fixture
def sis100():
    return MachinePlan(machine_hours_per_year=6000, cave_share=0.5, competing_days=30,
                       duty_cycle=0.75, peak_to_average=2)


@pytest.fixture(scope='session')
def hadron_run(fsplus):
    return fsplus.run('hadron')


@pytest.fixture(scope='session')
def electron_run(fsplus):
    return fsplus.run('electron')


@pytest.fixture(scope='session')
def muon_run(fsplus):
    return fsplus.run('muon')
