#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
DOBS v1.0 - Testes dos arquivos de cenário e da linha de comando
"""

import os
import sys

import pandas as pd
import pytest
import yaml

# Adiciona a raiz e o diretório src ao path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), 'src'))

from run import EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION, main
from services.errors import ValidationError
from services.scenario_config import build_plant, build_schedule, dump_config, loader, parse_config, to_scenario

TINY = """
name: tiny
plant:
  kind: matrices
  a: [[-0.5, 0.0, 0.0], [0.5, -1.0, 0.0], [0.0, 0.3, -0.2]]
  c_blocks:
    - [[1.0, 0.0, 0.0]]
    - [[0.0, 1.0, 0.0]]
    - [[0.0, 0.0, 1.0]]
gains: {mode: fixed, gamma: 20.0, gamma_ik: 5.0}
spectra: [[-3.0], [-4.0], [-5.0]]
simulation: {horizon: 0.8, step: 0.01, decimation: 5}
"""

BROKEN_SCHEDULE = """
name: chain-only
plant:
  kind: matrices
  a: [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]]
  c_blocks: [[[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]], [[0.0, 0.0, 1.0]]]
schedule:
  period: 0.4
  slots: 1
  graphs: [[[0, 0, 0], [1, 0, 0], [0, 1, 0]]]
simulation: {step: 0.01}
"""

UNOBSERVABLE = """
name: blind
plant:
  kind: matrices
  a: [[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 3.0]]
  c_blocks: [[[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]]]
simulation: {step: 0.01}
"""


def write_config(tmp_path, text, name='scenario.yaml'):
    path = tmp_path / name
    path.write_text(text, encoding='utf-8')
    return str(path)


def shipped_text(name='power4'):
    with open(loader.shipped_path(name), encoding='utf-8') as handle:
        return handle.read()


# ---------------------------------------------------------------- cenários

def test_shipped_scenarios_are_listed():
    assert {'power4', 'power8'} <= set(loader.shipped())
    with pytest.raises(ValidationError):
        loader.shipped_path('power3')


def test_power_scenarios_load():
    four = loader.load_shipped('power4')
    assert four.agents == 4
    assert four.state_dimension == 16
    assert build_plant(four).n == 16
    eight = loader.load_shipped('power8')
    assert eight.agents == 8
    assert build_schedule(eight).n == 8


def test_canonical_round_trip():
    canonical = dump_config(parse_config(shipped_text()))
    assert dump_config(parse_config(canonical)) == canonical
    tiny = dump_config(parse_config(TINY))
    assert dump_config(parse_config(tiny)) == tiny


def test_defaults_are_filled():
    config = parse_config(TINY)
    assert config.schedule.slots == 4
    assert len(config.schedule.graphs) == 4
    assert config.initial.plant == [1.0, 1.0, 1.0]
    assert config.output.csv == 'timeseries.csv'
    assert config.certify.wp is None


def test_step_must_divide_dwell():
    data = yaml.safe_load(shipped_text())
    data['simulation']['step'] = 0.3
    with pytest.raises(ValidationError, match='step must divide dwell') as info:
        parse_config(yaml.safe_dump(data))
    assert info.value.location == 'simulation.step'


def test_unknown_keys_are_named():
    data = yaml.safe_load(shipped_text())
    data['simulation']['horizn'] = 3.0
    with pytest.raises(ValidationError, match="unknown key 'horizn'") as info:
        parse_config(yaml.safe_dump(data))
    assert info.value.location == 'simulation.horizn'
    with pytest.raises(ValidationError, match="unknown key 'extra'"):
        parse_config(TINY + "extra: 1\n")


def test_schema_errors_carry_location():
    cases = {
        TINY.replace('gamma: 20.0', 'gamma: -1.0'): 'gains.gamma',
        TINY.replace('mode: fixed', 'mode: fast'): 'gains.mode',
        TINY.replace('[[-3.0], [-4.0], [-5.0]]', '[[-3.0], [-4.0]]'): 'spectra',
        TINY + "initial: {estimate_range: [2.0, 1.0]}\n": 'initial.estimate_range',
    }
    for text, location in cases.items():
        with pytest.raises(ValidationError) as info:
            parse_config(text)
        assert info.value.location == location
    with pytest.raises(ValidationError):
        parse_config("name: [unclosed")


def test_to_scenario_overrides():
    config = parse_config(TINY)
    scenario = to_scenario(config, horizon=0.4, gain_mode=None)
    assert scenario.horizon == 0.4
    assert scenario.gain_mode == 'fixed'
    assert scenario.name == 'tiny'
    assert scenario.schedule.dwell == pytest.approx(0.4)


# --------------------------------------------------------------- linha de comando

def test_transform_command(capsys):
    assert main(['transform', '--adj', '0,0;1,0', '--root', '0']) == EXIT_OK
    out = yaml.safe_load(capsys.readouterr().out)
    assert out['members'] == [0, 1]
    assert out['non_members'] == []
    assert out['removed_arcs'] == []


def test_transform_from_config_drops_crossing_arcs(capsys):
    path = loader.shipped_path('power4')
    assert main(['transform', '--config', path, '--graph', '0', '--root', '1']) == EXIT_OK
    out = yaml.safe_load(capsys.readouterr().out)
    # cadeia 0 -> 1 -> 2 -> 3 com raiz 1
    assert out['members'] == [1, 2, 3]
    assert out['non_members'] == [0]
    assert out['removed_arcs'] == [[0, 1]]


def test_transform_rejects_bad_input():
    assert main(['transform', '--adj', '0,0;1,0', '--root', '5']) == EXIT_VALIDATION
    assert main(['transform', '--adj', '0,x;1,0', '--root', '0']) == EXIT_VALIDATION
    assert main(['transform', '--root', '0']) == EXIT_VALIDATION


def test_decompose_command(tmp_path, capsys):
    assert main(['decompose', '--config', write_config(tmp_path, TINY)]) == EXIT_OK
    out = yaml.safe_load(capsys.readouterr().out)
    assert out['indices'] == [1, 1, 1]
    assert out['verification']['passed']


def test_unobservable_plant_is_numerical_failure(tmp_path):
    assert main(['decompose', '--config', write_config(tmp_path, UNOBSERVABLE)]) == EXIT_NUMERICAL


def test_validate_command(tmp_path, capsys):
    assert main(['validate', '--config', loader.shipped_path('power4')]) == EXIT_OK
    assert yaml.safe_load(capsys.readouterr().out)['passed']
    assert main(['validate', '--config', write_config(tmp_path, BROKEN_SCHEDULE)]) == EXIT_VALIDATION
    assert 'union_strongly_connected: false' in capsys.readouterr().out


def test_certify_reports_failure_for_tiny_gains(capsys):
    code = main(['certify', '--config', loader.shipped_path('power4'), '--gamma-ik', '1e-6', '--wp', '1'])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert 'FAIL' in out
    assert 'overall:' in out


def test_certify_suggest_writes_certificate(tmp_path, capsys):
    config = write_config(tmp_path, TINY)
    assert main(['certify', '--config', config, '--suggest', '--out', str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert 'suggested gamma_ik per block' in out
    with open(tmp_path / 'certificate.yaml', encoding='utf-8') as handle:
        assert isinstance(yaml.safe_load(handle), dict)


def test_simulate_command(tmp_path, capsys):
    config = write_config(tmp_path, TINY)
    out_dir = tmp_path / 'out'
    assert main(['simulate', '--config', config, '--out', str(out_dir), '--seed', '3']) == EXIT_OK
    out = capsys.readouterr().out
    assert 'status:' in out
    assert 'seed: 3' in out
    frame = pd.read_csv(out_dir / 'timeseries.csv')
    assert list(frame.columns) == ['t', 'sigma', 'err_1', 'err_2', 'err_3']
    with open(out_dir / 'summary.yaml', encoding='utf-8') as handle:
        summary = yaml.safe_load(handle)
    assert summary['run']['seed'] == 3
    assert summary['run']['horizon'] == 0.8


def test_simulate_flags(tmp_path, capsys):
    config = write_config(tmp_path, TINY)
    code = main(['simulate', '--config', config, '--out', str(tmp_path), '--no-transform', '--adaptive',
                 '--horizon', '0.4'])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert 'transform: False' in out
    assert 'gains: adaptive' in out
    frame = pd.read_csv(tmp_path / 'timeseries.csv')
    assert 'gamma_1_2' in frame.columns


def test_simulate_certified_flag(tmp_path, capsys):
    config = write_config(tmp_path, TINY)
    code = main(['simulate', '--config', config, '--out', str(tmp_path), '--certified', '--horizon', '0.4'])
    assert code == EXIT_OK
    assert 'gains: certified' in capsys.readouterr().out
    with open(tmp_path / 'summary.yaml', encoding='utf-8') as handle:
        summary = yaml.safe_load(handle)
    assert summary['run']['gain_mode'] == 'certified'


def test_adaptive_and_certified_are_exclusive(tmp_path):
    config = write_config(tmp_path, TINY)
    code = main(['simulate', '--config', config, '--out', str(tmp_path), '--adaptive', '--certified'])
    assert code == EXIT_VALIDATION


def test_shipped_benchmarks_use_fixed_gains():
    for name in ('power4', 'power8'):
        s = to_scenario(loader.load_shipped(name))
        assert s.gain_mode == 'fixed'
        assert s.gamma == 100.0


def test_simulate_rejects_bad_step(tmp_path):
    config = write_config(tmp_path, TINY)
    assert main(['simulate', '--config', config, '--out', str(tmp_path), '--step', '0.03']) == EXIT_VALIDATION


def test_cli_usage_errors(tmp_path):
    assert main(['simulate', '--config', str(tmp_path / 'missing.yaml')]) == EXIT_VALIDATION
    assert main(['bench', 'power5']) == EXIT_VALIDATION
    assert main(['unknown-command']) == EXIT_VALIDATION
    assert main(['--help']) == EXIT_OK
