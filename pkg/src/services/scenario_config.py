#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
DOBS v1.0 - Arquivos de cenário
Leitura YAML validada, forma canônica (round-trip) e conversão em Scenario
"""

import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import yaml

from config import Config
from services.digraph import Digraph, SwitchingSchedule, default_schedule
from services.errors import ValidationError
from services.power_system import PowerAreaParams, adjacent_coupling, build_power_system
from services.simkit import GAIN_MODES, Scenario, steps_per_dwell
from services.sysdecomp import Plant

logger = logging.getLogger(__name__)

SCENARIO_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'scenarios')

ADJACENT_COUPLING = 0.1


@dataclass
class PlantConfig:
    kind: str = 'power'
    areas: Optional[List[Dict[str, float]]] = None
    coupling: Union[str, List[List[float]]] = 'zero'
    a: Optional[List[List[float]]] = None
    c_blocks: Optional[List[List[List[float]]]] = None


@dataclass
class ScheduleConfig:
    period: float = 1.6
    slots: int = 4
    assignment: Optional[List[int]] = None
    graphs: Optional[List[List[List[int]]]] = None


@dataclass
class GainsConfig:
    mode: str = 'fixed'
    gamma: float = 100.0
    gamma_ik: Union[float, List[List[float]]] = 10.0


@dataclass
class InitialConfig:
    plant: Union[float, List[float]] = 1.0
    estimate_range: List[float] = field(default_factory=lambda: [-3.0, 3.0])
    estimates: Optional[List[List[float]]] = None


@dataclass
class SimulationConfig:
    horizon: float = Config.DEFAULT_HORIZON
    step: float = Config.DEFAULT_STEP
    decimation: int = Config.SAMPLE_DECIMATION
    transform: bool = True
    threshold: float = Config.CONVERGENCE_RATIO
    record_estimates: bool = False
    record_gains: bool = False


@dataclass
class CertifyConfig:
    wp: Optional[float] = None


@dataclass
class OutputConfig:
    csv: str = 'timeseries.csv'
    summary: str = 'summary.yaml'


@dataclass
class ScenarioConfig:
    name: str = 'scenario'
    plant: PlantConfig = field(default_factory=PlantConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    gains: GainsConfig = field(default_factory=GainsConfig)
    spectra: Optional[List[List[Union[float, str]]]] = None
    initial: InitialConfig = field(default_factory=InitialConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    certify: CertifyConfig = field(default_factory=CertifyConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @property
    def agents(self) -> int:
        if self.plant.kind == 'power':
            return len(self.plant.areas or [])
        return len(self.plant.c_blocks or [])

    @property
    def state_dimension(self) -> int:
        if self.plant.kind == 'power':
            return 4 * self.agents
        return len(self.plant.a or [])


SECTIONS = {
    'plant': PlantConfig,
    'schedule': ScheduleConfig,
    'gains': GainsConfig,
    'initial': InitialConfig,
    'simulation': SimulationConfig,
    'certify': CertifyConfig,
    'output': OutputConfig,
}

AREA_KEYS = ('m', 'r', 'd', 't_t', 't_g')


def _check_keys(data: Any, allowed: Sequence[str], path: str):
    if not isinstance(data, dict):
        raise ValidationError(f"expected a mapping, got {type(data).__name__}", location=path or '<root>')
    for key in data:
        if key not in allowed:
            location = f"{path}.{key}" if path else str(key)
            raise ValidationError(f"unknown key '{key}'", location=location)


def _number(value: Any, path: str, positive: bool = False) -> float:
    # YAML 1.1 lê 1e-2 (sem ponto) como texto
    if isinstance(value, str):
        try:
            value = float(value)
        except ValueError:
            raise ValidationError(f"expected a number, got {value!r}", location=path)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"expected a number, got {value!r}", location=path)
    value = float(value)
    if not np.isfinite(value):
        raise ValidationError(f"expected a finite number, got {value}", location=path)
    if positive and not value > 0:
        raise ValidationError(f"must be positive, got {value}", location=path)
    return value


def _integer(value: Any, path: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"expected an integer, got {value!r}", location=path)
    if value < minimum:
        raise ValidationError(f"must be at least {minimum}, got {value}", location=path)
    return value


def _flag(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise ValidationError(f"expected true or false, got {value!r}", location=path)
    return value


def _matrix(value: Any, path: str, rows: Optional[int] = None, cols: Optional[int] = None) -> List[List[float]]:
    if not isinstance(value, list) or not all(isinstance(row, list) for row in value):
        raise ValidationError("expected a list of rows", location=path)
    matrix = [[_number(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)] for i, row in enumerate(value)]
    widths = {len(row) for row in matrix}
    if len(widths) > 1:
        raise ValidationError(f"rows have different lengths {sorted(widths)}", location=path)
    if rows is not None and len(matrix) != rows:
        raise ValidationError(f"expected {rows} rows, got {len(matrix)}", location=path)
    if cols is not None and matrix and len(matrix[0]) != cols:
        raise ValidationError(f"expected {cols} columns, got {len(matrix[0])}", location=path)
    return matrix


def _spectrum_value(value: Any, path: str) -> Union[float, str]:
    """Reais como número; complexos como texto '(-1+2j)'"""
    if isinstance(value, str):
        try:
            parsed = complex(value.replace(' ', ''))
        except ValueError:
            raise ValidationError(f"not a complex number: {value!r}", location=path)
        return parsed.real if parsed.imag == 0 else str(parsed)
    return _number(value, path)


def _parse_plant(data: Dict[str, Any]) -> PlantConfig:
    _check_keys(data, [f for f in PlantConfig.__dataclass_fields__], 'plant')
    kind = data.get('kind', 'power')
    if kind not in ('power', 'matrices'):
        raise ValidationError(f"must be 'power' or 'matrices', got {kind!r}", location='plant.kind')

    if kind == 'power':
        for key in ('a', 'c_blocks'):
            if data.get(key) is not None:
                raise ValidationError("only allowed when kind is 'matrices'", location=f'plant.{key}')
        areas = data.get('areas')
        if not isinstance(areas, list) or not areas:
            raise ValidationError("expected a nonempty list of areas", location='plant.areas')
        parsed = []
        for i, area in enumerate(areas):
            path = f'plant.areas[{i}]'
            _check_keys(area, AREA_KEYS, path)
            for key in AREA_KEYS:
                if key not in area:
                    raise ValidationError("missing key", location=f"{path}.{key}")
            parsed.append({key: _number(area[key], f"{path}.{key}", positive=True) for key in AREA_KEYS})
        coupling = data.get('coupling', 'zero')
        if isinstance(coupling, str):
            if coupling not in ('zero', 'adjacent'):
                raise ValidationError(f"must be 'zero', 'adjacent' or a matrix, got {coupling!r}",
                                      location='plant.coupling')
        else:
            coupling = _matrix(coupling, 'plant.coupling', len(parsed), len(parsed))
        return PlantConfig(kind='power', areas=parsed, coupling=coupling)

    if data.get('areas') is not None:
        raise ValidationError("only allowed when kind is 'power'", location='plant.areas')
    if data.get('coupling', 'zero') != 'zero':
        raise ValidationError("only allowed when kind is 'power'", location='plant.coupling')
    a = _matrix(data.get('a'), 'plant.a')
    n = len(a)
    if not n or len(a[0]) != n:
        raise ValidationError("A must be a nonempty square matrix", location='plant.a')
    blocks = data.get('c_blocks')
    if not isinstance(blocks, list) or not blocks:
        raise ValidationError("expected a nonempty list of output blocks", location='plant.c_blocks')
    c_blocks = [_matrix(block, f'plant.c_blocks[{i}]', cols=n) for i, block in enumerate(blocks)]
    return PlantConfig(kind='matrices', areas=None, coupling='zero', a=a, c_blocks=c_blocks)


def _parse_schedule(data: Dict[str, Any], agents: int) -> ScheduleConfig:
    _check_keys(data, [f for f in ScheduleConfig.__dataclass_fields__], 'schedule')
    period = _number(data.get('period', 1.6), 'schedule.period', positive=True)
    slots = _integer(data.get('slots', 4), 'schedule.slots', minimum=1)

    graphs = data.get('graphs')
    if graphs is None:
        if agents < 2:
            raise ValidationError("explicit graphs are required for fewer than two agents", location='schedule.graphs')
        graphs = [g.to_rows() for g in default_schedule(agents).library]
    if not isinstance(graphs, list) or not graphs:
        raise ValidationError("expected a nonempty list of adjacency matrices", location='schedule.graphs')
    parsed_graphs = []
    for index, rows in enumerate(graphs):
        path = f'schedule.graphs[{index}]'
        matrix = _matrix(rows, path, agents, agents)
        if any(v not in (0.0, 1.0) for row in matrix for v in row):
            raise ValidationError("adjacency entries must be 0 or 1", location=path)
        if any(matrix[i][i] for i in range(agents)):
            raise ValidationError("self-loops are not allowed", location=path)
        parsed_graphs.append([[int(v) for v in row] for row in matrix])

    assignment = data.get('assignment')
    if assignment is None:
        assignment = [slot % len(parsed_graphs) for slot in range(slots)]
    if not isinstance(assignment, list) or len(assignment) != slots:
        raise ValidationError(f"expected a list of {slots} graph indices", location='schedule.assignment')
    assignment = [_integer(v, f'schedule.assignment[{i}]') for i, v in enumerate(assignment)]
    for i, v in enumerate(assignment):
        if v >= len(parsed_graphs):
            raise ValidationError(f"graph index {v} out of range ({len(parsed_graphs)} graphs)",
                                  location=f'schedule.assignment[{i}]')
    return ScheduleConfig(period=period, slots=slots, assignment=assignment, graphs=parsed_graphs)


def _parse_gains(data: Dict[str, Any], agents: int) -> GainsConfig:
    _check_keys(data, [f for f in GainsConfig.__dataclass_fields__], 'gains')
    mode = data.get('mode', 'fixed')
    if mode not in GAIN_MODES:
        raise ValidationError(f"must be one of {list(GAIN_MODES)}, got {mode!r}", location='gains.mode')
    gamma = _number(data.get('gamma', 100.0), 'gains.gamma', positive=True)
    gamma_ik = data.get('gamma_ik', 10.0)
    if isinstance(gamma_ik, list):
        gamma_ik = _matrix(gamma_ik, 'gains.gamma_ik', agents, agents)
        if any(v <= 0 for row in gamma_ik for v in row):
            raise ValidationError("every entry must be positive", location='gains.gamma_ik')
    else:
        gamma_ik = _number(gamma_ik, 'gains.gamma_ik', positive=True)
    return GainsConfig(mode=mode, gamma=gamma, gamma_ik=gamma_ik)


def _parse_spectra(data: Any, agents: int) -> Optional[List[List[Union[float, str]]]]:
    if data is None:
        return None
    if not isinstance(data, list) or len(data) != agents:
        raise ValidationError(f"expected {agents} lists of eigenvalues", location='spectra')
    parsed = []
    for i, values in enumerate(data):
        if not isinstance(values, list):
            raise ValidationError("expected a list of eigenvalues", location=f'spectra[{i}]')
        parsed.append([_spectrum_value(v, f'spectra[{i}][{j}]') for j, v in enumerate(values)])
    return parsed


def _parse_initial(data: Dict[str, Any], agents: int, n: int) -> InitialConfig:
    _check_keys(data, [f for f in InitialConfig.__dataclass_fields__], 'initial')
    plant = data.get('plant', 1.0)
    if isinstance(plant, list):
        if len(plant) != n:
            raise ValidationError(f"expected {n} entries, got {len(plant)}", location='initial.plant')
        plant = [_number(v, f'initial.plant[{i}]') for i, v in enumerate(plant)]
    else:
        plant = [_number(plant, 'initial.plant')] * n

    window = data.get('estimate_range', [-3.0, 3.0])
    if not isinstance(window, list) or len(window) != 2:
        raise ValidationError("expected [low, high]", location='initial.estimate_range')
    window = [_number(v, f'initial.estimate_range[{i}]') for i, v in enumerate(window)]
    if window[0] > window[1]:
        raise ValidationError(f"low {window[0]} exceeds high {window[1]}", location='initial.estimate_range')

    estimates = data.get('estimates')
    if estimates is not None:
        estimates = _matrix(estimates, 'initial.estimates', agents, n)
    return InitialConfig(plant=plant, estimate_range=window, estimates=estimates)


def _parse_simulation(data: Dict[str, Any], dwell: float) -> SimulationConfig:
    _check_keys(data, [f for f in SimulationConfig.__dataclass_fields__], 'simulation')
    defaults = SimulationConfig()
    step = _number(data.get('step', defaults.step), 'simulation.step', positive=True)
    try:
        steps_per_dwell(dwell, step)
    except ValidationError as e:
        raise ValidationError(str(e), location='simulation.step') from e
    return SimulationConfig(
        horizon=_number(data.get('horizon', defaults.horizon), 'simulation.horizon', positive=True),
        step=step,
        decimation=_integer(data.get('decimation', defaults.decimation), 'simulation.decimation', minimum=1),
        transform=_flag(data.get('transform', defaults.transform), 'simulation.transform'),
        threshold=_number(data.get('threshold', defaults.threshold), 'simulation.threshold', positive=True),
        record_estimates=_flag(data.get('record_estimates', defaults.record_estimates), 'simulation.record_estimates'),
        record_gains=_flag(data.get('record_gains', defaults.record_gains), 'simulation.record_gains'),
    )


def _parse_certify(data: Dict[str, Any]) -> CertifyConfig:
    _check_keys(data, [f for f in CertifyConfig.__dataclass_fields__], 'certify')
    wp = data.get('wp')
    return CertifyConfig(wp=None if wp is None else _number(wp, 'certify.wp', positive=True))


def _parse_output(data: Dict[str, Any]) -> OutputConfig:
    _check_keys(data, [f for f in OutputConfig.__dataclass_fields__], 'output')
    parsed = OutputConfig()
    for key in ('csv', 'summary'):
        value = data.get(key, getattr(parsed, key))
        if not isinstance(value, str) or not value:
            raise ValidationError("expected a file name", location=f'output.{key}')
        setattr(parsed, key, value)
    return parsed


def parse_config(text: str) -> ScenarioConfig:
    """Valida o documento e devolve a configuração com todos os padrões preenchidos"""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ValidationError(f"malformed YAML: {e}") from e
    if data is None:
        data = {}
    _check_keys(data, [f for f in ScenarioConfig.__dataclass_fields__], '')

    name = data.get('name', 'scenario')
    if not isinstance(name, str) or not name:
        raise ValidationError("expected a nonempty string", location='name')
    sections = {key: data.get(key) or {} for key in SECTIONS}

    plant = _parse_plant(sections['plant'])
    config = ScenarioConfig(name=name, plant=plant)
    agents, n = config.agents, config.state_dimension

    config.schedule = _parse_schedule(sections['schedule'], agents)
    config.gains = _parse_gains(sections['gains'], agents)
    config.spectra = _parse_spectra(data.get('spectra'), agents)
    config.initial = _parse_initial(sections['initial'], agents, n)
    config.simulation = _parse_simulation(sections['simulation'], config.schedule.period / config.schedule.slots)
    config.certify = _parse_certify(sections['certify'])
    config.output = _parse_output(sections['output'])
    return config


def dump_config(config: ScenarioConfig) -> str:
    """Forma canônica: chaves na ordem do esquema, padrões explícitos"""
    return yaml.safe_dump(asdict(config), sort_keys=False, default_flow_style=None, allow_unicode=True)


def build_schedule(config: ScenarioConfig) -> SwitchingSchedule:
    library = tuple(Digraph.from_rows(rows) for rows in config.schedule.graphs)
    return SwitchingSchedule(period=config.schedule.period, slots=config.schedule.slots,
                             assignment=tuple(config.schedule.assignment), library=library)


def build_plant(config: ScenarioConfig, schedule: Optional[SwitchingSchedule] = None) -> Plant:
    plant = config.plant
    if plant.kind == 'matrices':
        return Plant(a=np.array(plant.a), c_blocks=tuple(np.array(block) for block in plant.c_blocks))
    params = [PowerAreaParams(**area) for area in plant.areas]
    if plant.coupling == 'zero':
        coupling = None
    elif plant.coupling == 'adjacent':
        coupling = adjacent_coupling(schedule or build_schedule(config), ADJACENT_COUPLING)
    else:
        coupling = np.array(plant.coupling)
    return build_power_system(params, coupling)


def spectra_values(config: ScenarioConfig) -> Optional[List[List[complex]]]:
    if config.spectra is None:
        return None
    return [[complex(v) if isinstance(v, str) else v for v in values] for values in config.spectra]


def to_scenario(config: ScenarioConfig, **overrides) -> Scenario:
    """Scenario executável; overrides substituem campos (flags da linha de comando)"""
    schedule = build_schedule(config)
    spectra = spectra_values(config)
    fields = dict(
        plant=build_plant(config, schedule),
        schedule=schedule,
        gain_mode=config.gains.mode,
        gamma=config.gains.gamma,
        gamma_ik=np.array(config.gains.gamma_ik) if isinstance(config.gains.gamma_ik, list) else config.gains.gamma_ik,
        spectra=spectra,
        initial_plant=np.array(config.initial.plant),
        estimate_range=tuple(config.initial.estimate_range),
        initial_estimates=None if config.initial.estimates is None else np.array(config.initial.estimates),
        horizon=config.simulation.horizon,
        step=config.simulation.step,
        decimation=config.simulation.decimation,
        transform_enabled=config.simulation.transform,
        threshold=config.simulation.threshold,
        record_estimates=config.simulation.record_estimates,
        record_gains=config.simulation.record_gains,
        wp=config.certify.wp,
        name=config.name,
    )
    fields.update({key: value for key, value in overrides.items() if value is not None})
    return Scenario(**fields)


class ScenarioLoader:
    """Carrega cenários de arquivo ou os cenários de referência empacotados"""

    def __init__(self, scenario_dir: str = SCENARIO_DIR):
        self.scenario_dir = scenario_dir

    def shipped(self) -> List[str]:
        if not os.path.isdir(self.scenario_dir):
            return []
        return sorted(os.path.splitext(f)[0] for f in os.listdir(self.scenario_dir) if f.endswith('.yaml'))

    def shipped_path(self, name: str) -> str:
        path = os.path.join(self.scenario_dir, f'{name}.yaml')
        if not os.path.isfile(path):
            raise ValidationError(f"no shipped scenario named '{name}' (available: {self.shipped()})")
        return path

    def load(self, path: str) -> ScenarioConfig:
        try:
            with open(path, 'r', encoding='utf-8') as handle:
                text = handle.read()
        except OSError as e:
            raise ValidationError(f"cannot read scenario file: {e}", location=path) from e
        config = parse_config(text)
        logger.info(f"Cenário '{config.name}' carregado de {path}")
        return config

    def load_shipped(self, name: str) -> ScenarioConfig:
        return self.load(self.shipped_path(name))


# Instância global
loader = ScenarioLoader()
