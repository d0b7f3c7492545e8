#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
DOBS v1.0 - Comandos de simulação
simulate (cenário em arquivo) e bench (cenários de referência)
"""

import logging
from typing import Optional

import click

from config import Config
from services.errors import ValidationError
from services.scenario_config import ScenarioConfig, loader, to_scenario
from services.simkit import simulator

logger = logging.getLogger(__name__)

BENCHMARKS = ('power4', 'power8')


def _gain_mode(adaptive: bool, certified: bool) -> Optional[str]:
    if adaptive and certified:
        raise ValidationError("--adaptive and --certified are mutually exclusive")
    if adaptive:
        return 'adaptive'
    return 'certified' if certified else None


def _run(config: ScenarioConfig, seed: int, out_dir: str, no_transform: bool, adaptive: bool, certified: bool,
         wp: Optional[float], horizon: Optional[float], step: Optional[float]):
    scenario = to_scenario(
        config,
        transform_enabled=False if no_transform else None,
        gain_mode=_gain_mode(adaptive, certified),
        wp=wp,
        horizon=horizon,
        step=step,
    )
    result = simulator.run_and_export(scenario, seed, out_dir, config.output.csv, config.output.summary)
    summary = result['summary']['metrics']

    status = 'converged' if summary['converged'] else ('DIVERGED' if summary['diverged'] else 'NOT CONVERGED')
    click.echo(f"scenario: {scenario.name}  seed: {seed}  transform: {scenario.transform_enabled}  gains: {scenario.gain_mode}")
    click.echo(f"initial max error: {summary['initial_max_error']:.6g}")
    click.echo(f"terminal max error: {summary['terminal_max_error']:.6g}  (threshold {summary['threshold']:.6g})")
    click.echo(f"time to threshold: {summary['time_to_threshold']}")
    click.echo(f"status: {status}")
    click.echo(f"csv: {result['csv']}")
    click.echo(f"summary: {result['summary_path']}")


def _common_options(command):
    options = [
        click.option('--seed', type=int, default=0, show_default=True, help='Seed das estimativas iniciais'),
        click.option('--out', 'out_dir', type=click.Path(file_okay=False), default=Config.OUTPUT_DIR,
                     show_default=True, help='Diretório de saída'),
        click.option('--no-transform', is_flag=True, help='Desliga a transformação de rede (ablação)'),
        click.option('--adaptive', is_flag=True, help='Ganhos γ_ik adaptativos'),
        click.option('--certified', is_flag=True, help='Ganhos γ_ik sugeridos pelo certificado'),
        click.option('--wp', type=float, help='℘ para a certificação dos ganhos'),
        click.option('--horizon', type=float, help='Horizonte em segundos'),
        click.option('--step', type=float, help='Passo h em segundos (precisa dividir τ)'),
    ]
    for option in reversed(options):
        command = option(command)
    return command


@click.command('simulate')
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False), required=True)
@_common_options
def simulate_command(config_path: str, **options):
    """Executa um cenário e grava CSV + resumo"""
    _run(loader.load(config_path), **options)


@click.command('bench')
@click.argument('name', type=click.Choice(BENCHMARKS))
@_common_options
def bench_command(name: str, **options):
    """Cenários de referência do sistema elétrico"""
    _run(loader.load_shipped(name), **options)


simulation_commands = (simulate_command, bench_command)
