#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
DOBS v1.0 - Comandos de análise
transform, decompose, certify e validate
"""

import logging
import os
from typing import Any, Dict, Optional

import click
import numpy as np
import yaml

from services.certify import certifier
from services.digraph import Digraph, subgraph_matrices, transform, validate_assumptions
from services.errors import ValidationError
from services.scenario_config import build_plant, build_schedule, loader, spectra_values
from services.sysdecomp import decompose, design_observer_gains, verify_decomposition

logger = logging.getLogger(__name__)


def emit(document: Dict[str, Any]):
    click.echo(yaml.safe_dump(document, sort_keys=False, default_flow_style=None, allow_unicode=True), nl=False)


def _rows(matrix: np.ndarray, digits: int = 10) -> list:
    return np.round(np.asarray(matrix, dtype=float), digits).tolist()


def parse_adjacency(text: str) -> Digraph:
    """'0,0,0;1,0,0;0,1,0' -> Digraph (linha i lista os arcos que chegam em i)"""
    try:
        rows = [[int(v) for v in row.split(',')] for row in text.strip().split(';') if row.strip()]
    except ValueError as e:
        raise ValidationError(f"adjacency must be ';'-separated rows of ','-separated 0/1 values: {e}",
                              location='--adj') from e
    return Digraph.from_rows(rows)


@click.command('transform')
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False), help='Arquivo de cenário YAML')
@click.option('--graph', 'graph_index', type=int, default=0, show_default=True, help='Índice do grafo na biblioteca')
@click.option('--adj', type=str, help="Adjacência explícita, ex. '0,0;1,0'")
@click.option('--root', type=int, required=True, help='Nó raiz k (a partir de 0)')
def transform_command(config_path: Optional[str], graph_index: int, adj: Optional[str], root: int):
    """Grafo transformado e conjunto de membros para uma raiz"""
    if adj:
        graph = parse_adjacency(adj)
    elif config_path:
        schedule = build_schedule(loader.load(config_path))
        if not 0 <= graph_index < len(schedule.library):
            raise ValidationError(f"graph index {graph_index} out of range ({len(schedule.library)} graphs)",
                                  location='--graph')
        graph = schedule.library[graph_index]
    else:
        raise ValidationError("either --adj or --config is required")

    tg = transform(graph, root)
    mats = subgraph_matrices(tg)
    eigs = np.linalg.eigvals(mats.h_matrix) if mats.pi else np.array([])
    emit({
        'root': root,
        'members': sorted(tg.members),
        'non_members': tg.non_members,
        'removed_arcs': sorted(set(graph.arcs()) - set(tg.as_digraph().arcs())),
        'adjacency': tg.as_digraph().to_rows(),
        'h_min_real_eigenvalue': float(eigs.real.min()) if eigs.size else None,
    })


@click.command('decompose')
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False), required=True)
def decompose_command(config_path: str):
    """Matriz T, blocos (A_io, C_io), acoplamentos e resíduos"""
    config = loader.load(config_path)
    plant = build_plant(config)
    dec = decompose(plant)
    report = verify_decomposition(plant, dec)
    emit({
        'indices': list(dec.indices),
        't_matrix': _rows(dec.t_mat),
        'blocks': [
            {'block': i + 1, 'a_io': _rows(a), 'c_io': _rows(c)}
            for i, (a, c) in enumerate(zip(dec.blocks_a, dec.blocks_c))
        ],
        'couplings': {f'{i + 1},{l + 1}': _rows(m) for (i, l), m in sorted(dec.couplings.items()) if m.size},
        'output_couplings': {f'{i + 1},{l + 1}': _rows(m) for (i, l), m in sorted(dec.output_couplings.items())},
        'verification': report,
    })


@click.command('certify')
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--wp', type=float, help='℘ (padrão: regra do ponto médio)')
@click.option('--gamma-ik', type=float, help='γ_ik uniforme no lugar do valor do cenário')
@click.option('--suggest', is_flag=True, help='Sugere o menor γ_ik certificado por bloco')
@click.option('--literal-a1o', is_flag=True, help='Usa A_1o em Ξ_i◇ para todos os blocos')
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), help='Grava certificate.yaml neste diretório')
def certify_command(config_path: str, wp: Optional[float], gamma_ik: Optional[float], suggest: bool,
                    literal_a1o: bool, out_dir: Optional[str]):
    """Tabela de margens das condições de convergência"""
    config = loader.load(config_path)
    schedule = build_schedule(config)
    plant = build_plant(config, schedule)
    dec = decompose(plant)
    gains = design_observer_gains(dec, spectra_values(config))
    wp = wp if wp is not None else config.certify.wp

    if suggest:
        result = certifier.suggest(dec, gains, schedule, wp=wp)
        report = result['report']
        click.echo(f"suggested gamma_ik per block: {np.round(result['gamma_lower'], 6).tolist()}")
    else:
        table = gamma_ik if gamma_ik is not None else config.gains.gamma_ik
        report = certifier.certify(dec, gains, schedule, wp=wp, gamma_ik=np.asarray(table, dtype=float),
                                   literal_a1o=literal_a1o)
    click.echo(certifier.render(report))

    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, 'certificate.yaml')
        with open(path, 'w', encoding='utf-8') as handle:
            yaml.safe_dump(report.to_dict(), handle, sort_keys=False, allow_unicode=True)
        logger.info(f"📊 Certificado salvo em {path}")


@click.command('validate')
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--details', is_flag=True, help='Inclui as testemunhas de caminho por par')
def validate_command(config_path: str, details: bool):
    """Hipóteses da agenda: conectividade conjunta, caminhos por par e dwell"""
    schedule = build_schedule(loader.load(config_path))
    report = validate_assumptions(schedule)
    if not details:
        report.pop('pair_witnesses', None)
    emit(report)
    if not report['passed']:
        raise ValidationError("schedule does not satisfy the switching assumptions")


analysis_commands = (transform_command, decompose_command, certify_command, validate_command)
