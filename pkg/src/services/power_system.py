#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
DOBS v1.0 - Sistema elétrico multiárea
Planta de referência: ângulo, velocidade, potência mecânica e válvula por área
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from services.digraph import SwitchingSchedule, union_graph
from services.errors import ValidationError
from services.sysdecomp import Plant

logger = logging.getLogger(__name__)

AREA_STATES = 4


@dataclass(frozen=True)
class PowerAreaParams:
    """Inércia M, regulação R, amortecimento de carga D, constantes T_t e T_g"""

    m: float
    r: float
    d: float
    t_t: float
    t_g: float

    def __post_init__(self):
        for name in ('m', 'r', 'd', 't_t', 't_g'):
            if not getattr(self, name) > 0:
                raise ValidationError(f"area parameter {name} must be positive, got {getattr(self, name)}")


FOUR_AREAS = (
    PowerAreaParams(m=12.0, r=0.05, d=0.7, t_t=0.65, t_g=0.1),
    PowerAreaParams(m=10.0, r=0.0625, d=0.9, t_t=0.4, t_g=0.1),
    PowerAreaParams(m=8.0, r=0.08, d=0.9, t_t=0.3, t_g=0.1),
    PowerAreaParams(m=8.0, r=0.08, d=0.7, t_t=0.6, t_g=0.1),
)

# Áreas 5-8 repetem 1-4
EIGHT_AREAS = FOUR_AREAS + FOUR_AREAS


def area_block(params: PowerAreaParams, coupling_sum: float = 0.0) -> np.ndarray:
    two_m = 2.0 * params.m
    return np.array([
        [0.0, 1.0, 0.0, 0.0],
        [-coupling_sum / two_m, -params.d / two_m, 1.0 / two_m, 0.0],
        [0.0, 0.0, -1.0 / params.t_t, 0.0],
        [0.0, -1.0 / (params.r * params.t_g), 0.0, -1.0 / params.t_g],
    ])


def area_output() -> np.ndarray:
    """C_i local: Δθ_i e ΔP_v"""
    c = np.zeros((2, AREA_STATES))
    c[0, 0] = 1.0
    c[1, 3] = 1.0
    return c


def build_power_system(params: Sequence[PowerAreaParams], p_coupling: Optional[np.ndarray] = None) -> Plant:
    """
    Estados em col{Δθ, Δw, ΔP_m, ΔP_v} por área; A_ij tem só P_ij/2M_i na
    linha de Δw, coluna de Δθ_j.
    """
    areas = len(params)
    if areas < 1:
        raise ValidationError("power system needs at least one area")
    p = np.zeros((areas, areas)) if p_coupling is None else np.asarray(p_coupling, dtype=float)
    if p.shape != (areas, areas):
        raise ValidationError(f"P coupling must be {areas}x{areas}, got {p.shape}")
    if np.any(np.diag(p) != 0) or np.any(p < 0) or not np.allclose(p, p.T):
        raise ValidationError("P coupling must be symmetric, nonnegative, with zero diagonal")

    n = AREA_STATES * areas
    a = np.zeros((n, n))
    c_blocks = []
    for i, area in enumerate(params):
        rows = slice(AREA_STATES * i, AREA_STATES * (i + 1))
        a[rows, rows] = area_block(area, p[i].sum())
        for j in range(areas):
            if j != i and p[i, j]:
                a[AREA_STATES * i + 1, AREA_STATES * j] = p[i, j] / (2.0 * area.m)
        c = np.zeros((2, n))
        c[:, rows] = area_output()
        c_blocks.append(c)

    logger.debug(f"Sistema elétrico com {areas} áreas, {int(np.count_nonzero(p) / 2)} interligações")
    return Plant(a=a, c_blocks=tuple(c_blocks))


def adjacent_coupling(schedule: SwitchingSchedule, value: float = 0.1) -> np.ndarray:
    """P_ij = value entre áreas vizinhas na união dos grafos da agenda"""
    if not value > 0:
        raise ValidationError(f"coupling value must be positive, got {value}")
    adj = union_graph(schedule).adj
    neighbours = adj | adj.T
    return np.where(neighbours, value, 0.0)
