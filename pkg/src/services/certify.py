#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
DOBS v1.0 - Certificado de convergência
Constrói Q_io, P_io, P_iu, Ξ e as medidas de permanência de cada bloco e
avalia as condições suficientes sobre γ_ik e ℘
"""

import logging
import math
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.linalg import null_space, schur, solve_continuous_lyapunov, solve_sylvester
from scipy.optimize import brentq

from config import Config
from services.digraph import SwitchingSchedule, member_set, subgraph_matrices, transform
from services.errors import InfeasibilityError, ValidationError
from services.sysdecomp import Decomposition, ObserverGains

logger = logging.getLogger(__name__)


def lambda_max(matrix: np.ndarray) -> float:
    """λ̄ da parte simétrica; matriz vazia conta como 0"""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh((matrix + matrix.T) / 2.0).max())


def lambda_min(matrix: np.ndarray) -> float:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        return math.inf
    return float(np.linalg.eigvalsh((matrix + matrix.T) / 2.0).min())


def solve_diag_q(h: np.ndarray, margin: Optional[float] = None) -> np.ndarray:
    """
    Q diagonal positiva com λ̲(Q𝓗 + 𝓗ᵀQ) = 2 + margin.
    Q₀ = diag(v/w), w = 𝓗⁻¹1, v = 𝓗⁻ᵀ1, depois escala.
    """
    margin = Config.Q_MARGIN if margin is None else margin
    h = np.atleast_2d(np.asarray(h, dtype=float))
    if h.size == 0:
        return np.zeros((0, 0))
    if h.shape[0] != h.shape[1]:
        raise ValidationError(f"H must be square, got {h.shape}")

    off = h - np.diag(np.diag(h))
    eigs = np.linalg.eigvals(h)
    if np.any(off > Config.RANK_TOL) or eigs.real.min() <= Config.RANK_TOL:
        raise InfeasibilityError(
            "H is not a nonsingular M-matrix",
            report={'min_real_eigenvalue': float(eigs.real.min()), 'max_off_diagonal': float(off.max(initial=0.0))})

    ones = np.ones(h.shape[0])
    w = np.linalg.solve(h, ones)
    v = np.linalg.solve(h.T, ones)
    if np.any(w <= 0) or np.any(v <= 0):
        raise InfeasibilityError("M-matrix scaling vectors are not positive",
                                 report={'w': w.tolist(), 'v': v.tolist()})
    q0 = np.diag(v / w)
    base = lambda_min(q0 @ h + h.T @ q0)
    if base <= 0:
        raise InfeasibilityError(f"diagonal scaling failed: λ̲ = {base:.3e}", report={'lambda_min': base})
    return q0 * ((2.0 + margin) / base)


def _perron_p(l: np.ndarray) -> Optional[np.ndarray]:
    """diag do vetor de Perron à esquerda, quando 𝓛 tem núcleo esquerdo simples e positivo"""
    kernel = null_space(l.T, rcond=Config.RANK_TOL)
    if kernel.shape[1] != 1:
        return None
    xi = kernel[:, 0]
    xi = xi if xi.sum() > 0 else -xi
    if np.any(xi <= Config.RANK_TOL * np.abs(xi).max()):
        return None
    return np.diag(xi / xi.max())


def _spectral_p(l: np.ndarray) -> np.ndarray:
    """
    𝓛 = W·diag(L₊, L₀)·W⁻¹ por Schur ordenada e Sylvester; P = W⁻ᵀ·diag(P₊, I)·W⁻¹
    com L₊ᵀP₊ + P₊L₊ = 2I. A parte de autovalor zero é semissimples para laplacianos.
    """
    n = l.shape[0]
    shift = 1e-7 * max(1.0, float(np.abs(l).max()))
    t_shift, z, sdim = schur(l - shift * np.eye(n), output='real', sort='rhp')
    t_mat = t_shift + shift * np.eye(n)
    if sdim == 0:
        return np.eye(n)
    t11 = t_mat[:sdim, :sdim]
    t12 = t_mat[:sdim, sdim:]
    t22 = t_mat[sdim:, sdim:]

    x = solve_sylvester(t11, -t22, -t12) if sdim < n else np.zeros((sdim, 0))
    s_inv = np.eye(n)
    s_inv[:sdim, sdim:] = -x
    w_inv = s_inv @ z.T

    core = np.eye(n)
    core[:sdim, :sdim] = solve_continuous_lyapunov(t11.T, 2.0 * np.eye(sdim))
    p = w_inv.T @ core @ w_inv
    return (p + p.T) / 2.0


def _marginal_report(p: np.ndarray, l: np.ndarray) -> Dict[str, float]:
    return {
        'p_min_eigenvalue': lambda_min(p),
        'sym_min_eigenvalue': lambda_min(p @ l + l.T @ p),
    }


def solve_marginal_p(l: np.ndarray) -> np.ndarray:
    """
    P ≻ 0 com P𝓛 + 𝓛ᵀP ⪰ -tol·I, construída diretamente (sem projeções alternadas):
    diagonal de Perron quando o núcleo esquerdo é simples e positivo, senão
    separação de Schur entre a parte nula e a estável
    """
    l = np.atleast_2d(np.asarray(l, dtype=float))
    if l.size == 0:
        return np.zeros((0, 0))
    if l.shape[0] != l.shape[1]:
        raise ValidationError(f"Laplacian must be square, got {l.shape}")
    n = l.shape[0]
    if not np.any(l):
        return np.eye(n)

    tol = Config.PSD_TOL
    attempts = []
    for name, build in (('perron', _perron_p), ('spectral', _spectral_p)):
        p = build(l)
        if p is None:
            continue
        # normaliza para λ̲(P) = 1, a tolerância passa a ser relativa
        p = p / lambda_min(p) if lambda_min(p) > 0 else p
        report = _marginal_report(p, l)
        scale = max(1.0, lambda_max(p) * float(np.abs(l).max()))
        attempts.append({'method': name, **report})
        if report['p_min_eigenvalue'] > 0 and report['sym_min_eigenvalue'] >= -tol * scale:
            logger.debug(f"P_iu resolvida pelo método {name}")
            return p

    raise InfeasibilityError("no positive definite P with P·L + Lᵀ·P ⪰ 0 was found",
                             report={'attempts': attempts, 'tolerance': tol})


def solve_p_io(acl: np.ndarray, rate: float) -> np.ndarray:
    """P simétrica com sym{P·acl} = P·acl + aclᵀP = -2·rate·I"""
    acl = np.atleast_2d(np.asarray(acl, dtype=float))
    if acl.size == 0:
        return np.zeros((0, 0))
    if not rate > 0:
        raise ValidationError(f"rate must be positive, got {rate}")
    eigs = np.linalg.eigvals(acl)
    if eigs.real.max() >= 0:
        raise InfeasibilityError("closed-loop block is not Hurwitz",
                                 report={'max_real_eigenvalue': float(eigs.real.max())})
    v = acl.shape[0]
    p = solve_continuous_lyapunov(acl.T, -2.0 * rate * np.eye(v))
    return (p + p.T) / 2.0


@dataclass(frozen=True)
class DwellMeasures:
    """m(T_{k,i}) e m(Tᶜ_{k,i}) por agente k ao longo de um período"""

    block: int
    member: np.ndarray
    complement: np.ndarray
    period: float
    slot_membership: np.ndarray

    def ratios(self) -> np.ndarray:
        """m(Tᶜ)/m(T); infinito onde o agente nunca entra no subgrafo"""
        with np.errstate(divide='ignore', invalid='ignore'):
            ratio = np.where(self.member > 0, self.complement / np.where(self.member > 0, self.member, 1.0), np.inf)
        return ratio

    def never_member(self) -> List[int]:
        return np.flatnonzero(self.member <= 0).tolist()


def dwell_measures(s: SwitchingSchedule, i: int) -> DwellMeasures:
    if not 0 <= i < s.n:
        raise ValidationError(f"block {i} out of range for n={s.n}")
    membership = np.zeros((s.slots, s.n), dtype=bool)
    for slot in range(s.slots):
        membership[slot, sorted(member_set(s.graph_for_slot(slot), i))] = True
    member = membership.sum(axis=0) * s.dwell
    return DwellMeasures(block=i, member=member, complement=s.period - member,
                         period=s.period, slot_membership=membership)


@dataclass
class SlotTerms:
    """Quantidades do bloco i em um grafo da biblioteca"""

    graph_index: int
    pi: int
    q_matrix: np.ndarray
    p_iu: np.ndarray
    xi1_bar: float
    xi2_bar: float
    xi_diamond_bar: float
    q_bar: float
    p_iu_min: float
    q_check: float
    p_iu_check: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'graph_index': self.graph_index,
            'pi': self.pi,
            'q_diagonal': np.diag(self.q_matrix).tolist(),
            'xi1_bar': self.xi1_bar,
            'xi2_bar': self.xi2_bar,
            'xi_diamond_bar': self.xi_diamond_bar,
            'q_bar': self.q_bar,
            'p_iu_min': _finite(self.p_iu_min),
            'q_check': _finite(self.q_check),
            'p_iu_check': _finite(self.p_iu_check),
        }


@dataclass
class BlockTerms:
    """Termos de um bloco que não dependem de γ nem de ℘"""

    block: int
    dimension: int
    slots: List[SlotTerms]
    measures: DwellMeasures
    acl: np.ndarray
    p_io_unit_bar: float

    @property
    def xi1_bar(self) -> float:
        return max((s.xi1_bar for s in self.slots), default=0.0)

    @property
    def xi2_bar(self) -> float:
        return max((s.xi2_bar for s in self.slots), default=0.0)

    @property
    def xi_diamond_bar(self) -> float:
        return max((s.xi_diamond_bar for s in self.slots if s.p_iu.size), default=0.0)

    @property
    def p_iu_min(self) -> float:
        return min((s.p_iu_min for s in self.slots if s.p_iu.size), default=math.inf)

    @property
    def q_bar(self) -> float:
        return max((s.q_bar for s in self.slots), default=0.0)

    @property
    def ratio_max(self) -> float:
        others = [k for k in range(len(self.measures.member)) if k != self.block]
        return max((float(self.measures.ratios()[k]) for k in others), default=0.0)

    @property
    def gain_base(self) -> float:
        """λ̄(Ξ_i1) + ¼λ̄²(Ξ_i2) sem ℘"""
        return self.xi1_bar + 0.25 * self.xi2_bar ** 2

    @property
    def dwell_factor(self) -> float:
        """K_i = λ̄(Ξ_i◇)/λ̲(P_iu) · max_k m(Tᶜ)/m(T)"""
        if math.isinf(self.p_iu_min) or self.xi_diamond_bar <= 0:
            return 0.0
        ratio = self.ratio_max
        if ratio == 0:
            return 0.0
        return self.xi_diamond_bar / self.p_iu_min * ratio


def _finite(value: float) -> Optional[float]:
    return None if value is None or not math.isfinite(value) else float(value)


def block_terms(dec: Decomposition, gains: ObserverGains, schedule: SwitchingSchedule, i: int,
                literal_a1o: bool = False) -> BlockTerms:
    if schedule.n != dec.agents:
        raise ValidationError(f"schedule has {schedule.n} nodes for {dec.agents} agents")
    a_io = dec.blocks_a[i]
    hc = gains.h_blocks[i] @ dec.blocks_c[i]
    a_diamond = dec.blocks_a[0] if literal_a1o else a_io

    slots = []
    for index in schedule.used_indices():
        tg = transform(schedule.library[index], i)
        mats = subgraph_matrices(tg)
        q = solve_diag_q(mats.h_matrix)
        p_iu = solve_marginal_p(mats.complement_laplacian)
        xi1 = np.kron(q, a_io)
        xi2 = np.kron(q @ mats.b_star, hc)
        xi_diamond = np.kron(2.0 * p_iu, a_diamond)
        slots.append(SlotTerms(
            graph_index=index,
            pi=mats.pi,
            q_matrix=q,
            p_iu=p_iu,
            xi1_bar=lambda_max(xi1),
            xi2_bar=lambda_max(xi2),
            xi_diamond_bar=lambda_max(xi_diamond) if p_iu.size and a_diamond.size else 0.0,
            q_bar=float(np.diag(q).max(initial=0.0)),
            p_iu_min=lambda_min(p_iu),
            q_check=lambda_min(q @ mats.h_matrix + mats.h_matrix.T @ q),
            p_iu_check=lambda_min(p_iu @ mats.complement_laplacian + mats.complement_laplacian.T @ p_iu),
        ))

    acl = a_io - hc
    unit = lambda_max(solve_p_io(acl, 1.0)) if acl.size else 0.0
    return BlockTerms(block=i, dimension=dec.indices[i], slots=slots,
                      measures=dwell_measures(schedule, i), acl=acl, p_io_unit_bar=unit)


def _all_terms(dec, gains, schedule, literal_a1o) -> List[BlockTerms]:
    return [block_terms(dec, gains, schedule, i, literal_a1o) for i in range(dec.agents)]


def _gain_table(gamma_ik, agents: int) -> np.ndarray:
    table = np.broadcast_to(np.asarray(gamma_ik, dtype=float), (agents, agents)).copy()
    if not np.all(table > 0):
        raise ValidationError("every gamma_ik must be positive")
    return table


def _wp_rule(terms: List[BlockTerms], gamma_bar: np.ndarray) -> Tuple[float, Dict[str, Any]]:
    """
    Menor ℘ com ℘ > K_i·max(p₁(γ̄_i + ℘), λ̄(Q)) para todo bloco: exige K_i·p₁ < 1.
    Retorna 1.5·℘* ou 1.0 quando inviável.
    """
    bound = 0.0
    feasible = True
    for t, g in zip(terms, gamma_bar):
        if not t.dimension:
            continue
        if t.measures.never_member():
            feasible = False
            continue
        k = t.dwell_factor
        if k <= 0:
            continue
        kp = k * t.p_io_unit_bar
        if kp >= 1.0:
            feasible = False
            continue
        bound = max(bound, float(kp * g / (1.0 - kp)), float(k * t.q_bar))

    if not feasible:
        return 1.0, {'wp_star': None, 'feasible': False, 'rule': 'fallback'}
    wp = 1.5 * bound if bound > 0 else 1.0
    return wp, {'wp_star': bound, 'feasible': True, 'rule': 'midpoint' if bound > 0 else 'unconstrained'}


def default_wp(dec: Decomposition, gains: ObserverGains, schedule: SwitchingSchedule, gamma_ik,
               literal_a1o: bool = False, terms: Optional[List[BlockTerms]] = None) -> Tuple[float, Dict[str, Any]]:
    """℘ padrão: ponto médio entre o limite inferior da condição de permanência e o dobro dele"""
    terms = terms or _all_terms(dec, gains, schedule, literal_a1o)
    table = _gain_table(gamma_ik, dec.agents)
    return _wp_rule(terms, table.max(axis=0))


@dataclass
class BlockCondition:
    terms: BlockTerms
    gamma_lower: float
    gamma_upper: float
    p_io: np.ndarray
    p_io_bar: float
    p_io_residual: float
    lambda_bar: float
    gain_lhs: float
    gain_rhs: float
    dwell_lhs: float
    dwell_rhs: float
    structural_failure: List[int] = field(default_factory=list)

    @property
    def gain_margin(self) -> float:
        return self.gain_lhs - self.gain_rhs

    @property
    def dwell_margin(self) -> float:
        return self.dwell_lhs - self.dwell_rhs

    @property
    def gain_pass(self) -> bool:
        return self.terms.dimension == 0 or self.gain_lhs > self.gain_rhs

    @property
    def dwell_pass(self) -> bool:
        if self.terms.dimension == 0:
            return True
        return not self.structural_failure and self.dwell_lhs > self.dwell_rhs

    def to_dict(self) -> Dict[str, Any]:
        t = self.terms
        return {
            'block': t.block,
            'dimension': t.dimension,
            'slots': [s.to_dict() for s in t.slots],
            'xi1_bar': t.xi1_bar,
            'xi2_bar': t.xi2_bar,
            'xi_diamond_bar': t.xi_diamond_bar,
            'p_iu_min': _finite(t.p_iu_min),
            'p_io_bar': self.p_io_bar,
            'p_io_residual': self.p_io_residual,
            'lambda_bar': self.lambda_bar,
            'gamma_lower': self.gamma_lower,
            'gamma_upper': self.gamma_upper,
            'measures': {
                'member': t.measures.member.tolist(),
                'complement': t.measures.complement.tolist(),
                'period': t.measures.period,
            },
            'gain_condition': {'lhs': self.gain_lhs, 'rhs': self.gain_rhs, 'margin': self.gain_margin,
                     'passed': self.gain_pass},
            'dwell_condition': {'lhs': self.dwell_lhs, 'rhs': _finite(self.dwell_rhs), 'margin': _finite(self.dwell_margin),
                     'passed': self.dwell_pass, 'structural_failure': self.structural_failure},
        }


@dataclass
class ConditionReport:
    blocks: List[BlockCondition]
    wp: float
    wp_info: Dict[str, Any]
    literal_a1o: bool = False
    timestamp: str = field(default_factory=lambda: datetime.now().isoformat())

    @property
    def gain_pass(self) -> bool:
        return all(b.gain_pass for b in self.blocks)

    @property
    def dwell_pass(self) -> bool:
        return all(b.dwell_pass for b in self.blocks)

    @property
    def passed(self) -> bool:
        return self.gain_pass and self.dwell_pass

    def to_dict(self) -> Dict[str, Any]:
        return {
            'wp': self.wp,
            'wp_rule': self.wp_info,
            'literal_a1o': self.literal_a1o,
            'blocks': [b.to_dict() for b in self.blocks],
            'gain_passed': self.gain_pass,
            'dwell_passed': self.dwell_pass,
            'passed': self.passed,
            'timestamp': self.timestamp,
        }

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for b in self.blocks:
            rows.append({
                'block': b.terms.block + 1,
                'v': b.terms.dimension,
                'gamma_min': b.gamma_lower,
                'gain_lhs': b.gain_lhs,
                'gain_rhs': b.gain_rhs,
                'gain_margin': b.gain_margin,
                'gain_condition': 'pass' if b.gain_pass else 'FAIL',
                'dwell_rhs': b.dwell_rhs,
                'dwell_margin': b.dwell_margin,
                'dwell_condition': 'pass' if b.dwell_pass else 'FAIL',
            })
        return pd.DataFrame(rows).set_index('block')


def _evaluate(terms: List[BlockTerms], table: np.ndarray, wp: float, wp_info: Dict[str, Any],
              literal_a1o: bool) -> ConditionReport:
    blocks = []
    for t in terms:
        column = table[:, t.block]
        lower, upper = float(column.min()), float(column.max())
        if t.dimension:
            rate = upper + wp
            p_io = solve_p_io(t.acl, rate)
            sym = p_io @ t.acl + t.acl.T @ p_io
            residual = float(np.abs(sym + 2.0 * rate * np.eye(t.dimension)).max())
            p_io_bar = lambda_max(p_io)
        else:
            p_io, residual, p_io_bar = np.zeros((0, 0)), 0.0, 0.0
        lam_bar = max(p_io_bar, t.q_bar)

        structural = [k for k in t.measures.never_member() if k != t.block]
        if structural:
            dwell_rhs = math.inf
        elif math.isinf(t.p_iu_min) or t.ratio_max == 0:
            dwell_rhs = 0.0
        else:
            dwell_rhs = lam_bar * t.xi_diamond_bar / t.p_iu_min * t.ratio_max

        blocks.append(BlockCondition(
            terms=t, gamma_lower=lower, gamma_upper=upper, p_io=p_io, p_io_bar=p_io_bar,
            p_io_residual=residual, lambda_bar=lam_bar,
            gain_lhs=lower ** 2, gain_rhs=t.gain_base + wp,
            dwell_lhs=wp, dwell_rhs=dwell_rhs, structural_failure=structural,
        ))
    return ConditionReport(blocks=blocks, wp=wp, wp_info=wp_info, literal_a1o=literal_a1o)


def check_conditions(dec: Decomposition, gains: ObserverGains, schedule: SwitchingSchedule,
                   wp: Optional[float] = None, gamma_ik=10.0, literal_a1o: bool = False) -> ConditionReport:
    """
    Avalia γ̲_i² > λ̄(Ξ_i1) + ¼λ̄²(Ξ_i2) + ℘ e
    ℘ > λ̄_i·λ̄(Ξ_i◇)/λ̲(P_iu)·m(Tᶜ_{k,i})/m(T_{k,i}), máximos sobre a biblioteca.
    """
    if wp is not None and not wp > 0:
        raise ValidationError(f"wp must be positive, got {wp}")
    table = _gain_table(gamma_ik, dec.agents)
    terms = _all_terms(dec, gains, schedule, literal_a1o)
    if wp is None:
        wp, wp_info = _wp_rule(terms, table.max(axis=0))
    else:
        wp = float(wp)
        wp_info = {'wp_star': None, 'feasible': None, 'rule': 'given'}

    report = _evaluate(terms, table, wp, wp_info, literal_a1o)
    if report.passed:
        logger.info(f"✅ Condições de convergência satisfeitas (℘ = {wp:.4g})")
    else:
        failing = [b.terms.block for b in report.blocks if not (b.gain_pass and b.dwell_pass)]
        logger.warning(f"⚠️ Condições de convergência não satisfeitas nos blocos {failing} (℘ = {wp:.4g})")
    return report


def _minimal_gain(target: float, wp: float, margin: float) -> float:
    """Menor g com g² ≥ margin·target (bissecção monótona)"""
    goal = margin * target
    if goal <= 0:
        return math.sqrt(margin * wp)
    upper = max(1.0, math.sqrt(goal))
    while upper ** 2 < goal:
        upper *= 2.0
    return brentq(lambda g: g ** 2 - goal, 0.0, upper, xtol=1e-12, rtol=1e-12)


def suggest_gains(dec: Decomposition, gains: ObserverGains, schedule: SwitchingSchedule,
                  wp: Optional[float] = None, margin: Optional[float] = None,
                  literal_a1o: bool = False) -> Dict[str, Any]:
    """
    γ uniforme por bloco satisfazendo a condição de ganho com folga. Sem ℘
    dado, itera ℘ ↔ γ̄ até o ponto fixo da regra padrão.
    """
    margin = Config.GAIN_MARGIN if margin is None else margin
    terms = _all_terms(dec, gains, schedule, literal_a1o)
    structural = {t.block: [k for k in t.measures.never_member() if k != t.block]
                  for t in terms if t.dimension}
    if any(structural.values()):
        raise InfeasibilityError("some agents never join a block's subgraph",
                                 report={'structural_failure': {k: v for k, v in structural.items() if v}})

    def gains_for(value: float) -> np.ndarray:
        return np.array([_minimal_gain(t.gain_base + value, value, margin) for t in terms])

    if wp is not None:
        if not wp > 0:
            raise ValidationError(f"wp must be positive, got {wp}")
        wp = float(wp)
        wp_info = {'wp_star': None, 'feasible': None, 'rule': 'given'}
        per_block = gains_for(wp)
    else:
        wp = 1.0
        wp_info: Dict[str, Any] = {}
        for _ in range(200):
            per_block = gains_for(wp)
            updated, wp_info = _wp_rule(terms, per_block)
            if not wp_info['feasible'] or abs(updated - wp) <= 1e-9 * max(1.0, wp):
                wp = updated
                break
            wp = updated
        else:
            logger.warning(f"⚠️ Iteração de ℘ não convergiu; usando ℘ = {wp:.4g}")
        per_block = gains_for(wp)

    table = np.tile(per_block, (dec.agents, 1))
    report = _evaluate(terms, table, wp, wp_info, literal_a1o)
    logger.info(f"📊 Ganhos sugeridos por bloco: {np.round(per_block, 4).tolist()} (℘ = {wp:.4g})")
    return {
        'gamma_ik': table,
        'gamma_lower': per_block,
        'wp': wp,
        'wp_info': wp_info,
        'dwell_feasible': report.dwell_pass,
        'report': report,
    }


class ConditionCertifier:
    """Fachada usada pelos comandos: certifica e guarda o último relatório"""

    def __init__(self):
        self.last_report: Optional[ConditionReport] = None

    def certify(self, dec, gains, schedule, wp=None, gamma_ik=10.0, literal_a1o=False) -> ConditionReport:
        self.last_report = check_conditions(dec, gains, schedule, wp=wp, gamma_ik=gamma_ik, literal_a1o=literal_a1o)
        return self.last_report

    def suggest(self, dec, gains, schedule, wp=None) -> Dict[str, Any]:
        result = suggest_gains(dec, gains, schedule, wp=wp)
        self.last_report = result['report']
        return result

    def render(self, report: Optional[ConditionReport] = None) -> str:
        report = report or self.last_report
        if report is None:
            return "no certificate computed"
        frame = report.to_frame()
        status = 'PASS' if report.passed else 'FAIL'
        return f"℘ = {report.wp:.6g} ({report.wp_info.get('rule')})\n{frame.to_string(float_format=lambda v: f'{v:.6g}')}\noverall: {status}"


# Instância global
certifier = ConditionCertifier()
