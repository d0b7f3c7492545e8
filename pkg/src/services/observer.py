#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
DOBS v1.0 - Observador distribuído
Dinâmica dos observadores locais com ganhos de acoplamento por subgrafo,
lei adaptativa e diagnósticos de erro / estados reorganizados
"""

import logging
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm

from services.digraph import (Digraph, ReachStructure, SubgraphMatrices, TransformedGraph,
                              reach_structure, transform)
from services.errors import ValidationError
from services.sysdecomp import Decomposition, ObserverGains

logger = logging.getLogger(__name__)


def coupling_gain(ell_ik: int, gamma: float, gamma_ik: float) -> float:
    """𝕣_ik = (1 - ℓ)·γ + ℓ·γ_ik"""
    if ell_ik not in (0, 1, True, False):
        raise ValidationError(f"ell_ik must be 0 or 1, got {ell_ik}")
    if not gamma > 0 or not gamma_ik > 0:
        raise ValidationError(f"coupling gains must be positive, got gamma={gamma}, gamma_ik={gamma_ik}")
    return float((1 - int(ell_ik)) * gamma + int(ell_ik) * gamma_ik)


@dataclass(frozen=True, eq=False)
class SlotTopology:
    """Tudo o que um intervalo de chaveamento precisa: alcance, grafos por bloco"""

    graph: Digraph
    reach: ReachStructure
    block_adjacency: Tuple[np.ndarray, ...]
    transform_enabled: bool = True

    @property
    def ell(self) -> np.ndarray:
        return self.reach.ell

    def in_degree(self, k: int) -> np.ndarray:
        return self.block_adjacency[k].sum(axis=1)


def build_slot_topology(g: Digraph, transform_enabled: bool = True) -> SlotTopology:
    """
    Grafo transformado para cada raiz k (um por bloco). Sem transformação,
    todos os blocos usam a adjacência original.
    """
    reach = reach_structure(g)
    blocks = []
    for k in range(g.n):
        if transform_enabled:
            blocks.append(transform(g, k, reach).adj_t.astype(float))
        else:
            blocks.append(g.adj.astype(float))
    return SlotTopology(graph=g, reach=reach, block_adjacency=tuple(blocks),
                        transform_enabled=transform_enabled)


@dataclass(frozen=True, eq=False)
class ObserverNetwork:
    """
    Estado dos N observadores locais. estimates[i] é a estimativa do agente i
    para o estado decomposto x = Tχ inteiro; o bloco k ocupa block_slice(k).
    """

    decomposition: Decomposition
    gains: ObserverGains
    estimates: np.ndarray
    gamma: float = 100.0
    gamma_ik: Any = 10.0

    def __post_init__(self):
        n = self.decomposition.n
        agents = self.decomposition.agents
        estimates = np.asarray(self.estimates, dtype=float)
        if estimates.shape != (agents, n):
            raise ValidationError(f"estimates must be {agents}x{n}, got {estimates.shape}")
        gamma_ik = np.broadcast_to(np.asarray(self.gamma_ik, dtype=float), (agents, agents))
        if not self.gamma > 0:
            raise ValidationError(f"gamma must be positive, got {self.gamma}")
        if not np.all(gamma_ik > 0):
            raise ValidationError("every gamma_ik must be positive")
        if len(self.gains.h_blocks) != agents:
            raise ValidationError(f"{len(self.gains.h_blocks)} observer gains for {agents} blocks")
        object.__setattr__(self, 'estimates', estimates)
        object.__setattr__(self, 'gamma_ik', np.array(gamma_ik))

    @property
    def agents(self) -> int:
        return self.decomposition.agents

    def with_state(self, estimates: np.ndarray, gamma_ik: Optional[np.ndarray] = None) -> 'ObserverNetwork':
        return replace(self, estimates=estimates,
                       gamma_ik=self.gamma_ik if gamma_ik is None else gamma_ik)

    def coupling_matrix(self, ell: np.ndarray) -> np.ndarray:
        """R[i, k] = 𝕣_ik para o ℓ do intervalo"""
        return np.where(np.asarray(ell, dtype=bool), self.gamma_ik, self.gamma)


def _check_topology(net: ObserverNetwork, topology: SlotTopology):
    if topology is None or len(topology.block_adjacency) != net.agents:
        raise ValidationError(f"slot topology must provide one graph per block ({net.agents})")


def consensus_residuals(net: ObserverNetwork, topology: SlotTopology) -> List[np.ndarray]:
    """Por bloco k: linhas Σ_j α_ij(k)(x̂_{j,k} - x̂_{i,k}) de cada agente i"""
    _check_topology(net, topology)
    residuals = []
    for k in range(net.agents):
        block = net.estimates[:, net.decomposition.block_slice(k)]
        adj = topology.block_adjacency[k]
        residuals.append(adj @ block - topology.in_degree(k)[:, None] * block)
    return residuals


def observer_rhs(net: ObserverNetwork, outputs: Sequence[np.ndarray], topology: SlotTopology) -> np.ndarray:
    """
    Derivada das estimativas: Ā x̂_i (blocos diagonais e Υ_kl inferiores),
    inovação H_io(y_i - Σ_i x̂_i) no bloco próprio e consenso ponderado por 𝕣_ik.
    """
    dec = net.decomposition
    if len(outputs) != net.agents:
        raise ValidationError(f"{len(outputs)} outputs for {net.agents} agents")

    derivative = net.estimates @ dec.a_bar.T
    for i in range(net.agents):
        y = np.atleast_1d(np.asarray(outputs[i], dtype=float))
        sigma = dec.sigma_block(i)
        if y.shape != (sigma.shape[0],):
            raise ValidationError(f"output y_{i} must have {sigma.shape[0]} entries, got {y.shape}")
        innovation = y - sigma @ net.estimates[i]
        derivative[i, dec.block_slice(i)] += net.gains.h_blocks[i] @ innovation

    coupling = net.coupling_matrix(topology.ell)
    for k, residual in enumerate(consensus_residuals(net, topology)):
        derivative[:, dec.block_slice(k)] += coupling[:, k][:, None] * residual
    return derivative


def adaptive_rate(net: ObserverNetwork, topology: SlotTopology) -> np.ndarray:
    """γ̇_ik = ‖resíduo de consenso‖² apenas onde ℓ_ik = 1"""
    rate = np.zeros((net.agents, net.agents))
    for k, residual in enumerate(consensus_residuals(net, topology)):
        rate[:, k] = np.einsum('ij,ij->i', residual, residual)
    return np.where(topology.ell, rate, 0.0)


@dataclass(frozen=True, eq=False)
class ErrorSnapshot:
    e: np.ndarray
    offsets: Tuple[int, ...]

    @property
    def agents(self) -> int:
        return self.e.shape[0]

    def block(self, i: int, k: int) -> np.ndarray:
        """e_{i,k}"""
        return self.e[i, self.offsets[k]:self.offsets[k + 1]]

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.e, axis=1)


def error_snapshot(estimates: np.ndarray, chi: np.ndarray, dec: Decomposition) -> ErrorSnapshot:
    x = dec.t_mat @ np.asarray(chi, dtype=float)
    estimates = np.asarray(estimates, dtype=float)
    if estimates.shape != (dec.agents, dec.n):
        raise ValidationError(f"estimates must be {dec.agents}x{dec.n}, got {estimates.shape}")
    return ErrorSnapshot(e=estimates - x[None, :], offsets=tuple(dec.offsets))


@dataclass(frozen=True, eq=False)
class ReorganizedState:
    """Componentes do bloco i agrupados por pertença a 𝒱_i (linhas = agentes)"""

    block: int
    eps_ii: np.ndarray
    eps_star: np.ndarray
    eps_diamond: np.ndarray
    xi_star: np.ndarray
    member_order: Tuple[int, ...]
    complement_order: Tuple[int, ...]

    def identity_residual(self, mats: SubgraphMatrices) -> float:
        """‖ξ - (𝓗⊗I)ε⋆ + (B⊗I)ε_ii‖"""
        if not self.member_order:
            return 0.0
        gap = self.xi_star - mats.h_matrix @ self.eps_star + mats.b_star @ self.eps_ii
        return float(np.linalg.norm(gap))


def reorganize(err: ErrorSnapshot, tg: TransformedGraph, mats: SubgraphMatrices,
               estimates: np.ndarray) -> ReorganizedState:
    """
    Separa os erros do bloco i = raiz em ε_ii, ε⋆ (membros), ε◇ (fora do
    subgrafo) e calcula ξ_{k,i} = Σ_j α_kj(i)(x̂_{k,i} - x̂_{j,i}) a partir
    das estimativas brutas.
    """
    i = tg.root
    if tg.n != err.agents:
        raise ValidationError(f"graph has {tg.n} nodes for {err.agents} agents")
    members = tuple(sorted(tg.members - {i}))
    if members != tuple(mats.member_order):
        raise ValidationError(f"subgraph matrices do not belong to the graph rooted at {i}")
    complement = tuple(tg.non_members)

    width = err.offsets[i + 1] - err.offsets[i]

    def rows(agents: Sequence[int]) -> np.ndarray:
        if not agents:
            return np.zeros((0, width))
        return np.vstack([err.block(k, i) for k in agents])

    block = np.asarray(estimates, dtype=float)[:, err.offsets[i]:err.offsets[i + 1]]
    adj = tg.adj_t.astype(float)
    residual = adj.sum(axis=1)[:, None] * block - adj @ block

    return ReorganizedState(
        block=i,
        eps_ii=np.tile(err.block(i, i), (len(members), 1)),
        eps_star=rows(members),
        eps_diamond=rows(complement),
        xi_star=residual[list(members)] if members else np.zeros((0, width)),
        member_order=members,
        complement_order=complement,
    )


def error_rhs(dec: Decomposition, gains: ObserverGains, e: np.ndarray, topology: SlotTopology,
              gamma: float, gamma_ik, coupling_index: str = 'consistent') -> np.ndarray:
    """
    Dinâmica do erro escrita diretamente. 'consistent' usa Υ_kl e_{i,l};
    'printed' usa Υ_kl e_{k,l} (erro do agente k no bloco l).
    """
    if coupling_index not in ('consistent', 'printed'):
        raise ValidationError(f"coupling_index must be 'consistent' or 'printed', got {coupling_index!r}")
    e = np.asarray(e, dtype=float)
    net = ObserverNetwork(decomposition=dec, gains=gains, estimates=e, gamma=gamma, gamma_ik=gamma_ik)

    if coupling_index == 'consistent':
        derivative = e @ dec.a_bar.T
    else:
        derivative = np.zeros_like(e)
        for k in range(dec.agents):
            sk = dec.block_slice(k)
            derivative[:, sk] = e[:, sk] @ dec.blocks_a[k].T
            for l in range(k):
                coupling = dec.couplings.get((k, l))
                if coupling is not None and coupling.size:
                    derivative[:, sk] += e[k, dec.block_slice(l)] @ coupling.T

    for i in range(dec.agents):
        derivative[i, dec.block_slice(i)] -= gains.h_blocks[i] @ (dec.sigma_block(i) @ e[i])

    coupling = net.coupling_matrix(topology.ell)
    for k, residual in enumerate(consensus_residuals(net, topology)):
        derivative[:, dec.block_slice(k)] += coupling[:, k][:, None] * residual
    return derivative


def compare_error_forms(dec: Decomposition, gains: ObserverGains, e: np.ndarray, topology: SlotTopology,
                        gamma: float, gamma_ik) -> Dict[str, Any]:
    """Diferença entre as duas leituras do acoplamento triangular"""
    consistent = error_rhs(dec, gains, e, topology, gamma, gamma_ik, 'consistent')
    printed = error_rhs(dec, gains, e, topology, gamma, gamma_ik, 'printed')
    difference = float(np.abs(consistent - printed).max(initial=0.0))
    scale = max(1.0, float(np.abs(consistent).max(initial=0.0)))
    return {
        'max_difference': difference,
        'relative_difference': difference / scale,
        'agree': difference <= 1e-12 * scale,
    }


def iss_response(a_block, h_block, c_block, members: int, initial, input_amplitude,
                 decay: float, horizon: float, step: float) -> Dict[str, np.ndarray]:
    """
    ε̇_ii = (I⊗(A_io - H_io C_io))ε_ii + u(t), u(t) = u₀·e^(-decay·t).
    O sistema aumentado [ε; u] é linear e invariante, então cada amostra sai
    de uma única exponencial de matriz por passo.
    """
    if not decay > 0 or not step > 0 or not horizon > 0:
        raise ValidationError("decay, step and horizon must be positive")
    a = np.atleast_2d(np.asarray(a_block, dtype=float))
    closed = a - np.atleast_2d(np.asarray(h_block, dtype=float)) @ np.atleast_2d(np.asarray(c_block, dtype=float))
    v = closed.shape[0]
    generator = np.kron(np.eye(members), closed)
    size = members * v

    augmented = np.zeros((2 * size, 2 * size))
    augmented[:size, :size] = generator
    augmented[:size, size:] = np.eye(size)
    augmented[size:, size:] = -decay * np.eye(size)
    propagate = expm(augmented * step)

    state = np.concatenate([
        np.broadcast_to(np.asarray(initial, dtype=float), (members, v)).ravel(),
        np.broadcast_to(np.asarray(input_amplitude, dtype=float), (members, v)).ravel(),
    ])
    samples = int(round(horizon / step))
    times = step * np.arange(samples + 1)
    norms = np.empty(samples + 1)
    inputs = np.empty(samples + 1)
    for s in range(samples + 1):
        norms[s] = np.linalg.norm(state[:size])
        inputs[s] = np.linalg.norm(state[size:])
        state = propagate @ state
    return {'times': times, 'state_norm': norms, 'input_norm': inputs}
