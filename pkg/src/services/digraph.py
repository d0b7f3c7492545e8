#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
DOBS v1.0 - Grafos direcionados e topologias chaveadas
Alcançabilidade, mapeamento de transformação de rede, matrizes de subgrafo
e agendas de chaveamento periódicas
"""

import logging
import math
from collections import deque
from dataclasses import dataclass
from datetime import datetime
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from services.errors import ValidationError

logger = logging.getLogger(__name__)

# Folga para o piso de t/τ (t = 1.2, τ = 0.4 dá 2.9999999999999996)
_SLOT_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class Digraph:
    """Grafo 0/1 sem laços; adj[i][j] = 1 significa arco j -> i"""

    adj: np.ndarray

    def __post_init__(self):
        adj = np.array(self.adj, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValidationError(f"adjacency must be square, got shape {adj.shape}")
        if adj.shape[0] < 1:
            raise ValidationError("graph needs at least one node")
        if adj.diagonal().any():
            raise ValidationError("self-loops are not allowed")
        adj.setflags(write=False)
        object.__setattr__(self, 'adj', adj)

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    @classmethod
    def empty(cls, n: int) -> 'Digraph':
        return cls(np.zeros((n, n), dtype=bool))

    @classmethod
    def from_arcs(cls, n: int, arcs: Iterable[Tuple[int, int]]) -> 'Digraph':
        """Cria a partir de arcos (origem, destino)"""
        adj = np.zeros((n, n), dtype=bool)
        for src, dst in arcs:
            if not (0 <= src < n and 0 <= dst < n):
                raise ValidationError(f"arc {src}->{dst} out of range for n={n}")
            adj[dst, src] = True
        return cls(adj)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> 'Digraph':
        return cls(np.array(rows, dtype=int) != 0)

    def to_rows(self) -> List[List[int]]:
        return self.adj.astype(int).tolist()

    def arcs(self) -> List[Tuple[int, int]]:
        """Lista de arcos (origem, destino)"""
        dst, src = np.nonzero(self.adj)
        return sorted(zip(src.tolist(), dst.tolist()))

    def in_degree(self) -> np.ndarray:
        return self.adj.sum(axis=1)

    def subgraph(self, nodes: Iterable[int]) -> 'Digraph':
        order = sorted(nodes)
        return Digraph(self.adj[np.ix_(order, order)])

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.arcs())
        return graph

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Digraph) and np.array_equal(self.adj, other.adj)

    def __hash__(self) -> int:
        return hash(self.adj.tobytes())


@dataclass(frozen=True, eq=False)
class ReachStructure:
    """Estrutura booleana de I + A + ... + A^(N-1); ell[i][k] = 1 se k alcança i"""

    ell: np.ndarray

    def reaches(self, src: int, dst: int) -> bool:
        return bool(self.ell[dst, src])


@dataclass(frozen=True, eq=False)
class TransformedGraph:
    """Imagem do mapeamento de transformação com respeito à raiz"""

    root: int
    members: FrozenSet[int]
    adj_t: np.ndarray

    @property
    def n(self) -> int:
        return self.adj_t.shape[0]

    @property
    def non_members(self) -> List[int]:
        return [i for i in range(self.n) if i not in self.members]

    def as_digraph(self) -> Digraph:
        return Digraph(self.adj_t)


@dataclass(frozen=True, eq=False)
class SubgraphMatrices:
    laplacian: np.ndarray
    b_star: np.ndarray
    h_matrix: np.ndarray
    pi: int
    complement_laplacian: np.ndarray
    member_order: Tuple[int, ...]
    complement_order: Tuple[int, ...]

    @property
    def degenerate(self) -> bool:
        """Sem membros além da raiz: matrizes 0x0"""
        return self.pi == 0


@dataclass(frozen=True, eq=False)
class SwitchingSchedule:
    """Agenda periódica: ϖ janelas de duração τ = 𝒯/ϖ por período"""

    period: float
    slots: int
    assignment: Tuple[int, ...]
    library: Tuple[Digraph, ...]

    def __post_init__(self):
        object.__setattr__(self, 'assignment', tuple(int(a) for a in self.assignment))
        object.__setattr__(self, 'library', tuple(self.library))
        if not self.period > 0:
            raise ValidationError(f"period must be positive, got {self.period}")
        if self.slots < 1:
            raise ValidationError(f"slots must be a positive integer, got {self.slots}")
        if len(self.assignment) != self.slots:
            raise ValidationError(
                f"assignment has {len(self.assignment)} entries for {self.slots} slots")
        if not self.library:
            raise ValidationError("graph library is empty")
        sizes = {g.n for g in self.library}
        if len(sizes) != 1:
            raise ValidationError(f"library graphs disagree on node count: {sorted(sizes)}")
        for slot, index in enumerate(self.assignment):
            if not 0 <= index < len(self.library):
                raise ValidationError(
                    f"assignment[{slot}] = {index} does not index the library of {len(self.library)}")

    @property
    def dwell(self) -> float:
        return self.period / self.slots

    @property
    def n(self) -> int:
        return self.library[0].n

    def graph_for_slot(self, slot: int) -> Digraph:
        return self.library[self.assignment[slot % self.slots]]

    def slot_index(self, t: float) -> int:
        if t < 0:
            raise ValidationError(f"time must be nonnegative, got {t}")
        return int(math.floor(t / self.dwell + _SLOT_EPS)) % self.slots

    def used_indices(self) -> List[int]:
        return sorted(set(self.assignment))


def _check_node(g: Digraph, k: int, name: str = 'node'):
    if not 0 <= k < g.n:
        raise ValidationError(f"{name} {k} out of range for n={g.n}")


def reach_structure(g: Digraph) -> ReachStructure:
    """Estrutura de alcançabilidade por potências booleanas (até N-1 arcos)"""
    step = g.adj.astype(np.int64)
    power = np.eye(g.n, dtype=np.int64)
    reach = power.astype(bool)
    for _ in range(g.n - 1):
        power = ((power @ step) > 0).astype(np.int64)
        reach |= power.astype(bool)
    reach.setflags(write=False)
    return ReachStructure(reach)


def member_set(g: Digraph, k: int, reach: Optional[ReachStructure] = None) -> FrozenSet[int]:
    """𝒱_k: nós alcançáveis a partir de k, incluindo k"""
    _check_node(g, k)
    reach = reach or reach_structure(g)
    return frozenset(np.flatnonzero(reach.ell[:, k]).tolist()) | {k}


def transform(g: Digraph, k: int, reach: Optional[ReachStructure] = None) -> TransformedGraph:
    """Remove os arcos que cruzam o corte entre 𝒱_k e o complemento"""
    _check_node(g, k)
    reach = reach or reach_structure(g)
    col = reach.ell[:, k]
    inside = col[:, None] & col[None, :]
    outside = ~col[:, None] & ~col[None, :]
    adj_t = g.adj & (inside | outside)
    adj_t.setflags(write=False)
    return TransformedGraph(root=k, members=member_set(g, k, reach), adj_t=adj_t)


def _laplacian(adj: np.ndarray) -> np.ndarray:
    weights = adj.astype(float)
    return np.diag(weights.sum(axis=1)) - weights


def subgraph_matrices(tg: TransformedGraph) -> SubgraphMatrices:
    others = tuple(sorted(tg.members - {tg.root}))
    complement = tuple(tg.non_members)
    inner = tg.adj_t[np.ix_(others, others)]
    laplacian = _laplacian(inner)
    b_star = np.diag(tg.adj_t[list(others), tg.root].astype(float)) if others else np.zeros((0, 0))
    complement_laplacian = _laplacian(tg.adj_t[np.ix_(complement, complement)])
    if not others:
        logger.debug(f"Subgrafo degenerado na raiz {tg.root}: apenas a raiz")
    return SubgraphMatrices(
        laplacian=laplacian,
        b_star=b_star,
        h_matrix=laplacian + b_star,
        pi=len(others),
        complement_laplacian=complement_laplacian,
        member_order=others,
        complement_order=complement,
    )


def has_spanning_tree(g: Digraph, root: int) -> bool:
    """Busca em largura a partir da raiz seguindo os arcos"""
    _check_node(g, root, 'root')
    seen = {root}
    queue = deque([root])
    while queue:
        node = queue.popleft()
        for nxt in np.flatnonzero(g.adj[:, node]).tolist():
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return len(seen) == g.n


def union_graph(s: SwitchingSchedule) -> Digraph:
    adj = np.zeros((s.n, s.n), dtype=bool)
    for index in s.used_indices():
        adj |= s.library[index].adj
    return Digraph(adj)


def validate_assumptions(s: SwitchingSchedule) -> Dict[str, Any]:
    """Relatório das hipóteses de agenda: conectividade conjunta, caminhos por par, dwell"""
    union = union_graph(s)
    strongly_connected = nx.is_strongly_connected(union.to_networkx())

    reaches = {index: reach_structure(s.library[index]) for index in s.used_indices()}
    witnesses: Dict[str, List[int]] = {}
    missing: List[List[int]] = []
    for i in range(s.n):
        for j in range(s.n):
            if i == j:
                continue
            found = [index for index, r in reaches.items() if r.reaches(i, j)]
            witnesses[f"{i}->{j}"] = found
            if not found:
                missing.append([i, j])

    dwell_ok = math.isclose(s.dwell * s.slots, s.period, rel_tol=1e-12, abs_tol=1e-12)
    report = {
        'union_strongly_connected': bool(strongly_connected),
        'pairwise_paths': not missing,
        'missing_pairs': missing,
        'pair_witnesses': witnesses,
        'dwell_consistent': bool(dwell_ok),
        'dwell': s.dwell,
        'period': s.period,
        'slots': s.slots,
        'timestamp': datetime.now().isoformat(),
    }
    report['passed'] = report['union_strongly_connected'] and report['pairwise_paths'] and dwell_ok

    if report['passed']:
        logger.info("✅ Agenda satisfaz as hipóteses de chaveamento")
    else:
        logger.warning(f"⚠️ Agenda reprovada: conexa={strongly_connected}, pares sem caminho={len(missing)}")
    return report


def sigma_at(s: SwitchingSchedule, t: float) -> int:
    """Índice do grafo ativo em t (janelas fechadas à esquerda)"""
    return s.assignment[s.slot_index(t)]


def default_schedule(n: int = 4, dwell: float = 0.4) -> SwitchingSchedule:
    """
    Agenda de referência: cadeia direta, cadeia reversa e dois saltos de 2.
    Cada grafo é um fragmento acíclico; a união é fortemente conexa e as
    cadeias garantem um caminho em um único grafo para cada par ordenado.
    """
    if n < 2:
        raise ValidationError("default schedule needs at least two nodes")
    library = (
        Digraph.from_arcs(n, [(i, i + 1) for i in range(n - 1)]),
        Digraph.from_arcs(n, [(i + 1, i) for i in range(n - 1)]),
        Digraph.from_arcs(n, [(i, i + 2) for i in range(n - 2)]),
        Digraph.from_arcs(n, [(i + 2, i) for i in range(n - 2)]),
    )
    slots = len(library)
    return SwitchingSchedule(period=dwell * slots, slots=slots,
                             assignment=tuple(range(slots)), library=library)
