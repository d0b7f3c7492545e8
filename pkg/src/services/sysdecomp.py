#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
DOBS v1.0 - Decomposição de observabilidade
Forma bloco-triangular inferior T·A·T⁻¹ por escada sequencial de subespaços
observáveis e projeto dos ganhos H_io por alocação de polos
"""

import logging
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import orth, svd
from scipy.signal import place_poles

from config import Config
from services.errors import DecompositionError, PlacementError, ValidationError

logger = logging.getLogger(__name__)


def _as_matrix(value, name: str) -> np.ndarray:
    matrix = np.atleast_2d(np.asarray(value, dtype=float))
    if matrix.ndim != 2:
        raise ValidationError(f"{name} must be a matrix")
    return matrix


def _output_matrix(value, columns: int, name: str) -> np.ndarray:
    """Matriz de saída p x n; aceita vetor linha e bloco vazio"""
    matrix = np.asarray(value, dtype=float)
    if matrix.size == 0:
        return np.zeros((0, columns))
    matrix = np.atleast_2d(matrix)
    if matrix.ndim != 2 or matrix.shape[1] != columns:
        raise ValidationError(f"{name} must have {columns} columns, got shape {matrix.shape}")
    return matrix


def observable_subspace(c: np.ndarray, a: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    """
    Base ortonormal (colunas) do espaço linha de col{C, CA, ..., CA^(n-1)}.
    Cresce o subespaço de Krylov de Aᵀ a partir de Cᵀ, reortonormalizando a
    cada passo para não misturar escalas de A^k.
    """
    tol = Config.RANK_TOL if tol is None else tol
    c = _as_matrix(c, 'C')
    a = _as_matrix(a, 'A')
    n = a.shape[0]
    if c.size == 0 or not np.any(c):
        return np.zeros((n, 0))
    basis = orth(c.T, rcond=tol)
    while basis.shape[1] < n:
        grown = orth(np.hstack([basis, a.T @ basis]), rcond=tol)
        if grown.shape[1] == basis.shape[1]:
            break
        basis = grown
    return basis


def observability_rank(c, a, tol: Optional[float] = None) -> int:
    a = _as_matrix(a, 'A')
    c = _output_matrix(c, a.shape[1], 'C')
    if a.shape[0] != a.shape[1] or c.shape[1] != a.shape[0]:
        raise ValidationError(f"incompatible shapes C{c.shape}, A{a.shape}")
    return observable_subspace(c, a, tol).shape[1]


@dataclass(frozen=True, eq=False)
class Plant:
    """Sistema linear ẋ = Aχ com saídas y_i = C_i χ distribuídas entre N agentes"""

    a: np.ndarray
    c_blocks: Tuple[np.ndarray, ...]
    check_observable: bool = True

    def __post_init__(self):
        a = _as_matrix(self.a, 'A')
        if a.shape[0] != a.shape[1]:
            raise ValidationError(f"A must be square, got {a.shape}")
        blocks = []
        for i, block in enumerate(self.c_blocks):
            blocks.append(_output_matrix(block, a.shape[0], f'C_{i}'))
        if not blocks:
            raise ValidationError("plant needs at least one output block")
        object.__setattr__(self, 'a', a)
        object.__setattr__(self, 'c_blocks', tuple(blocks))
        if self.check_observable:
            rank = observability_rank(self.c, a)
            if rank < self.n:
                raise DecompositionError(
                    f"(C, A) is not observable: observability rank {rank} < n = {self.n} "
                    f"(deficiency {self.n - rank})", rank=rank, dimension=self.n)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def agents(self) -> int:
        return len(self.c_blocks)

    @property
    def c(self) -> np.ndarray:
        return np.vstack(self.c_blocks)

    @property
    def output_sizes(self) -> List[int]:
        return [block.shape[0] for block in self.c_blocks]

    def outputs(self, chi: np.ndarray) -> List[np.ndarray]:
        return [block @ chi for block in self.c_blocks]


@dataclass(frozen=True, eq=False)
class Decomposition:
    t_mat: np.ndarray
    blocks_a: Tuple[np.ndarray, ...]
    blocks_c: Tuple[np.ndarray, ...]
    couplings: Dict[Tuple[int, int], np.ndarray]
    indices: Tuple[int, ...]
    sigma_mat: np.ndarray
    output_couplings: Dict[Tuple[int, int], np.ndarray] = field(default_factory=dict)
    a_bar: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.t_mat.shape[0]

    @property
    def agents(self) -> int:
        return len(self.indices)

    @property
    def offsets(self) -> List[int]:
        return [0] + np.cumsum(self.indices).tolist()

    def block_slice(self, i: int) -> slice:
        offsets = self.offsets
        return slice(offsets[i], offsets[i + 1])

    def sigma_block(self, i: int) -> np.ndarray:
        """Σ_i: linhas de Σ que pertencem ao agente i"""
        rows = [block.shape[0] for block in self.blocks_c]
        start = sum(rows[:i])
        return self.sigma_mat[start:start + rows[i]]

    @classmethod
    def from_transform(cls, plant: Plant, t_mat: np.ndarray, indices: Sequence[int]) -> 'Decomposition':
        """Extrai blocos de uma T dada; a parte estritamente superior é descartada em a_bar"""
        t_mat = _as_matrix(t_mat, 'T')
        if t_mat.shape != (plant.n, plant.n):
            raise ValidationError(f"T must be {plant.n}x{plant.n}, got {t_mat.shape}")
        indices = tuple(int(v) for v in indices)
        if len(indices) != plant.agents or sum(indices) != plant.n:
            raise ValidationError(f"block sizes {indices} do not partition n={plant.n} over {plant.agents} agents")
        t_inv = np.linalg.inv(t_mat)
        full = t_mat @ plant.a @ t_inv
        sigma_full = plant.c @ t_inv
        offsets = [0] + np.cumsum(indices).tolist()
        slices = [slice(offsets[i], offsets[i + 1]) for i in range(len(indices))]

        a_bar = np.zeros_like(full)
        couplings = {}
        for i, si in enumerate(slices):
            for l in range(i + 1):
                a_bar[si, slices[l]] = full[si, slices[l]]
                if l < i:
                    couplings[(i, l)] = full[si, slices[l]].copy()

        sigma = np.zeros_like(sigma_full)
        output_couplings = {}
        blocks_c = []
        row = 0
        for i, block in enumerate(plant.c_blocks):
            rows = slice(row, row + block.shape[0])
            upto = slice(0, offsets[i + 1])
            sigma[rows, upto] = sigma_full[rows, upto]
            blocks_c.append(sigma_full[rows, slices[i]].copy())
            for l in range(i):
                coupling = sigma_full[rows, slices[l]]
                if indices[l] and np.any(np.abs(coupling) > Config.RANK_TOL * max(1.0, np.abs(block).max(initial=0.0))):
                    output_couplings[(i, l)] = coupling.copy()
            row += block.shape[0]

        return cls(
            t_mat=t_mat,
            blocks_a=tuple(full[s, s].copy() for s in slices),
            blocks_c=tuple(blocks_c),
            couplings=couplings,
            indices=indices,
            sigma_mat=sigma,
            output_couplings=output_couplings,
            a_bar=a_bar,
        )


@dataclass(frozen=True, eq=False)
class ObserverGains:
    h_blocks: Tuple[np.ndarray, ...]
    target_spectra: Tuple[Tuple[complex, ...], ...]


def decompose(p: Plant, tol: Optional[float] = None) -> Decomposition:
    """
    Escada sequencial: o bloco i é a parte do espaço observável por C_1..C_i
    que os blocos 1..i-1 ainda não cobrem. Bases ortonormais, logo T⁻¹ = Tᵀ.
    """
    tol = Config.RANK_TOL if tol is None else tol
    rows: List[np.ndarray] = []
    covered = np.zeros((p.n, 0))
    indices = []
    for i in range(p.agents):
        reachable = observable_subspace(np.vstack(p.c_blocks[:i + 1]), p.a, tol)
        fresh = reachable - covered @ (covered.T @ reachable)
        new = orth(fresh, rcond=tol) if fresh.size and np.linalg.norm(fresh) > tol else np.zeros((p.n, 0))
        rows.append(new.T)
        covered = np.hstack([covered, new])
        indices.append(new.shape[1])
        if new.shape[1] == 0:
            logger.info(f"Agente {i}: bloco vazio (C_{i} nada acrescenta ao já observado)")

    if covered.shape[1] < p.n:
        raise DecompositionError(
            f"(C, A) is not observable: observable subspace has dimension {covered.shape[1]} < n = {p.n}",
            rank=covered.shape[1], dimension=p.n)

    decomposition = Decomposition.from_transform(p, np.vstack(rows), indices)
    logger.info(f"✅ Decomposição concluída: índices v = {list(decomposition.indices)}")
    if decomposition.output_couplings:
        logger.info(f"Acoplamentos de saída em blocos anteriores: {sorted(decomposition.output_couplings)}")
    return decomposition


def verify_decomposition(p: Plant, d: Decomposition, tol: Optional[float] = None) -> Dict[str, Any]:
    """Resíduos máximos da forma triangular, de Σ·T = C e da observabilidade por bloco"""
    tol = Config.RESIDUAL_TOL if tol is None else tol
    if d.t_mat.shape != (p.n, p.n) or d.sigma_mat.shape != p.c.shape or len(d.indices) != p.agents:
        raise ValidationError(
            f"decomposition dimensions T{d.t_mat.shape}, Σ{d.sigma_mat.shape} "
            f"do not match plant n={p.n}, C{p.c.shape}, N={p.agents}")

    full = d.t_mat @ p.a @ np.linalg.inv(d.t_mat)
    upper = 0.0
    for i in range(d.agents):
        for l in range(i + 1, d.agents):
            part = full[d.block_slice(i), d.block_slice(l)]
            if part.size:
                upper = max(upper, float(np.abs(part).max()))
    triangular = upper / max(1.0, float(np.abs(p.a).max()))
    output = float(np.abs(d.sigma_mat @ d.t_mat - p.c).max(initial=0.0)) / max(1.0, float(np.abs(p.c).max(initial=0.0)))

    slack = []
    for a_block, c_block, v in zip(d.blocks_a, d.blocks_c, d.indices):
        slack.append(int(v - observability_rank(c_block, a_block)) if v else 0)

    coupling = max((float(np.abs(m).max()) for m in d.output_couplings.values()), default=0.0)
    report = {
        'triangular_residual': triangular,
        'output_residual': output,
        'rank_slack': slack,
        'output_coupling_max': coupling,
        'indices': list(d.indices),
        'tolerance': tol,
        'timestamp': datetime.now().isoformat(),
    }
    report['passed'] = triangular <= tol and output <= tol and not any(slack)
    return report


def _sorted_spectrum(spectrum: Sequence[complex]) -> np.ndarray:
    values = np.asarray(spectrum, dtype=complex)
    order = np.lexsort((values.imag, values.real))
    return values[order]


def _is_conjugate_closed(values: np.ndarray, tol: float = 1e-9) -> bool:
    scale = max(1.0, float(np.abs(values).max(initial=0.0)))
    return np.allclose(_sorted_spectrum(values), _sorted_spectrum(np.conj(values)), atol=tol * scale)


def _acker_observer(a: np.ndarray, r: np.ndarray, poles: np.ndarray) -> np.ndarray:
    """Fórmula de Ackermann para uma única saída (aceita polos repetidos)"""
    n = a.shape[0]
    obsv = np.vstack([r @ np.linalg.matrix_power(a, k) for k in range(n)])
    coeffs = np.real(np.poly(poles))
    phi = np.zeros_like(a)
    for coeff in coeffs:
        phi = phi @ a + coeff * np.eye(n)
    unit = np.zeros((n, 1))
    unit[-1, 0] = 1.0
    return phi @ np.linalg.solve(obsv, unit)


def matching_error(achieved: Sequence[complex], requested: Sequence[complex]) -> float:
    left = _sorted_spectrum(achieved)
    right = _sorted_spectrum(requested)
    if left.size != right.size:
        return float('inf')
    return float(np.abs(left - right).max(initial=0.0))


PLACEMENT_METHODS = ('YT', 'KNV0')


def _place_multi_output(a: np.ndarray, r: np.ndarray, poles: np.ndarray) -> np.ndarray:
    """
    place_poles no dual com cada método; fica o ganho de menor erro espectral.
    KNV0 não aceita polos complexos e pode falhar onde YT funciona.
    """
    best, best_error, failures = None, float('inf'), []
    for method in PLACEMENT_METHODS:
        try:
            gain_r = place_poles(a.T, r.T, poles, method=method).gain_matrix.T
        except ValueError as e:
            failures.append(f"{method}: {e}")
            continue
        error = matching_error(np.linalg.eigvals(a - gain_r @ r), poles)
        logger.debug(f"place_poles {method}: erro espectral {error:.3e}")
        if error < best_error:
            best, best_error = gain_r, error
    if best is None:
        raise PlacementError(f"pole placement failed: {'; '.join(failures)}")
    return best


def design_gain(a_block, c_block, spectrum: Sequence[complex], tol: Optional[float] = None) -> np.ndarray:
    """Ganho H tal que eig(A - H C) = spectrum; saídas múltiplas via compressão de linhas"""
    tol = Config.PLACEMENT_TOL if tol is None else tol
    a = _as_matrix(a_block, 'A_io')
    v = a.shape[0] if a.size else 0
    c = np.asarray(c_block, dtype=float)
    c = c.reshape(c.shape[0] if c.ndim == 2 else 1, v) if c.size else np.zeros((c.shape[0] if c.ndim == 2 else 0, v))
    poles = _sorted_spectrum(spectrum)

    if poles.size != v:
        raise ValidationError(f"spectrum has {poles.size} values for a block of dimension {v}")
    if not _is_conjugate_closed(poles):
        raise ValidationError(f"spectrum {poles.tolist()} is not closed under conjugation")
    if np.any(poles.real >= 0):
        raise ValidationError(f"spectrum {poles.tolist()} has values outside the open left half-plane")
    if v == 0:
        return np.zeros((0, c.shape[0]))
    rank = observability_rank(c, a)
    if rank < v:
        raise PlacementError(f"(C_io, A_io) is not observable: rank {rank} < {v}")

    # C = M·R com R de posto linha completo
    u, s, vt = svd(c, full_matrices=False)
    r_rank = int(np.sum(s > Config.RANK_TOL * s.max()))
    reduced = vt[:r_rank]
    mix = u[:, :r_rank] * s[:r_rank]

    if r_rank == 1:
        gain_r = _acker_observer(a, reduced, poles)
    else:
        gain_r = _place_multi_output(a, reduced, poles)
    gain = gain_r @ np.linalg.pinv(mix)

    achieved = np.linalg.eigvals(a - gain @ c)
    error = matching_error(achieved, poles)
    if error > tol * max(1.0, float(np.abs(poles).max())):
        raise PlacementError(f"placed spectrum misses the request by {error:.3e}")
    return gain


def default_spectrum(dimension: int, start: float = -12.0) -> List[float]:
    """{-12, -13, ...} com tantos valores quanto a dimensão do bloco"""
    return [start - j for j in range(dimension)]


def design_observer_gains(d: Decomposition, spectra: Optional[Sequence[Sequence[complex]]] = None) -> ObserverGains:
    if spectra is None:
        spectra = [default_spectrum(v) for v in d.indices]
    if len(spectra) != d.agents:
        raise ValidationError(f"{len(spectra)} spectra given for {d.agents} blocks")
    h_blocks = []
    for i, (a_block, c_block, spectrum) in enumerate(zip(d.blocks_a, d.blocks_c, spectra)):
        h_blocks.append(design_gain(a_block, c_block, spectrum))
        logger.debug(f"H_{i}o projetado para o espectro {list(spectrum)}")
    return ObserverGains(
        h_blocks=tuple(h_blocks),
        target_spectra=tuple(tuple(_sorted_spectrum(s).tolist()) for s in spectra),
    )
