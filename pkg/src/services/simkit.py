#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
DOBS v1.0 - Simulador
Integração RK4 conjunta da planta, dos observadores locais e dos ganhos
adaptativos sobre a agenda de chaveamento; métricas e exportação
"""

import logging
import math
import os
import time
import weakref
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import yaml

from config import Config
from services.certify import suggest_gains
from services.digraph import SwitchingSchedule
from services.errors import DivergenceError, ValidationError
from services.observer import ObserverNetwork, SlotTopology, adaptive_rate, build_slot_topology, observer_rhs
from services.sysdecomp import Decomposition, ObserverGains, Plant, decompose, design_observer_gains

logger = logging.getLogger(__name__)

GAIN_MODES = ('fixed', 'adaptive', 'certified')


def steps_per_dwell(dwell: float, step: float) -> int:
    """Passos por janela; o passo precisa dividir τ exatamente"""
    if not step > 0:
        raise ValidationError(f"step must be positive, got {step}")
    ratio = dwell / step
    count = int(round(ratio))
    if count < 1 or abs(ratio - count) > 1e-9 * max(1.0, ratio):
        raise ValidationError(f"step must divide dwell (step={step}, dwell={dwell})")
    return count


@dataclass(frozen=True, eq=False)
class Scenario:
    plant: Plant
    schedule: SwitchingSchedule
    gain_mode: str = 'fixed'
    gamma: float = 100.0
    gamma_ik: Any = 10.0
    spectra: Optional[Sequence[Sequence[complex]]] = None
    initial_plant: Any = 1.0
    estimate_range: Tuple[float, float] = (-3.0, 3.0)
    initial_estimates: Optional[np.ndarray] = None
    horizon: float = Config.DEFAULT_HORIZON
    step: float = Config.DEFAULT_STEP
    decimation: int = Config.SAMPLE_DECIMATION
    transform_enabled: bool = True
    threshold: float = Config.CONVERGENCE_RATIO
    record_estimates: bool = False
    record_gains: bool = False
    wp: Optional[float] = None
    name: str = 'scenario'

    def __post_init__(self):
        if self.gain_mode not in GAIN_MODES:
            raise ValidationError(f"gain mode must be one of {GAIN_MODES}, got {self.gain_mode!r}")
        if self.schedule.n != self.plant.agents:
            raise ValidationError(
                f"schedule has {self.schedule.n} nodes for {self.plant.agents} output blocks")
        steps_per_dwell(self.schedule.dwell, self.step)
        if not self.horizon > 0:
            raise ValidationError(f"horizon must be positive, got {self.horizon}")
        if self.decimation < 1:
            raise ValidationError(f"decimation must be at least 1, got {self.decimation}")
        low, high = self.estimate_range
        if not low <= high:
            raise ValidationError(f"estimate range [{low}, {high}] is empty")
        if self.initial_estimates is not None:
            shape = np.shape(self.initial_estimates)
            if shape != (self.plant.agents, self.plant.n):
                raise ValidationError(
                    f"initial estimates must be {self.plant.agents}x{self.plant.n}, got {shape}")

    @property
    def adaptive(self) -> bool:
        return self.gain_mode == 'adaptive'

    @property
    def chi0(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.initial_plant, dtype=float), (self.plant.n,)).copy()


@dataclass
class TimeSeries:
    times: np.ndarray
    sigma: np.ndarray
    slot: np.ndarray
    errors: np.ndarray
    gains: Optional[np.ndarray] = None
    estimates: Optional[np.ndarray] = None
    diverged: bool = False
    diverged_at: Optional[float] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    @property
    def agents(self) -> int:
        return self.errors.shape[1]

    def __len__(self) -> int:
        return len(self.times)

    def to_frame(self) -> pd.DataFrame:
        data = {'t': self.times, 'sigma': self.sigma}
        for i in range(self.agents):
            data[f'err_{i + 1}'] = self.errors[:, i]
        if self.gains is not None:
            for i in range(self.agents):
                for k in range(self.agents):
                    data[f'gamma_{i + 1}_{k + 1}'] = self.gains[:, i, k]
        return pd.DataFrame(data)


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, state: np.ndarray, h: float) -> np.ndarray:
    """Runge-Kutta clássico de quarta ordem"""
    if not h > 0:
        raise ValidationError(f"step must be positive, got {h}")
    k1 = _finite(f(t, state), t)
    k2 = _finite(f(t + h / 2, state + h / 2 * k1), t + h / 2)
    k3 = _finite(f(t + h / 2, state + h / 2 * k2), t + h / 2)
    k4 = _finite(f(t + h, state + h * k3), t + h)
    return state + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _finite(derivative: np.ndarray, t: float) -> np.ndarray:
    if not np.all(np.isfinite(derivative)):
        bad = int(np.count_nonzero(~np.isfinite(derivative)))
        raise DivergenceError(f"non-finite derivative at t={t:.6g} ({bad} entries)")
    return derivative


def spectrum(a: np.ndarray) -> List[complex]:
    """Autovalores ordenados por parte real, depois imaginária"""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[0] != a.shape[1]:
        raise ValidationError(f"matrix must be square, got {a.shape}")
    values = np.linalg.eigvals(a)
    order = np.lexsort((values.imag, values.real))
    return [complex(v) for v in values[order]]


@dataclass
class PreparedScenario:
    """Decomposição, ganhos H_io e tabela γ_ik resolvidos para um cenário"""

    decomposition: Decomposition
    observer_gains: ObserverGains
    gamma_ik: np.ndarray
    certificate: Optional[Dict[str, Any]] = None


def prepare(s: Scenario) -> PreparedScenario:
    dec = decompose(s.plant)
    gains = design_observer_gains(dec, s.spectra)
    certificate = None
    if s.gain_mode == 'certified':
        suggestion = suggest_gains(dec, gains, s.schedule, wp=s.wp)
        table = suggestion['gamma_ik']
        certificate = {
            'wp': float(suggestion['wp']),
            'gamma_lower': suggestion['gamma_lower'].tolist(),
            'dwell_feasible': bool(suggestion['dwell_feasible']),
            'passed': bool(suggestion['report'].passed),
        }
    else:
        table = np.broadcast_to(np.asarray(s.gamma_ik, dtype=float), (dec.agents, dec.agents)).copy()
    return PreparedScenario(decomposition=dec, observer_gains=gains, gamma_ik=table, certificate=certificate)


def _initial_estimates(s: Scenario, dec: Decomposition, seed: int) -> np.ndarray:
    """χ̂_i(0) sorteado em estimate_range por coordenada, levado para x = Tχ"""
    if s.initial_estimates is not None:
        chi_hat = np.asarray(s.initial_estimates, dtype=float)
    else:
        rng = np.random.default_rng(seed)
        low, high = s.estimate_range
        chi_hat = rng.uniform(low, high, size=(dec.agents, dec.n))
    return chi_hat @ dec.t_mat.T


def joint_generator(s: Scenario, base: ObserverNetwork, topology: SlotTopology, gamma_ik: np.ndarray) -> np.ndarray:
    """
    Matriz M de d/dt[χ; x̂] = M·[χ; x̂] no intervalo, com γ_ik congelado.
    A dinâmica é linear sem termo constante, então as colunas saem de M·e_j.
    """
    n, agents = s.plant.n, base.estimates.shape[0]
    dim = n + agents * n
    columns = []
    for j in range(dim):
        unit = np.zeros(dim)
        unit[j] = 1.0
        chi, estimates = unit[:n], unit[n:].reshape(agents, n)
        net = base.with_state(estimates, gamma_ik)
        columns.append(np.concatenate([s.plant.a @ chi,
                                       observer_rhs(net, s.plant.outputs(chi), topology).ravel()]))
    return np.column_stack(columns)


def spectral_radius(m: np.ndarray) -> float:
    if m.size == 0:
        return 0.0
    return float(np.abs(np.linalg.eigvals(m)).max())


def run(s: Scenario, seed: int = 0, prepared: Optional[PreparedScenario] = None) -> TimeSeries:
    """
    Integra planta, estimativas e (se adaptativo) γ_ik com passo fixo h.
    Cada passo usa m = ceil(ρh / RK4_STABILITY) subpassos RK4 e nunca
    atravessa um instante de chaveamento.
    """
    started = time.time()
    prepared = prepared or prepare(s)
    dec = prepared.decomposition
    agents, n = dec.agents, dec.n
    schedule = s.schedule

    per_slot = steps_per_dwell(schedule.dwell, s.step)
    total = int(round(s.horizon / s.step))
    h = s.step

    base = ObserverNetwork(decomposition=dec, gains=prepared.observer_gains,
                           estimates=_initial_estimates(s, dec, seed),
                           gamma=s.gamma, gamma_ik=prepared.gamma_ik)
    topologies: Dict[int, SlotTopology] = {}

    def topology_for(index: int) -> SlotTopology:
        if index not in topologies:
            topologies[index] = build_slot_topology(schedule.library[index], s.transform_enabled)
        return topologies[index]

    size_x = agents * n
    state = np.concatenate([s.chi0, base.estimates.ravel()]
                           + ([prepared.gamma_ik.ravel()] if s.adaptive else []))
    t_mat_inv = dec.t_mat.T if np.allclose(dec.t_mat @ dec.t_mat.T, np.eye(n)) else np.linalg.inv(dec.t_mat)

    def unpack(vector: np.ndarray):
        chi = vector[:n]
        estimates = vector[n:n + size_x].reshape(agents, n)
        gamma_ik = vector[n + size_x:].reshape(agents, agents) if s.adaptive else prepared.gamma_ik
        return chi, estimates, gamma_ik

    def derivative_for(topology: SlotTopology) -> Callable[[float, np.ndarray], np.ndarray]:
        def f(t: float, vector: np.ndarray) -> np.ndarray:
            chi, estimates, gamma_ik = unpack(vector)
            net = base.with_state(estimates, gamma_ik)
            parts = [s.plant.a @ chi, observer_rhs(net, s.plant.outputs(chi), topology).ravel()]
            if s.adaptive:
                parts.append(adaptive_rate(net, topology).ravel())
            return np.concatenate(parts)
        return f

    record_gains = s.adaptive or s.record_gains
    times: List[float] = []
    sigmas: List[int] = []
    slots: List[int] = []
    errors: List[np.ndarray] = []
    gains: List[np.ndarray] = []
    estimates: List[np.ndarray] = []

    def sample(step_index: int, vector: np.ndarray):
        chi, est, gamma_ik = unpack(vector)
        slot = (step_index // per_slot) % schedule.slots
        times.append(step_index * h)
        slots.append(slot)
        sigmas.append(schedule.assignment[slot])
        errors.append(np.linalg.norm(est - (dec.t_mat @ chi)[None, :], axis=1))
        if record_gains:
            gains.append(np.array(gamma_ik, dtype=float))
        if s.record_estimates:
            estimates.append(est @ t_mat_inv.T)

    logger.info(f"🚀 Simulando '{s.name}': horizonte {s.horizon}s, passo {h}s, "
                f"transformação {'ligada' if s.transform_enabled else 'desligada'}, ganhos {s.gain_mode}, seed {seed}")

    diverged, diverged_at = False, None
    substeps_logged = False
    radii: Dict[int, float] = {}
    cached_index, substeps, f, gamma_seen = None, 1, None, 0.0
    sample(0, state)
    for step_index in range(total):
        slot = (step_index // per_slot) % schedule.slots
        index = schedule.assignment[slot]
        topology = topology_for(index)
        gamma_now = np.asarray(unpack(state)[2])
        gamma_max = float(gamma_now.max(initial=0.0))
        grown = s.adaptive and gamma_max > Config.ADAPTIVE_RHO_GROWTH * gamma_seen
        if index != cached_index or grown:
            if index != cached_index:
                logger.debug(f"t={step_index * h:.4f}s: janela {slot}, grafo {index}")
                f = derivative_for(topology)
            if s.adaptive:
                rho = spectral_radius(joint_generator(s, base, topology, gamma_now))
                gamma_seen = gamma_max
            else:
                if index not in radii:
                    radii[index] = spectral_radius(joint_generator(s, base, topology, gamma_now))
                rho = radii[index]
            substeps = max(1, math.ceil(rho * h / Config.RK4_STABILITY))
            cached_index = index
            if substeps > 1 and not substeps_logged:
                logger.warning(f"⚠️ Ganhos elevados: {substeps} subpassos RK4 por passo (ρ ≈ {rho:.3g})")
                substeps_logged = True

        t0 = step_index * h
        sub = h / substeps
        try:
            for j in range(substeps):
                state = rk4_step(f, t0 + j * sub, state, sub)
        except DivergenceError as e:
            logger.error(f"❌ Divergência: {e}")
            diverged, diverged_at = True, t0
            break

        chi, est, _ = unpack(state)
        norms = np.linalg.norm(est - (dec.t_mat @ chi)[None, :], axis=1)
        if not np.all(np.isfinite(norms)) or norms.max() > Config.DIVERGENCE_LIMIT:
            logger.error(f"❌ Erro acima de {Config.DIVERGENCE_LIMIT:g} em t={(step_index + 1) * h:.4f}s; execução truncada")
            diverged, diverged_at = True, (step_index + 1) * h
            sample(step_index + 1, state)
            break
        if (step_index + 1) % s.decimation == 0 or step_index + 1 == total:
            sample(step_index + 1, state)

    elapsed = time.time() - started
    series = TimeSeries(
        times=np.array(times),
        sigma=np.array(sigmas, dtype=int),
        slot=np.array(slots, dtype=int),
        errors=np.vstack(errors),
        gains=np.stack(gains) if record_gains else None,
        estimates=np.stack(estimates) if s.record_estimates else None,
        diverged=diverged,
        diverged_at=diverged_at,
        meta={
            'scenario': s.name,
            'seed': int(seed),
            'transform': bool(s.transform_enabled),
            'gain_mode': s.gain_mode,
            'elapsed_seconds': round(elapsed, 3),
            'timestamp': datetime.now().isoformat(),
            'certificate': prepared.certificate,
        },
    )
    logger.info(f"✅ Simulação concluída em {elapsed:.1f}s: erro final máximo {series.errors[-1].max():.3e}")
    return series


def metrics(ts: TimeSeries, threshold: Optional[float] = None) -> Dict[str, Any]:
    """
    θ = threshold·max_i‖e_i(0)‖. time_to_threshold é o primeiro instante com
    max_i‖e_i‖ ≤ θ, ou None quando nunca ocorre ou a execução divergiu.
    """
    if len(ts) == 0:
        raise ValidationError("time series is empty")
    ratio = Config.CONVERGENCE_RATIO if threshold is None else threshold
    worst = ts.errors.max(axis=1)
    initial = float(worst[0])
    theta = ratio * initial

    reached = np.flatnonzero(worst <= theta)
    time_to_threshold = None if ts.diverged or not reached.size else float(ts.times[reached[0]])
    terminal = float(worst[-1])
    summary = {
        'samples': len(ts),
        'final_error': ts.errors[-1].tolist(),
        'peak_error': ts.errors.max(axis=0).tolist(),
        'initial_max_error': initial,
        'terminal_max_error': terminal,
        'threshold': theta,
        'threshold_ratio': ratio,
        'time_to_threshold': time_to_threshold,
        'converged': bool(not ts.diverged and terminal <= theta),
        'diverged': bool(ts.diverged),
        'diverged_at': ts.diverged_at,
        'gain_sup': ts.gains.max(axis=0).tolist() if ts.gains is not None else None,
    }
    return summary


def export_csv(ts: TimeSeries, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    ts.to_frame().to_csv(path, index=False, float_format='%.10g')
    logger.info(f"📊 Série temporal salva em {path} ({len(ts)} amostras)")
    return path


def export_summary(summary: Dict[str, Any], path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w', encoding='utf-8') as handle:
        yaml.safe_dump(summary, handle, sort_keys=False, allow_unicode=True)
    logger.info(f"📊 Resumo salvo em {path}")
    return path


class ScenarioSimulator:
    """Executa cenários, reaproveitando a preparação entre seeds"""

    def __init__(self):
        self._prepared: "weakref.WeakKeyDictionary[Scenario, PreparedScenario]" = weakref.WeakKeyDictionary()

    def prepare(self, s: Scenario) -> PreparedScenario:
        if s not in self._prepared:
            self._prepared[s] = prepare(s)
        return self._prepared[s]

    def run(self, s: Scenario, seed: int = 0) -> TimeSeries:
        return run(s, seed, prepared=self.prepare(s))

    def summarize(self, s: Scenario, ts: TimeSeries) -> Dict[str, Any]:
        summary = {'metrics': metrics(ts, s.threshold), 'run': dict(ts.meta)}
        summary['run']['horizon'] = s.horizon
        summary['run']['step'] = s.step
        return summary

    def run_and_export(self, s: Scenario, seed: int, out_dir: str, csv_name: str = 'timeseries.csv',
                       summary_name: str = 'summary.yaml') -> Dict[str, Any]:
        ts = self.run(s, seed)
        summary = self.summarize(s, ts)
        csv_path = export_csv(ts, os.path.join(out_dir, csv_name))
        summary_path = export_summary(summary, os.path.join(out_dir, summary_name))
        return {'series': ts, 'summary': summary, 'csv': csv_path, 'summary_path': summary_path}

    def ablation(self, s: Scenario, seed: int = 0) -> Dict[str, Any]:
        """Mesmo cenário com e sem transformação de rede"""
        without = replace(s, transform_enabled=False, name=f"{s.name}-no-transform")
        with_ts = self.run(s, seed)
        without_ts = run(without, seed, prepared=self.prepare(s))
        return {
            'with_transform': metrics(with_ts, s.threshold),
            'without_transform': metrics(without_ts, s.threshold),
        }

    def clear(self):
        self._prepared.clear()


# Instância global
simulator = ScenarioSimulator()
