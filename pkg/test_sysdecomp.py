#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
DOBS v1.0 - Testes da decomposição de observabilidade e do projeto de ganhos
"""

import os
import sys
from dataclasses import replace

import numpy as np
import pytest
import sympy
from scipy.linalg import expm
from scipy.stats import ortho_group

# Adiciona a raiz e o diretório src ao path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), 'src'))

from services.errors import DecompositionError, PlacementError, ValidationError
from services.power_system import FOUR_AREAS, build_power_system
from services.sysdecomp import (PLACEMENT_METHODS, Decomposition, Plant, _place_multi_output, decompose,
                                default_spectrum, design_gain, design_observer_gains, matching_error,
                                observability_rank, verify_decomposition)


def staircase_plant(rng, sizes, rotate=True):
    """A bloco-triangular inferior, C_i só no bloco i, depois uma rotação ortogonal"""
    n = sum(sizes)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    a = np.zeros((n, n))
    c_blocks = []
    for i, v in enumerate(sizes):
        rows = slice(offsets[i], offsets[i + 1])
        a[rows, :offsets[i + 1]] = rng.normal(size=(v, offsets[i + 1])) / np.sqrt(n)
        c = np.zeros((int(rng.integers(1, 3)), n))
        c[:, rows] = rng.normal(size=(c.shape[0], v))
        c_blocks.append(c)
    if rotate:
        q = ortho_group.rvs(n, random_state=rng) if n > 1 else np.eye(1)
        a = q.T @ a @ q
        c_blocks = [c @ q for c in c_blocks]
    return Plant(a=a, c_blocks=tuple(c_blocks))


def test_observability_rank_trivial_cases():
    a = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-1.0, -2.0, -3.0]])
    assert observability_rank(np.eye(3), a) == 3
    assert observability_rank(np.zeros((1, 3)), a) == 0
    assert observability_rank([[1.0, 0.0, 0.0]], a) == 3
    with pytest.raises(ValidationError):
        observability_rank(np.eye(2), a)


def test_observability_rank_matches_exact_rank():
    rng = np.random.default_rng(5)
    for _ in range(60):
        n = int(rng.integers(1, 5))
        a = rng.integers(-2, 3, size=(n, n))
        c = rng.integers(-2, 3, size=(int(rng.integers(1, 3)), n))
        blocks = [sympy.Matrix(c) * sympy.Matrix(a) ** k for k in range(n)]
        exact = sympy.Matrix.vstack(*blocks).rank()
        assert observability_rank(c.astype(float), a.astype(float)) == exact


def test_plant_rejects_unobservable_pair():
    a = np.diag([1.0, 2.0])
    with pytest.raises(DecompositionError) as info:
        Plant(a=a, c_blocks=(np.array([[1.0, 0.0]]),))
    assert info.value.rank == 1
    assert info.value.dimension == 2
    assert 'not observable' in str(info.value)


def test_plant_rejects_wrong_output_width():
    with pytest.raises(ValidationError):
        Plant(a=np.eye(2), c_blocks=(np.ones((1, 3)),))


def test_single_agent_keeps_whole_space():
    rng = np.random.default_rng(1)
    plant = Plant(a=rng.normal(size=(5, 5)), c_blocks=(rng.normal(size=(1, 5)),))
    d = decompose(plant)
    assert d.indices == (5,)
    report = verify_decomposition(plant, d)
    assert report['passed']
    assert np.allclose(d.t_mat @ plant.a @ d.t_mat.T, d.blocks_a[0], atol=1e-10)


def test_staircase_plant_recovers_block_sizes():
    rng = np.random.default_rng(17)
    plant = staircase_plant(rng, [2, 3, 1], rotate=False)
    d = decompose(plant)
    assert d.indices == (2, 3, 1)
    assert verify_decomposition(plant, d)['passed']


def test_empty_block_when_output_adds_nothing():
    a = np.array([[-1.0, 0.0], [1.0, -2.0]])
    c1 = np.array([[1.0, 0.0], [0.0, 1.0]])
    c2 = np.array([[1.0, 1.0]])
    plant = Plant(a=a, c_blocks=(c1, c2))
    d = decompose(plant)
    assert d.indices == (2, 0)
    assert d.blocks_a[1].shape == (0, 0)
    assert verify_decomposition(plant, d)['passed']
    gains = design_observer_gains(d)
    assert gains.h_blocks[1].shape == (0, 1)


def test_decompose_random_plants():
    rng = np.random.default_rng(2023)
    for _ in range(200):
        agents = int(rng.integers(1, 5))
        sizes = [int(v) for v in rng.integers(1, 4, size=agents)]
        while sum(sizes) > 12:
            sizes[int(np.argmax(sizes))] -= 1
        plant = staircase_plant(rng, sizes)
        d = decompose(plant)
        report = verify_decomposition(plant, d)
        assert report['triangular_residual'] <= 1e-9
        assert report['output_residual'] <= 1e-9
        assert not any(report['rank_slack'])
        assert report['passed']
        assert list(d.indices) == sizes
        assert np.allclose(d.t_mat @ d.t_mat.T, np.eye(plant.n), atol=1e-10)


def test_block_dynamics_reproduce_transformed_state():
    rng = np.random.default_rng(8)
    plant = staircase_plant(rng, [2, 2, 2])
    d = decompose(plant)
    chi0 = rng.normal(size=plant.n)
    for t in (0.1, 0.5, 1.0):
        direct = d.t_mat @ expm(plant.a * t) @ chi0
        blockwise = expm(d.a_bar * t) @ (d.t_mat @ chi0)
        assert np.allclose(direct, blockwise, atol=1e-9)


def test_sigma_layout():
    rng = np.random.default_rng(21)
    plant = staircase_plant(rng, [2, 1, 3])
    d = decompose(plant)
    for i in range(d.agents):
        sigma_i = d.sigma_block(i)
        offsets = d.offsets
        assert np.allclose(sigma_i[:, offsets[i + 1]:], 0.0)
        assert np.allclose(sigma_i[:, d.block_slice(i)], d.blocks_c[i])
    assert np.allclose(d.sigma_mat @ d.t_mat, plant.c, atol=1e-10)


def test_verify_flags_non_triangular_transform():
    a = np.array([[0.0, 1.0], [-2.0, -3.0]])
    plant = Plant(a=a, c_blocks=(np.array([[0.0, 1.0]]), np.array([[1.0, 0.0]])))
    d = Decomposition.from_transform(plant, np.eye(2), (1, 1))
    report = verify_decomposition(plant, d)
    assert report['triangular_residual'] > 1e-3
    assert not report['passed']


def test_verify_flags_perturbed_sigma():
    rng = np.random.default_rng(4)
    plant = staircase_plant(rng, [2, 2])
    d = decompose(plant)
    broken = replace(d, sigma_mat=d.sigma_mat + 1e-3)
    report = verify_decomposition(plant, broken)
    assert report['output_residual'] > 1e-6
    assert not report['passed']


def test_verify_dimension_mismatch():
    rng = np.random.default_rng(4)
    plant = staircase_plant(rng, [2, 2])
    other = staircase_plant(rng, [1, 2])
    with pytest.raises(ValidationError):
        verify_decomposition(plant, decompose(other))


def test_design_gain_scalar_and_double_integrator():
    assert float(design_gain(2.0, 1.0, [-1.0]).ravel()[0]) == pytest.approx(3.0)
    gain = design_gain([[0.0, 1.0], [0.0, 0.0]], [[1.0, 0.0]], [-1.0, -2.0])
    assert np.allclose(gain.ravel(), [3.0, 2.0])


def test_design_gain_complex_pair():
    a = np.array([[0.0, 1.0], [-1.0, 0.0]])
    c = np.array([[1.0, 0.0]])
    poles = [-2.0 + 1.0j, -2.0 - 1.0j]
    gain = design_gain(a, c, poles)
    assert matching_error(np.linalg.eigvals(a - gain @ c), poles) < 1e-6


def test_design_gain_rejects_bad_requests():
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    c = np.array([[1.0, 0.0]])
    with pytest.raises(ValidationError):
        design_gain(a, c, [-1.0])
    with pytest.raises(ValidationError):
        design_gain(a, c, [-1.0 + 1.0j, -2.0])
    with pytest.raises(ValidationError):
        design_gain(a, c, [-1.0, 1.0])
    with pytest.raises(PlacementError):
        design_gain(np.diag([1.0, 2.0]), c, [-1.0, -2.0])


def test_design_gain_random_blocks():
    rng = np.random.default_rng(99)
    for _ in range(100):
        v = int(rng.integers(1, 7))
        rows = int(rng.integers(1, 4))
        a = rng.normal(size=(v, v))
        c = rng.normal(size=(rows, v))
        poles = [-1.0 - j for j in range(v)]
        if v >= 3:
            poles[:2] = [-1.5 + 0.5j, -1.5 - 0.5j]
        gain = design_gain(a, c, poles)
        assert gain.shape == (v, rows)
        assert matching_error(np.linalg.eigvals(a - gain @ c), poles) <= 1e-6 * max(1.0, np.abs(poles).max())


def test_power_system_blocks_reach_requested_spectrum():
    plant = build_power_system(FOUR_AREAS)
    d = decompose(plant)
    assert sum(d.indices) == 16
    assert d.indices == (4, 4, 4, 4)
    for a_block, c_block in zip(d.blocks_a, d.blocks_c):
        assert observability_rank(c_block, a_block) == 4

    gains = design_observer_gains(d, [[-12.0, -13.0, -14.0, -15.0]] * 4)
    for a_block, c_block, h in zip(d.blocks_a, d.blocks_c, gains.h_blocks):
        eigs = np.linalg.eigvals(a_block - h @ c_block)
        assert matching_error(eigs, [-12.0, -13.0, -14.0, -15.0]) < 1e-6


def test_multi_output_placement_keeps_best_method():
    assert PLACEMENT_METHODS == ('YT', 'KNV0')
    d = decompose(build_power_system(FOUR_AREAS))
    poles = [-15.0, -14.0, -13.0, -12.0]
    checked = 0
    for a_block, c_block in zip(d.blocks_a, d.blocks_c):
        _, s, vt = np.linalg.svd(c_block, full_matrices=False)
        reduced = vt[:int(np.sum(s > 1e-9 * s.max()))]
        if reduced.shape[0] < 2:
            continue
        gain_r = _place_multi_output(a_block, reduced, poles)
        assert matching_error(np.linalg.eigvals(a_block - gain_r @ reduced), poles) < 1e-6
        checked += 1
    assert checked > 0


def test_multi_output_placement_with_complex_poles():
    # KNV0 recusa polos complexos; YT ainda atende
    rng = np.random.default_rng(5)
    a = rng.normal(size=(4, 4))
    c = rng.normal(size=(2, 4))
    poles = [-2.0 + 1.0j, -2.0 - 1.0j, -3.0, -4.0]
    gain = design_gain(a, c, poles)
    assert matching_error(np.linalg.eigvals(a - gain @ c), poles) < 1e-6


def test_multi_output_placement_fails_when_every_method_fails():
    rng = np.random.default_rng(6)
    a = rng.normal(size=(3, 3))
    c = rng.normal(size=(2, 3))
    with pytest.raises(PlacementError):
        design_gain(a, c, [-1.0, -1.0, -1.0])


def test_default_spectrum():
    assert default_spectrum(0) == []
    assert default_spectrum(3) == [-12.0, -13.0, -14.0]
    with pytest.raises(ValidationError):
        design_observer_gains(decompose(build_power_system(FOUR_AREAS)), [[-1.0]])
