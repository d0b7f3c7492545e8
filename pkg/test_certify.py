#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
DOBS v1.0 - Testes do certificado de convergência
Q_io, P_iu, P_io, medidas de permanência, condições de ganho e sugestão
"""

import os
import sys

import numpy as np
import pytest

# Adiciona a raiz e o diretório src ao path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), 'src'))

from services.certify import (certifier, check_conditions, default_wp, dwell_measures, lambda_max, lambda_min,
                              solve_diag_q, solve_marginal_p, solve_p_io, suggest_gains)
from services.digraph import Digraph, SwitchingSchedule, default_schedule, member_set, subgraph_matrices, transform
from services.errors import InfeasibilityError, ValidationError
from services.power_system import FOUR_AREAS, build_power_system
from services.sysdecomp import Plant, decompose, design_observer_gains

SCALAR_A = np.array([[-1.0, 0.0, 0.0], [0.5, -2.0, 0.0], [0.0, 0.3, 0.5]])


def scalar_system(poles=(-3.0, -4.0, -5.0)):
    """Três blocos escalares, C_i = e_iᵀ"""
    plant = Plant(a=SCALAR_A, c_blocks=tuple(np.eye(3)[[i]] for i in range(3)))
    dec = decompose(plant)
    return dec, design_observer_gains(dec, [[p] for p in poles])


def complete_schedule(n, slots=2, dwell=0.4):
    g = Digraph.from_arcs(n, [(i, j) for i in range(n) for j in range(n) if i != j])
    return SwitchingSchedule(period=dwell * slots, slots=slots, assignment=(0,) * slots, library=(g,))


def test_lambda_helpers_use_symmetric_part():
    assert lambda_max(np.array([[0.0, 2.0], [0.0, 0.0]])) == pytest.approx(1.0)
    assert lambda_min(np.array([[0.0, 2.0], [0.0, 0.0]])) == pytest.approx(-1.0)
    assert lambda_max(np.zeros((0, 0))) == 0.0
    assert lambda_min(np.zeros((0, 0))) == float('inf')


def test_solve_diag_q_identity():
    q = solve_diag_q(np.eye(2), margin=0.1)
    assert np.allclose(q, q[0, 0] * np.eye(2))
    assert lambda_min(q + q.T) == pytest.approx(2.1)


def test_solve_diag_q_symmetric_m_matrix():
    h = np.array([[2.0, -1.0], [-1.0, 2.0]])
    q = solve_diag_q(h, margin=0.1)
    assert np.allclose(q, q[0, 0] * np.eye(2))
    assert np.linalg.eigvalsh(q @ h + h.T @ q).min() == pytest.approx(2.1)


def test_solve_diag_q_chain():
    h = np.array([[1.0, 0.0], [-1.0, 1.0]])
    q = solve_diag_q(h)
    assert np.all(np.diag(q) > 0)
    assert np.allclose(q, np.diag(np.diag(q)))
    assert np.linalg.eigvalsh(q @ h + h.T @ q).min() > 2.0


def test_solve_diag_q_random_subgraphs():
    rng = np.random.default_rng(13)
    checked = 0
    while checked < 100:
        n = int(rng.integers(2, 9))
        adj = rng.random((n, n)) < 0.4
        np.fill_diagonal(adj, False)
        mats = subgraph_matrices(transform(Digraph(adj), int(rng.integers(0, n))))
        if mats.degenerate:
            continue
        q = solve_diag_q(mats.h_matrix)
        assert np.linalg.eigvalsh(q @ mats.h_matrix + mats.h_matrix.T @ q).min() > 2.0
        checked += 1


def test_solve_diag_q_rejects_non_m_matrix():
    with pytest.raises(InfeasibilityError):
        solve_diag_q(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(InfeasibilityError):
        solve_diag_q(np.array([[-1.0, 0.0], [0.0, 1.0]]))
    assert solve_diag_q(np.zeros((0, 0))).shape == (0, 0)


def test_marginal_p_without_arcs():
    assert np.array_equal(solve_marginal_p(np.zeros((3, 3))), np.eye(3))
    assert solve_marginal_p(np.zeros((0, 0))).shape == (0, 0)


def test_marginal_p_cycle():
    ring = np.array([[1.0, 0.0, -1.0], [-1.0, 1.0, 0.0], [0.0, -1.0, 1.0]])
    p = solve_marginal_p(ring)
    assert np.allclose(p, np.diag(np.diag(p)))
    assert np.linalg.eigvalsh(p).min() > 0
    assert np.linalg.eigvalsh(p @ ring + ring.T @ p).min() >= -1e-8


def test_marginal_p_reducible_laplacian():
    lap = np.array([[1.0, -1.0], [0.0, 0.0]])
    p = solve_marginal_p(lap)
    assert np.linalg.eigvalsh(p).min() > 0
    assert np.linalg.eigvalsh(p @ lap + lap.T @ p).min() >= -1e-8 * max(1.0, np.abs(p).max())

    # P = [[1,-1],[-1,2]] também é viável
    known = np.array([[1.0, -1.0], [-1.0, 2.0]])
    assert np.allclose(known @ lap + lap.T @ known, [[2.0, -2.0], [-2.0, 2.0]])


def test_marginal_p_random_laplacians():
    rng = np.random.default_rng(8)
    for _ in range(100):
        n = int(rng.integers(1, 8))
        adj = (rng.random((n, n)) < 0.35).astype(float)
        np.fill_diagonal(adj, 0.0)
        lap = np.diag(adj.sum(axis=1)) - adj
        p = solve_marginal_p(lap)
        assert np.allclose(p, p.T)
        assert np.linalg.eigvalsh(p).min() > 0
        scale = max(1.0, np.linalg.eigvalsh(p).max() * np.abs(lap).max())
        assert np.linalg.eigvalsh(p @ lap + lap.T @ p).min() >= -1e-8 * scale


def test_solve_p_io_examples():
    assert np.allclose(solve_p_io(-np.eye(3), 1.0), np.eye(3))
    assert solve_p_io(np.array([[-4.0]]), 2.0)[0, 0] == pytest.approx(0.5)
    with pytest.raises(InfeasibilityError):
        solve_p_io(np.array([[1.0]]), 1.0)
    with pytest.raises(ValidationError):
        solve_p_io(-np.eye(2), 0.0)


def test_solve_p_io_random_hurwitz():
    rng = np.random.default_rng(5)
    for _ in range(20):
        m = rng.normal(size=(4, 4))
        acl = m - (np.linalg.eigvals(m).real.max() + 1.0) * np.eye(4)
        p = solve_p_io(acl, 3.0)
        residual = np.abs(p @ acl + acl.T @ p + 6.0 * np.eye(4)).max()
        assert residual <= 1e-9 * max(1.0, np.abs(p).max() * np.abs(acl).max())
        assert np.linalg.eigvalsh(p).min() > 0


def test_dwell_measures_all_slots():
    measures = dwell_measures(complete_schedule(3, slots=4), 0)
    assert np.allclose(measures.member, 1.6)
    assert np.allclose(measures.complement, 0.0)
    assert np.allclose(measures.ratios(), 0.0)


def test_dwell_measures_three_of_four_slots():
    full = Digraph.from_arcs(3, [(i, j) for i in range(3) for j in range(3) if i != j])
    s = SwitchingSchedule(period=1.6, slots=4, assignment=(0, 0, 0, 1), library=(full, Digraph.empty(3)))
    measures = dwell_measures(s, 0)
    assert measures.member[1] == pytest.approx(1.2)
    assert measures.complement[1] == pytest.approx(0.4)
    assert measures.member[0] == pytest.approx(1.6)
    assert measures.never_member() == []


def test_dwell_measures_match_enumeration():
    s = default_schedule(4)
    for i in range(4):
        measures = dwell_measures(s, i)
        for k in range(4):
            slots_in = sum(1 for slot in range(s.slots) if k in member_set(s.graph_for_slot(slot), i))
            assert measures.member[k] == pytest.approx(slots_in * s.dwell)
            assert measures.member[k] + measures.complement[k] == pytest.approx(s.period)


def test_gain_condition_huge_and_tiny_gains():
    dec, gains = scalar_system()
    s = default_schedule(3)
    huge = check_conditions(dec, gains, s, wp=1.0, gamma_ik=1e6)
    assert huge.gain_pass
    tiny = check_conditions(dec, gains, s, wp=1.0, gamma_ik=1e-6)
    assert not tiny.gain_pass
    assert not tiny.passed


def test_gain_condition_is_monotone():
    dec, gains = scalar_system()
    s = default_schedule(3)
    seen_pass = False
    for gamma in (0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0):
        report = check_conditions(dec, gains, s, wp=2.0, gamma_ik=gamma)
        if seen_pass:
            assert report.gain_pass
        seen_pass = seen_pass or report.gain_pass
    assert seen_pass


def test_always_member_makes_dwell_condition_trivial():
    dec, gains = scalar_system()
    report = check_conditions(dec, gains, complete_schedule(3), wp=0.01, gamma_ik=100.0)
    for block in report.blocks:
        assert block.dwell_rhs == 0.0
        assert block.dwell_pass
    assert report.passed


def test_structural_failure_reported():
    dec, gains = scalar_system()
    lonely = SwitchingSchedule(period=0.8, slots=2, assignment=(0, 0), library=(Digraph.empty(3),))
    report = check_conditions(dec, gains, lonely, wp=1.0, gamma_ik=100.0)
    assert not report.dwell_pass
    assert report.blocks[0].structural_failure == [1, 2]
    assert report.to_dict()['blocks'][0]['dwell_condition']['rhs'] is None
    with pytest.raises(InfeasibilityError):
        suggest_gains(dec, gains, lonely, wp=1.0)


def test_report_rechecks_defining_inequalities():
    plant = build_power_system(FOUR_AREAS)
    dec = decompose(plant)
    gains = design_observer_gains(dec, [[-12.0, -13.0, -14.0, -15.0]] * 4)
    s = default_schedule(4)
    report = check_conditions(dec, gains, s, wp=1.0, gamma_ik=10.0)
    for block in report.blocks:
        i = block.terms.block
        for slot in block.terms.slots:
            mats = subgraph_matrices(transform(s.library[slot.graph_index], i))
            if slot.pi:
                q = slot.q_matrix
                assert np.linalg.eigvalsh(q @ mats.h_matrix + mats.h_matrix.T @ q).min() > 2.0
            if slot.p_iu.size:
                lap = mats.complement_laplacian
                sym = slot.p_iu @ lap + lap.T @ slot.p_iu
                scale = max(1.0, np.linalg.eigvalsh(slot.p_iu).max() * max(1.0, np.abs(lap).max()))
                assert np.linalg.eigvalsh(slot.p_iu).min() > 0
                assert np.linalg.eigvalsh(sym).min() >= -1e-8 * scale
        rate = block.gamma_upper + report.wp
        assert block.p_io_residual <= 1e-9 * max(1.0, rate * block.p_io_bar)
        assert np.linalg.eigvalsh(block.p_io).min() > 0


def test_suggest_closed_form_when_blocks_are_idle():
    plant = Plant(a=np.zeros((2, 2)), c_blocks=(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])))
    dec = decompose(plant)
    gains = design_observer_gains(dec, [[-1e-3], [-1e-3]])
    result = suggest_gains(dec, gains, default_schedule(2), wp=4.0)
    assert np.allclose(result['gamma_lower'], np.sqrt(1.1 * 4.0), rtol=1e-4)
    assert result['report'].gain_pass


def test_suggest_gains_grow_with_faster_spectra():
    s = default_schedule(3)
    slow = suggest_gains(*scalar_system((-3.0, -4.0, -5.0)), s, wp=1.0)
    fast = suggest_gains(*scalar_system((-6.0, -8.0, -10.0)), s, wp=1.0)
    assert np.all(fast['gamma_lower'] >= slow['gamma_lower'] - 1e-12)


def test_suggested_table_passes_gain_condition():
    dec, gains = scalar_system()
    s = default_schedule(3)
    result = suggest_gains(dec, gains, s)
    assert result['wp'] > 0
    assert result['report'].gain_pass
    table = result['gamma_ik']
    assert table.shape == (3, 3)
    assert np.allclose(table, np.tile(result['gamma_lower'], (3, 1)))
    again = check_conditions(dec, gains, s, wp=result['wp'], gamma_ik=table)
    assert again.gain_pass


def test_power4_certified_table_is_finite():
    plant = build_power_system(FOUR_AREAS)
    dec = decompose(plant)
    gains = design_observer_gains(dec, [[-12.0, -13.0, -14.0, -15.0]] * 4)
    result = certifier.suggest(dec, gains, default_schedule(4))
    assert np.all(np.isfinite(result['gamma_ik']))
    assert np.all(result['gamma_ik'] > 0)
    assert isinstance(result['dwell_feasible'], bool)
    text = certifier.render()
    assert 'overall:' in text


def test_default_wp_rule():
    dec, gains = scalar_system()
    wp, info = default_wp(dec, gains, default_schedule(3), 10.0)
    assert wp > 0
    assert info['rule'] in ('midpoint', 'unconstrained', 'fallback')
    if info['rule'] == 'midpoint':
        assert wp == pytest.approx(1.5 * info['wp_star'])


def test_literal_variant_and_serialization():
    dec, gains = scalar_system()
    report = check_conditions(dec, gains, default_schedule(3), wp=1.0, gamma_ik=10.0, literal_a1o=True)
    document = report.to_dict()
    assert document['literal_a1o'] is True
    assert len(document['blocks']) == 3
    frame = report.to_frame()
    assert list(frame.index) == [1, 2, 3]
    with pytest.raises(ValidationError):
        check_conditions(dec, gains, default_schedule(3), wp=-1.0)
    with pytest.raises(ValidationError):
        check_conditions(dec, gains, default_schedule(4), wp=1.0)
