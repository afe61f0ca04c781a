"""Fiedler pairing, involution snapping, and the alternating optimization."""

import json
import math

import numpy as np
import pytest

from oracles import central_fd_gradient, penalized_objective
from prism.duality import operator_from_text, validate_involution
from prism.errors import NonFinite, ValidationError
from prism.graphs import graph_from_edges, laplacian
from prism.learn import (
    AlternatingConfig,
    FiedlerPairing,
    _objective_and_gradient,
    alternate,
    commutator_norm,
    fiedler_duality_operator,
    fiedler_pairing,
    learn_result_to_json,
    optimize_p_step,
    pairing_operator,
    snap_to_involution,
)


def path_graph(n):
    return graph_from_edges([f"n{i}" for i in range(n)], [(i, i + 1) for i in range(n - 1)])


def lollipop_graph():
    """A triangle with a 3-node tail: connected, visibly asymmetric."""
    return graph_from_edges(
        [str(i) for i in range(6)], [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5)]
    )


def test_fiedler_pairing_mirrors_even_path():
    pairing = fiedler_pairing(path_graph(4))
    assert pairing.permutation == (3, 2, 1, 0)
    assert pairing.fixed_point is None


def test_fiedler_pairing_mirrors_odd_path():
    pairing = fiedler_pairing(path_graph(5))
    assert pairing.permutation == (4, 3, 2, 1, 0)
    assert pairing.fixed_point == 2


def test_fiedler_pairing_is_involution_on_irregular_graph():
    pairing = fiedler_pairing(lollipop_graph())
    sigma = pairing.permutation
    assert sorted(sigma) == list(range(6))
    assert all(sigma[sigma[i]] == i for i in range(6))


def test_fiedler_pairing_rejects_non_involution():
    with pytest.raises(ValidationError):
        FiedlerPairing(permutation=(1, 2, 0), fixed_point=None)  # a 3-cycle


def test_pairing_operator_is_permutation_involution():
    op = pairing_operator(fiedler_pairing(path_graph(5)))
    assert op.is_permutation()
    assert np.array_equal(op.matrix @ op.matrix, np.eye(5))


def test_snap_fixes_exact_involutions():
    op = fiedler_duality_operator(path_graph(4))
    snapped = snap_to_involution(op.matrix)
    assert np.allclose(snapped.matrix, op.matrix, atol=1e-12)


def test_snap_zero_matrix_gives_identity():
    snapped = snap_to_involution(np.zeros((4, 4)))
    assert np.allclose(snapped.matrix, np.eye(4), atol=1e-12)


def test_snap_is_idempotent():
    rng = np.random.default_rng(31)
    m = rng.standard_normal((6, 6))
    first = snap_to_involution(m)
    second = snap_to_involution(first.matrix)
    assert np.allclose(second.matrix, first.matrix, atol=1e-12)


def test_snap_rejects_nonfinite():
    with pytest.raises(NonFinite):
        snap_to_involution(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_analytic_gradient_matches_finite_differences():
    rng = np.random.default_rng(37)
    mu = 10.0
    for _ in range(10):
        n = int(rng.integers(3, 7))
        lp = rng.standard_normal((n, n))
        lp = (lp + lp.T) / 2.0
        point = rng.standard_normal((n, n))
        _, grad = _objective_and_gradient(point.ravel(), lp, mu, n)
        fd = central_fd_gradient(lambda p: penalized_objective(p, lp, mu), point, eps=1e-6)
        assert np.linalg.norm(grad - fd.ravel()) <= 1e-5 * max(1.0, np.linalg.norm(fd))


def test_optimize_p_step_strictly_improves_path_swap():
    # the contract pins this case: starting from swap(0,1) on the 3-path,
    # the commutator norm must drop strictly below its initial sqrt(6)
    lap = laplacian(path_graph(3))
    p0 = validate_involution(np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]))
    before = commutator_norm(lap, p0)
    assert before == pytest.approx(math.sqrt(6.0), abs=1e-12)
    refined = optimize_p_step(lap, p0)
    assert commutator_norm(lap, refined) < before - 1.0


def test_optimize_p_step_returns_p0_when_already_commuting():
    lap = laplacian(path_graph(3))
    reversal = validate_involution(np.fliplr(np.eye(3)))
    assert optimize_p_step(lap, reversal) is reversal


def test_optimize_p_step_never_increases_commutator():
    rng = np.random.default_rng(41)
    for _ in range(5):
        n = 6
        lp = rng.standard_normal((n, n))
        lp = (lp + lp.T) / 2.0
        order = rng.permutation(n)
        m = np.zeros((n, n))
        for a in range(0, n, 2):
            i, j = int(order[a]), int(order[a + 1])
            m[i, j] = m[j, i] = 1.0
        p0 = validate_involution(m)
        refined = optimize_p_step(lp, p0)
        assert commutator_norm(lp, refined) <= commutator_norm(lp, p0) + 1e-9


def test_optimize_p_step_shape_mismatch():
    p0 = validate_involution(np.eye(2))
    with pytest.raises(ValidationError):
        optimize_p_step(np.zeros((3, 3)), p0)


def test_alternate_exits_immediately_on_commuting_pair():
    lap = laplacian(path_graph(3))
    reversal = validate_involution(np.fliplr(np.eye(3)))
    result = alternate(lap, reversal)
    assert result.converged
    assert result.iterations == 0
    assert result.defect_trajectory == (0.0,)
    assert np.allclose(result.projected, lap, atol=1e-15)


def test_alternate_terminates_and_never_worsens():
    g = lollipop_graph()
    result = alternate(laplacian(g), fiedler_duality_operator(g))
    traj = result.defect_trajectory
    assert len(traj) == result.iterations + 1
    assert all(traj[i + 1] <= traj[i] + 1e-9 for i in range(len(traj) - 1))
    assert traj[-1] <= traj[0] + 1e-12
    cfg = AlternatingConfig()
    assert result.converged or result.iterations == cfg.max_outer_iterations
    if result.converged:
        assert traj[-1] < cfg.defect_tolerance or abs(traj[-1] - traj[-2]) < cfg.step_tolerance


def test_alternate_respects_iteration_cap():
    g = lollipop_graph()
    cfg = AlternatingConfig(max_outer_iterations=1)
    result = alternate(laplacian(g), fiedler_duality_operator(g), cfg)
    assert result.iterations <= 1
    if not result.converged:
        assert result.iterations == 1


def test_alternating_config_validation():
    with pytest.raises(ValidationError):
        AlternatingConfig(defect_tolerance=0.0)
    with pytest.raises(ValidationError):
        AlternatingConfig(max_outer_iterations=0)
    with pytest.raises(ValidationError):
        AlternatingConfig(penalty_weight=-1.0)


def test_learn_result_json_shape():
    g = path_graph(4)
    result = alternate(laplacian(g), fiedler_duality_operator(g))
    doc = json.loads(learn_result_to_json(result))
    assert set(doc) == {"operator", "trajectory", "converged", "iterations"}
    assert doc["trajectory"] == list(result.defect_trajectory)
    restored = operator_from_text("\n".join(doc["operator"]) + "\n")
    assert np.array_equal(restored.matrix, result.operator.matrix)
