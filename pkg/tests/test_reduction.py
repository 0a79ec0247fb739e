import numpy as np
import pytest

from meastree.circuits import (
    Circuit,
    enumerate_paths,
    measurement_gate,
    principal_output,
    simulate_path,
    unitary_gate,
)
from meastree.demos import feedforward_x, teleportation
from meastree.linalg import (
    DensityOperator,
    HilbertSpec,
    basis_ket,
    haar_ket,
    measure_z,
    projector,
)
from meastree.rand import random_circuit, random_density
from meastree.reduction import Bijection, linearize, reduce_circuit, tree_from_linear
from meastree.trees import branch_operator, run_tree, validate_tree


def two_qubit_parallel_z():
    space = HilbertSpec.of([("q0", 2), ("q1", 2)])
    return Circuit.build(
        space,
        ["q0", "q1"],
        [
            measurement_gate("m0", ("q0",), measure_z()),
            measurement_gate("m1", ("q1",), measure_z()),
        ],
        gate_order=["m0", "m1"],
        schedule=[["m0", "m1"]],
    )


def test_parallel_z_layer_merges_with_joined_labels():
    c = two_qubit_parallel_z()
    lin, bij = linearize(c)
    assert len(lin.schedule) == 1
    (merged_id,) = lin.schedule[0]
    g = lin.gates[merged_id]
    (m,) = g.measurements
    assert set(m.labels) == {"0|0", "0|1", "1|0", "1|1"}
    p0 = projector(basis_ket(2, 0))
    p1 = projector(basis_ket(2, 1))
    assert np.allclose(m.operator("0|1"), np.kron(p0, p1))
    assert np.allclose(m.operator("1|0"), np.kron(p1, p0))
    # bijection maps the original two-entry path to the merged single entry
    for path in enumerate_paths(c):
        merged = bij.forward[path]
        assert merged[merged_id] == f"{path['m0']}|{path['m1']}"
        assert bij.backward[merged] == path


def test_linearize_preserves_probability_and_output():
    rng = np.random.default_rng(41)
    for _ in range(10):
        c = random_circuit(rng, max_layers=3)
        lin, bij = linearize(c)
        rho = random_density(c.principal_spec, rng)
        for path in enumerate_paths(c):
            p_old, s_old = simulate_path(c, path, rho)
            p_new, s_new = simulate_path(lin, bij.forward[path], rho)
            assert p_new == pytest.approx(p_old, abs=1e-12)
            assert np.max(np.abs(s_new - s_old)) <= 1e-12


def test_linearize_is_identity_shaped_on_singleton_layers():
    space = HilbertSpec.of([("q", 2)])
    c = Circuit.build(
        space,
        ["q"],
        [measurement_gate("m", ("q",), measure_z())],
    )
    lin, bij = linearize(c)
    assert len(lin.schedule) == len(c.schedule)
    for path in enumerate_paths(c):
        assert set(bij.forward[path].values()) == set(path.values())


def test_tree_from_linear_rejects_multi_gate_layers():
    c = two_qubit_parallel_z()
    with pytest.raises(ValueError):
        tree_from_linear(c)


def test_reduced_tree_shape_matches_paths_and_layers():
    c = teleportation()
    t, bij = reduce_circuit(c)
    assert validate_tree(t) == []
    branches = t.branches()
    paths = enumerate_paths(c)
    assert len(branches) == len(paths)
    # teleportation has 7 layers after merging the parallel measurements
    assert all(len(b) == len(t.branches()[0]) for b in branches)
    assert set(bij.forward) == set(paths)
    assert set(bij.forward[p] for p in paths) == set(branches)
    for p in paths:
        assert bij.backward[bij.forward[p]] == p


def test_reduction_preserves_dynamics_on_teleportation():
    c = teleportation()
    t, bij = reduce_circuit(c)
    rng = np.random.default_rng(42)
    rho = DensityOperator.of(projector(haar_ket(2, rng)), c.principal_spec)
    full_rho = DensityOperator.of(
        np.kron(rho.matrix, projector(c.ancilla_init.vector)), t.space
    )
    tree_out = run_tree(t, full_rho)
    for path in enumerate_paths(c):
        p_circ, s_circ = simulate_path(c, path, rho)
        p_tree, s_tree = tree_out[bij.forward[path]]
        assert p_tree == pytest.approx(p_circ, abs=1e-12)
        assert np.max(np.abs(s_tree - s_circ)) <= 1e-12


def test_reduction_preserves_dynamics_on_random_circuits():
    rng = np.random.default_rng(43)
    for _ in range(8):
        c = random_circuit(
            rng,
            require_multigate_layer=True,
            require_classical_channel=True,
            max_paths=48,
        )
        t, bij = reduce_circuit(c)
        assert validate_tree(t) == []
        rho = random_density(c.principal_spec, rng)
        if c.ancilla_spec.dim > 1:
            full = np.kron(rho.matrix, projector(c.ancilla_init.vector))
        else:
            full = rho.matrix
        tree_out = run_tree(t, DensityOperator.of(full, t.space))
        for path in enumerate_paths(c):
            p_circ, s_circ = simulate_path(c, path, rho)
            p_tree, s_tree = tree_out[bij.forward[path]]
            assert p_tree == pytest.approx(p_circ, abs=1e-10)
            assert np.max(np.abs(s_tree - s_circ)) <= 1e-10


def test_reduced_tree_carries_roles_from_circuit():
    c = teleportation()
    t, _ = reduce_circuit(c)
    assert t.has_roles()
    assert t.principal_wires == ("q0",)
    # the final swap returns the travelling state to the input wire
    assert t.output_principal == ("q0",)
    assert np.allclose(t.ancilla_init.vector, c.ancilla_init.vector)


def test_branch_operators_partition_feedforward_corrections():
    # the feedforward circuit's two branches apply different corrections,
    # so their composed operators must differ
    c = feedforward_x()
    t, bij = reduce_circuit(c)
    branches = t.branches()
    assert len(branches) == 2
    ops = [branch_operator(t, b) for b in branches]
    assert not np.allclose(ops[0], ops[1])


def test_bijection_from_pairs_round_trip():
    pairs = [(1, "a"), (2, "b")]
    b = Bijection.from_pairs(pairs)
    assert b.forward[1] == "a" and b.backward["b"] == 2
    with pytest.raises(ValueError):
        Bijection.from_pairs([(1, "a"), (1, "b")])


def test_completeness_survives_reduction():
    rng = np.random.default_rng(44)
    for _ in range(5):
        c = random_circuit(rng, max_layers=3)
        t, _ = reduce_circuit(c)
        for key, node in t.nodes.items():
            if node.is_leaf:
                continue
            assert node.measurement.completeness_defect() <= 1e-9
