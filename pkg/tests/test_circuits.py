import numpy as np
import pytest

from meastree.circuits import (
    Circuit,
    Gate,
    InvalidCircuitError,
    Path,
    Selection,
    embed_principal_ket,
    enumerate_paths,
    flattened_gates,
    full_input,
    is_coherent,
    measurement_gate,
    principal_output,
    sample_run,
    selected_gate,
    simulate_path,
    unitary_gate,
    validate_circuit,
)
from meastree.demos import feedforward_x, measure_discard, teleportation
from meastree.linalg import (
    CNOT,
    HADAMARD,
    ID2,
    PAULI_X,
    PAULI_Z,
    DensityOperator,
    HilbertSpec,
    Ket,
    Measurement,
    basis_ket,
    haar_ket,
    measure_z,
    projector,
)

I2 = np.eye(2, dtype=complex)
P = [projector(basis_ket(2, 0)), projector(basis_ket(2, 1))]


def codes(c):
    return {v.code for v in validate_circuit(c)}


def two_wire_space():
    return HilbertSpec.of([("q0", 2), ("q1", 2)])


# Independent operator oracle for teleportation: explicit kron chains in
# the fixed wire order (q0, q1, q2), no library lifting involved.
def teleport_branch_operator(a: int, b: int) -> np.ndarray:
    h1 = np.kron(I2, np.kron(HADAMARD, I2))
    cn12 = np.kron(I2, CNOT)
    cn01 = np.kron(CNOT, I2)
    h0 = np.kron(HADAMARD, np.kron(I2, I2))
    pa0 = np.kron(P[a], np.kron(I2, I2))
    pb1 = np.kron(I2, np.kron(P[b], I2))
    xc = np.kron(np.eye(4), np.linalg.matrix_power(PAULI_X, b))
    zc = np.kron(np.eye(4), np.linalg.matrix_power(PAULI_Z, a))
    swap02 = np.zeros((8, 8), dtype=complex)
    for i in range(8):
        q0, q1, q2 = (i >> 2) & 1, (i >> 1) & 1, i & 1
        swap02[(q2 << 2) | (q1 << 1) | q0, i] = 1.0
    return swap02 @ zc @ xc @ pb1 @ pa0 @ h0 @ cn01 @ cn12 @ h1


def test_teleportation_validates_clean():
    assert validate_circuit(teleportation()) == []


def test_teleportation_paths_and_quarter_probabilities():
    c = teleportation()
    paths = enumerate_paths(c)
    assert len(paths) == 4
    assert {(p["mz0"], p["mz1"]) for p in paths} == {("0", "0"), ("0", "1"), ("1", "0"), ("1", "1")}
    rng = np.random.default_rng(21)
    for _ in range(10):
        rho = DensityOperator.of(projector(haar_ket(2, rng)), c.principal_spec)
        for p in paths:
            prob, _ = simulate_path(c, p, rho)
            assert prob == pytest.approx(0.25, abs=1e-9)


def test_teleportation_matches_hand_kron_oracle():
    c = teleportation()
    rng = np.random.default_rng(22)
    for p in enumerate_paths(c):
        a, b = int(p["mz0"]), int(p["mz1"])
        oracle_op = teleport_branch_operator(a, b)
        for _ in range(3):
            rho = DensityOperator.of(projector(haar_ket(2, rng)), c.principal_spec)
            sigma0 = full_input(c, rho)
            want = oracle_op @ sigma0 @ oracle_op.conj().T
            _, got = simulate_path(c, p, rho)
            assert np.max(np.abs(got - want)) <= 1e-12


def test_teleportation_principal_output_is_quarter_input():
    c = teleportation()
    rng = np.random.default_rng(23)
    rho = DensityOperator.of(projector(haar_ket(2, rng)), c.principal_spec)
    for p in enumerate_paths(c):
        out = principal_output(c, p, rho)
        assert np.allclose(out, rho.matrix / 4, atol=1e-10)


def test_full_input_and_embed_agree():
    c = teleportation()
    rng = np.random.default_rng(24)
    psi = haar_ket(2, rng)
    rho = DensityOperator.of(projector(psi), c.principal_spec)
    joint = embed_principal_ket(c, psi)
    assert np.allclose(full_input(c, rho), projector(joint), atol=1e-12)


def test_probabilities_sum_to_one():
    for make in (teleportation, measure_discard, feedforward_x):
        c = make()
        rng = np.random.default_rng(25)
        rho = DensityOperator.of(projector(haar_ket(c.principal_spec.dim, rng)), c.principal_spec)
        total = sum(simulate_path(c, p, rho)[0] for p in enumerate_paths(c))
        assert total == pytest.approx(1.0, abs=1e-9)


def test_zero_probability_path_has_zero_output():
    c = measure_discard()
    rho = DensityOperator.of(P[0], c.principal_spec)
    prob, sigma = simulate_path(c, Path({"mz": "1"}), rho)
    assert prob == 0.0
    assert np.max(np.abs(sigma)) == 0.0


def test_incoherent_path_rejected():
    c = feedforward_x()
    # read=0 selects the "keep" measurement, so "flip" is incoherent here
    bad = Path({"spread": "u", "read": "0", "corr": "flip"})
    assert not is_coherent(c, bad)
    rho = DensityOperator.of(np.eye(2) / 2, c.principal_spec)
    with pytest.raises(ValueError):
        simulate_path(c, bad, rho)


def test_path_mapping_behaves_like_a_dict():
    p = Path({"b": "1", "a": "0"})
    assert p == Path({"a": "0", "b": "1"})
    assert p == {"a": "0", "b": "1"}
    assert dict(p) == {"a": "0", "b": "1"}
    assert p.restrict({"a"}) == {"a": "0"}
    assert len({p, Path({"a": "0", "b": "1"})}) == 1


def test_selection_table_api():
    s = Selection([({"m": "0"}, 0), ({"m": "1"}, 1)])
    assert s.select({"m": "0"}) == 0
    assert s.select({"m": "nope"}) is None
    assert s.indices() == frozenset({0, 1})
    with pytest.raises(ValueError):
        Selection([({"m": "0"}, 0), ({"m": "0"}, 1)])
    assert Selection.constant(2).select({}) == 2


def test_gate_measurement_for():
    g = selected_gate(
        "g",
        ("q0",),
        ["src"],
        [Measurement.of({"a": ID2}), Measurement.of({"b": PAULI_X})],
        [({"src": "0"}, 0), ({"src": "1"}, 1)],
    )
    assert g.measurement_for({"src": "1"}).labels == ("b",)
    assert g.measurement_for({"src": "?"}) is None
    assert g.outcome_labels() == {"a", "b"}


# ----------------------------------------------------------- validation


def test_validate_unknown_wire():
    c = Circuit.build(
        two_wire_space(),
        ["q0", "q1"],
        [unitary_gate("g", ("q7",), HADAMARD)],
    )
    assert "UNKNOWN_WIRE" in codes(c)
    with pytest.raises(InvalidCircuitError):
        c.require_valid()


def test_validate_measurement_shape_and_completeness():
    c = Circuit.build(
        two_wire_space(),
        ["q0", "q1"],
        [unitary_gate("g", ("q0", "q1"), HADAMARD)],  # 2x2 op on a 4-dim gate
    )
    assert "MEASUREMENT_DIM" in codes(c)
    bad = Gate(
        gate_id="g",
        wires=("q0",),
        classical_sources=frozenset(),
        measurements=(Measurement({"0": P[0], "1": 0.5 * P[1]}),),
        selection=Selection.constant(0),
    )
    c2 = Circuit.build(two_wire_space(), ["q0", "q1"], [bad])
    assert "MEASUREMENT_COMPLETENESS" in codes(c2)


def test_validate_outcome_labels_disjoint_across_measurements():
    g = Gate(
        gate_id="g",
        wires=("q0",),
        classical_sources=frozenset({"src"}),
        measurements=(Measurement.of({"0": ID2}), Measurement.of({"0": PAULI_X})),
        selection=Selection([({"src": "0"}, 0), ({"src": "1"}, 1)]),
    )
    c = Circuit.build(
        two_wire_space(),
        ["q0", "q1"],
        [measurement_gate("src", ("q1",), measure_z()), g],
        gate_order=["src", "g"],
    )
    assert "DISJOINT_OUTCOMES" in codes(c)


def test_validate_sourceless_gate_needs_single_measurement():
    g = Gate(
        gate_id="g",
        wires=("q0",),
        classical_sources=frozenset(),
        measurements=(Measurement.of({"a": ID2}), Measurement.of({"b": PAULI_X})),
        selection=Selection.constant(0),
    )
    c = Circuit.build(two_wire_space(), ["q0", "q1"], [g])
    assert "SINGLETON_REQUIRED" in codes(c)


def test_validate_selection_keys_range_surjective():
    mz = measurement_gate("src", ("q1",), measure_z())
    g = Gate(
        gate_id="g",
        wires=("q0",),
        classical_sources=frozenset({"src"}),
        measurements=(Measurement.of({"a": ID2}), Measurement.of({"b": PAULI_X})),
        selection=Selection([({"wrong": "0"}, 0), ({"src": "1"}, 7)]),
    )
    c = Circuit.build(two_wire_space(), ["q0", "q1"], [mz, g], gate_order=["src", "g"])
    found = codes(c)
    assert "SELECTION_KEYS" in found
    assert "SELECTION_RANGE" in found
    assert "SELECTION_SURJECTIVE" in found  # measurement 1 never picked


def test_validate_selection_totality():
    # structurally sound selection that misses the src=0 assignment
    mz = measurement_gate("src", ("q1",), measure_z())
    g = Gate(
        gate_id="g",
        wires=("q0",),
        classical_sources=frozenset({"src"}),
        measurements=(Measurement.of({"a": ID2}), Measurement.of({"b": PAULI_X})),
        selection=Selection([({"src": "1"}, 1), ({"src": "oops"}, 0)]),
    )
    c = Circuit.build(two_wire_space(), ["q0", "q1"], [mz, g], gate_order=["src", "g"])
    assert "SELECTION_TOTALITY" in codes(c)


def test_validate_schedule_violations():
    mz = measurement_gate("src", ("q1",), measure_z())
    g = selected_gate(
        "g",
        ("q0",),
        ["src"],
        [Measurement.of({"a": ID2}), Measurement.of({"b": PAULI_X})],
        [({"src": "0"}, 0), ({"src": "1"}, 1)],
    )
    base = dict(space=two_wire_space(), principal=["q0", "q1"], gates=[mz, g])
    c = Circuit.build(base["space"], base["principal"], base["gates"], gate_order=["src", "g"], schedule=[["g"], ["src"]])
    assert "SCHEDULE_PREREQ" in codes(c)
    c = Circuit.build(base["space"], base["principal"], base["gates"], gate_order=["src", "g"], schedule=[["src", "g"]])
    assert "LAYER_CONFLICT" in codes(c)
    c = Circuit.build(base["space"], base["principal"], base["gates"], gate_order=["src", "g"], schedule=[["src"]])
    assert "SCHEDULE_COVER" in codes(c)
    c = Circuit.build(base["space"], base["principal"], base["gates"], gate_order=["src", "g"], schedule=[["src"], ["g"], ["src"]])
    assert "SCHEDULE_DISJOINT" in codes(c)


def test_validate_quantum_prerequisite_between_layers():
    # two gates on the same wire scheduled in the wrong layer order
    a = unitary_gate("a", ("q0",), HADAMARD)
    b = unitary_gate("b", ("q0",), PAULI_X)
    c = Circuit.build(
        two_wire_space(),
        ["q0", "q1"],
        [a, b],
        gate_order=["a", "b"],
        schedule=[["b"], ["a"]],
    )
    assert "SCHEDULE_PREREQ" in codes(c)
    # same order but disjoint wires is fine
    b2 = unitary_gate("b", ("q1",), PAULI_X)
    c2 = Circuit.build(
        two_wire_space(),
        ["q0", "q1"],
        [a, b2],
        gate_order=["a", "b"],
        schedule=[["b"], ["a"]],
    )
    assert validate_circuit(c2) == []


def test_validate_ancilla_init():
    space = two_wire_space()
    anc = HilbertSpec.of([("q1", 2)])
    c = Circuit.build(
        space,
        ["q0"],
        [unitary_gate("g", ("q0",), HADAMARD)],
        ancilla_init=Ket.of([0.5, 0.5], anc),
    )
    assert "ANCILLA_INIT" in codes(c)


def test_flattened_gates_order():
    c = teleportation()
    seq = flattened_gates(c)
    assert seq.index("mz0") < seq.index("corr_z")
    assert seq.index("mz1") < seq.index("corr_x")
    assert set(seq) == set(c.gates)


def test_unitary_circuit_has_single_path():
    c = Circuit.build(
        two_wire_space(),
        ["q0", "q1"],
        [unitary_gate("a", ("q0",), HADAMARD), unitary_gate("b", ("q1",), PAULI_X)],
        gate_order=["a", "b"],
    )
    paths = enumerate_paths(c)
    assert len(paths) == 1
    rho = DensityOperator.of(np.eye(4) / 4, c.principal_spec)
    prob, _ = simulate_path(c, paths[0], rho)
    assert prob == pytest.approx(1.0)


# ------------------------------------------------------------- sampling


def test_sample_run_deterministic_circuit():
    c = Circuit.build(
        two_wire_space(),
        ["q0", "q1"],
        [unitary_gate("a", ("q0",), HADAMARD)],
    )
    rho = DensityOperator.of(np.eye(4) / 4, c.principal_spec)
    path, _ = sample_run(c, rho, 0)
    assert dict(path) == {"a": "u"}


def test_sample_run_z_measurement_frequencies():
    c = measure_discard()
    plus = (basis_ket(2, 0) + basis_ket(2, 1)) / np.sqrt(2)
    rho = DensityOperator.of(projector(plus), c.principal_spec)
    rng = np.random.default_rng(1234)
    n = 10_000
    zeros = sum(1 for _ in range(n) if sample_run(c, rho, rng)[0]["mz"] == "0")
    assert abs(zeros / n - 0.5) <= 0.02


def test_sample_run_matches_path_probabilities_chi_square():
    c = teleportation()
    rng = np.random.default_rng(555)
    rho = DensityOperator.of(projector(haar_ket(2, rng)), c.principal_spec)
    n = 2000
    counts: dict = {}
    for _ in range(n):
        path, _ = sample_run(c, rho, rng)
        key = (path["mz0"], path["mz1"])
        counts[key] = counts.get(key, 0) + 1
    assert sum(counts.values()) == n
    expected = n / 4
    chi2 = sum((obs - expected) ** 2 / expected for obs in counts.values())
    # 3 degrees of freedom, alpha = 0.001
    assert chi2 < 16.27
