"""Named example circuits used in the documentation and the test suite.

Each builder returns a fully validated Circuit. The teleportation
circuit is the flagship: four classically-corrected branches that each
apply the identity to the travelling qubit with probability exactly 1/4
regardless of the input.
"""

from __future__ import annotations

import numpy as np

from .circuits import Circuit, Gate, Selection, measurement_gate, unitary_gate
from .linalg import (
    CNOT,
    HADAMARD,
    ID2,
    PAULI_X,
    PAULI_Z,
    SWAP,
    HilbertSpec,
    Ket,
    Measurement,
    basis_ket,
    measure_z,
)

__all__ = [
    "teleportation",
    "measure_discard",
    "feedforward_x",
    "coin",
    "code_embedding",
    "DEMOS",
]


def teleportation() -> Circuit:
    """Qubit teleportation with classical corrections.

    Wire q0 carries the input state, q1 and q2 start in |00> and get
    entangled into a Bell pair. After Alice's Bell measurement the
    outcomes steer X and Z corrections on q2, and a final swap brings
    the recovered state back onto the principal wire. Every one of the
    four branches computes the identity with probability 1/4.
    """
    space = HilbertSpec.of([("q0", 2), ("q1", 2), ("q2", 2)])
    anc = HilbertSpec.of([("q1", 2), ("q2", 2)])
    gates = [
        unitary_gate("bell_h", ("q1",), HADAMARD),
        unitary_gate("bell_cnot", ("q1", "q2"), CNOT),
        unitary_gate("alice_cnot", ("q0", "q1"), CNOT),
        unitary_gate("alice_h", ("q0",), HADAMARD),
        measurement_gate("mz0", ("q0",), measure_z()),
        measurement_gate("mz1", ("q1",), measure_z()),
        Gate(
            gate_id="corr_x",
            wires=("q2",),
            classical_sources=frozenset({"mz1"}),
            measurements=(
                Measurement.of({"i": ID2}),
                Measurement.of({"x": PAULI_X}),
            ),
            selection=Selection([({"mz1": "0"}, 0), ({"mz1": "1"}, 1)]),
        ),
        Gate(
            gate_id="corr_z",
            wires=("q2",),
            classical_sources=frozenset({"mz0"}),
            measurements=(
                Measurement.of({"i": ID2}),
                Measurement.of({"z": PAULI_Z}),
            ),
            selection=Selection([({"mz0": "0"}, 0), ({"mz0": "1"}, 1)]),
        ),
        unitary_gate("unswap", ("q0", "q2"), SWAP),
    ]
    return Circuit.build(
        space,
        ["q0"],
        gates,
        gate_order=[
            "bell_h",
            "bell_cnot",
            "alice_cnot",
            "alice_h",
            "mz0",
            "mz1",
            "corr_x",
            "corr_z",
            "unswap",
        ],
        schedule=[
            ["bell_h"],
            ["bell_cnot"],
            ["alice_cnot"],
            ["alice_h"],
            ["mz0", "mz1"],
            ["corr_x"],
            ["corr_z"],
            ["unswap"],
        ],
        ancilla_init=Ket.of(basis_ket(4, 0), anc),
    )


def measure_discard() -> Circuit:
    """A bare Z measurement on the principal wire and nothing else.

    The branch probabilities are the diagonal entries of the input, so
    they depend on the input as strongly as possible: the textbook
    counterexample to input independence.
    """
    space = HilbertSpec.of([("q", 2)])
    return Circuit.build(
        space,
        ["q"],
        [measurement_gate("mz", ("q",), measure_z())],
        gate_order=["mz"],
    )


def feedforward_x() -> Circuit:
    """Measure a coin ancilla and flip the principal qubit on tails.

    The two branches compute different operators (identity and X), so
    individually each is input independent, yet no single operator is
    computed by the circuit as a whole.
    """
    space = HilbertSpec.of([("q", 2), ("m", 2)])
    anc = HilbertSpec.of([("m", 2)])
    gates = [
        unitary_gate("spread", ("m",), HADAMARD),
        measurement_gate("read", ("m",), measure_z()),
        Gate(
            gate_id="corr",
            wires=("q",),
            classical_sources=frozenset({"read"}),
            measurements=(
                Measurement.of({"keep": ID2}),
                Measurement.of({"flip": PAULI_X}),
            ),
            selection=Selection([({"read": "0"}, 0), ({"read": "1"}, 1)]),
        ),
    ]
    return Circuit.build(
        space,
        ["q"],
        gates,
        gate_order=["spread", "read", "corr"],
        ancilla_init=Ket.of(basis_ket(2, 0), anc),
    )


def coin() -> Circuit:
    """A fair coin realized as two proportional-to-identity outcomes.

    Both outcomes carry the operator I/sqrt(2): each branch computes the
    identity with probability 1/2, and the supplied operator I/sqrt(2)
    needs the scale sqrt(2) to become unitary.
    """
    space = HilbertSpec.of([("q", 2)])
    half = ID2 / np.sqrt(2)
    flip = Measurement.of({"heads": half, "tails": half})
    return Circuit.build(
        space,
        ["q"],
        [measurement_gate("flip", ("q",), flip)],
        gate_order=["flip"],
    )


def code_embedding() -> Circuit:
    """Encode one qubit into a two-qubit repetition code with a CNOT.

    The check wire starts as an ancilla in |0> but belongs to the output
    principal space, so the single branch computes the non-square
    isometry |0> -> |00>, |1> -> |11>.
    """
    space = HilbertSpec.of([("p", 2), ("c", 2)])
    anc = HilbertSpec.of([("c", 2)])
    return Circuit.build(
        space,
        ["p"],
        [unitary_gate("encode", ("p", "c"), CNOT)],
        gate_order=["encode"],
        ancilla_init=Ket.of(basis_ket(2, 0), anc),
        output_principal=["p", "c"],
    )


DEMOS = {
    "teleportation": teleportation,
    "measure_discard": measure_discard,
    "feedforward_x": feedforward_x,
    "coin": coin,
    "code_embedding": code_embedding,
}
