"""Circuits with mid-circuit measurement and classical feedforward.

A circuit is a set of wires (principal input wires plus initialized
ancilla wires), gates carrying one or more measurements, a total gate
order, and a layered schedule. A gate with classical sources selects
which of its measurements to apply from earlier outcomes. A path
assigns one outcome to every gate; each path has a probability and an
unnormalized output state.

Run:  python3 demos/02_circuits_paths_simulation.py
"""

import numpy as np

from meastree import (
    DensityOperator,
    enumerate_paths,
    haar_ket,
    principal_output,
    projector,
    sample_run,
    simulate_path,
    validate_circuit,
)
from meastree.demos import feedforward_x, teleportation

rng = np.random.default_rng(11)

print("== the teleportation circuit ==")
c = teleportation()
print(f"wires: {list(c.space.wires)} (principal: {list(c.principal_wires)})")
print(f"gates in order: {list(c.gate_order)}")
print(f"schedule layers: {[list(layer) for layer in c.schedule]}")
print(f"violations: {validate_circuit(c)}")

print()
print("== its four coherent paths ==")
psi = haar_ket(2, rng)
rho = DensityOperator.of(projector(psi), c.principal_spec)
for path in enumerate_paths(c):
    prob, _ = simulate_path(c, path, rho)
    out = principal_output(c, path, rho)
    fidelity = float(np.vdot(psi, (out / prob) @ psi).real)
    print(
        f"mz0={path['mz0']} mz1={path['mz1']}: probability {prob:.6f}, "
        f"renormalized output fidelity with the input {fidelity:.9f}"
    )
print("every path teleports the state and fires with probability 1/4.")

print()
print("== classical feedforward in the small ==")
f = feedforward_x()
for path in enumerate_paths(f):
    prob, _ = simulate_path(f, path, DensityOperator.of(np.eye(2) / 2, f.principal_spec))
    chosen = "identity" if path["corr"] == "keep" else "bit flip"
    print(f"read={path['read']} selects the {chosen} correction (probability {prob:.3f})")

print()
print("== sampling runs ==")
counts: dict = {}
for _ in range(4000):
    path, _ = sample_run(c, rho, rng)
    key = (path["mz0"], path["mz1"])
    counts[key] = counts.get(key, 0) + 1
for key in sorted(counts):
    print(f"outcomes {key}: {counts[key] / 4000:.4f} of runs (expect 0.25)")
print("done.")
