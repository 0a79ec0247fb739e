"""Branch operators that are scaled isometries, and growing spaces.

Two capabilities round out the analysis toolkit. First, when every
branch computes the same operator up to scale, check_isometry_scaling
recovers the scale t with t*U an isometry (the two-outcome fair-coin
circuit is the canonical example: both branches compute I/sqrt(2), and
t = sqrt(2)). Second, the output principal space may be larger than
the input principal space, in which case the witness operator is an
isometry into the bigger space rather than a unitary; factor_branch
reports kind "isometry-only" and constant_factor extracts tensor
factors of explicitly given maps.

Run:  python3 demos/05_isometries_and_scaling.py
"""

import numpy as np

from meastree import (
    check_isometry_scaling,
    constant_factor,
    factor_branch,
    reduce_circuit,
    route_label,
)
from meastree.demos import code_embedding, coin

print("== the fair coin: both branches compute I/sqrt(2) ==")
t, _ = reduce_circuit(coin())
for branch in t.branches():
    fact = factor_branch(t, branch)
    weight = float(np.vdot(fact.ancilla_vector, fact.ancilla_vector).real)
    print(f"branch {route_label(branch)}: |b|^2 = {weight:.6f}")
report = check_isometry_scaling(t, np.eye(2) / np.sqrt(2))
print(
    f"supplied operator I/sqrt(2): t_scale = {report.t_scale:.9f} "
    f"(sqrt(2) = {np.sqrt(2):.9f}), verdict {report.verdict}"
)
print("the branch weights sum to 1, so sqrt(1/2 + 1/2) rescales I/sqrt(2) to I.")

print()
print("== an embedding: the output principal space grows ==")
te, _ = reduce_circuit(code_embedding())
(branch,) = te.branches()
fact = factor_branch(te, branch)
print(f"witness kind: {fact.kind}")
print(f"witness operator shape: {fact.principal_operator.shape} (qubit into two qubits)")
print("the witness maps |0> -> |00> and |1> -> |11>:")
print(np.array_str(fact.principal_operator.real, precision=3, suppress_small=True))
emb = check_isometry_scaling(te, fact.principal_operator)
print(f"scaling check: t_scale = {emb.t_scale:.6f}, verdict {emb.verdict}")

print()
print("== extracting a tensor factor from an explicit map ==")
rng = np.random.default_rng(5)
base = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
planted = np.array([0.5, -0.25j, 0.8])
joint = np.kron(base, planted[:, None])
got = constant_factor(joint, base)
print(f"planted factor:   {np.array_str(planted, precision=3)}")
print(f"recovered factor: {np.array_str(got, precision=3)}")

entangled = np.zeros((6, 3), dtype=complex)
for j in range(3):
    c_j = np.zeros(2, dtype=complex)
    c_j[j % 2] = 1.0
    entangled[:, j] = np.kron(base[:, j], c_j)
print(f"a column-dependent factor is rejected: {constant_factor(entangled, base)}")
print("done.")
