"""States, general measurements, and single measurement events.

A measurement here is a finite family of operators {L_i} with
sum_i L_i^dag L_i = Id. Outcome i fires on a density operator rho with
probability Tr(L_i rho L_i^dag) / Tr(rho) and leaves the unnormalized
state L_i rho L_i^dag behind. A unitary is the special case of a
single-outcome measurement.

Run:  python3 demos/01_measurements_and_states.py
"""

import numpy as np

from meastree import (
    DensityOperator,
    HilbertSpec,
    Measurement,
    apply_kraus,
    basis_ket,
    haar_ket,
    measure_z,
    outcome_probability,
    partial_trace,
    projector,
    tensor_product,
)

rng = np.random.default_rng(7)

print("== a qubit and the computational-basis readout ==")
q = HilbertSpec.of([("q", 2)])
plus = (basis_ket(2, 0) + basis_ket(2, 1)) / np.sqrt(2)
rho = DensityOperator.of(projector(plus), q)
mz = measure_z()
print(f"outcome labels: {mz.labels}")
print(f"completeness defect: {mz.completeness_defect():.2e}")
for label in mz.labels:
    p = outcome_probability(mz.operator(label), rho)
    print(f"P({label} | plus state) = {p:.6f}")

print()
print("== unnormalized post-measurement states ==")
post = apply_kraus(mz.operator("0"), rho)
print(f"after outcome 0 the state has trace {post.trace():.6f} (the probability)")
gone = apply_kraus(mz.operator("1"), DensityOperator.of(projector(basis_ket(2, 0)), q))
print(f"outcome 1 on |0> annihilates the state: {gone}")

print()
print("== an unsharp (non-projective) measurement ==")
noisy = Measurement.of(
    {
        "mostly0": np.diag([np.sqrt(0.9), np.sqrt(0.2)]),
        "mostly1": np.diag([np.sqrt(0.1), np.sqrt(0.8)]),
    }
)
print(f"completeness defect: {noisy.completeness_defect():.2e}")
for label in noisy.labels:
    p = outcome_probability(noisy.operator(label), rho)
    print(f"P({label} | plus state) = {p:.6f}")

print()
print("== composite systems and the partial trace ==")
two = HilbertSpec.of([("a", 2), ("b", 2)])
bell = (tensor_product(basis_ket(2, 0), basis_ket(2, 0))
        + tensor_product(basis_ket(2, 1), basis_ket(2, 1))) / np.sqrt(2)
pair = DensityOperator.of(projector(bell), two)
left = partial_trace(pair, keep=["a"])
print("tracing out half of a Bell pair leaves the maximally mixed state:")
print(np.array_str(left.matrix.real, precision=3, suppress_small=True))

print()
print("== random pure states stay normalized ==")
norms = [float(np.linalg.norm(haar_ket(4, rng))) for _ in range(3)]
print(f"norms of three Haar-random kets: {[f'{n:.6f}' for n in norms]}")
print("done.")
