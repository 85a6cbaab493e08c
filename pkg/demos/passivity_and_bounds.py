"""Passivity and the majorization ceiling: what bounds work extraction, and
how mode-sorted Gaussian states needn't be passive.

A three-fermion state with mode populations already sorted against the mode
energies is optimal for quadratic protocols, yet its 8-dimensional density
matrix is not passive: a (non-quadratic) unitary could still extract work.
"""

import numpy as np

import gge_thermo as gt

eps = [1.0, 2.0, 2.5]
pops = [0.4, 0.3, 0.1]
ham = gt.build_chain(3, eps, 0.0)
gamma = np.diag(pops).astype(complex)

print("three modes, energies", eps, "and populations", pops)
print(f"quadratic-protocol ceiling for this state: W* = "
      f"{gt.optimal_work_bound(gamma, ham):.6f}  (already sorted: nothing to gain)")

rho = gt.gaussian_to_dense(gamma)
hd = gt.quadratic_to_dense(ham.c)
print(f"passive as an 8-dim state? {gt.is_passive(rho, hd)}")
rearranged = gt.passive_rearrangement(rho, hd)
extractable = np.trace(hd @ rho).real - np.trace(hd @ rearranged).real
print(f"a general unitary could still extract {extractable:.6f} by reordering the")
print("8 many-body levels; mode sorting and level sorting are different things")

print()
print("a swapped two-mode state and its approach to the ceiling:")
ham2 = gt.build_chain(2, [1.0, 2.0], 0.0)
gamma2 = np.diag([0.1, 0.9]).astype(complex)
bound = gt.optimal_work_bound(gamma2, ham2)
print(f"W* = {bound:.6f}")
for n_quenches in (8, 32, 128, 512):
    rec = gt.optimal_gge_protocol(gamma2, ham2, n_quenches, keep_states=False)
    print(f"  N = {n_quenches:4d}:  W = {rec.work:.6f}  ({rec.work / bound:.2%} of the ceiling)")
