"""The three effective equilibrium descriptions of a small dense system,
their entropy hierarchy, and a quasi-static path whose matching inverse
temperature diverges.

Pinching (all conserved quantities) <= constrained max-entropy (a chosen
set) <= thermal (energy only), in entropy; the gap to the pinched state is
the information the coarser description throws away.
"""

import numpy as np

import gge_thermo as gt

rng = np.random.Generator(np.random.PCG64(11))
d = 6
z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
h = 0.5 * (z + z.conj().T)
w = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
rho = w @ w.conj().T + 0.1 * np.eye(d)
rho /= np.trace(rho).real

pinched = gt.ta_state(rho, h)
thermal, beta = gt.gibbs_state_dense(rho, h)
_, vecs = np.linalg.eigh(h)
conserved = gt.ConservedSet.from_state(rho, [(vecs * rng.normal(size=d)) @ vecs.conj().T])
constrained, dual = gt.gge_state_dense(rho, h, conserved)

print(f"dimension {d}, one conserved quantity besides the energy")
print(f"S(state)        = {gt.vn_entropy(rho):.6f}")
print(f"S(pinched)      = {gt.vn_entropy(pinched):.6f}")
print(f"S(constrained)  = {gt.vn_entropy(constrained):.6f}   (beta = {dual.beta:.4f}, "
      f"lambda = {dual.lambdas[0]:.4f})")
print(f"S(thermal)      = {gt.vn_entropy(thermal):.6f}   (beta = {beta:.4f})")
print(f"information gap S(constrained) - S(pinched) = "
      f"{gt.kl_gap(rho, h, conserved):.6f}")

print()
print("shrinking a two-level splitting at fixed energy: beta must diverge")
e_level, beta0 = 1.0, 0.8
weights = np.exp(-beta0 * np.array([0.0, e_level]))
weights /= weights.sum()
state = np.diag(weights).astype(complex)
print("   u     recovered beta   beta0/(1-u)")
for u in (0.0, 0.3, 0.6, 0.9, 0.99):
    h_u = np.diag([0.0, e_level * (1.0 - u)]).astype(complex)
    state, beta_u = gt.gibbs_state_dense(state, h_u)
    print(f"{u:5.2f}  {beta_u:14.4f}  {beta0 / (1.0 - u):12.4f}")
print("the state never changes, yet its thermal label blows up near u = 1")
