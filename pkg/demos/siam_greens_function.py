"""Impurity Green's function of the single-impurity Anderson chain.

The Anderson model maps onto an open spin chain with the two impurity
orbitals at the center, no hopping across the central bond, and the Hubbard
U as the only left-right coupling.  The fermionic annihilator f carries a
Jordan-Wigner string, so instead of evolving f directly we evolve the two
hermitian Majorana combinations w and w' (string times a single Pauli
factor) in real arithmetic, and assemble

    G(t) = -i <{f^dag, f(t)}>_beta,   f = (w - i w')/2,

from four anticommutator series.  At U=0 the anticommutator is a c-number
and G(t) has a closed form, reproduced below to ~1e-6; the interacting case
is checked against dense diagonalization.

Run:  python demos/siam_greens_function.py     (a few minutes)
"""

import numpy as np
import scipy.linalg

from osmps import (
    EvolutionConfig,
    SiamChain,
    build_chi,
    build_commutator_generator,
    build_schedule,
    evolve,
    identity_state,
    make_basis,
    siam_terms,
)
from osmps.evolve import Snapshot
from osmps.models import MajoranaPair, majorana_states, product_mult_maps
from osmps.observables import greens_function
from osmps.oracle import dense_hamiltonian, dense_product

n, beta, t_max, step = 8, 2.0, 4.0, 0.005
times = [0.25 * k for k in range(int(t_max / 0.25) + 1)]
real_basis = make_basis(2, "real")
hermitian_basis = make_basis(2, "hermitian")

model = SiamChain.uniform(n, 0.5, u=1.0, eps_f=-0.5)  # particle-hole symmetric
terms = siam_terms(model)
pair = MajoranaPair(site=model.up_impurity)
w, wp = majorana_states(pair, n, hermitian_basis)
print(f"SIAM chain n={n}, U={model.u}, eps_f={model.eps_f}, impurity at site "
      f"{model.up_impurity}; Majorana states real: {w.is_real and wp.is_real}")

gen = build_commutator_generator(terms, hermitian_basis)
sched = build_schedule(gen, step, order=2, direction="real")
cfg = EvolutionConfig(max_rank=None, weight_tol=1e-12, step=step,
                      extent=t_max, snapshot_points=times)
w_snaps, _ = evolve(w, sched, cfg)
wp_snaps, _ = evolve(wp, sched, cfg)

chi = build_chi(terms, real_basis)
tsched = build_schedule(chi, step, order=2, direction="imaginary")
tcfg = EvolutionConfig(max_rank=None, weight_tol=1e-12, step=step,
                       extent=beta, snapshot_points=[beta])
rho_snaps, _ = evolve(identity_state(n, real_basis), tsched, tcfg)

series = greens_function(rho_snaps[0], w_snaps, wp_snaps,
                         product_mult_maps(pair.w_factors(n), n, hermitian_basis),
                         product_mult_maps(pair.wp_factors(n), n, hermitian_basis))

# dense reference
h = dense_hamiltonian(terms)
wd = dense_product(pair.w_factors(n), n)
wpd = dense_product(pair.wp_factors(n), n)
f = (wd - 1j * wpd) / 2
fd = (wd + 1j * wpd) / 2
ev, v = np.linalg.eigh(h)
rho = (v * np.exp(-beta * (ev - ev.min()))) @ v.conj().T
z = np.trace(rho).real

print(f"\nG(t) at beta = {beta}   (G(0) must be -i)")
print("   t     Im G(t)     exact      |dev|")
worst = 0.0
for k, t in enumerate(times):
    u = (v * np.exp(1j * t * ev)) @ v.conj().T
    ft = u @ f @ u.conj().T
    exact = -1j * np.trace(rho @ (fd @ ft + ft @ fd)) / z
    dev = abs(series.values[k] - exact)
    worst = max(worst, dev)
    if k % 4 == 0:
        print(f"{t:5.2f}  {series.values[k].imag:10.6f}  {exact.imag:10.6f}  {dev:.2e}")
print(f"max deviation over the full series: {worst:.2e}")

# U = 0: an exact single-particle formula, beta-independent
model0 = SiamChain.uniform(n, 0.5, u=0.0, eps_f=-0.5)
gen0 = build_commutator_generator(siam_terms(model0), hermitian_basis)
sched0 = build_schedule(gen0, step, order=2, direction="real")
w_snaps0, _ = evolve(w, sched0, cfg)
wp_snaps0, _ = evolve(wp, sched0, cfg)
series0 = greens_function(Snapshot(0.0, "beta", identity_state(n, real_basis), 0.0),
                          w_snaps0, wp_snaps0,
                          product_mult_maps(pair.w_factors(n), n, hermitian_basis),
                          product_mult_maps(pair.wp_factors(n), n, hermitian_basis))
k_half = n // 2
h1 = np.zeros((k_half, k_half))
for i in range(k_half - 1):
    h1[i, i + 1] = h1[i + 1, i] = 0.5
h1[k_half - 1, k_half - 1] = -0.5
worst0 = max(abs(series0.values[k] - (-1j * scipy.linalg.expm(-1j * t * h1)[-1, -1]))
             for k, t in enumerate(times))
print(f"U=0 check against the free-fermion closed form: max |dev| = {worst0:.2e}")
