"""Placing sparse sites one level at a time, with certificates.

For v_j = j^(-1/2) the squares are not summable, so the spectral measure is
singular on (-2, 2); yet with sites spread out fast enough the kernel still
has the sine-kernel limit.  generate_spec places each site only after the
operator built so far has settled on a grid of x and (a, b).
"""
from sparsejacobi.jacobi import Rule
from sparsejacobi.sparsifier import SparsifierConfig, classify_measure, generate_spec, replay_certificate

spec, certs = generate_spec(Rule.power(0.5), 3, SparsifierConfig())
print("sites", spec.sites, "couplings", [round(v, 4) for v in spec.couplings])
print("measure:", classify_measure(spec))

# %% what each certificate records
for c in certs:
    print(f"level {c.level}: N={c.N_hat:5d} x in {c.interval}, |a|,|b| <= {max(c.level, 1)}, "
          f"kernel err {c.max_kernel_error:.3f}, ratio err {c.max_ratio_error:.3f} (tol {c.tolerance:.2f})")

# %% replaying later: the level-l operator keeps settling, but the next bump
# lands at N_hat and moves the full operator by roughly its coupling
for c in certs:
    own = replay_certificate(c, spec, n=2 * c.N_hat).ratio_error
    full = replay_certificate(c, spec, n=2 * c.N_hat, level="full").ratio_error
    print(f"level {c.level} at 2N: own operator {own:.3f}, with next bump {full:.3f}")
