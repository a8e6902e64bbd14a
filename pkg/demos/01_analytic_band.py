"""Why anisotropic wave bands are interesting: small eigenvalues at high
mode numbers.

The periodic anisotropic wave operator with constant coefficients has the
Fourier modes exp(i(mx+ny)) as eigenfunctions with eigenvalues
(b1*m + b2*n)^2.  Whenever m/n is close to -b2/b1 the eigenvalue is tiny
no matter how large m and n are, so a frequency band [0, 0.2] mixes very
low and very high mode numbers.
"""

from anisodg import FieldDirection, exact_spectrum

b = FieldDirection(1.165939761, 1.0)
spec = exact_spectrum(b, m_max=20, n_max=20)

print(f"direction b = ({b.b1}, {b.b2})")
print(f"omega^2 of the (4,-5) mode: {spec.omega2(4, -5):.8f}")

band = spec.band_modes(0.2)
print(f"\ncanonical modes with omega^2 <= 0.2 inside |m|,|n| <= 20 "
      f"({len(band)} modes, {spec.count_with_multiplicity(0.2)} eigenvalues "
      f"with multiplicity):")
for m, n in band:
    print(f"  ({m:3d},{n:4d})  omega^2 = {spec.omega2(m, n):.6e}   "
          f"max mode number {max(abs(m), abs(n))}")

ratios = [-m / n for m, n in band if n]
print(f"\nband modes satisfy m/n close to -b2/b1, i.e. -m/n close to "
      f"b2/b1 = {b.b2 / b.b1:.6f}")
print(f"observed -m/n range: [{min(ratios):.4f}, {max(ratios):.4f}]")
