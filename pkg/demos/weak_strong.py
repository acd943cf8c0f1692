"""sin(jx) on [0, pi]: constant L^2 norm, shrinking SD^2 norm.

The SD^2 norm only sees averages against fixed bumps, so fast oscillation
is invisible to it.  The first doubling is the exception: at j = 2 the
large cubes around 0 and pi pick up more of the function than at j = 1.
"""

from sdspace.jones import SDConfig, TestFunctionFamily, functional, lq_norm, sd_norm, sin_family

cfg = SDConfig()
fam = TestFunctionFamily(1)
base = sd_norm(sin_family(1), cfg)
print(" j     L2 norm      SD2 norm    ratio to j=1   max_k<=10 |F_k|")
for t in range(7):
    j = 2 ** t
    f = sin_family(j)
    top = max(abs(functional(fam, k, f)) for k in range(1, 11))
    print(f"{j:3d}  {lq_norm(f, 2.0):.8f}  {sd_norm(f, cfg):.8f}   {sd_norm(f, cfg) / base:.4f}"
          f"        {top:.5f}")
