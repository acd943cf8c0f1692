"""An integrand that is HK integrable on [0, 1] but not Lebesgue integrable.

f(x) = 2x sin(x^-2) - (2/x) cos(x^-2) is the derivative of x^2 sin(x^-2),
so its HK integral is sin(1).  The integral of |f| grows without bound as
the neighbourhood of 0 shrinks.  The Vitali variation of the primitive
diverges too, yet the SD^2 norm of f is finite and small.
"""

import math

import numpy as np

from sdspace.catalog import get
from sdspace.gauge import absolute_integrability_probe, hk_integrate
from sdspace.jones import SDConfig, sd_norm_result
from sdspace.variation import hk_anti_certificate, hk_in_sd_check, vitali_variation
from sdspace.functions import TameFunction

f = get("hk_osc")
fn = lambda t: f.raw(np.asarray(t, dtype=float).reshape(-1, 1))  # noqa: E731

r = hk_integrate(fn, 0.0, 1.0, [0.0], 1e-6)
print(f"HK integral      {r.value:.10f} +- {r.error_estimate:.1e}   (sin 1 = {math.sin(1):.10f})")

pr = absolute_integrability_probe(fn, 0.0, 1.0, [0.0])
print("int |f| partial sums:", " ".join(f"{s:.2f}" for s in pr.partial_sums))

anti = TameFunction.from_text("hk_anti(x1)", 1, [(0, 1)], singular=[(1, 0.0)])
v = vitali_variation(anti)
print("variation of x^2 sin(x^-2):", " ".join(f"{s:.2f}" for s in v.partial_sums),
      "-> divergent" if v.divergent else "")
print("closed-form lower bound at eps = 2^-8:", f"{hk_anti_certificate(2.0 ** -8):.3f}")

nr = sd_norm_result(f, SDConfig())
print(f"||f||_SD2 (K=30) {nr.value:.10f}")
e = hk_in_sd_check(f)
print(f"SD2^2 = {e.lhs:.5f} <= A^2 V^2 = {e.rhs['bound']:.5f}")
