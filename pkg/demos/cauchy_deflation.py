"""Deflate a Cauchy matrix whose trailing singular values are lost in rounding.

The singular values of ``1/(i+j)`` decay geometrically, so a double
precision SVD only resolves the leading ones. Deflation keeps the indices
whose separation is compatible with the accuracy of the start and drops
the rest; the kept triplets can then be refined to high precision.

Run with ``python3 demos/cauchy_deflation.py``.
"""

from svdrefine.bench.generators import gen_cauchy
from svdrefine.bench.jacobi import init_svd
from svdrefine.refiner import KAPPA_AUTO, PrecisionSchedule, refine
from svdrefine.spectra import deflate

n = 40
M = gen_cauchy(n, bits=1024)
start = init_svd(M.round(53), 53).round(64)
print("double precision singular values (first 12):")
print("  ", ["%.3e" % float(v) for v in start.singular_values().values[:12]])

for p in (1, 3):
    result = deflate(start, M, p)
    print("p=%d: deflation quantity e = %.3e keeps q = %d of %d: %s"
          % (p, float(result.e), result.q, n, [k + 1 for k in result.indices]))

# Refine the thin triplet from the third-order deflation. The real input
# lets the certificate drop the 1/sigma terms, which would otherwise be
# dominated by the smallest kept value.
trace = refine(M, result.triplet, 3, PrecisionSchedule(64, 3), iterations=2,
               kappa_form=KAPPA_AUTO)
print("refined thin triplet, certified bits per iteration:", trace.e_indices)
