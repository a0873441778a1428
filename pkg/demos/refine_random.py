"""Watch the certified bit count grow on a random complex matrix.

A double-precision SVD of a 12 x 12 Gaussian matrix is certified, then
refined three times for several orders p. With the precision schedule
``64 (p+1)^i`` the certified bits ``e_i`` are multiplied by roughly
``p + 1`` at every iteration, while no step factorizes or inverts a
matrix.

Run with ``python3 demos/refine_random.py``.
"""

import gmpy2

from svdrefine.bench.generators import gen_random
from svdrefine.bench.jacobi import init_svd
from svdrefine.mpcore import counting
from svdrefine.refiner import PrecisionSchedule, certify, refine

M = gen_random(12, 12, bits=53, seed=5)
start = init_svd(M, 53).round(64)

for p in (1, 2, 3, 4):
    cert = certify(start, M, p)
    print("p=%d  start certified: %s  (epsilon %.2e, u0 %g)"
          % (p, cert.passed, float(cert.epsilon), float(cert.u0)))
    with counting() as ops:
        trace = refine(M, start, p, PrecisionSchedule(64, p), iterations=3)
    growth = [b / a for a, b in zip(trace.e_indices, trace.e_indices[1:])]
    print("      e_i = %s   growth %s" % (trace.e_indices, ["%.2f" % g for g in growth]))
    print("      %d matrix products, %d factorizations" % (ops.matrix_mults, ops.factorizations))

# the last trace holds a triplet accurate to thousands of bits
final = trace.triplet
with gmpy2.context(precision=final.precision):
    print("largest singular value to 60 digits:", format(final.singular_values().values[0], ".60g"))
