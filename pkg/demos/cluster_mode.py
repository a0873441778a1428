"""Refine a matrix with repeated singular values in cluster mode.

The prescribed family has every large singular value repeated three
times. The regular coupler cannot separate equal values, so the
spectrum is grouped into clusters and each cluster keeps a small dense
Hermitian block in the middle factor. Entries between clusters stay
exactly zero while the residual shrinks.

Run with ``python3 demos/cluster_mode.py``.
"""

import gmpy2

from svdrefine.bench.generators import gen_prescribed
from svdrefine.bench.jacobi import init_svd
from svdrefine.errors import DegenerateSpectrumError
from svdrefine.mpcore import max_sum_norm, precision_context, svd_residual
from svdrefine.refiner import PrecisionSchedule, refine
from svdrefine.spectra import partition
from svdrefine.triplet import SvdTriplet

M, spectrum = gen_prescribed(3, bits=4096, seed=11)
start = init_svd(M.round(53), 53).round(64)
print("exact spectrum:", [str(float(v)) for v in spectrum.values])

try:
    refine(M, start, 3)
except DegenerateSpectrumError as exc:
    # the double-precision start has coinciding values inside each triple
    print("regular mode refuses:", exc)

groups = partition(start.singular_values(), 0.2)
print("clusters:", groups.multiplicities)
clustered = SvdTriplet(start.U, start.V, start.sigma, groups.multiplicities)
trace = refine(M, clustered, 3, PrecisionSchedule(64, 3), iterations=3, keep_triplets=True)

for T in trace.triplets:
    residual = max_sum_norm(svd_residual(M, T.U, T.V, T.sigma))
    with precision_context(T.precision):
        print("bits %5d  log2 residual %8.1f" % (T.precision, float(gmpy2.log2(residual))))

labels = groups.labels()
final = trace.triplet
off_block = [final.sigma.data[i, j] for i in range(len(labels)) for j in range(len(labels))
             if labels[i] != labels[j]]
print("entries between clusters all zero:", all(z == 0 for z in off_block))
