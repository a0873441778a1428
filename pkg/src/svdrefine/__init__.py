"""Inversion-free high-order refinement of singular value decompositions.

The public surface is re-exported here; see the submodules for details.
"""

from .coupler import (BoundsReport, CouplingSolution, check_bounds, coupling_residual,
                      solve_cluster, solve_regular)
from .errors import (CertificationError, ConvergenceError, DeflationError,
                     DegenerateSpectrumError, DivergenceError, PartitionError,
                     RefinementError, SeriesDivergenceError, ShapeError)
from .mpcore import (DiagonalMatrix, MpMatrix, OpCounter, big_k, counting, kappa,
                     kappa_cluster, max_sum_norm, paper_norm, residual_E, residual_e,
                     svd_residual)
from .refiner import (Certificate, PrecisionSchedule, RefinementTrace, SecondOrderReport,
                      StepReport, certify, ds_revisited_step, ds_step, hp_step,
                      order_constants, refine)
from .series import (C_SERIES, S_SERIES, TruncatedSeries, c_coefficients, cp_coefficients,
                     eval_poly, s_coefficients, sp_coefficients)
from .spectra import ClusterPartition, DeflationResult, deflate, deflation_quantity, partition
from .stiefel import PolarResult, polar_project, polar_step
from .triplet import SvdTriplet

__version__ = "0.1.0"
