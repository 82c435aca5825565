"""Guaranteed a posteriori error bounds for parabolic obstacle problems (n = 1).

The package computes fully computable upper bounds (functional majorants) for
the distance between an admissible approximation and the exact solution of an
obstacle-constrained heat equation, without using the exact solution itself.
See README.md for the API tour and the CLI.
"""

from .fields import (BreakCurve, FieldError, FluxField, IntervalDomain,
                     MissingDerivativeError, NodalField, NodalFlux,
                     RegionDecomposition, SpaceTimeBox, SpaceTimeField,
                     SpatialField, SpatialFlux, constant_spatial,
                     friedrichs_constant, positive_part)
from .quadrature import (Integrand2D, QuadratureConfig, QuadratureError,
                         integrate_box, integrate_interval, l2_norm_interval,
                         l2_norm_qt, l2_norm_space_at, time_average)
from .problem import (ANALYTIC_CLASSIFIER, SOLVER_CLASSIFIER,
                      CoincidenceClassifier, ObstacleViolationError, ProblemData)
from .majorant import (GUARANTEE_SLACK, ErrorMeasure, GuaranteeViolationWarning,
                       HypercircleReport, MajorantBreakdown, combined_error_norm,
                       efficiency_index, hypercircle_check, majorant,
                       residual_Ff, residual_Rf, specialized_bounds)
from .coarsening import (CoarseningPair, MissingCoarseSolutionError,
                         coarsening_bound_coarse, coarsening_bound_sharp)
from .incremental import (FluxSequence, IncrementalApprox, IncrementalMajorant,
                          IntervalResiduals, TimePartition,
                          advanced_incremental_majorant, affine_source,
                          affine_square_slab_integral, average_gradients,
                          averaged_source, d1, d2, flux_field_from_sequence,
                          interpolate_in_time, interval_residuals,
                          midpoint_flux, simple_incremental_majorant)
from .signorini import (ContactBoundary, InadmissibleFluxError,
                        SignoriniBreakdown, ThinObstacleData, boundary_term,
                        signorini_admissible_flux, signorini_error_measure,
                        signorini_majorant)
from .solver import (SolverConfig, SolverError, SpatialGrid,
                     implicit_euler_step, solve_sequence)

__version__ = "0.1.0"
