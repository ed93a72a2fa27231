"""Chordal SLE simulation and numerical verification of its fractal
exponents: discretized Loewner evolution, disk-hitting statistics, the
angular survival diffusion, and box-counting dimension estimates."""

from .diffusion import (AlphaPath, SpectralResult, SurvivalEstimate,
                        eigenfunction_residual, leading_eigenvalue,
                        martingale_expectation, simulate_alpha, survival_curve,
                        survival_exponent)
from .estimators import (HittingEstimate, angle_profile, composition_pairs,
                         fit_power_law, harmonic_measure_pos_axis,
                         hitting_probability_mc, min_side_measure,
                         occupation_density, partition_sum, partition_sum_dp,
                         phi1, two_point_mc)
from .fitting import PowerLawFit
from .fractal import (BoxCountTable, box_count, box_count_table,
                      dimension_fit, standard_grid, swallow_fraction)
from .loewner import (DrivingPath, TracePath, TrackedPoint,
                      compute_trace, conformal_distance_bounds,
                      sample_driving, slit_map_forward, trace_distance,
                      track_point)

__version__ = "0.1.0"
