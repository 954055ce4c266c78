"""Controller-taskload analytics for stochastic 4-D flow corridors.

Quantifies the rate of corrective controller interventions needed to
keep aircraft inside RNP tolerance bounds: a Johnson S_U generator for
flight technical error, an exact mean-reverting deviation engine with
calibration, first-passage and renewal analytics, Poisson flow
composition for lanes/multilanes/crossings, and a reproducible Monte
Carlo harness that cross-validates the analytic layer.
"""

from .calibration import (CalibrationReport, DegenerateDataError, TimeSeries,
                          fit_least_squares, fit_mle, sample_moments)
from .config import ConfigError, ConfigFile, default_config, load_config
from .distributions import (AXES, JOHNSON_FTE, JohnsonSuParams, MomentSet,
                            exponential_sample, johnson_cdf, johnson_density,
                            johnson_inverse, johnson_moments, johnson_sample,
                            johnson_transform, poisson_sample)
from .flow import (TOLERANCE_STANDARDS, CrossingGeometry, FlowSpec,
                   ToleranceBounds, ToleranceStandard, conflict_interventions_pmf,
                   conflict_pmf, crossing_pmf, min_corner_separation,
                   multilane_pmf, poisson_occupancy, single_lane_pmf,
                   solve_safe_zone)
from .harness import (EmpiricalPmf, McEstimate, ScenarioConfig, compare,
                      compare_empirical, run_crossing, run_multilane,
                      run_single_lane)
from .hitting import (DensityGrid, autoconvolve_density,
                      closed_form_divergence_report, convolve_density,
                      fpt_density_closed_form, fpt_density_oracle,
                      intervention_pmf)
from .ou import (OU_FTE_CENTERED, OU_FTE_FIT, AxisState, Barrier,
                 FirstPassageResult, OuParams, first_passage_mc,
                 intervention_count_mc, ou_path, ou_step, pmf_from_counts,
                 transition_coeffs)
from .pipeline import (analytic_crossing, analytic_multilane,
                       analytic_single_lane, per_aircraft_pmf)
from .pmf import (TaskloadPmf, autoconvolve_pmf, convolve_pmf, delta_pmf,
                  tv_distance, wilson_interval)
from .rng import RandomSource

__version__ = "0.1.0"
